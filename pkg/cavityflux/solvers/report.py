# cavityflux/solvers/report.py

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

CSV_COLUMNS = [
    "solver", "model", "seed", "status", "n", "m", "terms", "k",
    "outer_iterations", "inner_iterations", "final_residual", "rmse", "rmse_capsule",
    "clamp_events", "damping_events",
    "t_viewfactor", "t_basis", "t_iteration", "t_total", "message",
]
TIMING_COLUMNS = ("t_viewfactor", "t_basis", "t_iteration", "t_total")


@dataclass
class SolverReport:
    """
    One (solver, seed) run.

    ``residuals`` is the outer history (one entry per relinearization or Newton step plus the
    starting point); ``inner_residuals`` keeps each inner solve's own history.
    """
    solver: str
    model: str = ""
    seed: Optional[int] = None
    status: str = "ok"
    n: int = 0
    m: int = 0
    terms: int = 0
    k: Tuple[int, ...] = ()
    residuals: List[float] = field(default_factory=list)
    inner_iterations: List[int] = field(default_factory=list)
    inner_residuals: List[List[float]] = field(default_factory=list)
    error_history: List[float] = field(default_factory=list)
    rmse: Optional[float] = None
    rmse_capsule: Optional[float] = None
    converged: bool = False
    clamp_events: int = 0
    damping_events: int = 0
    t_viewfactor: float = 0.0
    t_basis: float = 0.0
    t_iteration: float = 0.0
    message: str = ""

    @property
    def outer_iterations(self) -> int:
        return max(len(self.residuals) - 1, 0)

    @property
    def total_inner(self) -> int:
        return sum(self.inner_iterations)

    @property
    def t_total(self) -> float:
        return self.t_viewfactor + self.t_basis + self.t_iteration

    @classmethod
    def failure(cls, solver: str, model: str, seed: Optional[int],
                error: Exception) -> "SolverReport":
        return cls(solver=solver, model=model, seed=seed, status="failed",
                   message=f"{type(error).__name__}: {error}")

    def csv_row(self, include_timing: bool = True) -> Dict[str, Any]:
        row: Dict[str, Any] = {
            "solver": self.solver,
            "model": self.model,
            "seed": "" if self.seed is None else self.seed,
            "status": self.status,
            "n": self.n,
            "m": self.m,
            "terms": self.terms,
            "k": ",".join(str(v) for v in self.k),
            "outer_iterations": self.outer_iterations,
            "inner_iterations": self.total_inner,
            "final_residual": _fmt(self.residuals[-1] if self.residuals else None),
            "rmse": _fmt(self.rmse),
            "rmse_capsule": _fmt(self.rmse_capsule),
            "clamp_events": self.clamp_events,
            "damping_events": self.damping_events,
            "t_viewfactor": _fmt(self.t_viewfactor),
            "t_basis": _fmt(self.t_basis),
            "t_iteration": _fmt(self.t_iteration),
            "t_total": _fmt(self.t_total),
            "message": self.message,
        }
        if not include_timing:
            for name in TIMING_COLUMNS:
                row.pop(name)
        return row

    def residual_log(self) -> Dict[str, Any]:
        """Per-iteration document for the JSON residual log."""
        payload = asdict(self)
        payload["outer_iterations"] = self.outer_iterations
        payload["total_inner"] = self.total_inner
        payload["t_total"] = self.t_total
        return payload


def _fmt(value: Optional[float]) -> str:
    return "" if value is None else f"{value:.6e}"


def report_columns(include_timing: bool = True) -> Sequence[str]:
    if include_timing:
        return CSV_COLUMNS
    return [c for c in CSV_COLUMNS if c not in TIMING_COLUMNS]
