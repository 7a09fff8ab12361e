# cavityflux/errors.py
"""Exception hierarchy shared by every cavityflux module."""

from typing import Iterable, Optional, Sequence


class CavityFluxError(Exception):
    """Base class for all package errors."""


class ConfigurationError(CavityFluxError, ValueError):
    """Invalid geometry, resolution, or settings value."""


class DegenerateGeometryError(CavityFluxError):
    """Coincident centroids or points inside an occluder."""


class DimensionError(CavityFluxError, ValueError):
    """Operands with mismatched shapes."""


class CapacityError(CavityFluxError, MemoryError):
    """A dense assembly would not fit in the configured memory budget."""

    def __init__(self, n: int, required_bytes: int, limit_bytes: Optional[int] = None):
        self.n = n
        self.required_bytes = required_bytes
        self.limit_bytes = limit_bytes
        limit = f" (limit {limit_bytes / 2**30:.1f} GiB)" if limit_bytes else ""
        super().__init__(
            f"dense {n}x{n} matrix needs {required_bytes / 2**30:.1f} GiB{limit}"
        )


class DomainError(CavityFluxError, ValueError):
    """A fractional power would be taken of a non-positive flux."""


class IterateDomainError(DomainError):
    """A coefficient iterate maps to non-positive flux on an evaluated row."""

    def __init__(self, message: str, rows: Optional[Sequence[int]] = None):
        self.rows = list(rows) if rows is not None else []
        super().__init__(message)


class RankDeficiencyError(CavityFluxError):
    """A basis block or least-squares system lost column rank."""

    def __init__(self, message: str, columns: Iterable[int]):
        self.columns = sorted(int(c) for c in columns)
        super().__init__(f"{message}: deficient columns {self.columns[:20]}"
                         + ("..." if len(self.columns) > 20 else ""))


class ConvergenceError(CavityFluxError):
    """An iterative method exhausted its iteration budget."""

    def __init__(self, message: str, iterations: int, residual: float):
        self.iterations = iterations
        self.residual = residual
        super().__init__(f"{message} after {iterations} iterations (residual {residual:.3e})")


class SolverDivergenceError(ConvergenceError):
    """Residual grew far beyond the best value seen."""


class StagnationError(ConvergenceError):
    """An inner Krylov solve stopped making progress."""
