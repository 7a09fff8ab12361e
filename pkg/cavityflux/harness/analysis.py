# cavityflux/harness/analysis.py
"""Error metrics, representation sweeps, drive asymmetry and timing comparisons."""

import logging
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Dict, List, Optional, Sequence

import numpy as np

from ..basis.blocks import BasisMatrix, build_basis_matrix, fit_coefficients
from ..basis.terms import TermIndexMap
from ..errors import ConfigurationError, DimensionError, DomainError
from ..geometry.mesh import CavityModel, Region

if TYPE_CHECKING:
    from ..solvers.report import SolverReport

logger = logging.getLogger(__name__)

SIGNIFICANCE = 1e-3


def rmse(flux: np.ndarray, reference: np.ndarray) -> float:
    """
    Relative root-mean-square error sqrt(mean((B - B_ref)^2)) / rms(B_ref).

    Raises:
        DimensionError: If the vectors differ in length
        DomainError: If the reference is identically zero
    """
    flux = np.asarray(flux, dtype=float)
    reference = np.asarray(reference, dtype=float)
    if flux.shape != reference.shape:
        raise DimensionError(f"cannot compare {flux.shape} with {reference.shape}")
    scale = float(np.sqrt(np.mean(reference ** 2))) if reference.size else 0.0
    if scale == 0.0:
        raise DomainError("reference flux has zero norm")
    return float(np.sqrt(np.mean((flux - reference) ** 2))) / scale


def capsule_rmse(flux: np.ndarray, reference: np.ndarray, model: CavityModel) -> float:
    """Relative RMSE restricted to the capsule elements."""
    rng = model.region_ranges[Region.CAPSULE]
    return rmse(np.asarray(flux)[rng.start:rng.stop], np.asarray(reference)[rng.start:rng.stop])


def representation_error(values: np.ndarray, fitted: np.ndarray, areas: np.ndarray) -> float:
    """Area-weighted RMS of the fit residual over the area-weighted RMS of the values."""
    denom = float(np.sum(areas * values ** 2))
    if denom == 0.0:
        raise DomainError("cannot measure representation error of zero flux")
    return float(np.sqrt(np.sum(areas * (values - fitted) ** 2) / denom))


def significant_count(coefficients: np.ndarray, threshold: float = SIGNIFICANCE) -> int:
    """Number of coefficients with |c_n| / |c_0| above ``threshold``."""
    coefficients = np.asarray(coefficients, dtype=float)
    lead = abs(float(coefficients[0])) if coefficients.size else 0.0
    if lead == 0.0:
        raise DomainError("constant coefficient is zero")
    return int(np.sum(np.abs(coefficients) / lead > threshold))


@dataclass
class RegionFit:
    """Projection of one region's flux onto its basis."""
    region: Region
    basis: BasisMatrix
    coefficients: np.ndarray
    error: float

    @property
    def terms(self) -> TermIndexMap:
        return self.basis.terms


def fit_region(model: CavityModel, flux: np.ndarray, region: Region, count: int) -> RegionFit:
    """Area-weighted least-squares fit of the region's flux with ``count`` terms."""
    mesh = model.regions[region]
    rng = model.region_ranges[region]
    values = np.asarray(flux, dtype=float)[rng.start:rng.stop]
    hole_ratio = model.geometry.hole_ratio if model.geometry is not None else None
    basis = build_basis_matrix(mesh, count, hole_ratio)
    coef = fit_coefficients(values, basis.matrix, mesh.areas)
    return RegionFit(region=region, basis=basis, coefficients=coef,
                     error=representation_error(values, basis.matrix @ coef, mesh.areas))


@dataclass
class SweepCurves:
    """Per-region representation-error curves and the coefficient analysis at full size."""
    term_counts: Dict[Region, List[int]] = field(default_factory=dict)
    term_errors: Dict[Region, List[float]] = field(default_factory=dict)
    ranking: Dict[Region, np.ndarray] = field(default_factory=dict)
    sparsity_levels: Dict[Region, List[int]] = field(default_factory=dict)
    sparsity_errors: Dict[Region, List[float]] = field(default_factory=dict)
    significant: Dict[Region, int] = field(default_factory=dict)

    def rows(self) -> List[Dict[str, object]]:
        """Flat records for CSV export, one per curve point."""
        out: List[Dict[str, object]] = []
        for region, counts in self.term_counts.items():
            out.extend({"curve": "terms", "region": region.label, "x": n, "error": e}
                       for n, e in zip(counts, self.term_errors[region]))
        for region, levels in self.sparsity_levels.items():
            out.extend({"curve": "sparsity", "region": region.label, "x": s, "error": e}
                       for s, e in zip(levels, self.sparsity_errors[region]))
        return out

    def ranking_rows(self) -> List[Dict[str, object]]:
        return [{"region": region.label, "rank": rank, "magnitude": float(value)}
                for region, values in self.ranking.items() for rank, value in enumerate(values)]


def sparsity_sweep(model: CavityModel, reference: np.ndarray,
                   grid: Dict[Region, Sequence[int]],
                   levels: Optional[Dict[Region, Sequence[int]]] = None) -> SweepCurves:
    """
    Representation error against the number of terms, and against the number of kept
    coefficients at the largest term count of the grid.

    Args:
        model: Cavity model the reference flux lives on
        reference: Reference flux (all N elements)
        grid: Term counts per region
        levels: Sparsity levels per region (defaults to 1..L in roughly 20 steps)

    Returns:
        SweepCurves with the coefficient ranking |c_n| / |c_0| and the number of
        coefficients above 1e-3 at the largest term count
    """
    reference = np.asarray(reference, dtype=float)
    if reference.shape != (model.size,):
        raise DimensionError(f"reference has {reference.shape}, model has {model.size} elements")
    curves = SweepCurves()
    for region, counts in grid.items():
        counts = sorted(int(c) for c in counts)
        if not counts:
            continue
        errors = [fit_region(model, reference, region, n).error for n in counts]
        curves.term_counts[region] = counts
        curves.term_errors[region] = errors
        full = fit_region(model, reference, region, counts[-1])
        magnitudes = np.abs(full.coefficients)
        lead = magnitudes[0] if magnitudes[0] > 0 else 1.0
        curves.ranking[region] = np.sort(magnitudes / lead)[::-1]
        curves.significant[region] = significant_count(full.coefficients)
        chosen = (levels or {}).get(region)
        if chosen is None:
            step = max(counts[-1] // 20, 1)
            chosen = list(range(1, counts[-1] + 1, step))
        mesh = model.regions[region]
        rng = model.region_ranges[region]
        values = reference[rng.start:rng.stop]
        order = np.argsort(-magnitudes, kind="stable")
        errors_s = []
        for s in chosen:
            kept = np.zeros_like(full.coefficients)
            keep = order[:int(s)]
            kept[keep] = full.coefficients[keep]
            errors_s.append(representation_error(values, full.basis.matrix @ kept, mesh.areas))
        curves.sparsity_levels[region] = [int(s) for s in chosen]
        curves.sparsity_errors[region] = errors_s
        logger.info("Sweep %s: error %.3e at L=%d, %d significant coefficients",
                    region.label, errors[-1], counts[-1], curves.significant[region])
    return curves


@dataclass
class AsymmetryMetrics:
    """Relative mode amplitudes of the capsule flux."""
    terms: TermIndexMap
    amplitudes: np.ndarray
    cumulative_energy: np.ndarray
    degree_energy: Dict[int, float]

    @property
    def max_asymmetry(self) -> float:
        return float(np.max(self.amplitudes[1:])) if self.amplitudes.size > 1 else 0.0

    def leading_energy(self, count: int) -> float:
        """Energy fraction carried by the first ``count`` modes."""
        if count <= 0:
            return 0.0
        return float(self.cumulative_energy[min(count, self.cumulative_energy.size) - 1])

    def rows(self) -> List[Dict[str, object]]:
        return [{"term": n, "m": m, "k": k, "amplitude": float(a),
                 "cumulative_energy": float(e)}
                for n, ((m, k), a, e) in enumerate(zip(self.terms, self.amplitudes,
                                                       self.cumulative_energy))]


def asymmetry_metrics(coefficients: np.ndarray, terms: TermIndexMap) -> AsymmetryMetrics:
    """
    Mode amplitudes a_n = |c_n| / |c_0| and cumulative energy c_n^2 / sum c^2.

    Both are taken on the raw coefficients. Spherical-harmonic terms with k != 0 carry half the
    squared norm of the zonal ones (see ``normalized_legendre``), so their amplitudes read
    sqrt(2) higher, and their energy shares twice as high, as an orthonormal basis would give.

    Raises:
        DomainError: If the constant coefficient is zero (no mean flux)
    """
    coefficients = np.asarray(coefficients, dtype=float)
    if coefficients.shape != (len(terms),):
        raise DimensionError(f"{coefficients.size} coefficients for {len(terms)} terms")
    lead = abs(float(coefficients[0]))
    if lead == 0.0 or not np.isfinite(lead):
        raise DomainError("asymmetry needs a non-zero mean flux")
    amplitudes = np.abs(coefficients) / lead
    energy = coefficients ** 2
    total = float(energy.sum())
    cumulative = np.cumsum(energy) / total
    by_degree: Dict[int, float] = {}
    for n in range(len(terms)):
        degree = terms.degree(n)
        by_degree[degree] = by_degree.get(degree, 0.0) + float(energy[n]) / total
    return AsymmetryMetrics(terms=terms, amplitudes=amplitudes, cumulative_energy=cumulative,
                            degree_energy=by_degree)


def capsule_asymmetry(model: CavityModel, flux: np.ndarray, count: int) -> AsymmetryMetrics:
    """Fit the capsule flux with ``count`` spherical harmonics and measure its asymmetry."""
    fit = fit_region(model, flux, Region.CAPSULE, count)
    return asymmetry_metrics(fit.coefficients, fit.terms)


def _median(reports: Sequence["SolverReport"], attribute: str) -> float:
    return float(np.median([getattr(r, attribute) for r in reports]))


def summarize_reports(reports: Sequence["SolverReport"]) -> List[Dict[str, object]]:
    """Median iterations, error and timings per (model, solver) over successful seeds."""
    groups: Dict[tuple, List["SolverReport"]] = {}
    failures: Dict[tuple, int] = {}
    for report in reports:
        key = (report.model, report.solver)
        if report.status != "ok":
            failures[key] = failures.get(key, 0) + 1
            continue
        groups.setdefault(key, []).append(report)
    rows: List[Dict[str, object]] = []
    for key in sorted(set(groups) | set(failures)):
        runs = groups.get(key, [])
        row: Dict[str, object] = {"model": key[0], "solver": key[1], "runs": len(runs),
                                  "failures": failures.get(key, 0)}
        if runs:
            errors = [r.rmse for r in runs if r.rmse is not None]
            row.update({
                "outer_iterations": _median(runs, "outer_iterations"),
                "inner_iterations": _median(runs, "total_inner"),
                "rmse": float(np.median(errors)) if errors else None,
                "t_iteration": _median(runs, "t_iteration"),
                "t_total": _median(runs, "t_total"),
            })
        rows.append(row)
    return rows


def speedup_table(reports: Sequence["SolverReport"], baseline: str = "pcg",
                  accelerated: str = "cgstp") -> List[Dict[str, object]]:
    """
    Per-model ratio of median total times (baseline over accelerated) and the iteration-time
    differences of IHT and CGIHT against the accelerated solver.

    Raises:
        ConfigurationError: If a model lacks a successful baseline or accelerated run
    """
    by_model: Dict[str, Dict[str, List["SolverReport"]]] = {}
    for report in reports:
        if report.status == "ok":
            by_model.setdefault(report.model, {}).setdefault(report.solver, []).append(report)
    rows: List[Dict[str, object]] = []
    for model, solvers in sorted(by_model.items(), key=lambda item: _model_size(item[1])):
        if baseline not in solvers or accelerated not in solvers:
            raise ConfigurationError(
                f"model {model!r} needs successful {baseline} and {accelerated} runs")
        base_time = _median(solvers[baseline], "t_total")
        fast_time = _median(solvers[accelerated], "t_total")
        fast_iter = _median(solvers[accelerated], "t_iteration")
        row: Dict[str, object] = {
            "model": model,
            "n": solvers[accelerated][0].n,
            "baseline_time": base_time,
            "accelerated_time": fast_time,
            "ratio": base_time / fast_time if fast_time > 0 else float("inf"),
        }
        for other in ("iht", "cgiht"):
            if other in solvers:
                row[f"delta_{other}"] = _median(solvers[other], "t_iteration") - fast_iter
        rows.append(row)
    return rows


def _model_size(solvers: Dict[str, List["SolverReport"]]) -> int:
    return max(r.n for runs in solvers.values() for r in runs)
