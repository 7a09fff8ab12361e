# cavityflux/harness/pipeline.py
"""
End-to-end runs: mesh, view factors, basis, sampling and every configured (solver, seed).

Dense baselines run once on the full system; greedy solvers run once per seed, each with its
own sample plan and its own sampled view-factor rows. Failures are recorded per run and the
remaining runs continue.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from ..basis.blocks import BasisSet, build_basis
from ..errors import CavityFluxError
from ..geometry.mesh import CavityGeometry, CavityModel, Region, assemble_cavity
from ..geometry.source import SourceParams
from ..geometry.viewfactor import (
    assemble_view_matrix,
    assemble_view_rows,
    gib_to_bytes,
    source_term,
)
from ..physics.balance import BalanceSystem, MaterialParams
from ..sampling import SamplePlan, build_plan
from ..solvers.base import FluxResult, make_solver
from ..solvers.greedy import IHTSolver
from ..solvers.newton import inexact_newton_pcg, newton_raphson
from ..solvers.nonlinear import nonlinear_cs_solve
from ..solvers.report import SolverReport, report_columns
from ..utils.config import Config, Settings
from ..utils.storage import MatrixCache, write_csv, write_dict_csv, write_json
from .analysis import capsule_rmse, rmse, speedup_table, summarize_reports

logger = logging.getLogger(__name__)

BASELINES = ("nr", "pcg")


def build_model(settings: Settings) -> CavityModel:
    """Mesh and primary source described by the settings."""
    return assemble_cavity(CavityGeometry.from_settings(settings),
                           SourceParams.from_settings(settings))


def material_params(settings: Settings) -> MaterialParams:
    return MaterialParams(**settings.material.model_dump())


def basis_counts(settings: Settings, model: CavityModel) -> Dict[Region, int]:
    """Configured term counts, capped at each region's element count."""
    wanted = {
        Region.CAPSULE: settings.basis.capsule_terms,
        Region.END_TOP: settings.basis.end_face_terms,
        Region.END_BOTTOM: settings.basis.end_face_terms,
        Region.WALL: settings.basis.wall_terms,
    }
    counts = {}
    for region, rng in model.region_ranges.items():
        counts[region] = min(wanted[region], len(rng))
        if counts[region] < wanted[region]:
            logger.warning("%s basis capped at %d terms (region size)", region.label,
                           counts[region])
    return counts


@dataclass
class ModelArtifacts:
    """Everything shared by the runs of one configuration."""
    settings: Settings
    model: CavityModel
    params: MaterialParams
    key: str
    basis: Optional[BasisSet] = None
    view: Optional[np.ndarray] = None
    view_error: Optional[Exception] = None
    reference: Optional[np.ndarray] = None
    reference_error: Optional[Exception] = None
    t_viewfactor: float = 0.0
    t_basis: float = 0.0
    view_cached: bool = False
    baseline_results: Dict[str, Tuple[FluxResult, SolverReport]] = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.settings.model_name or "custom"

    def full_system(self) -> BalanceSystem:
        if self.view is None:
            raise self.view_error or CavityFluxError("full view-factor matrix unavailable")
        source = source_term(self.view, self.model.primary_source)
        return BalanceSystem.full(self.view, source, self.params)


def load_or_assemble_view(model: CavityModel, settings: Settings, key: str,
                          cache_dir: Optional[Union[str, Path]] = None
                          ) -> Tuple[np.ndarray, float, bool]:
    """
    Full view-factor matrix, taken from the cache when the geometry hash matches.

    Returns:
        (matrix, seconds spent, whether it came from the cache)
    """
    cache = MatrixCache(cache_dir if cache_dir is not None else settings.bench.cache_dir)
    started = time.perf_counter()
    cached = cache.load("vf", key)
    if cached is not None and cached.shape == (model.size, model.size):
        return cached, time.perf_counter() - started, True
    view = assemble_view_matrix(model, workers=settings.app.workers,
                                max_bytes=gib_to_bytes(settings.bench.max_matrix_gib))
    elapsed = time.perf_counter() - started
    cache.store("vf", key, view)
    logger.info("View factors: %.2f s", elapsed)
    return view, elapsed, False


def prepare(config: Config, need_full: bool = True,
            cache_dir: Optional[Union[str, Path]] = None) -> ModelArtifacts:
    """Build the model, the basis and (when needed) the full view factors."""
    settings = config.settings
    model = build_model(settings)
    artifacts = ModelArtifacts(settings=settings, model=model, params=material_params(settings),
                               key=config.geometry_hash())
    if any(s not in BASELINES for s in settings.bench.solvers):
        started = time.perf_counter()
        artifacts.basis = build_basis(model, basis_counts(settings, model))
        artifacts.t_basis = time.perf_counter() - started
        logger.info("Basis %d x %d: %.2f s", *artifacts.basis.shape, artifacts.t_basis)
    if need_full:
        try:
            view, elapsed, cached = load_or_assemble_view(model, settings, artifacts.key,
                                                          cache_dir)
            artifacts.view, artifacts.t_viewfactor, artifacts.view_cached = view, elapsed, cached
        except CavityFluxError as error:
            logger.error("Full view-factor matrix unavailable: %s", error)
            artifacts.view_error = error
    return artifacts


def solve_baseline(artifacts: ModelArtifacts, name: str) -> Tuple[FluxResult, SolverReport]:
    """Run NR or PCG on the full system (the reference run is reused, not repeated)."""
    if name in artifacts.baseline_results:
        return artifacts.baseline_results[name]
    solver = artifacts.settings.solver
    system = artifacts.full_system()
    started = time.perf_counter()
    if name == "nr":
        result = newton_raphson(system, tol=solver.newton_tol, max_iter=solver.newton_max_iter)
    else:
        result = inexact_newton_pcg(system, tol=solver.newton_tol, inner_tol=solver.pcg_inner_tol,
                                    max_outer=solver.pcg_max_outer,
                                    max_inner=solver.pcg_max_inner)
    elapsed = time.perf_counter() - started
    report = SolverReport(solver=name, model=artifacts.name, n=system.size, m=system.size,
                          residuals=list(result.residuals),
                          inner_iterations=list(result.inner_iterations), converged=True,
                          clamp_events=system.clamp_events,
                          t_viewfactor=artifacts.t_viewfactor, t_iteration=elapsed)
    if artifacts.reference is not None:
        report.rmse = rmse(result.flux, artifacts.reference)
        report.rmse_capsule = capsule_rmse(result.flux, artifacts.reference, artifacts.model)
    return result, report


def compute_reference(artifacts: ModelArtifacts) -> None:
    """Solve the reference flux with the configured baseline."""
    name = artifacts.settings.bench.reference
    try:
        result, report = solve_baseline(artifacts, name)
    except CavityFluxError as error:
        logger.error("Reference solve (%s) failed: %s", name, error)
        artifacts.reference_error = error
        return
    artifacts.reference = result.flux
    report.rmse = 0.0
    report.rmse_capsule = 0.0
    artifacts.baseline_results[name] = (result, report)


def sample_plan(settings: Settings, model: CavityModel, seed: int) -> SamplePlan:
    samples = settings.sampling.samples
    return build_plan(model, settings.sampling.sparsity,
                      list(samples) if samples is not None else None, seed)


def solve_compressed(artifacts: ModelArtifacts, name: str,
                     seed: int) -> Tuple[np.ndarray, SolverReport]:
    """One greedy run: sample plan, sampled view-factor rows, relinearization loop."""
    settings = artifacts.settings
    if artifacts.basis is None:
        raise CavityFluxError("compressed runs need a basis")
    plan = sample_plan(settings, artifacts.model, seed)
    started = time.perf_counter()
    rows = assemble_view_rows(artifacts.model, plan.indices,
                              max_bytes=gib_to_bytes(settings.bench.max_matrix_gib))
    t_rows = time.perf_counter() - started
    system = BalanceSystem(view=rows, source=source_term(rows, artifacts.model.primary_source),
                           params=artifacts.params, rows=plan.indices)
    solver = settings.solver
    cap = solver.pursuit_max_iter if name in ("sp", "cgstp") else solver.iht_max_iter
    greedy = make_solver(name, max_iter=cap, tol=solver.inner_tol)
    if isinstance(greedy, IHTSolver):
        greedy.mu = solver.iht_step
    coef, report = nonlinear_cs_solve(
        system, artifacts.basis, plan, greedy, settings.sampling.sparsity,
        outer_tol=solver.outer_tol, outer_max=solver.outer_max, inner_tol=solver.inner_tol,
        max_iter=cap, max_damping=solver.max_damping, reference=artifacts.reference,
        model=artifacts.model,
    )
    report.model = artifacts.name
    report.t_viewfactor = t_rows
    report.t_basis = artifacts.t_basis
    return coef, report


@dataclass
class PipelineResult:
    reports: List[SolverReport]
    artifacts: ModelArtifacts
    coefficients: Dict[Tuple[str, int], np.ndarray] = field(default_factory=dict)
    fluxes: Dict[Tuple[str, Optional[int]], np.ndarray] = field(default_factory=dict)

    @property
    def failures(self) -> int:
        return sum(1 for r in self.reports if r.status != "ok")


def run_jobs(config: Config) -> List[Tuple[str, Optional[int]]]:
    """(solver, seed) pairs in output order; baselines carry no seed."""
    settings = config.settings
    seeds = [settings.sampling.seed + i for i in range(settings.bench.seeds)]
    jobs: List[Tuple[str, Optional[int]]] = []
    for name in settings.bench.solvers:
        if name in BASELINES:
            jobs.append((name, None))
        else:
            jobs.extend((name, seed) for seed in seeds)
    return jobs


def run_pipeline(config: Config, out_dir: Optional[Union[str, Path]] = None,
                 cache_dir: Optional[Union[str, Path]] = None) -> PipelineResult:
    """
    Run every configured (solver, seed) pair and write the results.

    Args:
        config: Resolved configuration
        out_dir: Output directory (``bench.out_dir`` by default); nothing is written when the
            directory is an empty string
        cache_dir: View-factor cache directory (``bench.cache_dir`` by default)

    Returns:
        PipelineResult with one report per (solver, seed), failures included
    """
    settings = config.settings
    jobs = run_jobs(config)
    artifacts = prepare(config, need_full=True, cache_dir=cache_dir)
    if artifacts.view is not None:
        compute_reference(artifacts)
    result = PipelineResult(reports=[], artifacts=artifacts)
    if artifacts.reference is not None:
        result.fluxes[(settings.bench.reference, None)] = artifacts.reference

    def run_one(job: Tuple[str, Optional[int]]) -> SolverReport:
        name, seed = job
        try:
            if seed is None:
                flux_result, report = solve_baseline(artifacts, name)
                result.fluxes[(name, None)] = flux_result.flux
            else:
                coef, report = solve_compressed(artifacts, name, seed)
                result.coefficients[(name, seed)] = coef
                if artifacts.basis is not None:
                    result.fluxes[(name, seed)] = artifacts.basis.matvec(coef)
            return report
        except CavityFluxError as error:
            logger.error("Run %s (seed %s) failed: %s", name, seed, error)
            return SolverReport.failure(name, artifacts.name, seed, error)

    with ThreadPoolExecutor(max_workers=settings.app.workers) as pool:
        result.reports = list(pool.map(run_one, jobs))

    target = settings.bench.out_dir if out_dir is None else out_dir
    if target:
        write_outputs(result, Path(target))
    logger.info("Pipeline finished: %d runs, %d failed", len(result.reports), result.failures)
    return result


def write_outputs(result: PipelineResult, out_dir: Path) -> None:
    """Reports, residual logs, summary, flux dumps and plot-ready curves."""
    out_dir.mkdir(parents=True, exist_ok=True)
    reports = result.reports
    write_dict_csv(out_dir / "reports.csv", [r.csv_row() for r in reports], report_columns())
    write_json(out_dir / "reports.json", [r.residual_log() for r in reports])
    write_dict_csv(out_dir / "summary.csv", summarize_reports(reports))
    ok = {r.solver for r in reports if r.status == "ok"}
    if {"pcg", "cgstp"} <= ok:
        write_dict_csv(out_dir / "speedup.csv", speedup_table(reports))

    model = result.artifacts.model
    labels = [Region(int(r)).label for r in model.region_ids]
    for (name, seed), flux in sorted(result.fluxes.items(), key=lambda kv: (kv[0][0],
                                                                           kv[0][1] or -1)):
        suffix = name if seed is None else f"{name}-{seed}"
        write_csv(out_dir / "flux" / f"{suffix}.csv", ["index", "region", "flux"],
                  ([i, labels[i], float(v)] for i, v in enumerate(flux)))

    curves = out_dir / "curves"
    for report in reports:
        if report.status != "ok":
            continue
        suffix = report.solver if report.seed is None else f"{report.solver}-{report.seed}"
        rows = [(i, r, report.error_history[i] if i < len(report.error_history) else "")
                for i, r in enumerate(report.residuals)]
        write_csv(curves / f"error-{suffix}.csv", ["outer_iteration", "residual", "rmse"], rows)
    for (name, seed), coef in sorted(result.coefficients.items()):
        write_csv(curves / f"coefficients-{name}-{seed}.csv", ["term", "magnitude"],
                  ((i, float(abs(v))) for i, v in enumerate(coef)))
    logger.info("Wrote results to %s", out_dir)
