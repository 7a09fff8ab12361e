# cavityflux/solvers/nonlinear.py
"""
Compressed solve of the nonlinear balance.

The balance is linearized at the current coefficients, the linear sparse problem on the sampled
rows is solved with a greedy solver, and the process repeats until the coefficients settle.
"""

import logging
import time
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from ..basis.blocks import BasisSet
from ..errors import DimensionError, IterateDomainError
from ..geometry.mesh import CavityModel, Region
from ..harness.analysis import capsule_rmse, rmse
from ..physics.balance import BalanceSystem, linearize, residual_sparse
from ..sampling import SamplePlan
from .base import GreedySolver, make_solver
from .report import SolverReport
from .thresholding import SparsityPattern

logger = logging.getLogger(__name__)


def _sampled_system(system: BalanceSystem, basis: BasisSet, plan: SamplePlan) -> BalanceSystem:
    if basis.n_rows != system.size:
        raise DimensionError(f"basis has {basis.n_rows} rows, system has {system.size} elements")
    if plan.size != system.size:
        raise DimensionError(f"plan covers {plan.size} elements, system has {system.size}")
    sampled = system.restrict(plan.indices)
    sampled.basis = basis
    return sampled


def constant_start(system: BalanceSystem, basis: BasisSet) -> np.ndarray:
    """
    Coefficients whose only nonzero entries are the constant terms.

    Each region's constant is chosen so Psi c equals the mean irradiation over that region's
    sampled rows (the one-bounce estimate B = E); regions without samples use the overall mean.
    """
    coef = np.zeros(basis.n_terms)
    overall = max(float(np.mean(system.source)), system.floor)
    for block in basis.blocks:
        mask = (system.rows >= block.rows.start) & (system.rows < block.rows.stop)
        level = float(np.mean(system.source[mask])) if np.any(mask) else overall
        level = max(level, system.floor)
        constant = float(block.matrix[0, 0])
        coef[block.cols.start] = level / constant
    return coef


def _damped_update(system: BalanceSystem, coef: np.ndarray, proposal: np.ndarray,
                   max_damping: int) -> Tuple[np.ndarray, int]:
    """Halve the coefficient update until Psi c is positive on every evaluated row."""
    delta = proposal - coef
    lam = 1.0
    own = system.psi_rows @ proposal
    for halvings in range(max_damping + 1):
        trial = coef + lam * delta
        own = system.psi_rows @ trial
        if np.all(own > 0):
            if halvings:
                logger.warning("Coefficient update damped %d times (step %.4g)", halvings, lam)
            return trial, halvings
        lam *= 0.5
    bad = np.nonzero(own <= 0)[0]
    raise IterateDomainError(f"update stays infeasible after {max_damping} halvings",
                             system.rows[bad].tolist())


def nonlinear_cs_solve(system: BalanceSystem, basis: BasisSet, plan: SamplePlan,
                       algorithm: Union[str, GreedySolver],
                       ks: Union[Sequence[int], Dict[Region, int]],
                       outer_tol: float = 1e-6, outer_max: int = 50,
                       inner_tol: float = 1e-8, max_iter: Optional[int] = None,
                       max_damping: int = 20, reference: Optional[np.ndarray] = None,
                       model: Optional[CavityModel] = None
                       ) -> Tuple[np.ndarray, SolverReport]:
    """
    Relinearize-and-solve loop on the sampled rows.

    Args:
        system: Balance system evaluating at least the plan's rows (full or sampled)
        basis: Block basis Psi
        plan: Measurement rows
        algorithm: Greedy solver identifier or instance
        ks: Sparsity level per basis block, in block order
        outer_tol: Stop when ||dc|| / ||c|| falls below this value
        outer_max: Relinearization cap
        inner_tol: Relative residual tolerance of each inner solve
        max_iter: Inner iteration cap (solver default when None)
        max_damping: Halvings allowed to keep Psi c positive
        reference: Optional reference flux for the error-vs-iteration history and final RMSE
        model: Cavity model, used for the capsule-only RMSE

    Returns:
        (coefficients, report)

    Raises:
        IterateDomainError: If an update cannot be damped into the positive region
    """
    solver = algorithm if isinstance(algorithm, GreedySolver) else make_solver(
        algorithm, max_iter=max_iter, tol=inner_tol)
    sampled = _sampled_system(system, basis, plan)
    levels = [ks[b.region] for b in basis.blocks] if isinstance(ks, dict) else list(ks)
    pattern = SparsityPattern(basis.column_ranges, levels)
    scale = float(np.linalg.norm(sampled.source)) or 1.0

    report = SolverReport(solver=solver.name, seed=plan.seed, n=system.size, m=plan.total,
                          terms=basis.n_terms, k=tuple(pattern.ks))
    coef = constant_start(sampled, basis)
    report.residuals.append(float(np.linalg.norm(residual_sparse(coef, sampled))) / scale)
    if reference is not None:
        report.error_history.append(rmse(basis.matvec(coef), reference))

    started = time.perf_counter()
    for outer in range(1, outer_max + 1):
        lin = linearize(coef, sampled)
        result = solver.solve(lin.A, lin.y, pattern, x0=coef)
        report.inner_iterations.append(result.iterations)
        report.inner_residuals.append(list(result.residuals))
        updated, halvings = _damped_update(sampled, coef, result.coefficients, max_damping)
        report.damping_events += int(halvings > 0)
        norm = float(np.linalg.norm(updated))
        change = float(np.linalg.norm(updated - coef)) / (norm if norm > 0 else 1.0)
        coef = updated
        report.residuals.append(float(np.linalg.norm(residual_sparse(coef, sampled))) / scale)
        if reference is not None:
            report.error_history.append(rmse(basis.matvec(coef), reference))
        logger.debug("%s outer %d: %d inner, change %.3e, residual %.3e", solver.name, outer,
                     result.iterations, change, report.residuals[-1])
        if change < outer_tol:
            report.converged = True
            break
    report.t_iteration = time.perf_counter() - started
    report.clamp_events = sampled.clamp_events
    if not report.converged:
        logger.warning("%s stopped after %d relinearizations without settling", solver.name,
                       report.outer_iterations)
    if reference is not None:
        flux = basis.matvec(coef)
        report.rmse = report.error_history[-1]
        if model is not None:
            report.rmse_capsule = capsule_rmse(flux, reference, model)
    logger.info("%s: %d outer / %d inner iterations, residual %.3e", solver.name,
                report.outer_iterations, report.total_inner, report.residuals[-1])
    return coef, report
