# cavityflux/solvers/newton.py
"""Dense baselines on the element fluxes: Newton-Raphson and PCG-based inexact Newton."""

import logging
from typing import Callable, List, Optional, Tuple

import numpy as np
import scipy.linalg

from ..errors import ConvergenceError, DimensionError, StagnationError
from ..physics.balance import BalanceSystem, flux_jacobian, residual_full, solve_diagonal
from .base import FluxResult

logger = logging.getLogger(__name__)

MIN_STEP = 1.0 / 1024.0
MIN_SELF_WEIGHT = 0.05


def initial_guess(system: BalanceSystem) -> np.ndarray:
    """
    Flux from the diagonal part of the balance.

    Each element solves a_i B + C B^(1/beta) = E_i with a_i = 1 - sum_j V_ij (kept above 0.05),
    so the guess is positive and exact when V = 0.
    """
    if not system.is_full:
        raise DimensionError("the dense baselines need a full system")
    a = np.maximum(1.0 - system.view.sum(axis=1), MIN_SELF_WEIGHT)
    rhs = np.maximum(system.source, system.floor)
    params = system.params
    return solve_diagonal(a, params.C, params.beta, rhs)


def _line_search(flux: np.ndarray, step: np.ndarray, system: BalanceSystem,
                 current: float) -> Tuple[np.ndarray, np.ndarray, float]:
    """Halve the step until the update stays positive and lowers the residual norm."""
    lam = 1.0
    fallback = None
    while lam >= MIN_STEP:
        trial = flux + lam * step
        if np.all(trial > 0):
            res = residual_full(trial, system)
            norm = float(np.linalg.norm(res))
            if norm < current:
                if lam < 1.0:
                    logger.debug("Newton step damped to %.4g", lam)
                return trial, res, norm
            fallback = (trial, res, norm)
        lam *= 0.5
    if fallback is None:
        raise ConvergenceError("no positive damped Newton step", 0, current)
    logger.warning("Line search could not lower the residual; taking the shortest step")
    return fallback


def newton_raphson(system: BalanceSystem, tol: float = 1e-8, max_iter: int = 30,
                   initial: Optional[np.ndarray] = None) -> FluxResult:
    """
    Newton-Raphson with a dense direct solve per step and half-step backtracking.

    Args:
        system: Full balance system
        tol: Stop when ||F(B)|| / ||E|| falls below this value
        max_iter: Newton iteration cap
        initial: Optional positive starting flux (diagonal solve by default)

    Returns:
        FluxResult whose residual history starts at the initial guess

    Raises:
        ConvergenceError: On a singular Newton matrix or when max_iter is exhausted
    """
    scale = float(np.linalg.norm(system.source)) or 1.0
    flux = initial_guess(system) if initial is None else np.asarray(initial, dtype=float).copy()
    res = residual_full(flux, system)
    norm = float(np.linalg.norm(res))
    history = [norm / scale]
    for iteration in range(1, max_iter + 1):
        if history[-1] < tol:
            break
        try:
            step = scipy.linalg.solve(flux_jacobian(flux, system), -res)
        except (scipy.linalg.LinAlgError, ValueError) as error:
            raise ConvergenceError(f"singular Newton matrix ({error})", iteration,
                                   history[-1]) from error
        flux, res, norm = _line_search(flux, step, system, norm)
        history.append(norm / scale)
        logger.debug("NR iteration %d: residual %.3e", iteration, history[-1])
    if history[-1] >= tol:
        raise ConvergenceError("Newton-Raphson did not converge", len(history) - 1, history[-1])
    logger.info("NR converged in %d iterations (residual %.3e)", len(history) - 1, history[-1])
    return FluxResult(flux=flux, residuals=history)


def pcg(matvec: Callable[[np.ndarray], np.ndarray], rhs: np.ndarray,
        precondition: Callable[[np.ndarray], np.ndarray], iter_lim: int, tol: float,
        x0: np.ndarray) -> Tuple[np.ndarray, List[float]]:
    """
    Preconditioned conjugate gradients for a symmetric positive definite operator.

    ``precondition`` applies the inverse preconditioner. The stopping test compares the
    preconditioned residual r^T M^-1 r with tol^2 times its initial value; the residual is
    recomputed from scratch every tenth iteration.

    Returns:
        (solution, history of r^T M^-1 r)
    """
    x = x0.copy()
    r = rhs - matvec(x)
    d = precondition(r)
    delta_old = float(r @ d)
    delta_new = delta_old
    target = max(delta_old * tol * tol, 1e-300)
    history = [delta_new]
    i = 0
    while i < iter_lim and delta_new > target:
        q = matvec(d)
        curvature = float(d @ q)
        if curvature <= 0.0:
            break
        alpha = delta_new / curvature
        x += alpha * d
        if i % 10 == 0:
            r = rhs - matvec(x)
        else:
            r -= alpha * q
        s = precondition(r)
        delta_old = delta_new
        delta_new = float(r @ s)
        d = s + (delta_new / delta_old) * d
        history.append(delta_new)
        i += 1
    return x, history


def inexact_newton_pcg(system: BalanceSystem, tol: float = 1e-8, inner_tol: float = 1e-8,
                       max_outer: int = 60, max_inner: int = 2000,
                       initial: Optional[np.ndarray] = None) -> FluxResult:
    """
    Newton outer loop whose steps come from Jacobi-preconditioned CG on J^T J d = -J^T F.

    The outer iteration count is the one reported for the PCG baseline; the inner CG counts are
    kept per step.

    Raises:
        StagnationError: If CG hits max_inner with less than a twofold residual reduction
        ConvergenceError: If max_outer is exhausted
    """
    scale = float(np.linalg.norm(system.source)) or 1.0
    flux = initial_guess(system) if initial is None else np.asarray(initial, dtype=float).copy()
    res = residual_full(flux, system)
    norm = float(np.linalg.norm(res))
    history = [norm / scale]
    inner: List[int] = []
    for iteration in range(1, max_outer + 1):
        if history[-1] < tol:
            break
        jac = flux_jacobian(flux, system)
        col_sq = np.einsum("ij,ij->j", jac, jac)
        inv_diag = np.where(col_sq > 0.0, 1.0 / np.where(col_sq > 0.0, col_sq, 1.0), 1.0)
        step, trace = pcg(lambda v, jac=jac: jac.T @ (jac @ v), -(jac.T @ res),
                          lambda v, inv=inv_diag: inv * v, max_inner, inner_tol,
                          np.zeros_like(flux))
        steps = len(trace) - 1
        inner.append(steps)
        if steps >= max_inner:
            reduction = np.sqrt(trace[-1] / trace[0]) if trace[0] > 0 else 0.0
            if reduction > 0.5:
                raise StagnationError("PCG stagnated", steps, float(reduction))
            logger.warning("PCG reached %d iterations at reduction %.2e", steps, reduction)
        flux, res, norm = _line_search(flux, step, system, norm)
        history.append(norm / scale)
        logger.debug("PCG outer %d: %d inner, residual %.3e", iteration, steps, history[-1])
    if history[-1] >= tol:
        raise ConvergenceError("inexact Newton did not converge", len(history) - 1, history[-1])
    logger.info("PCG Newton converged in %d outer / %d inner iterations", len(history) - 1,
                sum(inner))
    return FluxResult(flux=flux, residuals=history, inner_iterations=inner)
