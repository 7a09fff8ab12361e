# cavityflux/solvers/pursuit.py
"""
Backtracking pursuits: subspace pursuit and conjugate-gradient subspace thresholding pursuit.

Both keep a least-squares estimate on the current support and stop as soon as a candidate
iterate fails to lower the residual; the rejected candidate is discarded, so accepted residuals
never increase.
"""

import logging
from typing import List, Optional

import numpy as np

from .base import (
    GreedyResult,
    GreedySolver,
    initial_support,
    register,
    relative_residual,
    restricted_least_squares,
)
from .greedy import Sparsity, as_pattern, conjugate_weight, restricted_step, zero_result

logger = logging.getLogger(__name__)


def _finish(name: str, c: np.ndarray, support: np.ndarray, history: List[float], tol: float,
            stalled: bool, rank_warnings: int) -> GreedyResult:
    converged = history[-1] < tol
    if converged:
        reason = "tolerance"
    elif stalled:
        reason = "residual stalled"
    else:
        reason = "max_iter"
    logger.debug("%s: %d iterations, residual %.3e (%s)", name, len(history) - 1, history[-1],
                 reason)
    return GreedyResult(coefficients=c, support=support, residuals=history,
                        converged=converged, stop_reason=reason, rank_warnings=rank_warnings)


def subspace_pursuit(A: np.ndarray, y: np.ndarray,  # pylint: disable=invalid-name
                     sparsity: Sparsity, max_iter: int = 200, tol: float = 1e-8,
                     x0: Optional[np.ndarray] = None) -> GreedyResult:
    """
    Subspace pursuit.

    Each iteration merges the current support with the top-K correlations of the residual,
    solves least squares on the union, keeps its top-K entries and re-solves on them.

    Args:
        A: Sensing matrix (M x L)
        y: Measurements
        sparsity: Sparsity level, or a per-block pattern
        max_iter: Iteration cap
        tol: Relative residual at which to stop
        x0: Optional warm start; its thresholded support seeds the first candidate set

    Returns:
        GreedyResult; the first history entry is the residual before the initial solve
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    pattern = as_pattern(sparsity, A.shape[1])
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return zero_result(A.shape[1])
    start = pattern.threshold(x0) if x0 is not None else np.zeros(A.shape[1])
    history = [relative_residual(A, y, start, y_norm)]
    support = initial_support(A, y, pattern, start if x0 is not None else None)
    c, deficient = restricted_least_squares(A, y, support)
    rank_warnings = int(deficient)
    history.append(relative_residual(A, y, c, y_norm))
    stalled = False
    for _ in range(max_iter - 1):
        if history[-1] < tol:
            break
        residual = y - A @ c
        candidates = np.union1d(support, pattern.select(A.T @ residual))
        wide, deficient = restricted_least_squares(A, y, candidates)
        rank_warnings += int(deficient)
        trial_support = pattern.select(wide)
        trial, deficient = restricted_least_squares(A, y, trial_support)
        rank_warnings += int(deficient)
        value = relative_residual(A, y, trial, y_norm)
        if value >= history[-1]:
            stalled = True
            break
        c, support = trial, trial_support
        history.append(value)
    return _finish("SP", c, support, history, tol, stalled, rank_warnings)


def cgstp(A: np.ndarray, y: np.ndarray, sparsity: Sparsity,  # pylint: disable=invalid-name
          max_iter: int = 200, tol: float = 1e-8,
          x0: Optional[np.ndarray] = None) -> GreedyResult:
    """
    Conjugate-gradient subspace thresholding pursuit.

    The gradient, conjugate weight, direction and step follow CGIHT. The candidate support is
    supp(H_K(c + mu d)) joined with the current support; least squares on the candidates is
    truncated to its top-K entries and re-solved there.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    pattern = as_pattern(sparsity, A.shape[1])
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return zero_result(A.shape[1])
    c = pattern.threshold(x0) if x0 is not None else np.zeros(A.shape[1])
    support = initial_support(A, y, pattern, c if x0 is not None else None)
    previous_support: Optional[np.ndarray] = None
    direction = np.zeros(A.shape[1])
    history = [relative_residual(A, y, c, y_norm)]
    rank_warnings = 0
    stalled = False
    for _ in range(max_iter):
        if history[-1] < tol:
            break
        grad = A.T @ (y - A @ c)
        if previous_support is None or not np.array_equal(support, previous_support):
            weight = 0.0
        else:
            weight = conjugate_weight(A, grad, direction, support)
        direction = grad + weight * direction
        mu = restricted_step(A, grad, direction, support)
        candidates = np.union1d(pattern.select(c + mu * direction), support)
        wide, deficient = restricted_least_squares(A, y, candidates)
        rank_warnings += int(deficient)
        trial_support = pattern.select(wide)
        trial, deficient = restricted_least_squares(A, y, trial_support)
        rank_warnings += int(deficient)
        value = relative_residual(A, y, trial, y_norm)
        if value >= history[-1]:
            stalled = True
            break
        previous_support = support
        c, support = trial, trial_support
        history.append(value)
    return _finish("CGSTP", c, support, history, tol, stalled, rank_warnings)


@register
class SPSolver(GreedySolver):
    """Subspace pursuit."""

    name = "sp"
    default_max_iter = 200

    def solve(self, A, y, pattern, x0=None):
        return subspace_pursuit(A, y, pattern, max_iter=self.max_iter, tol=self.tol, x0=x0)


@register
class CGSTPSolver(GreedySolver):
    """Conjugate-gradient subspace thresholding pursuit."""

    name = "cgstp"
    default_max_iter = 200

    def solve(self, A, y, pattern, x0=None):
        return cgstp(A, y, pattern, max_iter=self.max_iter, tol=self.tol, x0=x0)
