# cavityflux/solvers/greedy.py
"""Gradient-type hard thresholding: IHT, normalized IHT and conjugate-gradient IHT."""

import logging
from typing import List, Optional, Union

import numpy as np
import scipy.linalg

from ..errors import SolverDivergenceError
from .base import GreedyResult, GreedySolver, initial_support, register, relative_residual
from .thresholding import SparsityPattern

logger = logging.getLogger(__name__)

Sparsity = Union[int, SparsityPattern]

DIVERGENCE_FACTOR = 10.0
SPECTRAL_MARGIN = 1.05
# NIHT: shrink the step while mu exceeds (1 - c) * ||dc||^2 / ||A dc||^2
NIHT_SHRINK = 0.01
# ||g_T||^2 below this fraction of ||g||^2 counts as stationary on T
STATIONARY_RATIO = 1e-24


def as_pattern(sparsity: Sparsity, size: int) -> SparsityPattern:
    if isinstance(sparsity, SparsityPattern):
        return SparsityPattern.coerce(sparsity, size)
    return SparsityPattern.uniform(size, int(sparsity))


def zero_result(size: int) -> GreedyResult:
    return GreedyResult(coefficients=np.zeros(size), support=np.zeros(0, dtype=np.int64),
                        residuals=[0.0], converged=True, stop_reason="zero measurements")


class _Tracker:
    """Residual history with the divergence detector shared by the gradient-type solvers."""

    def __init__(self, name: str, first: float):
        self.name = name
        self.history: List[float] = [first]
        self.best = first

    def push(self, value: float) -> None:
        self.history.append(value)
        if value > DIVERGENCE_FACTOR * self.best:
            raise SolverDivergenceError(f"{self.name} diverged", len(self.history) - 1, value)
        self.best = min(self.best, value)


def iht(A: np.ndarray, y: np.ndarray, sparsity: Sparsity,  # pylint: disable=invalid-name
        mu: float = 1.0, max_iter: int = 5000, tol: float = 1e-8,
        x0: Optional[np.ndarray] = None) -> GreedyResult:
    """
    Fixed-step iterative hard thresholding c <- H_K(c + mu A^T (y - A c)).

    A and y are rescaled together by 1 / (1.05 sigma_max) when ||A||_2 >= 1, which leaves the
    solution unchanged.

    Raises:
        SolverDivergenceError: If the residual exceeds ten times the best value seen
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    pattern = as_pattern(sparsity, A.shape[1])
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return zero_result(A.shape[1])
    sigma = float(scipy.linalg.svdvals(A)[0]) if A.size else 0.0
    if sigma >= 1.0:
        scale = 1.0 / (SPECTRAL_MARGIN * sigma)
        A = A * scale
        y = y * scale
        y_norm *= scale
    c = pattern.threshold(x0) if x0 is not None else np.zeros(A.shape[1])
    tracker = _Tracker("IHT", relative_residual(A, y, c, y_norm))
    residual = y - A @ c
    for _ in range(max_iter):
        if tracker.history[-1] < tol:
            break
        c = pattern.threshold(c + mu * (A.T @ residual))
        residual = y - A @ c
        tracker.push(float(np.linalg.norm(residual)) / y_norm)
    converged = tracker.history[-1] < tol
    logger.debug("IHT: %d iterations, residual %.3e", len(tracker.history) - 1,
                 tracker.history[-1])
    return GreedyResult(coefficients=c, support=np.flatnonzero(c), residuals=tracker.history,
                        converged=converged,
                        stop_reason="tolerance" if converged else "max_iter")


def niht(A: np.ndarray, y: np.ndarray, sparsity: Sparsity,  # pylint: disable=invalid-name
         max_iter: int = 5000, tol: float = 1e-8,
         x0: Optional[np.ndarray] = None) -> GreedyResult:
    """
    Normalized IHT: the step is the exact line search along the gradient restricted to the
    current support, halved while a support change fails the descent condition.
    """
    A = np.asarray(A, dtype=float)
    y = np.asarray(y, dtype=float)
    pattern = as_pattern(sparsity, A.shape[1])
    y_norm = float(np.linalg.norm(y))
    if y_norm == 0.0:
        return zero_result(A.shape[1])
    c = pattern.threshold(x0) if x0 is not None else np.zeros(A.shape[1])
    support = initial_support(A, y, pattern, c if x0 is not None else None)
    tracker = _Tracker("NIHT", relative_residual(A, y, c, y_norm))
    residual = y - A @ c
    for _ in range(max_iter):
        if tracker.history[-1] < tol:
            break
        grad = A.T @ residual
        grad_t = np.zeros_like(grad)
        grad_t[support] = grad[support]
        a_grad = A @ grad_t
        denom = float(a_grad @ a_grad)
        mu = float(grad_t @ grad_t) / denom if denom > 0 else 1.0
        trial = pattern.threshold(c + mu * grad)
        new_support = pattern.select(c + mu * grad)
        while not np.array_equal(new_support, support):
            step = trial - c
            a_step = A @ step
            bound = (1.0 - NIHT_SHRINK) * float(step @ step) / max(float(a_step @ a_step), 1e-300)
            if mu <= bound:
                break
            mu *= 0.5
            trial = pattern.threshold(c + mu * grad)
            new_support = pattern.select(c + mu * grad)
        c = trial
        support = new_support
        residual = y - A @ c
        tracker.push(float(np.linalg.norm(residual)) / y_norm)
    converged = tracker.history[-1] < tol
    logger.debug("NIHT: %d iterations, residual %.3e", len(tracker.history) - 1,
                 tracker.history[-1])
    return GreedyResult(coefficients=c, support=np.flatnonzero(c), residuals=tracker.history,
                        converged=converged,
                        stop_reason="tolerance" if converged else "max_iter")


def conjugate_weight(A: np.ndarray, grad: np.ndarray,  # pylint: disable=invalid-name
                     previous: np.ndarray, support: np.ndarray) -> float:
    """-<A g_T, A d_T> / <A d_T, A d_T> with both vectors restricted to the support."""
    g_t = np.zeros_like(grad)
    d_t = np.zeros_like(previous)
    g_t[support] = grad[support]
    d_t[support] = previous[support]
    a_d = A @ d_t
    denom = float(a_d @ a_d)
    if denom == 0.0:
        return 0.0
    return -float((A @ g_t) @ a_d) / denom


def restricted_step(A: np.ndarray, grad: np.ndarray,  # pylint: disable=invalid-name
                    direction: np.ndarray, support: np.ndarray) -> float:
    """
    <g_T, g_T> / <A_T d_T, A_T d_T>.

    After a least-squares solve the gradient vanishes on T and the ratio degenerates to 0/0;
    the exact line search along the full direction is used in that case.
    """
    g_s = grad[support]
    numer = float(g_s @ g_s)
    if numer <= STATIONARY_RATIO * float(grad @ grad):
        a_full = A @ direction
        denom = float(a_full @ a_full)
        return float(grad @ direction) / denom if denom > 0.0 else 0.0
    d_t = np.zeros_like(direction)
    d_t[support] = direction[support]
    a_d = A @ d_t
    denom = float(a_d @ a_d)
    if denom == 0.0:
        return 0.0
    return numer / denom


def cgiht(A: np.ndarray, y: np.ndarray, sparsity: Sparsity,  # pylint: disable=invalid-name
          max_iter: int = 5000, tol: float = 1e-8,
          x0: Optional[np.ndarray] = None) -> GreedyResult:
    """
    Restarted conjugate-gradient IHT.

    The direction restarts to the gradient whenever the support changes; otherwise it is made
    A^T A-conjugate to the previous direction on the current support.
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
    tracker = _Tracker("CGIHT", relative_residual(A, y, c, y_norm))
    for _ in range(max_iter):
        if tracker.history[-1] < tol:
            break
        grad = A.T @ (y - A @ c)
        if previous_support is None or not np.array_equal(support, previous_support):
            weight = 0.0
        else:
            weight = conjugate_weight(A, grad, direction, support)
        direction = grad + weight * direction
        alpha = restricted_step(A, grad, direction, support)
        update = c + alpha * direction
        previous_support = support
        support = pattern.select(update)
        c = pattern.threshold(update)
        tracker.push(relative_residual(A, y, c, y_norm))
    converged = tracker.history[-1] < tol
    logger.debug("CGIHT: %d iterations, residual %.3e", len(tracker.history) - 1,
                 tracker.history[-1])
    return GreedyResult(coefficients=c, support=np.flatnonzero(c), residuals=tracker.history,
                        converged=converged,
                        stop_reason="tolerance" if converged else "max_iter")


@register
class IHTSolver(GreedySolver):
    """Fixed-step IHT."""

    name = "iht"

    def setup(self) -> None:
        self.mu = 1.0

    def solve(self, A, y, pattern, x0=None):
        return iht(A, y, pattern, mu=self.mu, max_iter=self.max_iter, tol=self.tol, x0=x0)


@register
class NIHTSolver(GreedySolver):
    name = "niht"

    def solve(self, A, y, pattern, x0=None):
        return niht(A, y, pattern, max_iter=self.max_iter, tol=self.tol, x0=x0)


@register
class CGIHTSolver(GreedySolver):
    name = "cgiht"

    def solve(self, A, y, pattern, x0=None):
        return cgiht(A, y, pattern, max_iter=self.max_iter, tol=self.tol, x0=x0)
