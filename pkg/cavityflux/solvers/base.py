# cavityflux/solvers/base.py

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple, Type

import logging

import numpy as np
import scipy.linalg

from ..errors import ConfigurationError
from .thresholding import SparsityPattern

logger = logging.getLogger(__name__)


@dataclass
class GreedyResult:
    """Outcome of one sparse linear solve."""
    coefficients: np.ndarray
    support: np.ndarray
    residuals: List[float]
    converged: bool
    stop_reason: str
    rank_warnings: int = 0

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1


@dataclass
class FluxResult:
    """Outcome of a dense solve for the element fluxes."""
    flux: np.ndarray
    residuals: List[float]
    inner_iterations: List[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1


def relative_residual(A: np.ndarray, y: np.ndarray, c: np.ndarray,  # pylint: disable=invalid-name
                      y_norm: float) -> float:
    return float(np.linalg.norm(y - A @ c) / y_norm)


def initial_support(A: np.ndarray, y: np.ndarray,  # pylint: disable=invalid-name
                    pattern: SparsityPattern, x0: Optional[np.ndarray]) -> np.ndarray:
    """
    Starting support: the blockwise top entries of c0 + A^T (y - A c0).

    With c0 = 0 this is the usual top-K of A^T y.
    """
    if x0 is None:
        return pattern.select(A.T @ y)
    return pattern.select(x0 + A.T @ (y - A @ x0))


def restricted_least_squares(A: np.ndarray, y: np.ndarray,  # pylint: disable=invalid-name
                             support: np.ndarray) -> Tuple[np.ndarray, bool]:
    """
    argmin ||y - A x|| over vectors supported on ``support``.

    Returns:
        (full-length solution, True when the column set was rank deficient and a small ridge
        term was added)
    """
    x = np.zeros(A.shape[1])
    if support.size == 0:
        return x, False
    sub = A[:, support]
    sol, _, rank, sv = scipy.linalg.lstsq(sub, y, lapack_driver="gelsd")
    if rank < support.size:
        ridge = 1e-10 * float(sv[0] ** 2 if sv.size else 1.0)
        gram = sub.T @ sub + ridge * np.eye(support.size)
        sol = scipy.linalg.solve(gram, sub.T @ y, assume_a="pos")
        logger.warning("Rank-deficient support (%d of %d columns); ridge %.2e applied",
                       rank, support.size, ridge)
        x[support] = sol
        return x, True
    x[support] = sol
    return x, False


class GreedySolver(ABC):
    """Abstract base class for sparse solvers of A c = y with a per-block sparsity budget."""

    name = "base"
    default_max_iter = 5000

    def __init__(self, max_iter: Optional[int] = None, tol: float = 1e-8):
        """
        Initialize the solver.

        Args:
            max_iter: Iteration cap (class default when None)
            tol: Relative residual ||y - A c|| / ||y|| at which to stop
        """
        self.max_iter = max_iter if max_iter is not None else self.default_max_iter
        self.tol = tol
        self.setup()

    def setup(self) -> None:
        """Hook for solver-specific configuration."""

    @abstractmethod
    def solve(self, A: np.ndarray, y: np.ndarray,  # pylint: disable=invalid-name
              pattern: SparsityPattern, x0: Optional[np.ndarray] = None) -> GreedyResult:
        """
        Recover a block-sparse c with A c ~= y.

        Args:
            A: Sensing matrix (M x L)
            y: Measurements (M,)
            pattern: Sparsity level per coefficient block
            x0: Optional warm start

        Returns:
            GreedyResult with the final coefficients and the residual history
        """


GREEDY_SOLVERS: Dict[str, Type[GreedySolver]] = {}


def register(cls: Type[GreedySolver]) -> Type[GreedySolver]:
    GREEDY_SOLVERS[cls.name] = cls
    return cls


def make_solver(name: str, max_iter: Optional[int] = None, tol: float = 1e-8) -> GreedySolver:
    """Instantiate a registered greedy solver by identifier."""
    try:
        cls = GREEDY_SOLVERS[name.lower()]
    except KeyError as error:
        raise ConfigurationError(
            f"unknown greedy solver {name!r}; choose from {sorted(GREEDY_SOLVERS)}") from error
    return cls(max_iter=max_iter, tol=tol)
