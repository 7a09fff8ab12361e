# cavityflux/physics/balance.py
"""
Nonlinear radiation energy balance.

For element fluxes B the balance on the evaluated rows R reads

    f = B_R - V_R B + C B_R^(1/beta) - E_R = 0,      C = upsilon^(-1/beta) t^(-alpha/beta)

where V_R and E_R are the sampled rows of the view-factor matrix and of the primary
irradiation. With B = Psi c the same residual becomes a function of the coefficients c, and its
Jacobian is G + diag((C / beta) (Psi_R c)^(1/beta - 1)) Psi_R with G = Psi_R - V_R Psi.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, field_validator

from ..basis.blocks import BasisSet
from ..errors import DimensionError, DomainError, IterateDomainError

logger = logging.getLogger(__name__)

CLAMP_FRACTION = 1e-12


class MaterialParams(BaseModel):
    """Albedo constants and the fixed time snapshot."""
    model_config = ConfigDict(frozen=True)

    upsilon: float = 4.87
    alpha: float = 8.0 / 13.0
    beta: float = 16.0 / 13.0
    t: float = 1.0

    @field_validator("upsilon", "t")
    @classmethod
    def validate_positive(cls, v: float) -> float:
        """upsilon and t must be strictly positive."""
        if v <= 0:
            raise ValueError("must be strictly positive")
        return v

    @field_validator("beta")
    @classmethod
    def validate_beta(cls, v: float) -> float:
        """beta = 1 is the linear limit; smaller values are unphysical."""
        if v < 1:
            raise ValueError("beta must be at least 1")
        return v

    @property
    def C(self) -> float:  # pylint: disable=invalid-name
        return self.upsilon ** (-1.0 / self.beta) * self.t ** (-self.alpha / self.beta)

    @property
    def exponent(self) -> float:
        """1 / beta."""
        return 1.0 / self.beta


def albedo(flux, params: MaterialParams) -> np.ndarray:
    """
    Wall albedo 1 / (1 + C B^(1/beta - 1)).

    Raises:
        DomainError: If any flux is not strictly positive
    """
    flux = np.asarray(flux, dtype=float)
    if np.any(flux <= 0):
        raise DomainError("albedo needs strictly positive flux")
    return 1.0 / (1.0 + params.C * flux ** (params.exponent - 1.0))


@dataclass
class BalanceSystem:
    """
    View-factor rows, irradiation and constants for the evaluated rows.

    ``view`` has shape (M, N); ``rows`` lists the M element indices it was taken from, so a
    full system has rows = 0..N-1 and a sampled one only its measurement rows.
    """
    view: np.ndarray
    source: np.ndarray
    params: MaterialParams = field(default_factory=MaterialParams)
    rows: Optional[np.ndarray] = None
    basis: Optional[BasisSet] = None
    clamp_events: int = field(default=0, compare=False)

    def __post_init__(self) -> None:
        self.view = np.asarray(self.view, dtype=float)
        self.source = np.asarray(self.source, dtype=float)
        if self.view.ndim != 2:
            raise DimensionError("view-factor rows must form a 2-D array")
        m, n = self.view.shape
        if self.rows is None:
            if m != n:
                raise DimensionError("a full system needs a square view-factor matrix")
            self.rows = np.arange(n)
        self.rows = np.asarray(self.rows, dtype=np.int64)
        if self.rows.shape != (m,) or self.source.shape != (m,):
            raise DimensionError(
                f"rows {self.rows.shape} and source {self.source.shape} must match {m} view rows")
        if self.basis is not None and self.basis.n_rows != n:
            raise DimensionError(f"basis has {self.basis.n_rows} rows, system has {n} elements")
        if not (np.all(np.isfinite(self.view)) and np.all(np.isfinite(self.source))):
            raise DimensionError("view factors and source must be finite")

    @classmethod
    def full(cls, view: np.ndarray, source: np.ndarray, params: Optional[MaterialParams] = None,
             basis: Optional[BasisSet] = None) -> "BalanceSystem":
        return cls(view=view, source=source, params=params or MaterialParams(), basis=basis)

    @property
    def size(self) -> int:
        """Number of elements N."""
        return int(self.view.shape[1])

    @property
    def n_rows(self) -> int:
        return int(self.view.shape[0])

    @property
    def is_full(self) -> bool:
        return self.n_rows == self.size and np.array_equal(self.rows, np.arange(self.size))

    def restrict(self, rows: Sequence[int]) -> "BalanceSystem":
        """Subsystem on a subset of this system's rows (given as element indices)."""
        position = {int(r): i for i, r in enumerate(self.rows)}
        try:
            local = np.array([position[int(r)] for r in rows], dtype=np.int64)
        except KeyError as error:
            raise DimensionError(f"row {error.args[0]} is not evaluated by this system") from error
        return BalanceSystem(view=self.view[local], source=self.source[local],
                             params=self.params, rows=self.rows[local], basis=self.basis)

    @cached_property
    def floor(self) -> float:
        """Fluxes below this positive floor are clamped before fractional powers."""
        scale = float(np.mean(np.abs(self.source))) if self.source.size else 0.0
        return CLAMP_FRACTION * (scale if scale > 0 else 1.0)

    def _require_basis(self) -> BasisSet:
        if self.basis is None:
            raise DimensionError("sparse evaluation needs a basis")
        return self.basis

    @cached_property
    def psi_rows(self) -> np.ndarray:
        """Psi restricted to the evaluated rows (M x L)."""
        return self._require_basis().rows(self.rows)

    @cached_property
    def view_psi(self) -> np.ndarray:
        """V_R Psi (M x L), formed block by block."""
        return self._require_basis().left_multiply(self.view)

    @cached_property
    def linear_part(self) -> np.ndarray:
        """G = Psi_R - V_R Psi."""
        return self.psi_rows - self.view_psi

    def positive_flux(self, values: np.ndarray) -> np.ndarray:
        """Reject non-positive fluxes and clamp tiny positive ones up to the floor."""
        bad = np.nonzero(values <= 0)[0]
        if bad.size:
            raise IterateDomainError(
                f"non-positive flux on {bad.size} evaluated rows", self.rows[bad].tolist())
        small = values < self.floor
        if np.any(small):
            self.clamp_events += 1
            logger.warning("Clamped %d fluxes to %.3e", int(small.sum()), self.floor)
            values = np.where(small, self.floor, values)
        return values


def residual_full(flux: np.ndarray, system: BalanceSystem) -> np.ndarray:
    """
    (I - V) B + C B^(1/beta) - E on the system's rows.

    Raises:
        DomainError: If any entry of B is not strictly positive
    """
    flux = np.asarray(flux, dtype=float)
    if flux.shape != (system.size,):
        raise DimensionError(f"expected {system.size} fluxes, got {flux.shape}")
    if np.any(flux <= 0):
        raise DomainError("flux must be strictly positive")
    own = flux[system.rows]
    params = system.params
    return own - system.view @ flux + params.C * own ** params.exponent - system.source


def residual_sparse(coef: np.ndarray, system: BalanceSystem) -> np.ndarray:
    """
    Residual of the balance with B = Psi c, on the system's rows only.

    Raises:
        IterateDomainError: If Psi c is non-positive on an evaluated row
    """
    coef = np.asarray(coef, dtype=float)
    own = system.psi_rows @ coef
    positive = system.positive_flux(own)
    params = system.params
    return system.linear_part @ coef + params.C * positive ** params.exponent - system.source


def jacobian(coef: np.ndarray, system: BalanceSystem) -> np.ndarray:
    """G + diag((C / beta) (Psi_R c)^(1/beta - 1)) Psi_R on the system's rows."""
    coef = np.asarray(coef, dtype=float)
    own = system.positive_flux(system.psi_rows @ coef)
    params = system.params
    scale = (params.C / params.beta) * own ** (params.exponent - 1.0)
    return system.linear_part + scale[:, None] * system.psi_rows


def flux_jacobian(flux: np.ndarray, system: BalanceSystem) -> np.ndarray:
    """Jacobian of residual_full with respect to B (full systems only)."""
    if not system.is_full:
        raise DimensionError("the flux Jacobian needs a full system")
    params = system.params
    jac = -system.view.copy()
    diag = 1.0 + (params.C / params.beta) * flux ** (params.exponent - 1.0)
    jac[np.diag_indices_from(jac)] += diag
    return jac


@dataclass(frozen=True)
class LinearizedSystem:
    """Sensing matrix A and measurements y of the Taylor expansion at ``expansion``."""
    A: np.ndarray  # pylint: disable=invalid-name
    y: np.ndarray
    expansion: np.ndarray
    rows: np.ndarray


def linearize(coef: np.ndarray, system: BalanceSystem) -> LinearizedSystem:
    """A = J(c*) and y = J(c*) c* - f(c*), both restricted to the system's rows."""
    coef = np.asarray(coef, dtype=float)
    jac = jacobian(coef, system)
    res = residual_sparse(coef, system)
    return LinearizedSystem(A=jac, y=jac @ coef - res, expansion=coef.copy(), rows=system.rows)


def manufactured_source(flux: np.ndarray, view: np.ndarray, params: MaterialParams) -> np.ndarray:
    """Irradiation E for which the given positive flux solves the balance exactly."""
    flux = np.asarray(flux, dtype=float)
    if np.any(flux <= 0):
        raise DomainError("manufactured flux must be strictly positive")
    return flux - view @ flux + params.C * flux ** params.exponent


def solve_diagonal(a: np.ndarray, c: float, beta: float, rhs: np.ndarray,
                   tol: float = 1e-15, max_iter: int = 100) -> np.ndarray:
    """
    Solve a_i B_i + c B_i^(1/beta) = rhs_i elementwise.

    Safeguarded Newton inside the bracket [0, rhs / a]; steps leaving the bracket fall back to
    bisection.

    Raises:
        DomainError: If a coefficient or right-hand side is not strictly positive
    """
    a = np.broadcast_to(np.asarray(a, dtype=float), np.shape(rhs)).copy()
    rhs = np.asarray(rhs, dtype=float)
    if np.any(a <= 0) or np.any(rhs <= 0):
        raise DomainError("diagonal solve needs positive coefficients and right-hand sides")
    p = 1.0 / beta
    lo = np.zeros_like(rhs)
    hi = rhs / a
    x = 0.5 * hi
    for _ in range(max_iter):
        g = a * x + c * x ** p - rhs
        lo = np.where(g < 0, x, lo)
        hi = np.where(g > 0, x, hi)
        step = g / (a + c * p * x ** (p - 1.0))
        trial = x - step
        inside = (trial > lo) & (trial < hi)
        new = np.where(inside, trial, 0.5 * (lo + hi))
        done = np.abs(new - x) <= tol * np.maximum(np.abs(new), 1e-300)
        x = new
        if np.all(done):
            break
    return x
