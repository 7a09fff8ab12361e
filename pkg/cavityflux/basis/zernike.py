# cavityflux/basis/zernike.py
"""
Annular Zernike polynomials on the end faces.

Radial polynomials are built in the squared radius tau = r^2. For k = 0 they are shifted
Legendre polynomials on [eps^2, 1]; for k > 0 each Q_j^k is a weighted sum of the Q_i^(k-1),
i <= j, using the values Q(0) and the norms h of the previous order. Carrying every Q as its
coefficient vector in the Legendre basis of the shifted variable keeps evaluation stable, and
the recurrence constants are accumulated exactly in rationals.

Normalization: R_n^k(1) = 1 and, for r in [eps, 1],
integral of R_n^k(r)^2 r dr = (1 - eps^2) / (2 (n + 1)); eps = 0 gives the circle polynomials.
"""

import logging
import math
from fractions import Fraction
from functools import lru_cache
from typing import Dict, List, Tuple, Union

import numpy as np
from numpy.polynomial import legendre

from ..errors import DomainError
from .terms import ANNULAR, TermIndexMap, fourier

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]
_RADIUS_TOL = 1e-12


def rational_ratio(hole_ratio: float) -> Fraction:
    """Inner-radius ratio as a small rational (exact for ratios of micrometre dimensions)."""
    if not 0.0 <= hole_ratio < 1.0:
        raise DomainError(f"inner radius ratio must lie in [0, 1), got {hole_ratio}")
    return Fraction(hole_ratio).limit_denominator(1_000_000)


@lru_cache(maxsize=16)
def _radial_tables(eps: Fraction, n_max: int) -> Dict[Tuple[int, int], Tuple[np.ndarray, float]]:
    """(j, k) -> (Legendre coefficients of Q_j^k, normalization factor) for 2j + k <= n_max."""
    eps2 = eps * eps
    span = 1 - eps2
    t_zero = -(1 + eps2) / span

    # required j per order so that h_j^k can read Q_(j+1)^(k-1)(0)
    need = [0] * (n_max + 1)
    for k in range(n_max, -1, -1):
        need[k] = (n_max - k) // 2
        if k < n_max:
            need[k] = max(need[k], need[k + 1] + 1)

    p_zero: List[Fraction] = [Fraction(1), t_zero]
    for i in range(1, need[0] + 1):
        p_zero.append(((2 * i + 1) * t_zero * p_zero[i] - i * p_zero[i - 1]) / (i + 1))

    weights: List[List[Fraction]] = [[Fraction(int(i == j)) for i in range(j + 1)]
                                     for j in range(need[0] + 1)]
    q_zero = [p_zero[j] for j in range(need[0] + 1)]
    norms = [span / (2 * (2 * j + 1)) for j in range(need[0] + 1)]

    tables: Dict[Tuple[int, int], Tuple[np.ndarray, float]] = {}

    def store(k: int) -> None:
        for j in range((n_max - k) // 2 + 1):
            scale = span / (2 * (2 * j + k + 1) * norms[j])
            tables[(j, k)] = (np.array([float(w) for w in weights[j]]), math.sqrt(scale))

    store(0)
    for k in range(1, n_max + 1):
        new_weights: List[List[Fraction]] = []
        new_q: List[Fraction] = []
        new_norms: List[Fraction] = []
        acc = [Fraction(0)] * (need[k] + 1)
        for j in range(need[k] + 1):
            factor = q_zero[j] / norms[j]
            for i, w in enumerate(weights[j]):
                acc[i] += factor * w
            lead = Fraction(2 * (2 * j + 2 * k - 1), (j + k)) / span
            scale = lead * norms[j] / q_zero[j]
            row = [scale * a for a in acc[:j + 1]]
            new_weights.append(row)
            new_q.append(sum((w * p_zero[i] for i, w in enumerate(row)), Fraction(0)))
            new_norms.append(-lead * q_zero[j + 1] / q_zero[j] * norms[j])
        weights, q_zero, norms = new_weights, new_q, new_norms
        store(k)
    logger.debug("Built annular radial tables: eps=%s, n_max=%d", eps, n_max)
    return tables


def _shifted(r: np.ndarray, eps: Fraction) -> np.ndarray:
    eps2 = float(eps * eps)
    return 2.0 * (r * r - eps2) / (1.0 - eps2) - 1.0


def _check_radius(r: np.ndarray, eps: Fraction) -> None:
    low = float(eps) - _RADIUS_TOL
    if np.any(r < low) or np.any(r > 1.0 + _RADIUS_TOL):
        raise DomainError(f"radius outside [{float(eps):g}, 1]")


def zernike_annular_radial(j: int, k: int, r: ArrayLike, hole_ratio: float) -> np.ndarray:
    """
    Radial polynomial R_(2j+k)^k(r) of the annulus with inner radius ratio ``hole_ratio``.

    Negative k is treated as |k|.

    Raises:
        DomainError: If r lies outside [hole_ratio, 1] or j is negative
    """
    if j < 0:
        raise DomainError("radial index j must be non-negative")
    k = abs(k)
    eps = rational_ratio(hole_ratio)
    r = np.asarray(r, dtype=float)
    _check_radius(r, eps)
    coeffs, norm = _radial_tables(eps, 2 * j + k)[(j, k)]
    return norm * r ** k * legendre.legval(_shifted(r, eps), coeffs)


def zernike_annular(l: int, k: int, r: ArrayLike, hole_ratio: float,
                    phi: ArrayLike) -> np.ndarray:
    """
    Annular Zernike term of degree l and azimuthal order k (sine branch for k < 0).

    Raises:
        DomainError: If l - |k| is negative or odd
    """
    if l < 0 or l - abs(k) < 0 or (l - abs(k)) % 2:
        raise DomainError(f"invalid annular Zernike order (l={l}, k={k})")
    return zernike_annular_radial((l - abs(k)) // 2, k, r, hole_ratio) * fourier(k, phi)


def zernike_annular_matrix(r: np.ndarray, phi: np.ndarray, terms: TermIndexMap,
                           hole_ratio: float) -> np.ndarray:
    """Evaluate every term of ``terms`` at (r, phi); one column per term."""
    if terms.family != ANNULAR:
        raise ValueError(f"expected an AZ term map, got {terms.family}")
    eps = rational_ratio(hole_ratio)
    r = np.asarray(r, dtype=float)
    phi = np.asarray(phi, dtype=float)
    _check_radius(r, eps)
    tables = _radial_tables(eps, terms.max_degree)
    t = _shifted(r, eps)
    radial_cache: Dict[Tuple[int, int], np.ndarray] = {}
    out = np.empty((r.size, len(terms)))
    for n, (l, k) in enumerate(terms):
        key = ((l - abs(k)) // 2, abs(k))
        if key not in radial_cache:
            coeffs, norm = tables[key]
            radial_cache[key] = norm * r ** key[1] * legendre.legval(t, coeffs)
        out[:, n] = radial_cache[key] * fourier(k, phi)
    return out

