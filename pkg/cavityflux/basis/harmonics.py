# cavityflux/basis/harmonics.py
"""Real spherical harmonics on the capsule."""

import math
from typing import Dict, Tuple, Union

import numpy as np

from ..errors import DomainError
from .terms import SPHERICAL, TermIndexMap, fourier

ArrayLike = Union[float, np.ndarray]


def normalized_legendre(mmax: int, x: ArrayLike) -> Dict[Tuple[int, int], np.ndarray]:
    """
    Normalized associated Legendre functions N_m^k P_m^k(x) for 0 <= k <= m <= mmax.

    N_m^k = sqrt((2m+1)/(4 pi) (m-k)!/(m+k)!) and no Condon-Shortley phase. Evaluated with the
    stable sectoral / three-term recurrences.

    There is no sqrt(2) factor for k > 0, so once multiplied by cos(k phi) or sin(k phi) these
    terms have squared norm 1/2 on the unit sphere against 1 for the zonal (k = 0) terms. The
    columns are orthogonal but not orthonormal, and a non-zonal coefficient is sqrt(2) times
    the coefficient an orthonormal basis would give for the same flux. Amplitude ratios and
    energy fractions built from these coefficients (``asymmetry_metrics``) inherit that scale.

    Args:
        mmax: Highest degree
        x: cos(theta), scalar or array

    Returns:
        Mapping (m, k) -> values shaped like x
    """
    x = np.asarray(x, dtype=float)
    sin_theta = np.sqrt(np.clip(1.0 - x * x, 0.0, None))
    table: Dict[Tuple[int, int], np.ndarray] = {}
    sectoral = np.full_like(x, math.sqrt(1.0 / (4.0 * math.pi)))
    for k in range(mmax + 1):
        if k > 0:
            sectoral = sectoral * math.sqrt((2.0 * k + 1.0) / (2.0 * k)) * sin_theta
        table[(k, k)] = sectoral
        if k + 1 <= mmax:
            table[(k + 1, k)] = math.sqrt(2.0 * k + 3.0) * x * sectoral
        for m in range(k + 2, mmax + 1):
            a = math.sqrt((4.0 * m * m - 1.0) / (m * m - k * k))
            b = math.sqrt(((m - 1.0) ** 2 - k * k) / (4.0 * (m - 1.0) ** 2 - 1.0))
            table[(m, k)] = a * (x * table[(m - 1, k)] - b * table[(m - 2, k)])
    return table


def spherical_harmonic(m: int, k: int, theta: ArrayLike, phi: ArrayLike) -> np.ndarray:
    """
    Real spherical harmonic of degree m and order k.

    Cosine branch for k >= 0, sine branch for k < 0.

    Raises:
        DomainError: If |k| > m or m < 0
    """
    if m < 0 or abs(k) > m:
        raise DomainError(f"invalid spherical harmonic order (m={m}, k={k})")
    table = normalized_legendre(m, np.cos(np.asarray(theta, dtype=float)))
    return table[(m, abs(k))] * fourier(k, phi)


def spherical_harmonic_matrix(theta: np.ndarray, phi: np.ndarray,
                              terms: TermIndexMap) -> np.ndarray:
    """Evaluate every term of ``terms`` at the points (theta, phi); one column per term."""
    if terms.family != SPHERICAL:
        raise ValueError(f"expected an SH term map, got {terms.family}")
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    table = normalized_legendre(terms.max_degree, np.cos(theta))
    out = np.empty((theta.size, len(terms)))
    for n, (m, k) in enumerate(terms):
        out[:, n] = table[(m, abs(k))] * fourier(k, phi)
    return out
