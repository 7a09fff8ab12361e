# cavityflux/basis/legendre_fourier.py
"""Legendre (axial) times Fourier (azimuthal) products on the cylindrical wall."""

from typing import Union

import numpy as np
from scipy.special import eval_legendre

from ..errors import DomainError
from .terms import LEGENDRE_FOURIER, TermIndexMap, fourier

ArrayLike = Union[float, np.ndarray]


def legendre_fourier(l: int, k: int, z: ArrayLike, phi: ArrayLike) -> np.ndarray:
    """P_l(z) F_k(phi) with F_k = cos(k phi) for k >= 0 and sin(|k| phi) for k < 0."""
    if l < 0:
        raise DomainError(f"Legendre degree must be non-negative, got {l}")
    z = np.asarray(z, dtype=float)
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise DomainError("normalized height outside [-1, 1]")
    return eval_legendre(l, z) * fourier(k, phi)


def legendre_fourier_matrix(z: np.ndarray, phi: np.ndarray, terms: TermIndexMap) -> np.ndarray:
    if terms.family != LEGENDRE_FOURIER:
        raise ValueError(f"expected an LF term map, got {terms.family}")
    z = np.asarray(z, dtype=float)
    phi = np.asarray(phi, dtype=float)
    max_l = max(l for l, _ in terms)
    axial = [eval_legendre(l, z) for l in range(max_l + 1)]
    out = np.empty((z.size, len(terms)))
    for n, (l, k) in enumerate(terms):
        out[:, n] = axial[l] * fourier(k, phi)
    return out
