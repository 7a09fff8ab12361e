# cavityflux/basis/__init__.py
"""Orthogonal polynomial families and the block-diagonal sparse basis."""

from .blocks import (
    BasisMatrix,
    BasisSet,
    assemble_block_basis,
    build_basis,
    build_basis_matrix,
    fit_coefficients,
)
from .harmonics import spherical_harmonic
from .legendre_fourier import legendre_fourier
from .terms import TermIndexMap
from .zernike import zernike_annular, zernike_annular_radial

__all__ = [
    "BasisMatrix",
    "BasisSet",
    "TermIndexMap",
    "assemble_block_basis",
    "build_basis",
    "build_basis_matrix",
    "fit_coefficients",
    "legendre_fourier",
    "spherical_harmonic",
    "zernike_annular",
    "zernike_annular_radial",
]
