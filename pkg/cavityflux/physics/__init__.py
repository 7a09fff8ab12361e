# cavityflux/physics/__init__.py
"""Energy balance of the cavity."""

from .balance import (
    BalanceSystem,
    LinearizedSystem,
    MaterialParams,
    albedo,
    jacobian,
    linearize,
    manufactured_source,
    residual_full,
    residual_sparse,
    solve_diagonal,
)

__all__ = [
    "BalanceSystem",
    "LinearizedSystem",
    "MaterialParams",
    "albedo",
    "jacobian",
    "linearize",
    "manufactured_source",
    "residual_full",
    "residual_sparse",
    "solve_diagonal",
]
