# cavityflux/__init__.py
"""Radiation flux in a cylinder-to-sphere cavity from view-factor energy balance.

The package builds the discrete cavity (capsule, two annular end faces, cylindrical wall),
assembles view factors, and solves the nonlinear balance either densely (Newton-Raphson,
PCG-based inexact Newton) or through a sparse polynomial representation with greedy
compressed-sensing solvers (IHT, NIHT, CGIHT, SP, CGSTP).
"""

__version__ = "0.1.0"
