# cavityflux/solvers/__init__.py
"""Dense baselines, greedy sparse solvers and the nonlinear compressed-sensing loop."""

from .base import GREEDY_SOLVERS, FluxResult, GreedyResult, GreedySolver, make_solver
from .greedy import CGIHTSolver, IHTSolver, NIHTSolver, cgiht, iht, niht
from .newton import inexact_newton_pcg, initial_guess, newton_raphson, pcg
from .nonlinear import constant_start, nonlinear_cs_solve
from .pursuit import CGSTPSolver, SPSolver, cgstp, subspace_pursuit
from .report import SolverReport
from .thresholding import SparsityPattern, hard_threshold

__all__ = [
    "GREEDY_SOLVERS",
    "CGIHTSolver",
    "CGSTPSolver",
    "FluxResult",
    "GreedyResult",
    "GreedySolver",
    "IHTSolver",
    "NIHTSolver",
    "SPSolver",
    "SolverReport",
    "SparsityPattern",
    "cgiht",
    "cgstp",
    "constant_start",
    "hard_threshold",
    "iht",
    "inexact_newton_pcg",
    "initial_guess",
    "make_solver",
    "newton_raphson",
    "niht",
    "nonlinear_cs_solve",
    "pcg",
    "subspace_pursuit",
]
