# tests/test_newton.py

import numpy as np
import pytest

from cavityflux.errors import ConvergenceError, DimensionError
from cavityflux.harness.analysis import rmse
from cavityflux.physics.balance import (
    BalanceSystem,
    MaterialParams,
    albedo,
    residual_full,
    solve_diagonal,
)
from cavityflux.solvers.newton import (
    inexact_newton_pcg,
    initial_guess,
    newton_raphson,
    pcg,
)


def test_uncoupled_system_is_solved_by_the_diagonal_guess():
    params = MaterialParams()
    source = np.array([1.0, 2.0, 3.0, 4.0, 5.0])
    system = BalanceSystem.full(np.zeros((5, 5)), source, params)
    expected = solve_diagonal(np.ones(5), params.C, params.beta, source)
    for method in (newton_raphson, inexact_newton_pcg):
        result = method(system)
        np.testing.assert_allclose(result.flux, expected, rtol=1e-10)
        assert result.iterations == 0


def test_newton_solves_toy_cavity(toy_system):
    result = newton_raphson(toy_system)
    assert np.all(result.flux > 0)
    assert result.residuals[-1] < 1e-8
    assert result.iterations <= 30
    residual = residual_full(result.flux, toy_system)
    assert np.linalg.norm(residual) / np.linalg.norm(toy_system.source) < 1e-8


def test_pcg_baseline_agrees_with_newton(toy_system):
    direct = newton_raphson(toy_system)
    inexact = inexact_newton_pcg(toy_system)
    assert rmse(inexact.flux, direct.flux) < 1e-6
    assert len(inexact.inner_iterations) == inexact.iterations
    assert all(n > 0 for n in inexact.inner_iterations)


def test_pcg_solves_spd_system():
    rng = np.random.default_rng(4)
    m = rng.standard_normal((20, 20))
    spd = m @ m.T + 20.0 * np.eye(20)
    rhs = rng.standard_normal(20)
    inv_diag = 1.0 / np.diag(spd)
    x, history = pcg(lambda v: spd @ v, rhs, lambda v: inv_diag * v, 200, 1e-12, np.zeros(20))
    np.testing.assert_allclose(x, np.linalg.solve(spd, rhs), rtol=1e-8)
    assert history[-1] <= 1e-24 * history[0]
    assert len(history) - 1 <= 20


def test_baselines_need_a_full_system(toy_system):
    with pytest.raises(DimensionError):
        initial_guess(toy_system.restrict([0, 1, 2]))


def test_iteration_cap_raises(toy_system):
    with pytest.raises(ConvergenceError) as info:
        newton_raphson(toy_system, tol=1e-300, max_iter=2)
    assert info.value.iterations <= 2
    assert info.value.residual > 0.0


def test_solved_flux_is_an_albedo_fixed_point(toy_system):
    # B = lambda(B) (E + V B) is the balance rewritten with the wall albedo
    flux = newton_raphson(toy_system, tol=1e-10).flux
    incoming = toy_system.source + toy_system.view @ flux
    expected = albedo(flux, toy_system.params) * incoming
    np.testing.assert_allclose(flux, expected, rtol=1e-8, atol=1e-8 * float(flux.max()))
