# tests/test_greedy.py

import numpy as np
import pytest

from cavityflux.errors import ConfigurationError, SolverDivergenceError
from cavityflux.solvers.base import GREEDY_SOLVERS, make_solver
from cavityflux.solvers.greedy import IHTSolver, iht, restricted_step
from cavityflux.solvers.pursuit import cgstp, subspace_pursuit
from cavityflux.solvers.thresholding import SparsityPattern, hard_threshold


def test_hard_threshold_keeps_largest_magnitudes():
    np.testing.assert_array_equal(hard_threshold([1.0, -3.0, 2.0, 0.5], 2), [0.0, -3.0, 2.0, 0.0])
    # ties keep the lower index
    np.testing.assert_array_equal(hard_threshold([1.0, -3.0, 3.0, 2.0], 1), [0.0, -3.0, 0.0, 0.0])
    with pytest.raises(ConfigurationError):
        hard_threshold([1.0, 2.0], 3)
    with pytest.raises(ConfigurationError):
        hard_threshold([1.0, 2.0], 0)


def test_block_pattern_thresholds_each_block():
    pattern = SparsityPattern([range(0, 3), range(3, 6)], [1, 2])
    v = np.array([5.0, 4.0, 3.0, 0.1, 0.3, 0.2])
    np.testing.assert_array_equal(pattern.threshold(v), [5.0, 0.0, 0.0, 0.0, 0.3, 0.2])
    np.testing.assert_array_equal(pattern.select(v), [0, 4, 5])
    assert pattern.total == 3 and not pattern.is_dense
    assert SparsityPattern([range(0, 2)], [5]).ks == [2]
    with pytest.raises(ConfigurationError):
        SparsityPattern([range(0, 2)], [1, 1])
    with pytest.raises(ConfigurationError):
        SparsityPattern.coerce(pattern, 7)


@pytest.mark.parametrize("name", ["iht", "niht", "cgiht", "sp", "cgstp"])
def test_recovers_sparse_signal(name, sparse_problem):
    A, y, x, k = sparse_problem
    solver = make_solver(name, max_iter=5000, tol=1e-10)
    result = solver.solve(A, y, SparsityPattern.uniform(A.shape[1], k))
    assert result.converged
    assert result.stop_reason == "tolerance"
    np.testing.assert_array_equal(result.support, np.flatnonzero(x))
    np.testing.assert_allclose(result.coefficients, x, atol=1e-6)
    assert np.count_nonzero(result.coefficients) <= k


@pytest.mark.parametrize("method", [subspace_pursuit, cgstp])
def test_pursuit_residuals_never_increase(method, sparse_problem):
    A, y, _, k = sparse_problem
    noisy = y + 0.05 * np.random.default_rng(2).standard_normal(y.size)
    result = method(A, noisy, k, max_iter=50)
    assert np.all(np.diff(result.residuals) <= 0.0)
    assert result.stop_reason in ("residual stalled", "max_iter")
    assert np.count_nonzero(result.coefficients) <= k


def test_pursuits_need_few_iterations(sparse_problem):
    A, y, _, k = sparse_problem
    assert cgstp(A, y, k).iterations <= 20
    assert subspace_pursuit(A, y, k).iterations <= 20


def test_warm_start_at_solution_stops_immediately(sparse_problem):
    A, y, x, k = sparse_problem
    result = cgstp(A, y, k, x0=x)
    assert result.iterations == 0 and result.converged


def test_zero_measurements_give_zero_solution(sparse_problem):
    A, y, _, k = sparse_problem
    for method in (iht, cgstp):
        result = method(A, np.zeros_like(y), k)
        assert not np.any(result.coefficients)
        assert result.converged and result.stop_reason == "zero measurements"


def test_oversized_step_diverges(sparse_problem):
    A, y, _, k = sparse_problem
    with pytest.raises(SolverDivergenceError):
        iht(A, y, k, mu=50.0, max_iter=200)


def test_restricted_step():
    A = 2.0 * np.eye(3)
    grad = np.array([1.0, 0.0, 0.0])
    assert restricted_step(A, grad, grad, np.array([0])) == pytest.approx(0.25)
    # gradient vanishes on the support: exact line search along the full direction
    grad = np.array([0.0, 0.0, 1.0])
    assert restricted_step(A, grad, grad, np.array([0, 1])) == pytest.approx(0.25)


def test_solver_registry():
    assert sorted(GREEDY_SOLVERS) == ["cgiht", "cgstp", "iht", "niht", "sp"]
    solver = make_solver("CGSTP", max_iter=7)
    assert solver.name == "cgstp" and solver.max_iter == 7
    assert make_solver("sp").max_iter == 200
    assert isinstance(make_solver("iht"), IHTSolver) and make_solver("iht").mu == 1.0
    with pytest.raises(ConfigurationError):
        make_solver("omp")


@pytest.mark.parametrize("k", [1, 3, 6])
def test_hard_threshold_is_idempotent(k):
    v = np.random.default_rng(5).standard_normal(12)
    once = hard_threshold(v, k)
    np.testing.assert_array_equal(hard_threshold(once, k), once)
    assert np.count_nonzero(once) == k
    pattern = SparsityPattern([range(0, 5), range(5, 12)], [2, k])
    np.testing.assert_array_equal(pattern.threshold(pattern.threshold(v)), pattern.threshold(v))
