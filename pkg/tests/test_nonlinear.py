# tests/test_nonlinear.py

import numpy as np
import pytest

from cavityflux.errors import DimensionError, IterateDomainError
from cavityflux.geometry.mesh import Region
from cavityflux.physics.balance import BalanceSystem, MaterialParams, manufactured_source
from cavityflux.sampling import build_plan, full_plan
from cavityflux.solvers.newton import newton_raphson
from cavityflux.solvers.nonlinear import _damped_update, constant_start, nonlinear_cs_solve

TOY_KS = [4, 4, 4, 8]
TOY_SAMPLES = [24, 24, 24, 64]


@pytest.fixture
def manufactured_system(toy_view, toy_basis, manufactured_coefficients):
    params = MaterialParams()
    flux = toy_basis.matvec(manufactured_coefficients)
    return BalanceSystem.full(toy_view, manufactured_source(flux, toy_view, params), params)


@pytest.mark.parametrize("algorithm", ["cgstp", "sp"])
def test_recovers_flux_inside_the_basis_span(algorithm, toy_model, toy_basis,
                                             manufactured_system, manufactured_coefficients):
    flux = toy_basis.matvec(manufactured_coefficients)
    dense = [len(r) for r in toy_basis.column_ranges]
    coef, report = nonlinear_cs_solve(manufactured_system, toy_basis, full_plan(toy_model),
                                      algorithm, dense, outer_tol=1e-10, outer_max=30,
                                      reference=flux, model=toy_model)
    assert report.converged
    np.testing.assert_allclose(coef, manufactured_coefficients, atol=1e-7)
    assert report.rmse < 1e-8
    assert report.rmse_capsule < 1e-8


def test_sampled_run_report(toy_model, toy_basis, toy_system):
    reference = newton_raphson(toy_system).flux
    plan = build_plan(toy_model, TOY_KS, TOY_SAMPLES, seed=1)
    coef, report = nonlinear_cs_solve(toy_system, toy_basis, plan, "cgstp", TOY_KS,
                                      outer_max=10, reference=reference, model=toy_model)
    assert coef.shape == (37,)
    assert report.solver == "cgstp" and report.seed == 1
    assert (report.n, report.m, report.terms, report.k) == (200, 136, 37, (4, 4, 4, 8))
    assert len(report.residuals) == report.outer_iterations + 1
    assert len(report.error_history) == len(report.residuals)
    assert len(report.inner_iterations) == report.outer_iterations
    assert 1 <= report.outer_iterations <= 10
    assert np.isfinite(report.rmse) and report.rmse == report.error_history[-1]
    if report.damping_events == 0:
        for block, k in zip(toy_basis.blocks, TOY_KS):
            assert np.count_nonzero(coef[block.cols.start:block.cols.stop]) <= k
    assert np.all(toy_basis.rows_matvec(plan.indices, coef) > 0)


def test_sparsity_by_region_mapping(toy_model, toy_basis, toy_system):
    plan = build_plan(toy_model, TOY_KS, TOY_SAMPLES, seed=2)
    by_region = dict(zip(Region, TOY_KS))
    _, report = nonlinear_cs_solve(toy_system, toy_basis, plan, "sp", by_region, outer_max=3)
    assert report.k == (4, 4, 4, 8)
    assert report.rmse is None


def test_constant_start_matches_mean_irradiation(toy_model, toy_basis, toy_system):
    sampled = toy_system.restrict(np.arange(0, 200, 5))
    sampled.basis = toy_basis
    coef = constant_start(sampled, toy_basis)
    assert np.count_nonzero(coef) == 4
    flux = toy_basis.matvec(coef)
    for block in toy_basis.blocks:
        mask = (sampled.rows >= block.rows.start) & (sampled.rows < block.rows.stop)
        np.testing.assert_allclose(flux[block.rows.start:block.rows.stop],
                                   sampled.source[mask].mean(), rtol=1e-12)


def test_infeasible_update_is_rejected(toy_view, toy_basis, manufactured_coefficients):
    system = BalanceSystem.full(toy_view, np.ones(toy_view.shape[0]), basis=toy_basis)
    coef = manufactured_coefficients
    accepted, halvings = _damped_update(system, coef, 1.5 * coef, max_damping=3)
    np.testing.assert_allclose(accepted, 1.5 * coef)
    assert halvings == 0
    with pytest.raises(IterateDomainError) as info:
        _damped_update(system, coef, -coef, max_damping=0)
    assert len(info.value.rows) == toy_view.shape[0]


def test_plan_must_match_the_system(toy_model, toy_basis, toy_system):
    plan = full_plan(toy_model)
    with pytest.raises(DimensionError):
        nonlinear_cs_solve(toy_system.restrict([0, 1]), toy_basis, plan, "cgstp", TOY_KS)
