# tests/test_analysis.py

import numpy as np
import pytest

from cavityflux.basis.terms import SPHERICAL, TermIndexMap
from cavityflux.errors import ConfigurationError, DimensionError, DomainError
from cavityflux.geometry.mesh import Region
from cavityflux.harness.analysis import (
    asymmetry_metrics,
    capsule_asymmetry,
    capsule_rmse,
    fit_region,
    rmse,
    significant_count,
    sparsity_sweep,
    speedup_table,
    summarize_reports,
)
from cavityflux.solvers.report import SolverReport


def test_relative_rmse():
    reference = np.array([1.0, 1.0, 1.0, 1.0])
    assert rmse(reference, reference) == 0.0
    assert rmse(reference * 1.1, reference) == pytest.approx(0.1)
    with pytest.raises(DimensionError):
        rmse(reference, reference[:3])
    with pytest.raises(DomainError):
        rmse(reference, np.zeros(4))


def test_capsule_rmse_ignores_the_walls(toy_model):
    reference = np.ones(toy_model.size)
    flux = reference.copy()
    flux[toy_model.region_ranges[Region.WALL].start:] = 5.0
    assert capsule_rmse(flux, reference, toy_model) == 0.0
    assert rmse(flux, reference) > 0.0


def test_uniform_capsule_flux_is_symmetric(toy_model):
    metrics = capsule_asymmetry(toy_model, np.full(toy_model.size, 3.0), 9)
    assert metrics.max_asymmetry < 1e-10
    assert metrics.amplitudes[0] == 1.0
    assert metrics.degree_energy[0] == pytest.approx(1.0)
    assert metrics.leading_energy(1) == pytest.approx(1.0)


def test_asymmetry_metrics():
    terms = TermIndexMap.for_family(SPHERICAL, 4)
    metrics = asymmetry_metrics(np.array([2.0, 0.0, 0.2, -0.1]), terms)
    np.testing.assert_allclose(metrics.amplitudes, [1.0, 0.0, 0.1, 0.05])
    assert metrics.max_asymmetry == pytest.approx(0.1)
    np.testing.assert_allclose(metrics.cumulative_energy[-1], 1.0)
    assert metrics.degree_energy[1] == pytest.approx(0.05 / 4.05)
    assert len(metrics.rows()) == 4
    with pytest.raises(DomainError):
        asymmetry_metrics(np.array([0.0, 1.0, 0.0, 0.0]), terms)
    with pytest.raises(DimensionError):
        asymmetry_metrics(np.ones(3), terms)


def test_significant_count():
    assert significant_count(np.array([1.0, 0.5, 1e-4, -2e-3])) == 3
    with pytest.raises(DomainError):
        significant_count(np.array([0.0, 1.0]))


def test_fit_region_is_exact_for_constant_flux(toy_model):
    fit = fit_region(toy_model, np.full(toy_model.size, 2.0), Region.END_TOP, 6)
    assert fit.error < 1e-12
    assert fit.coefficients[0] == pytest.approx(2.0)


def test_sweep_errors_do_not_grow(toy_model):
    flux = np.linspace(1.0, 2.0, toy_model.size) ** 2
    grid = {Region.CAPSULE: [1, 4, 9, 16], Region.WALL: [1, 4, 9, 16, 25]}
    curves = sparsity_sweep(toy_model, flux, grid)
    for region, errors in curves.term_errors.items():
        assert np.all(np.diff(errors) <= 1e-12)
        # keeping every coefficient reproduces the full fit
        assert curves.sparsity_errors[region][-1] == pytest.approx(errors[-1], abs=1e-12)
        assert curves.ranking[region][0] >= 1.0
    assert curves.sparsity_levels[Region.WALL][0] == 1
    assert {row["curve"] for row in curves.rows()} == {"terms", "sparsity"}
    with pytest.raises(DimensionError):
        sparsity_sweep(toy_model, flux[:10], grid)


def _report(solver, model, n, t_iteration, seed=0, status="ok", rmse_value=1e-6):
    report = SolverReport(solver=solver, model=model, seed=seed, status=status, n=n,
                          t_viewfactor=1.0, t_basis=0.5, t_iteration=t_iteration,
                          rmse=rmse_value)
    report.residuals = [1.0, 1e-3, 1e-9]
    report.inner_iterations = [5, 7]
    return report


def test_summary_and_speedup():
    reports = [
        _report("pcg", "big", 1000, 38.5),
        _report("cgstp", "big", 1000, 2.5, seed=0),
        _report("cgstp", "big", 1000, 4.5, seed=1),
        _report("cgiht", "big", 1000, 8.5),
        _report("cgstp", "big", 1000, 0.0, seed=2, status="failed"),
        _report("pcg", "small", 100, 8.5),
        _report("cgstp", "small", 100, 2.5),
    ]
    rows = summarize_reports(reports)
    cgstp = next(r for r in rows if r["model"] == "big" and r["solver"] == "cgstp")
    assert cgstp["runs"] == 2 and cgstp["failures"] == 1
    assert cgstp["t_iteration"] == pytest.approx(3.5)
    assert cgstp["outer_iterations"] == 2 and cgstp["inner_iterations"] == 12

    table = speedup_table(reports)
    assert [row["model"] for row in table] == ["small", "big"]
    big = table[1]
    assert big["ratio"] == pytest.approx(40.0 / 5.0)
    assert big["delta_cgiht"] == pytest.approx(5.0)
    with pytest.raises(ConfigurationError):
        speedup_table([_report("pcg", "lonely", 10, 1.0)])


@pytest.mark.parametrize("scale", [3.7, -0.25, 1e6])
def test_asymmetry_is_scale_invariant(scale):
    terms = TermIndexMap.for_family(SPHERICAL, 9)
    coefficients = np.array([2.0, 0.1, -0.3, 0.05, 0.0, 0.02, -0.01, 0.004, 0.2])
    base = asymmetry_metrics(coefficients, terms)
    scaled = asymmetry_metrics(scale * coefficients, terms)
    np.testing.assert_allclose(scaled.amplitudes, base.amplitudes, rtol=1e-12)
    np.testing.assert_allclose(scaled.cumulative_energy, base.cumulative_energy, rtol=1e-12)
    assert scaled.max_asymmetry == pytest.approx(base.max_asymmetry, rel=1e-12)
    for degree, energy in base.degree_energy.items():
        assert scaled.degree_energy[degree] == pytest.approx(energy, rel=1e-12)


def test_asymmetry_uses_raw_coefficients():
    terms = TermIndexMap.for_family(SPHERICAL, 4)
    zonal = next(n for n, (m, k) in enumerate(terms) if m == 1 and k == 0)
    sectoral = next(n for n, (m, k) in enumerate(terms) if m == 1 and k != 0)
    coefficients = np.zeros(4)
    coefficients[0] = 1.0
    coefficients[zonal] = coefficients[sectoral] = 0.1
    metrics = asymmetry_metrics(coefficients, terms)
    # equal coefficients give equal amplitudes although the sectoral term has half the norm
    assert metrics.amplitudes[zonal] == metrics.amplitudes[sectoral] == pytest.approx(0.1)
    assert metrics.degree_energy[1] == pytest.approx(0.02 / 1.02)
