# tests/test_sampling.py

import numpy as np
import pytest

from cavityflux.errors import ConfigurationError, DimensionError
from cavityflux.geometry.mesh import CavityGeometry, Region, assemble_cavity
from cavityflux.harness.presets import preset_names
from cavityflux.sampling import SamplePlan, build_plan, full_plan, lhs_indices, sample_count
from cavityflux.utils.config import Config

PRESET_TOTALS = {"s2-1": 850, "s2-2": 900, "s3-1": 800, "s3-2": 950}


def test_sample_count_rule():
    assert sample_count(30, 2592) == 103
    assert sample_count(30, 2592, 150) == 150
    assert sample_count(100, 3152) == 350
    assert sample_count(50, 20) == 20
    with pytest.raises(ConfigurationError):
        sample_count(0, 100)


def test_lhs_draws_one_index_per_stratum():
    rng = np.random.default_rng(5)
    idx = lhs_indices(100, 10, rng)
    assert idx.size == 10
    for k, value in enumerate(idx):
        assert 10 * k <= value < 10 * (k + 1)
    uneven = lhs_indices(10, 3, np.random.default_rng(1))
    assert np.unique(uneven).size == 3 and uneven.max() < 10
    assert lhs_indices(10, 0, rng).size == 0
    with pytest.raises(ConfigurationError):
        lhs_indices(5, 6, rng)


def test_plan_counts_and_determinism(toy_model):
    plan = build_plan(toy_model, [4, 4, 4, 8], [24, 24, 24, 64], seed=3)
    assert plan.counts == {Region.CAPSULE: 24, Region.END_TOP: 24, Region.END_BOTTOM: 24,
                           Region.WALL: 64}
    assert plan.total == 136 and plan.size == 200
    assert np.all(np.diff(plan.indices) > 0)
    for region, local in plan.local.items():
        assert local.max() < len(toy_model.region_ranges[region])
    again = build_plan(toy_model, [4, 4, 4, 8], [24, 24, 24, 64], seed=3)
    np.testing.assert_array_equal(plan.indices, again.indices)
    other = build_plan(toy_model, [4, 4, 4, 8], [24, 24, 24, 64], seed=4)
    assert not np.array_equal(plan.indices, other.indices)


def test_plan_length_checks(toy_model):
    with pytest.raises(ConfigurationError):
        build_plan(toy_model, [4, 4, 4])
    with pytest.raises(ConfigurationError):
        build_plan(toy_model, [4, 4, 4, 8], [24, 24])


def test_full_plan_covers_every_row(toy_model):
    plan = full_plan(toy_model)
    np.testing.assert_array_equal(plan.indices, np.arange(200))
    assert plan.rate == 1.0


def test_plan_csv_round_trip(toy_model, tmp_path):
    plan = build_plan(toy_model, [4, 4, 4, 8], [24, 24, 24, 64], seed=9)
    path = tmp_path / "plan.csv"
    plan.to_csv(path, toy_model)
    loaded = SamplePlan.from_csv(path, toy_model, seed=9)
    np.testing.assert_array_equal(loaded.indices, plan.indices)
    assert loaded.counts == plan.counts


def test_plan_from_foreign_model_is_rejected(toy_model, tmp_path):
    path = tmp_path / "plan.csv"
    path.write_text("region,local_index,global_index\ncapsule,40,40\n")
    with pytest.raises(DimensionError):
        SamplePlan.from_csv(path, toy_model)


@pytest.mark.parametrize("name", preset_names())
def test_preset_sample_totals(name):
    settings = Config(preset=name, use_environment=False).settings
    model = assemble_cavity(CavityGeometry.from_settings(settings))
    plan = build_plan(model, settings.sampling.sparsity, settings.sampling.samples, seed=0)
    assert plan.total == PRESET_TOTALS[name]


@pytest.mark.parametrize("name,total", [("s3-1", 848), ("s3-2", 1008)])
def test_full_wall_sparsity_on_large_models(name, total):
    config = Config(preset=name, use_environment=False)
    config.update({"sampling": {"sparsity": [30, 35, 35, 100]}})
    settings = config.settings
    model = assemble_cavity(CavityGeometry.from_settings(settings))
    plan = build_plan(model, settings.sampling.sparsity, settings.sampling.samples, seed=0)
    assert plan.total == total
    assert plan.counts[Region.WALL] == sample_count(100, len(model.region_ranges[Region.WALL]))
