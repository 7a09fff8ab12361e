# tests/conftest.py
"""Shared fixtures: a 200-element toy cavity, its dense system and a synthetic sparse suite."""

import copy

import numpy as np
import pytest

from cavityflux.basis.blocks import build_basis
from cavityflux.geometry.viewfactor import assemble_view_matrix, source_term
from cavityflux.harness.pipeline import basis_counts, build_model, material_params
from cavityflux.physics.balance import BalanceSystem
from cavityflux.utils.config import Config

# capsule 4 x 8 = 32, end faces 3 rings x 12 = 36 each, wall 8 rows x 12 = 96
TOY_SETTINGS = {
    "app": {"workers": 1, "log_level": "WARNING"},
    "geometry": {
        "cavity_radius_um": 400.0,
        "cavity_half_height_um": 850.0,
        "capsule_radius_um": 120.0,
        "leh_radius_um": 190.0,
    },
    "mesh": {
        "capsule_dtheta_deg": 45.0,
        "capsule_dphi_deg": 45.0,
        "end_dr_um": 70.0,
        "end_dphi_deg": 30.0,
        "end_rings": 3,
        "wall_dz_um": None,
        "wall_dphi_deg": 30.0,
        "wall_rows": 8,
        "wall_azimuth": None,
        "wall_guard_azimuth": None,
    },
    "source": {"spot_radius_um": 250.0},
    "basis": {"capsule_terms": 9, "end_face_terms": 6, "wall_terms": 16},
    "sampling": {"sparsity": [4, 4, 4, 8], "samples": [24, 24, 24, 64], "seed": 0},
    "solver": {"iht_max_iter": 500, "pursuit_max_iter": 100, "outer_max": 15},
    "bench": {
        "solvers": ["nr", "pcg", "cgiht", "sp", "cgstp"],
        "seeds": 2,
        "out_dir": "",
        "cache_dir": None,
        "max_matrix_gib": 1.0,
    },
    "model_name": "toy",
}
TOY_SIZE = 200


def pytest_addoption(parser):
    parser.addoption("--runslow", action="store_true", default=False,
                     help="run full-size model checks")


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: full-size model checks (run with --runslow)")


def pytest_collection_modifyitems(config, items):
    if config.getoption("--runslow"):
        return
    skip_slow = pytest.mark.skip(reason="needs --runslow")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(autouse=True)
def clean_environment(monkeypatch):
    """Keep a developer's .env and CAVITYFLUX_* variables out of the tests."""
    for name in list(Config.ENV_VAR_MAPPING) + ["CAVITYFLUX_CONFIG", "CAVITYFLUX_SAMPLES"]:
        monkeypatch.delenv(name, raising=False)
    monkeypatch.setattr("cavityflux.utils.config.load_dotenv", lambda *args, **kwargs: False)


@pytest.fixture
def toy_settings():
    return copy.deepcopy(TOY_SETTINGS)


@pytest.fixture
def toy_config(toy_settings):
    return Config.from_dict(toy_settings)


@pytest.fixture(scope="session")
def toy_model():
    return build_model(Config.from_dict(copy.deepcopy(TOY_SETTINGS)).settings)


@pytest.fixture(scope="session")
def toy_view(toy_model):
    return assemble_view_matrix(toy_model)


@pytest.fixture(scope="session")
def toy_basis(toy_model):
    settings = Config.from_dict(copy.deepcopy(TOY_SETTINGS)).settings
    return build_basis(toy_model, basis_counts(settings, toy_model))


@pytest.fixture
def toy_system(toy_model, toy_view):
    settings = Config.from_dict(copy.deepcopy(TOY_SETTINGS)).settings
    source = source_term(toy_view, toy_model.primary_source)
    return BalanceSystem.full(toy_view, source, material_params(settings))


@pytest.fixture
def manufactured_coefficients(toy_basis):
    """Positive flux inside the span of the basis: unit constants plus small perturbations."""
    rng = np.random.default_rng(11)
    coef = 0.01 * rng.standard_normal(toy_basis.n_terms)
    for block in toy_basis.blocks:
        coef[block.cols.start] = 1.0 / float(block.matrix[0, 0])
    return coef


@pytest.fixture
def sparse_problem():
    """Gaussian sensing matrix and a 6-sparse signal with entries bounded away from zero."""
    rng = np.random.default_rng(7)
    m, n, k = 80, 160, 6
    A = rng.standard_normal((m, n)) / np.sqrt(m)
    x = np.zeros(n)
    support = rng.choice(n, size=k, replace=False)
    x[support] = rng.choice([-1.0, 1.0], size=k) * (1.0 + rng.random(k))
    return A, A @ x, x, k
