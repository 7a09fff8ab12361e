# tests/test_config.py

import json
import logging

import pytest

from cavityflux.errors import ConfigurationError
from cavityflux.harness.presets import preset_settings
from cavityflux.utils.config import LOG_FORMAT, Config


def test_defaults_describe_the_small_model():
    settings = Config(use_environment=False).settings
    assert settings.geometry.cavity_radius_um == 400.0
    assert settings.sampling.sparsity == (30, 35, 35, 100)
    assert settings.material.beta == pytest.approx(16.0 / 13.0)
    assert settings.model_name is None


def test_preset_overlay():
    config = Config(preset="s3-2", use_environment=False)
    assert config.settings.model_name == "s3-2"
    assert config.settings.geometry.cavity_half_height_um == 1980.0
    assert config.settings.sampling.samples == (150, 200, 200, 400)
    assert config.settings.sampling.sparsity == (30, 35, 35, 85)
    with pytest.raises(ConfigurationError):
        preset_settings("s4-1")


def test_config_file_selects_a_model_and_overrides(tmp_path):
    path = tmp_path / "run.json"
    path.write_text(json.dumps({"model": "s2-2", "bench": {"seeds": 3}}))
    config = Config(config_file=str(path), use_environment=False)
    assert config.settings.model_name == "s2-2"
    assert config.settings.mesh.end_rings == 28
    assert config.settings.bench.seeds == 3


@pytest.mark.parametrize("content", ["{not json", "[1, 2]"])
def test_bad_config_files(tmp_path, content):
    path = tmp_path / "bad.json"
    path.write_text(content)
    with pytest.raises(ConfigurationError):
        Config(config_file=str(path), use_environment=False)


def test_missing_config_file(tmp_path):
    with pytest.raises(ConfigurationError):
        Config(config_file=str(tmp_path / "absent.json"), use_environment=False)


def test_environment_overrides(monkeypatch, tmp_path):
    monkeypatch.chdir(tmp_path)
    monkeypatch.setenv("CAVITYFLUX_SEEDS", "7")
    monkeypatch.setenv("CAVITYFLUX_TIME", "2.5")
    monkeypatch.setenv("CAVITYFLUX_SAMPLES", "10, 20, 20, 40")
    monkeypatch.setenv("CAVITYFLUX_WORKERS", "many")
    settings = Config().settings
    assert settings.bench.seeds == 7
    assert settings.material.t == 2.5
    assert settings.sampling.samples == (10, 20, 20, 40)
    assert settings.app.workers == 4


@pytest.mark.parametrize("overrides", [
    {"bench": {"solvers": ["nr", "gmres"]}},
    {"bench": {"seeds": 0}},
    {"geometry": {"capsule_radius_um": 500.0}},
    {"source": {"beams": 7}},
    {"basis": {"wall_terms": 0}},
    {"material": {"beta": 0.5}},
    {"material": {"t": 0.0}},
    {"material": {"upsilon": -1.0}},
])
def test_invalid_values_are_rejected(overrides):
    config = Config(use_environment=False)
    with pytest.raises(ConfigurationError):
        config.update(overrides)


def test_geometry_hash_tracks_the_mesh_only():
    base = Config(use_environment=False)
    other = Config(use_environment=False)
    other.update({"bench": {"seeds": 3}, "material": {"t": 2.0}})
    assert base.geometry_hash() == other.geometry_hash()
    other.update({"mesh": {"wall_rows": 40}})
    assert base.geometry_hash() != other.geometry_hash()


def test_save_and_get(tmp_path):
    config = Config(preset="s2-1", use_environment=False)
    path = tmp_path / "resolved.json"
    config.save(path)
    assert json.loads(path.read_text())["model_name"] == "s2-1"
    assert config.get("bench", "seeds") == 20
    assert config.get("nothing", "here", "fallback") == "fallback"


def test_configure_logging():
    root = logging.getLogger()
    previous = root.level
    config = Config.from_dict({"app": {"log_level": "debug"}})
    try:
        config.configure_logging()
        assert root.level == logging.DEBUG
    finally:
        root.setLevel(previous)
    assert "%(levelname)s" in LOG_FORMAT
