# tests/test_mesh.py

import math

import numpy as np
import pytest

from cavityflux.errors import ConfigurationError
from cavityflux.geometry.mesh import (
    CavityGeometry,
    Region,
    assemble_cavity,
    build_capsule_mesh,
    build_end_face_mesh,
    build_wall_mesh,
    divide_count,
)
from cavityflux.geometry.source import SourceParams, build_source
from cavityflux.harness.presets import EXPECTED_SIZES, preset_names
from cavityflux.utils.config import Config
from cavityflux.utils.storage import read_csv


def test_toy_model_region_sizes(toy_model):
    sizes = {r: len(rng) for r, rng in toy_model.region_ranges.items()}
    assert sizes == {Region.CAPSULE: 32, Region.END_TOP: 36, Region.END_BOTTOM: 36,
                     Region.WALL: 96}
    assert toy_model.size == 200
    assert list(toy_model.region_ranges) == [Region.CAPSULE, Region.END_TOP,
                                             Region.END_BOTTOM, Region.WALL]


def test_capsule_area_converges_to_sphere():
    mesh = build_capsule_mesh(120.0, math.radians(5.0), math.radians(5.0))
    assert len(mesh) == 36 * 72
    assert mesh.total_area() == pytest.approx(4.0 * math.pi * 120.0 ** 2, rel=1e-3)
    radial = mesh.centroids / np.linalg.norm(mesh.centroids, axis=1)[:, None]
    assert np.allclose(np.sum(radial * mesh.normals, axis=1), 1.0)


def test_end_face_area_and_orientation():
    top = build_end_face_mesh(400.0, 190.0, 15.0, math.radians(2.5), "top", half_height=850.0,
                              rings=14)
    bottom = build_end_face_mesh(400.0, 190.0, 15.0, math.radians(2.5), "bottom",
                                 half_height=850.0, rings=14)
    assert len(top) == 14 * 144 == 2016
    assert top.total_area() == pytest.approx(math.pi * (400.0 ** 2 - 190.0 ** 2), rel=1e-12)
    assert np.all(top.normals[:, 2] == -1.0) and np.all(top.centroids[:, 2] == 850.0)
    assert np.all(bottom.normals[:, 2] == 1.0) and np.all(bottom.centroids[:, 2] == -850.0)
    r = top.coords[:, 0]
    assert r.min() > 190.0 / 400.0 and r.max() < 1.0


def test_wall_guard_rows_reproduce_model_count():
    wall = build_wall_mesh(400.0, 850.0, None, math.radians(5.0), rows=44, guard_azimuth=64)
    assert len(wall) == 42 * 72 + 2 * 64 == 3152
    assert wall.total_area() == pytest.approx(2.0 * math.pi * 400.0 * 1700.0, rel=1e-12)
    radial = wall.centroids.copy()
    radial[:, 2] = 0.0
    assert np.all(np.sum(radial * wall.normals, axis=1) < 0.0)
    assert np.all(np.abs(wall.coords[:, 0]) < 1.0)


def test_non_dividing_resolution_is_rejected():
    with pytest.raises(ConfigurationError):
        build_capsule_mesh(1.0, math.radians(7.0), math.radians(5.0))
    with pytest.raises(ConfigurationError):
        divide_count(10.0, 3.0, "step")
    assert divide_count(math.pi, math.pi / 36.0, "dtheta") == 36


def test_geometry_nesting_is_validated():
    with pytest.raises(ConfigurationError):
        CavityGeometry(cavity_radius=100.0, cavity_half_height=200.0, capsule_radius=150.0,
                       leh_radius=50.0, capsule_dtheta=0.1, capsule_dphi=0.1, end_dr=10.0,
                       end_dphi=0.1, wall_dz=10.0, wall_dphi=0.1)


@pytest.mark.parametrize("name", preset_names())
def test_preset_element_counts_are_exact(name):
    settings = Config(preset=name, use_environment=False).settings
    model = assemble_cavity(CavityGeometry.from_settings(settings))
    assert model.size == EXPECTED_SIZES[name]


def test_source_lives_on_the_wall(toy_model):
    s0 = toy_model.primary_source
    wall = toy_model.region_ranges[Region.WALL]
    assert np.all(s0[:wall.start] == 0.0)
    assert np.count_nonzero(s0[wall.start:]) > 0
    assert np.all(s0 >= 0.0)


def test_beam_power_normalization(toy_model):
    params = SourceParams(spot_radius=250.0, beam_power=2.0)
    spec = build_source(toy_model, params)
    wall = toy_model.region_ranges[Region.WALL]
    deposited = float(np.dot(spec.s0[wall.start:wall.stop], toy_model.areas[wall.start:wall.stop]))
    assert deposited == pytest.approx(params.beams * 2.0)


def test_spot_missing_every_element_is_rejected(toy_model):
    with pytest.raises(ConfigurationError):
        build_source(toy_model, SourceParams(spot_radius=5.0))


def test_mesh_dump(toy_model, tmp_path):
    path = tmp_path / "mesh.csv"
    toy_model.dump_csv(path)
    rows = read_csv(path)
    assert len(rows) == 200
    assert rows[0]["region"] == "capsule" and rows[-1]["region"] == "wall"
