# tests/test_pipeline.py

import json

import numpy as np
import pytest

from cavityflux.harness.pipeline import prepare, run_jobs, run_pipeline
from cavityflux.main import EXIT_CONFIG, EXIT_OK, main
from cavityflux.utils.config import Config
from cavityflux.utils.storage import load_matrix, read_csv

TOY_SIZE = 200


def test_job_order(toy_config):
    assert run_jobs(toy_config) == [("nr", None), ("pcg", None), ("cgiht", 0), ("cgiht", 1),
                                    ("sp", 0), ("sp", 1), ("cgstp", 0), ("cgstp", 1)]


def test_view_factor_cache(toy_config, tmp_path):
    first = prepare(toy_config, cache_dir=tmp_path)
    second = prepare(toy_config, cache_dir=tmp_path)
    assert not first.view_cached and second.view_cached
    np.testing.assert_array_equal(first.view, second.view)
    assert (tmp_path / f"vf-{toy_config.geometry_hash()}.bin").exists()


def test_bench_on_toy_cavity(toy_config, tmp_path):
    result = run_pipeline(toy_config, out_dir=tmp_path)
    assert len(result.reports) == 8
    by_run = {(r.solver, r.seed): r for r in result.reports}
    for key in [("nr", None), ("pcg", None), ("sp", 0), ("sp", 1), ("cgstp", 0), ("cgstp", 1)]:
        assert by_run[key].status == "ok", by_run[key].message
    assert by_run[("nr", None)].rmse == 0.0
    assert by_run[("pcg", None)].rmse < 1e-6
    cgstp = by_run[("cgstp", 0)]
    assert cgstp.model == "toy" and cgstp.m == 136 and cgstp.n == TOY_SIZE
    assert cgstp.rmse is not None and len(cgstp.error_history) == len(cgstp.residuals)

    rows = read_csv(tmp_path / "reports.csv")
    assert [row["solver"] for row in rows][:2] == ["nr", "pcg"]
    assert len(rows) == 8
    assert len(json.loads((tmp_path / "reports.json").read_text())) == 8
    assert (tmp_path / "summary.csv").exists()
    assert read_csv(tmp_path / "speedup.csv")[0]["model"] == "toy"
    assert len(read_csv(tmp_path / "flux" / "nr.csv")) == TOY_SIZE
    assert len(read_csv(tmp_path / "flux" / "cgstp-0.csv")) == TOY_SIZE
    assert (tmp_path / "curves" / "error-cgstp-1.csv").exists()
    assert len(read_csv(tmp_path / "curves" / "coefficients-sp-0.csv")) == 37


def test_runs_continue_without_full_view_factors(toy_settings):
    # room for the 136 sampled rows but not for the full 200 x 200 matrix
    toy_settings["bench"].update({"max_matrix_gib": 250_000 / 2 ** 30,
                                  "solvers": ["nr", "cgstp"], "seeds": 1})
    result = run_pipeline(Config.from_dict(toy_settings))
    statuses = {r.solver: r for r in result.reports}
    assert statuses["nr"].status == "failed"
    assert "CapacityError" in statuses["nr"].message
    assert statuses["cgstp"].status == "ok"
    assert statuses["cgstp"].rmse is None
    assert result.failures == 1


@pytest.fixture
def config_file(toy_settings, tmp_path):
    settings = toy_settings
    settings["bench"]["out_dir"] = str(tmp_path / "out")
    path = tmp_path / "toy.json"
    path.write_text(json.dumps(settings))
    return path


def test_cli_mesh_and_viewfactor(config_file, tmp_path):
    assert main(["mesh", "--config", str(config_file)]) == EXIT_OK
    assert len(read_csv(tmp_path / "out" / "mesh.csv")) == TOY_SIZE
    assert len(read_csv(tmp_path / "out" / "terms.csv")) == 37
    assert main(["viewfactor", "--config", str(config_file)]) == EXIT_OK
    assert load_matrix(tmp_path / "out" / "vf.bin").shape == (TOY_SIZE, TOY_SIZE)
    stats = json.loads((tmp_path / "out" / "viewfactor.json").read_text())
    assert stats["n"] == TOY_SIZE and stats["kernel_asymmetry"] < 1e-9


def test_cli_solve_and_bench(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["solve", "--config", str(config_file), "--solver", "cgstp"]) == EXIT_OK
    assert len(read_csv(out / "flux-cgstp.csv")) == TOY_SIZE
    assert len(read_csv(out / "coefficients-cgstp.csv")) == 37
    assert main(["bench", "--config", str(config_file), "--solver", "nr,sp", "--seeds", "1",
                 "--out", str(tmp_path / "bench")]) == EXIT_OK
    assert [row["solver"] for row in read_csv(tmp_path / "bench" / "reports.csv")] == ["nr", "sp"]


def test_cli_analysis_commands(config_file, tmp_path):
    out = tmp_path / "out"
    assert main(["asymmetry", "--config", str(config_file), "--terms", "4"]) == EXIT_OK
    assert len(read_csv(out / "asymmetry.csv")) == 4
    assert main(["sweep", "--config", str(config_file), "--points", "3"]) == EXIT_OK
    assert set(json.loads((out / "significant.json").read_text())) == {
        "capsule", "top", "bottom", "wall"}


@pytest.mark.parametrize("extra", [
    ["--k", "1,2"],
    ["--solver", "gmres"],
    ["--seeds", "0"],
])
def test_cli_configuration_errors(config_file, extra):
    assert main(["bench", "--config", str(config_file)] + extra) == EXIT_CONFIG


def test_cli_missing_config_file(tmp_path):
    assert main(["mesh", "--config", str(tmp_path / "missing.json")]) == EXIT_CONFIG


@pytest.mark.parametrize("material", [{"beta": 0.5}, {"t": -1.0}])
def test_cli_rejects_invalid_material(toy_settings, tmp_path, material):
    toy_settings["material"] = material
    path = tmp_path / "material.json"
    path.write_text(json.dumps(toy_settings))
    assert main(["mesh", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


def test_repeated_runs_agree(toy_settings, tmp_path):
    toy_settings["bench"].update({"solvers": ["nr", "sp", "cgstp"], "seeds": 2})
    first = run_pipeline(Config.from_dict(toy_settings), out_dir=tmp_path / "a")
    second = run_pipeline(Config.from_dict(toy_settings), out_dir=tmp_path / "b")
    exact = ["solver", "seed", "status", "m", "k", "outer_iterations", "inner_iterations",
             "clamp_events", "damping_events"]
    rows_a = read_csv(tmp_path / "a" / "reports.csv")
    rows_b = read_csv(tmp_path / "b" / "reports.csv")
    assert [[row[c] for c in exact] for row in rows_a] == [[row[c] for c in exact]
                                                           for row in rows_b]
    for a, b in zip(first.reports, second.reports):
        np.testing.assert_allclose(b.residuals, a.residuals, rtol=1e-8, atol=1e-14)
    assert first.fluxes.keys() == second.fluxes.keys()
    for key, flux in first.fluxes.items():
        np.testing.assert_allclose(second.fluxes[key], flux, rtol=1e-10)
    for key, coef in first.coefficients.items():
        np.testing.assert_array_equal(np.flatnonzero(second.coefficients[key]),
                                      np.flatnonzero(coef))
