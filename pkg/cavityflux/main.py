# cavityflux/main.py
"""Command-line entry point for cavityflux."""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from . import __version__
from .errors import CavityFluxError, ConfigurationError
from .geometry.mesh import Region
from .geometry.viewfactor import kernel_asymmetry, row_sums
from .harness.analysis import capsule_asymmetry, sparsity_sweep
from .harness.pipeline import (
    BASELINES,
    compute_reference,
    prepare,
    run_pipeline,
    solve_baseline,
    solve_compressed,
)
from .harness.presets import preset_names
from .solvers.report import report_columns
from .utils.config import Config
from .utils.storage import save_matrix, write_csv, write_dict_csv, write_json

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_RUN_FAILED = 1
EXIT_CONFIG = 2


def _int_list(text: str) -> List[int]:
    try:
        return [int(part) for part in text.replace(" ", "").split(",") if part]
    except ValueError as error:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") \
            from error


def _name_list(text: str) -> List[str]:
    return [part.strip().lower() for part in text.split(",") if part.strip()]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cavityflux",
        description="Radiation flux in a cylinder-to-sphere cavity: dense and compressed solvers.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file")
    common.add_argument("--model", choices=preset_names(), help="named cavity model")
    common.add_argument("--solver", type=_name_list,
                        help="comma-separated solvers (nr, pcg, iht, niht, cgiht, sp, cgstp)")
    common.add_argument("--seeds", type=int, help="number of sampling seeds per greedy solver")
    common.add_argument("--out", help="output directory")
    common.add_argument("--cache-vf", dest="cache_vf", help="view-factor cache directory")
    common.add_argument("--k", type=_int_list, help="sparsity per region: capsule,top,bottom,wall")
    common.add_argument("--samples", type=_int_list,
                        help="sample counts per region: capsule,top,bottom,wall")
    common.add_argument("--log-level", dest="log_level", help="logging level")

    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("mesh", parents=[common], help="build the mesh and dump it as CSV")
    sub.add_parser("viewfactor", parents=[common],
                   help="assemble the full view-factor matrix and check it")
    sub.add_parser("solve", parents=[common], help="one run of the first listed solver")
    sub.add_parser("bench", parents=[common], help="every configured (solver, seed) run")
    sweep = sub.add_parser("sweep", parents=[common],
                           help="representation error against term count and sparsity")
    sweep.add_argument("--points", type=int, default=8, help="term counts per region")
    asym = sub.add_parser("asymmetry", parents=[common], help="capsule drive asymmetry")
    asym.add_argument("--terms", type=int, help="spherical harmonics in the capsule fit")
    return parser


def overrides_from_args(args: argparse.Namespace) -> Dict[str, Any]:
    """Section overrides for the flags that were given."""
    overrides: Dict[str, Any] = {}

    def put(section: str, key: str, value: Any) -> None:
        if value is not None:
            overrides.setdefault(section, {})[key] = value

    put("bench", "solvers", args.solver)
    put("bench", "seeds", args.seeds)
    put("bench", "out_dir", args.out)
    put("bench", "cache_dir", args.cache_vf)
    put("sampling", "sparsity", args.k)
    put("sampling", "samples", args.samples)
    put("app", "log_level", args.log_level)
    return overrides


def load_config(args: argparse.Namespace) -> Config:
    config = Config(config_file=args.config, preset=args.model)
    config.update(overrides_from_args(args))
    return config


def _out_dir(config: Config) -> Path:
    path = Path(config.settings.bench.out_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def cmd_mesh(config: Config) -> int:
    artifacts = prepare(config, need_full=False)
    model = artifacts.model
    out = _out_dir(config)
    model.dump_csv(out / "mesh.csv")
    write_csv(out / "source.csv", ["index", "s0"],
              ((i, float(v)) for i, v in enumerate(model.primary_source)))
    if artifacts.basis is not None:
        rows = [row for block in artifacts.basis.blocks for row in block.terms.csv_rows()]
        write_csv(out / "terms.csv", ["term", "family", "a", "b"], rows)
    counts = {r.label: len(rng) for r, rng in model.region_ranges.items()}
    logger.info("Mesh: %s, N = %d", counts, model.size)
    return EXIT_OK


def cmd_viewfactor(config: Config) -> int:
    artifacts = prepare(config, need_full=True)
    if artifacts.view is None:
        logger.error("View-factor assembly failed: %s", artifacts.view_error)
        return EXIT_RUN_FAILED
    view = artifacts.view
    out = _out_dir(config)
    save_matrix(out / "vf.bin", view)
    sums = row_sums(view)
    capsule = artifacts.model.region_ranges[Region.CAPSULE]
    stats = {
        "n": artifacts.model.size,
        "seconds": artifacts.t_viewfactor,
        "cached": artifacts.view_cached,
        "row_sum_min": float(sums.min()),
        "row_sum_max": float(sums.max()),
        "capsule_row_sum_max": float(sums[capsule.start:capsule.stop].max()),
        "kernel_asymmetry": kernel_asymmetry(view, artifacts.model.areas),
    }
    write_json(out / "viewfactor.json", stats)
    logger.info("View factors: row sums in [%.4f, %.4f], kernel asymmetry %.3e",
                stats["row_sum_min"], stats["row_sum_max"], stats["kernel_asymmetry"])
    return EXIT_OK


def cmd_solve(config: Config) -> int:
    settings = config.settings
    name = settings.bench.solvers[0]
    baseline = name in BASELINES
    artifacts = prepare(config, need_full=baseline)
    try:
        if baseline:
            result, report = solve_baseline(artifacts, name)
            flux = result.flux
        else:
            coef, report = solve_compressed(artifacts, name, settings.sampling.seed)
            assert artifacts.basis is not None
            flux = artifacts.basis.matvec(coef)
            write_csv(_out_dir(config) / f"coefficients-{name}.csv", ["term", "value"],
                      ((i, float(v)) for i, v in enumerate(coef)))
    except CavityFluxError as error:
        logger.error("%s failed: %s", name, error)
        return EXIT_RUN_FAILED
    out = _out_dir(config)
    write_csv(out / f"flux-{name}.csv", ["index", "flux"],
              ((i, float(v)) for i, v in enumerate(flux)))
    write_dict_csv(out / "reports.csv", [report.csv_row()], report_columns())
    write_json(out / "reports.json", [report.residual_log()])
    return EXIT_OK


def cmd_bench(config: Config) -> int:
    result = run_pipeline(config)
    return EXIT_RUN_FAILED if result.failures else EXIT_OK


def _sweep_grid(size: int, terms: int, points: int) -> List[int]:
    top = max(1, min(size, terms))
    grid = np.unique(np.linspace(1, top, max(points, 1)).round().astype(int))
    return [int(n) for n in grid]


def _reference(config: Config):
    artifacts = prepare(config, need_full=True)
    if artifacts.view is not None:
        compute_reference(artifacts)
    return artifacts


def cmd_sweep(config: Config, points: int) -> int:
    artifacts = _reference(config)
    if artifacts.reference is None:
        logger.error("Sweep needs a reference flux: %s",
                     artifacts.reference_error or artifacts.view_error)
        return EXIT_RUN_FAILED
    basis = config.settings.basis
    wanted = {Region.CAPSULE: basis.capsule_terms, Region.END_TOP: basis.end_face_terms,
              Region.END_BOTTOM: basis.end_face_terms, Region.WALL: basis.wall_terms}
    grid = {region: _sweep_grid(len(rng), wanted[region], points)
            for region, rng in artifacts.model.region_ranges.items()}
    try:
        curves = sparsity_sweep(artifacts.model, artifacts.reference, grid)
    except CavityFluxError as error:
        logger.error("Sweep failed: %s", error)
        return EXIT_RUN_FAILED
    out = _out_dir(config)
    write_dict_csv(out / "sweep.csv", curves.rows())
    write_dict_csv(out / "ranking.csv", curves.ranking_rows())
    write_json(out / "significant.json", {r.label: n for r, n in curves.significant.items()})
    return EXIT_OK


def cmd_asymmetry(config: Config, terms: Optional[int]) -> int:
    artifacts = _reference(config)
    if artifacts.reference is None:
        logger.error("Asymmetry needs a reference flux: %s",
                     artifacts.reference_error or artifacts.view_error)
        return EXIT_RUN_FAILED
    capsule_size = len(artifacts.model.region_ranges[Region.CAPSULE])
    count = min(terms or config.settings.basis.capsule_terms, capsule_size)
    try:
        metrics = capsule_asymmetry(artifacts.model, artifacts.reference, count)
    except CavityFluxError as error:
        logger.error("Asymmetry failed: %s", error)
        return EXIT_RUN_FAILED
    out = _out_dir(config)
    write_dict_csv(out / "asymmetry.csv", metrics.rows())
    write_json(out / "asymmetry.json", {
        "max_asymmetry": metrics.max_asymmetry,
        "degree_energy": {str(k): v for k, v in sorted(metrics.degree_energy.items())},
    })
    logger.info("Capsule drive asymmetry: %.3f%%", 100 * metrics.max_asymmetry)
    return EXIT_OK


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main entry point for the application."""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except ConfigurationError as error:
        logging.basicConfig(level=logging.ERROR)
        logger.error("%s", error)
        return EXIT_CONFIG
    config.configure_logging()

    try:
        if args.command == "mesh":
            return cmd_mesh(config)
        if args.command == "viewfactor":
            return cmd_viewfactor(config)
        if args.command == "solve":
            return cmd_solve(config)
        if args.command == "bench":
            return cmd_bench(config)
        if args.command == "sweep":
            return cmd_sweep(config, args.points)
        return cmd_asymmetry(config, args.terms)
    except ConfigurationError as error:
        logger.error("%s", error)
        return EXIT_CONFIG
    except CavityFluxError as error:
        logger.error("%s", error)
        return EXIT_RUN_FAILED


if __name__ == "__main__":
    sys.exit(main())
