# cavityflux/harness/__init__.py
"""Model presets and result analysis. The end-to-end runner lives in ``harness.pipeline``."""

from .analysis import (
    AsymmetryMetrics,
    SweepCurves,
    asymmetry_metrics,
    capsule_asymmetry,
    capsule_rmse,
    fit_region,
    representation_error,
    rmse,
    significant_count,
    sparsity_sweep,
    speedup_table,
    summarize_reports,
)
from .presets import EXPECTED_SIZES, PRESETS, preset_names, preset_settings

__all__ = [
    "EXPECTED_SIZES",
    "PRESETS",
    "AsymmetryMetrics",
    "SweepCurves",
    "asymmetry_metrics",
    "capsule_asymmetry",
    "capsule_rmse",
    "fit_region",
    "preset_names",
    "preset_settings",
    "representation_error",
    "rmse",
    "significant_count",
    "sparsity_sweep",
    "speedup_table",
    "summarize_reports",
]
