# cavityflux/harness/presets.py
"""
Named cavity models.

Each preset is a set of section overrides on top of the default settings. Counts are pinned
explicitly (rings, rows, azimuthal cells) so every preset reproduces its element total exactly:

    s2-1   2592 + 2 x 2016 + 3152   =  9776
    s2-2  10368 + 2 x 8064 + 12456  = 38952
    s3-1   2592 + 2 x 4320 + 9504   = 20736
    s3-2  10368 + 2 x 17280 + 38016 = 82944

Sample counts are floors on the s log10(N) rule and give 850, 900, 800 and 950 rows. The S3
models use a wall sparsity of 85 so the rule stays below their wall floors (350 and 400 rows).
Keeping the wall at K = 100 there is a plain override (``--k 30,35,35,100``); the rule then
wins on the wall and the totals grow to 848 (s3-1) and 1008 (s3-2) rows.
"""

import copy
from typing import Any, Dict

from ..errors import ConfigurationError

_S2_GEOMETRY = {
    "cavity_radius_um": 400.0,
    "cavity_half_height_um": 850.0,
    "capsule_radius_um": 120.0,
    "leh_radius_um": 190.0,
}

_S3_GEOMETRY = {
    "cavity_radius_um": 700.0,
    "cavity_half_height_um": 1980.0,
    "capsule_radius_um": 230.0,
    "leh_radius_um": 250.0,
}

PRESETS: Dict[str, Dict[str, Any]] = {
    "s2-1": {
        "geometry": _S2_GEOMETRY,
        "mesh": {
            "capsule_dtheta_deg": 5.0, "capsule_dphi_deg": 5.0,
            "end_dr_um": 15.0, "end_dphi_deg": 2.5, "end_rings": 14,
            "wall_dz_um": None, "wall_dphi_deg": 5.0,
            "wall_rows": 44, "wall_azimuth": 72, "wall_guard_azimuth": 64,
        },
        "sampling": {"samples": (150, 150, 150, 400)},
    },
    "s2-2": {
        "geometry": _S2_GEOMETRY,
        "mesh": {
            "capsule_dtheta_deg": 2.5, "capsule_dphi_deg": 2.5,
            "end_dr_um": 7.5, "end_dphi_deg": 1.25, "end_rings": 28,
            "wall_dz_um": None, "wall_dphi_deg": 5.0,
            "wall_rows": 173, "wall_azimuth": 72, "wall_guard_azimuth": None,
        },
        "sampling": {"samples": (150, 150, 150, 450)},
    },
    "s3-1": {
        "geometry": _S3_GEOMETRY,
        "mesh": {
            "capsule_dtheta_deg": 5.0, "capsule_dphi_deg": 5.0,
            "end_dr_um": 15.0, "end_dphi_deg": 2.5, "end_rings": 30,
            "wall_dz_um": 30.0, "wall_dphi_deg": 5.0,
            "wall_rows": 132, "wall_azimuth": 72, "wall_guard_azimuth": None,
        },
        "sampling": {"samples": (150, 150, 150, 350), "sparsity": (30, 35, 35, 85)},
    },
    "s3-2": {
        "geometry": _S3_GEOMETRY,
        "mesh": {
            "capsule_dtheta_deg": 2.5, "capsule_dphi_deg": 2.5,
            "end_dr_um": 7.5, "end_dphi_deg": 1.25, "end_rings": 60,
            "wall_dz_um": 15.0, "wall_dphi_deg": 2.5,
            "wall_rows": 264, "wall_azimuth": 144, "wall_guard_azimuth": None,
        },
        "sampling": {"samples": (150, 200, 200, 400), "sparsity": (30, 35, 35, 85)},
    },
}

EXPECTED_SIZES = {"s2-1": 9776, "s2-2": 38952, "s3-1": 20736, "s3-2": 82944}


def preset_names():
    return sorted(PRESETS)


def preset_settings(name: str) -> Dict[str, Any]:
    """
    Section overrides of a named model.

    Raises:
        ConfigurationError: If the name is unknown
    """
    key = name.strip().lower()
    if key not in PRESETS:
        raise ConfigurationError(f"unknown model {name!r}; choose from {preset_names()}")
    data = copy.deepcopy(PRESETS[key])
    for key in ("samples", "sparsity"):
        if key in data["sampling"]:
            data["sampling"][key] = list(data["sampling"][key])
    return data
