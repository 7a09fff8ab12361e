# cavityflux/sampling.py
"""Measurement rows: per-region sample counts and stratified (Latin hypercube) draws."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Union

import numpy as np

from .errors import ConfigurationError, DimensionError
from .geometry.mesh import CavityModel, Region
from .utils.storage import read_csv, write_csv

logger = logging.getLogger(__name__)


def sample_count(sparsity: int, size: int, floor_override: Optional[int] = None) -> int:
    """
    ceil(s * log10(N)), raised to ``floor_override`` when that is larger.

    The result never exceeds the region size.
    """
    if sparsity < 1 or size < 2:
        raise ConfigurationError("sample_count needs sparsity >= 1 and a region of 2+ elements")
    count = math.ceil(sparsity * math.log10(size))
    if floor_override is not None:
        count = max(count, floor_override)
    return min(count, size)


def lhs_indices(size: int, count: int, rng: np.random.Generator) -> np.ndarray:
    """
    One uniformly drawn index from each of ``count`` integer strata of [0, size).

    Stratum k is [floor(k size / count), floor((k+1) size / count)).

    Raises:
        ConfigurationError: If count exceeds size or is negative
    """
    if count < 0 or count > size:
        raise ConfigurationError(f"cannot draw {count} distinct samples from {size} elements")
    if count == 0:
        return np.zeros(0, dtype=np.int64)
    edges = (np.arange(count + 1, dtype=np.int64) * size) // count
    return rng.integers(edges[:-1], edges[1:]).astype(np.int64)


@dataclass(frozen=True)
class SamplePlan:
    """Sorted, distinct global row indices with their per-region split."""
    indices: np.ndarray
    counts: Dict[Region, int]
    local: Dict[Region, np.ndarray]
    seed: int
    size: int

    @property
    def total(self) -> int:
        return int(self.indices.size)

    @property
    def rate(self) -> float:
        return self.total / self.size if self.size else 0.0

    def to_csv(self, path: Union[str, Path], model: CavityModel) -> None:
        """Write (region, local index, global index) rows."""
        rows = []
        for region, local in self.local.items():
            start = model.region_ranges[region].start
            rows.extend((region.label, int(i), int(i) + start) for i in local)
        write_csv(path, ["region", "local_index", "global_index"], rows)

    @classmethod
    def from_csv(cls, path: Union[str, Path], model: CavityModel, seed: int = -1) -> "SamplePlan":
        """Read a plan written by :meth:`to_csv` and check it against ``model``."""
        local: Dict[Region, List[int]] = {r: [] for r in model.region_ranges}
        for record in read_csv(path):
            region = Region.from_label(record["region"])
            index = int(record["local_index"])
            if region not in model.region_ranges:
                raise DimensionError(f"plan references missing region {region.label}")
            rng = model.region_ranges[region]
            if not 0 <= index < len(rng) or rng.start + index != int(record["global_index"]):
                raise DimensionError(f"plan row {record} does not match the model")
            local[region].append(index)
        return _assemble(model, {r: np.sort(np.array(v, dtype=np.int64))
                                 for r, v in local.items()}, seed)


def _assemble(model: CavityModel, local: Dict[Region, np.ndarray], seed: int) -> SamplePlan:
    parts = []
    for region, idx in local.items():
        if np.unique(idx).size != idx.size:
            raise DimensionError(f"duplicate sample indices in {region.label}")
        parts.append(idx + model.region_ranges[region].start)
    indices = np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)
    return SamplePlan(indices=indices, counts={r: int(v.size) for r, v in local.items()},
                      local=local, seed=seed, size=model.size)


def build_plan(model: CavityModel, sparsity: Sequence[int],
               overrides: Optional[Sequence[Optional[int]]] = None, seed: int = 0) -> SamplePlan:
    """
    Stratified sample plan over every region.

    Args:
        model: Cavity model
        sparsity: Per-region sparsity estimates in region order
        overrides: Per-region minimum counts (None entries keep the heuristic)
        seed: Seed; region r draws from ``default_rng([seed, r])``

    Returns:
        SamplePlan with sorted global indices
    """
    regions = list(model.region_ranges)
    if len(sparsity) != len(regions):
        raise ConfigurationError(f"expected {len(regions)} sparsity values, got {len(sparsity)}")
    if overrides is not None and len(overrides) != len(regions):
        raise ConfigurationError(f"expected {len(regions)} sample overrides, got {len(overrides)}")
    local: Dict[Region, np.ndarray] = {}
    for position, region in enumerate(regions):
        size = len(model.region_ranges[region])
        floor = overrides[position] if overrides is not None else None
        count = sample_count(int(sparsity[position]), size, floor)
        rng = np.random.default_rng([seed, int(region)])
        local[region] = lhs_indices(size, count, rng)
    plan = _assemble(model, local, seed)
    logger.info("Sample plan (seed %d): %s -> %d rows, rate %.1f%%", seed,
                {r.label: c for r, c in plan.counts.items()}, plan.total, 100 * plan.rate)
    return plan


def full_plan(model: CavityModel) -> SamplePlan:
    """Every element sampled."""
    local = {r: np.arange(len(rng), dtype=np.int64) for r, rng in model.region_ranges.items()}
    return _assemble(model, local, seed=-1)
