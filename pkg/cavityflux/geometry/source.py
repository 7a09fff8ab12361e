# cavityflux/geometry/source.py
"""Laser spot model: the primary source S0 deposited on the cavity wall."""

import logging
import math
from dataclasses import dataclass, field
from typing import TYPE_CHECKING, List, Literal, Optional

import numpy as np

from ..errors import ConfigurationError
from .mesh import Region

if TYPE_CHECKING:
    from ..utils.config import Settings
    from .mesh import CavityModel

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SourceParams:
    """
    Beam layout.

    Half of the beams enter through each hole. Beams from the top hole land on the ring
    ``z = +ring_fraction * h``, those from the bottom hole on ``z = -ring_fraction * h``;
    the bottom ring is rotated by ``azimuth_offset`` radians.
    """
    beams: int = 8
    ring_fraction: float = 0.45
    azimuth_offset: float = math.radians(45.0)
    spot_radius: float = 90.0
    beam_flux: float = 1.0
    beam_power: Optional[float] = None
    profile: Literal["uniform", "gaussian"] = "uniform"

    def __post_init__(self) -> None:
        if self.beams < 2 or self.beams % 2:
            raise ConfigurationError("beams must be a positive even number")
        if not 0.0 <= self.ring_fraction < 1.0:
            raise ConfigurationError("ring_fraction must lie in [0, 1)")
        if self.spot_radius <= 0:
            raise ConfigurationError("spot radius must be positive")
        if self.profile not in ("uniform", "gaussian"):
            raise ConfigurationError(f"unknown spot profile: {self.profile}")

    @classmethod
    def from_settings(cls, settings: "Settings") -> "SourceParams":
        src = settings.source
        return cls(
            beams=src.beams,
            ring_fraction=src.ring_fraction,
            azimuth_offset=math.radians(src.azimuth_offset_deg),
            spot_radius=src.spot_radius_um,
            beam_flux=src.beam_flux,
            beam_power=src.beam_power,
            profile=src.profile,
        )


@dataclass(frozen=True)
class Spot:
    """One elliptical footprint on the wall."""
    z: float
    phi: float
    a_phi: float
    a_z: float
    incidence: float


@dataclass
class SourceSpec:
    """Per-element primary flux plus the parameters it was built from."""
    s0: np.ndarray
    params: SourceParams = field(default_factory=SourceParams)
    spots: List[Spot] = field(default_factory=list)


def spot_layout(params: SourceParams, radius: float, half_height: float) -> List[Spot]:
    """Spot centres, semi-axes and incidence angles for every beam."""
    per_hole = params.beams // 2
    spots: List[Spot] = []
    for hole_z, ring_sign, offset in ((half_height, 1.0, 0.0),
                                      (-half_height, -1.0, params.azimuth_offset)):
        z_spot = ring_sign * params.ring_fraction * half_height
        # angle between the beam (from the hole centre) and the wall normal
        incidence = math.atan2(abs(hole_z - z_spot), radius)
        for k in range(per_hole):
            phi = (offset + 2.0 * math.pi * k / per_hole) % (2.0 * math.pi)
            spots.append(Spot(z=z_spot, phi=phi, a_phi=params.spot_radius,
                              a_z=params.spot_radius / math.cos(incidence),
                              incidence=incidence))
    return spots


def _spot_profile(rho2: np.ndarray, profile: str) -> np.ndarray:
    if profile == "uniform":
        return (rho2 <= 1.0).astype(float)
    return np.exp(-2.0 * rho2)


def build_source(model: "CavityModel", params: SourceParams) -> SourceSpec:
    """
    Deposit every beam's elliptical spot on the wall elements.

    Args:
        model: Assembled cavity (needs geometry and a wall region)
        params: Beam layout

    Returns:
        SourceSpec whose S0 is zero off the wall

    Raises:
        ConfigurationError: If a spot covers no wall element
    """
    if model.geometry is None or Region.WALL not in model.regions:
        raise ConfigurationError("a source needs a cavity with a wall")
    geometry = model.geometry
    wall = model.regions[Region.WALL]
    z = wall.centroids[:, 2]
    phi = wall.coords[:, 1]
    s0_wall = np.zeros(len(wall))
    spots = spot_layout(params, geometry.cavity_radius, geometry.cavity_half_height)

    for spot in spots:
        dphi = np.angle(np.exp(1j * (phi - spot.phi)))
        rho2 = (geometry.cavity_radius * dphi / spot.a_phi) ** 2 + ((z - spot.z) / spot.a_z) ** 2
        shape = _spot_profile(rho2, params.profile)
        if not np.any(shape > 0):
            raise ConfigurationError(
                f"beam spot at z={spot.z:.1f}, phi={math.degrees(spot.phi):.1f} deg "
                "covers no wall element; increase spot_radius or refine the wall mesh"
            )
        if params.beam_power is not None:
            deposited = float(np.dot(shape, wall.areas))
            s0_wall += params.beam_power * shape / deposited
        else:
            s0_wall += params.beam_flux * shape

    s0 = np.zeros(model.size)
    wall_range = model.region_ranges[Region.WALL]
    s0[wall_range.start:wall_range.stop] = s0_wall
    logger.info("Source: %d beams, %d lit wall elements, profile=%s",
                len(spots), int(np.count_nonzero(s0_wall)), params.profile)
    return SourceSpec(s0=s0, params=params, spots=spots)
