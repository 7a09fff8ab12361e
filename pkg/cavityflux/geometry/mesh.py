# cavityflux/geometry/mesh.py
"""
Surface meshes of the cylinder-to-sphere cavity.

The cavity is centred on the origin with its axis along z. The capsule is a sphere at the
origin, the end faces are annuli at z = +h (top) and z = -h (bottom) pierced by the laser
entrance holes, and the wall is the cylinder of radius R between them. Every element stores
its centroid, interior-facing normal, area, intrinsic coordinates, a 2x2 sub-patch split and
a diameter used by the view-factor near-pair rule.
"""

import logging
import math
from dataclasses import dataclass, field
from enum import IntEnum
from functools import cached_property
from pathlib import Path
from typing import TYPE_CHECKING, Dict, Iterator, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..errors import ConfigurationError
from ..utils.storage import write_csv

if TYPE_CHECKING:
    from ..utils.config import Settings
    from .source import SourceParams, SourceSpec

logger = logging.getLogger(__name__)

_DIVIDE_RTOL = 1e-9


class Region(IntEnum):
    """Radiation regions in element order."""
    CAPSULE = 0
    END_TOP = 1
    END_BOTTOM = 2
    WALL = 3

    @property
    def label(self) -> str:
        return _REGION_LABELS[self]

    @classmethod
    def from_label(cls, label: str) -> "Region":
        for region, name in _REGION_LABELS.items():
            if name == label:
                return region
        raise ValueError(f"unknown region label: {label}")


_REGION_LABELS = {
    Region.CAPSULE: "capsule",
    Region.END_TOP: "top",
    Region.END_BOTTOM: "bottom",
    Region.WALL: "wall",
}


@dataclass(frozen=True)
class SurfaceElement:
    """One mesh patch."""
    centroid: np.ndarray
    normal: np.ndarray
    area: float
    region: Region
    coords: Tuple[float, float]
    sub_centroids: np.ndarray
    sub_normals: np.ndarray
    sub_areas: np.ndarray
    diameter: float


@dataclass(frozen=True)
class RegionMesh:
    """
    Structure-of-arrays mesh for one region.

    Indexing returns :class:`SurfaceElement` views so the mesh also behaves as a sequence of
    elements.
    """
    region: Region
    centroids: np.ndarray       # (n, 3)
    normals: np.ndarray         # (n, 3)
    areas: np.ndarray           # (n,)
    coords: np.ndarray          # (n, 2)
    sub_centroids: np.ndarray   # (n, 4, 3)
    sub_normals: np.ndarray     # (n, 4, 3)
    sub_areas: np.ndarray       # (n, 4)
    diameters: np.ndarray       # (n,)
    shape: Tuple[int, ...] = ()

    def __len__(self) -> int:
        return int(self.areas.shape[0])

    def __getitem__(self, index: int) -> SurfaceElement:
        return SurfaceElement(
            centroid=self.centroids[index],
            normal=self.normals[index],
            area=float(self.areas[index]),
            region=self.region,
            coords=(float(self.coords[index, 0]), float(self.coords[index, 1])),
            sub_centroids=self.sub_centroids[index],
            sub_normals=self.sub_normals[index],
            sub_areas=self.sub_areas[index],
            diameter=float(self.diameters[index]),
        )

    def __iter__(self) -> Iterator[SurfaceElement]:
        for index in range(len(self)):
            yield self[index]

    @property
    def total_area(self) -> float:
        return float(self.areas.sum())


def divide_count(span: float, step: float, name: str) -> int:
    """Number of cells of width ``step`` in ``span``; rejects steps that do not divide evenly."""
    if step <= 0 or not math.isfinite(step):
        raise ConfigurationError(f"{name} must be strictly positive, got {step}")
    count = int(round(span / step))
    if count < 1 or abs(count * step - span) > _DIVIDE_RTOL * span:
        raise ConfigurationError(f"{name}={step:g} does not evenly divide {span:g}")
    return count


def _angular_count(step: Optional[float], count: Optional[int], span: float, name: str) -> int:
    if count is not None:
        if count < 1:
            raise ConfigurationError(f"{name} count must be positive, got {count}")
        return count
    if step is None:
        raise ConfigurationError(f"{name}: neither a resolution nor a count was given")
    return divide_count(span, step, name)


def _pair_offsets(du: float, dv: float) -> Tuple[np.ndarray, np.ndarray]:
    """Parametric offsets of the 2x2 sub-patch centres, ordered (-,-), (-,+), (+,-), (+,+)."""
    su = np.array([-0.25, -0.25, 0.25, 0.25]) * du
    sv = np.array([-0.25, 0.25, -0.25, 0.25]) * dv
    return su, sv


def build_capsule_mesh(radius: float, dtheta: float, dphi: float,
                       outward: bool = True) -> RegionMesh:
    """
    Latitude-longitude mesh of a sphere centred at the origin.

    Args:
        radius: Sphere radius
        dtheta: Polar resolution in radians, must divide pi
        dphi: Azimuthal resolution in radians, must divide 2*pi
        outward: Normals point away from the centre (capsule) or towards it (enclosure)

    Returns:
        RegionMesh with n_theta * n_phi elements, theta-major
    """
    if radius <= 0:
        raise ConfigurationError("capsule radius must be positive")
    n_theta = divide_count(math.pi, dtheta, "capsule dtheta")
    n_phi = divide_count(2.0 * math.pi, dphi, "capsule dphi")
    dtheta = math.pi / n_theta
    dphi = 2.0 * math.pi / n_phi

    theta = (np.arange(n_theta) + 0.5) * dtheta
    phi = (np.arange(n_phi) + 0.5) * dphi
    tt, pp = np.meshgrid(theta, phi, indexing="ij")
    tt = tt.ravel()
    pp = pp.ravel()
    sign = 1.0 if outward else -1.0

    def unit(t: np.ndarray, p: np.ndarray) -> np.ndarray:
        return np.stack([np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1)

    direction = unit(tt, pp)
    su, sv = _pair_offsets(dtheta, dphi)
    sub_t = tt[:, None] + su[None, :]
    sub_p = pp[:, None] + sv[None, :]
    sub_dir = unit(sub_t, sub_p)
    upper = np.maximum(np.sin(tt - 0.5 * dtheta), np.sin(tt + 0.5 * dtheta))

    mesh = RegionMesh(
        region=Region.CAPSULE,
        centroids=radius * direction,
        normals=sign * direction,
        areas=radius ** 2 * np.sin(tt) * dtheta * dphi,
        coords=np.stack([tt, pp], axis=-1),
        sub_centroids=radius * sub_dir,
        sub_normals=sign * sub_dir,
        sub_areas=radius ** 2 * np.sin(sub_t) * (0.5 * dtheta) * (0.5 * dphi),
        diameters=radius * np.sqrt(dtheta ** 2 + (upper * dphi) ** 2),
        shape=(n_theta, n_phi),
    )
    logger.debug("Capsule mesh: %d x %d = %d elements", n_theta, n_phi, len(mesh))
    return mesh


def build_enclosure_mesh(radius: float, dtheta: float, dphi: float) -> RegionMesh:
    """Sphere mesh seen from inside (normals towards the centre)."""
    return build_capsule_mesh(radius, dtheta, dphi, outward=False)


def build_end_face_mesh(outer_r: float, hole_r: float, dr: Optional[float], dphi: Optional[float],
                        side: Union[str, Region], half_height: float = 0.0,
                        rings: Optional[int] = None, azimuth: Optional[int] = None) -> RegionMesh:
    """
    Ring-by-ring annular mesh of one end face.

    The top face sits at ``z = +half_height`` with normal -z, the bottom face at
    ``z = -half_height`` with normal +z. Stored coordinates are (r / outer_r, phi), so the
    radial coordinate spans [hole_r / outer_r, 1].
    """
    region = _end_region(side)
    if outer_r <= 0:
        raise ConfigurationError("end-face outer radius must be positive")
    if not 0.0 <= hole_r < outer_r:
        raise ConfigurationError(f"hole radius {hole_r} must lie in [0, {outer_r})")
    width = outer_r - hole_r
    n_r = rings if rings is not None else divide_count(width, dr or 0.0, "end-face dr")
    if n_r < 1:
        raise ConfigurationError("end-face ring count must be positive")
    n_phi = _angular_count(dphi, azimuth, 2.0 * math.pi, "end-face dphi")
    dr = width / n_r
    dphi = 2.0 * math.pi / n_phi

    rc = hole_r + (np.arange(n_r) + 0.5) * dr
    phi = (np.arange(n_phi) + 0.5) * dphi
    rr, pp = np.meshgrid(rc, phi, indexing="ij")
    rr = rr.ravel()
    pp = pp.ravel()
    n = rr.size

    if region is Region.END_TOP:
        z, nz = half_height, -1.0
    else:
        z, nz = -half_height, 1.0

    su, sv = _pair_offsets(dr, dphi)
    sub_r = rr[:, None] + su[None, :]
    sub_p = pp[:, None] + sv[None, :]
    sub_c = np.stack([sub_r * np.cos(sub_p), sub_r * np.sin(sub_p), np.full_like(sub_r, z)],
                     axis=-1)
    normal = np.tile(np.array([0.0, 0.0, nz]), (n, 1))

    mesh = RegionMesh(
        region=region,
        centroids=np.stack([rr * np.cos(pp), rr * np.sin(pp), np.full(n, z)], axis=-1),
        normals=normal,
        areas=rr * dr * dphi,
        coords=np.stack([rr / outer_r, pp], axis=-1),
        sub_centroids=sub_c,
        sub_normals=np.repeat(normal[:, None, :], 4, axis=1),
        sub_areas=sub_r * (0.5 * dr) * (0.5 * dphi),
        diameters=np.sqrt(dr ** 2 + ((rr + 0.5 * dr) * dphi) ** 2),
        shape=(n_r, n_phi),
    )
    logger.debug("%s end face: %d rings x %d = %d elements", region.label, n_r, n_phi, n)
    return mesh


def _end_region(side: Union[str, Region]) -> Region:
    if isinstance(side, Region):
        if side not in (Region.END_TOP, Region.END_BOTTOM):
            raise ConfigurationError(f"{side} is not an end face")
        return side
    if side == "top":
        return Region.END_TOP
    if side == "bottom":
        return Region.END_BOTTOM
    raise ConfigurationError(f"end-face side must be 'top' or 'bottom', got {side!r}")


def build_wall_mesh(radius: float, half_height: float, dz: Optional[float],
                    dphi: Optional[float], rows: Optional[int] = None,
                    azimuth: Optional[int] = None,
                    guard_azimuth: Optional[int] = None) -> RegionMesh:
    """
    Mesh of the cylindrical wall, rows ordered from z = -h upwards.

    ``guard_azimuth`` gives the first and last rows (the ones touching the end faces) their own
    azimuthal count; every other row uses the regular count.

    Returns:
        RegionMesh with inward radial normals and coordinates (z / h, phi)
    """
    if radius <= 0 or half_height <= 0:
        raise ConfigurationError("wall radius and half-height must be positive")
    height = 2.0 * half_height
    n_z = rows if rows is not None else divide_count(height, dz or 0.0, "wall dz")
    if n_z < 1:
        raise ConfigurationError("wall row count must be positive")
    n_phi = _angular_count(dphi, azimuth, 2.0 * math.pi, "wall dphi")
    if guard_azimuth is not None and guard_azimuth < 1:
        raise ConfigurationError("guard azimuth count must be positive")
    dz = height / n_z

    row_counts = [n_phi] * n_z
    if guard_azimuth is not None and n_z >= 2:
        row_counts[0] = row_counts[-1] = guard_azimuth

    zs: List[np.ndarray] = []
    ps: List[np.ndarray] = []
    dps: List[np.ndarray] = []
    for row, count in enumerate(row_counts):
        step = 2.0 * math.pi / count
        zs.append(np.full(count, -half_height + (row + 0.5) * dz))
        ps.append((np.arange(count) + 0.5) * step)
        dps.append(np.full(count, step))
    zc = np.concatenate(zs)
    pp = np.concatenate(ps)
    dp = np.concatenate(dps)

    radial = np.stack([np.cos(pp), np.sin(pp), np.zeros_like(pp)], axis=-1)
    su = np.array([-0.25, -0.25, 0.25, 0.25])[None, :] * dz
    sv = np.array([-0.25, 0.25, -0.25, 0.25])[None, :] * dp[:, None]
    sub_z = zc[:, None] + su
    sub_p = pp[:, None] + sv
    sub_radial = np.stack([np.cos(sub_p), np.sin(sub_p), np.zeros_like(sub_p)], axis=-1)
    sub_c = radius * sub_radial
    sub_c[..., 2] = sub_z

    centroids = radius * radial
    centroids[:, 2] = zc
    mesh = RegionMesh(
        region=Region.WALL,
        centroids=centroids,
        normals=-radial,
        areas=radius * dp * dz,
        coords=np.stack([zc / half_height, pp], axis=-1),
        sub_centroids=sub_c,
        sub_normals=-sub_radial,
        sub_areas=radius * (0.5 * dp)[:, None] * (0.5 * dz) * np.ones((1, 4)),
        diameters=np.sqrt(dz ** 2 + (radius * dp) ** 2),
        shape=(n_z, n_phi),
    )
    logger.debug("Wall mesh: %d rows, %d elements", n_z, len(mesh))
    return mesh


@dataclass(frozen=True)
class CavityGeometry:
    """Physical dimensions (micrometres) and resolutions (radians / micrometres)."""
    cavity_radius: float
    cavity_half_height: float
    capsule_radius: float
    leh_radius: float
    capsule_dtheta: float
    capsule_dphi: float
    end_dr: Optional[float]
    end_dphi: float
    wall_dz: Optional[float]
    wall_dphi: float
    end_rings: Optional[int] = None
    wall_rows: Optional[int] = None
    wall_azimuth: Optional[int] = None
    wall_guard_azimuth: Optional[int] = None

    def __post_init__(self) -> None:
        if not 0 < self.capsule_radius < self.cavity_radius:
            raise ConfigurationError("capsule radius must lie in (0, cavity radius)")
        if not 0 <= self.leh_radius < self.cavity_radius:
            raise ConfigurationError("LEH radius must lie in [0, cavity radius)")
        if self.capsule_radius >= self.cavity_half_height:
            raise ConfigurationError("capsule must fit between the end faces")

    @property
    def hole_ratio(self) -> float:
        """Inner-radius ratio of the annular end faces."""
        return self.leh_radius / self.cavity_radius

    @classmethod
    def from_settings(cls, settings: "Settings") -> "CavityGeometry":
        geo = settings.geometry
        mesh = settings.mesh
        return cls(
            cavity_radius=geo.cavity_radius_um,
            cavity_half_height=geo.cavity_half_height_um,
            capsule_radius=geo.capsule_radius_um,
            leh_radius=geo.leh_radius_um,
            capsule_dtheta=math.radians(mesh.capsule_dtheta_deg),
            capsule_dphi=math.radians(mesh.capsule_dphi_deg),
            end_dr=mesh.end_dr_um,
            end_dphi=math.radians(mesh.end_dphi_deg),
            wall_dz=mesh.wall_dz_um,
            wall_dphi=math.radians(mesh.wall_dphi_deg),
            end_rings=mesh.end_rings,
            wall_rows=mesh.wall_rows,
            wall_azimuth=mesh.wall_azimuth,
            wall_guard_azimuth=mesh.wall_guard_azimuth,
        )


@dataclass
class CavityModel:
    """
    The full cavity: region meshes in the fixed order capsule, top, bottom, wall.

    Global arrays are concatenations of the region arrays; ``region_ranges`` maps each region
    to its contiguous index range. ``occluder`` is the blocking sphere (centre, radius), or None
    for an enclosure without one.
    """
    regions: Dict[Region, RegionMesh]
    geometry: Optional[CavityGeometry] = None
    source: Optional["SourceSpec"] = None
    occluder: Optional[Tuple[np.ndarray, float]] = None
    region_ranges: Dict[Region, range] = field(init=False)

    def __post_init__(self) -> None:
        start = 0
        ranges: Dict[Region, range] = {}
        for region in Region:
            mesh = self.regions.get(region)
            if mesh is None:
                continue
            ranges[region] = range(start, start + len(mesh))
            start += len(mesh)
        self.region_ranges = ranges

    def __len__(self) -> int:
        return self.size

    @property
    def size(self) -> int:
        return sum(len(r) for r in self.region_ranges.values())

    def ordered_meshes(self) -> List[RegionMesh]:
        return [self.regions[r] for r in Region if r in self.regions]

    def _concat(self, name: str) -> np.ndarray:
        return np.concatenate([getattr(m, name) for m in self.ordered_meshes()], axis=0)

    @cached_property
    def centroids(self) -> np.ndarray:
        return self._concat("centroids")

    @cached_property
    def normals(self) -> np.ndarray:
        return self._concat("normals")

    @cached_property
    def areas(self) -> np.ndarray:
        return self._concat("areas")

    @cached_property
    def coords(self) -> np.ndarray:
        return self._concat("coords")

    @cached_property
    def sub_centroids(self) -> np.ndarray:
        return self._concat("sub_centroids")

    @cached_property
    def sub_normals(self) -> np.ndarray:
        return self._concat("sub_normals")

    @cached_property
    def sub_areas(self) -> np.ndarray:
        return self._concat("sub_areas")

    @cached_property
    def diameters(self) -> np.ndarray:
        return self._concat("diameters")

    @cached_property
    def region_ids(self) -> np.ndarray:
        ids = np.empty(self.size, dtype=np.int64)
        for region, rng in self.region_ranges.items():
            ids[rng.start:rng.stop] = int(region)
        return ids

    @cached_property
    def on_occluder(self) -> np.ndarray:
        """Elements lying on the occluding sphere never test occlusion."""
        if self.occluder is None:
            return np.zeros(self.size, dtype=bool)
        return self.region_ids == int(Region.CAPSULE)

    def element(self, index: int) -> SurfaceElement:
        for region, rng in self.region_ranges.items():
            if index in rng:
                return self.regions[region][index - rng.start]
        raise IndexError(f"element index {index} out of range [0, {self.size})")

    @property
    def elements(self) -> List[SurfaceElement]:
        return [self.element(i) for i in range(self.size)]

    def region_of(self, index: int) -> Region:
        return Region(int(self.region_ids[index]))

    @property
    def primary_source(self) -> np.ndarray:
        if self.source is None:
            return np.zeros(self.size)
        return self.source.s0

    def dump_csv(self, path: Union[str, Path]) -> None:
        """Write index, region, centroid, normal, area and intrinsic coordinates per element."""
        header = ["index", "region", "cx", "cy", "cz", "nx", "ny", "nz", "area", "u", "v"]
        labels = [Region(int(r)).label for r in self.region_ids]
        rows = (
            [i, labels[i], *self.centroids[i].tolist(), *self.normals[i].tolist(),
             float(self.areas[i]), float(self.coords[i, 0]), float(self.coords[i, 1])]
            for i in range(self.size)
        )
        write_csv(path, header, rows)
        logger.info("Wrote mesh dump (%d elements) to %s", self.size, path)


def assemble_cavity(geometry: CavityGeometry,
                    source: Optional["SourceParams"] = None) -> CavityModel:
    """
    Build the capsule, both end faces and the wall and concatenate them.

    Args:
        geometry: Dimensions and resolutions
        source: Laser spot parameters; when given the primary source S0 is built on the wall

    Returns:
        CavityModel ordered capsule, top, bottom, wall
    """
    capsule = build_capsule_mesh(geometry.capsule_radius, geometry.capsule_dtheta,
                                 geometry.capsule_dphi)
    faces = {
        side: build_end_face_mesh(
            geometry.cavity_radius, geometry.leh_radius, geometry.end_dr, geometry.end_dphi,
            side, half_height=geometry.cavity_half_height, rings=geometry.end_rings,
        )
        for side in (Region.END_TOP, Region.END_BOTTOM)
    }
    wall = build_wall_mesh(
        geometry.cavity_radius, geometry.cavity_half_height, geometry.wall_dz,
        geometry.wall_dphi, rows=geometry.wall_rows, azimuth=geometry.wall_azimuth,
        guard_azimuth=geometry.wall_guard_azimuth,
    )
    model = CavityModel(
        regions={Region.CAPSULE: capsule, Region.END_TOP: faces[Region.END_TOP],
                 Region.END_BOTTOM: faces[Region.END_BOTTOM], Region.WALL: wall},
        geometry=geometry,
        occluder=(np.zeros(3), geometry.capsule_radius),
    )
    if source is not None:
        from .source import build_source

        model.source = build_source(model, source)
    logger.info("Assembled cavity: N=%d (capsule %d, end faces %d x 2, wall %d)",
                model.size, len(capsule), len(faces[Region.END_TOP]), len(wall))
    return model


def enclosure_model(radius: float, dtheta: float, dphi: float) -> CavityModel:
    """Closed sphere seen from inside, with no occluder."""
    return CavityModel(regions={Region.CAPSULE: build_enclosure_mesh(radius, dtheta, dphi)})


def region_slices(model: CavityModel) -> List[Tuple[Region, slice]]:
    """(region, slice) pairs in element order."""
    return [(r, slice(rng.start, rng.stop)) for r, rng in model.region_ranges.items()]


def region_sizes(model: CavityModel) -> Sequence[int]:
    return [len(rng) for rng in model.region_ranges.values()]
