# cavityflux/geometry/viewfactor.py
"""
Diffuse view factors between mesh elements.

The point kernel between elements i and j is

    K_ij = (n_i . (p_j - p_i)) (n_j . (p_i - p_j)) / (pi |p_i - p_j|^4)

and the assembled matrix holds V[i, j] = K_ij * area_j. A pair contributes only when both
cosines are positive and, for elements off the capsule, the segment between the centroids
misses the capsule sphere. Pairs closer than twice the larger element diameter are averaged
over the 2x2 sub-patches of both elements.

All dot products are written as explicit component sums so that any row computes to the same
bits regardless of which block it is assembled in.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence, Tuple

import numpy as np

from ..errors import CapacityError, DegenerateGeometryError, DimensionError
from .mesh import CavityModel, Region, SurfaceElement

logger = logging.getLogger(__name__)

NEAR_FACTOR = 2.0
_BLOCK_ENTRIES = 1 << 22


def occluded(p_i: np.ndarray, p_j: np.ndarray, sphere_center: np.ndarray,
             sphere_radius: float) -> bool:
    """
    True iff the open segment (p_i, p_j) crosses the sphere.

    Tangent segments do not count as blocked.

    Raises:
        DegenerateGeometryError: If an endpoint lies strictly inside the sphere
    """
    a = np.asarray(p_i, dtype=float)
    b = np.asarray(p_j, dtype=float)
    c = np.asarray(sphere_center, dtype=float)
    r2 = sphere_radius * sphere_radius
    if _dot3(a - c, a - c) < r2 or _dot3(b - c, b - c) < r2:
        raise DegenerateGeometryError("segment endpoint lies inside the occluding sphere")
    blocked = _segment_blocked(a[None, :] - c, (b - a)[None, :], r2)
    return bool(blocked[0])


def _dot3(u: np.ndarray, v: np.ndarray) -> float:
    return float(u[0] * v[0] + u[1] * v[1] + u[2] * v[2])


def _segment_blocked(rel: np.ndarray, seg: np.ndarray, r2: float) -> np.ndarray:
    """Vectorized segment-sphere test; ``rel`` is start minus centre, ``seg`` end minus start."""
    qa = seg[..., 0] * seg[..., 0] + seg[..., 1] * seg[..., 1] + seg[..., 2] * seg[..., 2]
    qb = 2.0 * (rel[..., 0] * seg[..., 0] + rel[..., 1] * seg[..., 1] + rel[..., 2] * seg[..., 2])
    qc = rel[..., 0] * rel[..., 0] + rel[..., 1] * rel[..., 1] + rel[..., 2] * rel[..., 2] - r2
    disc = qb * qb - 4.0 * qa * qc
    with np.errstate(divide="ignore", invalid="ignore"):
        t_star = -qb / (2.0 * qa)
    return (disc > 0.0) & (t_star > 0.0) & (t_star < 1.0)


def _kernel(pi: np.ndarray, ni: np.ndarray, pj: np.ndarray, nj: np.ndarray
            ) -> Tuple[np.ndarray, np.ndarray]:
    """Point kernel and visibility mask for broadcast arrays of points/normals (..., 3)."""
    dx = pj[..., 0] - pi[..., 0]
    dy = pj[..., 1] - pi[..., 1]
    dz = pj[..., 2] - pi[..., 2]
    d2 = dx * dx + dy * dy + dz * dz
    cos_i = ni[..., 0] * dx + ni[..., 1] * dy + ni[..., 2] * dz
    cos_j = -(nj[..., 0] * dx + nj[..., 1] * dy + nj[..., 2] * dz)
    visible = (cos_i > 0.0) & (cos_j > 0.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        kernel = np.where(visible, (cos_i * cos_j) / (math.pi * d2 * d2), 0.0)
    return kernel, visible


def _sub_average(model: CavityModel, rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Area-weighted 2x2 by 2x2 sub-patch kernel average for the given (row, col) pairs."""
    sc, sn, sa = model.sub_centroids, model.sub_normals, model.sub_areas
    total = np.zeros(rows.size)
    for a in range(4):
        pa = sc[rows, a]
        na = sn[rows, a]
        wa = sa[rows, a]
        for b in range(4):
            kab, _ = _kernel(pa, na, sc[cols, b], sn[cols, b])
            total = total + wa * sa[cols, b] * kab
    norm = ((sa[rows, 0] + sa[rows, 1]) + (sa[rows, 2] + sa[rows, 3])) * (
        (sa[cols, 0] + sa[cols, 1]) + (sa[cols, 2] + sa[cols, 3]))
    return total / norm


def _kernel_rows(model: CavityModel, rows: np.ndarray) -> np.ndarray:
    """Kernel block K[rows, :] (before multiplying by receiving areas)."""
    p = model.centroids
    n = model.normals
    pi = p[rows][:, None, :]
    ni = n[rows][:, None, :]
    kernel, visible = _kernel(pi, ni, p[None, :, :], n[None, :, :])

    dx = p[None, :, 0] - pi[..., 0]
    dy = p[None, :, 1] - pi[..., 1]
    dz = p[None, :, 2] - pi[..., 2]
    d2 = dx * dx + dy * dy + dz * dz
    self_mask = rows[:, None] == np.arange(model.size)[None, :]
    coincident = (d2 == 0.0) & ~self_mask
    if np.any(coincident):
        i, j = np.argwhere(coincident)[0]
        raise DegenerateGeometryError(
            f"elements {int(rows[i])} and {int(j)} have coincident centroids")
    kernel[self_mask] = 0.0
    visible &= ~self_mask

    if model.occluder is not None:
        centre, radius = model.occluder
        check = visible & ~model.on_occluder[rows][:, None] & ~model.on_occluder[None, :]
        ri, cj = np.nonzero(check)
        if ri.size:
            rel = p[rows[ri]] - centre
            seg = p[cj] - p[rows[ri]]
            blocked = _segment_blocked(rel, seg, radius * radius)
            kernel[ri[blocked], cj[blocked]] = 0.0
            visible[ri[blocked], cj[blocked]] = False

    diam = model.diameters
    reach = NEAR_FACTOR * np.maximum(diam[rows][:, None], diam[None, :])
    near = visible & (d2 < reach * reach)
    ri, cj = np.nonzero(near)
    if ri.size:
        kernel[ri, cj] = _sub_average(model, rows[ri], cj)
    return kernel


def pair_view_factor(e_i: SurfaceElement, e_j: SurfaceElement,
                     occluder: Optional[Tuple[np.ndarray, float]] = None) -> float:
    """
    Point-kernel view factor between two elements.

    Args:
        e_i: Emitting element
        e_j: Receiving element
        occluder: Optional (centre, radius) of a blocking sphere

    Returns:
        The kernel value, or 0 when either cosine is non-positive or the segment is blocked
    """
    d = e_j.centroid - e_i.centroid
    if _dot3(d, d) == 0.0:
        raise DegenerateGeometryError("coincident element centroids")
    kernel, visible = _kernel(e_i.centroid, e_i.normal, e_j.centroid, e_j.normal)
    if not bool(visible):
        return 0.0
    on_sphere = Region.CAPSULE in (e_i.region, e_j.region)
    if occluder is not None and not on_sphere:
        if occluded(e_i.centroid, e_j.centroid, occluder[0], occluder[1]):
            return 0.0
    return float(kernel)


def _check_capacity(rows: int, n: int, max_bytes: Optional[int]) -> None:
    required = 8 * rows * n
    if max_bytes is not None and required > max_bytes:
        raise CapacityError(n, required, max_bytes)


def _validate_rows(rows: Sequence[int], n: int) -> np.ndarray:
    index = np.asarray(rows, dtype=np.int64).ravel()
    if index.size and (index.min() < 0 or index.max() >= n):
        raise DimensionError(f"row indices must lie in [0, {n})")
    if np.unique(index).size != index.size:
        raise DimensionError("row indices must be distinct")
    return index


def assemble_view_rows(model: CavityModel, rows: Sequence[int], workers: int = 1,
                       max_bytes: Optional[int] = None) -> np.ndarray:
    """
    Rows ``V[rows, :]`` of the view-factor matrix.

    Args:
        model: Cavity model
        rows: Distinct element indices
        workers: Thread count for the row-block pool
        max_bytes: Optional memory ceiling for the result

    Returns:
        Array of shape (len(rows), N)
    """
    n = model.size
    index = _validate_rows(rows, n)
    _check_capacity(index.size, n, max_bytes)
    try:
        out = np.empty((index.size, n))
    except MemoryError as error:
        raise CapacityError(n, 8 * index.size * n, max_bytes) from error
    if index.size == 0:
        return out

    block = max(1, _BLOCK_ENTRIES // max(n, 1))
    starts = list(range(0, index.size, block))
    areas = model.areas

    def work(start: int) -> None:
        chunk = index[start:start + block]
        out[start:start + chunk.size] = _kernel_rows(model, chunk) * areas[None, :]

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(work, starts))
    else:
        for start in starts:
            work(start)
    logger.debug("Assembled %d view-factor rows (N=%d)", index.size, n)
    return out


def assemble_view_matrix(model: CavityModel, workers: int = 1,
                         max_bytes: Optional[int] = None) -> np.ndarray:
    """Full N x N view-factor matrix."""
    n = model.size
    _check_capacity(n, n, max_bytes)
    logger.info("Assembling %d x %d view-factor matrix", n, n)
    return assemble_view_rows(model, np.arange(n), workers=workers, max_bytes=max_bytes)


def source_term(view: np.ndarray, s0: np.ndarray) -> np.ndarray:
    """Primary irradiation E = V S0 (full or row-sampled V)."""
    view = np.asarray(view)
    s0 = np.asarray(s0, dtype=float)
    if view.ndim != 2 or view.shape[1] != s0.shape[0]:
        raise DimensionError(f"cannot multiply {view.shape} by a vector of length {s0.shape[0]}")
    return view @ s0


def kernel_asymmetry(view: np.ndarray, areas: np.ndarray) -> float:
    """Largest relative mismatch between V[i,j]/area_j and V[j,i]/area_i."""
    kernel = view / areas[None, :]
    diff = np.abs(kernel - kernel.T)
    scale = np.maximum(np.abs(kernel), np.abs(kernel.T))
    with np.errstate(divide="ignore", invalid="ignore"):
        rel = np.where(scale > 0, diff / scale, 0.0)
    return float(rel.max()) if rel.size else 0.0


def row_sums(view: np.ndarray) -> np.ndarray:
    return np.asarray(view).sum(axis=1)


def gib_to_bytes(gib: float) -> int:
    return int(gib * (1 << 30))

