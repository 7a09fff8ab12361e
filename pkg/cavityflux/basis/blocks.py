# cavityflux/basis/blocks.py
"""Per-region basis matrices and the block-diagonal expansion B = Psi c."""

import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import scipy.linalg

from ..errors import DimensionError, RankDeficiencyError
from ..geometry.mesh import CavityModel, Region, RegionMesh
from .harmonics import spherical_harmonic_matrix
from .legendre_fourier import legendre_fourier_matrix
from .terms import ANNULAR, LEGENDRE_FOURIER, SPHERICAL, TermIndexMap
from .zernike import zernike_annular_matrix

logger = logging.getLogger(__name__)

FAMILY_BY_REGION = {
    Region.CAPSULE: SPHERICAL,
    Region.END_TOP: ANNULAR,
    Region.END_BOTTOM: ANNULAR,
    Region.WALL: LEGENDRE_FOURIER,
}


@dataclass(frozen=True)
class BasisMatrix:
    """One region's basis evaluated on its elements."""
    region: Region
    matrix: np.ndarray
    terms: TermIndexMap

    @property
    def shape(self) -> Tuple[int, int]:
        return self.matrix.shape  # type: ignore[return-value]


def build_basis_matrix(mesh: RegionMesh, count: int,
                       hole_ratio: Optional[float] = None) -> BasisMatrix:
    """
    Evaluate the region's family on the element coordinates.

    Args:
        mesh: Region mesh (its region selects the family)
        count: Number of terms L
        hole_ratio: Inner-radius ratio, required for end faces

    Returns:
        BasisMatrix of shape (len(mesh), count)

    Raises:
        DimensionError: If ``count`` exceeds the number of elements
    """
    if count < 1:
        raise DimensionError("term count must be at least 1")
    if count > len(mesh):
        raise DimensionError(
            f"{count} terms exceed the {len(mesh)} elements of {mesh.region.label}")
    family = FAMILY_BY_REGION[mesh.region]
    terms = TermIndexMap.for_family(family, count)
    u, v = mesh.coords[:, 0], mesh.coords[:, 1]
    if family == SPHERICAL:
        matrix = spherical_harmonic_matrix(u, v, terms)
    elif family == ANNULAR:
        if hole_ratio is None:
            raise DimensionError("end-face basis needs the inner-radius ratio")
        matrix = zernike_annular_matrix(u, v, terms, hole_ratio)
    else:
        matrix = legendre_fourier_matrix(u, v, terms)
    logger.debug("%s basis: %d x %d (max degree %d)", family, matrix.shape[0], matrix.shape[1],
                 terms.max_degree)
    return BasisMatrix(region=mesh.region, matrix=matrix, terms=terms)


@dataclass(frozen=True)
class BasisBlock:
    region: Region
    matrix: np.ndarray
    terms: TermIndexMap
    rows: range
    cols: range


class BasisSet:
    """
    Block-diagonal basis Psi with one block per region.

    Products are computed block by block; the zero off-diagonal blocks are never stored.
    """

    def __init__(self, blocks: Sequence[BasisMatrix], hole_ratio: Optional[float] = None):
        self.hole_ratio = hole_ratio
        self.blocks: List[BasisBlock] = []
        row = col = 0
        for block in blocks:
            n, l = block.matrix.shape
            self.blocks.append(BasisBlock(block.region, block.matrix, block.terms,
                                          range(row, row + n), range(col, col + l)))
            row += n
            col += l
        self.n_rows = row
        self.n_terms = col
        self._row_block = np.empty(self.n_rows, dtype=np.int64)
        for b, block in enumerate(self.blocks):
            self._row_block[block.rows.start:block.rows.stop] = b

    @property
    def shape(self) -> Tuple[int, int]:
        return self.n_rows, self.n_terms

    def block(self, region: Region) -> BasisBlock:
        for block in self.blocks:
            if block.region == region:
                return block
        raise KeyError(region)

    @property
    def column_ranges(self) -> List[range]:
        return [b.cols for b in self.blocks]

    @property
    def constant_columns(self) -> List[int]:
        """Global column of each block's constant term."""
        return [b.cols.start for b in self.blocks]

    def split(self, c: np.ndarray) -> Dict[Region, np.ndarray]:
        return {b.region: c[b.cols.start:b.cols.stop] for b in self.blocks}

    def _check_coefficients(self, c: np.ndarray) -> np.ndarray:
        c = np.asarray(c, dtype=float)
        if c.shape != (self.n_terms,):
            raise DimensionError(f"expected {self.n_terms} coefficients, got {c.shape}")
        return c

    def matvec(self, c: np.ndarray) -> np.ndarray:
        """B = Psi c."""
        c = self._check_coefficients(c)
        return np.concatenate([b.matrix @ c[b.cols.start:b.cols.stop] for b in self.blocks])

    def rows(self, index: Sequence[int]) -> np.ndarray:
        """Dense rows Psi[index, :]."""
        index = np.asarray(index, dtype=np.int64)
        out = np.zeros((index.size, self.n_terms))
        owner = self._row_block[index]
        for b, block in enumerate(self.blocks):
            sel = np.nonzero(owner == b)[0]
            if sel.size:
                out[sel, block.cols.start:block.cols.stop] = block.matrix[
                    index[sel] - block.rows.start]
        return out

    def rows_matvec(self, index: Sequence[int], c: np.ndarray) -> np.ndarray:
        """(Psi c)[index] without forming the full product."""
        c = self._check_coefficients(c)
        index = np.asarray(index, dtype=np.int64)
        out = np.empty(index.size)
        owner = self._row_block[index]
        for b, block in enumerate(self.blocks):
            sel = np.nonzero(owner == b)[0]
            if sel.size:
                out[sel] = block.matrix[index[sel] - block.rows.start] @ c[
                    block.cols.start:block.cols.stop]
        return out

    def left_multiply(self, left: np.ndarray) -> np.ndarray:
        """left @ Psi for a (M x N) matrix ``left``."""
        left = np.asarray(left, dtype=float)
        if left.ndim != 2 or left.shape[1] != self.n_rows:
            raise DimensionError(f"cannot multiply {left.shape} by Psi {self.shape}")
        out = np.empty((left.shape[0], self.n_terms))
        for block in self.blocks:
            out[:, block.cols.start:block.cols.stop] = (
                left[:, block.rows.start:block.rows.stop] @ block.matrix)
        return out

    def dense(self) -> np.ndarray:
        return scipy.linalg.block_diag(*[b.matrix for b in self.blocks])


def assemble_block_basis(capsule: BasisMatrix, top: BasisMatrix, bottom: BasisMatrix,
                         wall: BasisMatrix, model: Optional[CavityModel] = None,
                         hole_ratio: Optional[float] = None) -> BasisSet:
    """
    Stack the four region blocks diagonally in element order.

    Raises:
        DimensionError: If a block is out of order or its rows do not match the model's region
    """
    ordered = [capsule, top, bottom, wall]
    for expected, block in zip(Region, ordered):
        if block.region != expected:
            raise DimensionError(f"expected a {expected.label} block, got {block.region.label}")
        if model is not None:
            size = len(model.region_ranges[expected])
            if block.matrix.shape[0] != size:
                raise DimensionError(
                    f"{expected.label} block has {block.matrix.shape[0]} rows, region has {size}")
    return BasisSet(ordered, hole_ratio=hole_ratio)


def build_basis(model: CavityModel, counts: Dict[Region, int]) -> BasisSet:
    """Evaluate every region family of ``model`` with the requested term counts."""
    hole_ratio = model.geometry.hole_ratio if model.geometry is not None else None
    blocks = [build_basis_matrix(model.regions[region], counts[region], hole_ratio)
              for region in Region if region in model.regions]
    if len(blocks) == 4:
        return assemble_block_basis(*blocks, model=model, hole_ratio=hole_ratio)
    return BasisSet(blocks, hole_ratio=hole_ratio)


def fit_coefficients(values: np.ndarray, block: np.ndarray, weights: np.ndarray,
                     rcond: Optional[float] = None) -> np.ndarray:
    """
    Area-weighted least-squares projection of region values onto a basis block.

    Args:
        values: Flux on the region's elements
        block: Basis matrix of the region (elements x terms)
        weights: Element areas

    Returns:
        Coefficient vector

    Raises:
        RankDeficiencyError: With the columns that fall outside the numerical rank
    """
    block = np.asarray(block, dtype=float)
    values = np.asarray(values, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if block.shape[0] != values.shape[0] or weights.shape[0] != values.shape[0]:
        raise DimensionError("values, weights and basis rows must agree")
    root = np.sqrt(weights)
    scaled = block * root[:, None]
    q, r, piv = scipy.linalg.qr(scaled, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = rcond if rcond is not None else max(scaled.shape) * np.finfo(float).eps
    rank = int(np.sum(diag > tol * (diag[0] if diag.size else 0.0)))
    if rank < block.shape[1]:
        raise RankDeficiencyError("basis block is rank deficient", piv[rank:])
    rhs = q.T @ (values * root)
    coef = np.empty(block.shape[1])
    coef[piv] = scipy.linalg.solve_triangular(r, rhs)
    return coef
