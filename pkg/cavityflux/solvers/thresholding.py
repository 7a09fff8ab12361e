# cavityflux/solvers/thresholding.py
"""Hard thresholding and per-block sparsity patterns."""

from typing import List, Optional, Sequence

import numpy as np

from ..errors import ConfigurationError


def _top(values: np.ndarray, k: int) -> np.ndarray:
    """Indices of the k largest magnitudes; equal magnitudes keep the lower index first."""
    order = np.argsort(-np.abs(values), kind="stable")
    return np.sort(order[:k])


def hard_threshold(v: np.ndarray, k: int) -> np.ndarray:
    """
    Keep the k largest-magnitude entries of v and zero the rest.

    Raises:
        ConfigurationError: If k is not in [1, len(v)]
    """
    v = np.asarray(v, dtype=float)
    if k < 1 or k > v.size:
        raise ConfigurationError(f"sparsity must lie in [1, {v.size}], got {k}")
    out = np.zeros_like(v)
    keep = _top(v, k)
    out[keep] = v[keep]
    return out


class SparsityPattern:
    """
    Sparsity level per coefficient block.

    Thresholding keeps the top k_b magnitudes inside each block b independently, so a region
    with large coefficients cannot take budget from another.
    """

    def __init__(self, blocks: Sequence[range], ks: Sequence[int]):
        if len(blocks) != len(ks):
            raise ConfigurationError(f"{len(blocks)} blocks but {len(ks)} sparsity levels")
        self.blocks: List[range] = list(blocks)
        self.ks: List[int] = []
        for block, k in zip(self.blocks, ks):
            if k < 1:
                raise ConfigurationError(f"sparsity levels must be positive, got {k}")
            self.ks.append(min(int(k), len(block)))
        self.size = sum(len(b) for b in self.blocks)

    @classmethod
    def uniform(cls, size: int, k: int) -> "SparsityPattern":
        """A single block covering every coefficient."""
        if k < 1 or k > size:
            raise ConfigurationError(f"sparsity must lie in [1, {size}], got {k}")
        return cls([range(0, size)], [k])

    @classmethod
    def coerce(cls, pattern: "Optional[SparsityPattern]", size: int,
               k: Optional[int] = None) -> "SparsityPattern":
        if isinstance(pattern, SparsityPattern):
            if pattern.size != size:
                raise ConfigurationError(f"pattern covers {pattern.size} of {size} coefficients")
            return pattern
        if k is None:
            raise ConfigurationError("either a sparsity pattern or a sparsity level is required")
        return cls.uniform(size, k)

    @property
    def total(self) -> int:
        return sum(self.ks)

    @property
    def is_dense(self) -> bool:
        return all(k == len(b) for b, k in zip(self.blocks, self.ks))

    def select(self, v: np.ndarray) -> np.ndarray:
        """Sorted indices kept by blockwise thresholding (exactly k_b per block)."""
        parts = [block.start + _top(v[block.start:block.stop], k)
                 for block, k in zip(self.blocks, self.ks)]
        return np.sort(np.concatenate(parts)) if parts else np.zeros(0, dtype=np.int64)

    def threshold(self, v: np.ndarray) -> np.ndarray:
        v = np.asarray(v, dtype=float)
        out = np.zeros_like(v)
        keep = self.select(v)
        out[keep] = v[keep]
        return out

    def support(self, v: np.ndarray) -> np.ndarray:
        """Nonzero indices of the thresholded vector."""
        return np.flatnonzero(self.threshold(v))
