# cavityflux/basis/terms.py
"""Linear term index <-> polynomial order maps for the three families."""

from dataclasses import dataclass
from typing import Iterator, List, Tuple, Union

import numpy as np

SPHERICAL = "SH"
ANNULAR = "AZ"
LEGENDRE_FOURIER = "LF"


@dataclass(frozen=True)
class TermIndexMap:
    """
    Ordered term list of one family.

    ``orders[n]`` is ``(m, k)`` for SH, ``(l, k)`` for AZ and LF; negative ``k`` selects the
    sine branch.
    """
    family: str
    orders: Tuple[Tuple[int, int], ...]

    def __len__(self) -> int:
        return len(self.orders)

    def __getitem__(self, n: int) -> Tuple[int, int]:
        return self.orders[n]

    def __iter__(self) -> Iterator[Tuple[int, int]]:
        return iter(self.orders)

    @property
    def max_degree(self) -> int:
        return max((self.degree(n) for n in range(len(self))), default=0)

    def degree(self, n: int) -> int:
        """Total degree of term n."""
        first, k = self.orders[n]
        if self.family == LEGENDRE_FOURIER:
            return first + abs(k)
        return first

    def csv_rows(self) -> List[Tuple[int, str, int, int]]:
        return [(n, self.family, a, b) for n, (a, b) in enumerate(self.orders)]

    @classmethod
    def for_family(cls, family: str, count: int) -> "TermIndexMap":
        """First ``count`` terms of a family in its canonical order."""
        if count < 1:
            raise ValueError("term count must be at least 1")
        builders = {
            SPHERICAL: spherical_orders,
            ANNULAR: annular_orders,
            LEGENDRE_FOURIER: legendre_fourier_orders,
        }
        if family not in builders:
            raise ValueError(f"unknown basis family: {family}")
        return cls(family=family, orders=tuple(builders[family](count)))


def spherical_orders(count: int) -> List[Tuple[int, int]]:
    """Degree m ascending, then k from -m to m; (m+1)^2 terms through degree m."""
    orders: List[Tuple[int, int]] = []
    m = 0
    while len(orders) < count:
        orders.extend((m, k) for k in range(-m, m + 1))
        m += 1
    return orders[:count]


def annular_orders(count: int) -> List[Tuple[int, int]]:
    """
    Degree n ascending; within a degree |k| ascending with the sine term before the cosine.

    Only pairs with n - |k| even and non-negative occur, giving (n+1)(n+2)/2 terms through
    degree n.
    """
    orders: List[Tuple[int, int]] = []
    n = 0
    while len(orders) < count:
        for k in range(n % 2, n + 1, 2):
            if k == 0:
                orders.append((n, 0))
            else:
                orders.extend([(n, -k), (n, k)])
        n += 1
    return orders[:count]


def legendre_fourier_orders(count: int) -> List[Tuple[int, int]]:
    """
    Degree d = l + |k| ascending; within a degree l from 0 to d with (l, -k) before (l, k).

    This reproduces the tabulated sequence 1, sin, cos, z, sin 2, cos 2, z sin, z cos, P2, ...
    and gives (d+1)^2 terms through degree d.
    """
    orders: List[Tuple[int, int]] = []
    d = 0
    while len(orders) < count:
        for l in range(d + 1):
            k = d - l
            if k == 0:
                orders.append((l, 0))
            else:
                orders.extend([(l, -k), (l, k)])
        d += 1
    return orders[:count]


def fourier(k: int, phi: Union[float, np.ndarray]) -> np.ndarray:
    """cos(k phi) for k >= 0, sin(|k| phi) for k < 0."""
    if k >= 0:
        return np.cos(k * np.asarray(phi, dtype=float))
    return np.sin(-k * np.asarray(phi, dtype=float))
