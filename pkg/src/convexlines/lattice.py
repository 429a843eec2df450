"""Number-theoretic substrate: Moebius function, coprime directions, exact slope order.

A convex lattice polygonal line is encoded by the multiplicities it assigns to
coprime directions x in Z^2_+ \\ {0}.  Everything downstream iterates over those
directions in one canonical order: primary key x1 + x2 (the "degree", which is
what truncation windows bound), secondary key slope ascending.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import EncodingError, InvalidArgumentError

DEFAULT_SIEVE_LIMIT = 10**6


@dataclass(frozen=True)
class Direction:
    """A coprime pair (x1, x2) in Z^2_+, not both zero.

    Slope is x2/x1 with (1,0) -> 0 and (0,1) -> +inf.  Both axis directions are
    valid members.
    """

    x1: int
    x2: int

    def __post_init__(self) -> None:
        if self.x1 < 0 or self.x2 < 0:
            raise InvalidArgumentError(f"direction must lie in Z^2_+, got {(self.x1, self.x2)}")
        if self.x1 == 0 and self.x2 == 0:
            raise InvalidArgumentError("direction (0,0) is excluded")
        if math.gcd(self.x1, self.x2) != 1:
            raise EncodingError(f"direction {(self.x1, self.x2)} is not coprime")

    @property
    def degree(self) -> int:
        return self.x1 + self.x2

    @property
    def slope(self) -> float:
        return math.inf if self.x1 == 0 else self.x2 / self.x1

    def __iter__(self):
        return iter((self.x1, self.x2))


def slope_compare(a: Direction, b: Direction) -> int:
    """Exact slope order: -1, 0, +1 for slope(a) <, =, > slope(b).

    Integer cross products only; since directions are coprime, equal cross
    products imply identical directions.
    """
    lhs = a.x2 * b.x1
    rhs = b.x2 * a.x1
    if lhs < rhs:
        return -1
    if lhs > rhs:
        return 1
    return 0


@dataclass(frozen=True)
class MobiusTable:
    """Immutable table of mu(m) for 1 <= m <= limit."""

    limit: int
    values: np.ndarray  # int8, index 0 unused

    def __getitem__(self, m: int) -> int:
        if not 1 <= m <= self.limit:
            raise InvalidArgumentError(f"mu({m}) outside table limit {self.limit}")
        return int(self.values[m])


def mobius_sieve(limit: int) -> MobiusTable:
    """Sieve mu(m) up to limit: mu(1)=1, mu(m)=0 iff m has a squared prime factor."""
    if limit < 1:
        raise InvalidArgumentError("sieve limit must be >= 1")
    mu = np.ones(limit + 1, dtype=np.int8)
    is_comp = np.zeros(limit + 1, dtype=bool)
    for p in range(2, limit + 1):
        if is_comp[p]:
            continue
        is_comp[2 * p :: p] = True
        mu[p::p] *= -1
        sq = p * p
        if sq <= limit:
            mu[sq::sq] = 0
    values = mu.copy()
    values.setflags(write=False)
    return MobiusTable(limit=limit, values=values)


@lru_cache(maxsize=4)
def _cached_sieve(limit: int) -> MobiusTable:
    return mobius_sieve(limit)


def mobius_upto(limit: int) -> MobiusTable:
    """Cached sieve access, rounded up to a power of two to limit rebuilds."""
    if limit > DEFAULT_SIEVE_LIMIT:
        raise InvalidArgumentError(f"limit {limit} beyond sieve limit {DEFAULT_SIEVE_LIMIT}")
    size = min(DEFAULT_SIEVE_LIMIT, 1 << max(10, limit.bit_length()))
    return _cached_sieve(size)


def coprime_directions(degree_bound: int) -> tuple[Direction, ...]:
    """Every Direction with x1 + x2 <= degree_bound, canonical order.

    Order: by degree, then slope ascending (exact, since within one degree the
    slope x2/x1 increases with x2).  Includes (1,0) and (0,1) at degree 1.
    """
    if degree_bound < 1:
        raise InvalidArgumentError("degree_bound must be >= 1")
    out: list[Direction] = []
    for s in range(1, degree_bound + 1):
        for x2 in range(s + 1):
            x1 = s - x2
            if math.gcd(x1, x2) == 1:
                out.append(Direction(x1, x2))
    return tuple(out)


@lru_cache(maxsize=32)
def coprime_window_arrays(degree_bound: int) -> tuple[np.ndarray, np.ndarray]:
    """(x1, x2) int64 arrays over the same directions/order as coprime_directions."""
    if degree_bound < 1:
        raise InvalidArgumentError("degree_bound must be >= 1")
    x2 = np.concatenate([np.arange(s + 1, dtype=np.int64) for s in range(1, degree_bound + 1)])
    deg = np.repeat(np.arange(1, degree_bound + 1, dtype=np.int64), np.arange(2, degree_bound + 2))
    x1 = deg - x2
    keep = np.gcd(x1, x2) == 1
    a, b = x1[keep], x2[keep]
    a.setflags(write=False)
    b.setflags(write=False)
    return a, b
