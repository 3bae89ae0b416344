"""Permutation and permutohedron primitives.

Rankings are vectors ``r`` with ``r[i]`` the rank (1 = most preferred) of
item ``i+1``; they are exactly the permutations of ``{1..n}``.  Points of
the permutohedron are real vectors in the convex hull of all rankings:
sample means, prior modes, posterior modes.  All types here are immutable
values and all operations are pure functions.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence, Union

import numpy as np

from .errors import LengthMismatch, TiesPresent

Number = Union[int, float, Fraction]

_SUM_TOL = 1e-9


def coord_sum(n: int) -> int:
    """Sum of the entries of any ranking of n items: n(n+1)/2."""
    return n * (n + 1) // 2


def sq_norm(n: int) -> int:
    """Squared Euclidean norm of any ranking of n items: n(n+1)(2n+1)/6."""
    return n * (n + 1) * (2 * n + 1) // 6


def radius_sq(n: int) -> Fraction:
    """Squared distance from any ranking to the barycenter: n(n^2-1)/12."""
    return Fraction(n * (n * n - 1), 12)


def max_distance(n: int) -> int:
    """Largest squared distance between two rankings of n items: n(n^2-1)/3."""
    return n * (n * n - 1) // 3


@dataclass(frozen=True)
class Ranking:
    """A permutation of {1..n}, stored as the tuple of item ranks."""

    ranks: tuple[int, ...]

    def __post_init__(self):
        ranks = tuple(int(r) for r in self.ranks)
        object.__setattr__(self, "ranks", ranks)
        n = len(ranks)
        if n == 0 or sorted(ranks) != list(range(1, n + 1)):
            raise ValueError(f"not a permutation of 1..{n}: {ranks}")

    @property
    def n(self) -> int:
        return len(self.ranks)

    @classmethod
    def identity(cls, n: int) -> "Ranking":
        return cls(tuple(range(1, n + 1)))

    def __len__(self) -> int:
        return len(self.ranks)

    def __iter__(self):
        return iter(self.ranks)

    def __getitem__(self, i):
        return self.ranks[i]

    def __str__(self) -> str:
        return "(" + ",".join(str(r) for r in self.ranks) + ")"


@dataclass(frozen=True)
class PermutohedronPoint:
    """A real vector in the convex hull of the rankings of n items.

    Construction checks the coordinate-sum constraint and the box bounds
    1 <= x_i <= n; full hull membership is not tested.  Coordinates may be
    ints, floats, or Fractions (kept as given, so exact arithmetic survives
    where the caller uses it).
    """

    coords: tuple[Number, ...]

    def __post_init__(self):
        coords = tuple(self.coords)
        object.__setattr__(self, "coords", coords)
        n = len(coords)
        if n == 0:
            raise ValueError("empty coordinate vector")
        total = sum(Fraction(c) for c in coords)
        if abs(float(total - coord_sum(n))) > _SUM_TOL:
            raise ValueError(
                f"coordinates must sum to {coord_sum(n)}, got {float(total)!r}"
            )
        for i, c in enumerate(coords):
            if not (1 - _SUM_TOL <= float(c) <= n + _SUM_TOL):
                raise ValueError(f"coordinate {i + 1} out of [1, {n}]: {c!r}")

    @property
    def n(self) -> int:
        return len(self.coords)

    @classmethod
    def barycenter(cls, n: int) -> "PermutohedronPoint":
        return cls((Fraction(n + 1, 2),) * n)

    def as_floats(self) -> np.ndarray:
        return np.array([float(c) for c in self.coords], dtype=float)

    def __len__(self) -> int:
        return len(self.coords)

    def __iter__(self):
        return iter(self.coords)

    def __getitem__(self, i):
        return self.coords[i]


PointLike = Union[Ranking, PermutohedronPoint]


@dataclass(frozen=True)
class RankingSample:
    """N observed rankings over a common item set."""

    rows: tuple[Ranking, ...]

    def __post_init__(self):
        rows = tuple(self.rows)
        object.__setattr__(self, "rows", rows)
        if rows:
            n = rows[0].n
            for j, r in enumerate(rows):
                if r.n != n:
                    raise LengthMismatch(
                        f"row {j + 1} has {r.n} items, expected {n}"
                    )

    @property
    def size(self) -> int:
        return len(self.rows)

    @property
    def n(self) -> int:
        if not self.rows:
            raise ValueError("empty sample has no item count")
        return self.rows[0].n

    def as_array(self) -> np.ndarray:
        return np.array([r.ranks for r in self.rows], dtype=np.int64)

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def _coords(x) -> tuple[Number, ...]:
    if isinstance(x, Ranking):
        return x.ranks
    if isinstance(x, PermutohedronPoint):
        return x.coords
    return tuple(x)


def spearman_distance(a: PointLike, b: PointLike) -> Number:
    """Squared Euclidean distance between two rank vectors.

    Exact integer when both arguments are rankings; exact Fraction when
    Fraction coordinates are involved; float otherwise.
    """
    ca, cb = _coords(a), _coords(b)
    if len(ca) != len(cb):
        raise LengthMismatch(f"lengths differ: {len(ca)} vs {len(cb)}")
    return sum((x - y) * (x - y) for x, y in zip(ca, cb))


def compose(a: Ranking, b: Ranking) -> Ranking:
    """Composition a∘b, the ranking with entries a[b_i]."""
    if a.n != b.n:
        raise LengthMismatch(f"lengths differ: {a.n} vs {b.n}")
    return Ranking(tuple(a.ranks[rb - 1] for rb in b.ranks))


def inverse(a: Ranking) -> Ranking:
    """The inverse permutation: compose(a, inverse(a)) is the identity."""
    inv = [0] * a.n
    for i, r in enumerate(a.ranks):
        inv[r - 1] = i + 1
    return Ranking(tuple(inv))


def rank_vector(x, ties: str = "strict") -> Union[Ranking, PermutohedronPoint]:
    """Rank transform of a vector: entry i counts coordinates <= x_i.

    Accepts rankings, permutohedron points, or any real sequence (e.g. a
    covariate column).  ties="strict" requires all coordinates distinct and
    returns a Ranking; ties="midrank" gives tied coordinates the average of
    the ranks they span and returns a PermutohedronPoint.
    """
    coords = _coords(x)
    n = len(coords)
    order = sorted(range(n), key=lambda i: coords[i])

    # runs of equal coordinates, exact comparison
    groups: list[list[int]] = []
    for i in order:
        if groups and coords[groups[-1][-1]] == coords[i]:
            groups[-1].append(i)
        else:
            groups.append([i])

    if ties == "strict":
        tied = [tuple(sorted(i + 1 for i in g)) for g in groups if len(g) > 1]
        if tied:
            raise TiesPresent(tied)
        ranks = [0] * n
        for pos, i in enumerate(order):
            ranks[i] = pos + 1
        return Ranking(tuple(ranks))

    if ties == "midrank":
        out: list[Number] = [0] * n
        next_rank = 1
        for g in groups:
            span = range(next_rank, next_rank + len(g))
            total = sum(span)
            avg = total // len(g) if total % len(g) == 0 else total / len(g)
            for i in g:
                out[i] = avg
            next_rank += len(g)
        return PermutohedronPoint(tuple(out))

    raise ValueError(f"unknown tie mode {ties!r}")


def sample_mean(s: RankingSample) -> PermutohedronPoint:
    """Coordinate-wise mean of a nonempty sample, kept as exact rationals."""
    if s.size == 0:
        raise ValueError("cannot average an empty sample")
    n = s.n
    sums = [0] * n
    for r in s.rows:
        for i, v in enumerate(r.ranks):
            sums[i] += v
    return PermutohedronPoint(tuple(Fraction(t, s.size) for t in sums))


def all_rankings(n: int) -> Iterable[Ranking]:
    """All n! rankings in lexicographic order."""
    for p in itertools.permutations(range(1, n + 1)):
        yield Ranking(p)


def ranking_from_sequence(seq: Sequence[int]) -> Ranking:
    return Ranking(tuple(int(v) for v in seq))
