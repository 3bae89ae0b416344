"""Exact partition functions for the Spearman-distance ranking model.

Everything here reduces to the distance-frequency table: the number of
rankings at each squared distance from the identity.  The normalizing sum
Z(theta), its moments, the Jeffreys prior, and the prior normalizer
Z*(eta0, rho0) are all log-sum-exp computations over such tables or over
explicit enumerations of the permutation set.
"""

from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

import numpy as np
from scipy.special import logsumexp

from .errors import EnumerationLimit, GridRangeError, TableFormatError
from .perm import (
    PermutohedronPoint,
    PointLike,
    Ranking,
    coord_sum,
    max_distance,
    sq_norm,
)

# Exact construction is capped here; larger item counts need a table file.
N_ENUM_MAX = 10

_PERM_CHUNK = 40320


@dataclass(frozen=True)
class DistanceFrequencyTable:
    """Counts of rankings of n items by squared distance from the identity."""

    n: int
    entries: tuple[tuple[int, int], ...]

    def __post_init__(self):
        entries = tuple((int(d), int(c)) for d, c in self.entries)
        object.__setattr__(self, "entries", entries)
        n = self.n
        dmax = max_distance(n)
        counts = dict(entries)
        if len(counts) != len(entries):
            raise TableFormatError("duplicate distance entries")
        prev = -1
        for d, c in entries:
            if d <= prev:
                raise TableFormatError("distances must be strictly increasing")
            prev = d
            if d % 2 != 0 or d < 0 or d > dmax:
                raise TableFormatError(f"invalid distance {d} for n={n}")
            if c <= 0:
                raise TableFormatError(f"nonpositive count at distance {d}")
        if sum(counts.values()) != math.factorial(n):
            raise TableFormatError("counts do not sum to n!")
        if counts.get(0) != 1:
            raise TableFormatError("count at distance 0 must be 1")
        for d, c in entries:
            if counts.get(dmax - d, 0) != c:
                raise TableFormatError(
                    f"table not symmetric: count({d}) != count({dmax - d})"
                )

    @property
    def distances(self) -> tuple[int, ...]:
        return tuple(d for d, _ in self.entries)

    def count(self, d: int) -> int:
        return dict(self.entries).get(d, 0)

    @cached_property
    def _d_arr(self) -> np.ndarray:
        return np.array([d for d, _ in self.entries], dtype=float)

    @cached_property
    def _logc_arr(self) -> np.ndarray:
        # math.log handles arbitrarily large ints
        return np.array([math.log(c) for _, c in self.entries], dtype=float)


def _iter_perm_chunks(n: int, chunk: int = _PERM_CHUNK):
    """Yield the rankings of {1..n} as int8 arrays, chunk rows at a time."""
    it = itertools.permutations(range(1, n + 1))
    while True:
        block = list(itertools.islice(it, chunk))
        if not block:
            return
        yield np.array(block, dtype=np.int8)


def _counts_by_enumeration(n: int) -> Counter:
    ident = tuple(range(1, n + 1))
    counts: Counter = Counter()
    for p in itertools.permutations(ident):
        counts[sum((a - b) * (a - b) for a, b in zip(p, ident))] += 1
    return counts


def _counts_by_assignment_dp(n: int) -> Counter:
    """Count rankings by their dot product with the identity.

    dp[mask] holds, for each value a, the number of ways to assign the rank
    set `mask` to items 1..popcount(mask) with sum_i i*rank_i = a.  The
    squared distance then follows from d = 2*sq_norm - 2a.  Exact integer
    arithmetic throughout.
    """
    size = sq_norm(n) + 1
    full = (1 << n) - 1
    dp: list[list[int] | None] = [None] * (full + 1)
    start = [0] * size
    start[0] = 1
    dp[0] = start
    for mask in range(full):
        cur = dp[mask]
        if cur is None:
            continue
        item = mask.bit_count() + 1
        for rank in range(1, n + 1):
            bit = 1 << (rank - 1)
            if mask & bit:
                continue
            tgt = dp[mask | bit]
            if tgt is None:
                tgt = [0] * size
                dp[mask | bit] = tgt
            shift = item * rank
            for a, cnt in enumerate(cur):
                if cnt:
                    tgt[a + shift] += cnt
        dp[mask] = None  # free as we go
    final = dp[full]
    assert final is not None
    c2 = 2 * sq_norm(n)
    return Counter({c2 - 2 * a: cnt for a, cnt in enumerate(final) if cnt})


def build_frequency_table(
    n: int, method: str = "auto", n_max: int = N_ENUM_MAX
) -> DistanceFrequencyTable:
    """Exact distance-frequency table for n items.

    method="enumerate" walks all n! rankings; method="count" runs the
    rank-assignment dynamic program (identical results, much faster for
    n >= 9); "auto" picks by size.
    """
    if n < 1:
        raise ValueError("n must be positive")
    if n > n_max:
        raise EnumerationLimit(
            f"n={n} exceeds the exact-construction limit {n_max}; "
            "load a precomputed table file instead"
        )
    if method == "auto":
        method = "enumerate" if n <= 8 else "count"
    if method == "enumerate":
        counts = _counts_by_enumeration(n)
    elif method == "count":
        counts = _counts_by_assignment_dp(n)
    else:
        raise ValueError(f"unknown method {method!r}")
    entries = tuple(sorted(counts.items()))
    return DistanceFrequencyTable(n=n, entries=entries)


def log_z(theta: float, table: DistanceFrequencyTable) -> float:
    """log of the normalizing sum over all rankings at concentration theta."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    return float(logsumexp(table._logc_arr - theta * table._d_arr))


def _distance_weights(theta: float, table: DistanceFrequencyTable) -> np.ndarray:
    logits = table._logc_arr - theta * table._d_arr
    logits -= logits.max()
    w = np.exp(logits)
    return w / w.sum()


def expected_distance(theta: float, table: DistanceFrequencyTable) -> float:
    """Mean squared distance to the mode under concentration theta."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    w = _distance_weights(theta, table)
    return float(w @ table._d_arr)


def variance_distance(theta: float, table: DistanceFrequencyTable) -> float:
    """Variance of the squared distance: also the second derivative of log Z."""
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    w = _distance_weights(theta, table)
    d = table._d_arr
    mean = float(w @ d)
    return max(float(w @ (d - mean) ** 2), 0.0)


def jeffreys_log_density(theta: float, table: DistanceFrequencyTable) -> float:
    """Unnormalized log Jeffreys density for theta: half the log variance."""
    var = variance_distance(theta, table)
    if var <= 0.0:
        return -math.inf
    return 0.5 * math.log(var)


def log_z_star(eta0: float, rho0: PointLike, n_max: int = N_ENUM_MAX) -> float:
    """Exact log normalizer of the extended model centered at rho0.

    Sums exp(-eta0 * ||rho0 - rho||^2) over all n! rankings, so it is only
    available up to the enumeration limit.
    """
    if eta0 < 0:
        raise ValueError("eta0 must be nonnegative")
    n = len(rho0)
    if n > n_max:
        raise EnumerationLimit(
            f"n={n} exceeds the exact-enumeration limit {n_max}; "
            "use a precomputed grid or the large-n prior instead"
        )
    center = (
        np.array(rho0.ranks, dtype=float)
        if isinstance(rho0, Ranking)
        else rho0.as_floats()
    )
    total = -math.inf
    for chunk in _iter_perm_chunks(n):
        d = ((chunk.astype(float) - center) ** 2).sum(axis=1)
        total = np.logaddexp(total, logsumexp(-eta0 * d))
    return float(total)


@dataclass(frozen=True, eq=False)
class ZStarGrid:
    """Precomputed log Z*(eta, rho0) on an increasing eta grid."""

    rho0: PermutohedronPoint
    eta_grid: np.ndarray
    log_zstar_values: np.ndarray

    def __post_init__(self):
        eta = np.asarray(self.eta_grid, dtype=float)
        vals = np.asarray(self.log_zstar_values, dtype=float)
        object.__setattr__(self, "eta_grid", eta)
        object.__setattr__(self, "log_zstar_values", vals)
        if eta.ndim != 1 or vals.shape != eta.shape:
            raise ValueError("grid and values must be 1-d and equal length")
        if eta.size < 2 or np.any(np.diff(eta) <= 0):
            raise ValueError("eta grid must be strictly increasing")
        if eta[0] < 0:
            raise ValueError("eta grid must be nonnegative")
        if not np.all(np.isfinite(vals)):
            raise ValueError("grid values must be finite")
        if eta[0] == 0.0:
            logfact = math.lgamma(len(self.rho0) + 1)
            if abs(vals[0] - logfact) > 1e-8:
                raise ValueError("value at eta=0 must equal log n!")

    @property
    def eta_max(self) -> float:
        return float(self.eta_grid[-1])


def build_zstar_grid(
    rho0: PointLike, n: int, eta_grid, n_max: int = N_ENUM_MAX
) -> ZStarGrid:
    """Tabulate log Z* on a grid of precision values by full enumeration."""
    if len(rho0) != n:
        raise ValueError("rho0 length does not match n")
    if n > n_max:
        raise EnumerationLimit(f"n={n} exceeds the exact-enumeration limit {n_max}")
    eta = np.asarray(eta_grid, dtype=float)
    center = (
        np.array(rho0.ranks, dtype=float)
        if isinstance(rho0, Ranking)
        else rho0.as_floats()
    )
    vals = np.full(eta.shape, -np.inf)
    for chunk in _iter_perm_chunks(n):
        d = ((chunk.astype(float) - center) ** 2).sum(axis=1)
        chunk_vals = logsumexp(-np.outer(eta, d), axis=1)
        vals = np.logaddexp(vals, chunk_vals)
    point = (
        PermutohedronPoint(tuple(rho0.ranks)) if isinstance(rho0, Ranking) else rho0
    )
    return ZStarGrid(rho0=point, eta_grid=eta, log_zstar_values=vals)


def interpolate_log_zstar(grid: ZStarGrid, eta0: float) -> float:
    """Linear interpolation of log Z* at eta0; refuses to extrapolate."""
    lo, hi = float(grid.eta_grid[0]), float(grid.eta_grid[-1])
    if not (lo <= eta0 <= hi):
        raise GridRangeError(f"eta0={eta0} outside grid range [{lo}, {hi}]")
    return float(np.interp(eta0, grid.eta_grid, grid.log_zstar_values))


def save_table(table: DistanceFrequencyTable, path) -> None:
    """Write a table file: n, factorial, one `d count` pair per line, checksum."""
    lines = [f"n={table.n}", f"factorial={math.factorial(table.n)}"]
    total = 0
    for d, c in table.entries:
        lines.append(f"{d} {c}")
        total += c
    lines.append(f"checksum={total}")
    Path(path).write_text("\n".join(lines) + "\n")


def load_table(path) -> DistanceFrequencyTable:
    """Read and fully validate a table file written by :func:`save_table`."""
    raw = Path(path).read_text().strip().splitlines()
    if len(raw) < 3:
        raise TableFormatError(f"{path}: too few lines")
    if not raw[0].startswith("n="):
        raise TableFormatError(f"{path}: first line must be n=<int>")
    if not raw[1].startswith("factorial="):
        raise TableFormatError(f"{path}: second line must be factorial=<int>")
    try:
        n = int(raw[0][2:])
        fact = int(raw[1][len("factorial="):])
    except ValueError as exc:
        raise TableFormatError(f"{path}: bad header: {exc}") from None
    if fact != math.factorial(n):
        raise TableFormatError(f"{path}: factorial line does not equal n!")
    if not raw[-1].startswith("checksum="):
        raise TableFormatError(f"{path}: last line must be checksum=<int>")
    try:
        checksum = int(raw[-1][len("checksum="):])
    except ValueError as exc:
        raise TableFormatError(f"{path}: bad checksum: {exc}") from None
    entries = []
    total = 0
    for line in raw[2:-1]:
        parts = line.split()
        if len(parts) != 2:
            raise TableFormatError(f"{path}: malformed entry line {line!r}")
        try:
            d, c = int(parts[0]), int(parts[1])
        except ValueError as exc:
            raise TableFormatError(f"{path}: malformed entry {line!r}: {exc}") from None
        entries.append((d, c))
        total += c
    if total != checksum:
        raise TableFormatError(f"{path}: checksum mismatch ({total} != {checksum})")
    if total != math.factorial(n):
        raise TableFormatError(f"{path}: counts sum to {total}, expected {n}!")
    return DistanceFrequencyTable(n=n, entries=tuple(entries))


def cached_table(n: int, cache_dir=None) -> DistanceFrequencyTable:
    """Fetch a table from a cache directory, building and storing on miss."""
    if cache_dir is None:
        return build_frequency_table(n)
    cache = Path(cache_dir)
    path = cache / f"spearman_freq_n{n}.txt"
    if path.exists():
        return load_table(path)
    table = build_frequency_table(n)
    cache.mkdir(parents=True, exist_ok=True)
    save_table(table, path)
    return table
