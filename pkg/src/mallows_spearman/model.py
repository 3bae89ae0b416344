"""The Mallows ranking model with Spearman distance: pmf, sampling, MLE."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import EnumerationLimit, EstimateDiverged, NonUniqueMLE, TiesPresent
from .partition import (
    N_ENUM_MAX,
    DistanceFrequencyTable,
    expected_distance,
    log_z,
)
from .perm import (
    PermutohedronPoint,
    Ranking,
    RankingSample,
    rank_vector,
    sample_mean,
    spearman_distance,
)
from .proposals import leap_and_shift

BISECTION_TOL = 1e-8
THETA_BRACKET_CAP = 1e6


@dataclass(frozen=True)
class MmsParams:
    """Consensus ranking and nonnegative concentration."""

    rho: Ranking
    theta: float

    def __post_init__(self):
        if self.theta < 0:
            raise ValueError("theta must be nonnegative")


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def log_pmf(r: Ranking, params: MmsParams, table: DistanceFrequencyTable) -> float:
    """Log probability of observing ranking r."""
    d = spearman_distance(r, params.rho)
    return -params.theta * d - log_z(params.theta, table)


def _enumerated_distances(rho: Ranking) -> tuple[np.ndarray, np.ndarray]:
    """All rankings (lexicographic) and their squared distances to rho."""
    n = rho.n
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int8)
    center = np.array(rho.ranks, dtype=np.int64)
    d = ((perms.astype(np.int64) - center) ** 2).sum(axis=1)
    return perms, d


def sample_exact(
    params: MmsParams, N: int, table: DistanceFrequencyTable, seed
) -> RankingSample:
    """N independent draws by inverse CDF over the enumerated rankings.

    The permutation list is sorted by weight (distance ascending, stable in
    lexicographic order) before the cumulative sum, so the draw sequence is
    a deterministic function of the seed.
    """
    n = params.rho.n
    if n > N_ENUM_MAX:
        raise EnumerationLimit(
            f"n={n} exceeds the exact-sampling limit {N_ENUM_MAX}; use sample_mcmc"
        )
    perms, d = _enumerated_distances(params.rho)
    order = np.argsort(d, kind="stable")
    perms, d = perms[order], d[order]
    logits = -params.theta * (d - d[0]).astype(float)
    w = np.exp(logits)
    cdf = np.cumsum(w / w.sum())
    u = _rng(seed).random(N)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(cdf) - 1)
    rows = tuple(Ranking(tuple(int(v) for v in perms[i])) for i in idx)
    return RankingSample(rows)


def sample_mcmc(
    params: MmsParams,
    N: int,
    burn_in: int = 1000,
    thin: int = 1,
    leap_size: int = 1,
    seed=0,
) -> RankingSample:
    """N draws from a Metropolis chain with leap-and-shift proposals.

    Fallback for item counts beyond the enumeration limit; kept states are
    taken every `thin` sweeps after `burn_in`.
    """
    if N < 0 or burn_in < 0 or thin < 1:
        raise ValueError("invalid chain sizes")
    rng = _rng(seed)
    current = params.rho
    d_cur = 0
    rows = []
    total = burn_in + N * thin
    for t in range(1, total + 1):
        prop, log_fwd, log_bwd = leap_and_shift(current, leap_size, rng)
        d_prop = spearman_distance(prop, params.rho)
        log_a = -params.theta * (d_prop - d_cur) + log_bwd - log_fwd
        if log_a >= 0 or rng.random() < math.exp(log_a):
            current, d_cur = prop, d_prop
        if t > burn_in and (t - burn_in) % thin == 0:
            rows.append(current)
    return RankingSample(tuple(rows))


def mle_rho(s: RankingSample) -> Ranking:
    """Maximum-likelihood consensus: the rank vector of the sample mean."""
    if s.size < 1:
        raise ValueError("need at least one observation")
    mean = sample_mean(s)
    try:
        return rank_vector(mean, ties="strict")
    except TiesPresent as exc:
        raise NonUniqueMLE(
            exc.tied_groups,
            "sample mean has tied coordinates; the consensus MLE is not "
            f"unique (tied item positions {exc.tied_groups})",
        ) from None


def mean_observed_distance(s: RankingSample, rho: Ranking) -> Fraction:
    """Average squared distance from the observations to a candidate mode."""
    total = sum(spearman_distance(r, rho) for r in s.rows)
    return Fraction(total, s.size)


def solve_theta_mean_equation(dbar: float, table: DistanceFrequencyTable) -> float:
    """The unique theta >= 0 with E[d | theta] = dbar, by bisection.

    The expected distance is strictly decreasing in theta, so bisection on
    a doubling bracket converges unconditionally.
    """
    if dbar <= 0.0:
        raise EstimateDiverged("mean distance must be positive for a finite theta")
    e0 = expected_distance(0.0, table)
    if dbar >= e0:
        warnings.warn(
            "observed mean distance at or above the uniform expectation; "
            "likelihood is flat at theta=0",
            RuntimeWarning,
            stacklevel=2,
        )
        return 0.0
    hi = 1.0
    while expected_distance(hi, table) > dbar:
        hi *= 2.0
        if hi > THETA_BRACKET_CAP:
            raise EstimateDiverged("theta bracket exceeded cap; data degenerate")
    lo = 0.0
    while hi - lo > BISECTION_TOL:
        mid = 0.5 * (lo + hi)
        if expected_distance(mid, table) > dbar:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def mle_theta(
    s: RankingSample, rho: Ranking, table: DistanceFrequencyTable
) -> float:
    """Concentration MLE: solves E[d | theta] = observed mean distance."""
    dbar = float(mean_observed_distance(s, rho))
    if dbar == 0.0:
        raise EstimateDiverged(
            "all observations equal the candidate mode; theta MLE is infinite"
        )
    return solve_theta_mean_equation(dbar, table)


def mean_to_point(mean_like) -> PermutohedronPoint:
    """Coerce a raw mean vector (floats) into a permutohedron point."""
    return PermutohedronPoint(tuple(mean_like))
