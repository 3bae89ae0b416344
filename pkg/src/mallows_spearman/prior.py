"""Conjugate location prior for the Spearman-distance ranking model.

The prior kernel exp(-eta0 * ||rho0 - rho||^2) lives on the same distance
as the likelihood but lets the mode rho0 sit anywhere in the permutohedron,
which is what makes partial and multi-expert elicitation possible.  The
posterior stays in the family with the mode pulled along the segment from
rho0 to the sample mean.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .errors import LengthMismatch
from .partition import N_ENUM_MAX, log_z_star
from .perm import (
    PermutohedronPoint,
    PointLike,
    Ranking,
    RankingSample,
    rank_vector,
    sample_mean,
    spearman_distance,
)


def _as_point(x: PointLike) -> PermutohedronPoint:
    if isinstance(x, Ranking):
        return PermutohedronPoint(x.ranks)
    return x


@dataclass(frozen=True)
class EmmsPrior:
    """Prior mode rho0 plus a precision, fixed or tied to the model scale.

    Exactly one of ``eta0`` (fixed precision) and ``n0`` (prior sample
    size, giving precision theta * n0) is set.
    """

    rho0: PermutohedronPoint
    eta0: Optional[float] = None
    n0: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "rho0", _as_point(self.rho0))
        if (self.eta0 is None) == (self.n0 is None):
            raise ValueError("set exactly one of eta0 (fixed) or n0 (theta-linked)")
        value = self.eta0 if self.eta0 is not None else self.n0
        if value < 0:
            raise ValueError("prior precision must be nonnegative")

    @classmethod
    def fixed(cls, rho0: PointLike, eta0: float) -> "EmmsPrior":
        return cls(rho0=_as_point(rho0), eta0=float(eta0))

    @classmethod
    def theta_linked(cls, rho0: PointLike, n0: float) -> "EmmsPrior":
        return cls(rho0=_as_point(rho0), n0=float(n0))

    @property
    def is_theta_linked(self) -> bool:
        return self.n0 is not None

    def eta0_at(self, theta: Optional[float] = None) -> float:
        """Effective precision, requiring theta under the linked form."""
        if self.eta0 is not None:
            return self.eta0
        if theta is None:
            raise ValueError("theta required for a theta-linked prior precision")
        return self.n0 * theta


@dataclass(frozen=True)
class PosteriorParams:
    """Updated mode and precision after conditioning on a sample."""

    rhoN: PermutohedronPoint
    etaN: float

    def __post_init__(self):
        if self.etaN < 0:
            raise ValueError("posterior precision must be nonnegative")


def emms_log_density(
    rho: Ranking,
    prior: EmmsPrior,
    theta_for_link: Optional[float] = None,
    normalized: bool = False,
) -> float:
    """Log prior mass of a ranking, exact up to (or including) -log Z*.

    With ``normalized=True`` the exact normalizer is subtracted, which
    enumerates all n! rankings and so requires n within the exact limit.
    """
    eta0 = prior.eta0_at(theta_for_link)
    out = -eta0 * float(spearman_distance(prior.rho0, rho))
    if normalized:
        out -= log_z_star(eta0, prior.rho0, n_max=N_ENUM_MAX)
    return out


def posterior_update(
    prior: EmmsPrior, s: RankingSample, theta: float
) -> PosteriorParams:
    """Closed-form update: mode moves toward the sample mean, precision adds.

    The convex combination is carried out in exact rational arithmetic so
    that exact ties in the posterior mode survive (they decide whether a
    unique MAP ranking exists).  Under the theta-linked precision the
    weights reduce exactly to N/(n0+N) and n0/(n0+N).
    """
    if theta < 0:
        raise ValueError("theta must be nonnegative")
    N = s.size
    theta_f = Fraction(theta)
    eta0_f = (
        Fraction(prior.eta0) if prior.eta0 is not None else theta_f * Fraction(prior.n0)
    )
    etaN_f = eta0_f + theta_f * N
    if N == 0 or etaN_f == 0:
        return PosteriorParams(rhoN=prior.rho0, etaN=float(etaN_f))
    w_data = theta_f * N / etaN_f
    w_prior = 1 - w_data
    mean = sample_mean(s)
    coords = tuple(
        w_data * Fraction(m) + w_prior * Fraction(p)
        for m, p in zip(mean.coords, prior.rho0.coords)
    )
    return PosteriorParams(rhoN=PermutohedronPoint(coords), etaN=float(etaN_f))


def map_estimate(pp: PosteriorParams) -> Ranking:
    """Posterior modal ranking: the rank vector of the updated mode.

    Raises TiesPresent when coordinates of the mode tie, in which case no
    unique maximizer exists.
    """
    return rank_vector(pp.rhoN, ties="strict")


class Comparison(enum.Enum):
    FIRST_HIGHER = "first_higher"
    SECOND_HIGHER = "second_higher"
    EQUAL = "equal"


def theorem1_compare(
    rho1: Ranking,
    rho2: Ranking,
    s: RankingSample,
    rho0: PointLike,
    gamma,
) -> Comparison:
    """Posterior ordering of two rankings from data and prior distances.

    rho1 ranks above rho2 exactly when
    D(rho1) - D(rho2) < gamma * [D*(rho2) - D*(rho1)], with D the total
    squared distance to the data, D* the squared distance to the prior
    mode, and gamma the prior-to-likelihood precision ratio.  All terms are
    kept rational, so exact boundary cases report EQUAL.
    """
    d1 = sum(spearman_distance(r, rho1) for r in s.rows)
    d2 = sum(spearman_distance(r, rho2) for r in s.rows)
    point = _as_point(rho0)
    ds1 = sum(
        (Fraction(a) - b) * (Fraction(a) - b)
        for a, b in zip(point.coords, rho1.ranks)
    )
    ds2 = sum(
        (Fraction(a) - b) * (Fraction(a) - b)
        for a, b in zip(point.coords, rho2.ranks)
    )
    lhs = Fraction(d1 - d2)
    rhs = Fraction(gamma) * (ds2 - ds1)
    if lhs < rhs:
        return Comparison.FIRST_HIGHER
    if lhs > rhs:
        return Comparison.SECOND_HIGHER
    return Comparison.EQUAL


def elicit_topk(n: int, top_ranks: dict) -> PermutohedronPoint:
    """Prior mode from the top-k ranks only.

    ``top_ranks`` maps item positions (1-based) to ranks, which must be
    exactly {1..k}; every unranked item gets the uniform value (n+k+1)/2.
    """
    k = len(top_ranks)
    if k > n:
        raise ValueError("more ranked items than items")
    items = list(top_ranks.keys())
    if len(set(items)) != k or any(not 1 <= i <= n for i in items):
        raise ValueError("item positions must be distinct and within 1..n")
    ranks = sorted(top_ranks.values())
    if ranks != list(range(1, k + 1)):
        raise ValueError(f"ranks must be exactly 1..{k}, got {sorted(ranks)}")
    fill = Fraction(n + k + 1, 2)
    coords: list = [fill] * n
    for item, rank in top_ranks.items():
        coords[item - 1] = rank
    return PermutohedronPoint(tuple(coords))


def elicit_multi_expert(
    modes: Sequence[PointLike], weights: Optional[Sequence[float]] = None
) -> PermutohedronPoint:
    """Convex combination of several prior modes (uniform by default)."""
    if not modes:
        raise ValueError("need at least one mode")
    points = [_as_point(m) for m in modes]
    n = points[0].n
    for p in points[1:]:
        if p.n != n:
            raise LengthMismatch("modes have different lengths")
    if weights is None:
        w = [Fraction(1, len(points))] * len(points)
    else:
        if len(weights) != len(points):
            raise LengthMismatch("one weight per mode required")
        w = [Fraction(x) for x in weights]
        if any(x < 0 for x in w):
            raise ValueError("weights must be nonnegative")
        if abs(float(sum(w) - 1)) > 1e-9:
            raise ValueError("weights must sum to 1")
    coords = tuple(
        sum(wi * Fraction(p.coords[i]) for wi, p in zip(w, points)) for i in range(n)
    )
    return PermutohedronPoint(coords)


HIGHER_IS_BETTER = "higher_is_better"
LOWER_IS_BETTER = "lower_is_better"


def elicit_from_covariates(
    values: Sequence[Sequence[float]],
    orientations: Sequence[str],
) -> tuple[tuple[PermutohedronPoint, ...], PermutohedronPoint]:
    """Prior modes from an item-by-covariate matrix.

    Each column becomes a midrank vector oriented so rank 1 is the most
    preferred item, then the columns are averaged into a single mode.
    Returns (per-covariate rank vectors, averaged mode).
    """
    rows = [tuple(r) for r in values]
    if not rows:
        raise ValueError("empty covariate matrix")
    n_items = len(rows)
    n_cov = len(rows[0])
    if any(len(r) != n_cov for r in rows):
        raise LengthMismatch("ragged covariate matrix")
    if len(orientations) != n_cov:
        raise LengthMismatch("one orientation per covariate required")
    columns = []
    for j, orient in enumerate(orientations):
        col = [rows[i][j] for i in range(n_items)]
        if orient == HIGHER_IS_BETTER:
            col = [-v for v in col]
        elif orient != LOWER_IS_BETTER:
            raise ValueError(f"unknown orientation {orient!r}")
        if len(set(col)) == 1:
            warnings.warn(
                f"covariate column {j + 1} is constant; its rank vector is "
                "uninformative (all midranks equal)",
                RuntimeWarning,
                stacklevel=2,
            )
        columns.append(rank_vector(col, ties="midrank"))
    return tuple(columns), elicit_multi_expert(columns)
