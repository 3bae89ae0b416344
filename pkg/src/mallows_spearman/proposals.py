"""Leap-and-shift proposal kernel on the space of rankings.

A move picks an item uniformly, leaps its rank to a new value within a
window of half-width L, and shifts the ranks in between by one to fill the
gap.  Transition probabilities are exact: adjacent swaps can be generated
by two different (item, new-rank) pairs and both generators are counted.
"""

from __future__ import annotations

import math

import numpy as np

from .perm import Ranking


def _n_choices(rank: int, n: int, leap: int) -> int:
    """Number of admissible new ranks for an item currently at `rank`."""
    return min(n, rank + leap) - max(1, rank - leap)


def _apply_move(ranks: tuple[int, ...], item: int, new_rank: int) -> tuple[int, ...]:
    """Move `item` (0-based) to `new_rank`, shifting the displaced block."""
    old = ranks[item]
    out = list(ranks)
    if new_rank > old:
        for i, r in enumerate(ranks):
            if old < r <= new_rank:
                out[i] = r - 1
    else:
        for i, r in enumerate(ranks):
            if new_rank <= r < old:
                out[i] = r + 1
    out[item] = new_rank
    return tuple(out)


def leap_shift_log_prob(frm: Ranking, to: Ranking, leap: int) -> float:
    """log transition probability of proposing `to` from `frm`.

    Sums over every (item, new rank) pair whose move reproduces `to`;
    -inf when no such pair exists.
    """
    a, b = frm.ranks, to.ranks
    n = len(a)
    prob = 0.0
    for item in range(n):
        if a[item] == b[item]:
            continue
        if abs(b[item] - a[item]) > leap:
            continue
        if _apply_move(a, item, b[item]) == b:
            prob += 1.0 / (n * _n_choices(a[item], n, leap))
    return math.log(prob) if prob > 0.0 else -math.inf


def leap_and_shift(
    rho: Ranking, leap: int, rng: np.random.Generator
) -> tuple[Ranking, float, float]:
    """Draw one proposal; returns (proposal, log forward, log backward)."""
    n = rho.n
    if not 1 <= leap <= n - 1:
        raise ValueError(f"leap size must be in [1, {n - 1}], got {leap}")
    item = int(rng.integers(n))
    old = rho.ranks[item]
    lo, hi = max(1, old - leap), min(n, old + leap)
    choices = [r for r in range(lo, hi + 1) if r != old]
    new_rank = choices[int(rng.integers(len(choices)))]
    proposal = Ranking(_apply_move(rho.ranks, item, new_rank))
    log_fwd = leap_shift_log_prob(rho, proposal, leap)
    log_bwd = leap_shift_log_prob(proposal, rho, leap)
    return proposal, log_fwd, log_bwd
