import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mallows_spearman.errors import LengthMismatch, TiesPresent
from mallows_spearman.perm import (
    PermutohedronPoint,
    Ranking,
    RankingSample,
    compose,
    coord_sum,
    inverse,
    max_distance,
    radius_sq,
    rank_vector,
    sample_mean,
    spearman_distance,
    sq_norm,
)

perm_of = lambda n: st.permutations(list(range(1, n + 1)))
small_perm = st.integers(2, 6).flatmap(lambda n: perm_of(n))


def all_perm_array(n):
    return np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int64)


class TestRanking:
    def test_valid(self):
        r = Ranking((2, 1, 4, 3))
        assert r.n == 4
        assert sum(r) == coord_sum(4)

    @pytest.mark.parametrize("bad", [(1, 1, 2), (0, 1, 2), (1, 2, 4), ()])
    def test_invalid(self, bad):
        with pytest.raises(ValueError):
            Ranking(bad)

    def test_identity(self):
        assert Ranking.identity(4).ranks == (1, 2, 3, 4)

    @given(small_perm)
    def test_norm_identities(self, p):
        r = Ranking(tuple(p))
        assert sum(r) == coord_sum(r.n)
        assert sum(v * v for v in r) == sq_norm(r.n)


class TestPermutohedronPoint:
    def test_barycenter(self):
        b = PermutohedronPoint.barycenter(5)
        assert all(c == Fraction(3) for c in b.coords)

    def test_sum_constraint(self):
        with pytest.raises(ValueError, match="sum"):
            PermutohedronPoint((1.0, 2.0, 3.5))

    def test_bounds(self):
        with pytest.raises(ValueError, match="out of"):
            PermutohedronPoint((0.5, 2.0, 3.5))

    def test_accepts_sample_means(self):
        PermutohedronPoint((2.33, 2.17, 3.0, 2.5))


class TestSpearmanDistance:
    def test_identity_case(self):
        assert spearman_distance(Ranking((1, 2, 3)), Ranking((1, 2, 3))) == 0

    def test_reference_values(self):
        assert spearman_distance(Ranking((3, 4, 2, 1)), Ranking((2, 1, 3, 4))) == 20
        assert spearman_distance(Ranking((2, 1, 4, 3)), Ranking((2, 1, 3, 4))) == 2

    def test_integer_exact(self):
        d = spearman_distance(Ranking((2, 1, 3)), Ranking((3, 1, 2)))
        assert isinstance(d, int) and d == 2

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            spearman_distance(Ranking((1, 2)), Ranking((1, 2, 3)))

    @given(small_perm.flatmap(lambda p: st.tuples(st.just(p), perm_of(len(p)))))
    def test_symmetric_nonnegative(self, pair):
        a, b = Ranking(tuple(pair[0])), Ranking(tuple(pair[1]))
        assert spearman_distance(a, b) == spearman_distance(b, a) >= 0
        assert (spearman_distance(a, b) == 0) == (a == b)

    @pytest.mark.parametrize("n", [2, 3, 4, 5])
    def test_right_invariance_exhaustive(self, n):
        perms = all_perm_array(n)
        index = {tuple(p): i for i, p in enumerate(perms)}
        dist = ((perms[:, None, :] - perms[None, :, :]) ** 2).sum(axis=2)
        # comp[a, e] = index of perms[a] o perms[e]
        comp = np.empty((len(perms), len(perms)), dtype=np.int64)
        for e, eta in enumerate(perms):
            composed = perms[:, eta - 1]
            comp[:, e] = [index[tuple(row)] for row in composed]
        for e in range(len(perms)):
            c = comp[:, e]
            assert np.array_equal(dist[np.ix_(c, c)], dist)

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_barycenter_radius(self, n):
        perms = all_perm_array(n)
        center = (n + 1) / 2.0
        d = ((perms - center) ** 2).sum(axis=1)
        assert np.allclose(d, float(radius_sq(n)))

    @pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
    def test_max_distance(self, n):
        perms = all_perm_array(n)
        ident = np.arange(1, n + 1)
        d = ((perms - ident) ** 2).sum(axis=1)
        assert d.max() == max_distance(n)


class TestComposeInverse:
    def test_identity_right_factor(self):
        a = Ranking((2, 1, 3))
        assert compose(a, Ranking.identity(3)) == a

    def test_inverse_example(self):
        assert inverse(Ranking((2, 3, 1))) == Ranking((3, 1, 2))

    def test_length_mismatch(self):
        with pytest.raises(LengthMismatch):
            compose(Ranking((1, 2)), Ranking((1, 2, 3)))

    @given(small_perm)
    def test_compose_inverse_is_identity(self, p):
        a = Ranking(tuple(p))
        assert compose(a, inverse(a)) == Ranking.identity(a.n)
        assert compose(inverse(a), a) == Ranking.identity(a.n)


class TestRankVector:
    def test_strict_example(self):
        assert rank_vector((1.5, 2.9, 3.8, 4.7, 2.1)) == Ranking((1, 3, 4, 5, 2))

    def test_all_tied(self):
        with pytest.raises(TiesPresent) as exc:
            rank_vector(PermutohedronPoint((3, 3, 3, 3, 3)), ties="strict")
        assert exc.value.tied_groups == ((1, 2, 3, 4, 5),)

    def test_tie_groups_named(self):
        with pytest.raises(TiesPresent) as exc:
            rank_vector((1.0, 2.5, 2.5, 4.0), ties="strict")
        assert exc.value.tied_groups == ((2, 3),)

    def test_midrank_sushi_mode(self):
        rho01 = PermutohedronPoint(
            (5.875, 3.875, 3.625, 5.25, 4.125, 4.125, 7.625, 3.25, 7.25, 10.0)
        )
        out = rank_vector(rho01, ties="midrank")
        assert out.coords == (7, 3, 2, 6, 4.5, 4.5, 9, 1, 8, 10)

    @given(small_perm)
    def test_strict_idempotent_on_rankings(self, p):
        r = Ranking(tuple(p))
        assert rank_vector(r, ties="strict") == r

    @given(st.lists(st.integers(0, 5), min_size=2, max_size=8))
    def test_midrank_sum(self, values):
        out = rank_vector(values, ties="midrank")
        n = len(values)
        assert float(sum(out.coords)) == coord_sum(n)

    def test_unknown_mode(self):
        with pytest.raises(ValueError):
            rank_vector((1, 2), ties="banana")


class TestSampleMean:
    def test_single(self):
        s = RankingSample((Ranking((1, 3, 2)),))
        assert sample_mean(s).coords == (1, 3, 2)

    def test_symmetric_pair(self):
        s = RankingSample((Ranking((1, 2)), Ranking((2, 1))))
        assert sample_mean(s).coords == (Fraction(3, 2), Fraction(3, 2))

    def test_empty(self):
        with pytest.raises(ValueError):
            sample_mean(RankingSample(()))

    @given(st.integers(2, 5).flatmap(
        lambda n: st.lists(perm_of(n), min_size=1, max_size=12)))
    @settings(max_examples=50)
    def test_mean_sum_exact(self, rows):
        s = RankingSample(tuple(Ranking(tuple(r)) for r in rows))
        m = sample_mean(s)
        assert sum(m.coords) == coord_sum(s.n)


class TestRankingSample:
    def test_mixed_lengths_rejected(self):
        with pytest.raises(LengthMismatch):
            RankingSample((Ranking((1, 2)), Ranking((1, 2, 3))))

    def test_as_array(self):
        s = RankingSample((Ranking((2, 1)), Ranking((1, 2))))
        assert s.as_array().tolist() == [[2, 1], [1, 2]]
