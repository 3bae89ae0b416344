import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mallows_spearman.errors import LengthMismatch, TiesPresent
from mallows_spearman.model import MmsParams, sample_exact
from mallows_spearman.partition import build_frequency_table, log_z_star
from mallows_spearman.perm import (
    PermutohedronPoint,
    Ranking,
    RankingSample,
    all_rankings,
    coord_sum,
    rank_vector,
    sample_mean,
    spearman_distance,
)
from mallows_spearman.prior import (
    Comparison,
    EmmsPrior,
    elicit_from_covariates,
    elicit_multi_expert,
    elicit_topk,
    emms_log_density,
    map_estimate,
    posterior_update,
    theorem1_compare,
)

REFERENCE_RBAR = (2.33, 2.17, 3.0, 2.5)


@pytest.fixture(scope="module")
def t4():
    return build_frequency_table(4)


@pytest.fixture(scope="module")
def reference_sample(t4):
    return sample_exact(MmsParams(Ranking((2, 1, 4, 3)), 0.06), 30, t4, 151)


class TestEmmsPrior:
    def test_exactly_one_precision(self):
        rho0 = Ranking((1, 2, 3))
        with pytest.raises(ValueError):
            EmmsPrior(rho0=PermutohedronPoint((1, 2, 3)))
        with pytest.raises(ValueError):
            EmmsPrior(rho0=PermutohedronPoint((1, 2, 3)), eta0=1.0, n0=2.0)

    def test_eta0_at(self):
        fixed = EmmsPrior.fixed(Ranking((1, 2, 3)), 0.7)
        assert fixed.eta0_at() == 0.7
        linked = EmmsPrior.theta_linked(Ranking((1, 2, 3)), 10)
        assert linked.eta0_at(0.06) == pytest.approx(0.6)
        with pytest.raises(ValueError):
            linked.eta0_at()


class TestEmmsLogDensity:
    def test_uniform_at_zero_precision(self):
        prior = EmmsPrior.fixed(Ranking((2, 1, 3)), 0.0)
        vals = {emms_log_density(r, prior) for r in all_rankings(3)}
        assert vals == {0.0}

    def test_barycenter_mode_is_uniform(self):
        prior = EmmsPrior.fixed(PermutohedronPoint.barycenter(4), 1.3)
        vals = [emms_log_density(r, prior, normalized=True) for r in all_rankings(4)]
        assert max(vals) - min(vals) < 1e-12
        assert vals[0] == pytest.approx(-math.log(24), abs=1e-10)

    def test_decreasing_in_distance_and_equal_at_equal(self):
        prior = EmmsPrior.fixed(Ranking((2, 1, 3, 4)), 0.3)
        by_distance = {}
        for r in all_rankings(4):
            d = spearman_distance(prior.rho0, r)
            by_distance.setdefault(d, set()).add(
                round(emms_log_density(r, prior, normalized=True), 12)
            )
        for d, vals in by_distance.items():
            assert len(vals) == 1
        ds = sorted(by_distance)
        densities = [next(iter(by_distance[d])) for d in ds]
        assert all(a > b for a, b in zip(densities, densities[1:]))

    def test_normalized_sums_to_one(self):
        prior = EmmsPrior.fixed(PermutohedronPoint((1.5, 1.5, 3.0, 4.0)), 0.4)
        total = sum(
            math.exp(emms_log_density(r, prior, normalized=True))
            for r in all_rankings(4)
        )
        assert total == pytest.approx(1.0, abs=1e-10)

    def test_linked_requires_theta(self):
        prior = EmmsPrior.theta_linked(Ranking((1, 2, 3)), 5)
        with pytest.raises(ValueError):
            emms_log_density(Ranking((1, 2, 3)), prior)
        assert emms_log_density(Ranking((1, 2, 3)), prior, theta_for_link=0.1) == 0.0


class TestPosteriorUpdate:
    def test_empty_sample_returns_prior(self):
        prior = EmmsPrior.fixed(PermutohedronPoint((1.5, 1.5, 3.0, 4.0)), 0.8)
        pp = posterior_update(prior, RankingSample(()), 0.3)
        assert pp.rhoN == prior.rho0
        assert pp.etaN == pytest.approx(0.8)

    def test_zero_eta0_gives_sample_mean(self):
        prior = EmmsPrior.fixed(Ranking((1, 2, 3)), 0.0)
        s = RankingSample((Ranking((2, 1, 3)), Ranking((3, 1, 2))))
        pp = posterior_update(prior, s, 0.25)
        assert pp.rhoN.coords == sample_mean(s).coords
        assert pp.etaN == pytest.approx(0.5)

    def test_reference_update_with_tie(self):
        # weights reduce exactly to (2/3, 1/3); coordinates 3 and 4 of the
        # posterior mode tie exactly at 3, so no unique MAP ranking exists
        prior = EmmsPrior.theta_linked(Ranking((2, 1, 3, 4)), 15)
        rows = _sample_with_mean_7_3()
        pp = posterior_update(prior, rows, 0.06)
        assert list(pp.rhoN.coords) == [
            Fraction(20, 9),
            Fraction(16, 9),
            Fraction(3),
            Fraction(3),
        ]
        assert pp.etaN == pytest.approx(0.06 * 45)
        with pytest.raises(TiesPresent) as exc:
            map_estimate(pp)
        assert exc.value.tied_groups == ((3, 4),)

    def test_update_from_rounded_reference_inputs(self):
        # the same convex combination applied to the rounded reference mean
        w = Fraction(2, 3)
        rho0 = (2, 1, 3, 4)
        coords = tuple(
            w * Fraction(m) + (1 - w) * p for m, p in zip(REFERENCE_RBAR, rho0)
        )
        assert [float(c) for c in coords] == pytest.approx(
            [2.22, 1.78, 3.0, 3.0], abs=1e-12
        )

    def test_reference_update_n0_5(self):
        prior = EmmsPrior.theta_linked(Ranking((2, 1, 3, 4)), 5)
        pp = posterior_update(prior, _sample_with_mean_7_3(), 0.06)
        assert map_estimate(pp) == Ranking((2, 1, 4, 3))
        target = [
            Fraction(6, 7) * Fraction(7, 3) + Fraction(1, 7) * 2,
            Fraction(6, 7) * Fraction(13, 6) + Fraction(1, 7) * 1,
            Fraction(6, 7) * 3 + Fraction(1, 7) * 3,
            Fraction(6, 7) * Fraction(5, 2) + Fraction(1, 7) * 4,
        ]
        assert list(pp.rhoN.coords) == target

    def test_eta_accumulates(self):
        prior = EmmsPrior.fixed(Ranking((1, 2, 3)), 1.5)
        s = RankingSample((Ranking((1, 2, 3)),) * 4)
        pp = posterior_update(prior, s, 0.2)
        assert pp.etaN == pytest.approx(1.5 + 0.8)

    def test_mode_approaches_mean(self):
        prior = EmmsPrior.fixed(Ranking((2, 1, 3, 4)), 2.0)
        base = (Ranking((1, 2, 3, 4)), Ranking((4, 3, 2, 1)))
        gaps = []
        for N in (10, 100, 1000, 10_000):
            s = RankingSample(base * (N // 2))
            pp = posterior_update(prior, s, 0.1)
            gap = max(abs(float(c) - 2.5) for c in pp.rhoN.coords)
            gaps.append(gap)
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        # residual pull of the prior is (eta0/etaN) * max|rho0 - mean|
        assert gaps[-1] == pytest.approx(1.5 * 2.0 / (2.0 + 1000.0), rel=1e-9)


def _sample_with_mean_7_3():
    """A fixed 30-row sample with mean exactly (7/3, 13/6, 3, 5/2)."""
    table = build_frequency_table(4)
    s = sample_exact(MmsParams(Ranking((2, 1, 4, 3)), 0.06), 30, table, 151)
    assert sample_mean(s).coords == (
        Fraction(7, 3),
        Fraction(13, 6),
        Fraction(3),
        Fraction(5, 2),
    )
    return s


class TestMapEstimate:
    def test_ranking_mode_is_its_own_map(self):
        prior = EmmsPrior.fixed(Ranking((3, 1, 2)), 1.0)
        pp = posterior_update(prior, RankingSample(()), 0.1)
        assert map_estimate(pp) == Ranking((3, 1, 2))


class TestTheorem1Compare:
    def test_identical_rankings(self, reference_sample):
        r = Ranking((1, 2, 3, 4))
        out = theorem1_compare(r, r, reference_sample, Ranking((2, 1, 3, 4)), 3)
        assert out is Comparison.EQUAL

    def test_reference_threshold(self, reference_sample):
        rho0 = Ranking((2, 1, 3, 4))
        mle = Ranking((2, 1, 4, 3))
        for gamma, want in [
            (0, Comparison.SECOND_HIGHER),
            (14, Comparison.SECOND_HIGHER),
            (15, Comparison.EQUAL),
            (Fraction(151, 10), Comparison.FIRST_HIGHER),
            (16, Comparison.FIRST_HIGHER),
            (20, Comparison.FIRST_HIGHER),
        ]:
            assert theorem1_compare(rho0, mle, reference_sample, rho0, gamma) is want

    def test_equal_prior_distance_decided_by_data(self, reference_sample):
        # all pairs at the same distance from the prior mode reduce to D
        rho0 = Ranking((2, 1, 3, 4))
        rankings = list(all_rankings(4))
        for r1 in rankings:
            for r2 in rankings:
                if r1 == r2:
                    continue
                if spearman_distance(rho0, r1) != spearman_distance(rho0, r2):
                    continue
                d1 = sum(spearman_distance(r, r1) for r in reference_sample)
                d2 = sum(spearman_distance(r, r2) for r in reference_sample)
                got = theorem1_compare(r1, r2, reference_sample, rho0, 7)
                if d1 < d2:
                    assert got is Comparison.FIRST_HIGHER
                elif d1 > d2:
                    assert got is Comparison.SECOND_HIGHER
                else:
                    assert got is Comparison.EQUAL


class TestConjugacy:
    @pytest.mark.parametrize("seed", range(8))
    def test_exact_posterior_is_emms(self, seed):
        from mallows_spearman.inference import exact_posterior_fixed_theta

        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 6))
        table = build_frequency_table(n)
        theta = float(rng.uniform(0.01, 0.8))
        N = int(rng.integers(0, 30))
        truth = Ranking(tuple(rng.permutation(n) + 1))
        s = sample_exact(MmsParams(truth, theta), N, table, int(rng.integers(2**31)))
        mode = tuple(rng.dirichlet(np.ones(math.factorial(n))))
        # random hull point: mix of all rankings
        perms = np.array([r.ranks for r in all_rankings(n)], dtype=float)
        rho0 = PermutohedronPoint(tuple(np.array(mode) @ perms))
        prior = EmmsPrior.fixed(rho0, float(rng.uniform(0.0, 1.0)))
        post = exact_posterior_fixed_theta(s, theta, prior)
        updated = posterior_update(prior, s, theta)
        conj = EmmsPrior.fixed(updated.rhoN, updated.etaN)
        for r, p in post.items():
            want = math.exp(emms_log_density(r, conj, normalized=True))
            assert abs(p - want) < 1e-10


class TestElicitTopK:
    def test_reference_topk(self):
        got = elicit_topk(10, {1: 1, 2: 2, 3: 3})
        assert tuple(float(c) for c in got.coords) == (
            1, 2, 3, 7, 7, 7, 7, 7, 7, 7,
        )

    def test_full_ranking(self):
        got = elicit_topk(3, {2: 1, 3: 2, 1: 3})
        assert tuple(float(c) for c in got.coords) == (3.0, 1.0, 2.0)

    def test_empty_gives_barycenter(self):
        assert elicit_topk(4, {}) == PermutohedronPoint.barycenter(4)

    def test_bad_ranks(self):
        with pytest.raises(ValueError):
            elicit_topk(5, {1: 1, 2: 3})
        with pytest.raises(ValueError):
            elicit_topk(5, {1: 1, 9: 2})

    @given(st.integers(1, 10).flatmap(
        lambda n: st.integers(0, n).flatmap(
            lambda k: st.just((n, k)))))
    @settings(max_examples=60)
    def test_sum_is_exact(self, nk):
        n, k = nk
        items = list(range(1, k + 1))
        got = elicit_topk(n, {item: rank for rank, item in enumerate(items, 1)})
        assert sum(got.coords) == coord_sum(n)


class TestElicitMultiExpert:
    def test_single_expert_identity(self):
        p = PermutohedronPoint((1.5, 1.5, 3.0))
        assert elicit_multi_expert([p]) == p

    def test_opposite_rankings_average_to_barycenter(self):
        got = elicit_multi_expert([Ranking((1, 2, 3)), Ranking((3, 2, 1))])
        assert got == PermutohedronPoint.barycenter(3)

    def test_sushi_average(self):
        columns = [
            (9, 3, 5, 8, 2, 4, 7, 1, 6, 10),
            (2, 5, 1, 4, 9, 6, 8, 3, 7, 10),
            (6, 4, 5, 8, 2, 3, 9, 1, 7, 10),
            (6.5, 3.5, 3.5, 1, 3.5, 3.5, 6.5, 8, 9, 10),
        ]
        got = elicit_multi_expert([PermutohedronPoint(c) for c in columns])
        assert tuple(float(c) for c in got.coords) == (
            5.875, 3.875, 3.625, 5.25, 4.125, 4.125, 7.625, 3.25, 7.25, 10.0,
        )

    def test_weight_validation(self):
        a, b = Ranking((1, 2)), Ranking((2, 1))
        with pytest.raises(ValueError):
            elicit_multi_expert([a, b], weights=[0.5, 0.6])
        with pytest.raises(ValueError):
            elicit_multi_expert([a, b], weights=[-0.5, 1.5])
        with pytest.raises(LengthMismatch):
            elicit_multi_expert([a, b], weights=[1.0])

    def test_dimension_mismatch(self):
        with pytest.raises(LengthMismatch):
            elicit_multi_expert([Ranking((1, 2)), Ranking((1, 2, 3))])


class TestElicitFromCovariates:
    def test_sushi_eat_column(self):
        values = [
            (2.14,), (1.99,), (2.35,), (2.04,), (1.64,),
            (1.98,), (1.87,), (2.06,), (1.88,), (1.46,),
        ]
        cols, avg = elicit_from_covariates(values, ["higher_is_better"])
        assert tuple(float(c) for c in cols[0].coords) == (
            2, 5, 1, 4, 9, 6, 8, 3, 7, 10,
        )
        assert avg == cols[0]

    def test_sushi_sell_column_midranks(self):
        values = [
            (0.84,), (0.88,), (0.88,), (0.92,), (0.88,),
            (0.88,), (0.84,), (0.80,), (0.44,), (0.40,),
        ]
        cols, _ = elicit_from_covariates(values, ["higher_is_better"])
        assert cols[0].coords == (6.5, 3.5, 3.5, 1, 3.5, 3.5, 6.5, 8, 9, 10)

    def test_decreasing_column_lower_is_better(self):
        values = [(9.0,), (7.5,), (3.0,), (1.5,)]
        cols, _ = elicit_from_covariates(values, ["lower_is_better"])
        assert tuple(float(c) for c in cols[0].coords) == (4, 3, 2, 1)

    def test_constant_column_warns(self):
        values = [(1.0, 5.0), (1.0, 4.0), (1.0, 3.0)]
        with pytest.warns(RuntimeWarning, match="constant"):
            cols, _ = elicit_from_covariates(
                values, ["higher_is_better", "higher_is_better"]
            )
        assert cols[0] == PermutohedronPoint.barycenter(3)

    def test_orientation_validation(self):
        with pytest.raises(ValueError):
            elicit_from_covariates([(1.0,), (2.0,)], ["sideways"])
