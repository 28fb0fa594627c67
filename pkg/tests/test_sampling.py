import itertools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

import sketchdescent as skd
from sketchdescent.errors import InvalidConfigError
from sketchdescent.rng import make_rng
from sketchdescent.sampling import (
    capped_candidates,
    capped_threshold,
    rule_expectation,
    subset_max_expectation,
)

from conftest import family_on


def exact_weights(q, tau):
    """Big-rational binomial evaluation, independent of the recurrence."""
    return [Fraction(math.comb(tau - 1 + j, tau - 1), math.comb(q, tau))
            for j in range(q - tau + 1)]


def enumerated_subset_max_mean(values, tau):
    """Average of the max over every tau-subset, the direct definition."""
    combos = list(itertools.combinations(values, tau))
    return sum(max(c) for c in combos) / len(combos)


class TestExpectationWeights:
    def test_q3_tau2(self):
        w = skd.gs_expectation_weights(3, 2)
        assert np.allclose(w, [1.0 / 3.0, 2.0 / 3.0], rtol=1e-15)

    def test_tau1_is_uniform(self):
        for q in (1, 4, 9):
            assert np.allclose(skd.gs_expectation_weights(q, 1),
                               np.full(q, 1.0 / q), rtol=1e-15)

    def test_tau_q_is_point_mass(self):
        assert np.array_equal(skd.gs_expectation_weights(6, 6), [1.0])

    def test_sum_to_one_up_to_200(self):
        for q in (1, 2, 5, 17, 63, 128, 200):
            for tau in {t for t in (1, 2, q // 2, q) if 1 <= t <= q}:
                w = skd.gs_expectation_weights(q, tau)
                assert abs(float(w.sum()) - 1.0) <= 1e-12

    def test_matches_big_rational_oracle(self):
        for q in (3, 7, 20, 45):
            for tau in range(1, q + 1):
                w = skd.gs_expectation_weights(q, tau)
                exact = exact_weights(q, tau)
                for wf, we in zip(w, exact):
                    assert abs(wf - float(we)) <= 1e-12

    def test_invalid_tau(self):
        with pytest.raises(InvalidConfigError):
            skd.gs_expectation_weights(4, 5)
        with pytest.raises(InvalidConfigError):
            skd.gs_expectation_weights(4, 0)


class TestSubsetMaxExpectation:
    def test_matches_enumeration_small_q(self):
        rng = np.random.default_rng(0)
        for q in range(1, 9):
            values = rng.random(q)
            for tau in range(1, q + 1):
                got = subset_max_expectation(values, tau)
                want = enumerated_subset_max_mean(list(values), tau)
                assert got == pytest.approx(want, rel=1e-12)

    def test_monotone_in_tau(self):
        values = np.random.default_rng(1).random(12)
        prev = -np.inf
        for tau in range(1, 13):
            e = subset_max_expectation(values, tau)
            assert e >= prev - 1e-15
            prev = e


class TestGreedySelect:
    def test_argmax_over_sample(self):
        idx = skd.greedy_select(np.array([0.1, 0.9, 0.3]), np.array([2, 5, 7]))
        assert idx == 5

    def test_ties_break_to_smallest(self):
        idx = skd.greedy_select(np.array([0.5, 0.5, 0.5]), np.array([3, 6, 9]))
        assert idx == 3

    def test_singleton(self):
        assert skd.greedy_select(np.array([0.2]), np.array([4])) == 4


class TestCapped:
    def test_hand_threshold_and_candidates(self):
        losses = np.array([1.0, 2.0, 3.0, 4.0])
        rule = skd.capped(theta=0.5, tau1=1, tau2=4, exact=True)
        # mean = 2.5, max = 4 -> blended threshold 3.25, admits only index 3
        assert capped_threshold(losses, rule) == pytest.approx(3.25)
        assert np.array_equal(capped_candidates(losses, rule), [3])

    def test_theta_zero_tau2_full_is_max_distance(self):
        losses = np.array([0.5, 2.0, 1.5])
        rule = skd.capped(theta=0.0, tau1=1, tau2=None, exact=True)
        assert np.array_equal(capped_candidates(losses, rule), [1])

    def test_equal_losses_admit_everyone(self):
        losses = np.full(5, 0.7)
        rule = skd.capped(theta=0.5, tau1=1, tau2=None, exact=True)
        assert np.array_equal(capped_candidates(losses, rule), np.arange(5))

    def test_lower_bound_mode_uses_mean(self):
        losses = np.array([1.0, 2.0, 3.0, 4.0])
        rule = skd.capped(theta=0.5, tau1=1, tau2=4, exact=False)
        assert capped_threshold(losses, rule) == pytest.approx(2.5)

    def test_select_none_when_all_zero(self):
        rule = skd.capped(exact=True)
        assert skd.capped_select(np.zeros(4), rule, make_rng(0)) is None

    def test_selected_clears_threshold(self):
        rng = make_rng(3)
        rule = skd.capped(theta=0.3, tau1=2, tau2=None, exact=True)
        for trial in range(50):
            losses = np.random.default_rng(trial).random(9)
            thr = capped_threshold(losses, rule)
            pick = skd.capped_select(losses, rule, rng)
            assert losses[pick] >= thr - 1e-12

    def test_argmax_always_admitted(self):
        for trial in range(30):
            losses = np.random.default_rng(100 + trial).random(7)
            rule = skd.capped(theta=1.0, tau1=7, tau2=7, exact=True)
            cand = capped_candidates(losses, rule)
            assert int(np.argmax(losses)) in cand

    def test_rule_expectation_is_mean_over_candidates(self):
        losses = np.array([1.0, 2.0, 3.0, 4.0])
        rule = skd.capped(theta=0.5, tau1=1, tau2=4, exact=True)
        assert rule_expectation(losses, rule) == pytest.approx(4.0)

    def test_theta_domain(self):
        with pytest.raises(InvalidConfigError):
            skd.capped(theta=1.5)


class TestDrawSample:
    def test_full_sample(self):
        assert np.array_equal(skd.draw_sample(5, 5, make_rng(0)), np.arange(5))

    def test_invalid_tau(self):
        with pytest.raises(InvalidConfigError):
            skd.draw_sample(4, 5, make_rng(0))

    def test_deterministic_given_seed(self):
        a = skd.draw_sample(20, 6, make_rng(9))
        b = skd.draw_sample(20, 6, make_rng(9))
        assert np.array_equal(a, b)
        assert np.all(np.diff(a) > 0)  # ascending, distinct

    def test_singleton_uniformity_chi_square(self):
        q, draws = 6, 100_000
        rng = make_rng(17)
        counts = np.zeros(q)
        for _ in range(draws):
            counts[skd.draw_sample(q, 1, rng)[0]] += 1
        p = stats.chisquare(counts).pvalue
        assert p > 0.01

    def test_pair_subset_frequencies(self):
        q, tau, draws = 4, 2, 60_000
        rng = make_rng(23)
        counts = {}
        for _ in range(draws):
            key = tuple(skd.draw_sample(q, tau, rng))
            counts[key] = counts.get(key, 0) + 1
        assert len(counts) == 6
        expect = draws / 6.0
        sigma = math.sqrt(draws * (1 / 6) * (5 / 6))
        for key, c in counts.items():
            assert abs(c - expect) <= 3.0 * sigma


class TestRules:
    def test_normalization_of_degenerate_rules(self):
        assert skd.uniform().label == "uniform"
        assert skd.greedy(1) == skd.uniform()
        assert skd.max_distance().tau is None
        assert skd.greedy(5).label == "greedy:5"
        assert skd.max_distance().label == "maxdist"

    def test_parse_rule_round_trips(self):
        for text in ("uniform", "maxdist", "greedy:7",
                     "capped:0.5,1,m", "capped:0.25,2,5,exact"):
            assert skd.parse_rule(text).label == text

    def test_parse_rule_errors(self):
        for text in ("nope", "greedy:x", "capped:0.5", "capped:a,1,2",
                     "capped:0.5,1,2,fast"):
            with pytest.raises(InvalidConfigError):
                skd.parse_rule(text)

    def test_greedy_m_means_max_distance(self):
        assert skd.parse_rule("greedy:m") == skd.max_distance()

    def test_resolve_tau_guard(self):
        with pytest.raises(InvalidConfigError):
            skd.greedy(10).resolve_tau(4)


class TestSelect:
    def test_greedy_full_sample_is_deterministic_argmax(self):
        system, fam = family_on("row", 8, 4, seed=5)
        x = np.full(4, 2.0)
        losses = fam.losses(x)
        sel = skd.select(skd.max_distance(), fam, x, make_rng(0))
        assert sel.index == int(np.argmax(losses))
        assert sel.chosen_loss == pytest.approx(float(losses.max()))

    def test_uniform_distribution_over_indices(self):
        system, fam = family_on("row", 5, 3, seed=6)
        x = np.full(3, 1.5)
        rng = make_rng(31)
        counts = np.zeros(5)
        for _ in range(20_000):
            counts[skd.select(skd.uniform(), fam, x, rng).index] += 1
        assert stats.chisquare(counts).pvalue > 0.01

    def test_greedy_mean_selected_loss_dominates_uniform(self):
        system, fam = family_on("row", 9, 4, seed=7)
        x = np.linspace(0.5, 1.5, 4)
        losses = fam.losses(x)
        rng = make_rng(41)
        mean3 = np.mean([skd.select(skd.greedy(3), fam, x, rng).chosen_loss
                         for _ in range(4000)])
        # enumeration oracle for the tau-subset maximum expectation
        want3 = enumerated_subset_max_mean(list(losses), 3)
        uniform_mean = float(np.mean(losses))
        assert mean3 == pytest.approx(want3, rel=0.05)
        assert want3 >= uniform_mean
        assert mean3 > uniform_mean

    def test_capped_selection_state(self):
        system, fam = family_on("row", 7, 3, seed=8)
        x = np.full(3, 3.0)
        rule = skd.capped(theta=0.5, tau1=1, tau2=None, exact=True)
        sel = skd.select(rule, fam, x, make_rng(2))
        assert sel.threshold is not None
        assert sel.losses.size == 7
        assert sel.chosen_loss >= sel.threshold - 1e-12

    def test_converged_signal(self):
        system, fam = family_on("row", 6, 3, seed=9)
        sel = skd.select(skd.max_distance(), fam, system.x_star, make_rng(0))
        # residual at the solution is roundoff; every loss may be zero or a
        # few ulp above it, so either outcome is coherent
        if sel.index is None:
            assert sel.zero_losses == fam.q

    def test_zero_loss_count_recorded(self):
        A = np.eye(4)
        system = skd.LinearSystem(A=A, b=np.array([1.0, 0.0, 0.0, 0.0]))
        fam = skd.SketchFamily("row", system)
        x = np.zeros(4)
        sel = skd.select(skd.max_distance(), fam, x, make_rng(0))
        assert sel.index == 0
        assert sel.zero_losses == 3
