"""Loss model assembly: summaries, parameter binding, simulation."""

import math

import numpy as np
import pytest

from abcloss.families import CyclicalPoisson, Poisson
from abcloss.models import (
    BivariatePairOfSums,
    FamilySpec,
    LossModel,
    QuotaShare,
    StopLoss,
    Sum,
    TimeIndexedSum,
    apply_summary,
    integrated_intensity,
    segment_sums,
    simulate,
)


class TestSummaries:
    def test_stop_loss_keeps_the_excess(self):
        assert apply_summary(StopLoss(5.0), [3.0, 4.0]) == pytest.approx(2.0)

    def test_stop_loss_below_priority_reports_zero(self):
        assert apply_summary(StopLoss(10.0), [3.0, 4.0]) == 0.0

    def test_quota_share_scales_the_total(self):
        assert apply_summary(QuotaShare(0.5), [3.0, 5.0]) == pytest.approx(4.0)

    def test_plain_and_time_indexed_sums(self):
        assert apply_summary(Sum(), [1.0, 2.5]) == pytest.approx(3.5)
        assert apply_summary(TimeIndexedSum(), [1.0, 2.5]) == pytest.approx(3.5)

    def test_bivariate_pair_of_totals(self):
        got = apply_summary(BivariatePairOfSums(), ([1.0, 2.0], [5.0]))
        assert got == (pytest.approx(3.0), pytest.approx(5.0))

    def test_bad_operator_parameters(self):
        with pytest.raises(ValueError):
            QuotaShare(1.0)
        with pytest.raises(ValueError):
            StopLoss(-1.0)

    def test_zero_match_shortcut_excludes_stop_loss(self):
        counts = np.array([1, 0, 2])
        base = dict(params=("delta",), severity=FamilySpec("exponential", {"delta": "delta"}),
                    observed_frequencies=counts)
        assert LossModel(summary=Sum(), **base).zeros_from_counts
        assert LossModel(summary=QuotaShare(0.5), **base).zeros_from_counts
        assert not LossModel(summary=StopLoss(1.0), **base).zeros_from_counts


class TestSegmentSums:
    def test_splits_by_counts(self):
        got = segment_sums(np.array([1.0, 2.0, 3.0, 4.0]), np.array([2, 0, 1, 1]))
        np.testing.assert_allclose(got, [3.0, 0.0, 3.0, 4.0])

    def test_all_zero_counts(self):
        np.testing.assert_allclose(segment_sums(np.array([]), np.array([0, 0])), [0.0, 0.0])


class TestIntegratedIntensity:
    def test_flat_cycle_reduces_to_the_baseline(self):
        assert integrated_intensity(CyclicalPoisson(2.0, 0.0, 0.02), 7) == pytest.approx(2.0)

    def test_full_cycle_telescopes(self):
        fam = CyclicalPoisson(1.0, 5.0, 1.0 / 50.0)
        total = sum(integrated_intensity(fam, s) for s in range(1, 51))
        assert total == pytest.approx(50.0 * 6.0, abs=1e-10)

    def test_rejects_other_families(self):
        with pytest.raises(TypeError):
            integrated_intensity(Poisson(2.0), 1)


def geom_exp(t):
    return LossModel(
        params=("p", "delta"),
        frequency=FamilySpec("geometric", {"p": "p"}),
        severity=FamilySpec("exponential", {"delta": "delta"}),
        summary=Sum(),
        horizon=t,
    )


class TestSimulation:
    def test_zero_fraction_matches_the_count_family(self):
        model = geom_exp(100_000)
        out = simulate(model, np.array([0.8, 5.0]), np.random.default_rng(30))
        # P(total = 0) = P(no claims) = 1 - p
        se = math.sqrt(0.2 * 0.8 / out.size)
        assert abs(np.mean(out == 0.0) - 0.2) < 4.0 * se

    def test_positive_totals_have_the_compound_mean(self):
        model = geom_exp(100_000)
        out = simulate(model, np.array([0.8, 5.0]), np.random.default_rng(31))
        pos = out[out > 0]
        # E[S | S > 0] = delta * E[N | N > 0] = delta / (1 - p)
        assert pos.mean() == pytest.approx(25.0, rel=0.02)

    def test_compound_mean_is_frequency_times_severity(self):
        model = LossModel(
            params=("alpha", "p", "k", "beta"),
            frequency=FamilySpec("negbin", {"alpha": "alpha", "p": "p"}),
            severity=FamilySpec("weibull", {"k": "k", "beta": "beta"}),
            summary=Sum(),
            horizon=50_000,
        )
        theta = np.array([4.0, 2.0 / 3.0, 1.0 / 3.0, 1.0])
        out = simulate(model, theta, np.random.default_rng(32))
        mean_n, var_n = 2.0, 3.0
        mean_x, var_x = 6.0, 684.0
        se = math.sqrt((mean_n * var_x + var_n * mean_x**2) / out.size)
        assert abs(out.mean() - mean_n * mean_x) < 4.0 * se

    def test_observed_frequencies_are_used_verbatim(self):
        counts = np.array([3, 0, 5, 0, 1])
        model = LossModel(
            params=("delta",),
            severity=FamilySpec("exponential", {"delta": "delta"}),
            summary=Sum(),
            observed_frequencies=counts,
        )
        assert model.horizon == 5
        np.testing.assert_array_equal(model.simulate_counts(np.array([2.0]), None), counts)
        out = simulate(model, np.array([2.0]), np.random.default_rng(33))
        assert out.shape == (5,)
        np.testing.assert_array_equal(out == 0.0, counts == 0)

    def test_stop_loss_is_monotone_in_the_priority(self):
        counts = np.full(200, 4)
        outs = []
        for c in (0.0, 1.0, 2.0, 5.0):
            model = LossModel(
                params=("delta",),
                severity=FamilySpec("exponential", {"delta": "delta"}),
                summary=StopLoss(c),
                observed_frequencies=counts,
            )
            outs.append(simulate(model, np.array([2.0]), np.random.default_rng(34)))
        for lo, hi in zip(outs[1:], outs[:-1]):
            assert np.all(lo <= hi)
        # priority zero reports the raw totals
        assert np.all(outs[0] > 0)

    def test_fixed_binding_matches_the_free_model(self):
        counts = np.array([2, 1, 4])
        fixed = LossModel(
            params=("k",),
            severity=FamilySpec("weibull", {"k": "k", "beta": 1.5}),
            summary=Sum(),
            observed_frequencies=counts,
        )
        free = LossModel(
            params=("k", "beta"),
            severity=FamilySpec("weibull", {"k": "k", "beta": "beta"}),
            summary=Sum(),
            observed_frequencies=counts,
        )
        a = simulate(fixed, np.array([0.7]), np.random.default_rng(35))
        b = simulate(free, np.array([0.7, 1.5]), np.random.default_rng(35))
        np.testing.assert_allclose(a, b)

    def test_fully_fixed_model_simulates_with_empty_theta(self):
        # every family argument pinned to a number, nothing left to infer
        sealed = LossModel(
            params=(),
            frequency=FamilySpec("geometric", {"p": 0.8}),
            severity=FamilySpec("exponential", {"delta": 5.0}),
            summary=Sum(),
            horizon=12,
        )
        free = LossModel(
            params=("p", "delta"),
            frequency=FamilySpec("geometric", {"p": "p"}),
            severity=FamilySpec("exponential", {"delta": "delta"}),
            summary=Sum(),
            horizon=12,
        )
        a = simulate(sealed, (), np.random.default_rng(36))
        b = simulate(free, (0.8, 5.0), np.random.default_rng(36))
        np.testing.assert_allclose(a, b)

    def test_crowded_periods_inflate_dependent_claims(self):
        # scale beta * exp(delta n): periods with 8 claims vs 1 claim
        counts = np.concatenate([np.full(4000, 1), np.full(4000, 8)])
        model = LossModel(
            params=("beta", "dep"),
            severity=FamilySpec("dep-exp", {"beta": "beta", "delta": "dep"}),
            summary=Sum(),
            observed_frequencies=counts,
        )
        out = simulate(model, np.array([2.0, 0.3]), np.random.default_rng(36))
        lone, crowded = out[:4000], out[4000:]
        assert lone.mean() == pytest.approx(2.0 * math.exp(0.3), rel=0.1)
        assert crowded.mean() == pytest.approx(8.0 * 2.0 * math.exp(2.4), rel=0.1)

    def test_bivariate_model_reports_pairs(self):
        model = LossModel(
            params=("sigma", "m1", "m2"),
            frequency=FamilySpec("bivariate-mixed-poisson", {"sigma": "sigma", "w1": 15.0, "w2": 5.0}),
            severity=(
                FamilySpec("exponential", {"delta": "m1"}),
                FamilySpec("exponential", {"delta": "m2"}),
            ),
            summary=BivariatePairOfSums(),
            horizon=2000,
        )
        out = simulate(model, np.array([0.2, 3.0, 1.0]), np.random.default_rng(37))
        assert out.shape == (2000, 2)
        scale = math.exp(0.02)  # E[Lambda] under sigma = 0.2
        assert out[:, 0].mean() == pytest.approx(15.0 * scale * 3.0, rel=0.1)
        assert out[:, 1].mean() == pytest.approx(5.0 * scale * 1.0, rel=0.1)

    def test_cyclical_counts_follow_the_intensity(self):
        model = LossModel(
            params=("a", "b", "c"),
            frequency=FamilySpec("cyclical-poisson", {"a": "a", "b": "b", "c": "c"}),
            severity=FamilySpec("lognormal", {"mu": 0.0, "sigma": 0.5}),
            summary=TimeIndexedSum(),
            horizon=5000,
        )
        theta = np.array([1.0, 5.0, 1.0 / 50.0])
        counts = model.simulate_counts(theta, np.random.default_rng(38))
        fam = CyclicalPoisson(1.0, 5.0, 1.0 / 50.0)
        # average over whole cycles matches the cycle-average intensity
        assert counts[:5000].mean() == pytest.approx(6.0, rel=0.05)
        peak = fam.period_mean(13)
        trough = fam.period_mean(38)
        assert counts[np.arange(12, 5000, 50)].mean() == pytest.approx(peak, rel=0.1)
        assert counts[np.arange(37, 5000, 50)].mean() == pytest.approx(trough, rel=0.15)


class TestValidation:
    def test_unbound_theta_component_is_an_error(self):
        with pytest.raises(ValueError, match="not bound"):
            LossModel(
                params=("p", "delta", "extra"),
                frequency=FamilySpec("geometric", {"p": "p"}),
                severity=FamilySpec("exponential", {"delta": "delta"}),
                summary=Sum(),
                horizon=10,
            )

    def test_horizon_conflicts_with_observed_counts(self):
        with pytest.raises(ValueError, match="horizon"):
            LossModel(
                params=("delta",),
                severity=FamilySpec("exponential", {"delta": "delta"}),
                summary=Sum(),
                horizon=4,
                observed_frequencies=np.array([1, 2, 3]),
            )

    def test_counts_must_be_nonnegative_integers(self):
        base = dict(params=("delta",), severity=FamilySpec("exponential", {"delta": "delta"}),
                    summary=Sum())
        with pytest.raises(ValueError):
            LossModel(observed_frequencies=np.array([1, -2]), **base)
        with pytest.raises(ValueError):
            LossModel(observed_frequencies=np.array([1.5, 2.0]), **base)
        with pytest.raises(ValueError):
            LossModel(observed_frequencies=np.array([], dtype=int), **base)

    def test_frequency_or_counts_required(self):
        with pytest.raises(ValueError, match="frequency"):
            LossModel(
                params=("delta",),
                severity=FamilySpec("exponential", {"delta": "delta"}),
                summary=Sum(),
                horizon=10,
            )

    def test_bivariate_summary_needs_paired_pieces(self):
        with pytest.raises(ValueError):
            LossModel(
                params=("sigma", "m"),
                frequency=FamilySpec("bivariate-mixed-poisson", {"sigma": "sigma", "w1": 1.0, "w2": 1.0}),
                severity=FamilySpec("exponential", {"delta": "m"}),
                summary=BivariatePairOfSums(),
                horizon=10,
            )
        with pytest.raises(ValueError, match="bivariate"):
            LossModel(
                params=("sigma", "m"),
                frequency=FamilySpec("bivariate-mixed-poisson", {"sigma": "sigma", "w1": 1.0, "w2": 1.0}),
                severity=FamilySpec("exponential", {"delta": "m"}),
                summary=Sum(),
                horizon=10,
            )

    def test_unknown_kind_and_unknown_binding_target(self):
        with pytest.raises(ValueError):
            LossModel(
                params=("delta",),
                severity=FamilySpec("pareto", {"delta": "delta"}),
                summary=Sum(),
                observed_frequencies=np.array([1]),
            )
        with pytest.raises(ValueError):
            LossModel(
                params=("delta",),
                severity=FamilySpec("exponential", {"delta": "typo"}),
                summary=Sum(),
                observed_frequencies=np.array([1]),
            )
