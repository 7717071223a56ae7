from __future__ import annotations

import numpy as np
import pytest

from stocknets.panels import SectorInfo, SectorTaxonomy, Variable
from stocknets.propagation import (
    PropagationMatrix,
    build_propagation_matrix,
    group_shock,
    propagate,
    shock_propagation_strength,
    single_stock_shock,
)
from test_entropy import quad_matrix_from_s21


def prop_matrix(values, tickers=None) -> PropagationMatrix:
    values = np.asarray(values, dtype=float)
    tickers = tickers or [f"T{i}" for i in range(values.shape[0])]
    return PropagationMatrix(tuple(Variable(t, 0) for t in tickers), values)


def random_prop(rng, n=6) -> PropagationMatrix:
    values = rng.uniform(0.0, 0.4, size=(n, n))
    np.fill_diagonal(values, 0.0)
    return prop_matrix(values)


class TestBuildPropagationMatrix:
    def test_diagonal_zeroed_offdiagonal_untouched(self):
        s21 = np.array([[2.8, 0.4], [0.7, 1.9]])
        mte = build_propagation_matrix(quad_matrix_from_s21(s21))
        assert mte.values[0, 0] == 0.0 and mte.values[1, 1] == 0.0
        assert mte.values[0, 1] == 0.4 and mte.values[1, 0] == 0.7

    def test_idempotent(self, rng):
        s21 = rng.uniform(0.0, 1.0, size=(4, 4))
        te = quad_matrix_from_s21(s21)
        once = build_propagation_matrix(te)
        np.testing.assert_array_equal(
            once.values, build_propagation_matrix(te).values
        )


class TestPropagate:
    def test_zero_start_stays_zero(self, rng):
        mte = random_prop(rng)
        trajectory = propagate(mte, np.zeros(6), horizon=5)
        assert not trajectory.volatilities.any()

    def test_two_stock_closed_form(self):
        a, b, v = 0.4, 0.25, 0.3
        mte = prop_matrix([[0.0, a], [b, 0.0]])
        trajectory = propagate(mte, np.array([v, 0.0]), horizon=2)
        e1, e2 = np.exp(-1.0), np.exp(-2.0)
        assert abs(trajectory.volatilities[1, 0] - 0.0) < 1e-12
        assert abs(trajectory.volatilities[1, 1] - a * v * e1) < 1e-12
        assert abs(trajectory.volatilities[2, 0] - b * a * v * e1 * e2) < 1e-12
        assert abs(trajectory.volatilities[2, 1] - 0.0) < 1e-12

    def test_scaling_linearity(self, rng):
        mte = random_prop(rng)
        v0 = rng.uniform(0.0, 0.3, size=6)
        base = propagate(mte, v0, horizon=6).volatilities
        scaled = propagate(mte, 2.5 * v0, horizon=6).volatilities
        np.testing.assert_allclose(scaled, 2.5 * base, atol=1e-15)

    def test_superposition(self, rng):
        for _ in range(100):
            mte = random_prop(rng, n=5)
            v0 = rng.uniform(0.0, 0.3, size=5)
            w0 = rng.uniform(0.0, 0.3, size=5)
            combined = propagate(mte, v0 + w0, horizon=5).volatilities
            split = (propagate(mte, v0, horizon=5).volatilities
                     + propagate(mte, w0, horizon=5).volatilities)
            assert np.abs(combined - split).max() < 1e-12

    def test_decay_bound(self, rng):
        # the update multiplies by the transpose, so column sums bound the growth
        for _ in range(100):
            mte = random_prop(rng, n=7)
            column_gain = mte.values.sum(axis=0).max()
            trajectory = propagate(mte, rng.uniform(0.0, 1.0, size=7), horizon=8)
            vols = trajectory.volatilities
            for t in range(8):
                bound = np.exp(-(t + 1)) * column_gain * np.abs(vols[t]).max()
                assert np.abs(vols[t + 1]).max() <= bound + 1e-15

    def test_monotone_decay_after_peak(self, rng):
        for _ in range(20):
            mte = random_prop(rng, n=6)
            trajectory = propagate(mte, rng.uniform(0.1, 0.5, size=6), horizon=12)
            totals = trajectory.volatilities.sum(axis=1)
            peak = int(np.argmax(totals))
            for t in range(peak, 12):
                if totals[t] > 0.0:
                    assert totals[t + 1] < totals[t]

    def test_non_negativity(self, rng):
        for _ in range(50):
            mte = random_prop(rng)
            trajectory = propagate(mte, rng.uniform(0.0, 1.0, size=6), horizon=6)
            assert trajectory.volatilities.min() >= 0.0

    def test_dimension_mismatch(self, rng):
        with pytest.raises(ValueError, match="shape"):
            propagate(random_prop(rng), np.zeros(3), horizon=2)


class TestSingleStockShock:
    def test_zero_magnitude(self, rng):
        trajectory = single_stock_shock(random_prop(rng), 2, magnitude=0.0)
        assert not trajectory.volatilities.any()

    def test_stock_with_no_outgoing_edges(self, rng):
        values = rng.uniform(0.1, 0.5, size=(4, 4))
        np.fill_diagonal(values, 0.0)
        values[1, :] = 0.0  # stock 1 sends nothing
        mte = prop_matrix(values)
        trajectory = single_stock_shock(mte, 1)
        assert trajectory.volatilities[0, 1] == 0.3
        assert not trajectory.volatilities[1:].any()

    def test_default_horizon_shape(self, rng):
        trajectory = single_stock_shock(random_prop(rng), 0)
        assert trajectory.volatilities.shape == (11, 6)
        assert trajectory.origin == "stock:T0"

    def test_bad_index(self, rng):
        with pytest.raises(ValueError, match="out of range"):
            single_stock_shock(random_prop(rng), 6)


class TestGroupShock:
    def test_full_universe_is_superposition_of_singles(self, rng):
        mte = random_prop(rng, n=5)
        group = group_shock(mte, range(5), magnitude=0.1, horizon=6).volatilities
        split = sum(
            single_stock_shock(mte, s, magnitude=0.1, horizon=6).volatilities
            for s in range(5)
        )
        np.testing.assert_allclose(group, split, atol=1e-12)

    def test_singleton_matches_single_stock(self, rng):
        mte = random_prop(rng)
        a = group_shock(mte, [3], magnitude=0.3, horizon=5).volatilities
        b = single_stock_shock(mte, 3, magnitude=0.3, horizon=5).volatilities
        np.testing.assert_array_equal(a, b)

    def test_sector_members_only_at_start(self, rng):
        mte = random_prop(rng, n=4)
        taxonomy = SectorTaxonomy({
            "T0": SectorInfo("Fin", "i", "s"),
            "T1": SectorInfo("Tech", "i", "s"),
            "T2": SectorInfo("Fin", "i", "s"),
            "T3": SectorInfo("Tech", "i", "s"),
        })
        members = [i for i, t in enumerate(mte.tickers)
                   if taxonomy.sector_of(t) == "Fin"]
        trajectory = group_shock(mte, members, magnitude=0.1, horizon=3)
        np.testing.assert_array_equal(trajectory.volatilities[0], [0.1, 0.0, 0.1, 0.0])

    def test_empty_set_rejected(self, rng):
        with pytest.raises(ValueError, match="non-empty"):
            group_shock(random_prop(rng), [])


class TestShockPropagationStrength:
    def test_zero_matrix(self):
        strengths = shock_propagation_strength(prop_matrix(np.zeros((3, 3))))
        np.testing.assert_array_equal(strengths, np.zeros(3))

    def test_positive_scaling_scales_by_fourth_power(self, rng):
        mte = random_prop(rng)
        c = 1.7
        scaled = prop_matrix(c * mte.values)
        base = shock_propagation_strength(mte)
        boosted = shock_propagation_strength(scaled)
        np.testing.assert_allclose(boosted, c ** 4 * base, rtol=1e-12)
        np.testing.assert_array_equal(np.argsort(base), np.argsort(boosted))

    def test_peak_day_validation(self, rng):
        with pytest.raises(ValueError):
            shock_propagation_strength(random_prop(rng), peak_day=0)
