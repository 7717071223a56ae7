from __future__ import annotations

import numpy as np
import pytest

from conftest import consecutive_dates, make_return_panel
from stocknets.correlate import CorrelationMatrix, pearson_matrix
from stocknets.entropy import LabeledMatrix
from stocknets.errors import DataError
from stocknets.netmetrics import (
    asset_graph,
    connected_components,
    correlation_distance,
    in_out_node_strength,
    node_strength,
    sector_index,
    te_distance,
)
from stocknets.panels import ReturnPanel, SectorInfo, SectorTaxonomy, Variable


def labeled(values, tickers=None) -> LabeledMatrix:
    values = np.asarray(values, dtype=float)
    tickers = tickers or [f"T{i}" for i in range(values.shape[0])]
    return LabeledMatrix(tuple(Variable(t, 0) for t in tickers), values)


def corr_matrix(values, tickers=None) -> CorrelationMatrix:
    values = np.asarray(values, dtype=float)
    tickers = tickers or [f"T{i}" for i in range(values.shape[0])]
    return CorrelationMatrix(tuple(Variable(t, 0) for t in tickers), values)


class TestCorrelationDistance:
    def test_endpoints(self):
        corr = corr_matrix([[1.0, 1.0], [1.0, 1.0]])
        assert correlation_distance(corr).values[0, 1] == 0.0
        corr = corr_matrix([[1.0, 0.0], [0.0, 1.0]])
        assert abs(correlation_distance(corr).values[0, 1] - np.sqrt(2.0)) < 1e-15
        corr = corr_matrix([[1.0, -1.0], [-1.0, 1.0]])
        assert correlation_distance(corr).values[0, 1] == 2.0

    def test_monotone_decreasing_in_correlation(self, rng):
        corr = pearson_matrix(make_return_panel(rng.normal(size=(50, 6))))
        dist = correlation_distance(corr)
        iu = np.triu_indices(6, k=1)
        order = np.argsort(corr.values[iu])
        assert (np.diff(dist.values[iu][order]) <= 0).all()

    def test_triangle_inequality_from_common_sample(self, rng):
        # correlation distance is Euclidean between standardized columns
        dist = correlation_distance(
            pearson_matrix(make_return_panel(rng.normal(size=(40, 8))))
        ).values
        n = 8
        for i in range(n):
            for j in range(n):
                for k in range(n):
                    assert dist[i, j] <= dist[i, k] + dist[k, j] + 1e-12


class TestTeDistance:
    def test_symmetric_input_unchanged_by_symmetrization(self):
        values = np.array([[1.0, 0.5], [0.5, 1.0]])
        dist = te_distance(labeled(values))
        expected = np.sqrt(2.0 * (1.0 - 0.5))
        assert abs(dist.values[0, 1] - expected) < 1e-15
        assert dist.values[0, 1] == dist.values[1, 0]

    def test_unit_values_give_zero_distance(self):
        dist = te_distance(labeled(np.ones((2, 2))))
        assert dist.values[0, 1] == 0.0

    def test_minimum_rule(self):
        # choose v so the directed distances are 0.5 and 0.7 before symmetrizing
        v_small = 1.0 - 0.5 ** 2 / 2.0
        v_large = 1.0 - 0.7 ** 2 / 2.0
        values = np.array([[1.0, v_small], [v_large, 1.0]])
        dist = te_distance(labeled(values))
        assert abs(dist.values[0, 1] - 0.5) < 1e-15
        assert abs(dist.values[1, 0] - 0.5) < 1e-15

    def test_clamps_and_warns_on_excess_values(self, caplog):
        values = np.array([[1.0, 1.2], [0.3, 1.0]])
        with caplog.at_level("WARNING"):
            dist = te_distance(labeled(values))
        assert dist.values[0, 1] == 0.0  # clamped to v = 1
        assert "clamped 1" in caplog.text

    def test_requires_unit_diagonal(self):
        with pytest.raises(ValueError, match="unit diagonal"):
            te_distance(labeled(np.array([[0.9, 0.1], [0.1, 0.9]])))


class TestNodeStrength:
    def test_identity(self):
        np.testing.assert_array_equal(node_strength(corr_matrix(np.eye(3))), np.ones(3))

    def test_all_ones(self):
        corr = corr_matrix(np.ones((3, 3)))
        np.testing.assert_array_equal(node_strength(corr), np.full(3, 3.0))

    def test_ranking_invariant_under_offdiagonal_shift(self, rng):
        corr = pearson_matrix(make_return_panel(rng.normal(size=(60, 7)))).values
        shifted = corr + 0.05 * (1.0 - np.eye(7))
        base_order = np.argsort(corr.sum(axis=1))
        shifted_order = np.argsort(shifted.sum(axis=1))
        np.testing.assert_array_equal(base_order, shifted_order)

    def test_in_out_strengths(self):
        m = np.array([[0.0, 1.0], [0.0, 0.0]])
        strength_in, strength_out = in_out_node_strength(m)
        np.testing.assert_array_equal(strength_out, [1.0, 0.0])
        np.testing.assert_array_equal(strength_in, [0.0, 1.0])

    def test_zero_matrix(self):
        strength_in, strength_out = in_out_node_strength(np.zeros((4, 4)))
        assert not strength_in.any() and not strength_out.any()

    def test_grand_total_identity(self, rng):
        m = rng.uniform(0.0, 1.0, size=(9, 9))
        strength_in, strength_out = in_out_node_strength(m)
        assert abs(strength_in.sum() - strength_out.sum()) < 1e-12
        assert abs(strength_in.sum() - m.sum()) < 1e-12


class TestAssetGraph:
    def test_identity_matrix_gives_empty_graph(self):
        graph = asset_graph(corr_matrix(np.eye(4)), 0.8, directed=False)
        assert graph.n_nodes == 0 and graph.n_edges == 0

    def test_single_strong_pair(self):
        values = np.full((3, 3), 0.1)
        np.fill_diagonal(values, 1.0)
        values[0, 1] = values[1, 0] = 0.9
        graph = asset_graph(corr_matrix(values), 0.8, directed=False)
        assert graph.n_nodes == 2 and graph.n_edges == 1
        assert graph.edges[0].weight == 0.9

    def test_threshold_below_minimum_gives_complete_graph(self, rng):
        corr = pearson_matrix(make_return_panel(rng.normal(size=(30, 5))))
        graph = asset_graph(corr, -1.0, directed=False)
        assert graph.n_nodes == 5 and graph.n_edges == 10

    def test_counts_monotone_in_threshold(self, rng):
        corr = pearson_matrix(make_return_panel(rng.normal(size=(30, 8))))
        thresholds = np.linspace(-1.0, 1.0, 10)
        edge_counts = [asset_graph(corr, t, directed=False).n_edges for t in thresholds]
        node_counts = [asset_graph(corr, t, directed=False).n_nodes for t in thresholds]
        assert (np.diff(edge_counts) <= 0).all()
        assert (np.diff(node_counts) <= 0).all()

    def test_directed_reciprocal_flags(self):
        values = np.array([[0.0, 0.9, 0.8],
                           [0.85, 0.0, 0.1],
                           [0.2, 0.1, 0.0]])
        graph = asset_graph(labeled(values), 0.7, directed=True)
        flags = {(e.source.ticker, e.target.ticker): e.reciprocal for e in graph.edges}
        assert flags[("T0", "T1")] and flags[("T1", "T0")]
        assert not flags[("T0", "T2")]

    def test_undirected_requires_symmetry(self):
        values = np.array([[0.0, 0.9], [0.1, 0.0]])
        with pytest.raises(ValueError, match="symmetric"):
            asset_graph(labeled(values), 0.5, directed=False)


class TestConnectedComponents:
    def graph_from_pairs(self, n, pairs, weight=0.9):
        values = np.zeros((n, n))
        for i, j in pairs:
            values[i, j] = values[j, i] = weight
        return asset_graph(labeled(values), 0.8, directed=False)

    def test_empty_graph(self):
        graph = self.graph_from_pairs(3, [])
        assert connected_components(graph) == []

    def test_two_disjoint_edges(self):
        components = connected_components(self.graph_from_pairs(4, [(0, 1), (2, 3)]))
        assert [len(c) for c in components] == [2, 2]
        assert components[0][0].ticker == "T0"

    def test_path_is_one_component(self):
        components = connected_components(self.graph_from_pairs(3, [(0, 1), (1, 2)]))
        assert len(components) == 1
        assert tuple(v.ticker for v in components[0]) == ("T0", "T1", "T2")

    def test_ordering_largest_first(self):
        components = connected_components(
            self.graph_from_pairs(7, [(5, 6), (0, 1), (1, 2)])
        )
        assert [len(c) for c in components] == [3, 2]


def two_sector_taxonomy():
    return SectorTaxonomy({
        "A1": SectorInfo("Alpha", "i", "s"),
        "A2": SectorInfo("Alpha", "i", "s"),
        "B1": SectorInfo("Beta", "i", "s"),
        "B2": SectorInfo("Beta", "i", "s"),
        "B3": SectorInfo("Beta", "i", "s"),
    })


class TestSectorIndex:
    def test_two_identical_members(self, rng):
        series = rng.normal(size=60)
        panel = make_return_panel(np.column_stack([series, series]), tickers=["A1", "A2"])
        taxonomy = SectorTaxonomy({
            "A1": SectorInfo("Alpha", "i", "s"),
            "A2": SectorInfo("Alpha", "i", "s"),
        })
        index = sector_index(panel, taxonomy)
        assert index.variables == (Variable("Alpha", 0),)
        np.testing.assert_allclose(index.returns[:, 0], 2.0 * series / np.sqrt(2.0),
                                   atol=1e-12)

    def test_one_factor_sector_recovers_factor(self, rng):
        factor = rng.normal(size=500)
        members = np.column_stack(
            [factor + 0.3 * rng.normal(size=500) for _ in range(5)]
        )
        panel = make_return_panel(members, tickers=[f"A{k}" for k in range(5)])
        taxonomy = SectorTaxonomy({
            f"A{k}": SectorInfo("Alpha", "i", "s") for k in range(5)
        })
        index = sector_index(panel, taxonomy)
        agreement = np.corrcoef(index.returns[:, 0], factor)[0, 1]
        assert agreement > 0.99

    def test_sector_order_and_multiple_sectors(self, rng):
        panel = make_return_panel(rng.normal(size=(80, 5)),
                                  tickers=["A1", "B1", "A2", "B2", "B3"])
        index = sector_index(panel, two_sector_taxonomy())
        assert tuple(v.ticker for v in index.variables) == ("Alpha", "Beta")

    def test_small_sector_rejected(self, rng):
        panel = make_return_panel(rng.normal(size=(40, 3)), tickers=["A1", "A2", "B1"])
        with pytest.raises(DataError, match="Beta"):
            sector_index(panel, two_sector_taxonomy())

    def test_missing_ticker_named(self, rng):
        panel = make_return_panel(rng.normal(size=(40, 2)), tickers=["A1", "ZZZ"])
        with pytest.raises(DataError, match="ZZZ"):
            sector_index(panel, two_sector_taxonomy())
