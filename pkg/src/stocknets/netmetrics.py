"""Distances, node strengths, threshold asset graphs, and sector indices."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .correlate import CorrelationMatrix, pearson_matrix
from .entropy import LabeledMatrix
from .errors import DataError, NumericError
from .panels import ReturnPanel, SectorTaxonomy, Variable

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DistanceMatrix:
    """Symmetric non-negative distances with a zero diagonal."""

    variables: tuple[Variable, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        values = np.asarray(self.values, dtype=float)
        n = len(self.variables)
        if values.shape != (n, n):
            raise ValueError(f"matrix shape {values.shape} does not match {n} variables")
        if n:
            if np.abs(values - values.T).max() > 1e-12:
                raise NumericError("distance matrix is not symmetric")
            if np.abs(np.diag(values)).max() > 0.0:
                raise NumericError("distance matrix diagonal must be zero")
            if values.min() < 0.0:
                raise NumericError("distances must be non-negative")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.variables)


class Edge(NamedTuple):
    source: Variable
    target: Variable
    weight: float
    reciprocal: bool = False


@dataclass(frozen=True)
class AssetGraph:
    """Threshold-filtered graph; isolated nodes are dropped."""

    nodes: tuple[Variable, ...]
    edges: tuple[Edge, ...]
    directed: bool

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(Variable(*v) for v in self.nodes))
        object.__setattr__(self, "edges", tuple(Edge(*e) for e in self.edges))
        incident = {v for e in self.edges for v in (e.source, e.target)}
        if set(self.nodes) != incident:
            raise ValueError("graph nodes must be exactly the incident vertices")

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_edges(self) -> int:
        return len(self.edges)


def correlation_distance(corr: CorrelationMatrix) -> DistanceMatrix:
    """Map correlations to distances via d = sqrt(2 (1 - C)).

    Perfect correlation gives 0, perfect anticorrelation 2; the result
    is the Euclidean distance between standardized return columns.
    """
    gap = np.clip(2.0 * (1.0 - corr.values), 0.0, None)
    values = np.sqrt(gap)
    np.fill_diagonal(values, 0.0)
    return DistanceMatrix(corr.variables, values)


def te_distance(norm_s21: LabeledMatrix) -> DistanceMatrix:
    """Distance matrix from normalized directed TE, symmetrized by the minimum.

    Applies d = sqrt(2 (1 - v)) entrywise, then keeps the smaller of the
    two directed distances for each pair. Off-diagonal values above 1
    should not occur for normalized input; any that do are clamped and
    counted in a single warning.
    """
    values = norm_s21.values
    if np.abs(np.diag(values) - 1.0).max(initial=0.0) > 1e-12:
        raise ValueError("normalized TE matrix must have a unit diagonal")
    offdiag = ~np.eye(norm_s21.n, dtype=bool)
    clamped = int(np.count_nonzero(values[offdiag] > 1.0))
    if clamped:
        logger.warning("te_distance clamped %d off-diagonal values above 1", clamped)
    v = np.clip(values, -1.0, 1.0)
    d = np.sqrt(np.clip(2.0 * (1.0 - v), 0.0, None))
    d = np.minimum(d, d.T)
    np.fill_diagonal(d, 0.0)
    return DistanceMatrix(norm_s21.variables, d)


def node_strength(corr: CorrelationMatrix) -> np.ndarray:
    """Sum of each node's edge weights over the full matrix, self-term included."""
    return corr.values.sum(axis=1)


def in_out_node_strength(te) -> tuple[np.ndarray, np.ndarray]:
    """(in, out) strengths of a directed matrix with entry (i, j) = weight i -> j.

    A node's out-strength is its row sum, its in-strength the column
    sum; the two vectors always share the same grand total.
    """
    values = te.values if hasattr(te, "values") else np.asarray(te, dtype=float)
    if values.ndim != 2 or values.shape[0] != values.shape[1]:
        raise ValueError("directed strength needs a square matrix")
    return values.sum(axis=0), values.sum(axis=1)


def asset_graph(matrix, threshold: float, directed: bool) -> AssetGraph:
    """Keep edges with weight >= threshold, dropping nodes left isolated.

    `matrix` is anything with `variables` and square `values`. For
    directed graphs an edge is flagged reciprocal when the opposite
    direction also clears the threshold.
    """
    variables = tuple(Variable(*v) for v in matrix.variables)
    values = np.asarray(matrix.values, dtype=float)
    n = len(variables)
    if values.shape != (n, n):
        raise ValueError("matrix shape does not match its variables")
    if not directed and np.abs(values - values.T).max(initial=0.0) > 1e-12:
        raise ValueError("undirected asset graph requires a symmetric matrix")
    keep = values >= threshold
    np.fill_diagonal(keep, False)
    edges: list[Edge] = []
    if directed:
        for i, j in zip(*np.nonzero(keep)):
            edges.append(Edge(variables[i], variables[j], float(values[i, j]),
                              reciprocal=bool(keep[j, i])))
    else:
        for i, j in zip(*np.nonzero(np.triu(keep, k=1))):
            edges.append(Edge(variables[i], variables[j], float(values[i, j])))
    incident = {v for e in edges for v in (e.source, e.target)}
    nodes = tuple(v for v in variables if v in incident)
    return AssetGraph(nodes, tuple(edges), directed)


def connected_components(graph: AssetGraph) -> list[tuple[Variable, ...]]:
    """Weakly connected components, largest first, ties by smallest member index."""
    index = {v: i for i, v in enumerate(graph.nodes)}
    adjacency: dict[Variable, set[Variable]] = {v: set() for v in graph.nodes}
    for e in graph.edges:
        adjacency[e.source].add(e.target)
        adjacency[e.target].add(e.source)
    seen: set[Variable] = set()
    components: list[tuple[Variable, ...]] = []
    for start in graph.nodes:
        if start in seen:
            continue
        stack, members = [start], {start}
        seen.add(start)
        while stack:
            v = stack.pop()
            for w in adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    members.add(w)
                    stack.append(w)
        components.append(tuple(sorted(members, key=index.__getitem__)))
    components.sort(key=lambda c: (-len(c), index[c[0]]))
    return components


def sector_index(panel: ReturnPanel, taxonomy: SectorTaxonomy) -> ReturnPanel:
    """One index series per sector, weighted by the leading eigenvector.

    Each sector's member correlation matrix is decomposed and the
    eigenvector of the largest eigenvalue, sign-fixed to a positive
    entry sum, weighs the member return series. The leading mode of a
    correlated block is close to uniform, so the index tracks the
    sector's common movement.
    """
    if panel.is_lag_expanded():
        raise ValueError("sector indices are built from the unexpanded panel")
    tickers = panel.tickers
    columns = []
    names = []
    for sector in taxonomy.sectors(tickers):
        members = taxonomy.members(sector, tickers)
        if len(members) < 2:
            raise DataError(f"sector {sector!r} has fewer than 2 members: {members}")
        idx = [tickers.index(t) for t in members]
        sub = ReturnPanel(panel.dates, [Variable(t, 0) for t in members], panel.returns[:, idx])
        corr = pearson_matrix(sub)
        eigenvalues, eigenvectors = np.linalg.eigh(corr.values)
        leading = eigenvectors[:, -1]
        total = leading.sum()
        if total < 0.0 or (total == 0.0 and leading[np.flatnonzero(leading)[0]] < 0.0):
            leading = -leading
        columns.append(panel.returns[:, idx] @ leading)
        names.append(sector)
    variables = tuple(Variable(name, 0) for name in names)
    return ReturnPanel(panel.dates, variables, np.column_stack(columns))
