"""Pearson correlation matrices, shuffle null bands, and off-diagonal histograms."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import NumericError
from .panels import ReturnPanel, Variable

logger = logging.getLogger(__name__)

#: Smallest admissible eigenvalue of a correlation matrix. Complete-case
#: alignment guarantees positive semi-definiteness up to rounding.
PSD_TOLERANCE = -1e-8


@dataclass(frozen=True)
class CorrelationMatrix:
    """Symmetric Pearson matrix with unit diagonal, validated on construction."""

    variables: tuple[Variable, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        values = np.asarray(self.values, dtype=float)
        n = len(self.variables)
        if values.shape != (n, n):
            raise ValueError(f"matrix shape {values.shape} does not match {n} variables")
        if np.abs(values - values.T).max(initial=0.0) > 1e-12:
            raise NumericError("correlation matrix is not symmetric")
        if n and np.abs(np.diag(values) - 1.0).max() > 1e-12:
            raise NumericError("correlation matrix diagonal must be 1")
        if n and (values.min() < -1.0 or values.max() > 1.0):
            raise NumericError("correlation values must lie in [-1, 1]")
        if n and np.linalg.eigvalsh(values)[0] < PSD_TOLERANCE:
            raise NumericError("correlation matrix is not positive semi-definite")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.variables)


class BandStat(NamedTuple):
    mean: float
    std: float


@dataclass(frozen=True)
class NullBand:
    """Mean and dispersion of per-simulation off-diagonal extremes under shuffling."""

    n_sims: int
    min_stat: BandStat
    max_stat: BandStat
    seed: int

    def __post_init__(self):
        if self.min_stat.mean > self.max_stat.mean:
            raise ValueError("null band minimum exceeds maximum")

    def to_dict(self) -> dict:
        return {
            "n_sims": self.n_sims,
            "seed": self.seed,
            "min": {"mean": self.min_stat.mean, "std": self.min_stat.std},
            "max": {"mean": self.max_stat.mean, "std": self.max_stat.std},
        }


class Histogram(NamedTuple):
    edges: np.ndarray
    counts: np.ndarray


def _check_variance(returns: np.ndarray, variables: tuple[Variable, ...]) -> None:
    spans = returns.max(axis=0) - returns.min(axis=0)
    flat = np.flatnonzero(spans == 0.0)
    if flat.size:
        raise NumericError(
            f"correlation undefined for zero-variance column {variables[flat[0]].label!r}"
        )


def pearson_matrix(panel: ReturnPanel) -> CorrelationMatrix:
    """Pearson correlation of every column pair over the full common sample."""
    if panel.n_dates < 3:
        raise NumericError(f"need at least 3 rows for correlations, got {panel.n_dates}")
    _check_variance(panel.returns, panel.variables)
    values = np.corrcoef(panel.returns, rowvar=False)
    values = np.clip((values + values.T) / 2.0, -1.0, 1.0)
    np.fill_diagonal(values, 1.0)
    return CorrelationMatrix(panel.variables, values)


def _offdiag(values: np.ndarray) -> np.ndarray:
    n = values.shape[0]
    return values[~np.eye(n, dtype=bool)]


def _summarize(per_sim: np.ndarray) -> BandStat:
    # population std keeps n_sims=1 well-defined
    return BandStat(float(per_sim.mean()), float(per_sim.std()))


def shuffle_null(panel: ReturnPanel, n_sims: int, seed: int, threads: int | None = None) -> NullBand:
    """Off-diagonal correlation extremes after permuting each column independently.

    Shuffling destroys cross- and auto-dependence while preserving each
    marginal. Every simulation draws its own generator from a spawned
    seed sequence, so results are identical for any thread count.
    """
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    if panel.n_dates < 3:
        raise NumericError(f"need at least 3 rows for correlations, got {panel.n_dates}")
    _check_variance(panel.returns, panel.variables)
    children = np.random.SeedSequence(seed).spawn(n_sims)
    returns = panel.returns
    n = panel.n_variables
    mask = ~np.eye(n, dtype=bool)

    def one(child) -> tuple[float, float]:
        rng = np.random.default_rng(child)
        corr = np.corrcoef(rng.permuted(returns, axis=0), rowvar=False)
        off = corr[mask]
        return float(off.min()), float(off.max())

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            extremes = list(pool.map(one, children))
    else:
        extremes = [one(child) for child in children]
    mins = np.array([e[0] for e in extremes])
    maxs = np.array([e[1] for e in extremes])
    return NullBand(n_sims, _summarize(mins), _summarize(maxs), seed)


def offdiag_histogram(matrix: CorrelationMatrix, bin_count: int) -> Histogram:
    """Histogram over the N(N-1)/2 upper-triangle entries, diagonal excluded."""
    if bin_count < 1:
        raise ValueError(f"bin_count must be >= 1, got {bin_count}")
    iu = np.triu_indices(matrix.n, k=1)
    counts, edges = np.histogram(matrix.values[iu], bins=bin_count)
    return Histogram(edges, counts)
