"""Binned transfer-entropy estimation and the lag-expanded quadrant matrix.

Estimates are raw plug-in frequencies (no smoothing or bias correction);
estimator bias is handled downstream by shuffle null bands. Everything
is reported in bits.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import stats

from .correlate import BandStat, CorrelationMatrix, NullBand
from .errors import NumericError
from .panels import ReturnPanel, Variable

logger = logging.getLogger(__name__)

QUADRANTS = ("s11", "s21", "s12", "s22")


@dataclass(frozen=True)
class DiscretePanel:
    """Integer bin codes for a return panel, sharing one global partition."""

    variables: tuple[Variable, ...]
    bin_width: float
    origin: float
    codes: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        if self.bin_width <= 0.0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        codes = np.asarray(self.codes, dtype=np.int64)
        if codes.ndim != 2 or codes.shape[1] != len(self.variables):
            raise ValueError(f"codes shape {codes.shape} does not match variables")
        codes.flags.writeable = False
        object.__setattr__(self, "codes", codes)

    @property
    def n_dates(self) -> int:
        return self.codes.shape[0]

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    def is_lag_expanded(self) -> bool:
        return any(v.lag != 0 for v in self.variables)


@dataclass(frozen=True)
class LabeledMatrix:
    """A square matrix with one variable label per row/column."""

    variables: tuple[Variable, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        values = np.asarray(self.values, dtype=float)
        n = len(self.variables)
        if values.shape != (n, n):
            raise ValueError(f"matrix shape {values.shape} does not match {n} variables")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.variables)


@dataclass(frozen=True)
class QuadTEMatrix:
    """2N x 2N directed transfer-entropy matrix over an expanded variable set.

    Entry (i, j) is the TE from variable i to variable j in bits.
    Quadrant names index (source block, destination block): s21 holds
    lag-tagged sources against untagged destinations, i.e. each stock's
    previous day against every stock's next-day move.
    """

    variables: tuple[Variable, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        values = np.asarray(self.values, dtype=float)
        m = len(self.variables)
        if m % 2 or values.shape != (m, m):
            raise ValueError("expanded TE matrix must be 2N x 2N")
        n = m // 2
        first, second = self.variables[:n], self.variables[n:]
        if any(v.lag != 0 for v in first) or any(v.lag != 1 for v in second):
            raise ValueError("variables must be the untagged block followed by the lag block")
        if tuple(v.ticker for v in first) != tuple(v.ticker for v in second):
            raise ValueError("lag block must repeat the untagged ticker order")
        if values.size and values.min() < -1e-12:
            raise NumericError(f"negative transfer entropy {values.min()} below tolerance")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def n(self) -> int:
        return len(self.variables) // 2

    @property
    def tickers(self) -> tuple[str, ...]:
        return tuple(v.ticker for v in self.variables[: self.n])

    def quadrant(self, name: str) -> np.ndarray:
        """One N x N block; rows are sources, columns destinations."""
        n = self.n
        blocks = {
            "s11": (slice(None, n), slice(None, n)),
            "s21": (slice(n, None), slice(None, n)),
            "s12": (slice(None, n), slice(n, None)),
            "s22": (slice(n, None), slice(n, None)),
        }
        try:
            rows, cols = blocks[name.lower()]
        except KeyError:
            raise ValueError(f"unknown quadrant {name!r}, expected one of {QUADRANTS}") from None
        return self.values[rows, cols]


def bin_panel(panel: ReturnPanel, bin_width: float) -> DiscretePanel:
    """Assign integer codes floor((r - origin) / bin_width), origin = panel minimum.

    A single origin shared by all variables keeps one partition behind
    every joint histogram.
    """
    if bin_width <= 0.0:
        raise ValueError(f"bin_width must be positive, got {bin_width}")
    if panel.returns.size == 0:
        raise NumericError("cannot bin an empty panel")
    origin = float(panel.returns.min())
    codes = np.floor((panel.returns - origin) / bin_width).astype(np.int64)
    return DiscretePanel(panel.variables, bin_width, origin, codes)


def _entropy(counts: np.ndarray, total: int) -> float:
    """Plug-in Shannon entropy in bits; zero-count cells contribute nothing."""
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum())


def _compact(column: np.ndarray) -> tuple[np.ndarray, int]:
    values, inverse = np.unique(column, return_inverse=True)
    return inverse.astype(np.int64), len(values)


def transfer_entropy(source, dest) -> float:
    """Plug-in transfer entropy from `source` to `dest` in bits.

    Joint frequencies of (dest next state, dest state, source state)
    are tallied over consecutive rows; the estimate is the conditional
    mutual information of that empirical distribution, so it is always
    non-negative up to rounding.
    """
    source = np.asarray(source)
    dest = np.asarray(dest)
    if source.ndim != 1 or dest.ndim != 1:
        raise ValueError("code sequences must be one-dimensional")
    if len(source) != len(dest):
        raise ValueError(f"length mismatch: source {len(source)} vs dest {len(dest)}")
    if len(dest) < 2:
        raise ValueError("need at least 2 observations")
    c_src, k_src = _compact(source[:-1])
    c_now, k_now = _compact(dest[:-1])
    c_next, k_next = _compact(dest[1:])
    n = len(c_src)
    pair_nd = c_next * k_now + c_now
    h_nd = _entropy(np.bincount(pair_nd, minlength=k_next * k_now), n)
    h_d = _entropy(np.bincount(c_now, minlength=k_now), n)
    h_ds = _entropy(np.bincount(c_now * k_src + c_src, minlength=k_now * k_src), n)
    h_nds = _entropy(np.bincount(pair_nd * k_src + c_src, minlength=k_next * k_now * k_src), n)
    # paired differences cancel exactly when source duplicates the destination
    return (h_nd - h_nds) + (h_ds - h_d)


def _te_matrix_values(codes: np.ndarray, threads: int | None = None) -> np.ndarray:
    """TE for every ordered column pair; entry (i, j) = TE column i -> column j."""
    T, m = codes.shape
    if T < 2:
        raise ValueError("need at least 2 rows")
    n = T - 1
    compacted = [_compact(codes[:, j]) for j in range(m)]
    sources = [(inv[:-1], k) for inv, k in compacted]
    values = np.zeros((m, m))

    def fill_destination(j: int) -> None:
        inv_j, k_j = compacted[j]
        c_next, c_now = inv_j[1:], inv_j[:-1]
        pair_nd = c_next * k_j + c_now
        h_nd = _entropy(np.bincount(pair_nd, minlength=k_j * k_j), n)
        h_d = _entropy(np.bincount(c_now, minlength=k_j), n)
        for i in range(m):
            c_src, k_src = sources[i]
            h_ds = _entropy(np.bincount(c_now * k_src + c_src, minlength=k_j * k_src), n)
            h_nds = _entropy(
                np.bincount(pair_nd * k_src + c_src, minlength=k_j * k_j * k_src), n
            )
            values[i, j] = (h_nd - h_nds) + (h_ds - h_d)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(fill_destination, range(m)))
    else:
        for j in range(m):
            fill_destination(j)
    return values


def te_matrix_expanded(panel: DiscretePanel, threads: int | None = None) -> QuadTEMatrix:
    """Evaluate transfer entropy for all ordered pairs of an expanded panel.

    Diagonals are kept: the untagged self-pairs are exactly zero by
    construction, while the lag-to-self entries measure the full
    next-day self-information ceiling.
    """
    if not panel.is_lag_expanded():
        raise ValueError("panel must carry lag-expanded variables")
    return QuadTEMatrix(panel.variables, _te_matrix_values(panel.codes, threads=threads))


def normalize_te(matrix: QuadTEMatrix) -> LabeledMatrix:
    """Divide each s21 column by its own-stock entry, capping self-transfer at 1.

    A column's diagonal entry is the conditional entropy of the
    destination's next move, which bounds every other entry in the
    column, so normalized values stay in [0, 1].
    """
    s21 = matrix.quadrant("s21")
    diag = np.diag(s21)
    zero = np.flatnonzero(diag == 0.0)
    if zero.size:
        raise NumericError(
            f"cannot normalize: zero self-transfer for {matrix.tickers[zero[0]]!r}"
        )
    variables = tuple(Variable(t, 0) for t in matrix.tickers)
    return LabeledMatrix(variables, s21 / diag[np.newaxis, :])


def excess_te(matrix: QuadTEMatrix) -> LabeledMatrix:
    """Antisymmetric net information imbalance: s21 minus its transpose."""
    s21 = matrix.quadrant("s21")
    variables = tuple(Variable(t, 0) for t in matrix.tickers)
    return LabeledMatrix(variables, s21 - s21.T)


def _expand_codes(codes: np.ndarray) -> np.ndarray:
    # mirrors panels.lag_expand: lag block holds the following row's value
    return np.hstack([codes[:-1], codes[1:]])


def _quadrant_offdiag(values: np.ndarray, name: str) -> np.ndarray:
    n = values.shape[0] // 2
    blocks = {"s11": (0, 0), "s21": (n, 0), "s12": (0, n), "s22": (n, n)}
    r, c = blocks[name]
    block = values[r : r + n, c : c + n]
    return block[~np.eye(n, dtype=bool)]


def te_shuffle_null(
    panel: DiscretePanel,
    n_sims: int = 10,
    seed: int = 0,
    threads: int | None = None,
) -> dict[str, NullBand]:
    """Per-quadrant null bands from independently permuted series.

    Takes the unexpanded code panel: each simulation permutes every
    column, lag-expands the shuffled codes, and recomputes the full
    quadrant matrix. Permuting codes is equivalent to permuting the
    returns before binning because the bin partition depends only on
    the set of values, not their order. Each quadrant is summarized by
    the min/max over its off-diagonal entries; own-stock entries are
    excluded because they are equally structural under the null and
    would mask cross-pair separation.
    """
    if n_sims < 1:
        raise ValueError(f"n_sims must be >= 1, got {n_sims}")
    if panel.is_lag_expanded():
        raise ValueError("pass the unexpanded panel; shuffling precedes lag expansion")
    if panel.n_dates < 3:
        raise ValueError("need at least 3 rows to expand and estimate")
    children = np.random.SeedSequence(seed).spawn(n_sims)
    codes = panel.codes

    def one(child) -> dict[str, tuple[float, float]]:
        rng = np.random.default_rng(child)
        values = _te_matrix_values(_expand_codes(rng.permuted(codes, axis=0)))
        out = {}
        for name in QUADRANTS:
            off = _quadrant_offdiag(values, name)
            out[name] = (float(off.min()), float(off.max()))
        return out

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            sims = list(pool.map(one, children))
    else:
        sims = [one(child) for child in children]

    bands = {}
    for name in QUADRANTS:
        mins = np.array([s[name][0] for s in sims])
        maxs = np.array([s[name][1] for s in sims])
        bands[name] = NullBand(
            n_sims,
            BandStat(float(mins.mean()), float(mins.std())),
            BandStat(float(maxs.mean()), float(maxs.std())),
            seed,
        )
    return bands


class CoefficientTriple(NamedTuple):
    pearson: float
    spearman: float
    kendall: float


@dataclass(frozen=True)
class ComparisonStats:
    """Rank/linear agreement between vectorized TE and correlation entries."""

    with_diagonal: CoefficientTriple
    without_diagonal: CoefficientTriple

    def to_dict(self) -> dict:
        return {
            "with_diagonal": self.with_diagonal._asdict(),
            "without_diagonal": self.without_diagonal._asdict(),
        }


def _triple(x: np.ndarray, y: np.ndarray) -> CoefficientTriple:
    return CoefficientTriple(
        float(stats.pearsonr(x, y).statistic),
        float(stats.spearmanr(x, y).statistic),
        float(stats.kendalltau(x, y).statistic),
    )


def te_correlation_comparison(te_s21: LabeledMatrix, corr: CorrelationMatrix) -> ComparisonStats:
    """Pearson/Spearman/Kendall coefficients between TE and correlation entries.

    Uses all ordered cells (the TE side is directed), with and without
    the main diagonals.
    """
    if tuple(v.ticker for v in te_s21.variables) != tuple(v.ticker for v in corr.variables):
        raise ValueError("TE and correlation matrices cover different variables")
    te_flat = te_s21.values.ravel()
    corr_flat = corr.values.ravel()
    mask = ~np.eye(te_s21.n, dtype=bool).ravel()
    return ComparisonStats(
        with_diagonal=_triple(te_flat, corr_flat),
        without_diagonal=_triple(te_flat[mask], corr_flat[mask]),
    )
