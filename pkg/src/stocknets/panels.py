"""Price and return panels: ingestion, liquidity filtering, log-returns, lag expansion.

A panel is a dates-by-variables matrix. Prices may contain gaps (NaN);
return panels are always complete because construction aligns all
retained tickers onto a common set of dates.
"""

from __future__ import annotations

import csv
import datetime
import logging
from dataclasses import dataclass
from typing import Iterable, NamedTuple

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)


class Variable(NamedTuple):
    """A panel column: a ticker plus a lag tag (0 = as-is, 1 = one-day companion)."""

    ticker: str
    lag: int = 0

    @property
    def label(self) -> str:
        return self.ticker if self.lag == 0 else f"{self.ticker}.L{self.lag}"

    @classmethod
    def from_label(cls, label: str) -> "Variable":
        if label.endswith(".L1"):
            return cls(label[:-3], 1)
        return cls(label, 0)


def _freeze(array: np.ndarray) -> np.ndarray:
    array.flags.writeable = False
    return array


def _check_dates(dates: tuple[str, ...]) -> None:
    for d in dates:
        try:
            datetime.date.fromisoformat(d)
        except ValueError as exc:
            raise DataError(f"bad ISO date {d!r}") from exc
    if any(a >= b for a, b in zip(dates, dates[1:])):
        raise DataError("dates must be strictly increasing with no duplicates")


@dataclass(frozen=True)
class PricePanel:
    """Daily closing prices, one column per ticker. NaN marks a missing quote."""

    dates: tuple[str, ...]
    tickers: tuple[str, ...]
    prices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "tickers", tuple(self.tickers))
        prices = np.asarray(self.prices, dtype=float)
        if prices.shape != (len(self.dates), len(self.tickers)):
            raise ValueError(f"prices shape {prices.shape} does not match dates/tickers")
        _check_dates(self.dates)
        if len(set(self.tickers)) != len(self.tickers):
            raise DataError("tickers must be unique")
        present = prices[np.isfinite(prices)]
        if present.size and present.min() <= 0.0:
            raise DataError("prices must be strictly positive")
        object.__setattr__(self, "prices", _freeze(prices))

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_tickers(self) -> int:
        return len(self.tickers)

    def presence_fraction(self) -> np.ndarray:
        """Fraction of dates on which each ticker has a price."""
        if self.n_dates == 0:
            return np.zeros(self.n_tickers)
        return np.isfinite(self.prices).mean(axis=0)


@dataclass(frozen=True)
class ReturnPanel:
    """Complete log-return panel; variables may carry a lag tag after expansion."""

    dates: tuple[str, ...]
    variables: tuple[Variable, ...]
    returns: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "variables", tuple(Variable(*v) for v in self.variables))
        returns = np.asarray(self.returns, dtype=float)
        if returns.shape != (len(self.dates), len(self.variables)):
            raise ValueError(f"returns shape {returns.shape} does not match dates/variables")
        _check_dates(self.dates)
        if len(set(self.variables)) != len(self.variables):
            raise DataError("variables must be unique")
        if returns.size and not np.isfinite(returns).all():
            raise DataError("return panels must be complete (no missing entries)")
        object.__setattr__(self, "returns", _freeze(returns))

    @property
    def n_dates(self) -> int:
        return len(self.dates)

    @property
    def n_variables(self) -> int:
        return len(self.variables)

    @property
    def tickers(self) -> tuple[str, ...]:
        return tuple(v.ticker for v in self.variables)

    def is_lag_expanded(self) -> bool:
        return any(v.lag != 0 for v in self.variables)

    def window(self, start: int, stop: int) -> "ReturnPanel":
        """Row slice [start, stop) as a new panel."""
        return ReturnPanel(self.dates[start:stop], self.variables, self.returns[start:stop])


class SectorInfo(NamedTuple):
    sector: str
    industry: str
    subindustry: str


@dataclass(frozen=True)
class SectorTaxonomy:
    """Ticker -> (sector, industry, sub-industry) map."""

    entries: dict[str, SectorInfo]

    def info(self, ticker: str) -> SectorInfo:
        try:
            return self.entries[ticker]
        except KeyError:
            raise DataError(f"ticker {ticker!r} missing from taxonomy") from None

    def sector_of(self, ticker: str) -> str:
        return self.info(ticker).sector

    def members(self, sector: str, tickers: Iterable[str]) -> list[str]:
        """Tickers from the iterable that belong to the sector, in input order."""
        return [t for t in tickers if self.sector_of(t) == sector]

    def sectors(self, tickers: Iterable[str]) -> list[str]:
        """Distinct sectors of the given tickers, in first-seen order."""
        seen: list[str] = []
        for t in tickers:
            s = self.sector_of(t)
            if s not in seen:
                seen.append(s)
        return seen


def load_prices(path) -> PricePanel:
    """Read a `date,ticker,close` CSV into a PricePanel.

    The panel covers the union of all dates seen; absent ticker-date
    pairs stay missing. Malformed rows, non-positive prices, and
    duplicate (date, ticker) pairs are rejected with their row number.
    Tickers keep first-seen order so a curated input ordering survives.
    """
    observations: dict[tuple[str, str], float] = {}
    dates: set[str] = set()
    tickers: list[str] = []
    seen_tickers: set[str] = set()
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != ["date", "ticker", "close"]:
            raise DataError(f"{path}: expected header 'date,ticker,close', got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise DataError(f"{path}: row {lineno}: expected 3 fields, got {len(row)}")
            date, ticker, close_text = (c.strip() for c in row)
            try:
                datetime.date.fromisoformat(date)
            except ValueError:
                raise DataError(f"{path}: row {lineno}: bad date {date!r}") from None
            if not ticker:
                raise DataError(f"{path}: row {lineno}: empty ticker")
            try:
                close = float(close_text)
            except ValueError:
                raise DataError(f"{path}: row {lineno}: bad price {close_text!r}") from None
            if not np.isfinite(close) or close <= 0.0:
                raise DataError(f"{path}: row {lineno}: price must be positive, got {close_text}")
            key = (date, ticker)
            if key in observations:
                raise DataError(f"{path}: row {lineno}: duplicate observation for {ticker} on {date}")
            observations[key] = close
            dates.add(date)
            if ticker not in seen_tickers:
                seen_tickers.add(ticker)
                tickers.append(ticker)
    ordered_dates = tuple(sorted(dates))
    date_index = {d: i for i, d in enumerate(ordered_dates)}
    ticker_index = {t: j for j, t in enumerate(tickers)}
    prices = np.full((len(ordered_dates), len(tickers)), np.nan)
    for (date, ticker), close in observations.items():
        prices[date_index[date], ticker_index[ticker]] = close
    return PricePanel(ordered_dates, tuple(tickers), prices)


def filter_liquidity(panel: PricePanel, min_fraction: float = 0.80) -> PricePanel:
    """Keep tickers present on at least `min_fraction` of all dates."""
    if not 0.0 <= min_fraction <= 1.0:
        raise ValueError(f"min_fraction must be in [0, 1], got {min_fraction}")
    keep = panel.presence_fraction() >= min_fraction
    kept = tuple(t for t, k in zip(panel.tickers, keep) if k)
    dropped = [t for t, k in zip(panel.tickers, keep) if not k]
    if dropped:
        logger.info("liquidity filter dropped %d of %d tickers: %s",
                    len(dropped), panel.n_tickers, ", ".join(dropped))
    return PricePanel(panel.dates, kept, panel.prices[:, keep])


def compute_log_returns(panel: PricePanel) -> ReturnPanel:
    """Log-returns ln(P_t) - ln(P_prev) per ticker, aligned onto complete rows.

    A return is computed between consecutive *present* prices, so a gap
    yields one return spanning it. Rows where any ticker lacks a return
    are then dropped, leaving a single common sample for every pairwise
    statistic.
    """
    if panel.n_dates < 2:
        raise DataError("need at least 2 dates to compute returns")
    T, N = panel.prices.shape
    rets = np.full((T, N), np.nan)
    logp = np.log(panel.prices)
    for j in range(N):
        present = np.flatnonzero(np.isfinite(logp[:, j]))
        if present.size >= 2:
            rets[present[1:], j] = np.diff(logp[present, j])
    complete = np.isfinite(rets).all(axis=1)
    kept_dates = tuple(d for d, k in zip(panel.dates, complete) if k)
    variables = tuple(Variable(t, 0) for t in panel.tickers)
    return ReturnPanel(kept_dates, variables, rets[complete])


def lag_expand(panel: ReturnPanel) -> ReturnPanel:
    """Double the variable set with one-day-shifted copies of every column.

    The result has the untagged block first and the lag-tagged block
    second, one row shorter than the input. The lag-tagged column of a
    ticker holds the following row's value: the transfer-entropy
    estimator reads a source one row behind the destination's
    transition, so this alignment is what makes a lag-tagged source
    line up with its stock's previous trading day relative to the
    destination's next-day move. Day-ahead information flow then lands
    in the lagged-to-original quadrant of the pair matrix.
    """
    if panel.is_lag_expanded():
        raise DataError("panel is already lag-expanded")
    if panel.n_dates < 2:
        raise DataError("need at least 2 dates to lag-expand")
    base = panel.returns[:-1]
    shifted = panel.returns[1:]
    variables = panel.variables + tuple(Variable(v.ticker, 1) for v in panel.variables)
    return ReturnPanel(panel.dates[:-1], variables, np.hstack([base, shifted]))


def load_taxonomy(path) -> SectorTaxonomy:
    """Read a `ticker,sector,industry,subindustry` CSV.

    The Diversified sector is reassigned to Financial so single-member
    holding companies aggregate with their closest peers.
    """
    entries: dict[str, SectorInfo] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or [c.strip().lower() for c in header] != [
            "ticker", "sector", "industry", "subindustry",
        ]:
            raise DataError(
                f"{path}: expected header 'ticker,sector,industry,subindustry', got {header}"
            )
        for lineno, row in enumerate(reader, start=2):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 4:
                raise DataError(f"{path}: row {lineno}: expected 4 fields, got {len(row)}")
            ticker, sector, industry, subindustry = (c.strip() for c in row)
            if not ticker:
                raise DataError(f"{path}: row {lineno}: empty ticker")
            if ticker in entries:
                raise DataError(f"{path}: row {lineno}: duplicate taxonomy entry for {ticker}")
            if sector == "Diversified":
                sector = "Financial"
            entries[ticker] = SectorInfo(sector, industry, subindustry)
    return SectorTaxonomy(entries)
