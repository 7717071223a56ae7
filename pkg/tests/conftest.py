from __future__ import annotations

import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from stocknets.panels import ReturnPanel, Variable


def make_return_panel(values, tickers=None, start="2008-01-01") -> ReturnPanel:
    """Wrap a T x N array as a ReturnPanel with synthetic consecutive dates."""
    values = np.asarray(values, dtype=float)
    if values.ndim == 1:
        values = values[:, np.newaxis]
    n = values.shape[1]
    tickers = tickers or [f"S{i:02d}" for i in range(n)]
    dates = consecutive_dates(start, values.shape[0])
    return ReturnPanel(dates, [Variable(t, 0) for t in tickers], values)


def consecutive_dates(start: str, count: int) -> tuple[str, ...]:
    import datetime

    first = datetime.date.fromisoformat(start)
    return tuple((first + datetime.timedelta(days=i)).isoformat() for i in range(count))


@pytest.fixture
def rng():
    return np.random.default_rng(20080915)


SECTOR_CYCLE = ("Financial", "Technology", "Energy", "Utilities", "Industrial")


def make_corpus(directory: Path, n_tickers=30, n_days=160, seed=99) -> tuple[Path, Path]:
    """Synthetic price and taxonomy CSVs with sector structure and data quirks.

    Stocks load on a sector factor so networks are non-trivial; ticker 0
    is a near-duplicate of ticker 1 (a guaranteed strong edge), one
    ticker is tagged Diversified, one has a few missing days, and one is
    too illiquid to survive the default filter.
    """
    generator = np.random.default_rng(seed)
    tickers = [f"T{k:02d}" for k in range(n_tickers)]
    sectors = [SECTOR_CYCLE[k % len(SECTOR_CYCLE)] for k in range(n_tickers)]
    sectors[2] = "Diversified"  # remaps into Financial alongside T00/T05/...
    factors = generator.normal(0.0, 0.012, size=(n_days, len(SECTOR_CYCLE)))
    returns = np.empty((n_days, n_tickers))
    for k in range(n_tickers):
        sector_of_k = sectors[k] if sectors[k] != "Diversified" else "Financial"
        factor = factors[:, SECTOR_CYCLE.index(sector_of_k)]
        returns[:, k] = factor + generator.normal(0.0, 0.008, size=n_days)
    returns[:, 0] = returns[:, 1] + generator.normal(0.0, 0.001, size=n_days)
    prices = 40.0 * np.exp(np.cumsum(returns, axis=0))
    dates = consecutive_dates("2008-01-01", n_days)

    price_path = directory / "prices.csv"
    with open(price_path, "w", encoding="utf-8") as fh:
        fh.write("date,ticker,close\n")
        for i, date in enumerate(dates):
            for k, ticker in enumerate(tickers):
                if k == 3 and i in (10, 11, 12):
                    continue  # a short gap, still liquid
                if k == 4 and i >= n_days // 3:
                    continue  # illiquid: dropped by the 0.8 filter
                fh.write(f"{date},{ticker},{prices[i, k]:.6f}\n")

    taxonomy_path = directory / "taxonomy.csv"
    with open(taxonomy_path, "w", encoding="utf-8") as fh:
        fh.write("ticker,sector,industry,subindustry\n")
        for ticker, sector in zip(tickers, sectors):
            fh.write(f"{ticker},{sector},Ind,Sub\n")
    return price_path, taxonomy_path
