"""Semester snapshots and trailing-window dynamics of correlation, TE, and volatility.

Every window statistic is anchored to the window's last date, so a
value plotted at date t uses only data up to t.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .entropy import bin_panel, te_matrix_expanded
from .errors import NumericError
from .correlate import pearson_matrix
from .netmetrics import in_out_node_strength, node_strength
from .panels import ReturnPanel, lag_expand

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class WindowSeries:
    """One scalar per window, indexed by the window's last date."""

    anchor_dates: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "anchor_dates", tuple(self.anchor_dates))
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(self.anchor_dates),):
            raise ValueError("one value per anchor date required")
        if any(a >= b for a, b in zip(self.anchor_dates, self.anchor_dates[1:])):
            raise ValueError("anchor dates must be strictly increasing")
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return len(self.anchor_dates)


def window_slices(dates: Sequence, width: int, step: int) -> list[range]:
    """Index ranges [k*step, k*step + width) lying wholly inside the date list."""
    if width < 2:
        raise ValueError(f"width must be >= 2, got {width}")
    if step < 1:
        raise ValueError(f"step must be >= 1, got {step}")
    T = len(dates)
    return [range(start, start + width) for start in range(0, T - width + 1, step)]


def semester_slices(dates: Sequence[str]) -> list[tuple[str, range]]:
    """Contiguous ranges split at Jan 1 and Jul 1, labeled like '2008-S2'."""
    labeled: list[tuple[str, range]] = []
    start = 0
    current = None
    for i, date in enumerate(dates):
        year, month = int(date[:4]), int(date[5:7])
        key = (year, 1 if month <= 6 else 2)
        if current is None:
            current = key
        elif key != current:
            labeled.append((f"{current[0]}-S{current[1]}", range(start, i)))
            start, current = i, key
    if current is not None:
        labeled.append((f"{current[0]}-S{current[1]}", range(start, len(dates))))
    return labeled


def rolling_mean_correlation(panel: ReturnPanel, width: int = 100, step: int = 1) -> WindowSeries:
    """Mean correlation per window: node strengths averaged and divided by N.

    Windows containing a zero-variance column are skipped and logged;
    correlation is undefined there.
    """
    if width < 3:
        raise ValueError(f"width must be >= 3 for correlations, got {width}")
    anchors: list[str] = []
    values: list[float] = []
    n = panel.n_variables
    for window in window_slices(panel.dates, width, step):
        sub = panel.window(window.start, window.stop)
        anchor = panel.dates[window.stop - 1]
        try:
            corr = pearson_matrix(sub)
        except NumericError as exc:
            logger.warning("window anchored at %s skipped: %s", anchor, exc)
            continue
        anchors.append(anchor)
        values.append(float(node_strength(corr).mean()) / n)
    return WindowSeries(tuple(anchors), np.array(values))


def rolling_mean_te(
    panel: ReturnPanel,
    width: int = 100,
    step: int = 1,
    bin_width: float = 0.1,
    threads: int | None = None,
) -> tuple[WindowSeries, WindowSeries]:
    """Mean in and out transfer entropy per window, each divided by N.

    Every window is lag-expanded and binned on its own local origin
    before the quadrant matrix is evaluated; strengths are read off the
    lagged-to-original quadrant. Zero-variance columns are legal here
    (they contribute zero information).
    """
    if width < 3:
        raise ValueError(f"width must be >= 3 for transfer entropy, got {width}")
    anchors: list[str] = []
    in_values: list[float] = []
    out_values: list[float] = []
    n = panel.n_variables
    for window in window_slices(panel.dates, width, step):
        sub = panel.window(window.start, window.stop)
        discrete = bin_panel(lag_expand(sub), bin_width)
        te = te_matrix_expanded(discrete, threads=threads)
        strength_in, strength_out = in_out_node_strength(te.quadrant("s21"))
        anchors.append(panel.dates[window.stop - 1])
        in_values.append(float(strength_in.mean()) / n)
        out_values.append(float(strength_out.mean()) / n)
    return (
        WindowSeries(tuple(anchors), np.array(in_values)),
        WindowSeries(tuple(anchors), np.array(out_values)),
    )


def volatility_panel(panel: ReturnPanel) -> np.ndarray:
    """Entrywise absolute log-returns; the per-stock volatility panel."""
    return np.abs(panel.returns)
