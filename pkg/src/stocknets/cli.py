"""Command-line front end: corpus ingestion through analyses to output files.

Every run writes a manifest recording the effective configuration, the
seed, and SHA-256 digests of inputs and outputs, so identical runs can
be verified byte-for-byte. On error, partial outputs are removed.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys
from dataclasses import dataclass
from pathlib import Path

from . import correlate, entropy, netmetrics, output, propagation, windows
from .embedding import classical_mds
from .errors import DataError, NumericError
from .panels import (
    ReturnPanel,
    SectorTaxonomy,
    Variable,
    compute_log_returns,
    filter_liquidity,
    lag_expand,
    load_prices,
    load_taxonomy,
)

logger = logging.getLogger(__name__)

THREADS_ENV_VAR = "STOCKNETS_THREADS"
ANALYSES = ("ingest", "corr", "te", "net", "embed", "windows", "shock", "report")

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


@dataclass
class RunConfig:
    """Everything a run needs; flags override config-file values, which override defaults."""

    analysis: str = ""
    prices: str | None = None
    taxonomy: str | None = None
    out_dir: str = "out"
    seed: int = 0
    threads: int | None = None
    min_liquidity: float = 0.80
    bin_width: float = 0.02
    quadrant: str = "s21"
    normalize: bool = False
    excess: bool = False
    sims: int = 0
    hist_bins: int = 0
    corr_threshold: float = 0.8
    te_threshold: float = 0.7
    window_width: int = 100
    window_step: int = 1
    window_bin_width: float = 0.1
    semester: bool = False
    dimensions: int = 2
    measure: str = "corr"
    stock: str | None = None
    sector: str | None = None
    systemic: bool = False
    rank: bool = False
    magnitude: float | None = None
    horizon: int = propagation.DEFAULT_HORIZON
    peak_day: int = propagation.DEFAULT_PEAK_DAY

    def resolved_threads(self) -> int:
        if self.threads is not None:
            return self.threads
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            try:
                return max(1, int(env))
            except ValueError:
                logger.warning("ignoring non-integer %s=%r", THREADS_ENV_VAR, env)
        return os.cpu_count() or 1

    def public_dict(self) -> dict:
        """Manifest view: analytic parameters only, no filesystem locations.

        Input files are identified by their digests; recording paths or
        the output directory would make byte-identical runs impossible.
        """
        d = dataclasses.asdict(self)
        d.pop("out_dir")
        d.pop("threads")  # a speed knob; results are thread-count invariant
        for key in ("prices", "taxonomy"):
            if d[key] is not None:
                d[key] = Path(d[key]).name
        return d


def validate(config: RunConfig) -> list[str]:
    """All configuration problems that would make `run` fail, empty if none."""
    problems: list[str] = []
    if config.analysis not in ANALYSES:
        problems.append(f"analysis must be one of {ANALYSES}, got {config.analysis!r}")
    if config.prices is None:
        problems.append("prices: a price CSV path is required")
    elif not Path(config.prices).is_file():
        problems.append(f"prices: file not found: {config.prices}")
    if config.taxonomy is not None and not Path(config.taxonomy).is_file():
        problems.append(f"taxonomy: file not found: {config.taxonomy}")
    if not 0.0 <= config.min_liquidity <= 1.0:
        problems.append(f"min_liquidity must be in [0, 1], got {config.min_liquidity}")
    if config.bin_width <= 0.0:
        problems.append(f"bin_width must be positive, got {config.bin_width}")
    if config.quadrant not in entropy.QUADRANTS + ("full",):
        problems.append(f"quadrant must be one of {entropy.QUADRANTS + ('full',)}")
    if config.sims < 0:
        problems.append(f"sims must be >= 0, got {config.sims}")
    if config.hist_bins < 0:
        problems.append(f"hist_bins must be >= 0, got {config.hist_bins}")
    if config.window_width < 3:
        problems.append(f"window_width must be >= 3, got {config.window_width}")
    if config.window_step < 1:
        problems.append(f"window_step must be >= 1, got {config.window_step}")
    if config.window_bin_width <= 0.0:
        problems.append(f"window_bin_width must be positive, got {config.window_bin_width}")
    if config.dimensions < 1:
        problems.append(f"dimensions must be >= 1, got {config.dimensions}")
    if config.measure not in ("corr", "te"):
        problems.append(f"measure must be 'corr' or 'te', got {config.measure!r}")
    if config.magnitude is not None and config.magnitude <= 0.0:
        problems.append(f"magnitude must be positive, got {config.magnitude}")
    if config.horizon < 0:
        problems.append(f"horizon must be >= 0, got {config.horizon}")
    if config.peak_day < 1:
        problems.append(f"peak_day must be >= 1, got {config.peak_day}")
    if config.threads is not None and config.threads < 1:
        problems.append(f"threads must be >= 1, got {config.threads}")
    if config.analysis == "shock":
        chosen = [bool(config.stock), bool(config.sector), config.systemic, config.rank]
        if sum(chosen) != 1:
            problems.append("shock: choose exactly one of --stock, --sector, --systemic, --rank")
        if config.sector and config.taxonomy is None:
            problems.append("shock: --sector requires a taxonomy file")
    if config.analysis == "net" and config.measure == "corr" and config.excess:
        problems.append("net: --excess applies to the TE measure only")
    return problems


class _OutputTracker:
    """Collects written files so a failing run can clean up after itself."""

    def __init__(self, out_dir: Path):
        self.out_dir = out_dir
        self.paths: list[Path] = []

    def path(self, name: str) -> Path:
        p = self.out_dir / name
        self.paths.append(p)
        return p

    def discard_all(self) -> None:
        for p in self.paths:
            p.unlink(missing_ok=True)


def _load_corpus(config: RunConfig) -> tuple[ReturnPanel, SectorTaxonomy | None]:
    panel = filter_liquidity(load_prices(config.prices), config.min_liquidity)
    returns = compute_log_returns(panel)
    taxonomy = load_taxonomy(config.taxonomy) if config.taxonomy else None
    if taxonomy is not None:
        for ticker in returns.tickers:
            taxonomy.info(ticker)  # fail early, naming the ticker
    return returns, taxonomy


def _te_quadrants(config: RunConfig, returns: ReturnPanel) -> entropy.QuadTEMatrix:
    discrete = entropy.bin_panel(lag_expand(returns), config.bin_width)
    return entropy.te_matrix_expanded(discrete, threads=config.resolved_threads())


def _run_ingest(config, returns, taxonomy, out):
    output.write_returns_csv(out.path("returns.csv"), returns)


def _run_corr(config, returns, taxonomy, out):
    corr = correlate.pearson_matrix(returns)
    output.write_matrix_csv(out.path("correlation.csv"), corr.variables, corr.values)
    if config.hist_bins:
        hist = correlate.offdiag_histogram(corr, config.hist_bins)
        output.write_histogram_csv(out.path("correlation_histogram.csv"), hist)
    if config.sims:
        band = correlate.shuffle_null(returns, config.sims, config.seed,
                                      threads=config.resolved_threads())
        output.write_json(out.path("correlation_null.json"), output.nullband_payload(band))


def _run_te(config, returns, taxonomy, out, te=None):
    te = te if te is not None else _te_quadrants(config, returns)
    if config.quadrant == "full":
        output.write_matrix_csv(out.path("te_full.csv"), te.variables, te.values)
    else:
        block = te.quadrant(config.quadrant)
        labels = tuple(Variable(t, 0) for t in te.tickers)
        output.write_matrix_csv(out.path(f"te_{config.quadrant}.csv"), labels, block)
    if config.normalize:
        norm = entropy.normalize_te(te)
        output.write_matrix_csv(out.path("te_normalized.csv"), norm.variables, norm.values)
    if config.excess:
        exc = entropy.excess_te(te)
        output.write_matrix_csv(out.path("te_excess.csv"), exc.variables, exc.values)
    if config.sims:
        discrete = entropy.bin_panel(returns, config.bin_width)
        bands = entropy.te_shuffle_null(discrete, config.sims, config.seed,
                                        threads=config.resolved_threads())
        output.write_json(out.path("te_null.json"), output.nullband_payload(bands))


def _run_net(config, returns, taxonomy, out, te=None):
    if config.measure == "corr":
        corr = correlate.pearson_matrix(returns)
        strengths = netmetrics.node_strength(corr)
        output.write_vector_csv(out.path("node_strength.csv"), corr.variables, strengths,
                                "strength", ranked=True)
        graph = netmetrics.asset_graph(corr, config.corr_threshold, directed=False)
    else:
        te = te if te is not None else _te_quadrants(config, returns)
        s21 = entropy.LabeledMatrix(
            tuple(Variable(t, 0) for t in te.tickers), te.quadrant("s21")
        )
        strength_in, strength_out = netmetrics.in_out_node_strength(s21)
        output.write_vector_csv(out.path("in_node_strength.csv"), s21.variables, strength_in,
                                "strength", ranked=True)
        output.write_vector_csv(out.path("out_node_strength.csv"), s21.variables, strength_out,
                                "strength", ranked=True)
        if config.excess:
            exc = entropy.excess_te(te)
            exc_in, exc_out = netmetrics.in_out_node_strength(exc)
            output.write_vector_csv(out.path("excess_in_node_strength.csv"), exc.variables,
                                    exc_in, "strength", ranked=True)
            output.write_vector_csv(out.path("excess_out_node_strength.csv"), exc.variables,
                                    exc_out, "strength", ranked=True)
        graph = netmetrics.asset_graph(s21, config.te_threshold, directed=True)
    prefix = f"asset_graph_{config.measure}"
    output.write_graphml(out.path(f"{prefix}.graphml"), graph, taxonomy)
    output.write_dot(out.path(f"{prefix}.dot"), graph, taxonomy)
    components = netmetrics.connected_components(graph)
    output.write_json(out.path(f"{prefix}_components.json"),
                      {"components": [[v.label for v in c] for c in components]})
    if taxonomy is not None:
        sectors = netmetrics.sector_index(returns, taxonomy)
        output.write_returns_csv(out.path("sector_indices.csv"), sectors)
        sector_corr = correlate.pearson_matrix(sectors)
        output.write_matrix_csv(out.path("sector_correlation.csv"),
                                sector_corr.variables, sector_corr.values)
        sector_te = _te_quadrants(config, sectors)
        labels = tuple(Variable(t, 0) for t in sector_te.tickers)
        output.write_matrix_csv(out.path("sector_te_s21.csv"), labels,
                                sector_te.quadrant("s21"))


def _run_embed(config, returns, taxonomy, out, te=None):
    if config.measure == "corr":
        dist = netmetrics.correlation_distance(correlate.pearson_matrix(returns))
    else:
        te = te if te is not None else _te_quadrants(config, returns)
        dist = netmetrics.te_distance(entropy.normalize_te(te))
    emb = classical_mds(dist, config.dimensions)
    output.write_embedding_csv(out.path(f"embedding_{config.measure}.csv"), emb)
    output.write_json(out.path(f"embedding_{config.measure}.json"),
                      output.embedding_payload(emb))


def _run_windows(config, returns, taxonomy, out):
    threads = config.resolved_threads()
    if config.semester:
        rows = []
        for label, window in windows.semester_slices(returns.dates):
            sub = returns.window(window.start, window.stop)
            if sub.n_dates < 3:
                logger.warning("semester %s skipped: only %d rows", label, sub.n_dates)
                continue
            try:
                corr = correlate.pearson_matrix(sub)
                mean_corr = float(netmetrics.node_strength(corr).mean()) / sub.n_variables
            except NumericError as exc:
                logger.warning("semester %s correlation skipped: %s", label, exc)
                mean_corr = float("nan")
            te = entropy.te_matrix_expanded(
                entropy.bin_panel(lag_expand(sub), config.window_bin_width), threads=threads
            )
            s_in, s_out = netmetrics.in_out_node_strength(te.quadrant("s21"))
            rows.append((label, mean_corr,
                         float(s_in.mean()) / sub.n_variables,
                         float(s_out.mean()) / sub.n_variables))
        output.write_semester_stats_csv(out.path("semester_stats.csv"), rows)
        return
    mean_corr = windows.rolling_mean_correlation(returns, config.window_width, config.window_step)
    te_in, te_out = windows.rolling_mean_te(
        returns, config.window_width, config.window_step, config.window_bin_width,
        threads=threads,
    )
    output.write_window_series_csv(
        out.path("window_series.csv"),
        [("mean_correlation", mean_corr), ("mean_te_in", te_in), ("mean_te_out", te_out)],
    )
    output.write_panel_long_csv(out.path("volatility.csv"), returns,
                                windows.volatility_panel(returns), "volatility")


def _run_shock(config, returns, taxonomy, out, te=None):
    te = te if te is not None else _te_quadrants(config, returns)
    mte = propagation.build_propagation_matrix(te)
    tickers = mte.tickers
    if config.rank:
        magnitude = config.magnitude or propagation.DEFAULT_SINGLE_MAGNITUDE
        strengths = propagation.shock_propagation_strength(mte, magnitude, config.peak_day)
        output.write_vector_csv(out.path("shock_strength.csv"), mte.variables, strengths,
                                "strength", ranked=True)
        return
    if config.stock:
        if config.stock not in tickers:
            raise DataError(f"unknown ticker {config.stock!r}")
        magnitude = config.magnitude or propagation.DEFAULT_SINGLE_MAGNITUDE
        trajectory = propagation.single_stock_shock(
            mte, tickers.index(config.stock), magnitude, config.horizon
        )
    elif config.sector:
        members = taxonomy.members(config.sector, tickers)
        if not members:
            raise DataError(f"no tickers in sector {config.sector!r}")
        magnitude = config.magnitude or propagation.DEFAULT_GROUP_MAGNITUDE
        trajectory = propagation.group_shock(
            mte, [tickers.index(t) for t in members], magnitude, config.horizon,
            origin=f"sector:{config.sector}",
        )
    else:
        magnitude = config.magnitude or propagation.DEFAULT_GROUP_MAGNITUDE
        trajectory = propagation.group_shock(
            mte, range(mte.n), magnitude, config.horizon, origin="systemic"
        )
    output.write_trajectory_csv(out.path("shock_trajectory.csv"), trajectory)


def _run_report(config, returns, taxonomy, out):
    """The full pipeline: one call producing every standard artifact.

    The full-period quadrant matrix is computed once and reused by every
    step that needs it; at real scale it dominates the runtime.
    """
    _run_ingest(config, returns, taxonomy, out)
    report_config = dataclasses.replace(
        config,
        sims=config.sims or 1000,
        hist_bins=config.hist_bins or 50,
        normalize=True,
        excess=True,
        quadrant="s21",
    )
    te = _te_quadrants(report_config, returns)
    _run_corr(report_config, returns, taxonomy, out)
    _run_te(dataclasses.replace(report_config, sims=10), returns, taxonomy, out, te=te)
    s21 = entropy.LabeledMatrix(
        tuple(Variable(t, 0) for t in te.tickers), te.quadrant("s21")
    )
    comparison = entropy.te_correlation_comparison(s21, correlate.pearson_matrix(returns))
    output.write_json(out.path("te_correlation_comparison.json"), comparison.to_dict())
    for measure in ("corr", "te"):
        _run_net(dataclasses.replace(report_config, measure=measure, sims=0), returns,
                 taxonomy, out, te=te)
        _run_embed(dataclasses.replace(report_config, measure=measure), returns,
                   taxonomy, out, te=te)
    _run_windows(report_config, returns, taxonomy, out)
    _run_shock(dataclasses.replace(report_config, rank=True, stock=None, sector=None),
               returns, taxonomy, out, te=te)


_DISPATCH = {
    "ingest": _run_ingest,
    "corr": _run_corr,
    "te": _run_te,
    "net": _run_net,
    "embed": _run_embed,
    "windows": _run_windows,
    "shock": _run_shock,
    "report": _run_report,
}


def run(config: RunConfig) -> int:
    """Validate, execute the selected analysis, and write the manifest."""
    problems = validate(config)
    if problems:
        for p in problems:
            print(f"error: {p}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = Path(config.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    tracker = _OutputTracker(out_dir)
    try:
        returns, taxonomy = _load_corpus(config)
        _DISPATCH[config.analysis](config, returns, taxonomy, tracker)
        inputs = [config.prices] + ([config.taxonomy] if config.taxonomy else [])
        manifest_path = out_dir / "manifest.json"
        output.write_manifest(manifest_path, config.public_dict(), config.seed,
                              inputs, tracker.paths)
    except BaseException:
        tracker.discard_all()
        (out_dir / "manifest.json").unlink(missing_ok=True)
        raise
    return EXIT_OK


def load_config_file(path) -> dict:
    """Parse `key = value` lines; '#' starts a comment, blank lines are skipped."""
    field_types = {f.name: f.type for f in dataclasses.fields(RunConfig)}
    values: dict = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise DataError(f"{path}: line {lineno}: expected 'key = value'")
            key, _, text = line.partition("=")
            key = key.strip().replace("-", "_")
            text = text.strip()
            if key not in field_types:
                raise DataError(f"{path}: line {lineno}: unknown key {key!r}")
            values[key] = _coerce(key, text, lineno, path)
    return values


def _coerce(key: str, text: str, lineno: int, path) -> object:
    bool_fields = {"normalize", "excess", "semester", "systemic", "rank"}
    int_fields = {"seed", "threads", "sims", "hist_bins", "window_width", "window_step",
                  "dimensions", "horizon", "peak_day"}
    float_fields = {"min_liquidity", "bin_width", "corr_threshold", "te_threshold",
                    "window_bin_width", "magnitude"}
    try:
        if key in bool_fields:
            lowered = text.lower()
            if lowered in ("true", "1", "yes"):
                return True
            if lowered in ("false", "0", "no"):
                return False
            raise ValueError(text)
        if key in int_fields:
            return int(text)
        if key in float_fields:
            return float(text)
        return text
    except ValueError:
        raise DataError(f"{path}: line {lineno}: bad value for {key}: {text!r}") from None


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file; flags win")
    common.add_argument("--prices", help="price CSV (date,ticker,close)")
    common.add_argument("--taxonomy", help="taxonomy CSV (ticker,sector,industry,subindustry)")
    common.add_argument("--out-dir", dest="out_dir", help="output directory (default: out)")
    common.add_argument("--seed", type=int, help="random seed (default: 0)")
    common.add_argument("--threads", type=int,
                        help=f"worker threads (default: ${THREADS_ENV_VAR} or CPU count)")
    common.add_argument("--min-liquidity", dest="min_liquidity", type=float,
                        help="minimum presence fraction per ticker (default: 0.8)")

    parser = _Parser(prog="stocknets",
                     description="Correlation and transfer-entropy network analytics "
                                 "over daily stock returns.")
    sub = parser.add_subparsers(dest="analysis", required=True, parser_class=_Parser)

    sub.add_parser("ingest", parents=[common], help="write the aligned log-return panel")

    p = sub.add_parser("corr", parents=[common], help="correlation matrix and null band")
    p.add_argument("--sims", type=int, help="shuffle simulations for the null band")
    p.add_argument("--hist-bins", dest="hist_bins", type=int,
                   help="write an off-diagonal histogram with this many bins")

    p = sub.add_parser("te", parents=[common], help="transfer entropy quadrants")
    p.add_argument("--bin", dest="bin_width", type=float, help="bin width (default: 0.02)")
    p.add_argument("--quadrant", choices=entropy.QUADRANTS + ("full",),
                   help="quadrant to write (default: s21)")
    p.add_argument("--normalize", action="store_true", default=None,
                   help="also write the column-normalized s21 matrix")
    p.add_argument("--excess", action="store_true", default=None,
                   help="also write the antisymmetric excess TE matrix")
    p.add_argument("--sims", type=int, help="shuffle simulations for per-quadrant null bands")

    p = sub.add_parser("net", parents=[common], help="node strengths, asset graph, components")
    p.add_argument("--measure", choices=("corr", "te"), help="edge weights (default: corr)")
    p.add_argument("--threshold", type=float, dest="threshold",
                   help="edge threshold (defaults: corr 0.8, te 0.7)")
    p.add_argument("--bin", dest="bin_width", type=float, help="TE bin width (default: 0.02)")
    p.add_argument("--excess", action="store_true", default=None,
                   help="also rank excess-TE strengths (te measure)")

    p = sub.add_parser("embed", parents=[common], help="2-D map from a distance matrix")
    p.add_argument("--measure", choices=("corr", "te"), help="distance source (default: corr)")
    p.add_argument("--dimensions", type=int, help="embedding dimensions (default: 2)")
    p.add_argument("--bin", dest="bin_width", type=float, help="TE bin width (default: 0.02)")

    p = sub.add_parser("windows", parents=[common], help="rolling or semester dynamics")
    p.add_argument("--width", dest="window_width", type=int, help="window width (default: 100)")
    p.add_argument("--step", dest="window_step", type=int, help="window step (default: 1)")
    p.add_argument("--bin", dest="window_bin_width", type=float,
                   help="per-window TE bin width (default: 0.1)")
    p.add_argument("--semester", action="store_true", default=None,
                   help="semester snapshots instead of rolling windows")

    p = sub.add_parser("shock", parents=[common], help="volatility propagation simulator")
    p.add_argument("--stock", help="shock one ticker")
    p.add_argument("--sector", help="shock every ticker in a sector (needs --taxonomy)")
    p.add_argument("--systemic", action="store_true", default=None, help="shock all tickers")
    p.add_argument("--rank", action="store_true", default=None,
                   help="rank all stocks by shock propagation strength")
    p.add_argument("--magnitude", type=float,
                   help="initial volatility (defaults: 0.3 single, 0.1 group)")
    p.add_argument("--horizon", type=int, help="days to simulate (default: 10)")
    p.add_argument("--peak-day", dest="peak_day", type=int,
                   help="ranking snapshot day (default: 4)")
    p.add_argument("--bin", dest="bin_width", type=float, help="TE bin width (default: 0.02)")

    p = sub.add_parser("report", parents=[common], help="run the full standard pipeline")
    p.add_argument("--bin", dest="bin_width", type=float, help="TE bin width (default: 0.02)")
    p.add_argument("--width", dest="window_width", type=int, help="window width (default: 100)")
    p.add_argument("--step", dest="window_step", type=int, help="window step (default: 1)")

    return parser


def build_config(argv) -> RunConfig:
    """Merge defaults, optional config file, and CLI flags (flags win)."""
    parser = _build_parser()
    namespace = parser.parse_args(argv)
    cli_values = {k: v for k, v in vars(namespace).items() if v is not None and k != "config"}
    threshold = cli_values.pop("threshold", None)
    merged: dict = {}
    if namespace.config:
        merged.update(load_config_file(namespace.config))
    merged.update(cli_values)
    if threshold is not None:
        key = "te_threshold" if merged.get("measure") == "te" else "corr_threshold"
        merged[key] = threshold
    return RunConfig(**merged)


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(name)s: %(message)s",
                        stream=sys.stderr)
    try:
        config = build_config(argv if argv is not None else sys.argv[1:])
    except SystemExit as exc:
        return int(exc.code or 0)
    except DataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        return run(config)
    except DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
