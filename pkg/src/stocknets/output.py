"""File writers for matrices, series, graphs, and the run manifest.

All writers are byte-deterministic: fixed newline, shortest round-trip
float formatting, sorted JSON keys, and no timestamps. Identical inputs
therefore produce identical files, which the manifest digests certify.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .correlate import Histogram, NullBand
from .embedding import Embedding
from .errors import DataError
from .netmetrics import AssetGraph
from .panels import ReturnPanel, SectorTaxonomy, Variable
from .propagation import ShockTrajectory
from .windows import WindowSeries


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_writer(path):
    return open(path, "w", newline="", encoding="utf-8")


def write_matrix_csv(path, variables: Sequence[Variable], values: np.ndarray) -> None:
    """Square matrix with a leading header row/column of variable labels."""
    labels = [Variable(*v).label for v in variables]
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variable"] + labels)
        for label, row in zip(labels, np.asarray(values)):
            writer.writerow([label] + [_fmt(x) for x in row])


def read_matrix_csv(path) -> tuple[tuple[Variable, ...], np.ndarray]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "variable":
            raise DataError(f"{path}: not a matrix CSV")
        variables = tuple(Variable.from_label(label) for label in header[1:])
        rows = []
        for row in reader:
            if row:
                rows.append([float(x) for x in row[1:]])
    values = np.array(rows, dtype=float).reshape(len(rows), len(variables))
    if values.shape != (len(variables),) * 2:
        raise DataError(f"{path}: matrix shape {values.shape} does not match header")
    return variables, values


def write_returns_csv(path, panel: ReturnPanel) -> None:
    """Wide-format return panel: date column plus one column per variable."""
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date"] + [v.label for v in panel.variables])
        for date, row in zip(panel.dates, panel.returns):
            writer.writerow([date] + [_fmt(x) for x in row])


def read_returns_csv(path) -> ReturnPanel:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "date":
            raise DataError(f"{path}: not a returns CSV")
        variables = tuple(Variable.from_label(label) for label in header[1:])
        dates, rows = [], []
        for row in reader:
            if row:
                dates.append(row[0])
                rows.append([float(x) for x in row[1:]])
    values = np.array(rows, dtype=float).reshape(len(rows), len(variables))
    return ReturnPanel(tuple(dates), variables, values)


def write_vector_csv(path, variables: Sequence[Variable], values: np.ndarray,
                     value_name: str, ranked: bool = False) -> None:
    """Per-variable values; with `ranked`, sorted descending and rank-numbered."""
    labels = [Variable(*v).label for v in variables]
    order = np.argsort(-np.asarray(values), kind="stable") if ranked else range(len(labels))
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variable", value_name] + (["rank"] if ranked else []))
        for rank, i in enumerate(order, start=1):
            row = [labels[i], _fmt(values[i])]
            if ranked:
                row.append(str(rank))
            writer.writerow(row)


def write_histogram_csv(path, histogram: Histogram) -> None:
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["bin_lo", "bin_hi", "count"])
        for lo, hi, count in zip(histogram.edges[:-1], histogram.edges[1:], histogram.counts):
            writer.writerow([_fmt(lo), _fmt(hi), str(int(count))])


def write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def nullband_payload(bands: dict[str, NullBand] | NullBand) -> dict:
    if isinstance(bands, NullBand):
        return bands.to_dict()
    return {name: band.to_dict() for name, band in bands.items()}


def write_window_series_csv(path, series: Iterable[tuple[str, WindowSeries]]) -> None:
    """Long format `anchor_date,statistic,value`, one block per named series."""
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["anchor_date", "statistic", "value"])
        for name, ws in series:
            for date, value in zip(ws.anchor_dates, ws.values):
                writer.writerow([date, name, _fmt(value)])


def write_semester_stats_csv(path, rows: Iterable[tuple[str, float, float, float]]) -> None:
    """Per-semester means: `semester,mean_correlation,mean_te_in,mean_te_out`."""
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["semester", "mean_correlation", "mean_te_in", "mean_te_out"])
        for label, corr, te_in, te_out in rows:
            writer.writerow([label, _fmt(corr), _fmt(te_in), _fmt(te_out)])


def write_panel_long_csv(path, panel: ReturnPanel, values: np.ndarray, statistic: str) -> None:
    """Long format `anchor_date,variable,statistic,value` for per-stock panels."""
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["anchor_date", "variable", "statistic", "value"])
        for date, row in zip(panel.dates, np.asarray(values)):
            for variable, value in zip(panel.variables, row):
                writer.writerow([date, variable.label, statistic, _fmt(value)])


def write_embedding_csv(path, emb: Embedding) -> None:
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["variable"] + [f"x{a + 1}" for a in range(emb.m)])
        for variable, row in zip(emb.variables, emb.coords):
            writer.writerow([variable.label] + [_fmt(x) for x in row])


def embedding_payload(emb: Embedding) -> dict:
    return {
        "m": emb.m,
        "stress": emb.stress,
        "truncated_count": emb.truncated_count,
        "truncated_mass": emb.truncated_mass,
    }


def write_trajectory_csv(path, trajectory: ShockTrajectory) -> None:
    with _open_writer(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "variable", "volatility"])
        for t, row in enumerate(trajectory.volatilities):
            for variable, value in zip(trajectory.variables, row):
                writer.writerow([str(t), variable.label, _fmt(value)])


def _xml_escape(text: str) -> str:
    return (
        text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def write_graphml(path, graph: AssetGraph, taxonomy: SectorTaxonomy | None = None) -> None:
    """GraphML export with ticker/sector node attributes and weighted edges."""
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        '<graphml xmlns="http://graphml.graphdrawing.org/xmlns">',
        '  <key id="ticker" for="node" attr.name="ticker" attr.type="string"/>',
        '  <key id="sector" for="node" attr.name="sector" attr.type="string"/>',
        '  <key id="weight" for="edge" attr.name="weight" attr.type="double"/>',
        '  <key id="reciprocal" for="edge" attr.name="reciprocal" attr.type="boolean"/>',
        f'  <graph edgedefault="{"directed" if graph.directed else "undirected"}">',
    ]
    for node in graph.nodes:
        lines.append(f'    <node id="{_xml_escape(node.label)}">')
        lines.append(f'      <data key="ticker">{_xml_escape(node.ticker)}</data>')
        if taxonomy is not None:
            lines.append(
                f'      <data key="sector">{_xml_escape(taxonomy.sector_of(node.ticker))}</data>'
            )
        lines.append("    </node>")
    for edge in graph.edges:
        lines.append(
            f'    <edge source="{_xml_escape(edge.source.label)}"'
            f' target="{_xml_escape(edge.target.label)}">'
        )
        lines.append(f'      <data key="weight">{_fmt(edge.weight)}</data>')
        if graph.directed:
            flag = "true" if edge.reciprocal else "false"
            lines.append(f'      <data key="reciprocal">{flag}</data>')
        lines.append("    </edge>")
    lines += ["  </graph>", "</graphml>", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def write_dot(path, graph: AssetGraph, taxonomy: SectorTaxonomy | None = None) -> None:
    """DOT export; reciprocal directed pairs are drawn once without arrows."""
    index = {v: i for i, v in enumerate(graph.nodes)}
    kind = "digraph" if graph.directed else "graph"
    arrow = "->" if graph.directed else "--"
    lines = [f"{kind} assets {{"]
    for node in graph.nodes:
        attrs = ""
        if taxonomy is not None:
            attrs = f' [sector="{taxonomy.sector_of(node.ticker)}"]'
        lines.append(f'  "{node.label}"{attrs};')
    for edge in graph.edges:
        if graph.directed and edge.reciprocal:
            if index[edge.source] > index[edge.target]:
                continue  # reciprocal pair emitted once
            lines.append(
                f'  "{edge.source.label}" {arrow} "{edge.target.label}"'
                f" [weight={_fmt(edge.weight)}, dir=none];"
            )
        else:
            lines.append(
                f'  "{edge.source.label}" {arrow} "{edge.target.label}"'
                f" [weight={_fmt(edge.weight)}];"
            )
    lines += ["}", ""]
    Path(path).write_text("\n".join(lines), encoding="utf-8")


def sha256_of(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def write_manifest(path, config: dict, seed: int, inputs: Iterable, outputs: Iterable) -> None:
    """Record config, seed, and file digests so a run can be reproduced bit-for-bit."""
    payload = {
        "config": config,
        "seed": seed,
        "inputs": {Path(p).name: sha256_of(p) for p in inputs},
        "outputs": {Path(p).name: sha256_of(p) for p in outputs},
    }
    write_json(path, payload)
