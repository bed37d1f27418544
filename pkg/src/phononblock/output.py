"""CSV and JSON emission of result tables.

Numbers are written with 12 significant digits; missing values are empty
CSV cells or JSON nulls.  Identical tables give identical bytes.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path

from .sweep import PointResult, SweepResult

POINT_COLUMNS = ("g2", "mean_n1", "mean_n2", "residual", "wall_ms", "failure_reason")
DIGITS = 12


@dataclass(frozen=True)
class Table:
    """Rows of plain values; ``keys`` columns nest under ``"coords"`` in JSON."""

    columns: tuple
    rows: tuple
    keys: tuple = ()


def format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if not math.isfinite(value):
            return ""
        return format(value, f".{DIGITS}g")
    return str(value)


def _json_value(value):
    if isinstance(value, float):
        return float(format(value, f".{DIGITS}g")) if math.isfinite(value) else None
    return value


def point_table(points, keys, timing: bool = False) -> Table:
    keys = tuple(sorted(keys))
    rows = []
    for p in points:
        row = {k: p.coords.get(k) for k in keys}
        for col in POINT_COLUMNS:
            row[col] = getattr(p, col)
        if not timing:
            row["wall_ms"] = None
        rows.append(row)
    return Table(keys + POINT_COLUMNS, tuple(rows), keys)


def sweep_table(result: SweepResult, timing: bool = False) -> Table:
    return point_table(result.points, result.axes, timing)


def single_point_table(point: PointResult, timing: bool = False) -> Table:
    return point_table([point], point.coords.keys(), timing)


def to_csv(table: Table) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(table.columns)
    for row in table.rows:
        writer.writerow([format_value(row.get(c)) for c in table.columns])
    return buf.getvalue()


def to_json(table: Table) -> str:
    records = []
    for row in table.rows:
        rec = {}
        if table.keys:
            rec["coords"] = {k: _json_value(row.get(k)) for k in table.keys}
        for c in table.columns:
            if c not in table.keys:
                rec[c] = _json_value(row.get(c))
        records.append(rec)
    doc = {"columns": list(table.columns), "records": records}
    return json.dumps(doc, indent=2, sort_keys=False) + "\n"


def render(table: Table, fmt: str = "csv") -> str:
    if fmt == "csv":
        return to_csv(table)
    if fmt == "json":
        return to_json(table)
    raise ValueError(f"unknown format {fmt!r}")


def emit(table: Table, fmt: str = "csv", path: str | Path | None = None, stream=None) -> str:
    """Render and write to ``path`` (or ``stream`` when no path is given)."""
    text = render(table, fmt)
    if path is not None:
        Path(path).write_text(text)
    elif stream is not None:
        stream.write(text)
    return text


def _parse_cell(text: str):
    if text == "":
        return None
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        return text


def read_csv(text: str) -> list[dict]:
    """Inverse of ``to_csv`` up to the printed precision."""
    reader = csv.DictReader(io.StringIO(text))
    return [{k: _parse_cell(v) for k, v in row.items()} for row in reader]


def read_json(text: str) -> list[dict]:
    """Flatten JSON records back to rows."""
    rows = []
    for rec in json.loads(text)["records"]:
        row = dict(rec.get("coords", {}))
        row.update({k: v for k, v in rec.items() if k != "coords"})
        rows.append(row)
    return rows
