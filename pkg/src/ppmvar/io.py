"""Return-series ingestion and report/table serialisation."""
from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import dataclass
from datetime import date
from typing import Any, Optional, Sequence

import numpy as np

from .errors import DataError, UsageError

MISSING = {"", "na", "nan", "null", "none", "-"}
PRICE_COLUMNS = ("Adj Close", "Adj_Close", "adj_close", "Close", "close", "price", "Price")
RETURN_COLUMNS = ("return", "returns", "Return", "Returns", "ret", "r")
DATE_COLUMNS = ("Date", "date", "Datetime", "timestamp")


@dataclass
class ReturnSeries:
    returns: np.ndarray
    dates: Optional[list[str]] = None
    source: str = "returns"
    skipped: int = 0

    def __len__(self):
        return self.returns.size


def _pick_column(header: Sequence[str], requested: Optional[str], candidates) -> Optional[str]:
    if requested is not None:
        if requested not in header:
            raise DataError(f"column {requested!r} not found; have {', '.join(header)}", module="io")
        return requested
    for name in candidates:
        if name in header:
            return name
    return None


def load_returns(path, fmt: str = "returns", column: Optional[str] = None,
                 date_column: Optional[str] = None, delimiter: Optional[str] = None) -> ReturnSeries:
    """Read a delimited text file with a header row.

    ``fmt='prices'`` turns the price column into log returns after sorting
    by date; ``fmt='returns'`` reads values verbatim.  Rows with a missing
    value are skipped and counted.
    """
    if fmt not in ("prices", "returns"):
        raise UsageError(f"format must be 'prices' or 'returns', got {fmt!r}", module="io")
    try:
        with open(path, newline="", encoding="utf-8-sig") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc.strerror}", module="io") from None
    if delimiter is None:
        try:
            delimiter = csv.Sniffer().sniff(text.split("\n", 1)[0], delimiters=",;\t").delimiter
        except csv.Error:
            delimiter = ","
    reader = csv.reader(text.splitlines(), delimiter=delimiter)
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise DataError(f"{path} is empty", module="io") from None
    dcol = _pick_column(header, date_column, DATE_COLUMNS)
    vcol = _pick_column(header, column, PRICE_COLUMNS if fmt == "prices" else RETURN_COLUMNS)
    if vcol is None:
        others = [h for h in header if h != dcol]
        if len(others) != 1:
            raise DataError(f"cannot tell which column holds {fmt}; pass a column name", module="io")
        vcol = others[0]
    vi = header.index(vcol)
    di = header.index(dcol) if dcol is not None else None

    rows, skipped = [], 0
    for lineno, rec in enumerate(reader, start=2):
        if not rec or all(not f.strip() for f in rec):
            continue
        raw = rec[vi].strip() if vi < len(rec) else ""
        if raw.lower() in MISSING:
            skipped += 1
            continue
        try:
            value = float(raw)
        except ValueError:
            raise DataError(f"row {lineno}: cannot parse {raw!r} in column {vcol!r}", module="io") from None
        if not math.isfinite(value):
            raise DataError(f"row {lineno}: non-finite value", module="io")
        if fmt == "prices" and value <= 0:
            raise DataError(f"row {lineno}: nonpositive price {value}", module="io")
        stamp = None
        if di is not None:
            stamp = rec[di].strip() if di < len(rec) else ""
            try:
                date.fromisoformat(stamp[:10])
            except ValueError:
                raise DataError(f"row {lineno}: bad ISO date {stamp!r}", module="io") from None
        rows.append((stamp, value))

    if di is not None:
        rows.sort(key=lambda r: r[0])
    values = np.array([v for _, v in rows], dtype=float)
    dates = [d for d, _ in rows] if di is not None else None
    if values.size < 2:
        raise DataError(f"need at least 2 usable rows, got {values.size}", module="io")
    if fmt == "prices":
        returns = np.diff(np.log(values))
        dates = dates[1:] if dates is not None else None
    else:
        returns = values
    return ReturnSeries(returns, dates, fmt, skipped)


@dataclass
class Histogram:
    bin_left: np.ndarray
    bin_right: np.ndarray
    density: np.ndarray
    degenerate: bool = False

    def rows(self) -> list[dict]:
        return [{"bin_left": float(a), "bin_right": float(b), "density": float(d)}
                for a, b, d in zip(self.bin_left, self.bin_right, self.density)]


def export_histogram(draws, bins: int = 50) -> Histogram:
    """Equal-width density histogram over ``[min, max]`` of the draws.

    A zero-width range yields one bin with ``degenerate=True`` and infinite
    density.
    """
    x = np.asarray(draws, dtype=float).ravel()
    if x.size < 2:
        raise UsageError("need at least 2 draws", module="io")
    if bins < 1:
        raise UsageError("bins must be positive", module="io")
    lo, hi = float(x.min()), float(x.max())
    if lo == hi:
        return Histogram(np.array([lo]), np.array([hi]), np.array([np.inf]), True)
    density, edges = np.histogram(x, bins=bins, range=(lo, hi), density=True)
    return Histogram(edges[:-1], edges[1:], density)


def format_float(x: float) -> str:
    if math.isnan(x):
        return "NaN"
    if math.isinf(x):
        return "Infinity" if x > 0 else "-Infinity"
    return format(x, ".17g")


def _encode(obj: Any, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_encode(str(k), indent, level + 1)}: {_encode(obj[k], indent, level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        if len(obj) == 0:
            return "[]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_report(doc: dict, indent: int = 2) -> str:
    """JSON text with sorted keys and floats at 17 significant digits."""
    return _encode(doc, indent, 0) + "\n"


def write_report(path, doc: dict) -> None:
    _write_whole(path, dumps_report(doc))


def write_table(path, rows: list[dict], columns: Optional[Sequence[str]] = None) -> None:
    """Comma-separated table; floats at 17 significant digits."""
    columns = list(columns or (rows[0].keys() if rows else []))
    buf = [",".join(columns)]
    for row in rows:
        cells = []
        for c in columns:
            v = row.get(c, "")
            if isinstance(v, (float, np.floating)):
                v = format_float(float(v))
            elif isinstance(v, (tuple, list)):
                v = " ".join(map(str, v))
            cells.append(str(v))
        buf.append(",".join(f'"{s}"' if "," in s else s for s in cells))
    _write_whole(path, "\n".join(buf) + "\n")


def _write_whole(path, text: str) -> None:
    tmp = f"{path}.tmp{os.getpid()}"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)
