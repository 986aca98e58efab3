"""Deterministic writers: JSON, long-format CSV, log-log SVG and file manifests."""

from __future__ import annotations

import enum
import hashlib
import json
import math
import os
from typing import Iterable, Sequence

import numpy as np

CSV_FORMAT = "%.16e"


def _plain(obj):
    """Recursively convert numpy scalars/arrays and non-finite floats for JSON."""
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, enum.Enum):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return obj


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2) + "\n"


def write_json(path: str, obj) -> str:
    with open(path, "w") as fh:
        fh.write(dumps(obj))
    return path


def _cell(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return "1" if v else "0"
    if isinstance(v, (int, float, np.integer, np.floating)):
        x = float(v)
        return CSV_FORMAT % x if math.isfinite(x) else ("nan" if math.isnan(x) else
                                                        ("inf" if x > 0 else "-inf"))
    if v is None:
        return ""
    return str(v)


def write_csv(path: str, header: Sequence[str], rows: Iterable[Sequence]) -> str:
    """Comma-separated, header row, 17 significant digits in scientific notation."""
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_cell(v) for v in row) + "\n")
    return path


def write_array_csv(path: str, header: Sequence[str], arr: np.ndarray) -> str:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        np.savetxt(fh, np.asarray(arr, dtype=float), fmt=CSV_FORMAT, delimiter=",")
    return path


def records_csv(path: str, records: Sequence[dict]) -> str:
    """Flatten a list of flat-ish dicts; list values become ``key_0, key_1, ...``."""
    flat = []
    for rec in records:
        row = {}
        for k, v in rec.items():
            if isinstance(v, (list, tuple)):
                for i, w in enumerate(v):
                    row[f"{k}_{i}"] = w
            else:
                row[k] = v
        flat.append(row)
    header = sorted({k for row in flat for k in row})
    return write_csv(path, header, ([row.get(k) for k in header] for row in flat))


def write_field(out_dir: str, name: str, field) -> str:
    """Long-format CSV of a solver field plus a JSON manifest; returns the manifest path."""
    csv_name = f"{name}.csv"
    header = ["t"] + [f"x{i + 1}" for i in range(field.dim)] + ["value"]
    write_array_csv(os.path.join(out_dir, csv_name), header, field.to_rows())
    manifest = {"csv": csv_name, "grid": field.grid.to_dict(), "meta": field.meta}
    return write_json(os.path.join(out_dir, f"{name}.json"), manifest)


def sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir: str, files: Sequence[str], extra: dict = None) -> str:
    entries = sorted({os.path.relpath(f, out_dir) for f in files})
    body = {"files": [{"path": p, "sha256": sha256(os.path.join(out_dir, p))}
                      for p in entries]}
    if extra:
        body.update(extra)
    return write_json(os.path.join(out_dir, "manifest.json"), body)


# ---------------------------------------------------------------------------
# SVG
# ---------------------------------------------------------------------------

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _ticks(lo: float, hi: float) -> list:
    return list(range(int(math.floor(lo)), int(math.ceil(hi)) + 1))


def svg_loglog(path: str, series: Sequence[tuple], title: str = "", xlabel: str = "",
               ylabel: str = "", width: int = 480, height: int = 360) -> str:
    """Minimal log-log line plot; ``series`` is ``[(label, xs, ys), ...]``.

    Nonpositive points are dropped. No timestamps are written.
    """
    pts = []
    for label, xs, ys in series:
        xy = [(math.log10(x), math.log10(y)) for x, y in zip(xs, ys)
              if x > 0 and y > 0 and math.isfinite(x) and math.isfinite(y)]
        pts.append((label, xy))
    allx = [p[0] for _, xy in pts for p in xy] or [0.0, 1.0]
    ally = [p[1] for _, xy in pts for p in xy] or [0.0, 1.0]
    x0, x1 = math.floor(min(allx)), math.ceil(max(allx))
    y0, y1 = math.floor(min(ally)), math.ceil(max(ally))
    x1, y1 = max(x1, x0 + 1), max(y1, y0 + 1)
    ml, mr, mt, mb = 60, 20, 30, 45
    pw, ph = width - ml - mr, height - mt - mb

    def sx(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="11">',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<text x="{sx(t):.2f}" y="{mt + ph + 15}" text-anchor="middle">1e{t}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{ml - 5}" y="{sy(t) + 4:.2f}" text-anchor="end">1e{t}</text>')
    for i, (label, xy) in enumerate(pts):
        color = _COLORS[i % len(_COLORS)]
        if xy:
            poly = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in xy)
            out.append(f'<polyline points="{poly}" fill="none" stroke="{color}"/>')
            out.extend(f'<circle cx="{sx(a):.2f}" cy="{sy(b):.2f}" r="2.5" fill="{color}"/>'
                       for a, b in xy)
        out.append(f'<text x="{ml + 8}" y="{mt + 14 + 14 * i}" fill="{color}">{_esc(label)}</text>')
    out.append(f'<text x="{width / 2:.1f}" y="18" text-anchor="middle">{_esc(title)}</text>')
    out.append(f'<text x="{ml + pw / 2:.1f}" y="{height - 8}" text-anchor="middle">'
               f'{_esc(xlabel)}</text>')
    out.append(f'<text x="14" y="{mt + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {mt + ph / 2:.1f})">{_esc(ylabel)}</text>')
    out.append("</svg>")
    with open(path, "w") as fh:
        fh.write("\n".join(out) + "\n")
    return path


def _esc(s: str) -> str:
    return str(s).replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
