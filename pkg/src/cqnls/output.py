"""Deterministic CSV/JSON writers with '#'-prefixed metadata headers."""

from __future__ import annotations

import csv
import hashlib
import io
import json

from . import __version__

SCHEMA_VERSION = 1


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, default=repr).encode()
    return hashlib.sha256(blob).hexdigest()[:16]


def header_lines(meta: dict) -> str:
    meta = {"version": __version__, **meta}
    return "".join(f"# {k}: {meta[k]}\n" for k in meta)


def fmt(x) -> str:
    """Round-trip float formatting (repr is shortest-exact and platform stable)."""
    if isinstance(x, str):
        return x
    if isinstance(x, (int,)) and not isinstance(x, bool):
        return str(x)
    return repr(float(x))


def write_csv(columns: list[str], rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    buf.write(header_lines(meta or {}))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(x) for x in row])
    return buf.getvalue()


def write_json(payload: dict) -> str:
    return json.dumps({"schema_version": SCHEMA_VERSION, **payload}, indent=2,
                      sort_keys=True) + "\n"


def svg_polyline(x, y, xlabel: str, ylabel: str, width: int = 640, height: int = 400) -> str:
    """Minimal line plot; deterministic output, no plotting dependency."""
    xs = [float(v) for v in x]
    ys = [float(v) for v in y]
    pad = 50
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    sx = (width - 2 * pad) / ((x1 - x0) or 1.0)
    sy = (height - 2 * pad) / ((y1 - y0) or 1.0)
    pts = " ".join(f"{pad + (a - x0) * sx:.2f},{height - pad - (b - y0) * sy:.2f}"
                   for a, b in zip(xs, ys))
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
        f'<rect width="100%" height="100%" fill="white"/>\n'
        f'<polyline fill="none" stroke="black" stroke-width="1.5" points="{pts}"/>\n'
        f'<text x="{width // 2}" y="{height - 10}" text-anchor="middle">{xlabel}'
        f' [{x0:.4g}, {x1:.4g}]</text>\n'
        f'<text x="12" y="{height // 2}" transform="rotate(-90 12 {height // 2})" '
        f'text-anchor="middle">{ylabel} [{y0:.4g}, {y1:.4g}]</text>\n'
        "</svg>\n")
