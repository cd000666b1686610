"""CSV tables and minimal SVG line charts."""

from __future__ import annotations

import csv
import math
from pathlib import Path
from xml.sax.saxutils import escape

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf")


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return "" if v is None else str(v)


def write_csv(path: str | Path, rows: list[dict], columns: list[str]) -> Path:
    """UTF-8 CSV with a header; values missing from a row are left empty."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_fmt(row.get(c)) for c in columns])
    return path


def read_csv(path: str | Path) -> list[dict]:
    with Path(path).open(encoding="utf-8", newline="") as fh:
        return list(csv.DictReader(fh))


def _ticks(lo: float, hi: float, k: int = 5) -> list[float]:
    if hi <= lo:
        return [lo]
    return [lo + (hi - lo) * i / (k - 1) for i in range(k)]


def write_svg(path: str | Path, rows: list[dict], x: str, y: str, series: str | None = None,
              title: str = "", width: int = 640, height: int = 400) -> Path | None:
    """Line chart of ``y`` against ``x`` with linear axes, one polyline per ``series`` value.

    Rows with a non-finite coordinate are skipped; nothing is written if no
    finite point remains.
    """
    groups: dict[str, list[tuple[float, float]]] = {}
    for row in rows:
        try:
            px, py = float(row[x]), float(row[y])
        except (KeyError, TypeError, ValueError):
            continue
        if math.isfinite(px) and math.isfinite(py):
            groups.setdefault(str(row.get(series, "")) if series else "", []).append((px, py))
    if not groups:
        return None
    xs = [p[0] for pts in groups.values() for p in pts]
    ys = [p[1] for pts in groups.values() for p in pts]
    x0, x1, y0, y1 = min(xs), max(xs), min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    left, right, top, bottom = 70, 20 + (120 if series else 0), 30, 50
    pw, ph = width - left - right, height - top - bottom

    def sx(v):
        return left + (v - x0) / (x1 - x0) * pw

    def sy(v):
        return top + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="11">',
           f'<rect width="{width}" height="{height}" fill="white"/>',
           f'<text x="{width / 2:.1f}" y="18" text-anchor="middle" font-size="13">{escape(title)}</text>',
           f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{sx(t):.2f}" y1="{top + ph}" x2="{sx(t):.2f}" y2="{top + ph + 4}" stroke="black"/>')
        out.append(f'<text x="{sx(t):.2f}" y="{top + ph + 16}" text-anchor="middle">{t:.3g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<line x1="{left - 4}" y1="{sy(t):.2f}" x2="{left}" y2="{sy(t):.2f}" stroke="black"/>')
        out.append(f'<text x="{left - 6}" y="{sy(t) + 4:.2f}" text-anchor="end">{t:.3g}</text>')
    out.append(f'<text x="{left + pw / 2:.1f}" y="{height - 12}" text-anchor="middle">{escape(x)}</text>')
    out.append(f'<text x="14" y="{top + ph / 2:.1f}" text-anchor="middle" '
               f'transform="rotate(-90 14 {top + ph / 2:.1f})">{escape(y)}</text>')
    for i, (name, pts) in enumerate(groups.items()):
        colour = PALETTE[i % len(PALETTE)]
        pts = sorted(pts)
        coords = " ".join(f"{sx(a):.2f},{sy(b):.2f}" for a, b in pts)
        out.append(f'<polyline points="{coords}" fill="none" stroke="{colour}" stroke-width="1.5"/>')
        if series:
            ly = top + 14 + 16 * i
            out.append(f'<line x1="{width - right + 10}" y1="{ly}" x2="{width - right + 30}" y2="{ly}" '
                       f'stroke="{colour}" stroke-width="2"/>')
            out.append(f'<text x="{width - right + 34}" y="{ly + 4}">{escape(name)}</text>')
    out.append("</svg>")
    path = Path(path)
    path.write_text("\n".join(out) + "\n", encoding="utf-8")
    return path
