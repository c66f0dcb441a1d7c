"""Minimal line/scatter plots written directly as SVG text."""

from __future__ import annotations

from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"]


def _ticks(lo: float, hi: float, n: int = 5) -> np.ndarray:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** np.floor(np.log10(raw))
    step = min((m * mag for m in (1, 2, 5, 10) if m * mag >= raw), default=raw)
    start = np.ceil(lo / step) * step
    return np.arange(start, hi + 0.5 * step, step)


def line_plot(path: str | Path, series: list[dict], xlabel: str, ylabel: str, title: str = "",
              width: int = 640, height: int = 440, logy: bool = False) -> Path:
    """``series`` items: {"x": [...], "y": [...], "label": str, "style": "line"|"points"|"dashed"}."""
    ml, mr, mt, mb = 70, 150, 40, 55
    pw, ph = width - ml - mr, height - mt - mb
    xs = np.concatenate([np.asarray(s["x"], float) for s in series]) if series else np.zeros(1)
    ys = np.concatenate([np.asarray(s["y"], float) for s in series]) if series else np.zeros(1)
    if logy:
        ys = np.log10(np.clip(ys, 1e-300, None))
    ok = np.isfinite(xs) & np.isfinite(ys)
    xs, ys = (xs[ok], ys[ok]) if ok.any() else (np.zeros(1), np.zeros(1))
    x0, x1 = float(xs.min()), float(xs.max())
    y0, y1 = float(ys.min()), float(ys.max())
    if x1 == x0:
        x0, x1 = x0 - 0.5, x1 + 0.5
    if y1 == y0:
        y0, y1 = y0 - 0.5, y1 + 0.5
    pad = 0.05 * (y1 - y0)
    y0, y1 = y0 - pad, y1 + pad

    def X(v):
        return ml + (v - x0) / (x1 - x0) * pw

    def Y(v):
        return mt + ph - (v - y0) / (y1 - y0) * ph

    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
           f'font-family="sans-serif" font-size="12">',
           f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
           f'<rect x="{ml}" y="{mt}" width="{pw}" height="{ph}" fill="none" stroke="black"/>']
    for t in _ticks(x0, x1):
        out.append(f'<line x1="{X(t):.1f}" y1="{mt + ph}" x2="{X(t):.1f}" y2="{mt + ph + 5}" stroke="black"/>')
        out.append(f'<text x="{X(t):.1f}" y="{mt + ph + 18}" text-anchor="middle">{t:g}</text>')
    for t in _ticks(y0, y1):
        lab = f"1e{t:g}" if logy else f"{t:g}"
        out.append(f'<line x1="{ml - 5}" y1="{Y(t):.1f}" x2="{ml}" y2="{Y(t):.1f}" stroke="black"/>')
        out.append(f'<text x="{ml - 8}" y="{Y(t) + 4:.1f}" text-anchor="end">{lab}</text>')
    out.append(f'<text x="{ml + pw / 2}" y="{height - 12}" text-anchor="middle">{escape(xlabel)}</text>')
    out.append(f'<text x="16" y="{mt + ph / 2}" text-anchor="middle" '
               f'transform="rotate(-90 16 {mt + ph / 2})">{escape(ylabel)}</text>')
    if title:
        out.append(f'<text x="{ml + pw / 2}" y="22" text-anchor="middle" font-size="14">{escape(title)}</text>')
    for i, s in enumerate(series):
        color = s.get("color", PALETTE[i % len(PALETTE)])
        x = np.asarray(s["x"], float)
        y = np.asarray(s["y"], float)
        if logy:
            y = np.log10(np.clip(y, 1e-300, None))
        good = np.isfinite(x) & np.isfinite(y)
        x, y = x[good], y[good]
        style = s.get("style", "line")
        if style in ("line", "dashed") and len(x) > 1:
            pts = " ".join(f"{X(a):.1f},{Y(b):.1f}" for a, b in zip(x, y))
            dash = ' stroke-dasharray="6,4"' if style == "dashed" else ""
            out.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"{dash}/>')
        if style == "points" or len(x) == 1:
            out += [f'<circle cx="{X(a):.1f}" cy="{Y(b):.1f}" r="3" fill="{color}"/>' for a, b in zip(x, y)]
        ly = mt + 14 + 18 * i
        out.append(f'<line x1="{ml + pw + 10}" y1="{ly}" x2="{ml + pw + 30}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{ml + pw + 35}" y="{ly + 4}">{escape(str(s.get("label", "")))}</text>')
    out.append("</svg>")
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("\n".join(out) + "\n")
    return path


def plot_csv(csv_path: str | Path, x: str | None = None, y: str | None = None,
             group: str | None = None, out: str | Path | None = None) -> Path:
    """Quick plot of two numeric columns of a result CSV, one curve per ``group`` value."""
    from .io import read_csv

    cols, rows = read_csv(csv_path)
    if not rows:
        raise ValueError(f"{csv_path} has no rows")

    def numeric(c):
        try:
            [float(r[c]) for r in rows if r[c] != ""]
            return True
        except ValueError:
            return False

    num = [c for c in cols if numeric(c)]
    x = x or ("h_I" if "h_I" in num else num[0])
    y = y or next(c for c in num if c not in (x, "L", "sample", "n"))
    if group is None and "L" in cols and x != "L":
        group = "L"
    groups: dict[str, list] = {}
    for r in rows:
        if r.get(x, "") == "" or r.get(y, "") == "":
            continue
        groups.setdefault(r[group] if group else "", []).append((float(r[x]), float(r[y])))
    series = []
    for g, pts in groups.items():
        pts.sort()
        series.append({"x": [p[0] for p in pts], "y": [p[1] for p in pts],
                       "label": f"{group}={g}" if group else y, "style": "line"})
    out = Path(out) if out else Path(csv_path).with_suffix(".svg")
    return line_plot(out, series, x, y, Path(csv_path).stem)
