"""Self-contained SVG charts.

Output is a pure function of the inputs: coordinates are printed with fixed
precision and no timestamps or random ids are embedded, so equal results
give byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence
from xml.sax.saxutils import escape

import numpy as np

from .trajectory import Trajectory

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f")
FONT = 'font-family="sans-serif"'


def _f(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if not (math.isfinite(lo) and math.isfinite(hi)):
        return []
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw), default=10 * mag)
    start = math.ceil(lo / step - 1e-9) * step
    out = []
    v = start
    while v <= hi + 1e-9 * step:
        out.append(round(v, 10))
        v += step
    return out


def _tick_label(v: float) -> str:
    return f"{v:g}" if abs(v) >= 1e-3 or v == 0 else f"{v:.1e}"


class _Doc:
    def __init__(self, width: int, height: int):
        self.w, self.h = width, height
        self.parts: list[str] = []

    def add(self, s: str) -> None:
        self.parts.append(s)

    def text(self, x: float, y: float, s: str, size: int = 12, anchor: str = "middle",
             rotate: float | None = None) -> None:
        tr = f' transform="rotate({_f(rotate)} {_f(x)} {_f(y)})"' if rotate is not None else ""
        self.add(f'<text x="{_f(x)}" y="{_f(y)}" font-size="{size}" text-anchor="{anchor}" '
                 f'{FONT}{tr}>{escape(s)}</text>')

    def render(self) -> str:
        head = (f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.w}" height="{self.h}" '
                f'viewBox="0 0 {self.w} {self.h}">')
        return "\n".join([head, f'<rect width="{self.w}" height="{self.h}" fill="white"/>',
                          *self.parts, "</svg>"]) + "\n"


def _axes(doc: _Doc, x0: float, y0: float, w: float, h: float, xr: tuple[float, float],
          yr: tuple[float, float], xlabel: str, ylabel: str, title: str):
    """Draw a frame with ticks; returns the data-to-pixel mapping."""
    (xa, xb), (ya, yb) = xr, yr
    if xb <= xa:
        xb = xa + 1.0
    if yb <= ya:
        ya, yb = ya - 0.5, yb + 0.5

    def sx(x):
        return x0 + (x - xa) / (xb - xa) * w

    def sy(y):
        return y0 + h - (y - ya) / (yb - ya) * h

    doc.add(f'<rect x="{_f(x0)}" y="{_f(y0)}" width="{_f(w)}" height="{_f(h)}" '
            f'fill="none" stroke="black"/>')
    for t in _nice_ticks(xa, xb):
        if xa <= t <= xb:
            doc.add(f'<line x1="{_f(sx(t))}" y1="{_f(y0 + h)}" x2="{_f(sx(t))}" y2="{_f(y0 + h + 4)}" stroke="black"/>')
            doc.text(sx(t), y0 + h + 16, _tick_label(t), 10)
    for t in _nice_ticks(ya, yb):
        if ya <= t <= yb:
            doc.add(f'<line x1="{_f(x0 - 4)}" y1="{_f(sy(t))}" x2="{_f(x0)}" y2="{_f(sy(t))}" stroke="black"/>')
            doc.text(x0 - 6, sy(t) + 3, _tick_label(t), 10, "end")
    doc.text(x0 + w / 2, y0 + h + 32, xlabel, 11)
    doc.text(x0 - 44, y0 + h / 2, ylabel, 11, rotate=-90)
    doc.text(x0 + w / 2, y0 - 8, title, 12)
    return sx, sy


def _polyline(xs, ys, sx, sy, color: str) -> str:
    pts = " ".join(f"{_f(sx(x))},{_f(sy(y))}" for x, y in zip(xs, ys)
                   if math.isfinite(x) and math.isfinite(y))
    return f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>'


def _legend(doc: _Doc, x: float, y: float, labels: Sequence[str]) -> None:
    for i, lab in enumerate(labels):
        c = PALETTE[i % len(PALETTE)]
        doc.add(f'<line x1="{_f(x)}" y1="{_f(y + 14 * i)}" x2="{_f(x + 16)}" y2="{_f(y + 14 * i)}" '
                f'stroke="{c}" stroke-width="2"/>')
        doc.text(x + 20, y + 14 * i + 4, lab, 10, "start")


def _range(arrays: Sequence[np.ndarray]) -> tuple[float, float]:
    vals = np.concatenate([a[np.isfinite(a)] for a in arrays]) if arrays else np.zeros(0)
    if vals.size == 0:
        return 0.0, 1.0
    return float(vals.min()), float(vals.max())


def trajectory_panels(runs: Sequence[tuple[str, Trajectory]], title: str = "") -> str:
    """Distance, speed, acceleration and throttle against time."""
    panels = (
        ("distance (m)", lambda t: t.x),
        ("speed (m/s)", lambda t: t.v),
        ("acceleration (m/s^2)", lambda t: t.a),
        ("throttle", lambda t: np.where(t.control_kind == 0, t.control_value, 0.0)),
    )
    pw, ph = 520, 150
    doc = _Doc(pw + 200, 40 + len(panels) * (ph + 60))
    if title:
        doc.text((pw + 200) / 2, 18, title, 14)
    tr = _range([t.t for _, t in runs])
    for k, (ylabel, get) in enumerate(panels):
        y0 = 40 + k * (ph + 60)
        sx, sy = _axes(doc, 70, y0, pw, ph, tr, _range([get(t) for _, t in runs]),
                       "time (s)", ylabel, "")
        for i, (_, t) in enumerate(runs):
            doc.add(_polyline(t.t, get(t), sx, sy, PALETTE[i % len(PALETTE)]))
    _legend(doc, pw + 90, 50, [lab for lab, _ in runs])
    return doc.render()


def bar_chart(categories: Sequence[str], groups: Sequence[tuple[str, Sequence[float]]],
              title: str = "", ylabel: str = "") -> str:
    """Grouped bars, one group per category."""
    pw, ph = max(400, 70 * len(categories)), 260
    doc = _Doc(pw + 200, ph + 120)
    vals = np.array([v for _, vs in groups for v in vs], dtype=float)
    lo = min(0.0, float(np.nanmin(vals))) if vals.size else 0.0
    hi = max(0.0, float(np.nanmax(vals))) if vals.size else 1.0
    sx, sy = _axes(doc, 70, 40, pw, ph, (0, len(categories)), (lo, hi), "", ylabel, title)
    nb = max(1, len(groups))
    bw = 0.8 / nb
    for gi, (_, vs) in enumerate(groups):
        c = PALETTE[gi % len(PALETTE)]
        for ci, v in enumerate(vs):
            if not math.isfinite(v):
                continue
            xa = sx(ci + 0.1 + gi * bw)
            xb = sx(ci + 0.1 + (gi + 1) * bw)
            ya, yb = sorted((sy(0.0), sy(v)))
            doc.add(f'<rect x="{_f(xa)}" y="{_f(ya)}" width="{_f(xb - xa)}" height="{_f(yb - ya)}" fill="{c}"/>')
    for ci, cat in enumerate(categories):
        doc.text(sx(ci + 0.5), 40 + ph + 30, cat, 9)
    _legend(doc, pw + 90, 50, [lab for lab, _ in groups])
    return doc.render()


def _color(v: float, lo: float, hi: float) -> str:
    if not math.isfinite(v):
        return "#cccccc"
    s = 0.0 if hi <= lo else (v - lo) / (hi - lo)
    s = min(max(s, 0.0), 1.0)
    # white to dark blue
    r = int(round(255 - s * (255 - 8)))
    g = int(round(255 - s * (255 - 48)))
    b = int(round(255 - s * (255 - 107)))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap(values: np.ndarray, row_labels: Sequence[str], col_labels: Sequence[str],
            title: str = "", row_title: str = "", col_title: str = "", fmt: str = "{:.3f}") -> str:
    """Annotated grid; rows run top to bottom."""
    values = np.asarray(values, dtype=float)
    nr, nc = values.shape
    cw, chh = 64, 30
    doc = _Doc(110 + nc * cw + 20, 70 + nr * chh + 50)
    finite = values[np.isfinite(values)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    x0, y0 = 100, 50
    doc.text(x0 + nc * cw / 2, 20, title, 13)
    for i in range(nr):
        for j in range(nc):
            v = values[i, j]
            c = _color(v, lo, hi)
            doc.add(f'<rect x="{_f(x0 + j * cw)}" y="{_f(y0 + i * chh)}" width="{cw}" height="{chh}" '
                    f'fill="{c}" stroke="white"/>')
            s = (hi > lo) and (v - lo) / (hi - lo) > 0.55
            txt = "n/a" if not math.isfinite(v) else fmt.format(v)
            doc.add(f'<text x="{_f(x0 + j * cw + cw / 2)}" y="{_f(y0 + i * chh + chh / 2 + 4)}" '
                    f'font-size="10" text-anchor="middle" {FONT} fill="{"white" if s else "black"}">'
                    f'{escape(txt)}</text>')
    for i, lab in enumerate(row_labels):
        doc.text(x0 - 6, y0 + i * chh + chh / 2 + 4, lab, 10, "end")
    for j, lab in enumerate(col_labels):
        doc.text(x0 + j * cw + cw / 2, y0 + nr * chh + 14, lab, 10)
    doc.text(x0 + nc * cw / 2, y0 + nr * chh + 34, col_title, 11)
    doc.text(24, y0 + nr * chh / 2, row_title, 11, rotate=-90)
    return doc.render()
