"""Minimal deterministic SVG line charts of diagnostics columns.

One ``<polyline>`` per plotted column.  Output bytes depend only on the CSV
contents and the plot spec.
"""

from __future__ import annotations

import configparser
import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

import numpy as np

from .persistence import digest_of, read_csv

__all__ = ["PlotSpec", "UnknownColumn", "parse_plot_spec", "plot_csv", "render_svg"]

WIDTH, HEIGHT = 640, 400
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 150, 30, 50
COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf")


class UnknownColumn(KeyError):
    pass


@dataclass(frozen=True)
class PlotSpec:
    columns: tuple
    x: str = "t"
    log_y: bool = False
    title: str = ""


def parse_plot_spec(text):
    """``"energy,dissipation"`` or ``"energy;log"`` style specs, or an INI file body.

    INI form::

        [plot]
        columns = energy, dissipation
        log_y = true
        x = t
        title = ...
    """
    text = text.strip()
    if text.startswith("["):
        cp = configparser.ConfigParser()
        cp.read_string(text)
        sec = cp["plot"]
        cols = tuple(c.strip() for c in sec.get("columns", "").split(",") if c.strip())
        return PlotSpec(cols, sec.get("x", "t"), sec.getboolean("log_y", False), sec.get("title", ""))
    body, _, flags = text.partition(";")
    cols = tuple(c.strip() for c in body.split(",") if c.strip())
    return PlotSpec(cols, log_y="log" in {f.strip() for f in flags.split(";")})


def _fmt(v):
    return f"{v:.2f}"


def _nice_ticks(lo, hi, count=5):
    if hi <= lo:
        return [lo]
    span = hi - lo
    raw = span / count
    mag = 10 ** math.floor(math.log10(raw))
    for m in (1, 2, 5, 10):
        step = m * mag
        if span / step <= count:
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-12 * span:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _label(v):
    return f"{v:.6g}"


def render_svg(data, spec, source_digest=""):
    for name in (spec.x, *spec.columns):
        if name not in data:
            raise UnknownColumn(name)
    if not spec.columns:
        raise UnknownColumn("<no columns given>")
    x = np.asarray(data[spec.x], dtype=float)
    series = [np.asarray(data[c], dtype=float) for c in spec.columns]

    if spec.log_y:
        vals = np.concatenate([s[np.isfinite(s) & (s > 0)] for s in series])
        if vals.size == 0:
            lo_e, hi_e = -1, 0
        else:
            lo_e = math.floor(math.log10(vals.min()))
            hi_e = math.ceil(math.log10(vals.max()))
            if hi_e == lo_e:
                hi_e += 1
        y_lo, y_hi = float(lo_e), float(hi_e)
        ticks = list(range(lo_e, hi_e + 1))
        tick_labels = [f"1e{e}" for e in ticks]
        transform = lambda v: np.where(v > 0, np.log10(np.where(v > 0, v, 1.0)), np.nan)
        tick_pos = [float(e) for e in ticks]
    else:
        vals = np.concatenate([s[np.isfinite(s)] for s in series])
        y_lo = float(vals.min()) if vals.size else 0.0
        y_hi = float(vals.max()) if vals.size else 1.0
        if y_hi == y_lo:
            pad = max(1.0, abs(y_lo)) * 0.5
            y_lo, y_hi = y_lo - pad, y_hi + pad
        tick_pos = _nice_ticks(y_lo, y_hi)
        tick_labels = [_label(v) for v in tick_pos]
        transform = lambda v: v

    fin = x[np.isfinite(x)]
    x_lo, x_hi = (float(fin.min()), float(fin.max())) if fin.size else (0.0, 1.0)
    if x_hi == x_lo:
        x_hi = x_lo + 1.0
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + (v - x_lo) / (x_hi - x_lo) * pw

    def py(v):
        return MARGIN_T + (y_hi - v) / (y_hi - y_lo) * ph

    out = [
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{WIDTH}" height="{HEIGHT}" '
        f'viewBox="0 0 {WIDTH} {HEIGHT}">',
        f"<metadata>{escape(source_digest)}</metadata>",
        f'<rect x="0" y="0" width="{WIDTH}" height="{HEIGHT}" fill="white"/>',
    ]
    if spec.title:
        out.append(f'<text x="{WIDTH / 2:.2f}" y="18" text-anchor="middle" font-size="14">{escape(spec.title)}</text>')
    x0, y0 = MARGIN_L, MARGIN_T + ph
    out.append(f'<line x1="{x0}" y1="{MARGIN_T}" x2="{x0}" y2="{y0}" stroke="black"/>')
    out.append(f'<line x1="{x0}" y1="{y0}" x2="{x0 + pw}" y2="{y0}" stroke="black"/>')
    for pos, lab in zip(tick_pos, tick_labels):
        yy = _fmt(py(pos))
        out.append(f'<line x1="{x0 - 5}" y1="{yy}" x2="{x0}" y2="{yy}" stroke="black"/>')
        out.append(
            f'<text class="ytick" x="{x0 - 8}" y="{yy}" text-anchor="end" '
            f'dominant-baseline="middle" font-size="11">{escape(lab)}</text>'
        )
    for v in _nice_ticks(x_lo, x_hi):
        xx = _fmt(px(v))
        out.append(f'<line x1="{xx}" y1="{y0}" x2="{xx}" y2="{y0 + 5}" stroke="black"/>')
        out.append(f'<text class="xtick" x="{xx}" y="{y0 + 18}" text-anchor="middle" font-size="11">{_label(v)}</text>')
    out.append(
        f'<text x="{x0 + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(spec.x)}</text>'
    )
    for i, (name, s) in enumerate(zip(spec.columns, series)):
        ty = transform(s)
        ok = np.isfinite(ty) & np.isfinite(x)
        pts = " ".join(f"{_fmt(px(a))},{_fmt(py(b))}" for a, b in zip(x[ok], ty[ok]))
        color = COLORS[i % len(COLORS)]
        out.append(
            f'<polyline data-column="{escape(name)}" fill="none" stroke="{color}" '
            f'stroke-width="1.5" points="{pts}"/>'
        )
        ly = MARGIN_T + 15 + 18 * i
        lx = WIDTH - MARGIN_R + 15
        out.append(f'<line x1="{lx}" y1="{ly}" x2="{lx + 20}" y2="{ly}" stroke="{color}" stroke-width="2"/>')
        out.append(f'<text x="{lx + 26}" y="{ly + 4}" font-size="12">{escape(name)}</text>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def plot_csv(csv_path, spec, out_path=None):
    """Render ``spec`` from a diagnostics CSV to an SVG file; returns its path."""
    csv_path = Path(csv_path)
    blob = csv_path.read_bytes()
    tag = f"csv-sha256={hashlib.sha256(blob).hexdigest()}"
    digest = digest_of(csv_path)
    if digest:
        tag = f"config-sha256={digest} {tag}"
    svg = render_svg(read_csv(csv_path), spec, tag)
    if out_path is None:
        suffix = "_".join(spec.columns) + ("_log" if spec.log_y else "")
        out_path = csv_path.with_name(f"{csv_path.stem}_{suffix}.svg")
    out_path = Path(out_path)
    out_path.write_text(svg)
    return out_path
