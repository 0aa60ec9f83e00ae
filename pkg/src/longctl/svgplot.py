"""Minimal stacked line plots written straight to SVG (no plotting backend)."""

from __future__ import annotations

import math
from xml.sax.saxutils import escape

import numpy as np

WIDTH = 720
PANEL_H = 200
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 30, 30

# (column, colour, dash) per panel, mirroring distance / speed / acceleration layout
PANELS = (
    ("distance [m]", (("h", "#d62728", ""), ("h_des", "#2ca02c", "6,4"))),
    ("speed [m/s]", (("v_H", "#d62728", ""), ("v_des", "#2ca02c", "6,4"), ("v_P", "#1f77b4", "2,3"))),
    ("acceleration [m/s²]", (("a_H", "#d62728", ""), ("u", "#1f77b4", "2,3"), ("a_des", "#2ca02c", "6,4"))),
)


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10 ** math.floor(math.log10(raw))
    step = min((s * mag for s in (1, 2, 5, 10) if s * mag >= raw), default=raw)
    start = math.ceil(lo / step) * step
    return [start + i * step for i in range(int((hi - start) / step + 1e-9) + 1)]


def _polylines(x, y, sx, sy):
    """Split at NaNs so absent signals leave gaps."""
    out, cur = [], []
    for xi, yi in zip(x, y):
        if math.isnan(yi):
            if len(cur) > 1:
                out.append(cur)
            cur = []
        else:
            cur.append(f"{sx(xi):.2f},{sy(yi):.2f}")
    if len(cur) > 1:
        out.append(cur)
    return out


def render_svg(traj, title: str = "") -> str:
    t = np.asarray(traj.t)
    t0, t1 = float(t[0]), float(t[-1]) if len(t) > 1 else float(t[0]) + 1.0
    plot_w = WIDTH - MARGIN_L - MARGIN_R
    height = len(PANELS) * (PANEL_H + MARGIN_T + MARGIN_B)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{height}" '
             f'font-family="sans-serif" font-size="11">',
             f'<rect width="{WIDTH}" height="{height}" fill="white"/>']
    if title:
        parts.append(f'<text x="{WIDTH / 2}" y="14" text-anchor="middle" font-size="13">{escape(title)}</text>')

    def sx(v):
        return MARGIN_L + (v - t0) / (t1 - t0) * plot_w

    for i, (label, series) in enumerate(PANELS):
        top = i * (PANEL_H + MARGIN_T + MARGIN_B) + MARGIN_T
        data = [np.asarray(getattr(traj, col), float) for col, _, _ in series]
        finite = np.concatenate([d[np.isfinite(d)] for d in data]) if data else np.array([])
        lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
        pad = 0.05 * (hi - lo) if hi > lo else 0.5
        lo, hi = lo - pad, hi + pad

        def sy(v, top=top, lo=lo, hi=hi):
            return top + PANEL_H - (v - lo) / (hi - lo) * PANEL_H

        parts.append(f'<rect x="{MARGIN_L}" y="{top}" width="{plot_w}" height="{PANEL_H}" '
                     f'fill="none" stroke="#444"/>')
        for yt in _nice_ticks(lo, hi):
            y = sy(yt)
            parts.append(f'<line x1="{MARGIN_L}" x2="{MARGIN_L + plot_w}" y1="{y:.2f}" y2="{y:.2f}" stroke="#eee"/>')
            parts.append(f'<text x="{MARGIN_L - 6}" y="{y + 4:.2f}" text-anchor="end">{yt:g}</text>')
        for xt in _nice_ticks(t0, t1, 10):
            x = sx(xt)
            parts.append(f'<text x="{x:.2f}" y="{top + PANEL_H + 14}" text-anchor="middle">{xt:g}</text>')
        parts.append(f'<text transform="translate(14,{top + PANEL_H / 2}) rotate(-90)" '
                     f'text-anchor="middle">{escape(label)}</text>')
        for j, ((col, colour, dash), y) in enumerate(zip(series, data)):
            dash_attr = f' stroke-dasharray="{dash}"' if dash else ""
            for pts in _polylines(t, y, sx, sy):
                parts.append(f'<polyline fill="none" stroke="{colour}" stroke-width="1.5"{dash_attr} '
                             f'points="{" ".join(pts)}"/>')
            lx = MARGIN_L + 10 + 80 * j
            parts.append(f'<line x1="{lx}" x2="{lx + 20}" y1="{top + 12}" y2="{top + 12}" '
                         f'stroke="{colour}" stroke-width="2"{dash_attr}/>')
            parts.append(f'<text x="{lx + 24}" y="{top + 16}">{escape(col)}</text>')
    parts.append(f'<text x="{MARGIN_L + plot_w / 2}" y="{height - 4}" text-anchor="middle">t [s]</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(traj, path, title: str = "") -> None:
    with open(path, "w") as fh:
        fh.write(render_svg(traj, title))
