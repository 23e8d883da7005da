"""Minimal standalone SVG line charts (no plotting dependency, deterministic output)."""
from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
DASHES = ["", "6,3", "2,2", "8,3,2,3", "4,4", "1,3"]


def _fmt(v: float) -> str:
    return f"{v:.2f}"


@dataclass
class Series:
    label: str
    xs: list
    ys: list
    band_low: list | None = None
    band_high: list | None = None
    kind: str = "line"  # or "scatter"


@dataclass
class Panel:
    title: str
    xlabel: str
    ylabel: str
    series: list = field(default_factory=list)


def _ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi == lo:
        return [lo]
    return [lo + (hi - lo) * i / (n - 1) for i in range(n)]


def _panel_svg(panel: Panel, top: float, width: float, height: float) -> list[str]:
    left, right, pad_top, bottom = 70.0, 170.0, 30.0, 45.0
    plot_w = width - left - right
    plot_h = height - pad_top - bottom
    xs = [x for s in panel.series for x in s.xs]
    ys = [y for s in panel.series for y in s.ys]
    ys += [y for s in panel.series for y in (s.band_low or []) + (s.band_high or [])]
    x0, x1 = min(xs), max(xs)
    y0, y1 = min(ys), max(ys)
    if x1 == x0:
        x0, x1 = x0 - 1, x1 + 1
    if y1 == y0:
        y0, y1 = y0 - 0.5 * abs(y0 or 1), y1 + 0.5 * abs(y1 or 1)
    margin = 0.05 * (y1 - y0)
    y0, y1 = y0 - margin, y1 + margin

    def px(x):
        return left + (x - x0) / (x1 - x0) * plot_w

    def py(y):
        return top + pad_top + (1 - (y - y0) / (y1 - y0)) * plot_h

    out = ['<g class="panel">']
    out.append(f'<text x="{_fmt(left + plot_w / 2)}" y="{_fmt(top + 18)}" text-anchor="middle" '
               f'font-size="14">{escape(panel.title)}</text>')
    out.append(f'<rect x="{_fmt(left)}" y="{_fmt(top + pad_top)}" width="{_fmt(plot_w)}" '
               f'height="{_fmt(plot_h)}" fill="none" stroke="#333"/>')
    for t in _ticks(x0, x1):
        out.append(f'<text x="{_fmt(px(t))}" y="{_fmt(top + pad_top + plot_h + 16)}" '
                   f'text-anchor="middle" font-size="10">{t:.4g}</text>')
    for t in _ticks(y0, y1):
        out.append(f'<text x="{_fmt(left - 6)}" y="{_fmt(py(t) + 3)}" text-anchor="end" '
                   f'font-size="10">{t:.3g}</text>')
    out.append(f'<text x="{_fmt(left + plot_w / 2)}" y="{_fmt(top + height - 8)}" text-anchor="middle" '
               f'font-size="12">{escape(panel.xlabel)}</text>')
    out.append(f'<text x="14" y="{_fmt(top + pad_top + plot_h / 2)}" text-anchor="middle" font-size="12" '
               f'transform="rotate(-90 14 {_fmt(top + pad_top + plot_h / 2)})">{escape(panel.ylabel)}</text>')

    for i, s in enumerate(panel.series):
        color = PALETTE[i % len(PALETTE)]
        dash = DASHES[i % len(DASHES)]
        dash_attr = f' stroke-dasharray="{dash}"' if dash and s.kind != "scatter" else ""
        if s.band_low is not None and s.band_high is not None:
            upper = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.xs, s.band_high)]
            lower = [f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(reversed(s.xs), reversed(s.band_low))]
            out.append(f'<polygon class="band" points="{" ".join(upper + lower)}" fill="{color}" '
                       f'fill-opacity="0.15" stroke="none"/>')
        if s.kind == "scatter":
            for x, y in zip(s.xs, s.ys):
                out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="2" fill="{color}" '
                           f'fill-opacity="0.6"/>')
        else:
            pts = " ".join(f"{_fmt(px(x))},{_fmt(py(y))}" for x, y in zip(s.xs, s.ys))
            out.append(f'<polyline class="series" data-label="{escape(s.label)}" points="{pts}" fill="none" '
                       f'stroke="{color}" stroke-width="2"{dash_attr}/>')
            for x, y in zip(s.xs, s.ys):
                out.append(f'<circle cx="{_fmt(px(x))}" cy="{_fmt(py(y))}" r="3" fill="{color}"/>')
        ly = top + pad_top + 10 + 18 * i
        lx = left + plot_w + 15
        out.append(f'<g class="legend-entry"><line x1="{_fmt(lx)}" y1="{_fmt(ly)}" x2="{_fmt(lx + 24)}" '
                   f'y2="{_fmt(ly)}" stroke="{color}" stroke-width="2"{dash_attr}/>'
                   f'<text x="{_fmt(lx + 30)}" y="{_fmt(ly + 4)}" font-size="11">{escape(s.label)}</text></g>')
    out.append("</g>")
    return out


def render(panels: list[Panel], width: float = 720, panel_height: float = 340) -> str:
    height = panel_height * len(panels)
    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}" font-family="sans-serif">',
        f'<rect width="{width:g}" height="{height:g}" fill="white"/>',
    ]
    for i, panel in enumerate(panels):
        lines += _panel_svg(panel, i * panel_height, width, panel_height)
    lines.append("</svg>")
    return "\n".join(lines) + "\n"
