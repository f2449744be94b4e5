"""Minimal deterministic SVG plotting (no plotting dependencies).

Fixed 800x600 viewBox, labeled axes with ticks, elements emitted in a
deterministic order so identical inputs give byte-identical files.
"""

from __future__ import annotations

import math
from typing import Sequence

W, H = 800, 600
MARGIN = 70
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b",
           "#e377c2", "#7f7f7f", "#bcbd22", "#17becf")


def _fmt(x: float) -> str:
    return f"{x:.2f}"


def _nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / count
    mag = 10.0 ** math.floor(math.log10(raw))
    step = min(s * mag for s in (1, 2, 5, 10) if s * mag >= raw)
    start = math.ceil(lo / step) * step
    ticks = []
    t = start
    while t <= hi + 1e-9 * step:
        ticks.append(round(t, 10))
        t += step
    return ticks


class Frame:
    """Maps data coordinates into the fixed plot area."""

    def __init__(self, xlim: tuple[float, float], ylim: tuple[float, float]):
        self.xlim, self.ylim = xlim, ylim

    def x(self, v: float) -> float:
        lo, hi = self.xlim
        return MARGIN + (v - lo) / (hi - lo) * (W - 2 * MARGIN)

    def y(self, v: float) -> float:
        lo, hi = self.ylim
        return H - MARGIN - (v - lo) / (hi - lo) * (H - 2 * MARGIN)


def _pad(lo: float, hi: float) -> tuple[float, float]:
    if hi <= lo:
        lo, hi = lo - 0.5, lo + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def _document(body: list[str], title: str, xlabel: str, ylabel: str, frame: Frame) -> str:
    head = [
        f'<svg xmlns="http://www.w3.org/2000/svg" viewBox="0 0 {W} {H}" '
        f'font-family="monospace" font-size="12">',
        f'<rect width="{W}" height="{H}" fill="white"/>',
        f'<text x="{W / 2:.1f}" y="28" text-anchor="middle" font-size="16">{title}</text>',
    ]
    axes = [
        f'<line x1="{MARGIN}" y1="{H - MARGIN}" x2="{W - MARGIN}" y2="{H - MARGIN}" stroke="black"/>',
        f'<line x1="{MARGIN}" y1="{MARGIN}" x2="{MARGIN}" y2="{H - MARGIN}" stroke="black"/>',
        f'<text x="{W / 2:.1f}" y="{H - 18}" text-anchor="middle">{xlabel}</text>',
        f'<text x="20" y="{H / 2:.1f}" text-anchor="middle" '
        f'transform="rotate(-90 20 {H / 2:.1f})">{ylabel}</text>',
    ]
    for t in _nice_ticks(*frame.xlim):
        px = frame.x(t)
        axes.append(f'<line x1="{_fmt(px)}" y1="{H - MARGIN}" x2="{_fmt(px)}" y2="{H - MARGIN + 5}" stroke="black"/>')
        axes.append(f'<text x="{_fmt(px)}" y="{H - MARGIN + 20}" text-anchor="middle">{t:g}</text>')
    for t in _nice_ticks(*frame.ylim):
        py = frame.y(t)
        axes.append(f'<line x1="{MARGIN - 5}" y1="{_fmt(py)}" x2="{MARGIN}" y2="{_fmt(py)}" stroke="black"/>')
        axes.append(f'<text x="{MARGIN - 8}" y="{_fmt(py + 4)}" text-anchor="end">{t:g}</text>')
    return "\n".join(head + axes + body + ["</svg>"]) + "\n"


def scatter(x: Sequence[float], y: Sequence[float], title: str,
            xlabel: str, ylabel: str, diagonal: bool = False) -> str:
    frame = Frame(_pad(min(x), max(x)), _pad(min(y), max(y)))
    body = []
    if diagonal:
        lo = max(frame.xlim[0], frame.ylim[0])
        hi = min(frame.xlim[1], frame.ylim[1])
        if hi > lo:
            body.append(f'<line x1="{_fmt(frame.x(lo))}" y1="{_fmt(frame.y(lo))}" '
                        f'x2="{_fmt(frame.x(hi))}" y2="{_fmt(frame.y(hi))}" '
                        f'stroke="#aaaaaa" stroke-dasharray="4 3"/>')
    for xi, yi in zip(x, y):
        body.append(f'<circle cx="{_fmt(frame.x(xi))}" cy="{_fmt(frame.y(yi))}" r="3.5" '
                    f'fill="{PALETTE[0]}" fill-opacity="0.75"/>')
    return _document(body, title, xlabel, ylabel, frame)


def vector_map(coords, labels: Sequence[str], title: str) -> str:
    xs = [c[0] for c in coords] + [0.0]
    ys = [c[1] for c in coords] + [0.0]
    lim = max(max(abs(v) for v in xs), max(abs(v) for v in ys)) or 1.0
    frame = Frame(_pad(-lim, lim), _pad(-lim, lim))
    body = [f'<line x1="{_fmt(frame.x(frame.xlim[0]))}" y1="{_fmt(frame.y(0))}" '
            f'x2="{_fmt(frame.x(frame.xlim[1]))}" y2="{_fmt(frame.y(0))}" stroke="#dddddd"/>',
            f'<line x1="{_fmt(frame.x(0))}" y1="{_fmt(frame.y(frame.ylim[0]))}" '
            f'x2="{_fmt(frame.x(0))}" y2="{_fmt(frame.y(frame.ylim[1]))}" stroke="#dddddd"/>']
    for k, ((cx, cy), lab) in enumerate(zip(coords, labels)):
        color = PALETTE[k % len(PALETTE)]
        body.append(f'<line x1="{_fmt(frame.x(0))}" y1="{_fmt(frame.y(0))}" '
                    f'x2="{_fmt(frame.x(cx))}" y2="{_fmt(frame.y(cy))}" stroke="{color}"/>')
        body.append(f'<circle cx="{_fmt(frame.x(cx))}" cy="{_fmt(frame.y(cy))}" r="3" fill="{color}"/>')
        body.append(f'<text x="{_fmt(frame.x(cx) + 5)}" y="{_fmt(frame.y(cy) - 5)}" '
                    f'fill="{color}">{lab}</text>')
    return _document(body, title, "component 1", "component 2", frame)


def traces(series, names: Sequence[str], title: str, xlabel: str = "serial order") -> str:
    m = max(len(s) for s in series)
    lo = min(min(s) for s in series)
    hi = max(max(s) for s in series)
    frame = Frame(_pad(0, m - 1), _pad(lo, hi))
    body = []
    for k, (s, name) in enumerate(zip(series, names)):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{_fmt(frame.x(i))},{_fmt(frame.y(v))}" for i, v in enumerate(s))
        body.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.5"/>')
        body.append(f'<text x="{W - MARGIN + 6}" y="{MARGIN + 16 * k}" fill="{color}">{name}</text>')
    return _document(body, title, xlabel, "loading", frame)
