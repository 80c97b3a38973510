"""Minimal SVG emission for regret curves, quantile bands, and coverage bars.

Hand-rolled on a fixed 800x500 canvas so runs have no plotting dependency
and produce byte-stable output.
"""

from __future__ import annotations

import math

import numpy as np

WIDTH, HEIGHT = 800, 500
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 70, 20, 40, 50

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _nice_ticks(lo: float, hi: float, n: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + 1.0
    raw = (hi - lo) / n
    mag = 10.0 ** math.floor(math.log10(raw))
    for mult in (1.0, 2.0, 2.5, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    start = math.ceil(lo / step) * step
    ticks = []
    v = start
    while v <= hi + 1e-9 * step:
        ticks.append(0.0 if abs(v) < 1e-12 * step else v)
        v += step
    return ticks


def _fmt(v: float) -> str:
    return f"{v:.6g}"


def _log_ticks(lo_exp: float, hi_exp: float) -> list[float]:
    """1-2-5 ticks per decade over a log10 range, at least two ticks."""
    ticks = []
    for k in range(math.floor(lo_exp) - 1, math.floor(hi_exp) + 2):
        for mult in (1.0, 2.0, 5.0):
            v = mult * 10.0 ** k
            if lo_exp - 1e-9 <= math.log10(v) <= hi_exp + 1e-9:
                ticks.append(v)
    return ticks


class _Canvas:
    def __init__(self, xlim, ylim, loglog=False):
        self.loglog = loglog
        self.xlo, self.xhi = xlim
        self.ylo, self.yhi = ylim
        if loglog:
            self.xlo, self.xhi = math.log10(self.xlo), math.log10(self.xhi)
            self.ylo, self.yhi = math.log10(max(self.ylo, 1e-12)), math.log10(self.yhi)
        if self.xhi <= self.xlo:
            self.xhi = self.xlo + 1.0
        if self.yhi <= self.ylo:
            self.yhi = self.ylo + 1.0
        self.parts: list[str] = []

    def px(self, x: float) -> float:
        if self.loglog:
            x = math.log10(max(x, 1e-300))
        f = (x - self.xlo) / (self.xhi - self.xlo)
        return MARGIN_L + f * (WIDTH - MARGIN_L - MARGIN_R)

    def py(self, y: float) -> float:
        if self.loglog:
            y = math.log10(max(y, 1e-300))
        f = (y - self.ylo) / (self.yhi - self.ylo)
        return HEIGHT - MARGIN_B - f * (HEIGHT - MARGIN_T - MARGIN_B)


def _axes(cv: _Canvas, title: str, xlabel: str, ylabel: str) -> None:
    cv.parts.append(
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{WIDTH - MARGIN_L - MARGIN_R}" '
        f'height="{HEIGHT - MARGIN_T - MARGIN_B}" fill="none" stroke="#333"/>')
    if cv.loglog:
        xt = _log_ticks(cv.xlo, cv.xhi)
        yt = _log_ticks(cv.ylo, cv.yhi)
    else:
        xt = _nice_ticks(cv.xlo, cv.xhi)
        yt = _nice_ticks(cv.ylo, cv.yhi)
    for v in xt:
        x = cv.px(v)
        cv.parts.append(f'<line x1="{x:.2f}" y1="{HEIGHT - MARGIN_B}" x2="{x:.2f}" '
                        f'y2="{HEIGHT - MARGIN_B + 5}" stroke="#333"/>')
        cv.parts.append(f'<text x="{x:.2f}" y="{HEIGHT - MARGIN_B + 18}" '
                        f'text-anchor="middle" font-size="11">{_fmt(v)}</text>')
    for v in yt:
        y = cv.py(v)
        cv.parts.append(f'<line x1="{MARGIN_L - 5}" y1="{y:.2f}" x2="{MARGIN_L}" '
                        f'y2="{y:.2f}" stroke="#333"/>')
        cv.parts.append(f'<text x="{MARGIN_L - 8}" y="{y + 4:.2f}" '
                        f'text-anchor="end" font-size="11">{_fmt(v)}</text>')
    cv.parts.append(f'<text x="{WIDTH / 2}" y="22" text-anchor="middle" '
                    f'font-size="14">{title}</text>')
    cv.parts.append(f'<text x="{WIDTH / 2}" y="{HEIGHT - 12}" text-anchor="middle" '
                    f'font-size="12">{xlabel}</text>')
    cv.parts.append(f'<text x="16" y="{HEIGHT / 2}" text-anchor="middle" '
                    f'font-size="12" transform="rotate(-90 16 {HEIGHT / 2})">{ylabel}</text>')


def _polyline(cv: _Canvas, xs, ys, color: str, width: float = 1.5) -> None:
    pts = " ".join(f"{cv.px(float(x)):.2f},{cv.py(float(y)):.2f}"
                   for x, y in zip(xs, ys))
    cv.parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" '
                    f'stroke-width="{width}"/>')


def _band(cv: _Canvas, xs, lo, hi, color: str) -> None:
    fwd = [f"{cv.px(float(x)):.2f},{cv.py(float(y)):.2f}" for x, y in zip(xs, hi)]
    bwd = [f"{cv.px(float(x)):.2f},{cv.py(float(y)):.2f}"
           for x, y in zip(reversed(list(xs)), reversed(list(lo)))]
    cv.parts.append(f'<polygon points="{" ".join(fwd + bwd)}" fill="{color}" '
                    f'opacity="0.2" stroke="none"/>')


def _wrap(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" '
            f'height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">\n'
            f'<rect width="{WIDTH}" height="{HEIGHT}" fill="white"/>\n'
            f"{body}\n</svg>\n")


def line_plot(path, xs, series, bands=None, title="", xlabel="", ylabel="",
              loglog=False) -> None:
    """Write a line plot; series is [(label, ys)], bands is [(lo, hi)]."""
    xs = np.asarray(xs, dtype=np.float64)
    ys_all = [np.asarray(ys, dtype=np.float64) for _, ys in series]
    stack = ys_all + [np.asarray(b, dtype=np.float64) for pair in (bands or [])
                      for b in pair]
    lo = min(float(np.nanmin(a)) for a in stack)
    hi = max(float(np.nanmax(a)) for a in stack)
    if loglog:
        lo = max(lo, 1e-12)
    cv = _Canvas((float(xs.min()), float(xs.max())), (min(lo, 0.0) if not loglog else lo, hi),
                 loglog=loglog)
    _axes(cv, title, xlabel, ylabel)
    for i, pair in enumerate(bands or []):
        _band(cv, xs, pair[0], pair[1], _COLORS[i % len(_COLORS)])
    for i, (label, ys) in enumerate(series):
        color = _COLORS[i % len(_COLORS)]
        _polyline(cv, xs, ys, color)
        cv.parts.append(f'<text x="{WIDTH - MARGIN_R - 8}" '
                        f'y="{MARGIN_T + 16 + 14 * i}" text-anchor="end" '
                        f'font-size="11" fill="{color}">{label}</text>')
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_wrap(cv.parts))


def bar_plot(path, labels, values, title="", ylabel="", ylim=None) -> None:
    """Write a bar chart with one bar per label."""
    values = [float(v) for v in values]
    hi = ylim[1] if ylim else max(values + [1.0])
    lo = ylim[0] if ylim else 0.0
    cv = _Canvas((0.0, float(len(values))), (lo, hi))
    _axes(cv, title, "", ylabel)
    for i, (lab, v) in enumerate(zip(labels, values)):
        x0 = cv.px(i + 0.15)
        x1 = cv.px(i + 0.85)
        y0 = cv.py(lo)
        y1 = cv.py(v)
        cv.parts.append(f'<rect x="{x0:.2f}" y="{y1:.2f}" width="{x1 - x0:.2f}" '
                        f'height="{y0 - y1:.2f}" fill="{_COLORS[0]}" opacity="0.8"/>')
        cv.parts.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{HEIGHT - MARGIN_B + 18}" '
                        f'text-anchor="middle" font-size="11">{lab}</text>')
        cv.parts.append(f'<text x="{(x0 + x1) / 2:.2f}" y="{y1 - 4:.2f}" '
                        f'text-anchor="middle" font-size="10">{_fmt(v)}</text>')
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(_wrap(cv.parts))
