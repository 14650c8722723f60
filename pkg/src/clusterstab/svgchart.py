"""Small deterministic SVG charts.

Hand-rolled on purpose: identical inputs must give byte-identical
files, with no library or font environment in the loop.  Only the chart
types the harness needs: multi-series line charts, overlaid histograms,
and grouped bar charts.
"""
from __future__ import annotations

import numpy as np

WIDTH = 640
HEIGHT = 420
MARGIN_L = 62
MARGIN_R = 20
MARGIN_T = 42
MARGIN_B = 52

PALETTE = ("#1f6fb2", "#d2553d", "#3d8c4f", "#8458a3", "#b08b29", "#50808e")


def _fmt(x: float) -> str:
    if x == int(x) and abs(x) < 1e15:
        return str(int(x))
    return "%.6g" % x


def _ticks(lo: float, hi: float, target: int = 5):
    if hi <= lo:
        hi = lo + 1.0
    span = hi - lo
    raw = span / target
    mag = 10.0 ** np.floor(np.log10(raw))
    for mult in (1.0, 2.0, 5.0, 10.0):
        if raw <= mult * mag:
            step = mult * mag
            break
    first = np.ceil(lo / step) * step
    ticks = []
    t = first
    while t <= hi + 1e-9 * span:
        ticks.append(0.0 if abs(t) < step * 1e-9 else float(t))
        t += step
    return ticks


class _Canvas:
    def __init__(self, title: str, x_label: str, y_label: str):
        self.parts = [
            '<svg xmlns="http://www.w3.org/2000/svg" width="%d" height="%d" '
            'viewBox="0 0 %d %d">' % (WIDTH, HEIGHT, WIDTH, HEIGHT),
            '<rect width="%d" height="%d" fill="white"/>' % (WIDTH, HEIGHT),
            '<text x="%d" y="24" font-family="sans-serif" font-size="15" '
            'text-anchor="middle">%s</text>' % (WIDTH // 2, title),
            '<text x="%d" y="%d" font-family="sans-serif" font-size="12" '
            'text-anchor="middle">%s</text>'
            % ((MARGIN_L + WIDTH - MARGIN_R) // 2, HEIGHT - 12, x_label),
            '<text x="16" y="%d" font-family="sans-serif" font-size="12" '
            'text-anchor="middle" transform="rotate(-90 16 %d)">%s</text>'
            % ((MARGIN_T + HEIGHT - MARGIN_B) // 2, (MARGIN_T + HEIGHT - MARGIN_B) // 2, y_label),
        ]

    def add(self, fragment: str):
        self.parts.append(fragment)

    def finish(self) -> str:
        return "\n".join(self.parts + ["</svg>"]) + "\n"


def _frame(canvas: _Canvas, x_lo, x_hi, y_lo, y_hi, x_ticks: bool = True):
    px_w = WIDTH - MARGIN_L - MARGIN_R
    px_h = HEIGHT - MARGIN_T - MARGIN_B

    def sx(x):
        return MARGIN_L + (x - x_lo) / (x_hi - x_lo) * px_w

    def sy(y):
        return HEIGHT - MARGIN_B - (y - y_lo) / (y_hi - y_lo) * px_h

    canvas.add(
        '<rect x="%d" y="%d" width="%d" height="%d" fill="none" stroke="#444"/>'
        % (MARGIN_L, MARGIN_T, px_w, px_h)
    )
    for t in _ticks(x_lo, x_hi) if x_ticks else ():
        if x_lo <= t <= x_hi:
            canvas.add(
                '<line x1="%s" y1="%d" x2="%s" y2="%d" stroke="#444"/>'
                % (_fmt(sx(t)), HEIGHT - MARGIN_B, _fmt(sx(t)), HEIGHT - MARGIN_B + 4)
            )
            canvas.add(
                '<text x="%s" y="%d" font-family="sans-serif" font-size="11" '
                'text-anchor="middle">%s</text>'
                % (_fmt(sx(t)), HEIGHT - MARGIN_B + 17, _fmt(t))
            )
    for t in _ticks(y_lo, y_hi):
        if y_lo <= t <= y_hi:
            canvas.add(
                '<line x1="%d" y1="%s" x2="%d" y2="%s" stroke="#444"/>'
                % (MARGIN_L - 4, _fmt(sy(t)), MARGIN_L, _fmt(sy(t)))
            )
            canvas.add(
                '<text x="%d" y="%s" font-family="sans-serif" font-size="11" '
                'text-anchor="end">%s</text>'
                % (MARGIN_L - 7, _fmt(sy(t) + 4), _fmt(t))
            )
    return sx, sy


def _legend(canvas: _Canvas, names):
    x = MARGIN_L + 10
    y = MARGIN_T + 14
    for i, name in enumerate(names):
        color = PALETTE[i % len(PALETTE)]
        canvas.add(
            '<rect x="%d" y="%d" width="14" height="4" fill="%s"/>' % (x, y - 4 + i * 16, color)
        )
        canvas.add(
            '<text x="%d" y="%d" font-family="sans-serif" font-size="11">%s</text>'
            % (x + 20, y + i * 16, name)
        )


def line_chart(
    x_values,
    series: dict,
    title: str = "",
    x_label: str = "",
    y_label: str = "",
    y_floor: float | None = 0.0,
) -> str:
    """Multi-series line chart.  ``series`` maps name -> values aligned
    with ``x_values``; None entries leave gaps."""
    xs = [float(x) for x in x_values]
    if not xs or not series:
        raise ValueError("need x values and at least one series")
    ys = [float(v) for vals in series.values() for v in vals if v is not None]
    if not ys:
        raise ValueError("all series are empty")
    y_lo = min(ys + ([y_floor] if y_floor is not None else []))
    y_hi = max(ys)
    if y_hi == y_lo:
        y_hi = y_lo + 1.0
    pad = 0.06 * (y_hi - y_lo)
    canvas = _Canvas(title, x_label, y_label)
    sx, sy = _frame(canvas, min(xs), max(xs), y_lo, y_hi + pad)
    for i, (name, vals) in enumerate(series.items()):
        color = PALETTE[i % len(PALETTE)]
        run = []
        segments = []
        for x, v in zip(xs, vals, strict=True):
            if v is None:
                if run:
                    segments.append(run)
                run = []
            else:
                run.append((x, float(v)))
        if run:
            segments.append(run)
        for seg in segments:
            pts = " ".join("%s,%s" % (_fmt(sx(x)), _fmt(sy(v))) for x, v in seg)
            canvas.add(
                '<polyline points="%s" fill="none" stroke="%s" stroke-width="1.8"/>'
                % (pts, color)
            )
            for x, v in seg:
                canvas.add(
                    '<circle cx="%s" cy="%s" r="2.6" fill="%s"/>'
                    % (_fmt(sx(x)), _fmt(sy(v)), color)
                )
    _legend(canvas, series.keys())
    return canvas.finish()


def histogram(
    values_by_label: dict,
    bins: int = 20,
    title: str = "",
    x_label: str = "",
    y_label: str = "count",
) -> str:
    """Overlaid histograms with shared bin edges."""
    allv = [float(v) for vals in values_by_label.values() for v in vals]
    if not allv:
        raise ValueError("no values to plot")
    lo, hi = min(allv), max(allv)
    if hi == lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, bins + 1)
    counts = {
        name: np.histogram(np.asarray(vals, dtype=float), bins=edges)[0]
        for name, vals in values_by_label.items()
    }
    top = max(int(c.max()) for c in counts.values()) or 1
    canvas = _Canvas(title, x_label, y_label)
    sx, sy = _frame(canvas, lo, hi, 0.0, top * 1.08)
    for i, (name, c) in enumerate(counts.items()):
        color = PALETTE[i % len(PALETTE)]
        for b in range(bins):
            if c[b] == 0:
                continue
            x0, x1 = sx(edges[b]), sx(edges[b + 1])
            y0, y1 = sy(0.0), sy(float(c[b]))
            canvas.add(
                '<rect x="%s" y="%s" width="%s" height="%s" fill="%s" '
                'fill-opacity="0.55" stroke="%s"/>'
                % (_fmt(x0), _fmt(y1), _fmt(x1 - x0), _fmt(y0 - y1), color, color)
            )
    _legend(canvas, counts.keys())
    return canvas.finish()


def bar_chart(
    categories,
    counts_by_series: dict,
    title: str = "",
    x_label: str = "",
    y_label: str = "count",
) -> str:
    """Grouped bars: one group per category, one bar per series."""
    cats = [str(c) for c in categories]
    if not cats or not counts_by_series:
        raise ValueError("need categories and at least one series")
    num_series = len(counts_by_series)
    top = max(float(v) for vals in counts_by_series.values() for v in vals) or 1.0
    canvas = _Canvas(title, x_label, y_label)
    sx, sy = _frame(canvas, 0.0, float(len(cats)), 0.0, top * 1.08, x_ticks=False)
    group_w = sx(1.0) - sx(0.0)
    bar_w = group_w * 0.8 / num_series
    for i, (name, vals) in enumerate(counts_by_series.items()):
        color = PALETTE[i % len(PALETTE)]
        for c, v in enumerate(vals):
            x0 = sx(c) + group_w * 0.1 + i * bar_w
            y1 = sy(float(v))
            canvas.add(
                '<rect x="%s" y="%s" width="%s" height="%s" fill="%s"/>'
                % (_fmt(x0), _fmt(y1), _fmt(bar_w), _fmt(sy(0.0) - y1), color)
            )
    for c, cat in enumerate(cats):
        canvas.add(
            '<text x="%s" y="%d" font-family="sans-serif" font-size="11" '
            'text-anchor="middle">%s</text>'
            % (_fmt(sx(c) + group_w / 2), HEIGHT - MARGIN_B + 17, cat)
        )
    _legend(canvas, counts_by_series.keys())
    return canvas.finish()
