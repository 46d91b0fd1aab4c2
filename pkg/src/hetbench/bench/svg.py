"""Just enough SVG to draw line charts with bands, coloured markers and bars."""
from __future__ import annotations

import math
from html import escape

PALETTE = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]


def fmt(v: float) -> str:
    return f"{v:.2f}".rstrip("0").rstrip(".")


def heat(value: float, lo: float = 0.0, hi: float = 100.0) -> str:
    """Blue (lo) to red (hi)."""
    t = 0.0 if hi <= lo else min(1.0, max(0.0, (value - lo) / (hi - lo)))
    r, g, b = int(40 + 215 * t), int(90 + 40 * (1 - abs(2 * t - 1))), int(230 - 200 * t)
    return f"#{r:02x}{g:02x}{b:02x}"


def nice_ticks(lo: float, hi: float, count: int = 5) -> list[float]:
    if hi <= lo:
        hi = lo + (abs(lo) or 1.0)
    raw = (hi - lo) / count
    mag = 10 ** math.floor(math.log10(raw))
    step = next(m * mag for m in (1, 2, 2.5, 5, 10) if m * mag >= raw)
    start = math.floor(lo / step) * step
    ticks = []
    v = start
    while v <= hi + step * 1e-9:
        ticks.append(round(v, 12))
        v += step
    return ticks


def tick_label(v: float) -> str:
    if v == 0:
        return "0"
    if abs(v) >= 1e4 or abs(v) < 1e-2:
        return f"{v:.0e}".replace("e+0", "e").replace("e+", "e").replace("e-0", "e-")
    return f"{v:g}"


class Chart:
    """A single-panel chart.  Add series, then call :meth:`render`."""

    def __init__(self, title: str, xlabel: str, ylabel: str, log_x: bool = False,
                 width: int = 720, height: int = 440, y2label: str | None = None):
        self.title, self.xlabel, self.ylabel, self.y2label = title, xlabel, ylabel, y2label
        self.log_x = log_x
        self.width, self.height = width, height
        self.margin = (70, 70 if y2label else 30, 50, 60)  # left, right, top, bottom
        self.items: list[tuple] = []
        self.legend: list[tuple[str, str]] = []

    def line(self, xs, ys, color, label=None, dashed=False):
        self.items.append(("line", list(xs), list(ys), color, dashed))
        if label:
            self.legend.append((label, color))

    def band(self, xs, lo, hi, color):
        self.items.append(("band", list(xs), list(lo), list(hi), color))

    def points(self, xs, ys, colors, label=None):
        self.items.append(("points", list(xs), list(ys), list(colors)))
        if label:
            self.legend.append((label, colors[0] if colors else "#000"))

    def bars(self, xs, fractions, color, label=None):
        """Bars on a secondary 0-100 % axis."""
        self.items.append(("bars", list(xs), list(fractions), color))
        if label:
            self.legend.append((label, color))

    # -- layout --------------------------------------------------------
    def _bounds(self):
        xs, ys = [], []
        for it in self.items:
            if it[0] == "line" or it[0] == "points":
                xs += it[1]
                ys += it[2]
            elif it[0] == "band":
                xs += it[1]
                ys += it[2] + it[3]
            elif it[0] == "bars":
                xs += it[1]
        xs = [x for x in xs if math.isfinite(x) and (x > 0 or not self.log_x)]
        ys = [y for y in ys if math.isfinite(y)]
        if not xs:
            xs = [1.0]
        if not ys:
            ys = [0.0, 1.0]
        x0, x1 = min(xs), max(xs)
        if self.log_x:
            x0, x1 = math.log10(x0), math.log10(x1)
        if x1 == x0:
            x0, x1 = x0 - 0.5, x1 + 0.5
        y0, y1 = min(0.0, min(ys)), max(ys)
        if y1 == y0:
            y1 = y0 + 1.0
        y1 += 0.05 * (y1 - y0)
        return x0, x1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        left, right, top, bottom = self.margin
        pw, ph = self.width - left - right, self.height - top - bottom

        def X(x):
            v = math.log10(x) if self.log_x else x
            return left + (v - x0) / (x1 - x0) * pw

        def Y(y):
            return top + ph - (y - y0) / (y1 - y0) * ph

        def Y2(frac):
            return top + ph - frac * ph

        out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
               f'viewBox="0 0 {self.width} {self.height}" font-family="sans-serif" font-size="12">',
               f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
               f'<text x="{self.width / 2}" y="22" text-anchor="middle" font-size="15">{escape(self.title)}</text>']

        # axes and ticks
        out.append(f'<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#333"/>')
        for t in nice_ticks(y0, y1):
            if y0 <= t <= y1:
                y = Y(t)
                out.append(f'<line x1="{left}" y1="{fmt(y)}" x2="{left + pw}" y2="{fmt(y)}" stroke="#eee"/>')
                out.append(f'<text x="{left - 6}" y="{fmt(y + 4)}" text-anchor="end">{tick_label(t)}</text>')
        if self.log_x:
            xticks = [10 ** e for e in range(math.floor(x0), math.ceil(x1) + 1)]
            xticks = [t for t in xticks if x0 - 1e-9 <= math.log10(t) <= x1 + 1e-9]
        else:
            xticks = [t for t in nice_ticks(x0, x1) if x0 <= t <= x1]
        for t in xticks:
            x = X(t)
            out.append(f'<line x1="{fmt(x)}" y1="{top}" x2="{fmt(x)}" y2="{top + ph}" stroke="#eee"/>')
            out.append(f'<text x="{fmt(x)}" y="{top + ph + 16}" text-anchor="middle">{tick_label(t)}</text>')
        out.append(f'<text x="{left + pw / 2}" y="{self.height - 14}" text-anchor="middle">{escape(self.xlabel)}</text>')
        out.append(f'<text transform="translate(16,{top + ph / 2}) rotate(-90)" text-anchor="middle">'
                   f'{escape(self.ylabel)}</text>')
        if self.y2label:
            for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
                out.append(f'<text x="{left + pw + 6}" y="{fmt(Y2(frac) + 4)}">{int(frac * 100)}%</text>')
            out.append(f'<text transform="translate({self.width - 14},{top + ph / 2}) rotate(90)" '
                       f'text-anchor="middle">{escape(self.y2label)}</text>')

        for it in self.items:
            kind = it[0]
            if kind == "bars":
                _, xs, fr, color = it
                bw = max(4.0, pw / max(1, len(xs)) * 0.35)
                for x, f in zip(xs, fr):
                    if not math.isfinite(f):
                        continue
                    h = f * ph
                    out.append(f'<rect x="{fmt(X(x) - bw / 2)}" y="{fmt(Y2(f))}" width="{fmt(bw)}" '
                               f'height="{fmt(h)}" fill="{color}" fill-opacity="0.35"/>')
            elif kind == "band":
                _, xs, lo, hi, color = it
                pts = [(X(x), Y(v)) for x, v in zip(xs, hi)] + [(X(x), Y(v)) for x, v in zip(xs[::-1], lo[::-1])]
                path = " ".join(f"{fmt(a)},{fmt(b)}" for a, b in pts)
                out.append(f'<polygon points="{path}" fill="{color}" fill-opacity="0.18" stroke="none"/>')
            elif kind == "line":
                _, xs, ys, color, dashed = it
                path = " ".join(f"{fmt(X(x))},{fmt(Y(y))}" for x, y in zip(xs, ys) if math.isfinite(y))
                dash = ' stroke-dasharray="6,4"' if dashed else ""
                out.append(f'<polyline points="{path}" fill="none" stroke="{color}" stroke-width="2"{dash}/>')
                for x, y in zip(xs, ys):
                    if math.isfinite(y):
                        out.append(f'<circle cx="{fmt(X(x))}" cy="{fmt(Y(y))}" r="3" fill="{color}"/>')
            elif kind == "points":
                _, xs, ys, colors = it
                for x, y, c in zip(xs, ys, colors):
                    out.append(f'<circle cx="{fmt(X(x))}" cy="{fmt(Y(y))}" r="5" fill="{c}" stroke="#333"/>')

        for i, (label, color) in enumerate(self.legend):
            y = top + 14 + 16 * i
            out.append(f'<rect x="{left + 10}" y="{y - 9}" width="12" height="10" fill="{color}"/>')
            out.append(f'<text x="{left + 28}" y="{y}">{escape(label)}</text>')
        out.append("</svg>")
        return "\n".join(out) + "\n"
