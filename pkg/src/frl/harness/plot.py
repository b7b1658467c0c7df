"""Minimal line plots written directly as SVG."""

import math
from dataclasses import dataclass
from xml.sax.saxutils import escape

LOG_FLOOR = 1e-16
WIDTH, HEIGHT = 640, 420
MARGIN_L, MARGIN_R, MARGIN_T, MARGIN_B = 80, 180, 30, 50
PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2")


@dataclass(frozen=True)
class Series:
    label: str
    x: tuple
    y: tuple


@dataclass(frozen=True)
class Axes:
    x_label: str = "step"
    y_label: str = ""
    log_y: bool = False
    title: str = ""


def _fmt(v):
    return format(v, ".6g")


def _prepare(series, axes):
    out = []
    for s in series:
        x = [float(v) for v in s.x]
        y = [float(v) for v in s.y]
        if len(x) != len(y):
            raise ValueError(f"series {s.label!r}: x has {len(x)} points, y has {len(y)}")
        clipped = False
        if axes.log_y:
            for i, v in enumerate(y):
                if not v > LOG_FLOOR:
                    clipped = clipped or v <= 0 or not math.isfinite(v)
                    y[i] = LOG_FLOOR
            y = [math.log10(v) for v in y]
        out.append((s.label + (" (clipped at 1e-16)" if clipped else ""), x, y))
    return out


def _range(values):
    lo, hi = min(values), max(values)
    if hi == lo:
        pad = abs(lo) * 0.1 or 1.0
        return lo - pad, hi + pad
    return lo, hi


def render_svg(series, axes=Axes()):
    series = [s if isinstance(s, Series) else Series(*s) for s in series]
    if not series or all(len(s.x) == 0 for s in series):
        raise ValueError("nothing to plot: series set is empty")
    prepared = _prepare(series, axes)
    xs = [v for _, x, _ in prepared for v in x]
    ys = [v for _, _, y in prepared for v in y]
    x0, x1 = _range(xs)
    y0, y1 = _range(ys)
    pw = WIDTH - MARGIN_L - MARGIN_R
    ph = HEIGHT - MARGIN_T - MARGIN_B

    def px(v):
        return MARGIN_L + (v - x0) / (x1 - x0) * pw

    def py(v):
        return MARGIN_T + (y1 - v) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{WIDTH}" height="{HEIGHT}" viewBox="0 0 {WIDTH} {HEIGHT}">',
        '<rect width="100%" height="100%" fill="white"/>',
        f'<rect x="{MARGIN_L}" y="{MARGIN_T}" width="{pw}" height="{ph}" fill="none" stroke="black"/>',
    ]
    if axes.title:
        parts.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="20" text-anchor="middle" font-size="14">{escape(axes.title)}</text>')
    for i in range(5):
        fx = x0 + (x1 - x0) * i / 4
        fy = y0 + (y1 - y0) * i / 4
        ylab = f"1e{fy:.3g}" if axes.log_y else _fmt(fy)
        parts.append(f'<text x="{px(fx):.2f}" y="{MARGIN_T + ph + 16}" text-anchor="middle" font-size="10">{_fmt(fx)}</text>')
        parts.append(f'<text x="{MARGIN_L - 6}" y="{py(fy) + 3:.2f}" text-anchor="end" font-size="10">{ylab}</text>')
    y_title = axes.y_label + (" (log10)" if axes.log_y else "")
    parts.append(f'<text x="{MARGIN_L + pw / 2:.2f}" y="{HEIGHT - 10}" text-anchor="middle" font-size="12">{escape(axes.x_label)}</text>')
    parts.append(
        f'<text x="16" y="{MARGIN_T + ph / 2:.2f}" text-anchor="middle" font-size="12" '
        f'transform="rotate(-90 16 {MARGIN_T + ph / 2:.2f})">{escape(y_title)}</text>'
    )
    for k, (label, x, y) in enumerate(prepared):
        color = PALETTE[k % len(PALETTE)]
        pts = " ".join(f"{px(a):.3f},{py(b):.3f}" for a, b in zip(x, y))
        parts.append(f'<polyline fill="none" stroke="{color}" stroke-width="1.5" points="{pts}"/>')
        ly = MARGIN_T + 14 + 16 * k
        lx = MARGIN_L + pw + 10
        parts.append(f'<line x1="{lx}" y1="{ly - 4}" x2="{lx + 18}" y2="{ly - 4}" stroke="{color}" stroke-width="2"/>')
        parts.append(f'<text class="legend" x="{lx + 24}" y="{ly}" font-size="11">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def render_plot(series, axes, path):
    """Write the series as a standalone SVG line chart to ``path``."""
    text = render_svg(series, axes)
    try:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    except OSError as exc:
        raise OSError(f"cannot write plot to {path}: {exc}") from exc
    return path
