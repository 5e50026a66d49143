"""Tiny SVG chart emitter for the report stage (no plotting dependency).

Charts are deliberately plain: a polyline over shaded level bands for the
index-over-time views and labeled rectangles for the per-condition bars.
Output is well-formed XML.
"""
from __future__ import annotations

from xml.sax.saxutils import escape

import numpy as np

#: Fill colors cycled over shaded regions, keyed by label where known.
REGION_COLORS = {
    "EASY": "#d3ecd3",
    "MEDIUM": "#fdf3c0",
    "HARD": "#fcdcb6",
    "ULTRA": "#f6c3c3",
}
_FALLBACK_COLORS = ("#dce6f4", "#e8dcf4", "#d8f0ee", "#f4e0dc")


def trailing_moving_average(t, values, window_sec=60.0):
    """Trailing mean over timestamps: at each point, average every value
    within the preceding ``window_sec`` (inclusive)."""
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    out = np.empty_like(v)
    lo = 0
    csum = np.concatenate([[0.0], np.cumsum(v)])
    for i in range(len(v)):
        while t[lo] < t[i] - window_sec:
            lo += 1
        out[i] = (csum[i + 1] - csum[lo]) / (i + 1 - lo)
    return out


def _region_color(label, i):
    return REGION_COLORS.get(label, _FALLBACK_COLORS[i % len(_FALLBACK_COLORS)])


def line_chart(
    path,
    t,
    values,
    smoothed=None,
    regions=(),
    title="",
    width=960,
    height=320,
    y_range=(-1.0, 1.0),
):
    """Write an index-over-time chart.

    ``regions`` is a sequence of ``(t0, t1, label)`` shaded behind the curve
    (one rect each).  ``smoothed`` draws a second, heavier polyline.
    """
    t = np.asarray(t, dtype=np.float64)
    v = np.asarray(values, dtype=np.float64)
    m = {"left": 45, "right": 10, "top": 28, "bottom": 24}
    pw = width - m["left"] - m["right"]
    ph = height - m["top"] - m["bottom"]
    t0 = float(t.min()) if len(t) else 0.0
    t1 = float(t.max()) if len(t) else 1.0
    span = (t1 - t0) or 1.0
    y0, y1 = y_range

    def sx(x):
        return m["left"] + (x - t0) / span * pw

    def sy(y):
        return m["top"] + (y1 - y) / (y1 - y0) * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{m["left"]}" y="18" font-size="13" font-family="sans-serif">{escape(title)}</text>',
    ]
    for i, (a, b, label) in enumerate(regions):
        xa, xb = sx(max(a, t0)), sx(min(b, t1))
        if xb <= xa:
            continue
        parts.append(
            f'<rect class="level" x="{xa:.2f}" y="{m["top"]}" width="{xb - xa:.2f}" '
            f'height="{ph}" fill="{_region_color(label, i)}"/>'
        )
        parts.append(
            f'<text x="{(xa + xb) / 2:.2f}" y="{m["top"] + 12}" font-size="9" '
            f'text-anchor="middle" font-family="sans-serif">{escape(str(label))}</text>'
        )
    for yv in (y0, 0.0, y1):
        parts.append(
            f'<line x1="{m["left"]}" y1="{sy(yv):.2f}" x2="{width - m["right"]}" '
            f'y2="{sy(yv):.2f}" stroke="#999" stroke-width="0.5"/>'
        )
        parts.append(
            f'<text x="{m["left"] - 6}" y="{sy(yv) + 3:.2f}" font-size="10" '
            f'text-anchor="end" font-family="sans-serif">{yv:g}</text>'
        )
    if len(t):
        pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(t, v))
        parts.append(
            f'<polyline points="{pts}" fill="none" stroke="#8888cc" stroke-width="0.7"/>'
        )
        if smoothed is not None:
            s = np.asarray(smoothed, dtype=np.float64)
            pts = " ".join(f"{sx(x):.2f},{sy(y):.2f}" for x, y in zip(t, s))
            parts.append(
                f'<polyline points="{pts}" fill="none" stroke="#222266" stroke-width="1.8"/>'
            )
    parts.append(
        f'<text x="{width - m["right"]}" y="{height - 8}" font-size="10" '
        f'text-anchor="end" font-family="sans-serif">time (s)</text>'
    )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")


def bar_chart(path, labels, means, sds=None, title="", width=640, height=320, y_label=""):
    """Write a bar chart of per-condition means with optional sd whiskers."""
    means = np.asarray(means, dtype=np.float64)
    sds = np.zeros_like(means) if sds is None else np.asarray(sds, dtype=np.float64)
    m = {"left": 55, "right": 10, "top": 28, "bottom": 42}
    pw = width - m["left"] - m["right"]
    ph = height - m["top"] - m["bottom"]
    hi = float(np.max(means + sds)) if len(means) else 1.0
    lo = float(min(0.0, np.min(means - sds))) if len(means) else 0.0
    span = (hi - lo) or 1.0
    hi, lo = hi + 0.08 * span, lo - (0.08 * span if lo < 0 else 0.0)
    span = hi - lo

    def sy(y):
        return m["top"] + (hi - y) / span * ph

    n = len(means)
    slot = pw / max(n, 1)
    bw = slot * 0.6
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
        f'<text x="{m["left"]}" y="18" font-size="13" font-family="sans-serif">{escape(title)}</text>',
        f'<line x1="{m["left"]}" y1="{sy(0):.2f}" x2="{width - m["right"]}" y2="{sy(0):.2f}" '
        f'stroke="#555" stroke-width="0.8"/>',
    ]
    for i, (label, mean, sd) in enumerate(zip(labels, means, sds)):
        cx = m["left"] + slot * (i + 0.5)
        x = cx - bw / 2
        top = sy(max(mean, 0.0))
        h = abs(sy(mean) - sy(0.0))
        color = _region_color(str(label).split(":")[0], i)
        parts.append(
            f'<rect x="{x:.2f}" y="{top:.2f}" width="{bw:.2f}" height="{h:.2f}" '
            f'fill="{color}" stroke="#666" stroke-width="0.7"/>'
        )
        if sd > 0:
            parts.append(
                f'<line x1="{cx:.2f}" y1="{sy(mean - sd):.2f}" x2="{cx:.2f}" '
                f'y2="{sy(mean + sd):.2f}" stroke="#333" stroke-width="1"/>'
            )
        parts.append(
            f'<text x="{cx:.2f}" y="{height - 22}" font-size="10" text-anchor="middle" '
            f'font-family="sans-serif">{escape(str(label))}</text>'
        )
    for yv in np.linspace(lo, hi, 5):
        parts.append(
            f'<text x="{m["left"] - 6}" y="{sy(yv) + 3:.2f}" font-size="10" '
            f'text-anchor="end" font-family="sans-serif">{yv:.2f}</text>'
        )
    if y_label:
        parts.append(
            f'<text x="12" y="{m["top"] + ph / 2:.2f}" font-size="10" font-family="sans-serif" '
            f'transform="rotate(-90 12 {m["top"] + ph / 2:.2f})">{escape(y_label)}</text>'
        )
    parts.append("</svg>")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(parts) + "\n")
