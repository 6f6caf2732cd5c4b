"""Self-contained SVG rendering for fits and forecasts.

Hand-rolled on purpose: the output is a single static file with bars for
the smoothed counts, the fitted line, a dotted forecast, a shaded
interval band, and dashed vertical knot markers. No plotting backend is
needed or imported.
"""

from __future__ import annotations

import numpy as np

_W, _H = 860, 420
_ML, _MR, _MT, _MB = 60, 20, 20, 40


def _scales(xmin, xmax, ymin, ymax):
    if ymax <= ymin:
        ymax = ymin + 1.0
    sx = (_W - _ML - _MR) / (xmax - xmin)
    sy = (_H - _MT - _MB) / (ymax - ymin)

    def px(x):
        return _ML + (x - xmin) * sx

    def py(y):
        return _H - _MB - (y - ymin) * sy

    return px, py


def _polyline(px, py, xs, ys, stroke, dash=None, width=2):
    pts = " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(xs, ys))
    d = f' stroke-dasharray="{dash}"' if dash else ""
    return (
        f'<polyline fill="none" stroke="{stroke}" stroke-width="{width}"{d} '
        f'points="{pts}"/>'
    )


def series_svg(fit) -> str:
    """Render a SeriesFit: bars, fit, dotted forecast, band, knot lines."""
    n = len(fit.series)
    xs = np.arange(n, dtype=float)
    bars = np.asarray(fit.smoothed)
    fitted = fit.fitted_values()
    f_x = np.array([n - 1 + i for i in range(len(fit.forecast))], dtype=float)
    f_pt = np.array([p.point for p in fit.forecast])
    f_lo = np.array([p.lower for p in fit.forecast])
    f_hi = np.array([p.upper for p in fit.forecast])

    ymax = max(bars.max(), fitted.max(), f_hi.max())
    ymin = min(0.0, bars.min(), fitted.min(), f_lo.min())
    px, py = _scales(0, f_x[-1] if len(f_x) else n - 1, ymin, ymax)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    bw = max((px(1) - px(0)) * 0.8, 0.5)
    for x, v in zip(xs, bars):
        parts.append(
            f'<rect x="{px(x) - bw / 2:.2f}" y="{py(v):.2f}" width="{bw:.2f}" '
            f'height="{py(ymin) - py(v):.2f}" fill="#bbbbbb"/>'
        )
    if len(f_x):
        band = (
            " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(f_x, f_lo))
            + " "
            + " ".join(f"{px(x):.2f},{py(y):.2f}" for x, y in zip(f_x[::-1], f_hi[::-1]))
        )
        parts.append(f'<polygon fill="#9ecae1" fill-opacity="0.5" points="{band}"/>')
    for d in fit.knot_dates:
        x = (d - fit.series.dates[0]).days
        parts.append(
            f'<line x1="{px(x):.2f}" y1="{py(ymin):.2f}" x2="{px(x):.2f}" '
            f'y2="{py(ymax):.2f}" stroke="#2ca02c" stroke-dasharray="6,4"/>'
        )
    parts.append(_polyline(px, py, xs, fitted, "black"))
    if len(f_x):
        parts.append(_polyline(px, py, f_x, f_pt, "black", dash="2,4"))
    # axis baseline and label
    parts.append(
        f'<line x1="{_ML}" y1="{py(ymin):.2f}" x2="{_W - _MR}" y2="{py(ymin):.2f}" '
        f'stroke="black"/>'
    )
    parts.append(
        f'<text x="{_ML}" y="{_H - 10}" font-family="sans-serif" font-size="13">'
        f"{fit.series.label} ({fit.scale.value} scale)</text>"
    )
    parts.append("</svg>")
    return "\n".join(parts)


def curves_svg(x, curves, knot_lines=(), points=None, title="") -> str:
    """Render plain curves: list of (ys, color, dash) over a shared x grid."""
    x = np.asarray(x, dtype=float)
    ys_all = np.concatenate([np.asarray(c[0]) for c in curves])
    if points is not None:
        ys_all = np.concatenate([ys_all, np.asarray(points[1])])
    px, py = _scales(x.min(), x.max(), float(ys_all.min()), float(ys_all.max()))
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_W}" height="{_H}" '
        f'viewBox="0 0 {_W} {_H}">',
        f'<rect width="{_W}" height="{_H}" fill="white"/>',
    ]
    if points is not None:
        for xp, yp in zip(*points):
            parts.append(f'<circle cx="{px(xp):.2f}" cy="{py(yp):.2f}" r="1.6" fill="#999999"/>')
    ymin, ymax = float(ys_all.min()), float(ys_all.max())
    for t in knot_lines:
        parts.append(
            f'<line x1="{px(t):.2f}" y1="{py(ymin):.2f}" x2="{px(t):.2f}" '
            f'y2="{py(ymax):.2f}" stroke="#2ca02c" stroke-dasharray="6,4"/>'
        )
    for ys, color, dash in curves:
        parts.append(_polyline(px, py, x, np.asarray(ys), color, dash=dash))
    if title:
        parts.append(
            f'<text x="{_ML}" y="{_H - 10}" font-family="sans-serif" font-size="13">{title}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts)
