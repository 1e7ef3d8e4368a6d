"""Tiny dependency-free SVG renderers for the CLI's figure outputs.

Only two plot kinds are needed: a labeled 2-D scatter (projections, with
optional per-group centroid crosses) and an annotated heatmap (grids and
divergence matrices). Output is deterministic: same input, same bytes.
"""

from __future__ import annotations

import numpy as np

PALETTE = (
    "#1f77b4", "#d62728", "#2ca02c", "#9467bd",
    "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f",
)


def _esc(text: str) -> str:
    return (
        str(text)
        .replace("&", "&amp;")
        .replace("<", "&lt;")
        .replace(">", "&gt;")
        .replace('"', "&quot;")
    )


def _f(v: float) -> str:
    return f"{v:.2f}"


def scatter_svg(points, labels=None, centroids=None, width: int = 640,
                height: int = 480, title: str = "") -> str:
    """Scatter plot of (n, 2) points, colored by label, centroids as crosses."""
    pts = np.asarray(points, dtype=np.float64)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] == 0:
        raise ValueError("scatter_svg needs a non-empty (n, 2) array")
    labels = list(labels) if labels is not None else [""] * pts.shape[0]
    if len(labels) != pts.shape[0]:
        raise ValueError("labels length mismatch")
    names = list(dict.fromkeys(labels))
    color = {name: PALETTE[i % len(PALETTE)] for i, name in enumerate(names)}

    margin = 40.0
    xs, ys = pts[:, 0], pts[:, 1]
    x_lo, x_hi = float(xs.min()), float(xs.max())
    y_lo, y_hi = float(ys.min()), float(ys.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(v):
        return margin + (v - x_lo) / x_span * (width - 2 * margin)

    def sy(v):
        # SVG y grows downward
        return height - margin - (v - y_lo) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.0f}" y="20" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_esc(title)}</text>'
        )
    for (x, y), label in zip(pts, labels):
        parts.append(
            f'<circle cx="{_f(sx(x))}" cy="{_f(sy(y))}" r="3" '
            f'fill="{color[label]}" fill-opacity="0.6"/>'
        )
    if centroids:
        arm = 7.0
        for name, c in centroids.items():
            cx, cy = sx(float(c[0])), sy(float(c[1]))
            stroke = color.get(name, "#000000")
            parts.append(
                f'<path d="M {_f(cx - arm)} {_f(cy - arm)} L {_f(cx + arm)} {_f(cy + arm)} '
                f'M {_f(cx - arm)} {_f(cy + arm)} L {_f(cx + arm)} {_f(cy - arm)}" '
                f'stroke="{stroke}" stroke-width="3" fill="none"/>'
            )
    # legend, one row per label
    for i, name in enumerate(names):
        if name == "":
            continue
        ly = margin + 16.0 * i
        parts.append(
            f'<circle cx="{_f(width - margin - 60)}" cy="{_f(ly)}" r="4" fill="{color[name]}"/>'
        )
        parts.append(
            f'<text x="{_f(width - margin - 50)}" y="{_f(ly + 4)}" '
            f'font-family="sans-serif" font-size="12">{_esc(name)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _heat_color(v: float, lo: float, hi: float) -> str:
    """Blue (low) through white to red (high)."""
    if hi <= lo:
        t = 0.5
    else:
        t = (v - lo) / (hi - lo)
    t = min(max(t, 0.0), 1.0)
    if t < 0.5:  # #3b4cc0 -> white
        s = t / 0.5
        r = int(59 + s * (255 - 59))
        g = int(76 + s * (255 - 76))
        b = int(192 + s * (255 - 192))
    else:  # white -> #b40426
        s = (t - 0.5) / 0.5
        r = int(255 - s * (255 - 180))
        g = int(255 - s * (255 - 4))
        b = int(255 - s * (255 - 38))
    return f"#{r:02x}{g:02x}{b:02x}"


def heatmap_svg(matrix, row_labels, col_labels, title: str = "",
                cell: int = 64, fmt: str = "{:.2f}") -> str:
    """Annotated heatmap of a 2-D matrix; None cells render as gray."""
    rows = list(row_labels)
    cols = list(col_labels)
    data = [[(None if v is None else float(v)) for v in row] for row in matrix]
    if len(data) != len(rows) or any(len(r) != len(cols) for r in data):
        raise ValueError("matrix shape does not match labels")
    flat = [v for row in data for v in row if v is not None]
    lo = min(flat) if flat else 0.0
    hi = max(flat) if flat else 1.0

    left, top = 90, 70 if title else 50
    width = left + cell * len(cols) + 20
    height = top + cell * len(rows) + 20
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(
            f'<text x="{width / 2:.0f}" y="24" text-anchor="middle" '
            f'font-family="sans-serif" font-size="14">{_esc(title)}</text>'
        )
    for j, name in enumerate(cols):
        parts.append(
            f'<text x="{left + cell * j + cell / 2:.0f}" y="{top - 8}" text-anchor="middle" '
            f'font-family="sans-serif" font-size="12">{_esc(name)}</text>'
        )
    for i, name in enumerate(rows):
        parts.append(
            f'<text x="{left - 8}" y="{top + cell * i + cell / 2 + 4:.0f}" text-anchor="end" '
            f'font-family="sans-serif" font-size="12">{_esc(name)}</text>'
        )
    for i in range(len(rows)):
        for j in range(len(cols)):
            v = data[i][j]
            x, y = left + cell * j, top + cell * i
            fill = "#cccccc" if v is None else _heat_color(v, lo, hi)
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell}" height="{cell}" '
                f'fill="{fill}" stroke="#ffffff"/>'
            )
            text = "--" if v is None else fmt.format(v)
            parts.append(
                f'<text x="{x + cell / 2:.0f}" y="{y + cell / 2 + 4:.0f}" text-anchor="middle" '
                f'font-family="sans-serif" font-size="12">{_esc(text)}</text>'
            )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
