"""Minimal hand-rolled SVG rendering for heatmaps and CDFs.

Decoration only: the CSV outputs are the contract. The heatmap color
scale is fixed (documented in the README): availability 0.0 maps to
#d73027, 0.5 to #fee08b, 1.0 to #1a9850, interpolated linearly.
"""

from __future__ import annotations

from .analytics import HeatmapMatrix

_SCALE = [(0.0, (0xD7, 0x30, 0x27)), (0.5, (0xFE, 0xE0, 0x8B)), (1.0, (0x1A, 0x98, 0x50))]


def _color(v: float) -> str:
    v = min(max(v, 0.0), 1.0)
    for (x0, c0), (x1, c1) in zip(_SCALE, _SCALE[1:]):
        if v <= x1:
            f = 0.0 if x1 == x0 else (v - x0) / (x1 - x0)
            r, g, b = (round(a + f * (b_ - a)) for a, b_ in zip(c0, c1))
            return f"#{r:02x}{g:02x}{b:02x}"
    return "#1a9850"


def heatmap_svg(matrix: HeatmapMatrix, path, title: str = "") -> None:
    cell_w, cell_h, left, top = 90, 40, 110, 60
    n_cols = len(matrix.camera_rates_mbps)
    n_rows = len(matrix.d_max_ms)
    width = left + n_cols * cell_w + 20
    height = top + n_rows * cell_h + 40
    cum = []
    total = 0.0
    for r in matrix.camera_rates_mbps:
        total += r
        cum.append(total)
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{left}" y="20" font-size="14">{title}</text>',
    ]
    for j, rate in enumerate(cum):
        x = left + j * cell_w + cell_w // 2
        parts.append(
            f'<text x="{x}" y="{top - 10}" text-anchor="middle">'
            f"{j + 1} cam ({rate:g} Mbps)</text>"
        )
    for i, d_max in enumerate(matrix.d_max_ms):
        y = top + i * cell_h
        parts.append(
            f'<text x="{left - 10}" y="{y + cell_h // 2 + 4}" text-anchor="end">'
            f"D_max {d_max:g} ms</text>"
        )
        for j, cell in enumerate(matrix.cells[i]):
            x = left + j * cell_w
            parts.append(
                f'<rect x="{x}" y="{y}" width="{cell_w}" height="{cell_h}" '
                f'fill="{_color(cell)}" stroke="#444"/>'
            )
            parts.append(
                f'<text x="{x + cell_w // 2}" y="{y + cell_h // 2 + 4}" '
                f'text-anchor="middle">{100 * cell:.0f}%</text>'
            )
    parts.append("</svg>")
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(parts) + "\n")


def cdf_svg(
    cdf: list[tuple[float, float]], path, title: str = "", x_label: str = ""
) -> None:
    width, height, left, top, bottom = 520, 320, 60, 40, 40
    plot_w, plot_h = width - left - 30, height - top - bottom
    x_min = min(v for v, _ in cdf)
    x_max = max(v for v, _ in cdf)
    span = (x_max - x_min) or 1.0

    def sx(v: float) -> float:
        return left + (v - x_min) / span * plot_w

    def sy(frac: float) -> float:
        return top + (1.0 - frac) * plot_h

    pts = []
    prev_f = 0.0
    for v, frac in cdf:
        pts.append(f"{sx(v):.1f},{sy(prev_f):.1f}")
        pts.append(f"{sx(v):.1f},{sy(frac):.1f}")
        prev_f = frac
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'font-family="sans-serif" font-size="12">',
        f'<text x="{left}" y="20" font-size="14">{title}</text>',
        f'<rect x="{left}" y="{top}" width="{plot_w}" height="{plot_h}" '
        f'fill="none" stroke="#999"/>',
        f'<polyline points="{" ".join(pts)}" fill="none" stroke="#2166ac" stroke-width="2"/>',
        f'<text x="{left + plot_w / 2:.0f}" y="{height - 10}" text-anchor="middle">{x_label}</text>',
        f'<text x="{left - 40}" y="{top + 8}">1.0</text>',
        f'<text x="{left - 40}" y="{top + plot_h}">0.0</text>',
        f'<text x="{left:.0f}" y="{top + plot_h + 16}" text-anchor="middle">{x_min:g}</text>',
        f'<text x="{left + plot_w:.0f}" y="{top + plot_h + 16}" text-anchor="middle">{x_max:g}</text>',
        "</svg>",
    ]
    with open(path, "w", newline="\n") as f:
        f.write("\n".join(parts) + "\n")
