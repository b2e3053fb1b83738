"""Minimal SVG line plots: polylines and axes, nothing else."""

from __future__ import annotations

from dataclasses import dataclass, field
from xml.sax.saxutils import escape

import numpy as np

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b")


@dataclass
class LinePlot:
    width: int = 640
    height: int = 480
    margin: int = 40
    title: str = ""
    xlim: tuple | None = None
    ylim: tuple | None = None
    _lines: list = field(default_factory=list)

    def polyline(self, x, y, color: str | None = None, width: float = 1.5, opacity: float = 1.0) -> None:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        keep = np.isfinite(x) & np.isfinite(y)
        if np.count_nonzero(keep) < 2:
            return
        color = color or PALETTE[len(self._lines) % len(PALETTE)]
        self._lines.append((x[keep], y[keep], color, width, opacity))

    def _bounds(self):
        xs = np.concatenate([ln[0] for ln in self._lines]) if self._lines else np.array([0.0, 1.0])
        ys = np.concatenate([ln[1] for ln in self._lines]) if self._lines else np.array([0.0, 1.0])
        x0, x1 = self.xlim or (xs.min(), xs.max())
        y0, y1 = self.ylim or (ys.min(), ys.max())
        if x1 == x0:
            x0, x1 = x0 - 1, x1 + 1
        if y1 == y0:
            y0, y1 = y0 - 1, y1 + 1
        return x0, x1, y0, y1

    def render(self) -> str:
        x0, x1, y0, y1 = self._bounds()
        m = self.margin
        sx = (self.width - 2 * m) / (x1 - x0)
        sy = (self.height - 2 * m) / (y1 - y0)

        def px(x):
            return m + (x - x0) * sx

        def py(y):
            return self.height - m - (y - y0) * sy

        out = [
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{self.width}" height="{self.height}" '
            f'viewBox="0 0 {self.width} {self.height}">',
            f'<rect width="{self.width}" height="{self.height}" fill="white"/>',
            f'<defs><clipPath id="plot"><rect x="{m}" y="{m}" width="{self.width - 2 * m}" '
            f'height="{self.height - 2 * m}"/></clipPath></defs>',
        ]
        # axes through the origin when visible, else along the frame
        ax_y = py(0.0) if y0 <= 0.0 <= y1 else self.height - m
        ax_x = px(0.0) if x0 <= 0.0 <= x1 else m
        out.append(f'<line x1="{m}" y1="{ax_y:.2f}" x2="{self.width - m}" y2="{ax_y:.2f}" stroke="black"/>')
        out.append(f'<line x1="{ax_x:.2f}" y1="{m}" x2="{ax_x:.2f}" y2="{self.height - m}" stroke="black"/>')
        for v, anchor in ((x0, "start"), (x1, "end")):
            out.append(f'<text x="{px(v):.2f}" y="{self.height - m / 3:.2f}" font-size="11" text-anchor="{anchor}">{v:.3g}</text>')
        for v in (y0, y1):
            out.append(f'<text x="{m / 8:.2f}" y="{py(v):.2f}" font-size="11">{v:.3g}</text>')
        if self.title:
            out.append(f'<text x="{self.width / 2:.2f}" y="{m / 2:.2f}" font-size="14" text-anchor="middle">{escape(self.title)}</text>')
        out.append('<g clip-path="url(#plot)" fill="none">')
        for x, y, color, width, opacity in self._lines:
            pts = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px(x), py(y)))
            out.append(f'<polyline points="{pts}" stroke="{color}" stroke-width="{width}" stroke-opacity="{opacity}"/>')
        out.append("</g>")
        out.append("</svg>")
        return "\n".join(out) + "\n"
