"""Minimal deterministic SVG output: a histogram with an overlaid density curve."""
from __future__ import annotations

import numpy as np

from .wright_fisher import WrightFisherLaw, wf_mixture_cdf


def cos_dist_density(d: int, t: float, edges: np.ndarray) -> np.ndarray:
    """Average density of ``1 - 2X`` over each bin, by differencing the mixture CDF."""
    half = 0.5 * (d - 1)
    law = WrightFisherLaw(half, half, 0.0, t)
    # P(1 - 2X <= c) = 1 - F_X((1 - c) / 2)
    cdf = 1.0 - wf_mixture_cdf(law, np.clip(0.5 * (1.0 - edges), 0.0, 1.0))
    return np.diff(cdf) / np.diff(edges)


def _fmt(v: float) -> str:
    return f"{v:.3f}".rstrip("0").rstrip(".")


def histogram_svg(
    values,
    edges: np.ndarray,
    curve: np.ndarray | None = None,
    title: str = "",
    width: int = 640,
    height: int = 400,
) -> str:
    """Density-normalised histogram of ``values`` on ``edges``, optional curve at bin centres."""
    values = np.asarray(values, dtype=float)
    counts, _ = np.histogram(values, bins=edges)
    dens = counts / (values.size * np.diff(edges))
    top = max(dens.max(), curve.max() if curve is not None else 0.0) * 1.08 or 1.0
    margin = 40
    pw, ph = width - 2 * margin, height - 2 * margin
    x0, x1 = edges[0], edges[-1]

    def sx(x):
        return margin + (x - x0) / (x1 - x0) * pw

    def sy(y):
        return height - margin - y / top * ph

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{width // 2}" y="20" text-anchor="middle" font-size="14">{title}</text>')
    for lo, hi, h in zip(edges[:-1], edges[1:], dens):
        parts.append(
            f'<rect x="{_fmt(sx(lo))}" y="{_fmt(sy(h))}" width="{_fmt(sx(hi) - sx(lo))}" '
            f'height="{_fmt(sy(0) - sy(h))}" fill="#9ecae1" stroke="#3182bd" stroke-width="0.5"/>'
        )
    if curve is not None:
        centres = 0.5 * (edges[:-1] + edges[1:])
        pts = " ".join(f"{_fmt(sx(c))},{_fmt(sy(v))}" for c, v in zip(centres, curve))
        parts.append(f'<polyline points="{pts}" fill="none" stroke="#d62728" stroke-width="2"/>')
    parts.append(
        f'<line x1="{margin}" y1="{_fmt(sy(0))}" x2="{width - margin}" y2="{_fmt(sy(0))}" stroke="black"/>'
    )
    for tick in np.linspace(x0, x1, 5):
        parts.append(
            f'<text x="{_fmt(sx(tick))}" y="{height - margin + 16}" text-anchor="middle" '
            f'font-size="11">{_fmt(tick)}</text>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"
