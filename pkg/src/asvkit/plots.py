"""Minimal SVG plot emission; keeps the toolkit free of plotting stacks."""

from __future__ import annotations

from pathlib import Path

import numpy as np

from .stats import RegressionFit

_WIDTH, _HEIGHT = 640, 420
_MARGIN = 60


def _scale(lo: float, hi: float, span: int):
    if hi <= lo:
        hi = lo + 1.0
    return lambda v: _MARGIN + (v - lo) / (hi - lo) * span


def _axes(x_label: str, y_label: str, title: str) -> list[str]:
    bottom = _HEIGHT - _MARGIN
    right = _WIDTH - _MARGIN
    return [
        f'<rect width="{_WIDTH}" height="{_HEIGHT}" fill="white"/>',
        f'<line x1="{_MARGIN}" y1="{bottom}" x2="{right}" y2="{bottom}" stroke="black"/>',
        f'<line x1="{_MARGIN}" y1="{_MARGIN}" x2="{_MARGIN}" y2="{bottom}" stroke="black"/>',
        f'<text x="{_WIDTH / 2:.0f}" y="{_HEIGHT - 12}" text-anchor="middle" '
        f'font-size="13">{x_label}</text>',
        f'<text x="16" y="{_HEIGHT / 2:.0f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {_HEIGHT / 2:.0f})">{y_label}</text>',
        f'<text x="{_WIDTH / 2:.0f}" y="28" text-anchor="middle" font-size="15">{title}</text>',
    ]


def _document(parts: list[str]) -> str:
    body = "\n".join(parts)
    return (
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_WIDTH}" '
        f'height="{_HEIGHT}" viewBox="0 0 {_WIDTH} {_HEIGHT}">\n{body}\n</svg>\n'
    )


def eer_distribution_svg(named_eers: dict[str, list[float]]) -> str:
    """Box-style summary (median, quartile box, whiskers) of EERs per experiment."""
    if not named_eers:
        raise ValueError("no experiments to plot")
    all_values = [v for values in named_eers.values() for v in values]
    lo, hi = min(all_values), max(all_values)
    pad = 0.05 * (hi - lo) if hi > lo else 1.0
    y_of_raw = _scale(lo - pad, hi + pad, _HEIGHT - 2 * _MARGIN)
    y_of = lambda v: _HEIGHT - y_of_raw(v) + 0.0  # invert: larger values higher
    parts = _axes("experiment", "EER (%)", "EER distribution per experiment")
    slot = (_WIDTH - 2 * _MARGIN) / len(named_eers)
    for index, (name, values) in enumerate(named_eers.items()):
        center = _MARGIN + slot * (index + 0.5)
        q1, median, q3 = np.percentile(values, [25, 50, 75])
        low, high = min(values), max(values)
        half = min(34.0, slot * 0.3)
        parts.append(
            f'<line x1="{center:.1f}" y1="{y_of(low):.1f}" x2="{center:.1f}" '
            f'y2="{y_of(high):.1f}" stroke="black"/>'
        )
        parts.append(
            f'<rect x="{center - half:.1f}" y="{y_of(q3):.1f}" width="{2 * half:.1f}" '
            f'height="{max(y_of(q1) - y_of(q3), 1.0):.1f}" fill="#9ecae1" stroke="black"/>'
        )
        parts.append(
            f'<line x1="{center - half:.1f}" y1="{y_of(median):.1f}" '
            f'x2="{center + half:.1f}" y2="{y_of(median):.1f}" stroke="black" stroke-width="2"/>'
        )
        parts.append(
            f'<text x="{center:.1f}" y="{_HEIGHT - _MARGIN + 18}" text-anchor="middle" '
            f'font-size="12">{name}</text>'
        )
    return _document(parts)


def size_vs_eer_svg(points: list[tuple[float, float]], fit: RegressionFit | None) -> str:
    """Scatter of (training size, EER %) with the fitted logarithmic curve."""
    if not points:
        raise ValueError("no points to plot")
    xs = [p[0] for p in points]
    ys = [p[1] for p in points]
    x_of = _scale(min(xs) * 0.9, max(xs) * 1.05, _WIDTH - 2 * _MARGIN)
    lo, hi = min(ys), max(ys)
    if fit is not None:
        grid = np.linspace(min(xs), max(xs), 100)
        curve = fit.intercept + fit.slope * np.log(grid)
        lo, hi = min(lo, curve.min()), max(hi, curve.max())
    pad = 0.08 * (hi - lo) if hi > lo else 1.0
    y_raw = _scale(lo - pad, hi + pad, _HEIGHT - 2 * _MARGIN)
    y_of = lambda v: _HEIGHT - y_raw(v)
    parts = _axes("training speakers", "EER (%)", "EER versus training cohort size")
    if fit is not None:
        coords = " ".join(
            f"{x_of(x):.1f},{y_of(fit.intercept + fit.slope * np.log(x)):.1f}" for x in grid
        )
        parts.append(f'<polyline points="{coords}" fill="none" stroke="#d6604d" stroke-width="2"/>')
        parts.append(
            f'<text x="{_WIDTH - _MARGIN}" y="{_MARGIN - 8}" text-anchor="end" font-size="12">'
            f"fit: a={fit.intercept:.4f} b={fit.slope:.4f} r2={fit.r_squared:.2f}</text>"
        )
    for x, y in points:
        parts.append(f'<circle cx="{x_of(x):.1f}" cy="{y_of(y):.1f}" r="4" fill="#2166ac"/>')
    return _document(parts)


def write_svg(path: str | Path, svg: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg)
