"""Deterministic SVG charts: pairwise scatter, per-label histograms, score bars.

Output is plain text built in a fixed order with fixed number formatting,
so identical inputs give identical bytes.
"""
from __future__ import annotations

from html import escape
from typing import Sequence

import numpy as np

from .datagen import FEATURE_NAMES, Dataset, Label
from .evaluation import AlgorithmResult, Report, SplitConfig

LABEL_COLORS = {
    Label.SOLID: "#8c564b",
    Label.THROAT: "#1f77b4",
    Label.PORE: "#2ca02c",
    Label.NCVUGS: "#d62728",
}
BAR_SERIES = (
    ("train_score", "train set score", "#4c72b0"),
    ("test_score", "test set score", "#dd8452"),
    ("best_accuracy", "best prediction accuracy", "#55a868"),
)
KINDS = ("scatter", "histogram", "bars")

PANEL = 160.0
GAP = 30.0
MARGIN = 50.0


def _n(x: float) -> str:
    return f"{x:.2f}"


class _Svg:
    def __init__(self, width: float, height: float):
        self.width, self.height = width, height
        self.parts: list[str] = []

    def add(self, text: str) -> None:
        self.parts.append(text)

    def text(self, x, y, s, size=11, anchor="middle", extra="") -> None:
        self.add(
            f'<text x="{_n(x)}" y="{_n(y)}" font-size="{size}" text-anchor="{anchor}"{extra}>{escape(s)}</text>'
        )

    def render(self) -> str:
        head = (
            '<?xml version="1.0" encoding="UTF-8"?>\n'
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{_n(self.width)}" height="{_n(self.height)}" '
            f'viewBox="0 0 {_n(self.width)} {_n(self.height)}" font-family="sans-serif">\n'
        )
        return head + "\n".join(self.parts) + "\n</svg>\n"


def _legend(svg: _Svg, x: float, y: float, entries) -> None:
    for i, (name, color) in enumerate(entries):
        yy = y + 16 * i
        svg.add(f'<rect class="legend" x="{_n(x)}" y="{_n(yy - 9)}" width="10" height="10" fill="{color}"/>')
        svg.text(x + 14, yy, name, anchor="start")


def _bounds(values: np.ndarray) -> tuple[float, float]:
    lo, hi = float(values.min()), float(values.max())
    return (lo, hi) if hi > lo else (lo - 0.5, hi + 0.5)


def scatter_svg(data: Dataset) -> str:
    """4x4 grid of feature-vs-feature panels, one circle per row in every panel."""
    d = len(FEATURE_NAMES)
    size = MARGIN * 2 + d * PANEL + (d - 1) * GAP
    svg = _Svg(size + 120, size)
    bounds = [_bounds(data.features[:, j]) for j in range(d)]
    for r in range(d):
        for c in range(d):
            x0 = MARGIN + c * (PANEL + GAP)
            y0 = MARGIN + r * (PANEL + GAP)
            svg.add(f'<g class="panel" data-x="{FEATURE_NAMES[c]}" data-y="{FEATURE_NAMES[r]}">')
            svg.add(
                f'<rect class="frame" x="{_n(x0)}" y="{_n(y0)}" width="{_n(PANEL)}" height="{_n(PANEL)}" '
                'fill="none" stroke="#999"/>'
            )
            (xlo, xhi), (ylo, yhi) = bounds[c], bounds[r]
            xs = x0 + 4 + (data.features[:, c] - xlo) / (xhi - xlo) * (PANEL - 8)
            ys = y0 + PANEL - 4 - (data.features[:, r] - ylo) / (yhi - ylo) * (PANEL - 8)
            for x, y, lab in zip(xs, ys, data.labels):
                svg.add(f'<circle cx="{_n(x)}" cy="{_n(y)}" r="1.5" fill="{LABEL_COLORS[Label(int(lab))]}"/>')
            svg.add("</g>")
            if r == d - 1:
                svg.text(x0 + PANEL / 2, y0 + PANEL + 18, FEATURE_NAMES[c])
            if c == 0:
                svg.text(x0 - 10, y0 + PANEL / 2, FEATURE_NAMES[r], anchor="end", size=9)
    _legend(svg, size, MARGIN, [(lab.spelling, LABEL_COLORS[lab]) for lab in Label])
    return svg.render()


def _bin_edges(values: np.ndarray, n_bins: int = 16) -> np.ndarray:
    uniq = np.unique(values)
    if len(uniq) <= 2:
        lo, hi = float(uniq[0]), float(uniq[-1])
        return np.array([lo - 0.5, (lo + hi) / 2, hi + 0.5]) if hi > lo else np.array([lo - 0.5, lo + 0.5])
    lo, hi = _bounds(values)
    return np.linspace(lo, hi, n_bins + 1)


def histogram_svg(data: Dataset) -> str:
    """Per-feature histograms, one bar per (bin, label) side by side."""
    d = len(FEATURE_NAMES)
    width = MARGIN * 2 + d * PANEL * 1.5 + (d - 1) * GAP
    svg = _Svg(width + 120, MARGIN * 2 + PANEL + 30)
    n_labels = len(Label)
    for j, name in enumerate(FEATURE_NAMES):
        x0 = MARGIN + j * (PANEL * 1.5 + GAP)
        y0 = MARGIN
        edges = _bin_edges(data.features[:, j])
        counts = np.array(
            [np.histogram(data.features[data.labels == lab, j], bins=edges)[0] for lab in Label]
        )
        top = max(int(counts.max()), 1)
        n_bins = len(edges) - 1
        slot = PANEL * 1.5 / n_bins
        bar_w = slot / (n_labels + 1)
        svg.add(f'<g class="panel" data-feature="{name}">')
        svg.add(
            f'<rect class="frame" x="{_n(x0)}" y="{_n(y0)}" width="{_n(PANEL * 1.5)}" height="{_n(PANEL)}" '
            'fill="none" stroke="#999"/>'
        )
        for b in range(n_bins):
            for k, lab in enumerate(Label):
                h = counts[k, b] / top * (PANEL - 4)
                x = x0 + b * slot + (k + 0.5) * bar_w
                svg.add(
                    f'<rect class="bin" x="{_n(x)}" y="{_n(y0 + PANEL - h)}" width="{_n(bar_w)}" '
                    f'height="{_n(h)}" fill="{LABEL_COLORS[lab]}" data-count="{int(counts[k, b])}"/>'
                )
        svg.add("</g>")
        svg.text(x0 + PANEL * 0.75, y0 + PANEL + 18, name)
    _legend(svg, width, MARGIN, [(lab.spelling, LABEL_COLORS[lab]) for lab in Label])
    return svg.render()


def bars_svg(report: Report) -> str:
    """Grouped bars (train / test / best accuracy) per algorithm, in report order."""
    results = [r for r in report.results if not r.failed]
    group = 3 * 22 + 24
    width = MARGIN * 2 + max(len(results), 1) * group
    height = MARGIN * 2 + 200
    svg = _Svg(width + 190, height)
    base = MARGIN + 200
    svg.add(f'<line x1="{_n(MARGIN)}" y1="{_n(base)}" x2="{_n(width - MARGIN)}" y2="{_n(base)}" stroke="#333"/>')
    for tick in (0.0, 0.25, 0.5, 0.75, 1.0):
        y = base - tick * 200
        svg.text(MARGIN - 6, y + 4, f"{tick:.2f}", size=9, anchor="end")
    for i, r in enumerate(results):
        x0 = MARGIN + i * group + 12
        for k, (attr, _, color) in enumerate(BAR_SERIES):
            value = float(getattr(r, attr))
            h = value * 200
            svg.add(
                f'<rect class="bar" x="{_n(x0 + k * 22)}" y="{_n(base - h)}" width="20" height="{_n(h)}" '
                f'fill="{color}" data-algorithm="{r.algorithm}" data-series="{attr}" data-value="{value:.6g}"/>'
            )
        svg.text(x0 + 33, base + 16, r.algorithm.upper())
    _legend(svg, width, MARGIN, [(label, color) for _, label, color in BAR_SERIES])
    return svg.render()


def render(kind: str, source) -> str:
    if kind == "scatter":
        return scatter_svg(source)
    if kind == "histogram":
        return histogram_svg(source)
    if kind == "bars":
        return bars_svg(source)
    raise ValueError(f"unknown plot kind {kind!r}; expected one of {', '.join(KINDS)}")


def report_from_dict(doc: dict) -> Report:
    """Rebuild enough of a Report from its JSON to draw bars."""
    results = []
    for r in doc["results"]:
        results.append(
            AlgorithmResult(
                r["algorithm"], r["config"], r["train_score"], r["test_score"], r["best_accuracy"],
                r.get("best_config"), None, r.get("error"),
            )
        )
    return Report(results, SplitConfig.from_dict(doc["split"]), doc.get("provenance", "external"), doc.get("tuning_mode"))


__all__: Sequence[str] = ("KINDS", "bars_svg", "histogram_svg", "render", "report_from_dict", "scatter_svg")
