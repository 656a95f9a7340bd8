"""Matplotlib renderings of sweep tables, extinction curves and matrices.

Rendered straight to files via the Agg canvas; no pyplot global state, so
the library stays importable in headless and threaded contexts.
"""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure

from .core import COUNTRY, PRODUCT, BipartiteMatrix
from .evaluation import EvaluationReport, ExtinctionCurve
from .sweep import SweepRow

_SIDE_TITLES = {COUNTRY: "countries", PRODUCT: "products"}


def _save(fig: Figure, path: str | Path) -> Path:
    path = Path(path)
    FigureCanvasAgg(fig)
    fig.savefig(path, dpi=150)
    return path


def save_matrix_figure(m: BipartiteMatrix, path: str | Path, title: str | None = None) -> Path:
    """Black-and-white bitmap view of the incidence matrix (rows = countries)."""
    fig = Figure(figsize=(6.4, 4.8))
    ax = fig.subplots()
    ax.imshow(m.entries, cmap="Greys", interpolation="nearest", aspect="auto", vmin=0, vmax=1)
    ax.set_xlabel("products")
    ax.set_ylabel("countries")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    return _save(fig, path)


def save_extinction_figure(
    curves: Mapping[str, ExtinctionCurve], path: str | Path, title: str | None = None
) -> Path:
    """Step plot of extinction curves, one panel per removed side."""
    sides = [s for s in (COUNTRY, PRODUCT) if s in curves]
    fig = Figure(figsize=(4.8 * len(sides), 3.6))
    axes = fig.subplots(1, len(sides), squeeze=False)[0]
    for ax, side in zip(axes, sides):
        curve = curves[side]
        ax.step(curve.removed_fractions, curve.values, where="post")
        ax.set_xlabel(f"fraction of {_SIDE_TITLES[side]} removed")
        ax.set_ylabel("fraction extinct")
        ax.set_xlim(0, 1)
        ax.set_ylim(0, 1.02)
        ax.grid(True, alpha=0.3)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    return _save(fig, path)


def save_report_figure(report: EvaluationReport, path: str | Path) -> Path:
    """Bar/line view of a report's summary statistics."""
    fig = Figure(figsize=(6.4, 3.9))
    ax = fig.subplots()
    keys = [k for k, _ in report.summary]
    values = [v for _, v in report.summary]
    if report.kind == "noise":
        _plot_noise_summary(ax, report)
    else:
        ax.bar(range(len(keys)), values, color="tab:blue")
        ax.set_xticks(range(len(keys)))
        ax.set_xticklabels(keys, rotation=20, ha="right", fontsize=8)
        ax.set_ylabel("value")
        ax.grid(True, axis="y", alpha=0.3)
    ax.set_title(f"{report.kind}: {report.method_tag}")
    fig.tight_layout()
    return _save(fig, path)


def _plot_noise_summary(ax, report: EvaluationReport) -> None:
    # summary keys look like rho_country_mean[eta=0.05]
    series: dict[str, list[tuple[float, float]]] = {}
    for key, value in report.summary:
        side = COUNTRY if f"_{COUNTRY}_" in key else PRODUCT
        eta = float(key.split("eta=")[1].rstrip("]"))
        series.setdefault(side, []).append((eta, value))
    for side, points in series.items():
        points.sort()
        ax.plot([p[0] for p in points], [p[1] for p in points], marker="o",
                label=_SIDE_TITLES[side])
    ax.set_xlabel("flip fraction eta")
    ax.set_ylabel("mean Spearman rho")
    ax.legend()
    ax.grid(True, alpha=0.3)


def save_sweep_figure(
    rows: Sequence[SweepRow], experiment: str, path: str | Path
) -> Path:
    """Statistic-versus-parameter lines for one experiment of a sweep."""
    selected = [r for r in rows if r.experiment == experiment]
    if not selected:
        raise ValueError(f"no rows for experiment {experiment!r}")
    parameter = selected[0].parameter
    sides = [s for s in (COUNTRY, PRODUCT) if any(r.side == s for r in selected)]
    fig = Figure(figsize=(4.8 * len(sides), 3.6))
    axes = fig.subplots(1, len(sides), squeeze=False)[0]
    for ax, side in zip(axes, sides):
        series: dict[str, list[tuple[float, float]]] = {}
        for r in selected:
            if r.side != side:
                continue
            name = r.statistic + (f" ({r.qualifier})" if r.qualifier else "")
            series.setdefault(name, []).append((r.value, r.result))
        for name in sorted(series):
            points = sorted(series[name])
            ax.plot([p[0] for p in points], [p[1] for p in points], marker="o", label=name)
        ax.set_xlabel(parameter)
        ax.set_title(_SIDE_TITLES[side])
        ax.legend(fontsize=8)
        ax.grid(True, alpha=0.3)
    fig.suptitle(experiment)
    fig.tight_layout()
    return _save(fig, path)
