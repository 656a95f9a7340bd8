"""Ranking evaluation: rank correlation, extinction areas, noise, volatility.

Extinction follows the ecological convention: an opposite-side node is
extinct once its last neighbour has been removed, and rankings are never
recomputed during a removal sequence.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import (
    COUNTRY,
    HIGH,
    PRODUCT,
    BipartiteMatrix,
    MethodConfig,
    Ranking,
    ScoreVector,
    degrees,
    drop_isolated,
    ranking_from_scores,
)
from .errors import (
    DegenerateInput,
    EmptyIntersection,
    LabelMismatch,
    ZeroDegree,
)
from .ranking import RankResult, rank_matrix


def fractional_ranks(values: np.ndarray) -> np.ndarray:
    """1-based mid-ranks: ties receive the average of the positions they span."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    sorted_values = values[order]
    new_run = np.r_[True, sorted_values[1:] != sorted_values[:-1]]
    run_id = np.cumsum(new_run) - 1
    counts = np.bincount(run_id)
    ends = np.cumsum(counts)
    mid = ends - (counts - 1) / 2.0  # mean of 1-based positions in the run
    ranks = np.empty_like(values)
    ranks[order] = mid[run_id]
    return ranks


def _as_values(x, y):
    if isinstance(x, ScoreVector) and isinstance(y, ScoreVector):
        if x.side != y.side:
            raise LabelMismatch("score vectors compare different sides")
        if x.labels != y.labels:
            if sorted(x.labels) != sorted(y.labels):
                raise LabelMismatch("score vectors cover different label sets")
            return x.values, y.subset(x.labels)
        return x.values, y.values
    xv = x.values if isinstance(x, ScoreVector) else np.asarray(x, dtype=np.float64)
    yv = y.values if isinstance(y, ScoreVector) else np.asarray(y, dtype=np.float64)
    return xv, yv


def spearman(x, y) -> float:
    """Spearman rank correlation with mid-rank tie handling.

    Accepts score vectors (aligned by label) or plain arrays (aligned by
    position).  Raises DegenerateInput on constant or too-short input.
    """
    xv, yv = _as_values(x, y)
    if xv.shape != yv.shape or xv.ndim != 1:
        raise ValueError("inputs must be 1-d and of equal length")
    if len(xv) < 2:
        raise DegenerateInput("need at least two observations")
    rx = fractional_ranks(xv)
    ry = fractional_ranks(yv)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sx = float(dx @ dx)
    sy = float(dy @ dy)
    if sx == 0.0 or sy == 0.0:
        raise DegenerateInput("constant input has no rank correlation")
    return float((dx @ dy) / math.sqrt(sx * sy))


# -- extinction ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ExtinctionCurve:
    """Fraction of the opposite side extinct after each removal, in order."""

    side_removed: str
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or len(values) == 0:
            raise ValueError("curve must be a non-empty vector")
        if (np.diff(values) < 0).any() or values[0] < 0 or values[-1] > 1:
            raise ValueError("curve must be non-decreasing within [0, 1]")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def removed_fractions(self) -> np.ndarray:
        k = len(self.values)
        return np.arange(1, k + 1) / k


def extinction_curve(m: BipartiteMatrix, ranking: Ranking, side: str) -> ExtinctionCurve:
    """Sequentially remove one side's nodes and track opposite-side extinction.

    Countries are removed best-first, products worst-first; the ranking is
    taken as-is and never recomputed.
    """
    if side not in (COUNTRY, PRODUCT):
        raise ValueError(f"side must be country or product, got {side!r}")
    if ranking.side != side:
        raise LabelMismatch(f"ranking is {ranking.side}-side, expected {side}")
    matrix_labels = m.labels(side)
    if sorted(ranking.ordered_ids) != sorted(matrix_labels):
        raise LabelMismatch("ranking labels differ from matrix labels")
    d, u = degrees(m)
    if (d == 0).any() or (u == 0).any():
        raise ZeroDegree("extinction requires a matrix without isolated nodes")
    order = ranking.ordered_ids if side == COUNTRY else tuple(reversed(ranking.ordered_ids))
    index = {lab: i for i, lab in enumerate(matrix_labels)}
    k = len(order)
    position = np.empty(k, dtype=np.int64)
    for step, lab in enumerate(order, start=1):
        position[index[lab]] = step
    if side == COUNTRY:
        extinct_at = (m.entries * position[:, None]).max(axis=0)
        opposite = m.n_products
    else:
        extinct_at = (m.entries * position[None, :]).max(axis=1)
        opposite = m.n_countries
    counts = np.bincount(extinct_at, minlength=k + 1)[1:]
    values = np.cumsum(counts) / opposite
    return ExtinctionCurve(side_removed=side, values=values)


def extinction_area(curve: ExtinctionCurve) -> float:
    """Area under the step curve on the unit interval (right-endpoint rule)."""
    return float(curve.values.mean())


def _permute_ties(ranking: Ranking, rng: np.random.Generator) -> Ranking:
    ids = list(ranking.ordered_ids)
    for group in ranking.tie_groups:
        if len(group) > 1:
            members = [ids[p] for p in group]
            for p, j in zip(group, rng.permutation(len(group))):
                ids[p] = members[j]
    return Ranking(tuple(ids), ranking.tie_groups, ranking.source_scores, ranking.direction)


def extinction_area_tie_averaged(
    m: BipartiteMatrix,
    scores: ScoreVector,
    side: str,
    trials: int = 100,
    seed=0,
    direction: str = HIGH,
) -> float:
    """Mean extinction area over uniformly randomized tie orders.

    With no ties every trial is identical and a single run is returned.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    base = ranking_from_scores(scores, direction)
    if not base.has_ties:
        return extinction_area(extinction_curve(m, base, side))
    rng = np.random.default_rng(seed)
    areas = [
        extinction_area(extinction_curve(m, _permute_ties(base, rng), side))
        for _ in range(trials)
    ]
    return float(np.mean(areas))


# -- noise and volatility ------------------------------------------------------


def flip_noise(m: BipartiteMatrix, eta: float, seed=0) -> BipartiteMatrix:
    """Invert exactly round(eta*N*M) distinct cells chosen uniformly.

    Pure perturbation: isolated nodes are NOT dropped here, so flipping the
    same cells twice restores the matrix and eta=1 yields the complement.
    """
    if not 0.0 <= eta <= 1.0:
        raise ValueError("eta must lie in [0, 1]")
    cells = m.n_countries * m.n_products
    count = int(round(eta * cells))
    if count == 0:
        return m
    rng = np.random.default_rng(seed)
    chosen = rng.choice(cells, size=count, replace=False)
    entries = m.entries.copy()
    entries.flat[chosen] ^= 1
    return BipartiteMatrix(m.country_labels, m.product_labels, entries, m.year)


def _shared_rho(
    original: RankResult, perturbed: RankResult, side: str, base_labels: tuple[str, ...],
    new_labels: tuple[str, ...],
) -> tuple[float, int, str]:
    """Spearman between two score sets restricted to shared labels."""
    new_set = set(new_labels)
    shared = [lab for lab in base_labels if lab in new_set]
    if not shared:
        raise EmptyIntersection(f"no shared {side} labels")
    try:
        rho = spearman(
            original.scores(side).subset(shared), perturbed.scores(side).subset(shared)
        )
        return rho, len(shared), ""
    except DegenerateInput as exc:
        return math.nan, len(shared), f"degenerate: {exc}"


def noise_robustness(
    m: BipartiteMatrix,
    config: MethodConfig,
    eta,
    seeds: Sequence[int],
) -> "EvaluationReport":
    """Flip a fraction of cells, re-rank, and correlate against the original.

    ``eta`` may be a single fraction or a sequence of fractions; scores are
    compared on the labels surviving on both sides of the flip (flipping can
    orphan nodes, which are then dropped before re-ranking).
    """
    etas = tuple(eta) if isinstance(eta, (list, tuple)) else (float(eta),)
    seeds = tuple(int(s) for s in seeds)
    if not seeds:
        raise ValueError("need at least one seed")
    base = rank_matrix(m, config)
    columns = ("side", "eta", "seed", "n_shared", "rho", "note")
    rows = []
    sums: dict[tuple[str, float], list[float]] = {}
    for eta_value in etas:
        for seed in seeds:
            flipped = flip_noise(m, eta_value, seed)
            surviving, _ = drop_isolated(flipped)
            perturbed = rank_matrix(surviving, config)
            for side, base_labels, new_labels in (
                (COUNTRY, m.country_labels, surviving.country_labels),
                (PRODUCT, m.product_labels, surviving.product_labels),
            ):
                rho, n_shared, note = _shared_rho(base, perturbed, side, base_labels, new_labels)
                rows.append((side, eta_value, seed, n_shared, rho, note))
                if not math.isnan(rho):
                    sums.setdefault((side, eta_value), []).append(rho)
    summary = []
    for eta_value in etas:
        for side in (COUNTRY, PRODUCT):
            values = sums.get((side, eta_value), [])
            mean = float(np.mean(values)) if values else math.nan
            summary.append((f"rho_{side}_mean[eta={eta_value:g}]", mean))
    return EvaluationReport(
        kind="noise",
        method_tag=config.method_tag(),
        parameters=(
            ("eta", ",".join(f"{e:g}" for e in etas)),
            ("seeds", ",".join(str(s) for s in seeds)),
        ),
        columns=columns,
        rows=tuple(rows),
        summary=tuple(summary),
    )


def volatility(m_a: BipartiteMatrix, m_b: BipartiteMatrix, config: MethodConfig) -> "EvaluationReport":
    """Correlate rankings of two (typically consecutive-year) matrices.

    Computed on the intersection of each side's label sets.
    """
    res_a = rank_matrix(m_a, config)
    res_b = rank_matrix(m_b, config)
    columns = ("side", "n_shared", "rho", "note")
    rows = []
    summary = []
    for side, labels_a, labels_b in (
        (COUNTRY, m_a.country_labels, m_b.country_labels),
        (PRODUCT, m_a.product_labels, m_b.product_labels),
    ):
        rho, n_shared, note = _shared_rho(res_a, res_b, side, labels_a, labels_b)
        rows.append((side, n_shared, rho, note))
        summary.append((f"rho_{side}", rho))
    return EvaluationReport(
        kind="volatility",
        method_tag=config.method_tag(),
        parameters=(
            ("year_a", str(m_a.year)),
            ("year_b", str(m_b.year)),
        ),
        columns=columns,
        rows=tuple(rows),
        summary=tuple(summary),
    )


def correlation_report(m: BipartiteMatrix, config: MethodConfig) -> "EvaluationReport":
    """Spearman correlation of each side's scores against its plain degree."""
    result = rank_matrix(m, config)
    d, u = degrees(m)
    columns = ("side", "statistic", "rho", "note")
    rows = []
    summary = []
    for side, degree_values in ((COUNTRY, d), (PRODUCT, u)):
        try:
            rho = spearman(result.scores(side).values, degree_values.astype(np.float64))
            note = ""
        except DegenerateInput as exc:
            rho, note = math.nan, f"degenerate: {exc}"
        rows.append((side, "rho_score_degree", rho, note))
        summary.append((f"rho_{side}_degree", rho))
    return EvaluationReport(
        kind="correlation",
        method_tag=config.method_tag(),
        parameters=(),
        columns=columns,
        rows=tuple(rows),
        summary=tuple(summary),
    )


def extinction_report(
    m: BipartiteMatrix,
    config: MethodConfig,
    sides: Iterable[str] = (COUNTRY, PRODUCT),
    trials: int = 100,
    seed: int = 0,
) -> tuple["EvaluationReport", dict[str, ExtinctionCurve]]:
    """Tie-averaged extinction areas for the configured method.

    Also returns the deterministic-order curves for plotting.
    """
    result = rank_matrix(m, config)
    columns = ("side", "trials", "area")
    rows = []
    summary = []
    curves: dict[str, ExtinctionCurve] = {}
    for side in sides:
        scores = result.scores(side)
        direction = result.ranking(side).direction
        area = extinction_area_tie_averaged(m, scores, side, trials=trials, seed=seed, direction=direction)
        curves[side] = extinction_curve(m, result.ranking(side), side)
        rows.append((side, trials, area))
        summary.append(("E_C" if side == COUNTRY else "E_P", area))
    return (
        EvaluationReport(
            kind="extinction",
            method_tag=config.method_tag(),
            parameters=(("trials", str(trials)), ("seed", str(seed))),
            columns=columns,
            rows=tuple(rows),
            summary=tuple(summary),
        ),
        curves,
    )


# -- report object and serialization -------------------------------------------


def _format_cell(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    """One experiment's output: a parameter block, a row table, a summary."""

    kind: str
    method_tag: str
    parameters: tuple[tuple[str, str], ...]
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]
    summary: tuple[tuple[str, float], ...]

    def to_table(self) -> str:
        lines = [
            "#ecorank-report v1",
            f"# experiment={self.kind}",
            f"# method={self.method_tag}",
        ]
        for key, value in self.parameters:
            lines.append(f"# {key}={value}")
        lines.append("\t".join(self.columns))
        for row in self.rows:
            lines.append("\t".join(_format_cell(cell) for cell in row))
        for key, value in self.summary:
            lines.append(f"# summary {key}={_format_cell(value)}")
        return "\n".join(lines) + "\n"

    def to_kv(self) -> str:
        doc = {
            "format": "ecorank-report/v1",
            "experiment": self.kind,
            "method": self.method_tag,
            "parameters": dict(self.parameters),
            "columns": list(self.columns),
            "rows": [list(row) for row in self.rows],
            "summary": dict(self.summary),
        }
        return json.dumps(doc, indent=2, allow_nan=True) + "\n"

    def summary_value(self, key: str) -> float:
        for k, v in self.summary:
            if k == key:
                return v
        raise KeyError(key)

    def write(self, path: str | Path) -> tuple[Path, Path]:
        """Write the table to <path> and the key-value document to <path>.json."""
        path = Path(path)
        path.write_text(self.to_table(), encoding="utf-8")
        kv_path = path.with_name(path.name + ".json")
        kv_path.write_text(self.to_kv(), encoding="utf-8")
        return path, kv_path


def report_stem(kind: str, config: MethodConfig, extra: str = "") -> str:
    """File-name stem following <experiment>_<method>_<params>."""
    if config.method == "mr":
        method = f"mr-n{config.order}"
    else:
        method = f"fcm-g{config.gamma:g}-I{config.iterations}"
    parts = [kind, method]
    if extra:
        parts.append(extra)
    return "_".join(parts)
