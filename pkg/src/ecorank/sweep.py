"""Parameter sweeps over gamma (FCM) or order (MR).

Produces a long-format table, one row per (parameter value, statistic),
ready for external plotting.  Rows are sorted by parameter so results do
not depend on execution order, and all randomness is derived from the
base seed and the grid position, never from completion order.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import COUNTRY, PRODUCT, BipartiteMatrix, MethodConfig, degrees
from .errors import DegenerateInput
from .evaluation import (
    extinction_area_tie_averaged,
    noise_robustness,
    spearman,
    volatility,
)
from .ranking import least_fit_exporter_score, rank_matrix

SWEEP_COLUMNS = ("method", "parameter", "value", "experiment", "side", "statistic", "qualifier", "result")

EXPERIMENTS = ("extinction", "correlation", "noise", "volatility")


@dataclass(frozen=True)
class SweepRow:
    method: str
    parameter: str
    value: float
    experiment: str
    side: str
    statistic: str
    qualifier: str
    result: float

    def cells(self) -> tuple[str, ...]:
        value = repr(int(self.value)) if self.parameter == "order" else repr(float(self.value))
        return (
            self.method,
            self.parameter,
            value,
            self.experiment,
            self.side,
            self.statistic,
            self.qualifier,
            repr(float(self.result)),
        )


def _config_for(method: str, value: float, iterations: int) -> MethodConfig:
    if method == "mr":
        return MethodConfig.mr(int(value))
    return MethodConfig.fcm(float(value), iterations)


def _seed_for(base_seed: int, grid_index: int, stream: int) -> np.random.SeedSequence:
    return np.random.SeedSequence((int(base_seed), int(grid_index), int(stream)))


def run_sweep(
    m: BipartiteMatrix,
    method: str,
    grid: Sequence[float],
    experiments: Sequence[str],
    *,
    iterations: int = 1000,
    trials: int = 100,
    seed: int = 0,
    etas: Sequence[float] = (0.01, 0.05, 0.1),
    noise_seeds: int = 5,
    matrix_b: BipartiteMatrix | None = None,
) -> tuple[SweepRow, ...]:
    """Evaluate the chosen experiments at every grid point.

    ``extinction`` reports tie-averaged areas for both sides;
    ``correlation`` the score-degree correlations (plus, for the FCM, the
    product-score correlation with the least-fit-exporter fitness);
    ``noise`` the mean before/after correlation per eta; ``volatility``
    (requires ``matrix_b``) the cross-matrix correlation.
    """
    if method not in ("mr", "fcm"):
        raise ValueError(f"method must be mr or fcm, got {method!r}")
    if not grid:
        raise ValueError("parameter grid must be non-empty")
    experiments = tuple(experiments)
    for exp in experiments:
        if exp not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {exp!r}")
    if "volatility" in experiments and matrix_b is None:
        raise ValueError("volatility sweep needs a second matrix")
    parameter = "order" if method == "mr" else "gamma"
    rows: list[SweepRow] = []
    d, u = degrees(m)
    for grid_index, value in enumerate(sorted(grid)):
        config = _config_for(method, value, iterations)
        result = rank_matrix(m, config)
        if "extinction" in experiments:
            for stream, side in enumerate((COUNTRY, PRODUCT)):
                area = extinction_area_tie_averaged(
                    m,
                    result.scores(side),
                    side,
                    trials=trials,
                    seed=_seed_for(seed, grid_index, stream),
                    direction=result.ranking(side).direction,
                )
                rows.append(
                    SweepRow(method, parameter, value, "extinction", side,
                             "E_C" if side == COUNTRY else "E_P", "", area)
                )
        if "correlation" in experiments:
            for side, degree_values in ((COUNTRY, d), (PRODUCT, u)):
                try:
                    rho = spearman(result.scores(side).values, degree_values.astype(np.float64))
                except DegenerateInput:
                    rho = float("nan")
                rows.append(
                    SweepRow(method, parameter, value, "correlation", side,
                             "rho_score_degree", "", rho)
                )
            if method == "fcm":
                lfe = least_fit_exporter_score(m, result.country_scores)
                try:
                    rho = spearman(result.product_scores.values, lfe.values)
                except DegenerateInput:
                    rho = float("nan")
                rows.append(
                    SweepRow(method, parameter, value, "correlation", PRODUCT,
                             "rho_score_lfe", "", rho)
                )
        if "noise" in experiments:
            noise_seed_values = _seed_for(seed, grid_index, 2).generate_state(noise_seeds).tolist()
            report = noise_robustness(m, config, tuple(etas), noise_seed_values)
            for eta in etas:
                for side in (COUNTRY, PRODUCT):
                    mean = report.summary_value(f"rho_{side}_mean[eta={eta:g}]")
                    rows.append(
                        SweepRow(method, parameter, value, "noise", side,
                                 "rho_mean", f"eta={eta:g}", mean)
                    )
        if "volatility" in experiments:
            report = volatility(m, matrix_b, config)
            for side in (COUNTRY, PRODUCT):
                rows.append(
                    SweepRow(method, parameter, value, "volatility", side,
                             "rho", "", report.summary_value(f"rho_{side}"))
                )
    rows.sort(key=lambda r: (r.value, r.experiment, r.side, r.statistic, r.qualifier))
    return tuple(rows)


def sweep_table_text(rows: Sequence[SweepRow]) -> str:
    lines = ["#ecorank-sweep v1", "\t".join(SWEEP_COLUMNS)]
    for row in rows:
        lines.append("\t".join(row.cells()))
    return "\n".join(lines) + "\n"


def write_sweep_table(rows: Sequence[SweepRow], path: str | Path) -> Path:
    path = Path(path)
    path.write_text(sweep_table_text(rows), encoding="utf-8")
    return path


def parse_grid(spec: str, method: str) -> tuple[float, ...]:
    """Grid syntax: 'a,b,c' or 'start:stop:step' (inclusive endpoints)."""
    spec = spec.strip()
    if ":" in spec:
        parts = spec.split(":")
        if len(parts) != 3:
            raise ValueError("range grid must be start:stop:step")
        start, stop, step = (float(p) for p in parts)
        if step <= 0 or stop < start:
            raise ValueError("grid needs step > 0 and stop >= start")
        count = int(round((stop - start) / step))
        values = [start + k * step for k in range(count + 1)]
        values = [v for v in values if v <= stop + 1e-9]
    else:
        values = [float(p) for p in spec.split(",") if p.strip()]
    if not values:
        raise ValueError("empty parameter grid")
    if method == "mr":
        orders = []
        for v in values:
            if v != int(v) or int(v) % 2 != 0 or v < 0:
                raise ValueError(f"MR grid values must be even non-negative integers, got {v:g}")
            orders.append(float(int(v)))
        return tuple(orders)
    return tuple(values)
