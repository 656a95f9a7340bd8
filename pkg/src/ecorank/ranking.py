"""Method of reflections and the generalized fitness-complexity iteration.

Both methods consume only the binary incidence matrix.  Updates are
simultaneous (Jacobi-style): step n uses step n-1 values on both sides.
"""

from __future__ import annotations

import re
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    COUNTRY,
    HIGH,
    LOW,
    PRODUCT,
    BipartiteMatrix,
    MethodConfig,
    Ranking,
    ScoreVector,
    ranking_from_scores,
)
from .errors import (
    CondensationWarning,
    DegenerateScores,
    LabelMismatch,
    NonPositiveGamma,
    ParseError,
    ZeroDegree,
)

#: Below this extremality value the iteration tends to condense all score
#: onto one country-product pair.
CONDENSATION_GAMMA = 0.6


def _require_positive_degrees(m: BipartiteMatrix) -> tuple[np.ndarray, np.ndarray]:
    d = m.diversification()
    u = m.ubiquity()
    if (d == 0).any() or (u == 0).any():
        raise ZeroDegree("matrix has zero-degree nodes; apply drop_isolated first")
    return d, u


@dataclass(frozen=True, eq=False)
class MrTrajectory:
    """Reflection scores d^(0..n_max) and u^(0..n_max) for one matrix.

    Row n of each array holds the order-n scores; odd orders are stored
    because the recursion needs them, but only even orders are meant to
    be read off as rankings.
    """

    country_labels: tuple[str, ...]
    product_labels: tuple[str, ...]
    country_scores_by_order: np.ndarray
    product_scores_by_order: np.ndarray

    @property
    def n_max(self) -> int:
        return self.country_scores_by_order.shape[0] - 1

    def _check_order(self, n: int) -> None:
        if n < 0 or n > self.n_max:
            raise ValueError(f"order {n} outside computed range 0..{self.n_max}")
        if n % 2 != 0:
            raise ValueError("only even orders are exposed as scores")

    def country_scores(self, n: int) -> ScoreVector:
        self._check_order(n)
        return ScoreVector(
            COUNTRY, self.country_labels, self.country_scores_by_order[n], f"mr(order={n})"
        )

    def product_scores(self, n: int) -> ScoreVector:
        self._check_order(n)
        return ScoreVector(
            PRODUCT, self.product_labels, self.product_scores_by_order[n], f"mr(order={n})"
        )


def mr_iterate(m: BipartiteMatrix, n_max: int) -> MrTrajectory:
    """Run the method of reflections up to order n_max (even).

    d^(n) = (1/d) M u^(n-1) and u^(n) = (1/u) M^T d^(n-1), starting from
    the plain degrees.
    """
    if n_max < 0 or n_max % 2 != 0:
        raise ValueError("n_max must be an even integer >= 0")
    d, u = _require_positive_degrees(m)
    e = m.entries.astype(np.float64)
    et = e.T.copy()
    dd = np.empty((n_max + 1, m.n_countries))
    uu = np.empty((n_max + 1, m.n_products))
    dd[0] = d
    uu[0] = u
    for n in range(1, n_max + 1):
        dd[n] = (e @ uu[n - 1]) / d
        uu[n] = (et @ dd[n - 1]) / u
    dd.flags.writeable = False
    uu.flags.writeable = False
    return MrTrajectory(m.country_labels, m.product_labels, dd, uu)


def eci(trajectory: MrTrajectory, n: int) -> ScoreVector:
    """Standardized order-n country score (zero mean, unit population std)."""
    raw = trajectory.country_scores(n).values
    std = raw.std()
    if std == 0.0:
        raise DegenerateScores(
            f"order-{n} scores are uniform (converged to the trivial fixed point)"
        )
    standardized = (raw - raw.mean()) / std
    return ScoreVector(COUNTRY, trajectory.country_labels, standardized, f"eci(n={n})")


def mr_product_ranking(trajectory: MrTrajectory, n: int) -> Ranking:
    """Products ranked by increasing order-n ubiquity score."""
    return ranking_from_scores(trajectory.product_scores(n), LOW)


@dataclass(frozen=True, eq=False)
class FcmResult:
    """Fitness/complexity scores after a fixed number of iterations."""

    fitness: ScoreVector
    complexity: ScoreVector
    gamma: float
    iterations_run: int
    underflow_flag: bool
    condensation_warning: bool
    fitness_history: np.ndarray | None = None
    complexity_history: np.ndarray | None = None


def _complexity_update(et: np.ndarray, fitness: np.ndarray, gamma: float) -> np.ndarray:
    """One product-side update: [sum over exporters of F^-gamma]^(-1/gamma).

    gamma == 1 is computed in the literal reciprocal form, so the original
    fitness-complexity equations are recovered exactly.  Countries whose
    F^-gamma is not representable (zero or denormal-tiny fitness) send the
    complexity of every product they export to zero, which is the limit
    value of the expression.
    """
    with np.errstate(divide="ignore", over="ignore"):
        inv = 1.0 / fitness if gamma == 1.0 else fitness ** (-gamma)
    bad = ~np.isfinite(inv)
    if bad.any():
        inv = np.where(bad, 0.0, inv)
        s = et @ inv
        dead = (et @ bad.astype(np.float64)) > 0.0
        with np.errstate(divide="ignore", over="ignore"):
            q = 1.0 / s if gamma == 1.0 else s ** (-1.0 / gamma)
        return np.where(dead, 0.0, q)
    s = et @ inv
    with np.errstate(divide="ignore", over="ignore"):
        return 1.0 / s if gamma == 1.0 else s ** (-1.0 / gamma)


def fcm_scores(
    m: BipartiteMatrix,
    gamma: float = 1.0,
    iterations: int = 1000,
    *,
    tol: float | None = None,
    history: bool = False,
) -> FcmResult:
    """Generalized fitness-complexity scores after ``iterations`` steps.

    Starting from all-ones vectors, each step computes
    F~_i = sum_a M_ia Q_a and Q~_a = [sum_i M_ia F_i^-gamma]^(-1/gamma)
    from the previous step's values, then divides each side by its mean.

    The iteration count is fixed by default; pass ``tol`` to stop early
    once the max relative change of any score drops below it.

    ``underflow_flag`` is set when any score is rounded to zero (the run
    still completes); if a side collapses entirely the iteration stops at
    the last representable state.  ``condensation_warning`` flags
    gamma <= 0.6, where the condensed phase looms.
    """
    if not gamma > 0:
        raise NonPositiveGamma(f"gamma must be positive, got {gamma}")
    if iterations < 1:
        raise ValueError("iterations must be >= 1")
    _require_positive_degrees(m)
    gamma = float(gamma)
    condensed = gamma <= CONDENSATION_GAMMA
    if condensed:
        warnings.warn(
            f"gamma={gamma} <= {CONDENSATION_GAMMA}: scores may condense onto a "
            "single country-product pair",
            CondensationWarning,
            stacklevel=2,
        )
    e = m.entries.astype(np.float64)
    et = e.T.copy()
    fitness = np.ones(m.n_countries)
    complexity = np.ones(m.n_products)
    fit_hist = [fitness.copy()] if history else None
    com_hist = [complexity.copy()] if history else None
    underflow = False
    iterations_run = 0
    for _ in range(iterations):
        f_new = e @ complexity
        q_new = _complexity_update(et, fitness, gamma)
        f_mean = f_new.mean()
        q_mean = q_new.mean()
        if not (np.isfinite(f_mean) and np.isfinite(q_mean) and f_mean > 0 and q_mean > 0):
            # a whole side became unrepresentable: keep the last good state
            underflow = True
            break
        f_new /= f_mean
        q_new /= q_mean
        if not (np.isfinite(f_new).all() and np.isfinite(q_new).all()):
            underflow = True
            break
        if (f_new == 0.0).any() or (q_new == 0.0).any():
            underflow = True
        if tol is not None:
            with np.errstate(divide="ignore", invalid="ignore"):
                rel_f = np.abs(f_new - fitness) / np.abs(fitness)
                rel_q = np.abs(q_new - complexity) / np.abs(complexity)
            change = max(np.nanmax(rel_f, initial=0.0), np.nanmax(rel_q, initial=0.0))
        fitness, complexity = f_new, q_new
        iterations_run += 1
        if history:
            fit_hist.append(fitness.copy())
            com_hist.append(complexity.copy())
        if tol is not None and change < tol:
            break
    tag = f"fcm(gamma={gamma},iters={iterations})"
    result_hist_f = result_hist_q = None
    if history:
        result_hist_f = np.array(fit_hist)
        result_hist_q = np.array(com_hist)
        result_hist_f.flags.writeable = False
        result_hist_q.flags.writeable = False
    return FcmResult(
        fitness=ScoreVector(COUNTRY, m.country_labels, fitness, tag),
        complexity=ScoreVector(PRODUCT, m.product_labels, complexity, tag),
        gamma=gamma,
        iterations_run=iterations_run,
        underflow_flag=underflow,
        condensation_warning=condensed,
        fitness_history=result_hist_f,
        complexity_history=result_hist_q,
    )


def least_fit_exporter_score(m: BipartiteMatrix, fitness: ScoreVector) -> ScoreVector:
    """Per product, the minimum fitness among its exporting countries."""
    if fitness.side != COUNTRY:
        raise LabelMismatch("fitness must be a country-side score vector")
    values = fitness.subset(m.country_labels)
    if (m.ubiquity() == 0).any():
        raise ZeroDegree("products without exporters have no least-fit exporter")
    masked = np.where(m.entries.astype(bool), values[:, None], np.inf)
    mins = masked.min(axis=0)
    return ScoreVector(PRODUCT, m.product_labels, mins, f"lfe[{fitness.method_tag}]")


@dataclass(frozen=True, eq=False)
class RankResult:
    """Scores and rankings for both sides from one method run."""

    country_scores: ScoreVector
    product_scores: ScoreVector
    country_ranking: Ranking
    product_ranking: Ranking
    underflow_flag: bool = False
    condensation_warning: bool = False

    @property
    def country_direction(self) -> str:
        return self.country_ranking.direction

    @property
    def product_direction(self) -> str:
        return self.product_ranking.direction

    def scores(self, side: str) -> ScoreVector:
        return self.country_scores if side == COUNTRY else self.product_scores

    def ranking(self, side: str) -> Ranking:
        return self.country_ranking if side == COUNTRY else self.product_ranking


def rank_matrix(m: BipartiteMatrix, config: MethodConfig) -> RankResult:
    """Run the configured method and rank both sides.

    MR country/product scores are the raw order-n reflections (higher
    generalized diversification is better, lower generalized ubiquity is
    better); FCM scores are fitness and complexity, both high-is-good.
    """
    if config.method == "mr":
        trajectory = mr_iterate(m, config.order)
        c_scores = trajectory.country_scores(config.order)
        p_scores = trajectory.product_scores(config.order)
        return RankResult(
            country_scores=c_scores,
            product_scores=p_scores,
            country_ranking=ranking_from_scores(c_scores, HIGH),
            product_ranking=ranking_from_scores(p_scores, LOW),
        )
    result = fcm_scores(m, config.gamma, config.iterations)
    return RankResult(
        country_scores=result.fitness,
        product_scores=result.complexity,
        country_ranking=ranking_from_scores(result.fitness, HIGH),
        product_ranking=ranking_from_scores(result.complexity, HIGH),
        underflow_flag=result.underflow_flag,
        condensation_warning=result.condensation_warning,
    )


# -- score and ranking files ------------------------------------------------

SCORES_HEADER_PREFIX = "#ecorank-scores v1"
RANKING_HEADER_PREFIX = "#ecorank-ranking v1"

_SCORES_HEADER = re.compile(
    r"^#ecorank-scores v1 side=(country|product) direction=(high|low) method=(.*)$"
)
_SCORE_LINE = re.compile(r'^"([^"\t]+)"\t(\S+)$')


def scores_file_text(scores: ScoreVector, direction: str) -> str:
    lines = [
        f"{SCORES_HEADER_PREFIX} side={scores.side} direction={direction} "
        f"method={scores.method_tag}"
    ]
    for label, value in zip(scores.labels, scores.values):
        lines.append(f'"{label}"\t{float(value)!r}')
    return "\n".join(lines) + "\n"


def write_scores(scores: ScoreVector, direction: str, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(scores_file_text(scores, direction), encoding="utf-8")
    return path


def read_scores(path: str | Path) -> tuple[ScoreVector, str]:
    """Read a score file back; returns the vector and its ranking direction."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError("empty score file", line=1)
    match = _SCORES_HEADER.match(lines[0])
    if match is None:
        raise ParseError("missing or malformed '#ecorank-scores v1 ...' header", line=1)
    side, direction, tag = match.groups()
    labels: list[str] = []
    values: list[float] = []
    for lineno, raw in enumerate(lines[1:], start=2):
        if not raw.strip() or raw.startswith("#"):
            continue
        m = _SCORE_LINE.match(raw)
        if m is None:
            raise ParseError("expected '\"label\"<TAB><score>'", line=lineno)
        labels.append(m.group(1))
        try:
            values.append(float(m.group(2)))
        except ValueError:
            raise ParseError(f"bad score {m.group(2)!r}", line=lineno, column=2) from None
    return ScoreVector(side, tuple(labels), np.array(values), tag), direction


def ranking_file_text(ranking: Ranking) -> str:
    lines = [
        f"{RANKING_HEADER_PREFIX} side={ranking.side} direction={ranking.direction} "
        f"method={ranking.source_scores.method_tag}"
    ]
    for group_index, group in enumerate(ranking.tie_groups):
        for pos in group:
            lines.append(f'{group_index}\t"{ranking.ordered_ids[pos]}"')
    return "\n".join(lines) + "\n"


def write_ranking(ranking: Ranking, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(ranking_file_text(ranking), encoding="utf-8")
    return path
