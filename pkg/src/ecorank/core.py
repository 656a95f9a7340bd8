"""Data model for binary country-product networks.

This module owns the incidence matrix, score vectors and rankings shared
by ingestion, ranking and evaluation, plus deterministic permutation
utilities and the canonical on-disk formats (edge-list matrix files and
PBM bitmaps).

All types are immutable after construction (arrays are marked read-only)
and safe to share between concurrent tasks; every operation here is a
pure function.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import EmptyNetwork, LabelMismatch, NonPositiveGamma, ParseError

COUNTRY = "country"
PRODUCT = "product"
SIDES = (COUNTRY, PRODUCT)

#: Ranking direction: high score is good (fitness, diversification, ...).
HIGH = "high"
#: Ranking direction: low score is good (ubiquity-like product scores).
LOW = "low"
DIRECTIONS = (HIGH, LOW)

MATRIX_FORMAT_VERSION = "v1"
_MATRIX_HEADER = re.compile(r"^#ecorank-matrix v1 year=(none|-?\d+)$")
_EDGE_LINE = re.compile(r'^"([^"\t]+)"\t"([^"\t]+)"$')
_FORBIDDEN_LABEL_CHARS = ('"', "\t", "\n", "\r")


def _check_labels(labels: Sequence[str], what: str) -> tuple[str, ...]:
    labels = tuple(labels)
    if not labels:
        raise ValueError(f"{what} labels must be non-empty")
    seen = set()
    for lab in labels:
        if not isinstance(lab, str) or not lab:
            raise ValueError(f"{what} labels must be non-empty strings, got {lab!r}")
        if any(ch in lab for ch in _FORBIDDEN_LABEL_CHARS):
            raise ValueError(f"{what} label {lab!r} contains a forbidden character")
        if lab in seen:
            raise ValueError(f"duplicate {what} label {lab!r}")
        seen.add(lab)
    return labels


def _frozen(a: np.ndarray) -> np.ndarray:
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class BipartiteMatrix:
    """Binary country x product incidence matrix with labelled axes.

    ``entries[i, a]`` is 1 when country ``i`` exports product ``a``.
    Stored dense (uint8) with labels in fixed order; the representation
    is an internal choice, not part of any file contract.
    """

    country_labels: tuple[str, ...]
    product_labels: tuple[str, ...]
    entries: np.ndarray
    year: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "country_labels", _check_labels(self.country_labels, COUNTRY))
        object.__setattr__(self, "product_labels", _check_labels(self.product_labels, PRODUCT))
        entries = np.asarray(self.entries)
        shape = (len(self.country_labels), len(self.product_labels))
        if entries.shape != shape:
            raise ValueError(f"entries shape {entries.shape} does not match labels {shape}")
        if entries.dtype != np.uint8:
            if not np.isin(entries, (0, 1)).all():
                raise ValueError("entries must be exactly 0 or 1")
            entries = entries.astype(np.uint8)
        elif entries.max(initial=0) > 1:
            raise ValueError("entries must be exactly 0 or 1")
        else:
            entries = entries.copy()
        object.__setattr__(self, "entries", _frozen(entries))
        if self.year is not None and not isinstance(self.year, int):
            raise ValueError("year must be an int or None")

    @property
    def n_countries(self) -> int:
        return len(self.country_labels)

    @property
    def n_products(self) -> int:
        return len(self.product_labels)

    def labels(self, side: str) -> tuple[str, ...]:
        _check_side(side)
        return self.country_labels if side == COUNTRY else self.product_labels

    def diversification(self) -> np.ndarray:
        return self.entries.sum(axis=1, dtype=np.int64)

    def ubiquity(self) -> np.ndarray:
        return self.entries.sum(axis=0, dtype=np.int64)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BipartiteMatrix):
            return NotImplemented
        return (
            self.country_labels == other.country_labels
            and self.product_labels == other.product_labels
            and self.year == other.year
            and np.array_equal(self.entries, other.entries)
        )

    def __repr__(self) -> str:
        return (
            f"BipartiteMatrix({self.n_countries}x{self.n_products}, "
            f"links={int(self.entries.sum())}, year={self.year})"
        )


def _check_side(side: str) -> None:
    if side not in SIDES:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")


def _check_direction(direction: str) -> None:
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")


@dataclass(frozen=True, eq=False)
class ScoreVector:
    """One real score per node of one side, in that side's label order."""

    side: str
    labels: tuple[str, ...]
    values: np.ndarray
    method_tag: str = ""

    def __post_init__(self):
        _check_side(self.side)
        object.__setattr__(self, "labels", _check_labels(self.labels, self.side))
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.labels),):
            raise ValueError("values length does not match labels")
        if not np.isfinite(values).all():
            raise ValueError("scores must all be finite")
        object.__setattr__(self, "values", _frozen(values.copy()))

    def __len__(self) -> int:
        return len(self.labels)

    def subset(self, labels: Iterable[str]) -> np.ndarray:
        """Values for the given labels, in the given order."""
        index = {lab: i for i, lab in enumerate(self.labels)}
        try:
            rows = [index[lab] for lab in labels]
        except KeyError as exc:
            raise LabelMismatch(f"label {exc.args[0]!r} not covered by this score vector") from None
        return self.values[rows]

    def __eq__(self, other) -> bool:
        if not isinstance(other, ScoreVector):
            return NotImplemented
        return (
            self.side == other.side
            and self.labels == other.labels
            and self.method_tag == other.method_tag
            and np.array_equal(self.values, other.values)
        )


@dataclass(frozen=True, eq=False)
class Ranking:
    """Deterministic best-first ordering of one side's nodes.

    ``tie_groups`` partitions positions ``0..n-1`` into maximal runs of
    exactly equal score, so evaluators can randomize ties explicitly
    while the default order stays reproducible (label order inside a
    tie group).
    """

    ordered_ids: tuple[str, ...]
    tie_groups: tuple[tuple[int, ...], ...]
    source_scores: ScoreVector
    direction: str

    def __post_init__(self):
        _check_direction(self.direction)
        object.__setattr__(self, "ordered_ids", tuple(self.ordered_ids))
        object.__setattr__(self, "tie_groups", tuple(tuple(g) for g in self.tie_groups))
        labels = self.source_scores.labels
        if sorted(self.ordered_ids) != sorted(labels):
            raise ValueError("ordered_ids is not a permutation of the score labels")
        value_of = dict(zip(labels, self.source_scores.values))
        ordered = [value_of[lab] for lab in self.ordered_ids]
        sign = -1.0 if self.direction == HIGH else 1.0
        pos = 0
        previous = None
        for group in self.tie_groups:
            if tuple(group) != tuple(range(pos, pos + len(group))):
                raise ValueError("tie_groups must partition positions consecutively")
            values = {ordered[p] for p in group}
            if len(values) != 1:
                raise ValueError("scores within a tie group must be exactly equal")
            current = values.pop()
            if previous is not None:
                if not sign * previous < sign * current:
                    raise ValueError("scores must be strictly ordered across tie groups")
            previous = current
            pos += len(group)
        if pos != len(self.ordered_ids):
            raise ValueError("tie_groups do not cover all positions")

    @property
    def side(self) -> str:
        return self.source_scores.side

    def __len__(self) -> int:
        return len(self.ordered_ids)

    @property
    def has_ties(self) -> bool:
        return any(len(g) > 1 for g in self.tie_groups)


@dataclass(frozen=True)
class MethodConfig:
    """Which ranking method to run and with which parameters."""

    method: str
    order: int | None = None
    gamma: float | None = None
    iterations: int | None = None
    rng_seed: int = 0
    rca_threshold: float = 1.0

    def __post_init__(self):
        if self.method == "mr":
            if self.order is None or self.order < 0 or self.order % 2 != 0:
                raise ValueError("method of reflections requires an even order >= 0")
        elif self.method == "fcm":
            if self.gamma is None or not math.isfinite(self.gamma) or self.gamma <= 0:
                raise NonPositiveGamma(f"gamma must be a positive real, got {self.gamma}")
            if self.iterations is None or self.iterations < 1:
                raise ValueError("fcm requires at least one iteration")
        else:
            raise ValueError(f"unknown method {self.method!r}")
        if not (math.isfinite(self.rca_threshold) and self.rca_threshold > 0):
            raise ValueError("rca_threshold must be positive")

    @classmethod
    def mr(cls, order: int, **kwargs) -> "MethodConfig":
        return cls(method="mr", order=order, **kwargs)

    @classmethod
    def fcm(cls, gamma: float, iterations: int = 1000, **kwargs) -> "MethodConfig":
        return cls(method="fcm", gamma=float(gamma), iterations=iterations, **kwargs)

    def method_tag(self) -> str:
        if self.method == "mr":
            return f"mr(order={self.order})"
        return f"fcm(gamma={self.gamma},iters={self.iterations})"


def degrees(m: BipartiteMatrix) -> tuple[np.ndarray, np.ndarray]:
    """Row sums (country diversification) and column sums (product ubiquity)."""
    return m.diversification(), m.ubiquity()


@dataclass(frozen=True)
class DropReport:
    """Labels removed by drop_isolated, in original label order."""

    removed_countries: tuple[str, ...]
    removed_products: tuple[str, ...]

    @property
    def empty(self) -> bool:
        return not (self.removed_countries or self.removed_products)


def drop_isolated(m: BipartiteMatrix) -> tuple[BipartiteMatrix, DropReport]:
    """Remove zero-degree rows and columns until none remain.

    Label order is preserved among survivors.  Raises EmptyNetwork when
    either side would be emptied.
    """
    entries = m.entries
    countries = list(m.country_labels)
    products = list(m.product_labels)
    removed_c: list[str] = []
    removed_p: list[str] = []
    while True:
        d = entries.sum(axis=1)
        u = entries.sum(axis=0)
        keep_rows = d > 0
        keep_cols = u > 0
        if keep_rows.all() and keep_cols.all():
            break
        if not keep_rows.any() or not keep_cols.any():
            raise EmptyNetwork("dropping isolated nodes removed the whole network")
        removed_c.extend(lab for lab, k in zip(countries, keep_rows) if not k)
        removed_p.extend(lab for lab, k in zip(products, keep_cols) if not k)
        countries = [lab for lab, k in zip(countries, keep_rows) if k]
        products = [lab for lab, k in zip(products, keep_cols) if k]
        entries = entries[np.ix_(keep_rows.nonzero()[0], keep_cols.nonzero()[0])]
    report = DropReport(tuple(removed_c), tuple(removed_p))
    if report.empty:
        return m, report
    return BipartiteMatrix(tuple(countries), tuple(products), entries, m.year), report


def ranking_from_scores(scores: ScoreVector, direction: str) -> Ranking:
    """Deterministic ranking: by score per direction, ties by label order.

    Ties remain visible as tie groups; any randomization over them is the
    caller's business (see the extinction-area evaluator).
    """
    _check_direction(direction)
    sign = -1.0 if direction == HIGH else 1.0
    values = scores.values
    labels = scores.labels
    idx = sorted(range(len(labels)), key=lambda i: (sign * values[i], labels[i]))
    ordered_ids = tuple(labels[i] for i in idx)
    groups: list[tuple[int, ...]] = []
    start = 0
    for pos in range(1, len(idx) + 1):
        if pos == len(idx) or values[idx[pos]] != values[idx[start]]:
            groups.append(tuple(range(start, pos)))
            start = pos
    return Ranking(ordered_ids, tuple(groups), scores, direction)


def sort_matrix(m: BipartiteMatrix, country_ranking: Ranking, product_ranking: Ranking) -> BipartiteMatrix:
    """Permute rows/columns best-first according to the two rankings."""
    if country_ranking.side != COUNTRY or product_ranking.side != PRODUCT:
        raise LabelMismatch("rankings must be country-side and product-side respectively")
    if sorted(country_ranking.ordered_ids) != sorted(m.country_labels):
        raise LabelMismatch("country ranking labels differ from matrix labels")
    if sorted(product_ranking.ordered_ids) != sorted(m.product_labels):
        raise LabelMismatch("product ranking labels differ from matrix labels")
    row_of = {lab: i for i, lab in enumerate(m.country_labels)}
    col_of = {lab: i for i, lab in enumerate(m.product_labels)}
    rows = [row_of[lab] for lab in country_ranking.ordered_ids]
    cols = [col_of[lab] for lab in product_ranking.ordered_ids]
    entries = m.entries[np.ix_(rows, cols)]
    return BipartiteMatrix(country_ranking.ordered_ids, product_ranking.ordered_ids, entries, m.year)


def is_connected(m: BipartiteMatrix) -> bool:
    """True when the bipartite graph is a single connected component."""
    e = m.entries.astype(bool)
    seen_c = np.zeros(m.n_countries, dtype=bool)
    seen_p = np.zeros(m.n_products, dtype=bool)
    seen_c[0] = True
    while True:
        new_p = e[seen_c].any(axis=0) & ~seen_p
        if not new_p.any():
            break
        seen_p |= new_p
        new_c = e[:, seen_p].any(axis=1) & ~seen_c
        if not new_c.any():
            break
        seen_c |= new_c
    return bool(seen_c.all() and seen_p.all())


# -- canonical matrix file (edge list, version 1) -------------------------

def matrix_file_text(m: BipartiteMatrix) -> str:
    """Render the canonical edge-list file (one line per 1-entry)."""
    year = "none" if m.year is None else str(m.year)
    lines = [f"#ecorank-matrix {MATRIX_FORMAT_VERSION} year={year}"]
    rows, cols = np.nonzero(m.entries)
    for i, a in zip(rows, cols):
        lines.append(f'"{m.country_labels[i]}"\t"{m.product_labels[a]}"')
    return "\n".join(lines) + "\n"


def write_matrix(m: BipartiteMatrix, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(matrix_file_text(m), encoding="utf-8")
    return path


def read_matrix(path: str | Path) -> BipartiteMatrix:
    """Parse a canonical matrix file.

    Axis label order is normalized to lexicographic; by design the format
    cannot represent isolated nodes.
    """
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ParseError("empty matrix file", line=1)
    header = _MATRIX_HEADER.match(lines[0])
    if header is None:
        raise ParseError("missing or malformed '#ecorank-matrix v1 year=...' header", line=1)
    year = None if header.group(1) == "none" else int(header.group(1))
    edges: set[tuple[str, str]] = set()
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        match = _EDGE_LINE.match(raw)
        if match is None:
            raise ParseError("expected '\"country\"<TAB>\"product\"'", line=lineno)
        edges.add((match.group(1), match.group(2)))
    if not edges:
        raise EmptyNetwork(f"matrix file {path} contains no links")
    countries = sorted({c for c, _ in edges})
    products = sorted({p for _, p in edges})
    row_of = {lab: i for i, lab in enumerate(countries)}
    col_of = {lab: i for i, lab in enumerate(products)}
    entries = np.zeros((len(countries), len(products)), dtype=np.uint8)
    for c, p in edges:
        entries[row_of[c], col_of[p]] = 1
    return BipartiteMatrix(tuple(countries), tuple(products), entries, year)


# -- PBM bitmap export -----------------------------------------------------

def pbm_text(m: BipartiteMatrix) -> str:
    """Portable bitmap (P1) with one pixel per entry; rows are countries."""
    lines = ["P1", f"{m.n_products} {m.n_countries}"]
    for row in m.entries:
        tokens = row.astype(str)
        # keep PBM lines within the conventional 70-character limit
        for start in range(0, len(tokens), 35):
            lines.append(" ".join(tokens[start:start + 35]))
    return "\n".join(lines) + "\n"


def write_pbm(m: BipartiteMatrix, path: str | Path) -> Path:
    path = Path(path)
    path.write_text(pbm_text(m), encoding="utf-8")
    return path
