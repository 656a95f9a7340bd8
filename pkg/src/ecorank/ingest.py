"""Trade-record ingestion: parsing, cleaning rules, RCA, thresholding.

The pipeline is: parse the tab-separated trade file, apply the cleaning
rules (aggregate categories, gap-year products, trailing inactivity),
compute revealed comparative advantage for one year, then threshold into
the binary matrix.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .core import BipartiteMatrix, DropReport, drop_isolated
from .errors import EmptyYear, NegativeValue, ParseError


@dataclass(frozen=True)
class TradeRecord:
    """One (exporter, product, year, value) observation, value in kUSD."""

    exporter: str
    product: str
    year: int
    value: float

    def __post_init__(self):
        if self.value < 0:
            raise NegativeValue(f"negative trade value {self.value} for {self.exporter}/{self.product}")


@dataclass(frozen=True)
class ParseIssue:
    line: int
    column: int | None
    message: str


@dataclass(frozen=True)
class ParseResult:
    records: tuple[TradeRecord, ...]
    issues: tuple[ParseIssue, ...]


def _open_text(source) -> Iterable[str]:
    if isinstance(source, (str, Path)):
        return Path(source).read_text(encoding="utf-8").splitlines()
    if isinstance(source, bytes):
        return source.decode("utf-8").splitlines()
    if isinstance(source, io.IOBase) or hasattr(source, "read"):
        data = source.read()
        if isinstance(data, bytes):
            data = data.decode("utf-8")
        return data.splitlines()
    raise TypeError(f"cannot read trade records from {type(source).__name__}")


def parse_trade_records(
    source,
    *,
    strict: bool = True,
    delimiter: str = "\t",
    comment_prefix: str = "#",
) -> ParseResult:
    """Parse the 4-column trade file: exporter, product, year, value_kUSD.

    Comment and blank lines are skipped.  Records sharing the same
    (exporter, product, year) triple are summed.  In strict mode the first
    malformed line raises ParseError (NegativeValue for value < 0); in
    lenient mode offending lines are collected as issues and skipped.
    """
    totals: dict[tuple[str, str, int], float] = {}
    issues: list[ParseIssue] = []

    def complain(exc_type, message, line, column=None):
        if strict:
            raise exc_type(message, line=line, column=column)
        issues.append(ParseIssue(line, column, message))

    for lineno, raw in enumerate(_open_text(source), start=1):
        line = raw.strip()
        if not line or line.startswith(comment_prefix):
            continue
        fields = raw.rstrip("\n").split(delimiter)
        if len(fields) != 4:
            complain(ParseError, f"expected 4 fields, got {len(fields)}", lineno)
            continue
        exporter, product, year_text, value_text = (f.strip() for f in fields)
        if not exporter or not product:
            complain(ParseError, "empty exporter or product label", lineno, 1 if not exporter else 2)
            continue
        try:
            year = int(year_text)
        except ValueError:
            complain(ParseError, f"bad year {year_text!r}", lineno, 3)
            continue
        try:
            value = float(value_text)
        except ValueError:
            complain(ParseError, f"bad value {value_text!r}", lineno, 4)
            continue
        if not math.isfinite(value):
            complain(ParseError, f"non-finite value {value_text!r}", lineno, 4)
            continue
        if value < 0:
            complain(NegativeValue, f"negative value {value_text}", lineno, 4)
            continue
        totals[(exporter, product, year)] = totals.get((exporter, product, year), 0.0) + value
    records = tuple(TradeRecord(e, p, y, v) for (e, p, y), v in totals.items())
    return ParseResult(records, tuple(issues))


@dataclass(frozen=True)
class CleaningConfig:
    """Cleaning rules: aggregate labels, country whitelist, inactivity cutoff."""

    aggregate_products: frozenset[str] = frozenset()
    country_whitelist: frozenset[str] | None = None
    cutoff_year: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "aggregate_products", frozenset(self.aggregate_products))
        if self.country_whitelist is not None:
            object.__setattr__(self, "country_whitelist", frozenset(self.country_whitelist))


@dataclass(frozen=True)
class CleaningReport:
    """Removed labels per cleaning rule (sorted)."""

    whitelist_removed_countries: tuple[str, ...] = ()
    aggregate_removed_products: tuple[str, ...] = ()
    gap_removed_products: tuple[str, ...] = ()
    cutoff_removed_countries: tuple[str, ...] = ()
    cutoff_removed_products: tuple[str, ...] = ()

    def to_rows(self) -> list[tuple[str, str, int, str]]:
        return [
            ("country_whitelist", "country", len(self.whitelist_removed_countries),
             ",".join(self.whitelist_removed_countries)),
            ("aggregate_products", "product", len(self.aggregate_removed_products),
             ",".join(self.aggregate_removed_products)),
            ("gap_year_products", "product", len(self.gap_removed_products),
             ",".join(self.gap_removed_products)),
            ("inactive_after_cutoff", "country", len(self.cutoff_removed_countries),
             ",".join(self.cutoff_removed_countries)),
            ("inactive_after_cutoff", "product", len(self.cutoff_removed_products),
             ",".join(self.cutoff_removed_products)),
        ]


def _gap_products(records: Sequence[TradeRecord]) -> set[str]:
    """Products with a zero-total year sandwiched between nonzero-total years."""
    totals: dict[str, dict[int, float]] = {}
    for r in records:
        by_year = totals.setdefault(r.product, {})
        by_year[r.year] = by_year.get(r.year, 0.0) + r.value
    gapped = set()
    for product, by_year in totals.items():
        active = sorted(y for y, v in by_year.items() if v > 0)
        if len(active) < 2:
            continue
        for year in range(active[0] + 1, active[-1]):
            if by_year.get(year, 0.0) == 0.0:
                if by_year.get(year - 1, 0.0) > 0 and by_year.get(year + 1, 0.0) > 0:
                    gapped.add(product)
                    break
    return gapped


def _inactive(records: Sequence[TradeRecord], attr: str, cutoff: int) -> set[str]:
    last_active: dict[str, int] = {}
    labels = set()
    for r in records:
        lab = getattr(r, attr)
        labels.add(lab)
        if r.value > 0:
            last_active[lab] = max(last_active.get(lab, r.year), r.year)
    return {lab for lab in labels if last_active.get(lab, -10**9) <= cutoff}


def clean_dataset(
    records: Sequence[TradeRecord], rules: CleaningConfig
) -> tuple[tuple[TradeRecord, ...], CleaningReport]:
    """Apply the cleaning rules; removal only, iterated to a fixed point.

    Rules: (0) drop exporters outside the whitelist; (a) drop aggregate
    product categories; (b) drop products whose total is zero in some year
    but nonzero in both adjacent years; (c) drop countries and products
    whose last nonzero year is at or before the cutoff.  Removing
    countries can create new gap years and vice versa, so (b) and (c) are
    reapplied until nothing changes, which makes the whole operation
    idempotent.
    """
    current = list(records)
    removed_whitelist: set[str] = set()
    removed_aggregate: set[str] = set()
    removed_gap: set[str] = set()
    removed_cutoff_c: set[str] = set()
    removed_cutoff_p: set[str] = set()

    if rules.country_whitelist is not None:
        removed_whitelist = {r.exporter for r in current} - rules.country_whitelist
        current = [r for r in current if r.exporter not in removed_whitelist]
    if rules.aggregate_products:
        removed_aggregate = {r.product for r in current} & rules.aggregate_products
        current = [r for r in current if r.product not in removed_aggregate]

    while True:
        changed = False
        gapped = _gap_products(current)
        if gapped:
            removed_gap |= gapped
            current = [r for r in current if r.product not in gapped]
            changed = True
        if rules.cutoff_year is not None:
            dead_c = _inactive(current, "exporter", rules.cutoff_year)
            if dead_c:
                removed_cutoff_c |= dead_c
                current = [r for r in current if r.exporter not in dead_c]
                changed = True
            dead_p = _inactive(current, "product", rules.cutoff_year)
            if dead_p:
                removed_cutoff_p |= dead_p
                current = [r for r in current if r.product not in dead_p]
                changed = True
        if not changed:
            break

    report = CleaningReport(
        whitelist_removed_countries=tuple(sorted(removed_whitelist)),
        aggregate_removed_products=tuple(sorted(removed_aggregate)),
        gap_removed_products=tuple(sorted(removed_gap)),
        cutoff_removed_countries=tuple(sorted(removed_cutoff_c)),
        cutoff_removed_products=tuple(sorted(removed_cutoff_p)),
    )
    return tuple(current), report


def restrict_countries(
    records: Sequence[TradeRecord], core: Iterable[str]
) -> tuple[TradeRecord, ...]:
    """Keep only records whose exporter belongs to the core list."""
    core = set(core)
    if not core:
        raise ValueError("core country list must be non-empty")
    return tuple(r for r in records if r.exporter in core)


@dataclass(frozen=True, eq=False)
class RcaMatrix:
    """Revealed comparative advantage values for one year."""

    country_labels: tuple[str, ...]
    product_labels: tuple[str, ...]
    values: np.ndarray
    year: int | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.shape != (len(self.country_labels), len(self.product_labels)):
            raise ValueError("values shape does not match labels")
        if not np.isfinite(values).all() or (values < 0).any():
            raise ValueError("RCA values must be finite and non-negative")
        values = values.copy()
        values.flags.writeable = False
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "country_labels", tuple(self.country_labels))
        object.__setattr__(self, "product_labels", tuple(self.product_labels))


@dataclass(frozen=True)
class RcaReport:
    """Countries/products that contributed no volume (all-zero RCA lines)."""

    zero_export_countries: tuple[str, ...] = ()
    zero_world_products: tuple[str, ...] = ()


def _dedupe(labels: Iterable[str]) -> tuple[str, ...]:
    seen: dict[str, None] = {}
    for lab in labels:
        seen.setdefault(lab, None)
    return tuple(seen)


def compute_rca(
    records: Sequence[TradeRecord],
    countries: Iterable[str],
    products: Iterable[str],
) -> tuple[RcaMatrix, RcaReport]:
    """RCA_ia = (e_ia / sum_b e_ib) / (sum_j e_ja / sum_jb e_jb).

    Records must belong to a single year; records outside the whitelists
    are ignored.  Zero-export rows and zero-world-total columns come out
    all-zero and are flagged in the report rather than raised.
    """
    countries = _dedupe(countries)
    products = _dedupe(products)
    if not countries or not products:
        raise ValueError("whitelists must be non-empty")
    years = {r.year for r in records}
    if len(years) > 1:
        raise ValueError(f"records span multiple years: {sorted(years)}")
    year = years.pop() if years else None
    row_of = {lab: i for i, lab in enumerate(countries)}
    col_of = {lab: i for i, lab in enumerate(products)}
    volumes = np.zeros((len(countries), len(products)))
    for r in records:
        i = row_of.get(r.exporter)
        a = col_of.get(r.product)
        if i is not None and a is not None:
            volumes[i, a] += r.value
    world = volumes.sum()
    if world == 0.0:
        raise EmptyYear("total world trade is zero for this year")
    country_totals = volumes.sum(axis=1)
    product_totals = volumes.sum(axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        shares = volumes / country_totals[:, None]
        world_shares = product_totals / world
        rca = shares / world_shares[None, :]
    rca = np.nan_to_num(rca, nan=0.0, posinf=0.0, neginf=0.0)
    report = RcaReport(
        zero_export_countries=tuple(lab for lab, t in zip(countries, country_totals) if t == 0.0),
        zero_world_products=tuple(lab for lab, t in zip(products, product_totals) if t == 0.0),
    )
    return RcaMatrix(countries, products, rca, year), report


def threshold_to_matrix(
    rca: RcaMatrix, threshold: float = 1.0
) -> tuple[BipartiteMatrix, DropReport]:
    """Link where RCA >= threshold, then drop isolated nodes.

    The boundary is inclusive (the conventional RCA >= 1 rule).
    """
    if not threshold > 0:
        raise ValueError("threshold must be positive")
    entries = (rca.values >= threshold).astype(np.uint8)
    matrix = BipartiteMatrix(rca.country_labels, rca.product_labels, entries, rca.year)
    return drop_isolated(matrix)


# -- cleaning config and report files ------------------------------------------

_SECTIONS = ("aggregate-products", "country-whitelist", "cutoff-year")


def read_cleaning_config(path: str | Path) -> CleaningConfig:
    """Plain-text config: [aggregate-products], [country-whitelist], [cutoff-year]."""
    aggregates: list[str] = []
    whitelist: list[str] = []
    cutoff: int | None = None
    has_whitelist = False
    section = None
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line.startswith("[") and line.endswith("]"):
            section = line[1:-1]
            if section not in _SECTIONS:
                raise ParseError(f"unknown section [{section}]", line=lineno)
            has_whitelist = has_whitelist or section == "country-whitelist"
            continue
        if section == "aggregate-products":
            aggregates.append(line)
        elif section == "country-whitelist":
            whitelist.append(line)
        elif section == "cutoff-year":
            if cutoff is not None:
                raise ParseError("cutoff-year given twice", line=lineno)
            try:
                cutoff = int(line)
            except ValueError:
                raise ParseError(f"bad cutoff year {line!r}", line=lineno) from None
        else:
            raise ParseError("content before any section header", line=lineno)
    return CleaningConfig(
        aggregate_products=frozenset(aggregates),
        country_whitelist=frozenset(whitelist) if has_whitelist else None,
        cutoff_year=cutoff,
    )


def read_label_list(path: str | Path) -> tuple[str, ...]:
    """One label per line; comments and blanks skipped."""
    labels = []
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if line and not line.startswith("#"):
            labels.append(line)
    return _dedupe(labels)


def cleaning_report_text(
    cleaning: CleaningReport,
    rca_report: RcaReport | None = None,
    drop_report: DropReport | None = None,
) -> str:
    lines = ["#ecorank-cleaning-report v1", "rule\tside\tcount\tlabels"]
    for rule, side, count, labels in cleaning.to_rows():
        lines.append(f"{rule}\t{side}\t{count}\t{labels}")
    if rca_report is not None:
        lines.append(
            "zero_export_rows\tcountry\t"
            f"{len(rca_report.zero_export_countries)}\t{','.join(rca_report.zero_export_countries)}"
        )
        lines.append(
            "zero_world_columns\tproduct\t"
            f"{len(rca_report.zero_world_products)}\t{','.join(rca_report.zero_world_products)}"
        )
    if drop_report is not None:
        lines.append(
            f"isolated_dropped\tcountry\t{len(drop_report.removed_countries)}\t"
            + ",".join(drop_report.removed_countries)
        )
        lines.append(
            f"isolated_dropped\tproduct\t{len(drop_report.removed_products)}\t"
            + ",".join(drop_report.removed_products)
        )
    return "\n".join(lines) + "\n"
