import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecorank import (
    CleaningConfig,
    EmptyNetwork,
    EmptyYear,
    NegativeValue,
    ParseError,
    TradeRecord,
    clean_dataset,
    compute_rca,
    parse_trade_records,
    restrict_countries,
    threshold_to_matrix,
)
from ecorank.ingest import read_cleaning_config, read_label_list, cleaning_report_text


def rec(exporter, product, year, value):
    return TradeRecord(exporter, product, year, value)


class TestParseTradeRecords:
    def test_single_line(self):
        result = parse_trade_records(io.StringIO("USA\t0011\t1996\t1250.5\n"))
        assert result.records == (TradeRecord("USA", "0011", 1996, 1250.5),)
        assert result.issues == ()

    def test_duplicate_triples_are_summed(self):
        text = "USA\t0011\t1996\t10\nUSA\t0011\t1996\t5\n"
        result = parse_trade_records(io.StringIO(text))
        assert result.records == (TradeRecord("USA", "0011", 1996, 15.0),)

    def test_empty_stream(self):
        assert parse_trade_records(io.StringIO("")).records == ()

    def test_comments_and_blank_lines_skipped(self):
        text = "# a comment\n\nUSA\t0011\t1996\t1\n"
        assert len(parse_trade_records(io.StringIO(text)).records) == 1

    def test_strict_mode_reports_line_number(self):
        text = "USA\t0011\t1996\t1\nUSA\t0011\tnot-a-year\t1\n"
        with pytest.raises(ParseError) as err:
            parse_trade_records(io.StringIO(text))
        assert err.value.line == 2
        assert err.value.column == 3

    def test_negative_value_strict(self):
        with pytest.raises(NegativeValue):
            parse_trade_records(io.StringIO("USA\t0011\t1996\t-4\n"))

    def test_lenient_mode_collects_issues(self):
        text = "USA\t0011\t1996\t1\nbroken line\nDEU\t0011\t1996\t-2\nDEU\t0022\t1996\t3\n"
        result = parse_trade_records(io.StringIO(text), strict=False)
        assert len(result.records) == 2
        assert [i.line for i in result.issues] == [2, 3]

    def test_reads_from_path(self, tmp_path):
        path = tmp_path / "t.tsv"
        path.write_text("USA\t0011\t1996\t1\n")
        assert len(parse_trade_records(path).records) == 1


class TestCleanDataset:
    def test_gap_year_product_removed(self):
        records = [rec("A", "x", 1995, 5), rec("A", "x", 1997, 3), rec("A", "y", 1995, 1),
                   rec("A", "y", 1996, 1), rec("A", "y", 1997, 1)]
        cleaned, report = clean_dataset(records, CleaningConfig())
        assert {r.product for r in cleaned} == {"y"}
        assert report.gap_removed_products == ("x",)

    def test_trailing_zero_kept_by_gap_rule_removed_by_cutoff(self):
        # totals (1995: 5, 1996: 0, 1997: 0): no following nonzero year, so the
        # gap rule keeps it; a cutoff >= 1996 removes it instead
        records = [rec("A", "x", 1995, 5), rec("A", "x", 1996, 0), rec("A", "x", 1997, 0),
                   rec("A", "keep", 1995, 1), rec("A", "keep", 1997, 1), rec("A", "keep", 1996, 1)]
        no_cutoff, report = clean_dataset(records, CleaningConfig())
        assert {r.product for r in no_cutoff} == {"x", "keep"}
        assert report.gap_removed_products == ()
        with_cutoff, report = clean_dataset(records, CleaningConfig(cutoff_year=1996))
        assert {r.product for r in with_cutoff} == {"keep"}
        assert report.cutoff_removed_products == ("x",)

    def test_empty_rules_change_nothing(self):
        records = [rec("A", "x", 1995, 5), rec("B", "y", 1996, 2)]
        cleaned, report = clean_dataset(records, CleaningConfig())
        assert set(cleaned) == set(records)
        assert report.gap_removed_products == ()

    def test_aggregate_categories_removed(self):
        records = [rec("A", "TOTAL", 1995, 100), rec("A", "x", 1995, 5)]
        cleaned, report = clean_dataset(
            records, CleaningConfig(aggregate_products=frozenset({"TOTAL"})))
        assert {r.product for r in cleaned} == {"x"}
        assert report.aggregate_removed_products == ("TOTAL",)

    def test_whitelist_restricts_exporters(self):
        records = [rec("A", "x", 1995, 5), rec("B", "x", 1995, 5)]
        cleaned, report = clean_dataset(
            records, CleaningConfig(country_whitelist=frozenset({"A"})))
        assert {r.exporter for r in cleaned} == {"A"}
        assert report.whitelist_removed_countries == ("B",)

    def test_cutoff_removes_inactive_country(self):
        records = [rec("OLD", "x", 1992, 5), rec("NEW", "x", 1995, 5)]
        cleaned, report = clean_dataset(records, CleaningConfig(cutoff_year=1993))
        assert {r.exporter for r in cleaned} == {"NEW"}
        assert report.cutoff_removed_countries == ("OLD",)

    def test_rules_interact_to_fixpoint(self):
        # dropping the inactive country zeroes product x's 1992 total, which
        # creates a gap year that a second pass of the gap rule must catch
        records = [
            rec("OLD", "x", 1992, 5),
            rec("A", "x", 1991, 3), rec("A", "x", 1993, 4),
            rec("A", "x", 1994, 1), rec("A", "x", 1995, 2),
            rec("A", "y", 1995, 1),
        ]
        untouched, _ = clean_dataset(records, CleaningConfig())
        assert {r.product for r in untouched} == {"x", "y"}
        cleaned, report = clean_dataset(records, CleaningConfig(cutoff_year=1993))
        assert report.cutoff_removed_countries == ("OLD",)
        assert report.gap_removed_products == ("x",)
        assert {r.product for r in cleaned} == {"y"}

    @settings(max_examples=40)
    @given(
        st.lists(
            st.tuples(
                st.sampled_from(["A", "B", "C"]),
                st.sampled_from(["x", "y", "z"]),
                st.integers(1994, 1999),
                st.floats(0, 100, allow_nan=False),
            ),
            max_size=30,
        ),
        st.integers(1993, 1998),
    )
    def test_idempotent(self, raw, cutoff):
        records = tuple(rec(*t) for t in raw)
        rules = CleaningConfig(aggregate_products=frozenset({"z"}), cutoff_year=cutoff)
        once, _ = clean_dataset(records, rules)
        twice, _ = clean_dataset(once, rules)
        assert set(once) == set(twice)


class TestRestrictCountries:
    def test_full_list_unchanged(self):
        records = (rec("A", "x", 1995, 1), rec("B", "x", 1995, 1))
        assert restrict_countries(records, ["A", "B"]) == records

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            restrict_countries((rec("A", "x", 1995, 1),), [])

    def test_subset(self):
        records = (rec("A", "x", 1995, 1), rec("B", "x", 1995, 1), rec("C", "y", 1995, 1))
        kept = restrict_countries(records, ["A", "B"])
        assert {r.exporter for r in kept} == {"A", "B"}


class TestComputeRca:
    def test_single_cell_is_one(self):
        rca, report = compute_rca([rec("A", "x", 1996, 7.0)], ["A"], ["x"])
        assert rca.values.tolist() == [[1.0]]
        assert report.zero_export_countries == ()

    def test_hand_worked_2x2(self):
        records = [rec("A", "x", 1996, 3), rec("A", "y", 1996, 1),
                   rec("B", "x", 1996, 1), rec("B", "y", 1996, 3)]
        rca, _ = compute_rca(records, ["A", "B"], ["x", "y"])
        np.testing.assert_allclose(rca.values, [[1.5, 0.5], [0.5, 1.5]], atol=1e-15)

    def test_rank_one_volumes_give_all_ones(self):
        rng = np.random.default_rng(0)
        a = rng.uniform(0.5, 4.0, 6)
        b = rng.uniform(0.5, 4.0, 9)
        countries = [f"c{i}" for i in range(6)]
        products = [f"p{j}" for j in range(9)]
        records = [rec(countries[i], products[j], 1996, a[i] * b[j])
                   for i in range(6) for j in range(9)]
        rca, _ = compute_rca(records, countries, products)
        np.testing.assert_allclose(rca.values, 1.0, rtol=1e-12)

    def test_zero_export_rows_flagged_not_raised(self):
        records = [rec("A", "x", 1996, 3)]
        rca, report = compute_rca(records, ["A", "B"], ["x"])
        assert report.zero_export_countries == ("B",)
        assert rca.values[1].tolist() == [0.0]

    def test_empty_year(self):
        with pytest.raises(EmptyYear):
            compute_rca([rec("A", "x", 1996, 0.0)], ["A"], ["x"])

    def test_mixed_years_rejected(self):
        with pytest.raises(ValueError):
            compute_rca([rec("A", "x", 1996, 1), rec("A", "x", 1997, 1)], ["A"], ["x"])

    @settings(max_examples=40)
    @given(st.floats(0.001, 1000.0, allow_nan=False))
    def test_scale_invariance(self, scale):
        records = [rec("A", "x", 1996, 3), rec("A", "y", 1996, 1),
                   rec("B", "x", 1996, 1), rec("B", "y", 1996, 3)]
        scaled = [rec(r.exporter, r.product, r.year, r.value * scale) for r in records]
        rca_base, _ = compute_rca(records, ["A", "B"], ["x", "y"])
        rca_scaled, _ = compute_rca(scaled, ["A", "B"], ["x", "y"])
        np.testing.assert_allclose(rca_scaled.values, rca_base.values, rtol=1e-12)


class TestThresholdToMatrix:
    def rca_2x2(self):
        records = [rec("A", "x", 1996, 3), rec("A", "y", 1996, 1),
                   rec("B", "x", 1996, 1), rec("B", "y", 1996, 3)]
        rca, _ = compute_rca(records, ["A", "B"], ["x", "y"])
        return rca

    def test_continues_rca_example(self):
        matrix, dropped = threshold_to_matrix(self.rca_2x2(), 1.0)
        assert matrix.entries.tolist() == [[1, 0], [0, 1]]
        assert dropped.empty

    def test_boundary_is_inclusive(self):
        records = [rec("A", "x", 1996, 2), rec("B", "x", 1996, 2)]
        rca, _ = compute_rca(records, ["A", "B"], ["x"])
        matrix, _ = threshold_to_matrix(rca, 1.0)
        assert matrix.entries.tolist() == [[1], [1]]

    def test_threshold_above_max_is_empty_network(self):
        with pytest.raises(EmptyNetwork):
            threshold_to_matrix(self.rca_2x2(), 100.0)

    def test_isolated_nodes_dropped_with_report(self):
        records = [rec("A", "x", 1996, 10), rec("A", "y", 1996, 1),
                   rec("B", "x", 1996, 1), rec("B", "y", 1996, 9)]
        rca, _ = compute_rca(records, ["A", "B", "C"], ["x", "y"])
        matrix, dropped = threshold_to_matrix(rca, 1.0)
        assert "C" in dropped.removed_countries
        assert matrix.country_labels == ("A", "B")

    @settings(max_examples=40)
    @given(st.floats(0.1, 3.0), st.floats(0.1, 3.0))
    def test_monotone_in_threshold(self, t1, t2):
        lo, hi = sorted((t1, t2))
        rca = self.rca_2x2()
        links = {}
        for t in (lo, hi):
            try:
                matrix, _ = threshold_to_matrix(rca, t)
                links[t] = {
                    (c, p)
                    for i, c in enumerate(matrix.country_labels)
                    for j, p in enumerate(matrix.product_labels)
                    if matrix.entries[i, j]
                }
            except EmptyNetwork:
                links[t] = set()
        assert links[hi] <= links[lo]


class TestConfigFiles:
    def test_cleaning_config_roundtrip(self, tmp_path):
        path = tmp_path / "clean.cfg"
        path.write_text(
            "# demo\n[aggregate-products]\nTOTAL\n0011\n"
            "[country-whitelist]\nUSA\nDEU\n[cutoff-year]\n1993\n"
        )
        config = read_cleaning_config(path)
        assert config.aggregate_products == frozenset({"TOTAL", "0011"})
        assert config.country_whitelist == frozenset({"USA", "DEU"})
        assert config.cutoff_year == 1993

    def test_missing_whitelist_section_means_none(self, tmp_path):
        path = tmp_path / "clean.cfg"
        path.write_text("[aggregate-products]\nTOTAL\n")
        config = read_cleaning_config(path)
        assert config.country_whitelist is None
        assert config.cutoff_year is None

    def test_unknown_section_rejected(self, tmp_path):
        path = tmp_path / "clean.cfg"
        path.write_text("[bogus]\nx\n")
        with pytest.raises(ParseError):
            read_cleaning_config(path)

    def test_label_list(self, tmp_path):
        path = tmp_path / "core.txt"
        path.write_text("# core\nUSA\nDEU\nUSA\n")
        assert read_label_list(path) == ("USA", "DEU")

    def test_cleaning_report_text(self):
        records = [rec("A", "TOTAL", 1995, 1), rec("A", "x", 1995, 1)]
        _, report = clean_dataset(records, CleaningConfig(aggregate_products=frozenset({"TOTAL"})))
        text = cleaning_report_text(report)
        assert text.splitlines()[0] == "#ecorank-cleaning-report v1"
        assert "aggregate_products\tproduct\t1\tTOTAL" in text
