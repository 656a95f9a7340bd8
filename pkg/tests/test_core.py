import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ecorank import (
    COUNTRY,
    HIGH,
    LOW,
    PRODUCT,
    BipartiteMatrix,
    EmptyNetwork,
    LabelMismatch,
    MethodConfig,
    NonPositiveGamma,
    ParseError,
    ScoreVector,
    degrees,
    drop_isolated,
    is_connected,
    ranking_from_scores,
    read_matrix,
    sort_matrix,
    write_matrix,
)
from ecorank.core import matrix_file_text, pbm_text
from ecorank.synth import perfectly_nested

from conftest import bm


binary_matrices = st.integers(1, 5).flatmap(
    lambda n: st.integers(1, 5).flatmap(
        lambda m: st.lists(
            st.lists(st.integers(0, 1), min_size=m, max_size=m),
            min_size=n,
            max_size=n,
        )
    )
)


class TestBipartiteMatrix:
    def test_rejects_non_binary(self):
        with pytest.raises(ValueError):
            bm([[2, 0], [0, 1]])

    def test_rejects_duplicate_labels(self):
        with pytest.raises(ValueError):
            BipartiteMatrix(("A", "A"), ("p1",), [[1], [1]])

    def test_rejects_forbidden_label_chars(self):
        with pytest.raises(ValueError):
            BipartiteMatrix(("A\tB",), ("p1",), [[1]])

    def test_entries_are_immutable(self, m22):
        with pytest.raises(ValueError):
            m22.entries[0, 0] = 0

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            BipartiteMatrix(("A",), ("p1", "p2"), [[1]])


class TestDegrees:
    def test_worked_2x2(self, m22):
        d, u = degrees(m22)
        assert d.tolist() == [2, 1]
        assert u.tolist() == [2, 1]

    def test_complete_3x4(self):
        d, u = degrees(bm(np.ones((3, 4), dtype=int)))
        assert d.tolist() == [4, 4, 4]
        assert u.tolist() == [3] * 4

    def test_all_zeros(self):
        d, u = degrees(bm([[0, 0], [0, 0]]))
        assert d.tolist() == [0, 0]
        assert u.tolist() == [0, 0]


class TestDropIsolated:
    def test_zero_row_and_column(self):
        m = bm([[1, 0], [0, 0]], countries=("A", "B"), products=("p", "q"))
        cleaned, report = drop_isolated(m)
        assert cleaned.country_labels == ("A",)
        assert cleaned.product_labels == ("p",)
        assert cleaned.entries.tolist() == [[1]]
        assert report.removed_countries == ("B",)
        assert report.removed_products == ("q",)

    def test_identity_case(self, m22):
        cleaned, report = drop_isolated(m22)
        assert cleaned == m22
        assert report.empty

    def test_empty_network(self):
        with pytest.raises(EmptyNetwork):
            drop_isolated(bm([[0, 0], [0, 0]]))

    @settings(max_examples=60)
    @given(binary_matrices)
    def test_degrees_strictly_positive_after_drop(self, rows):
        m = bm(rows)
        try:
            cleaned, _ = drop_isolated(m)
        except EmptyNetwork:
            assert not np.asarray(rows).any()
            return
        d, u = degrees(cleaned)
        assert (d > 0).all() and (u > 0).all()


class TestRankingFromScores:
    def sv(self, side, labels, values):
        return ScoreVector(side, labels, np.array(values, float), "test")

    def test_no_ties(self):
        r = ranking_from_scores(self.sv(COUNTRY, ("A", "B"), [2.0, 1.0]), HIGH)
        assert r.ordered_ids == ("A", "B")
        assert r.tie_groups == ((0,), (1,))
        assert not r.has_ties

    def test_tie_case(self):
        r = ranking_from_scores(self.sv(COUNTRY, ("B", "A"), [1.0, 1.0]), HIGH)
        assert r.ordered_ids == ("A", "B")
        assert r.tie_groups == ((0, 1),)
        assert r.has_ties

    def test_low_is_good(self):
        r = ranking_from_scores(self.sv(PRODUCT, ("A", "B", "C"), [1.5, 2.5, 0.5]), LOW)
        assert r.ordered_ids == ("C", "A", "B")

    def test_pure_function(self):
        s = self.sv(COUNTRY, ("X", "Y", "Z"), [1.0, 1.0, 3.0])
        r1 = ranking_from_scores(s, HIGH)
        r2 = ranking_from_scores(s, HIGH)
        assert r1.ordered_ids == r2.ordered_ids
        assert r1.tie_groups == r2.tie_groups

    @settings(max_examples=60)
    @given(st.lists(st.integers(-3, 3), min_size=1, max_size=8))
    def test_monotone_and_grouped(self, scores):
        labels = tuple(f"n{i}" for i in range(len(scores)))
        s = self.sv(COUNTRY, labels, [float(v) for v in scores])
        r = ranking_from_scores(s, HIGH)
        by_label = dict(zip(labels, s.values))
        ordered = [by_label[lab] for lab in r.ordered_ids]
        assert ordered == sorted(ordered, reverse=True)
        covered = [p for g in r.tie_groups for p in g]
        assert covered == list(range(len(scores)))
        for g in r.tie_groups:
            assert len({ordered[p] for p in g}) == 1


class TestSortMatrix:
    def test_identity_permutation(self, m22):
        rc = ranking_from_scores(
            ScoreVector(COUNTRY, m22.country_labels, [2.0, 1.0], "d"), HIGH)
        rp = ranking_from_scores(
            ScoreVector(PRODUCT, m22.product_labels, [2.0, 1.0], "u"), HIGH)
        assert sort_matrix(m22, rc, rp) == m22

    def test_explicit_reversal(self):
        m = bm([[0, 1], [1, 1]])
        rc = ranking_from_scores(
            ScoreVector(COUNTRY, ("A", "B"), [1.0, 2.0], "d"), HIGH)
        rp = ranking_from_scores(
            ScoreVector(PRODUCT, ("p1", "p2"), [1.0, 2.0], "u"), HIGH)
        out = sort_matrix(m, rc, rp)
        assert out.entries.tolist() == [[1, 1], [1, 0]]
        assert out.country_labels == ("B", "A")
        assert out.product_labels == ("p2", "p1")

    def test_nested_sorted_has_prefix_rows(self):
        # sorting by diversification/ubiquity must leave every row's
        # support a prefix of the columns
        m = perfectly_nested(5, 9)
        d, u = degrees(m)
        rc = ranking_from_scores(
            ScoreVector(COUNTRY, m.country_labels, d.astype(float), "d"), HIGH)
        rp = ranking_from_scores(
            ScoreVector(PRODUCT, m.product_labels, u.astype(float), "u"), HIGH)
        out = sort_matrix(m, rc, rp)
        for row in out.entries:
            size = int(row.sum())
            assert row[:size].all() and not row[size:].any()

    def test_label_mismatch(self, m22):
        rc = ranking_from_scores(
            ScoreVector(COUNTRY, ("A", "X"), [2.0, 1.0], "d"), HIGH)
        rp = ranking_from_scores(
            ScoreVector(PRODUCT, m22.product_labels, [2.0, 1.0], "u"), HIGH)
        with pytest.raises(LabelMismatch):
            sort_matrix(m22, rc, rp)

    @settings(max_examples=40)
    @given(binary_matrices, st.randoms(use_true_random=False))
    def test_preserves_degree_multisets(self, rows, rnd):
        m = bm(rows)
        c_order = list(m.country_labels)
        p_order = list(m.product_labels)
        rnd.shuffle(c_order)
        rnd.shuffle(p_order)
        rc = ranking_from_scores(
            ScoreVector(COUNTRY, tuple(c_order),
                        np.arange(len(c_order), 0, -1, dtype=float), "t"), HIGH)
        rp = ranking_from_scores(
            ScoreVector(PRODUCT, tuple(p_order),
                        np.arange(len(p_order), 0, -1, dtype=float), "t"), HIGH)
        out = sort_matrix(m, rc, rp)
        d0, u0 = degrees(m)
        d1, u1 = degrees(out)
        assert sorted(d0.tolist()) == sorted(d1.tolist())
        assert sorted(u0.tolist()) == sorted(u1.tolist())
        assert out.entries.sum() == m.entries.sum()


class TestMatrixFile:
    def test_roundtrip(self, tmp_path, m22):
        path = tmp_path / "m.tsv"
        write_matrix(m22, path)
        back = read_matrix(path)
        assert back == m22  # labels of m22 are already sorted

    def test_header_year(self, tmp_path):
        m = bm([[1]], year=1996)
        path = tmp_path / "m.tsv"
        write_matrix(m, path)
        assert path.read_text().splitlines()[0] == "#ecorank-matrix v1 year=1996"
        assert read_matrix(path).year == 1996

    def test_header_year_none(self, m22):
        assert matrix_file_text(m22).splitlines()[0] == "#ecorank-matrix v1 year=none"

    def test_axis_order_normalized(self, tmp_path):
        m = bm([[1, 1], [0, 1]], countries=("Z", "A"), products=("q", "p"))
        path = tmp_path / "m.tsv"
        write_matrix(m, path)
        back = read_matrix(path)
        assert back.country_labels == ("A", "Z")
        assert back.product_labels == ("p", "q")
        # Z exported q and p; A exported only p
        assert back.entries.tolist() == [[1, 0], [1, 1]]

    def test_missing_header(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text('"A"\t"p"\n')
        with pytest.raises(ParseError):
            read_matrix(path)

    def test_malformed_line_reports_position(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text('#ecorank-matrix v1 year=none\n"A"\t"p"\nA\tp\n')
        with pytest.raises(ParseError) as err:
            read_matrix(path)
        assert err.value.line == 3

    def test_no_links_is_empty_network(self, tmp_path):
        path = tmp_path / "m.tsv"
        path.write_text("#ecorank-matrix v1 year=none\n")
        with pytest.raises(EmptyNetwork):
            read_matrix(path)


class TestPbm:
    def test_shape_and_pixels(self, m22):
        text = pbm_text(m22)
        lines = text.splitlines()
        assert lines[0] == "P1"
        assert lines[1] == "2 2"
        assert lines[2] == "1 1"
        assert lines[3] == "1 0"

    def test_wide_rows_wrap(self):
        m = bm(np.ones((1, 80), dtype=int))
        for line in pbm_text(m).splitlines():
            assert len(line) <= 70


class TestMethodConfig:
    def test_mr_requires_even_order(self):
        with pytest.raises(ValueError):
            MethodConfig.mr(3)

    def test_fcm_requires_positive_gamma(self):
        with pytest.raises(NonPositiveGamma):
            MethodConfig.fcm(0.0)

    def test_tags(self):
        assert MethodConfig.mr(2).method_tag() == "mr(order=2)"
        assert MethodConfig.fcm(1.0, 1000).method_tag() == "fcm(gamma=1.0,iters=1000)"


class TestConnectivity:
    def test_nested_is_connected(self):
        assert is_connected(perfectly_nested(4, 7))

    def test_block_diagonal_is_not(self):
        assert not is_connected(bm([[1, 0], [0, 1]]))
