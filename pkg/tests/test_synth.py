import numpy as np
import pytest

from ecorank import degrees, is_connected
from ecorank.synth import (
    SynthConfig,
    generate,
    nested_with_noise,
    perfectly_nested,
    random_bipartite,
)


class TestPerfectlyNested:
    def test_smallest_nontrivial(self):
        m = perfectly_nested(2, 2)
        assert m.entries.tolist() == [[1, 1], [1, 0]]

    def test_single_row(self):
        m = perfectly_nested(1, 5)
        assert m.entries.tolist() == [[1, 1, 1, 1, 1]]

    def test_4x8_prefix_sizes(self):
        m = perfectly_nested(4, 8)
        assert m.diversification().tolist() == [8, 6, 4, 2]
        for row in m.entries:
            size = int(row.sum())
            assert row[:size].all() and not row[size:].any()

    def test_pairwise_containment(self):
        m = perfectly_nested(7, 11)
        supports = [frozenset(np.nonzero(row)[0].tolist()) for row in m.entries]
        for a in supports:
            for b in supports:
                assert a <= b or b <= a

    def test_no_isolated_nodes_and_connected(self):
        m = perfectly_nested(6, 9)
        d, u = degrees(m)
        assert (d > 0).all() and (u > 0).all()
        assert is_connected(m)

    def test_strictly_decreasing_degrees_when_steps_distinct(self):
        m = perfectly_nested(5, 10)
        assert (np.diff(m.diversification()) < 0).all()

    def test_bad_dimensions(self):
        with pytest.raises(ValueError):
            perfectly_nested(0, 5)


class TestNestedWithNoise:
    def test_zero_noise_is_nested(self):
        assert nested_with_noise(6, 9, 0.0, seed=1) == perfectly_nested(6, 9)

    def test_reproducible(self):
        a = nested_with_noise(10, 20, 0.08, seed=42)
        b = nested_with_noise(10, 20, 0.08, seed=42)
        assert a == b

    def test_different_seeds_differ(self):
        a = nested_with_noise(10, 20, 0.08, seed=1)
        b = nested_with_noise(10, 20, 0.08, seed=2)
        assert a != b

    def test_no_isolated_nodes(self):
        m = nested_with_noise(12, 24, 0.1, seed=3)
        d, u = degrees(m)
        assert (d > 0).all() and (u > 0).all()


class TestRandomBipartite:
    def test_reproducible(self):
        assert random_bipartite(8, 13, 0.4, seed=5) == random_bipartite(8, 13, 0.4, seed=5)

    def test_fill_probability_respected(self):
        m = random_bipartite(40, 50, 0.3, seed=0, keep_isolated=True)
        density = m.entries.mean()
        assert 0.25 < density < 0.35

    def test_no_isolated_by_default(self):
        m = random_bipartite(10, 10, 0.15, seed=2)
        d, u = degrees(m)
        assert (d > 0).all() and (u > 0).all()


class TestGenerate:
    def test_nested_profile(self):
        config = SynthConfig(4, 8, profile="nested")
        assert generate(config) == perfectly_nested(4, 8)

    def test_noise_profile(self):
        config = SynthConfig(6, 9, profile="nested_with_noise", noise=0.05, seed=7)
        assert generate(config) == nested_with_noise(6, 9, 0.05, seed=7)

    def test_validation(self):
        with pytest.raises(ValueError):
            SynthConfig(0, 5)
        with pytest.raises(ValueError):
            SynthConfig(2, 2, profile="bogus")
