"""Synthetic bipartite test networks.

Desk-scale stand-ins for real trade data: a perfectly nested family, a
noisy-nested family, and plain random fills.  All generators are pure
functions of their arguments (seed included).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import BipartiteMatrix, drop_isolated


@dataclass(frozen=True)
class SynthConfig:
    """Parameters for one synthetic matrix."""

    n_countries: int
    n_products: int
    profile: str = "nested"  # nested | random | nested_with_noise
    fill_prob: float = 0.5
    noise: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.n_countries < 1 or self.n_products < 1:
            raise ValueError("matrix dimensions must be >= 1")
        if self.profile not in ("nested", "random", "nested_with_noise"):
            raise ValueError(f"unknown profile {self.profile!r}")
        if not 0.0 <= self.fill_prob <= 1.0:
            raise ValueError("fill_prob must lie in [0, 1]")
        if not 0.0 <= self.noise <= 1.0:
            raise ValueError("noise must lie in [0, 1]")


def _labels(prefix: str, count: int) -> tuple[str, ...]:
    width = len(str(count))
    return tuple(f"{prefix}{k:0{width}d}" for k in range(1, count + 1))


def perfectly_nested(n: int, m: int, year: int | None = None) -> BipartiteMatrix:
    """Strictly nested matrix: row k exports the ceil(m*(n-k+1)/n) first products.

    Row 1 is the most diversified country; every row's support is a prefix
    of (and contains) the next row's, so the matrix is maximally nested and
    has no isolated nodes.
    """
    if n < 1 or m < 1:
        raise ValueError("matrix dimensions must be >= 1")
    entries = np.zeros((n, m), dtype=np.uint8)
    for k in range(1, n + 1):
        size = math.ceil(m * (n - k + 1) / n)
        entries[k - 1, :size] = 1
    return BipartiteMatrix(_labels("C", n), _labels("P", m), entries, year)


def nested_with_noise(
    n: int, m: int, eta_gen: float, seed: int = 0, year: int | None = None
) -> BipartiteMatrix:
    """Nested matrix with a fraction of entries flipped, isolated nodes dropped."""
    from .evaluation import flip_noise

    noisy = flip_noise(perfectly_nested(n, m, year), eta_gen, seed)
    cleaned, _ = drop_isolated(noisy)
    return cleaned


def random_bipartite(
    n: int, m: int, p: float, seed: int = 0, year: int | None = None, keep_isolated: bool = False
) -> BipartiteMatrix:
    """Independent Bernoulli(p) fill; isolated nodes dropped unless asked otherwise."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    entries = (rng.random((n, m)) < p).astype(np.uint8)
    raw = BipartiteMatrix(_labels("C", n), _labels("P", m), entries, year)
    if keep_isolated:
        return raw
    cleaned, _ = drop_isolated(raw)
    return cleaned


def generate(config: SynthConfig, year: int | None = None) -> BipartiteMatrix:
    """Materialize a SynthConfig."""
    if config.profile == "nested":
        return perfectly_nested(config.n_countries, config.n_products, year)
    if config.profile == "nested_with_noise":
        return nested_with_noise(config.n_countries, config.n_products, config.noise, config.seed, year)
    return random_bipartite(config.n_countries, config.n_products, config.fill_prob, config.seed, year)
