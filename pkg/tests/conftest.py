import numpy as np
import pytest

from ecorank import BipartiteMatrix

_LETTERS = "ABCDEFGHIJKLMNOPQRSTUVWXYZ"


def bm(rows, countries=None, products=None, year=None):
    """Build a small matrix with default labels A,B,... / p1,p2,..."""
    rows = np.asarray(rows)
    n, m = rows.shape
    if countries is None:
        if n <= len(_LETTERS):
            countries = tuple(_LETTERS[i] for i in range(n))
        else:
            countries = tuple(f"C{i:04d}" for i in range(n))
    if products is None:
        products = tuple(f"p{j + 1}" for j in range(m))
    return BipartiteMatrix(tuple(countries), tuple(products), rows, year)


@pytest.fixture
def m22():
    """The worked 2x2 fixture: A exports p1,p2; B exports p1."""
    return bm([[1, 1], [1, 0]])


@pytest.fixture
def identity2():
    return bm([[1, 0], [0, 1]])
