import numpy as np
import pytest
from hypothesis import settings

from resbdy import build_finite

settings.register_profile("ci", deadline=None, max_examples=50)
settings.load_profile("ci")


@pytest.fixture
def triangle():
    return build_finite([(0, 1, 1), (1, 2, 1), (0, 2, 1)])


@pytest.fixture
def path3():
    # o - a - b with unit conductances
    return build_finite([(0, 1, 1), (1, 2, 1)])


@pytest.fixture
def path5():
    # five vertices, four unit edges, origin at one end
    return build_finite([(i, i + 1, 1) for i in range(4)])


@pytest.fixture
def star4():
    # center 0 with three leaves
    return build_finite([(0, i, 1) for i in (1, 2, 3)])


@pytest.fixture
def grid44():
    edges = []
    def vid(i, j):
        return 4 * i + j
    for i in range(4):
        for j in range(4):
            if i + 1 < 4:
                edges.append((vid(i, j), vid(i + 1, j), 1))
            if j + 1 < 4:
                edges.append((vid(i, j), vid(i, j + 1), 1))
    return build_finite(edges)


def random_edge_list(rng, n):
    """Random connected weighted graph on n vertices (tree plus extras)."""
    edges = []
    for v in range(1, n):
        u = int(rng.integers(0, v))
        edges.append((u, v, float(rng.uniform(0.2, 3.0))))
    for _ in range(n // 2):
        a, b = rng.integers(0, n, size=2)
        if a != b:
            edges.append((int(min(a, b)), int(max(a, b)),
                          float(rng.uniform(0.2, 3.0))))
    return edges


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
