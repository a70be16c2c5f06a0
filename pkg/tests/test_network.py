import numpy as np
import pytest
from hypothesis import given, strategies as st

from resbdy import (BinaryTreeGenerator, GeometricHalfLineGenerator,
                    IntegerLatticeGenerator, LadderGenerator, build_finite,
                    default_exhaustion, enumerate_vertices,
                    generator_from_spec)
from resbdy.errors import (DisconnectedGraph, InvalidParameters,
                           NonpositiveConductance, SelfLoop)
from tests.conftest import random_edge_list


def test_triangle_total_conductance(triangle):
    assert np.allclose(triangle.c_of, [2.0, 2.0, 2.0])


def test_path_total_conductance(path3):
    assert np.allclose(path3.c_of, [1.0, 2.0, 1.0])


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        build_finite([(0, 0, 1), (0, 1, 1)])


def test_nonpositive_conductance_rejected():
    with pytest.raises(NonpositiveConductance):
        build_finite([(0, 1, 0.0)])
    with pytest.raises(NonpositiveConductance):
        build_finite([(0, 1, -2.0)])


def test_disconnected_rejected():
    with pytest.raises(DisconnectedGraph):
        build_finite([(0, 1, 1), (2, 3, 1)])


def test_parallel_edges_merge_by_summing():
    net = build_finite([(0, 1, 1), (1, 0, 2)])
    assert np.allclose(net.ec, [3.0])


def test_ladder_ball_radius_one():
    net = LadderGenerator(5, 0.9).ball(1)
    assert net.n == 4  # x0, y0, x1, y1
    got = {(int(a), int(b)): float(c) for a, b, c in zip(net.ei, net.ej, net.ec)}
    assert got[(0, 2)] == 5.0      # x0 - x1
    assert got[(0, 1)] == 1.0      # x0 - y0, beta^0
    assert got[(2, 3)] == pytest.approx(0.9)  # x1 - y1


def test_halfline_ball_conductances():
    net = GeometricHalfLineGenerator(2).ball(3)
    assert net.n == 4
    assert np.allclose(sorted(net.ec), [2.0, 4.0, 8.0])


def test_binary_tree_ball():
    net = BinaryTreeGenerator().ball(2)
    assert net.n == 7
    assert np.allclose(net.ec, 1.0)


def test_ladder_parameter_validation():
    with pytest.raises(InvalidParameters):
        LadderGenerator(0.5, 0.9)     # alpha must exceed 1
    with pytest.raises(InvalidParameters):
        LadderGenerator(5, 1.5)       # beta above 1
    with pytest.raises(InvalidParameters):
        LadderGenerator(5, 0.0)
    LadderGenerator(5, 1.0)           # boundary case allowed


def test_ladder_exhaustion_sizes():
    exh = default_exhaustion(LadderGenerator(5, 0.9), 3)
    sizes = [len(view.vertices) for _, view in exh]
    assert sizes == [2 * (k + 1) for k in (1, 2, 3)]


def test_exhaustion_monotone_and_saturating(path3):
    exh = default_exhaustion(path3, 5)
    prev = set()
    for _, view in exh:
        cur = set(view.vertices.tolist())
        assert prev <= cur
        prev = cur
    assert prev == {0, 1, 2}


def test_exhaustion_level_zero_rejected(path3):
    with pytest.raises(InvalidParameters):
        default_exhaustion(path3, 0)


def test_enumeration_path(path3):
    assert enumerate_vertices(path3) == [1, 2]


def test_enumeration_star_ascending(star4):
    assert enumerate_vertices(star4) == [1, 2, 3]


def test_enumeration_ladder_tie_break():
    # the rung partner y0 carries index 1 and wins the tie against x1 (index 2)
    net = LadderGenerator(5, 0.9).ball(3)
    enum = enumerate_vertices(net)
    assert enum[0] == 1 and enum[1] == 2


class _UnionFind:
    def __init__(self, n):
        self.p = list(range(n))

    def find(self, a):
        while self.p[a] != a:
            self.p[a] = self.p[self.p[a]]
            a = self.p[a]
        return a

    def union(self, a, b):
        self.p[self.find(a)] = self.find(b)


@given(st.integers(min_value=2, max_value=24), st.integers(min_value=0, max_value=2 ** 31))
def test_enumeration_prefixes_connected(n, seed):
    rng = np.random.default_rng(seed)
    net = build_finite(random_edge_list(rng, n))
    enum = enumerate_vertices(net)
    assert sorted(enum + [net.origin]) == list(range(net.n))
    for k in range(1, len(enum) + 1):
        keep = set(enum[:k]) | {net.origin}
        uf = _UnionFind(net.n)
        for a, b in zip(net.ei, net.ej):
            if int(a) in keep and int(b) in keep:
                uf.union(int(a), int(b))
        roots = {uf.find(v) for v in keep}
        assert len(roots) == 1


@given(st.integers(min_value=2, max_value=30), st.integers(min_value=0, max_value=2 ** 31))
def test_cached_conductance_matches_recompute(n, seed):
    rng = np.random.default_rng(seed)
    net = build_finite(random_edge_list(rng, n))
    recomputed = np.zeros(net.n)
    np.add.at(recomputed, net.ei, net.ec)
    np.add.at(recomputed, net.ej, net.ec)
    assert np.array_equal(recomputed, net.c_of)
    # and any other accumulation order agrees to roundoff
    alt = np.zeros(net.n)
    for a, b, c in zip(net.ei, net.ej, net.ec):
        alt[a] += c
        alt[b] += c
    assert np.allclose(alt, net.c_of, rtol=1e-14)


def test_generator_from_spec_roundtrip():
    gen = generator_from_spec({"family": "ladder", "params": {"alpha": 5, "beta": 0.9}})
    assert isinstance(gen, LadderGenerator)
    net = generator_from_spec({"edges": [[0, 1, 1], [1, 2, 1]], "origin": 0})
    assert net.n == 3
    with pytest.raises(InvalidParameters):
        generator_from_spec({"family": "moebius"})


def test_lattice_indexing_stable():
    gen = IntegerLatticeGenerator(1)
    small, big = gen.ball(3), gen.ball(6)
    # same vertex keeps its index across radii
    assert small.level[5] == big.level[5]
    assert small.n == 7 and big.n == 13
    gen2 = IntegerLatticeGenerator(2)
    b2 = gen2.ball(2)
    assert b2.n == 13  # 1 + 4 + 8 lattice points within L1 distance 2
