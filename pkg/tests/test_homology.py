import itertools

import numpy as np
import pytest
import sympy
from hypothesis import given
from hypothesis import strategies as st
from sympy.polys.domains import GF
from sympy.polys.matrices import DomainMatrix

from sphalpha.alpha import build_complex
from sphalpha.errors import DimensionOutOfRange, InsufficientDimension
from sphalpha.homology import BoundaryMatrix, betti_numbers, boundary_matrix, closure, euler_characteristic, rank_gf2
from sphalpha.sphere import random_sphere

HOLLOW = closure([(0, 1), (1, 2), (0, 2)], maxdim=2)
OCTAHEDRON = closure(
    [(a, b, c) for a in (0, 1) for b in (2, 3) for c in (4, 5)],
    maxdim=3,
)
# minimal 7-vertex torus: triangles {i, i+1, i+3} and {i, i+2, i+3} mod 7
TORUS7 = closure(
    [tuple(sorted({i % 7, (i + 1) % 7, (i + 3) % 7})) for i in range(7)]
    + [tuple(sorted({i % 7, (i + 2) % 7, (i + 3) % 7})) for i in range(7)],
    maxdim=3,
)


def oracle_rank(dense):
    """Rank over GF(2) by sympy's domain matrices."""
    rows = [[int(v) for v in row] for row in np.asarray(dense)]
    if not rows or not rows[0]:
        return 0
    return DomainMatrix([[GF(2)(v) for v in row] for row in rows], (len(rows), len(rows[0])), GF(2)).rank()


def union_find_components(cx):
    parent = list(range(len(cx[0])))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in cx[1]:
        parent[find(i)] = find(j)
    return len({find(i) for i in range(len(parent))})


def test_single_edge_boundary():
    cx = closure([(0, 1)])
    B = boundary_matrix(cx, 1)
    assert B.rows == 2 and B.cols == 1
    assert B.to_dense().tolist() == [[1], [1]]


def test_hollow_triangle():
    B = boundary_matrix(HOLLOW, 1).to_dense()
    assert B.shape == (3, 3) and np.all(B.sum(axis=0) == 2)
    assert betti_numbers(HOLLOW, 1) == [1, 1]


def test_octahedron():
    assert OCTAHEDRON.counts() == [6, 12, 8, 0]
    assert betti_numbers(OCTAHEDRON, 2) == [1, 0, 1]


def test_seven_vertex_torus():
    assert TORUS7.counts() == [7, 21, 14, 0]
    assert betti_numbers(TORUS7, 2) == [1, 2, 1]


@pytest.mark.parametrize("cx", [HOLLOW, OCTAHEDRON, TORUS7], ids=["hollow", "octahedron", "torus"])
def test_chain_complex_and_euler(cx):
    for k in range(1, cx.maxdim):
        A = boundary_matrix(cx, k).to_dense().astype(int)
        B = boundary_matrix(cx, k + 1).to_dense().astype(int)
        assert not np.any((A @ B) % 2)
        assert np.all(B.sum(axis=0) == k + 2)
    betti = betti_numbers(cx, cx.maxdim - 1)
    assert euler_characteristic(cx) == sum((-1) ** k * b for k, b in enumerate(betti))
    assert betti[0] == union_find_components(cx)


def test_rank_trivial():
    assert rank_gf2(BoundaryMatrix.from_dense(np.eye(9, dtype=int))) == 9
    assert rank_gf2(BoundaryMatrix.from_dense(np.zeros((5, 4), dtype=int))) == 0


@given(st.integers(0, 2**31), st.integers(1, 20), st.integers(1, 20), st.floats(0.05, 0.95))
def test_rank_against_sympy(seed, r, c, p):
    g = np.random.default_rng(seed)
    M = (g.random((r, c)) < p).astype(int)
    assert rank_gf2(BoundaryMatrix.from_dense(M)) == oracle_rank(M)


def test_rank_20x20_against_rational_elimination(rng):
    # rank over GF(2) is at most the rational rank; both computed independently
    for _ in range(20):
        M = rng.integers(0, 2, (20, 20))
        r2 = rank_gf2(BoundaryMatrix.from_dense(M))
        assert r2 == oracle_rank(M)
        assert r2 <= sympy.Matrix(M).rank()


def test_dense_round_trip(rng):
    M = rng.integers(0, 2, (7, 11)).astype(np.uint8)
    assert np.array_equal(BoundaryMatrix.from_dense(M).to_dense(), M)


def test_errors():
    with pytest.raises(DimensionOutOfRange):
        boundary_matrix(HOLLOW, 0)
    with pytest.raises(DimensionOutOfRange):
        boundary_matrix(HOLLOW, 3)
    with pytest.raises(InsufficientDimension):
        betti_numbers(HOLLOW, 2)


@given(st.integers(0, 2**31))
def test_random_alpha_complexes(seed):
    g = np.random.default_rng(seed)
    S = random_sphere(int(g.integers(5, 40)), 3, g)
    cx = build_complex(S, float(g.uniform(0.2, 0.7)), 3)
    betti = betti_numbers(cx, 2)
    assert all(b >= 0 for b in betti)
    assert betti[0] == union_find_components(cx)
    # the top rank is needed for the Euler identity, so use the full chain
    ranks = [0] + [rank_gf2(boundary_matrix(cx, k)) for k in (1, 2, 3)] + [0]
    full = [len(cx[k]) - ranks[k] - ranks[k + 1] for k in range(4)]
    assert full[:3] == betti
    assert euler_characteristic(cx) == sum((-1) ** k * b for k, b in enumerate(full))
    for k in (1, 2, 3):
        assert rank_gf2(boundary_matrix(cx, k)) == oracle_rank(boundary_matrix(cx, k).to_dense())
