import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from sphalpha.alpha import (
    SimplicialComplex,
    build_complex,
    least_distance,
    miniball,
    neighbor_pairs,
    nerve_oracle,
    simplex_alpha_test,
)
from sphalpha.errors import ResolutionTooCoarse
from sphalpha.sphere import random_sphere

EQUI = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, math.sqrt(3) / 2]])


def test_single_vertex():
    S = np.array([[0.2, 0.1], [3.0, 3.0]])
    res = simplex_alpha_test((0,), S, 0.01)
    assert res.feasible and res.min_sq_radius == 0.0 and np.allclose(res.witness, S[0])
    assert nerve_oracle((0,), S, 0.01)


@pytest.mark.parametrize("gap", [0.5, 1.0, 1.9, 2.1])
def test_isolated_pair(gap):
    S = np.array([[0.0, 0.0, 0.0], [gap, 0.0, 0.0]])
    res = simplex_alpha_test((0, 1), S, 1.0)
    assert res.feasible == (gap / 2 <= 1.0)
    assert res.min_sq_radius == pytest.approx(gap**2 / 4, abs=1e-15)
    assert nerve_oracle((0, 1), S, 1.0) == (gap / 2 <= 1.0)


def test_equilateral_threshold():
    r0 = 1 / math.sqrt(3)
    res = simplex_alpha_test((0, 1, 2), EQUI, r0)
    assert abs(res.min_sq_radius - 1 / 3) < 1e-9 and res.feasible
    assert not simplex_alpha_test((0, 1, 2), EQUI, r0 - 1e-6).feasible


def test_obtuse_triangle_alpha_vs_cech():
    # the circumcentre lies outside: Cech accepts at the half-longest-edge, alpha needs the circumradius
    S = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.3]])
    assert simplex_alpha_test((0, 1, 2), S, 1.0, voronoi=False).feasible
    res = simplex_alpha_test((0, 1, 2), S, 1.0)
    assert not res.feasible
    R2 = (1.0**2 + 0.3**2) ** 2 / (4 * 0.3**2)
    assert res.min_sq_radius == pytest.approx(R2, rel=1e-12)
    assert not nerve_oracle((0, 1, 2), S, 1.0)


def test_voronoi_blocking_point():
    # a third point at the midpoint of an edge kills the edge
    S = np.array([[0.0, 0.0], [2.0, 0.0], [1.0, 0.0]])
    assert not simplex_alpha_test((0, 1), S, 5.0).feasible
    assert simplex_alpha_test((0, 1), S, 5.0, voronoi=False).feasible


def test_witness_satisfies_constraints(rng):
    for _ in range(100):
        S = rng.uniform(0, 1, (8, 3))
        sigma = tuple(sorted(rng.choice(8, rng.integers(1, 5), replace=False)))
        r = rng.uniform(0.2, 0.8)
        res = simplex_alpha_test(sigma, S, r)
        if not res.feasible:
            continue
        x = res.witness
        dist = np.linalg.norm(S - x, axis=1)
        inside = dist[list(sigma)]
        assert np.all(inside <= r + 1e-9)
        assert np.ptp(inside) < 1e-9
        assert np.all(dist >= inside.max() - 1e-9)


def test_least_distance_small_cases():
    # one equality, one inequality in the plane
    y = least_distance(np.array([[1.0, 0.0], [0.0, 1.0]]), np.array([1.0, -2.0]), 1)
    assert np.allclose(y, [1.0, -2.0])
    # contradictory equalities
    assert least_distance(np.array([[1.0, 0.0], [1.0, 0.0]]), np.array([1.0, 2.0]), 2) is None
    # inequalities with empty intersection
    assert least_distance(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.array([-1.0, -1.0]), 0) is None
    assert np.array_equal(least_distance(np.zeros((0, 3)), np.zeros(0), 0, dim=3), np.zeros(3))


def enumerate_least_distance(N, b, n_eq):
    """Exact optimum by trying every active set: min-norm point of each face's affine hull."""
    m, d = N.shape
    best = None
    for k in range(0, min(m - n_eq, d - n_eq) + 1):
        for extra in itertools.combinations(range(n_eq, m), k):
            rows = list(range(n_eq)) + list(extra)
            A, rhs = N[rows], b[rows]
            y = np.linalg.lstsq(A, rhs, rcond=None)[0] if rows else np.zeros(d)
            if rows and np.max(np.abs(A @ y - rhs)) > 1e-10:
                continue
            if np.any(N[n_eq:] @ y - b[n_eq:] > 1e-10):
                continue
            if best is None or y @ y < best @ best:
                best = y
    return best


def test_least_distance_against_enumeration(rng):
    for _ in range(300):
        m, d = int(rng.integers(1, 8)), int(rng.integers(2, 4))
        N = rng.standard_normal((m, d))
        N /= np.linalg.norm(N, axis=1, keepdims=True)
        b = rng.uniform(-0.5, 1.0, m)
        n_eq = int(rng.integers(0, min(m, d) + 1))
        y = least_distance(N, b, n_eq)
        ref = enumerate_least_distance(N, b, n_eq)
        if ref is None:
            assert y is None
        else:
            assert y is not None and abs(y @ y - ref @ ref) < 1e-9 * (1 + ref @ ref)


def test_miniball(rng):
    c, r2 = miniball(EQUI)
    assert r2 == pytest.approx(1 / 3, abs=1e-14)
    P = rng.standard_normal((5, 3))
    c, r2 = miniball(P)
    assert np.max(np.sum((P - c) ** 2, axis=1)) <= r2 + 1e-12
    # nothing beats it: random perturbations of the centre only grow the radius
    for _ in range(200):
        cc = c + 1e-3 * rng.standard_normal(3)
        assert np.max(np.sum((P - cc) ** 2, axis=1)) >= r2 - 1e-12


def test_neighbor_pairs(rng):
    S = np.array([[0.0, 0.0], [2.5, 0.0], [2.5, 0.0]])
    assert neighbor_pairs(S, 1.0) == [(1, 2)]
    S = random_sphere(80, 3, rng)
    r = 0.2
    want = [(i, j) for i, j in itertools.combinations(range(80), 2) if np.linalg.norm(S[i] - S[j]) <= 2 * r]
    assert neighbor_pairs(S, r) == want


def test_nerve_oracle_resolution_guard():
    with pytest.raises(ResolutionTooCoarse):
        nerve_oracle((0, 1), EQUI, 1.0, resolution=3)
    assert not nerve_oracle((0, 1), np.array([[0.0, 0.0], [3.0, 0.0]]), 1.0)


def test_voronoi_off_is_cech(rng):
    # dropping the Voronoi rows must give the minimum enclosing ball test
    for _ in range(200):
        S = rng.uniform(0, 1, (6, 2))
        sigma = tuple(sorted(rng.choice(6, rng.integers(1, 4), replace=False)))
        r = rng.uniform(0.1, 0.7)
        cech = simplex_alpha_test(sigma, S, r, voronoi=False)
        _, r2 = miniball(S[list(sigma)])
        assert cech.feasible == (r2 <= r * r + 1e-9)


def random_instance(g):
    d = int(g.integers(2, 4))
    n = int(g.integers(3, 13))
    S = g.uniform(0, 1, (n, d))
    k = int(g.integers(1, min(4, n) + 1))
    sigma = tuple(sorted(int(i) for i in g.choice(n, k, replace=False)))
    return S, sigma, float(g.uniform(0.05, 0.8))


def test_oracle_agreement_sample():
    g = np.random.default_rng(99)
    checked = 0
    for _ in range(150):
        S, sigma, r = random_instance(g)
        res = simplex_alpha_test(sigma, S, r)
        if abs(res.min_sq_radius - r * r) < 1e-6:
            continue
        assert res.feasible == nerve_oracle(sigma, S, r)
        checked += 1
    assert checked > 100


@given(st.integers(0, 2**31))
def test_complex_properties(seed):
    g = np.random.default_rng(seed)
    S = random_sphere(int(g.integers(4, 25)), 3, g)
    r1, r2 = sorted(g.uniform(0.1, 0.8, 2))
    c1 = build_complex(S, r1, 3)
    c2 = build_complex(S, r2, 3)
    c1.check()
    c2.check()
    assert len(c1[0]) == S.shape[0]
    for k in range(4):
        assert set(c1[k]) <= set(c2[k])
        for s in c1[k]:
            # alpha is inside Cech, which is inside Rips(2r)
            assert simplex_alpha_test(s, S, r1, voronoi=False).feasible
            assert all(np.linalg.norm(S[i] - S[j]) <= 2 * r1 + 1e-12 for i, j in itertools.combinations(s, 2))


def test_complex_is_exhaustive(rng):
    # every clique the incremental search could have missed is re-tested directly
    S = rng.uniform(0, 1, (12, 2))
    r = 0.3
    cx = build_complex(S, r, 2)
    for k in range(1, 3):
        want = [s for s in itertools.combinations(range(12), k + 1) if simplex_alpha_test(s, S, r).feasible]
        assert cx[k] == want


def test_pruning_does_not_change_results(rng):
    from scipy.spatial import cKDTree

    S = rng.uniform(0, 1, (40, 3))
    tree = cKDTree(S)
    for _ in range(100):
        sigma = tuple(sorted(rng.choice(40, rng.integers(2, 4), replace=False)))
        r = rng.uniform(0.05, 0.4)
        a = simplex_alpha_test(sigma, S, r, tree=tree)
        b = simplex_alpha_test(sigma, S, r)
        assert a.feasible == b.feasible


def test_empty_and_single():
    cx = build_complex(np.zeros((0, 3)), 0.5, 3)
    assert cx.counts() == [0, 0, 0, 0]
    cx = build_complex(np.array([[1.0, 0.0, 0.0]]), 0.5, 3)
    assert cx.counts() == [1, 0, 0, 0]


def test_workers_do_not_change_output(rng):
    S = random_sphere(150, 4, rng)
    assert build_complex(S, 0.35, 3, workers=1).simplices == build_complex(S, 0.35, 3, workers=3).simplices


def test_json_round_trip(rng):
    S = random_sphere(30, 3, rng)
    cx = build_complex(S, 0.4, 3, inflate=1.1)
    doc = json.loads(cx.to_json())
    assert set(doc) >= {"dimension", "vertices", "simplices"}
    back = SimplicialComplex.from_json(cx.to_json())
    assert back.simplices == cx.simplices and np.array_equal(back.vertices, cx.vertices) and back.maxdim == 3


def test_inflate_guard():
    with pytest.raises(ValueError):
        build_complex(EQUI, 1.0, 2, inflate=0.9)
