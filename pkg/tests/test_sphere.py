import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from sphalpha.errors import AntipodalPoints, NotUnitNorm, OutsideHemisphere, ZeroProjection, ZeroVector
from sphalpha.sphere import (
    Subspace,
    angle_point,
    as_unit,
    geodesic_point,
    normalize,
    project_sphere,
    project_tangent,
    random_rotation,
    random_sphere,
    random_tangent,
    slerp_to_angle,
    tangent_chart,
)

finite = st.floats(-10, 10, allow_nan=False, allow_infinity=False)
vec3 = arrays(float, 3, elements=finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def test_normalize_examples():
    assert np.allclose(normalize([3.0, 4.0]), [0.6, 0.8], atol=1e-15)
    with pytest.raises(ZeroVector):
        normalize([0.0, 0.0])
    with pytest.raises(ZeroVector):
        normalize([1e-15, 0.0])


@given(vec3, st.floats(1e-3, 1e3))
def test_normalize_idempotent_and_scale_invariant(v, lam):
    u = normalize(v)
    assert abs(np.linalg.norm(u) - 1) < 1e-12
    assert np.allclose(normalize(u), u, atol=1e-15)
    assert np.allclose(normalize(lam * v), u, atol=1e-12)


def test_as_unit_rejects_drift():
    with pytest.raises(NotUnitNorm):
        as_unit([1.0 + 1e-9, 0.0])
    assert np.array_equal(as_unit([0.0, 1.0]), [0.0, 1.0])


def test_tangent_chart():
    x = np.array([1.0, 0.0])
    assert np.allclose(tangent_chart(x, x), x)
    for u in np.linspace(-1.5, 1.5, 13):
        assert np.allclose(tangent_chart(x, angle_point(u)), [1.0, math.tan(u)], atol=1e-12)
    with pytest.raises(OutsideHemisphere):
        tangent_chart(x, np.array([0.0, 1.0]))
    with pytest.raises(OutsideHemisphere):
        tangent_chart(x, np.array([-0.6, 0.8]))


def test_chart_lies_on_affine_tangent_plane(rng):
    X = random_sphere(50, 5, rng)
    x = X[0]
    for y in X[1:]:
        if x @ y > 0:
            assert abs(tangent_chart(x, y) @ x - 1) < 1e-12


def test_geodesic_point_endpoints_and_midpoint(rng):
    x, y = random_sphere(2, 4, rng)
    assert np.allclose(geodesic_point(x, y, 0), x)
    assert np.allclose(geodesic_point(x, y, 1), y)
    e1, e2 = np.eye(3)[:2]
    mid = geodesic_point(e1, e2, 0.5)
    assert abs(mid @ e1 - math.cos(math.pi / 4)) < 1e-15
    assert abs(mid @ e2 - math.cos(math.pi / 4)) < 1e-15
    with pytest.raises(AntipodalPoints):
        geodesic_point(e1, -e1, 0.5)


@given(vec3, vec3)
def test_geodesic_sweeps_the_arc_monotonically(a, b):
    x, y = normalize(a), normalize(b)
    if x @ y < -0.99:
        return
    s = np.linspace(0, 1, 21)
    pts = np.array([geodesic_point(x, y, si) for si in s])
    lo = min(float(x @ y), 1.0)
    assert np.all(pts @ x >= lo - 1e-12) and np.all(pts @ y >= lo - 1e-12)
    assert np.all(np.diff(pts @ y) >= -1e-12)
    assert np.all(np.diff(pts @ x) <= 1e-12)


def test_slerp_to_angle(rng):
    x, y = random_sphere(2, 3, rng)
    ang = math.acos(np.clip(x @ y, -1, 1))
    for target in [0.0, 0.3 * ang, ang]:
        p = slerp_to_angle(x, y, target)
        assert abs(math.acos(np.clip(p @ y, -1, 1)) - target) < 1e-7
        assert abs(np.linalg.norm(p) - 1) < 1e-12


def test_project_sphere():
    V = Subspace(np.eye(3)[:2])
    assert np.allclose(project_sphere(np.array([0.6, 0.0, 0.8]), V), [1, 0, 0])
    a, b, c = 0.3, -0.4, 0.866
    x = normalize([a, b, c])
    assert np.allclose(project_sphere(x, V), np.array([a, b, 0]) / math.hypot(a, b))
    y = normalize([0.2, 0.5, 0.0])
    assert np.allclose(project_sphere(y, V), y, atol=1e-15)
    with pytest.raises(ZeroProjection):
        project_sphere(np.array([0.0, 0.0, 1.0]), V)


def test_project_sphere_idempotent(rng):
    V = Subspace.span(rng.standard_normal((3, 6)))
    for x in random_sphere(30, 6, rng):
        p = project_sphere(x, V)
        assert V.contains(p)
        assert np.allclose(project_sphere(p, V), p, atol=1e-12)


def test_subspace_orthonormal(rng):
    V = Subspace.span(rng.standard_normal((4, 7)))
    B = V.basis
    assert np.allclose(B @ B.T, np.eye(4), atol=1e-10)
    with pytest.raises(ValueError):
        Subspace(np.array([[1.0, 0.0], [1.0, 0.0]]))


def test_tangent_helpers(rng):
    x = random_sphere(1, 5, rng)[0]
    v = random_tangent(x, rng)
    assert abs(v @ x) < 1e-12 and abs(np.linalg.norm(v) - 1) < 1e-12
    w = project_tangent(x, rng.standard_normal(5))
    assert abs(w @ x) < 1e-12
    Q = random_rotation(5, rng)
    assert np.allclose(Q @ Q.T, np.eye(5), atol=1e-12)
