"""Exact spherical primitives on S^{d-1} embedded in R^d.

Points are plain float64 numpy vectors. Unit norm is checked, never silently
restored, whenever a point crosses a public function boundary.
"""
from __future__ import annotations

import numpy as np

from .errors import (
    AntipodalPoints,
    NotUnitNorm,
    OutsideHemisphere,
    ZeroProjection,
    ZeroVector,
)

ZERO_TOL = 1e-14
UNIT_TOL = 1e-12
ORTHO_TOL = 1e-10


def as_unit(x, tol: float = UNIT_TOL) -> np.ndarray:
    """Return ``x`` as a float array after checking it lies on the unit sphere."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise ValueError(f"expected a vector of length >= 2, got shape {x.shape}")
    err = abs(np.linalg.norm(x) - 1.0)
    if not err <= tol:
        raise NotUnitNorm(f"|x| differs from 1 by {err:.3g}")
    return x


def as_unit_rows(X, tol: float = UNIT_TOL) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] < 2:
        raise ValueError("points must have ambient dimension >= 2")
    err = np.abs(np.linalg.norm(X, axis=1) - 1.0)
    if err.size and not np.all(err <= tol):
        raise NotUnitNorm(f"max row norm error {err.max():.3g}")
    return X


def normalize(v) -> np.ndarray:
    """The normalization map rho(v) = v / |v|."""
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n <= ZERO_TOL:
        raise ZeroVector("cannot normalize a vector of norm <= 1e-14")
    return v / n


def normalize_rows(V) -> np.ndarray:
    V = np.asarray(V, dtype=float)
    n = np.linalg.norm(V, axis=-1, keepdims=True)
    if np.any(n <= ZERO_TOL):
        raise ZeroVector("cannot normalize a row of norm <= 1e-14")
    return V / n


def tangent_chart(x, y) -> np.ndarray:
    """Central projection of ``y`` onto the affine tangent plane {z : z.x = 1}."""
    x, y = as_unit(x), as_unit(y)
    c = float(x @ y)
    if not c > 0.0:
        raise OutsideHemisphere(f"x.y = {c} is not positive")
    return y / c


def project_tangent(x, v) -> np.ndarray:
    """Orthogonal projection of ``v`` onto T_x S^{d-1}."""
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    return v - (v @ x) * x


def geodesic_point(x, y, s: float) -> np.ndarray:
    """rho((1 - s) x + s y): sweeps the minor arc from x (s=0) to y (s=1)."""
    x, y = as_unit(x), as_unit(y)
    if s == 0.0:
        return x.copy()
    if s == 1.0:
        return y.copy()
    w = (1.0 - s) * x + s * y
    if np.linalg.norm(w) <= ZERO_TOL:
        raise AntipodalPoints("chord passes through the origin")
    return normalize(w)


def slerp_to_angle(x, y, angle: float) -> np.ndarray:
    """Point on the great-circle arc from y toward x at geodesic distance ``angle`` from y."""
    x, y = as_unit(x), as_unit(y)
    w = x - (x @ y) * y
    nw = np.linalg.norm(w)
    if nw <= ZERO_TOL:
        return y.copy()
    return np.cos(angle) * y + np.sin(angle) * (w / nw)


def random_tangent(x, rng: np.random.Generator) -> np.ndarray:
    """Uniformly distributed unit tangent vector at x."""
    x = np.asarray(x, dtype=float)
    while True:
        v = project_tangent(x, rng.standard_normal(x.shape[0]))
        n = np.linalg.norm(v)
        if n > 1e-8:
            return v / n


class Subspace:
    """A linear subspace V of R^d, stored as an orthonormal basis (rows)."""

    def __init__(self, basis, tol: float = ORTHO_TOL):
        B = np.atleast_2d(np.asarray(basis, dtype=float))
        gram = B @ B.T
        if not np.allclose(gram, np.eye(B.shape[0]), atol=tol, rtol=0.0):
            raise ValueError("basis vectors are not orthonormal")
        self.basis = B

    @classmethod
    def span(cls, vectors, rtol: float = 1e-10) -> "Subspace":
        """Orthonormal basis for the span of ``vectors`` via SVD."""
        A = np.atleast_2d(np.asarray(vectors, dtype=float))
        _, sv, vt = np.linalg.svd(A, full_matrices=False)
        k = int(np.sum(sv > rtol * sv[0])) if sv.size and sv[0] > 0 else 0
        return cls(vt[:k])

    @property
    def dim(self) -> int:
        return self.basis.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.basis.shape[1]

    def project(self, v) -> np.ndarray:
        """Orthogonal projection onto V, in ambient coordinates. Works row-wise."""
        v = np.asarray(v, dtype=float)
        return (v @ self.basis.T) @ self.basis

    def contains(self, v, tol: float = 1e-10) -> bool:
        v = np.asarray(v, dtype=float)
        return bool(np.all(np.linalg.norm(v - self.project(v), axis=-1) <= tol))


def project_sphere(x, V: Subspace) -> np.ndarray:
    """rho(proj_V(x)): the unit vector of V closest in angle to x."""
    x = as_unit(x)
    p = V.project(x)
    if np.linalg.norm(p) <= ZERO_TOL:
        raise ZeroProjection("x is orthogonal to the subspace")
    return normalize(p)


def angle_point(u) -> np.ndarray:
    """gamma(u) = (cos u, sin u); vectorised over u."""
    u = np.asarray(u, dtype=float)
    return np.stack([np.cos(u), np.sin(u)], axis=-1)


def random_sphere(n: int, d: int, rng: np.random.Generator) -> np.ndarray:
    return normalize_rows(rng.standard_normal((n, d)))


def random_rotation(d: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed orthogonal matrix."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))
