"""Cosine-similarity kernel densities on the sphere and their c-transforms.

The density is

    f(x) = sum_i a_i max(x . x_i, 0)^t,        t > 1,

with log-density psi = log f, cost c(x, y) = -t log(x . y) (infinite off the
open hemisphere) and transport map

    T(x) = rho( sum_i a_i K_t(x, x_i) phi_x(x_i) / f(x) ),   phi_x(y) = y / (x . y).

Everything is evaluated in log space with a max-shift, so that f never
underflows for points that lie in its support. -inf (IEEE) marks the empty
support of psi and the complement of im(T) for psi^c; +inf marks infinite cost.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import BelowThreshold, EmptyModel, OutsideSupport
from .sphere import (
    Subspace,
    as_unit,
    as_unit_rows,
    geodesic_point,
    normalize,
    normalize_rows,
    slerp_to_angle,
)

NEG_INF = -math.inf
POS_INF = math.inf

# queries x data entries per evaluation block
_BLOCK = 1 << 21


def kernel(x, y, t: float) -> float:
    """K_t(x, y) = (x . y)^t when x . y > 0, else 0."""
    c = float(np.dot(x, y))
    return c**t if c > 0.0 else 0.0


def cost(x, y, t: float) -> float:
    """c(x, y) = -t log(x . y), or +inf when x . y <= 0."""
    c = float(np.dot(x, y))
    if c <= 0.0:
        return POS_INF
    # cost(x, x) must be exactly zero even with rounding in the dot product
    return max(-t * math.log(min(c, 1.0)), 0.0)


class KdeModel:
    """Weighted cosine-similarity kernel density on S^{d-1}.

    Parameters
    ----------
    points : (N, d) array of unit vectors x_i.
    weights : positive weights a_i, default all ones.
    exponent : the power t (= 1/h^2), must exceed 1.
    """

    def __init__(self, points, weights=None, exponent: float = 2.0):
        X = as_unit_rows(points)
        if X.shape[0] == 0:
            raise EmptyModel("a model needs at least one data point")
        a = np.ones(X.shape[0]) if weights is None else np.asarray(weights, dtype=float)
        if a.shape != (X.shape[0],):
            raise ValueError("weights must have one entry per point")
        if not np.all(a > 0):
            raise ValueError("weights must be positive")
        if not exponent > 1.0:
            raise ValueError(f"exponent t must exceed 1, got {exponent}")
        self.points = X
        self.weights = a
        self.exponent = float(exponent)
        self.points.setflags(write=False)
        self.weights.setflags(write=False)
        self._log_weights = np.log(a)

    @classmethod
    def from_bandwidth(cls, points, h: float, weights=None) -> "KdeModel":
        return cls(points, weights, exponent=1.0 / h**2)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __repr__(self):
        return f"KdeModel(n={self.n}, d={self.dim}, t={self.exponent:.6g})"

    def embed(self, Q) -> "KdeModel":
        """Image of the model under the linear isometry ``Q`` (d' x d, orthonormal columns)."""
        Q = np.asarray(Q, dtype=float)
        return KdeModel(self.points @ Q.T, self.weights, self.exponent)

    # -- batched core ----------------------------------------------------

    def _stats(self, X):
        """Return (psi, mean_chart) for query rows X.

        mean_chart[k] = sum_i a_i K(x_k, x_i) phi_{x_k}(x_i) / f(x_k); rows with
        empty support get psi = -inf and a NaN chart.
        """
        X = np.atleast_2d(np.asarray(X, dtype=float))
        m = X.shape[0]
        psi = np.empty(m)
        chart = np.empty((m, self.dim))
        step = max(1, _BLOCK // self.n)
        t = self.exponent
        for lo in range(0, m, step):
            hi = min(m, lo + step)
            dots = X[lo:hi] @ self.points.T
            pos = dots > 0.0
            with np.errstate(divide="ignore", invalid="ignore"):
                logk = np.where(pos, t * np.log(np.where(pos, dots, 1.0)), NEG_INF)
                logk += self._log_weights
                peak = logk.max(axis=1)
                live = np.isfinite(peak)
                w = np.exp(logk - np.where(live, peak, 0.0)[:, None])
                total = w.sum(axis=1)
                psi[lo:hi] = np.where(live, peak + np.log(total), NEG_INF)
                g = np.where(pos, w / np.where(pos, dots, 1.0), 0.0)
                # per-coordinate reductions keep numpy's pairwise summation
                for k in range(self.dim):
                    chart[lo:hi, k] = (g * self.points[:, k]).sum(axis=1)
                chart[lo:hi] /= total[:, None]
        return psi, chart

    def log_density_many(self, X) -> np.ndarray:
        return self._stats(X)[0]

    def density_many(self, X) -> np.ndarray:
        return np.exp(self.log_density_many(X))

    def transport_many(self, X):
        """Batched transport: returns (psi, T(X), psi^c(T(X))).

        Rows outside the support get psi = -inf, NaN images and -inf values.
        """
        psi, chart = self._stats(X)
        norms = np.linalg.norm(chart, axis=1)
        with np.errstate(invalid="ignore"):
            images = chart / norms[:, None]
            conj = psi + self.exponent * np.log(norms)
        conj = np.where(np.isfinite(psi), conj, NEG_INF)
        return psi, images, conj

    # -- pointwise API -----------------------------------------------------

    def log_density(self, x) -> float:
        return float(self._stats(as_unit(x))[0][0])

    def density(self, x) -> float:
        return math.exp(self.log_density(x))

    def _checked(self, x):
        x = as_unit(x)
        psi, chart = self._stats(x)
        if not np.isfinite(psi[0]):
            raise OutsideSupport("f(x) = 0")
        return x, float(psi[0]), chart[0]

    def grad_log_density(self, x) -> np.ndarray:
        """Intrinsic gradient t (mean_chart - x), tangent to the sphere at x."""
        x, _, chart = self._checked(x)
        g = self.exponent * (chart - x)
        return g - (g @ x) * x

    def transport(self, x) -> np.ndarray:
        _, _, chart = self._checked(x)
        return normalize(chart)

    def conjugate_at_transport(self, x) -> "TransportedSample":
        x, psi, chart = self._checked(x)
        y = normalize(chart)
        return TransportedSample(x, y, psi + cost(x, y, self.exponent))


@dataclass(frozen=True)
class TransportedSample:
    source: np.ndarray
    image: np.ndarray
    conjugate_value: float


# module-level spellings of the model methods


def log_density(m: KdeModel, x) -> float:
    return m.log_density(x)


def grad_log_density(m: KdeModel, x) -> np.ndarray:
    return m.grad_log_density(x)


def transport(m: KdeModel, x) -> np.ndarray:
    return m.transport(x)


def conjugate_at_transport(m: KdeModel, x) -> TransportedSample:
    return m.conjugate_at_transport(x)


def grad_cost_x(x, y, t: float) -> np.ndarray:
    """Intrinsic gradient in x of c(x, y): -t (phi_x(y) - x)."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    c = float(x @ y)
    if c <= 0:
        raise ValueError("cost is infinite off the open hemisphere")
    g = -t * (y / c - x)
    return g - (g @ x) * x


def stationarity_residual(m: KdeModel, x) -> float:
    """|grad psi(x) + grad_x c(x, T(x))|, zero when T is the c-transport map."""
    return float(np.linalg.norm(m.grad_log_density(x) + grad_cost_x(x, m.transport(x), m.exponent)))


# -- the circle --------------------------------------------------------------


def data_angles(m: KdeModel) -> np.ndarray:
    if m.dim != 2:
        raise ValueError("circle formulas need a model on S^1")
    return np.arctan2(m.points[:, 1], m.points[:, 0])


def circle_lift(m: KdeModel, u):
    """Angular lift of T on S^1, accurate to within pi/2 of the input angle.

    Evaluated from the angle formula
        u + arctan( sum_i a_i max(cos(u - u_i), 0)^t tan(u_i - u) / f~(u) ),
    which never goes through the chart of T, so it checks ``transport``.
    Accepts a scalar or an array of angles.
    """
    ui = data_angles(m)
    u_arr = np.atleast_1d(np.asarray(u, dtype=float))
    diff = ui[None, :] - u_arr[:, None]
    cs = np.cos(diff)
    pos = cs > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        logk = np.where(pos, m.exponent * np.log(np.where(pos, cs, 1.0)), NEG_INF) + np.log(m.weights)
        peak = logk.max(axis=1)
        if not np.all(np.isfinite(peak)):
            raise OutsideSupport("angle outside the support of f")
        w = np.exp(logk - peak[:, None])
        tn = np.where(pos, np.tan(np.where(pos, diff, 0.0)), 0.0)
        out = u_arr + np.arctan((w * tn).sum(axis=1) / w.sum(axis=1))
    return float(out[0]) if np.ndim(u) == 0 else out


# -- brute-force conjugate -----------------------------------------------------

_GOLD = (math.sqrt(5.0) - 1.0) / 2.0


def _circle_objective(m: KdeModel, y, w, theta):
    """psi(x) + c(x, y) at x = cos(theta) y + sin(theta) w, batched over rows."""
    if theta.ndim == 2:
        y, w = y[:, None, :], w[:, None, :]
    x = np.cos(theta)[..., None] * y + np.sin(theta)[..., None] * w
    shape = theta.shape
    psi = m.log_density_many(x.reshape(-1, m.dim)).reshape(shape)
    with np.errstate(divide="ignore"):
        return psi - m.exponent * np.log(np.cos(theta))


def _conjugate_circle(m: KdeModel, Y, grid: int):
    """Grid + vectorised golden-section search over each open half-circle H+(y)."""
    Y = np.atleast_2d(Y)
    W = np.stack([-Y[:, 1], Y[:, 0]], axis=1)
    k = Y.shape[0]
    spacing = math.pi / grid
    theta = -math.pi / 2 + (np.arange(grid) + 0.5) * spacing
    vals = np.empty((k, grid))
    rows = max(1, _BLOCK // max(grid * m.n, 1))
    for lo in range(0, k, rows):
        hi = min(k, lo + rows)
        vals[lo:hi] = _circle_objective(m, Y[lo:hi], W[lo:hi], np.broadcast_to(theta, (hi - lo, grid)))
    out = vals.min(axis=1)
    dead = ~np.isfinite(out)
    j = vals.argmin(axis=1)
    a = np.maximum(theta[j] - spacing, -math.pi / 2 + 1e-15)
    b = np.minimum(theta[j] + spacing, math.pi / 2 - 1e-15)
    c = b - _GOLD * (b - a)
    d = a + _GOLD * (b - a)
    fc = _circle_objective(m, Y, W, c)
    fd = _circle_objective(m, Y, W, d)
    for _ in range(60):
        left = fc < fd
        a, b = np.where(left, a, c), np.where(left, d, b)
        fresh = np.where(left, b - _GOLD * (b - a), a + _GOLD * (b - a))
        f_fresh = _circle_objective(m, Y, W, fresh)
        c, d, fc, fd = (
            np.where(left, fresh, d),
            np.where(left, c, fresh),
            np.where(left, f_fresh, fd),
            np.where(left, fc, f_fresh),
        )
    out = np.minimum(out, np.minimum(fc, fd))
    out[dead] = NEG_INF
    return out


def _conjugate_sphere(m: KdeModel, y, grid: int, rng: np.random.Generator):
    """Random dense sampling of H+(y) followed by BFGS in the tangent chart at y."""
    d = m.dim
    t = m.exponent
    basis = np.linalg.svd(np.eye(d) - np.outer(y, y))[0][:, : d - 1]

    def objective(v):
        x = normalize(y + basis @ v)
        psi = m.log_density(x)
        return psi + 0.5 * t * math.log1p(float(v @ v))

    g = rng.standard_normal((grid, d))
    g *= np.sign(g @ y)[:, None]
    x = normalize_rows(g)
    vals = m.log_density_many(x) - t * np.log(np.clip(x @ y, 1e-300, None))
    if not np.all(np.isfinite(vals)):
        return NEG_INF
    best = x[int(np.argmin(vals))]
    v0 = basis.T @ (best / (best @ y) - y)
    res = optimize.minimize(objective, v0, method="BFGS", options={"gtol": 1e-10})
    return float(min(res.fun, vals.min())) if np.isfinite(res.fun) else NEG_INF


def conjugate_bruteforce(m: KdeModel, y, grid: int = 1000, floor: float = -1e6, levels: int = 3):
    """psi^c(y) = inf_x (psi(x) + c(x, y)) by direct search over H+(y).

    The search is repeated with the grid doubled ``levels - 1`` times and the
    smallest value kept; a sampled point of zero density, or a running
    infimum below ``floor``, returns -inf. ``y`` may be a single point or a
    stack of points (rows); the return type follows.
    """
    if grid < 100:
        raise ValueError("grid must be at least 100")
    Y = np.atleast_2d(np.asarray(y, dtype=float))
    as_unit_rows(Y)
    if m.dim == 2:
        best = np.full(Y.shape[0], POS_INF)
        for level in range(levels):
            best = np.minimum(best, _conjugate_circle(m, Y, grid << level))
    else:
        rng = np.random.default_rng(0)
        best = np.array(
            [min(_conjugate_sphere(m, yy, grid << level, rng) for level in range(levels)) for yy in Y]
        )
    best = np.where(best < floor, NEG_INF, best)
    return float(best[0]) if np.ndim(y) == 1 else best


# -- restriction and retraction ---------------------------------------------------


def restrict_model(m: KdeModel, V: Subspace) -> KdeModel:
    """The model whose density is f restricted to S(V), in ambient coordinates.

    x_i -> rho(proj_V x_i) with weight |proj_V x_i|^t a_i; points orthogonal
    to V drop out.
    """
    if V.dim < 2:
        raise ValueError("restriction needs dim V >= 2")
    P = V.project(m.points)
    norms = np.linalg.norm(P, axis=1)
    keep = norms > 1e-14
    if not np.any(keep):
        raise EmptyModel("every data point is orthogonal to V")
    return KdeModel(
        P[keep] / norms[keep, None],
        norms[keep] ** m.exponent * m.weights[keep],
        m.exponent,
    )


def cap_retract_point(m: KdeModel, x, a: float) -> np.ndarray:
    """Closest point to x in the cost ball {c(., T(x)) <= psi^c(T(x)) - a}.

    Moves along the great circle from x toward y = T(x) until x'.y reaches
    exp(-(psi^c(y) - a) / t); returns x unchanged if it is already inside.
    """
    s = m.conjugate_at_transport(x)
    radius = s.conjugate_value - a
    if radius < 0:
        raise BelowThreshold(f"psi^c(T(x)) = {s.conjugate_value:.6g} < a = {a:.6g}")
    if cost(s.source, s.image, m.exponent) <= radius:
        return s.source.copy()
    return slerp_to_angle(s.source, s.image, math.acos(math.exp(-radius / m.exponent)))


def homotopy_point(m: KdeModel, x, s: float) -> np.ndarray:
    """H(x, s) = rho((1 - s) x + s T(x))."""
    return geodesic_point(x, m.transport(x), s)


def retract_point(m: KdeModel, x, a: float, s: float) -> np.ndarray:
    """F(x, s) = rho((1 - s) x + s x'), with x' the cap retraction of x."""
    return geodesic_point(x, cap_retract_point(m, x, a), s)
