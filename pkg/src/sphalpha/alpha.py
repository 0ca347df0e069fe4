"""Unweighted alpha complexes via one small convex program per candidate simplex.

A simplex sigma belongs to Alpha(S, r) when some point x lies in the Voronoi
cell of every vertex of sigma (so x is equidistant from them and no farther
from them than from any other point of S) and within distance r of them.
Shifting coordinates to the first vertex s_0 this is the least-distance problem

    minimise |y|^2   s.t.  n_i . y  = |s_i - s_0| / 2    (i in sigma)
                           n_j . y <= |s_j - s_0| / 2    (j not in sigma)

with n_k the unit vector from s_0 to s_k; sigma is in the complex iff the
problem is feasible with optimum <= r^2 (+1e-9). It is solved with the dual
active-set method of Goldfarb and Idnani, which starts at the unconstrained
minimum and detects infeasibility on its own.
"""
from __future__ import annotations

import itertools
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import ResolutionTooCoarse, SolverFailure

FEAS_TOL = 1e-9
_VIOL_TOL = 1e-12
_DEP_TOL = 1e-12


@dataclass
class FeasibilityResult:
    feasible: bool
    witness: np.ndarray | None
    min_sq_radius: float


def least_distance(normals, offsets, n_eq: int, max_iter: int | None = None, dim: int | None = None):
    """Minimise |y|^2 subject to normals[k] . y (= or <=) offsets[k].

    The first ``n_eq`` rows are equalities. Returns y, or None when the
    constraints are inconsistent. Raises SolverFailure when the iteration
    budget runs out.
    """
    Nall = np.asarray(normals, dtype=float)
    ball = np.asarray(offsets, dtype=float)
    m = ball.shape[0]
    d = Nall.shape[1] if Nall.ndim == 2 and Nall.shape[1] else int(dim or 0)
    Nall = Nall.reshape(m, d)
    y = np.zeros(d)
    active: list[int] = []
    u: list[float] = []
    sign = np.ones(m)
    max_iter = max_iter or 50 + 10 * m
    scale = 1.0 + float(np.max(np.abs(ball))) if m else 1.0
    done_eq = 0
    for _ in range(max_iter):
        # pick the next constraint to enforce: equalities in order, then the worst inequality
        p = -1
        while done_eq < n_eq:
            k = done_eq
            done_eq += 1
            r = Nall[k] @ y - ball[k]
            if abs(r) > _VIOL_TOL * scale:
                sign[k] = 1.0 if r > 0 else -1.0
                p = k
                break
            # already satisfied; activate it so later steps keep it tight
            if active:
                A = (sign[active][:, None] * Nall[active]).T
                resid = Nall[k] - A @ np.linalg.lstsq(A, Nall[k], rcond=None)[0]
                if np.linalg.norm(resid) <= _DEP_TOL:
                    continue
            active.append(k)
            u.append(0.0)
        if p < 0:
            if m > n_eq:
                viol = Nall[n_eq:] @ y - ball[n_eq:]
                j = int(np.argmax(viol))
                if viol[j] <= _VIOL_TOL * scale:
                    return y
                p = n_eq + j
            else:
                return y
        n_p = sign[p] * Nall[p]
        b_p = sign[p] * ball[p]
        u_p = 0.0
        while True:
            viol = n_p @ y - b_p
            if viol <= _VIOL_TOL * scale:
                if p < n_eq or u_p > 0.0:
                    active.append(p)
                    u.append(u_p)
                break
            if active:
                A = (sign[active][:, None] * Nall[active]).T
                r = np.linalg.lstsq(A, n_p, rcond=None)[0]
                z = -(n_p - A @ r)
            else:
                r = np.zeros(0)
                z = -n_p
            zz = float(z @ z)
            # blocking ratio over active inequalities whose multipliers would shrink
            t2, block = np.inf, -1
            for pos, k in enumerate(active):
                if k >= n_eq and r[pos] > 1e-14:
                    ratio = u[pos] / r[pos]
                    if ratio < t2:
                        t2, block = ratio, pos
            if zz <= _DEP_TOL**2:
                if block < 0:
                    return None
                t = t2
            else:
                t = min(viol / zz, t2)
                y = y + t * z
            u = [uk - t * rk for uk, rk in zip(u, r)]
            u_p += t
            if block >= 0 and t == t2:
                del active[block]
                del u[block]
                continue
            active.append(p)
            u.append(u_p)
            break
    raise SolverFailure("active-set iteration budget exhausted")


def _pruned_others(sigma, S, tree, radius):
    centre = S[list(sigma)].mean(axis=0)
    if tree is None:
        near = np.flatnonzero(np.linalg.norm(S - centre, axis=1) <= 4.0 * radius)
    else:
        near = np.asarray(tree.query_ball_point(centre, 4.0 * radius), dtype=int)
    ss = set(sigma)
    return [int(j) for j in np.sort(near) if int(j) not in ss]


def miniball(P) -> tuple[np.ndarray, float]:
    """Smallest enclosing ball of a handful of points, by support-set enumeration."""
    P = np.asarray(P, dtype=float)
    best_c, best_r2 = None, np.inf
    n = P.shape[0]
    for size in range(1, n + 1):
        for sub in itertools.combinations(range(n), size):
            Q = P[list(sub)]
            D = Q[1:] - Q[0]
            if size > 1:
                G = D @ D.T
                rhs = 0.5 * np.sum(D * D, axis=1)
                lam, *_ = np.linalg.lstsq(G, rhs, rcond=None)
                if np.linalg.norm(G @ lam - rhs) > 1e-10 * (1 + np.abs(rhs).max()):
                    continue
                if np.any(lam < -1e-12) or lam.sum() > 1 + 1e-12:
                    continue
                c = Q[0] + lam @ D
            else:
                c = Q[0]
            r2 = float(np.max(np.sum((P - c) ** 2, axis=1)))
            if r2 < best_r2:
                best_c, best_r2 = c, r2
    return best_c, best_r2


def simplex_alpha_test(sigma, S, r: float, *, voronoi: bool = True, tree=None) -> FeasibilityResult:
    """Decide whether ``sigma`` is a simplex of Alpha(S, r).

    With ``voronoi=False`` the Voronoi constraints are dropped and this is the
    Cech test: does the smallest ball enclosing sigma have radius <= r.
    """
    S = np.asarray(S, dtype=float)
    sigma = tuple(int(i) for i in sigma)
    if len(sigma) == 0:
        raise ValueError("empty simplex")
    if not voronoi:
        c, r2 = miniball(S[list(sigma)])
        return FeasibilityResult(r2 <= r * r + FEAS_TOL, c if r2 <= r * r + FEAS_TOL else None, r2)
    s0 = S[sigma[0]]
    d = S.shape[1]

    def halfspaces(indices):
        V = S[list(indices)].reshape(-1, d) - s0
        nv = np.linalg.norm(V, axis=1)
        keep = nv > 1e-14
        return V[keep] / nv[keep, None], 0.5 * nv[keep]

    eq_rows, eq_offs = halfspaces(sigma[1:])
    in_rows, in_offs = halfspaces(_pruned_others(sigma, S, tree, r))
    y = least_distance(np.vstack([eq_rows, in_rows]), np.concatenate([eq_offs, in_offs]), eq_rows.shape[0], dim=d)
    if y is None:
        return FeasibilityResult(False, None, np.inf)
    r2 = float(y @ y)
    ok = r2 <= r * r + FEAS_TOL
    return FeasibilityResult(ok, s0 + y if ok else None, r2)


def neighbor_pairs(S, r: float) -> list[tuple[int, int]]:
    """All index pairs at Euclidean distance <= 2r."""
    S = np.asarray(S, dtype=float)
    if r <= 0:
        raise ValueError("radius must be positive")
    if S.shape[0] < 2:
        return []
    pairs = cKDTree(S).query_pairs(2.0 * r, output_type="ndarray")
    return sorted((int(i), int(j)) for i, j in pairs)


def nerve_oracle(sigma, S, r: float, resolution: int = 41, refine: int = 60) -> bool:
    """Brute-force check of the alpha condition for one simplex (low dimension only).

    Parametrises the affine flat of points equidistant from sigma, grids a
    box of half-width r around the flat point nearest s_0, then zooms the grid
    around the best point. The merit function is the larger of
    max_i |x - s_i| - r and the signed distances past the bisectors with the
    other points; sigma is accepted when its minimum is <= 0.
    """
    S = np.asarray(S, dtype=float)
    sigma = [int(i) for i in sigma]
    if S.shape[1] > 4:
        raise ValueError("nerve_oracle is meant for ambient dimension <= 4")
    if resolution < 5:
        raise ResolutionTooCoarse("need at least 5 grid points per axis")
    s0 = S[sigma[0]]
    D = S[sigma[1:]] - s0
    rhs = 0.5 * np.sum(D * D, axis=1)
    d = S.shape[1]
    if D.shape[0]:
        y0, *_ = np.linalg.lstsq(D, rhs, rcond=None)
        if np.linalg.norm(D @ y0 - rhs) > 1e-10:
            return False
        _, sv, vt = np.linalg.svd(D)
        rank = int(np.sum(sv > 1e-12))
        basis = vt[rank:]
    else:
        y0 = np.zeros(d)
        basis = np.eye(d)
    centre = s0 + y0
    others = np.array([j for j in range(S.shape[0]) if j not in set(sigma)], dtype=int)
    V = S[sigma]
    if others.size:
        nrm = S[others] - s0
        dist = np.linalg.norm(nrm, axis=1)
        keep = dist > 1e-14
        nrm, dist = nrm[keep] / dist[keep, None], dist[keep]
    else:
        nrm, dist = np.zeros((0, d)), np.zeros(0)

    def merit(coef):
        x = centre + coef @ basis
        g = np.sqrt(((x[:, None, :] - V[None]) ** 2).sum(-1)).max(axis=1) - r
        if dist.size:
            g = np.maximum(g, ((x - s0) @ nrm.T - 0.5 * dist).max(axis=1))
        return g

    k = basis.shape[0]
    if k == 0:
        return bool(merit(np.zeros((1, 0)))[0] <= 0.0)
    half = r * (1.0 + 1e-9)
    best = np.zeros(k)
    for _ in range(refine + 1):
        axis = np.linspace(-half, half, resolution)
        grid = np.stack(np.meshgrid(*([axis] * k), indexing="ij"), -1).reshape(-1, k) + best
        vals = merit(grid)
        j = int(np.argmin(vals))
        best = grid[j]
        if vals[j] <= 0.0:
            return True
        half *= 4.0 / (resolution - 1)
        if half < 1e-14 * (1.0 + r):
            break
    return False


@dataclass
class SimplicialComplex:
    """Vertices plus sorted vertex tuples grouped by dimension.

    ``maxdim`` is the highest dimension that was computed, which may exceed
    the highest dimension that is non-empty.
    """

    vertices: np.ndarray
    simplices: dict[int, list[tuple[int, ...]]] = field(default_factory=dict)
    maxdim: int = 0

    def counts(self) -> list[int]:
        return [len(self.simplices.get(k, [])) for k in range(self.maxdim + 1)]

    def __getitem__(self, k):
        return self.simplices.get(k, [])

    def check(self):
        for k in range(self.maxdim + 1):
            seen = set()
            lower = set(self[k - 1]) if k > 0 else None
            for s in self[k]:
                assert len(s) == k + 1 and list(s) == sorted(set(s)), s
                assert s not in seen, s
                seen.add(s)
                if lower is not None:
                    for face in itertools.combinations(s, k):
                        assert face in lower, (s, face)

    def to_json(self) -> str:
        doc = {
            "dimension": int(self.vertices.shape[1]) if self.vertices.ndim == 2 else 0,
            "maxdim": self.maxdim,
            "vertices": self.vertices.tolist(),
            "simplices": {str(k): [list(s) for s in self[k]] for k in range(self.maxdim + 1)},
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "SimplicialComplex":
        doc = json.loads(text)
        dim = int(doc.get("dimension", 0))
        verts = np.asarray(doc.get("vertices", []), dtype=float).reshape(-1, dim) if dim else np.zeros((0, 0))
        simp = {int(k): [tuple(int(i) for i in s) for s in v] for k, v in doc["simplices"].items()}
        maxdim = int(doc.get("maxdim", max(simp) if simp else 0))
        if 0 not in simp:
            simp[0] = [(i,) for i in range(verts.shape[0])]
        return cls(verts, simp, maxdim)


def build_complex(S, r: float, maxdim: int, inflate: float = 1.0, workers: int = 1) -> SimplicialComplex:
    """Alpha(S, inflate * r) up to dimension ``maxdim``.

    Candidates of dimension k are cofaces of accepted (k-1)-simplices whose
    every facet was accepted, which loses nothing because alpha simplices
    are cliques of the neighbour graph and the complex is closed under faces.
    """
    S = np.asarray(S, dtype=float)
    if maxdim < 0:
        raise ValueError("maxdim must be >= 0")
    if inflate < 1.0:
        raise ValueError("inflate must be >= 1")
    n = S.shape[0]
    R = inflate * r
    cx = SimplicialComplex(S.reshape(n, S.shape[-1] if S.ndim == 2 else -1), {0: [(i,) for i in range(n)]}, maxdim)
    if n == 0 or maxdim == 0:
        return cx
    tree = cKDTree(S)

    def test(sigma):
        try:
            return simplex_alpha_test(sigma, S, R, tree=tree).feasible
        except SolverFailure as exc:
            raise SolverFailure(f"{exc} for simplex {sigma}", simplex=sigma) from exc

    def run(cands):
        if workers > 1 and len(cands) > 64:
            with ThreadPoolExecutor(workers) as pool:
                flags = list(pool.map(test, cands, chunksize=32))
        else:
            flags = [test(c) for c in cands]
        return [c for c, ok in zip(cands, flags) if ok]

    edges = run(neighbor_pairs(S, R))
    cx.simplices[1] = edges
    nbrs: list[set[int]] = [set() for _ in range(n)]
    for i, j in edges:
        nbrs[i].add(j)
        nbrs[j].add(i)
    for k in range(2, maxdim + 1):
        prev = cx.simplices[k - 1]
        prev_set = set(prev)
        cands = []
        for s in prev:
            common = set.intersection(*(nbrs[i] for i in s))
            for v in sorted(w for w in common if w > s[-1]):
                cand = s + (v,)
                if all(f in prev_set for f in itertools.combinations(cand, k)):
                    cands.append(cand)
        cx.simplices[k] = run(cands)
    return cx
