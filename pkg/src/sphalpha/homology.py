"""Betti numbers over GF(2) from boundary-matrix ranks.

Columns are Python ints used as bitsets; XOR is column addition mod 2.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

from .alpha import SimplicialComplex
from .errors import DimensionOutOfRange, InsufficientDimension


@dataclass
class BoundaryMatrix:
    rows: int
    cols: int
    columns: list[int]

    def to_dense(self):
        import numpy as np

        out = np.zeros((self.rows, self.cols), dtype=np.uint8)
        for j, col in enumerate(self.columns):
            while col:
                low = col & -col
                out[low.bit_length() - 1, j] = 1
                col ^= low
        return out

    @classmethod
    def from_dense(cls, M) -> "BoundaryMatrix":
        import numpy as np

        M = np.asarray(M) % 2
        cols = [sum(1 << int(i) for i in np.flatnonzero(M[:, j])) for j in range(M.shape[1])]
        return cls(M.shape[0], M.shape[1], cols)


def boundary_matrix(c: SimplicialComplex, k: int) -> BoundaryMatrix:
    """Facet incidence of k-simplices (columns) on (k-1)-simplices (rows)."""
    if not 1 <= k <= c.maxdim:
        raise DimensionOutOfRange(f"k = {k} outside 1..{c.maxdim}")
    index = {s: i for i, s in enumerate(c[k - 1])}
    cols = []
    for s in c[k]:
        bits = 0
        for face in itertools.combinations(s, k):
            bits |= 1 << index[face]
        cols.append(bits)
    return BoundaryMatrix(len(c[k - 1]), len(c[k]), cols)


def rank_gf2(m: BoundaryMatrix) -> int:
    """Rank over GF(2) by column reduction keyed on the highest set bit."""
    pivots: dict[int, int] = {}
    for col in m.columns:
        while col:
            top = col.bit_length() - 1
            other = pivots.get(top)
            if other is None:
                pivots[top] = col
                break
            col ^= other
    return len(pivots)


def betti_numbers(c: SimplicialComplex, top: int) -> list[int]:
    """beta_0 .. beta_top; needs simplices up to dimension top + 1."""
    if top < 0:
        raise ValueError("top must be >= 0")
    if top + 1 > c.maxdim:
        raise InsufficientDimension(f"need simplices up to dimension {top + 1}, complex has {c.maxdim}")
    ranks = [0] + [rank_gf2(boundary_matrix(c, k)) for k in range(1, top + 2)]
    return [len(c[k]) - ranks[k] - ranks[k + 1] for k in range(top + 1)]


def euler_characteristic(c: SimplicialComplex) -> int:
    return sum((-1) ** k * len(c[k]) for k in range(c.maxdim + 1))


def closure(top_simplices, n_vertices: int | None = None, maxdim: int | None = None) -> SimplicialComplex:
    """Face closure of a list of simplices, for building fixtures by hand."""
    import numpy as np

    faces: dict[int, set] = {}
    for s in top_simplices:
        s = tuple(sorted(s))
        for k in range(1, len(s) + 1):
            for f in itertools.combinations(s, k):
                faces.setdefault(k - 1, set()).add(f)
    verts = sorted(v for (v,) in faces.get(0, ()))
    n = n_vertices if n_vertices is not None else (verts[-1] + 1 if verts else 0)
    faces[0] = {(i,) for i in range(n)}
    top = max(faces) if maxdim is None else maxdim
    simp = {k: sorted(faces.get(k, ())) for k in range(top + 1)}
    return SimplicialComplex(np.zeros((n, 0)), simp, top)
