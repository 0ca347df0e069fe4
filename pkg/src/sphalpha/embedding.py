"""Low-dimensional layout of a graph by Metropolis sampling of a KL loss.

The target P puts equal mass on every edge; the layout similarities are
Student-t, Q_ij proportional to 1 / (1 + |z_i - z_j|^2) over i != j, as in
t-SNE. One vertex moves per step and only its row of Q is recomputed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import EmptyGraph
from .sampler import RngStream, _as_generator

RESYNC = 10_000


@dataclass
class NeighborGraph:
    n: int
    edges: list[tuple[int, int]]

    def __post_init__(self):
        clean = set()
        for i, j in self.edges:
            i, j = int(i), int(j)
            if i == j:
                raise ValueError("self-loops are not allowed")
            if not (0 <= i < self.n and 0 <= j < self.n):
                raise ValueError(f"edge ({i}, {j}) out of range")
            clean.add((min(i, j), max(i, j)))
        self.edges = sorted(clean)

    @classmethod
    def from_complex(cls, cx) -> "NeighborGraph":
        return cls(len(cx[0]), list(cx[1]))

    @classmethod
    def cycle(cls, n: int) -> "NeighborGraph":
        return cls(n, [(i, (i + 1) % n) for i in range(n)])


def target_probabilities(g: NeighborGraph) -> np.ndarray:
    if not g.edges:
        raise EmptyGraph("graph has no edges")
    P = np.zeros((g.n, g.n))
    e = np.array(g.edges)
    P[e[:, 0], e[:, 1]] = P[e[:, 1], e[:, 0]] = 1.0 / (2 * len(g.edges))
    return P


def _similarities(coords):
    sq = np.sum((coords[:, None, :] - coords[None, :, :]) ** 2, axis=-1)
    W = 1.0 / (1.0 + sq)
    np.fill_diagonal(W, 0.0)
    return W


def kl_loss(P, coords) -> float:
    """KL(P || Q) with Student-t similarities Q."""
    P = np.asarray(P, dtype=float)
    W = _similarities(np.asarray(coords, dtype=float))
    Q = W / W.sum()
    mask = P > 0
    return float(np.sum(P[mask] * (np.log(P[mask]) - np.log(Q[mask]))))


@dataclass
class GeometricSchedule:
    """tau_k = start * ratio**k."""

    start: float
    ratio: float

    def __call__(self, k: int) -> float:
        return self.start * self.ratio**k

    @classmethod
    def spanning(cls, start: float, iters: int, final_fraction: float = 1e-3) -> "GeometricSchedule":
        return cls(start, final_fraction ** (1.0 / max(iters, 1)))


@dataclass
class EmbeddingState:
    coords: np.ndarray
    temperature: float
    loss: float
    accepted: int = 0
    steps: int = 0
    history: list[float] = field(default_factory=list)
    max_drift: float = 0.0
    initial_loss: float = float("nan")


def metropolis_embed(
    g: NeighborGraph,
    dim: int = 3,
    iters: int = 100_000,
    schedule=None,
    rng=0,
    *,
    init_scale: float = 1e-2,
    step_fraction: float = 0.05,
    target_accept: float = 0.4,
    chains: int = 1,
    record_every: int = 0,
    resync: int = RESYNC,
    max_step: float = 10.0,
) -> EmbeddingState:
    """Minimise kl_loss over layouts by single-vertex Metropolis moves.

    ``schedule`` maps the step index to a temperature; the default cools
    geometrically from 0.1 x the initial loss to 1e-3 of that. The best
    state visited is returned. The proposal scale adapts toward
    ``target_accept`` but never exceeds ``max_step``; far apart the Student-t
    loss is almost scale free and an unbounded step lets the layout inflate.
    With ``chains > 1`` independent chains run on
    streams ``stream_id + c`` and the lowest loss wins.
    """
    if dim < 2 or iters < 1:
        raise ValueError("need dim >= 2 and iters >= 1")
    base = rng if isinstance(rng, RngStream) else None
    best = None
    for c in range(chains):
        if base is not None:
            gen = RngStream(base.seed, base.stream_id + c).generator()
        elif chains > 1:
            gen = RngStream(int(rng), c).generator()
        else:
            gen = _as_generator(rng)
        st = _run_chain(g, dim, iters, schedule, gen, init_scale, step_fraction, target_accept, record_every, resync, max_step)
        if best is None or st.loss < best.loss:
            best = st
    return best


def _run_chain(g, dim, iters, schedule, gen, init_scale, step_fraction, target_accept, record_every, resync, max_step):
    P = target_probabilities(g)
    n = g.n
    nbrs = [[] for _ in range(n)]
    for i, j in g.edges:
        nbrs[i].append(j)
        nbrs[j].append(i)
    nbrs = [np.array(v, dtype=int) for v in nbrs]
    p_edge = 1.0 / (2 * len(g.edges))
    plogp = math.log(p_edge)

    z = init_scale * gen.standard_normal((n, dim))
    W = _similarities(z)
    Z = Z_sync = W.sum()
    logw_edges = sum(2 * p_edge * math.log(W[i, j]) for i, j in g.edges)
    loss = plogp - logw_edges + math.log(Z)
    if schedule is None:
        schedule = GeometricSchedule.spanning(0.1 * loss, iters)
    sigma = step_fraction * math.sqrt(np.mean(z * z))
    best_z, best_loss = z.copy(), loss
    start_loss = loss
    accepted = 0
    window_acc = 0
    drift = 0.0
    history = []
    block = 4096
    for lo in range(0, iters, block):
        size = min(block, iters - lo)
        ks = gen.integers(0, n, size=size)
        steps = gen.standard_normal((size, dim))
        us = gen.random(size)
        for off in range(size):
            it = lo + off
            k = ks[off]
            new = z[k] + sigma * steps[off]
            diff = z - new
            w_new = 1.0 / (1.0 + np.einsum("ij,ij->i", diff, diff))
            w_new[k] = 0.0
            w_old = W[k]
            Z_new = Z + 2.0 * (w_new.sum() - w_old.sum())
            nb = nbrs[k]
            d_edges = 2.0 * p_edge * float(np.sum(np.log(w_new[nb]) - np.log(w_old[nb])))
            new_loss = plogp - (logw_edges + d_edges) + math.log(Z_new)
            delta = new_loss - loss
            tau = schedule(it)
            if delta <= 0.0 or us[off] < math.exp(-delta / tau):
                z[k] = new
                W[k, :] = w_new
                W[:, k] = w_new
                Z = Z_new
                logw_edges += d_edges
                loss = new_loss
                accepted += 1
                window_acc += 1
                if loss < best_loss:
                    best_loss = loss
                    best_z = z.copy()
            if (it + 1) % 200 == 0:
                rate = window_acc / 200.0
                sigma = min(sigma * math.exp(rate - target_accept), max_step)
                window_acc = 0
            # the running sum of Z loses relative precision as the layout spreads out
            if (it + 1) % resync == 0 or Z < 1e-2 * Z_sync:
                W = _similarities(z)
                Z = W.sum()
                logw_edges = sum(2 * p_edge * math.log(W[i, j]) for i, j in g.edges)
                fresh = plogp - logw_edges + math.log(Z)
                drift = max(drift, abs(fresh - loss))
                loss = fresh
                Z_sync = Z
            if record_every and (it + 1) % record_every == 0:
                history.append(loss)
    best_loss = kl_loss(P, best_z)
    return EmbeddingState(best_z, schedule(iters), best_loss, accepted, iters, history, drift, start_loss)
