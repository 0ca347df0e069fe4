"""Sampling the kernel measure, pushing samples through T, and landmark selection."""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, EmptyModel
from .kde import KdeModel, TransportedSample

CHUNK = 4096


@dataclass(frozen=True)
class RngStream:
    """Seed plus stream index; each pair yields an independent, reproducible generator."""

    seed: int
    stream_id: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed & 0xFFFFFFFFFFFFFFFF, spawn_key=(self.stream_id,))
        return np.random.default_rng(ss)


def default_workers() -> int:
    env = os.environ.get("SPHALPHA_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    return np.random.default_rng(rng)


def draw_mu(m: KdeModel, size: int, gen: np.random.Generator, radial: str = "beta") -> np.ndarray:
    """Draw ``size`` points from the measure with density f.

    A centre x_i is chosen with probability proportional to a_i, then the
    cosine c = x . x_i is drawn and the point is placed on a uniformly random
    great circle through x_i.

    radial="beta" draws c ~ Beta(t + 1, (d - 1) / 2). radial="exact" uses
    the true marginal c^t (1 - c^2)^{(d-3)/2} of a uniform hemisphere point
    weighted by the kernel, via c^2 ~ Beta((t + 1) / 2, (d - 1) / 2). The two
    agree for d = 3.
    """
    if m.n == 0:
        raise EmptyModel("cannot sample an empty model")
    d, t = m.dim, m.exponent
    p = m.weights / m.weights.sum()
    idx = gen.choice(m.n, size=size, p=p)
    if radial == "beta":
        c = gen.beta(t + 1.0, (d - 1) / 2.0, size=size)
    elif radial == "exact":
        c = np.sqrt(gen.beta((t + 1.0) / 2.0, (d - 1) / 2.0, size=size))
    else:
        raise ValueError(f"unknown radial law {radial!r}")
    centres = m.points[idx]
    v = gen.standard_normal((size, d))
    v -= np.sum(v * centres, axis=1, keepdims=True) * centres
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    x = c[:, None] * centres + np.sqrt(np.clip(1.0 - c * c, 0.0, None))[:, None] * v
    return x / np.linalg.norm(x, axis=1, keepdims=True)


def sample_mu(m: KdeModel, rng, radial: str = "beta") -> np.ndarray:
    return draw_mu(m, 1, _as_generator(rng), radial)[0]


def transport_sample(m: KdeModel, rng, radial: str = "beta") -> TransportedSample:
    x = sample_mu(m, rng, radial)
    return m.conjugate_at_transport(x)


def data_frame(points, rtol: float = 1e-10) -> np.ndarray:
    """Orthonormal basis (rows) of the span of ``points`` with data-intrinsic signs.

    Singular vectors are sorted by singular value and each is oriented so the
    data's third moment along it is positive, so that a rotated copy of the
    data gets the rotated copy of the frame.
    """
    X = np.asarray(points, dtype=float)
    _, sv, vt = np.linalg.svd(X, full_matrices=False)
    k = int(np.sum(sv > rtol * sv[0]))
    B = vt[:k].copy()
    proj = X @ B.T
    for j in range(k):
        skew = float(np.sum(proj[:, j] ** 3))
        if abs(skew) <= 1e-9 * float(np.sum(np.abs(proj[:, j]) ** 3)):
            big = np.flatnonzero(np.abs(proj[:, j]) > 1e-8)
            skew = proj[big[0], j] if big.size else 1.0
        if skew < 0:
            B[j] = -B[j]
    return B


@dataclass
class TransportBatch:
    """M transported samples stored column-wise."""

    sources: np.ndarray
    images: np.ndarray
    values: np.ndarray
    log_density: np.ndarray

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i) -> TransportedSample:
        return TransportedSample(self.sources[i], self.images[i], float(self.values[i]))


def sample_transported(
    m: KdeModel,
    count: int,
    seed: int,
    *,
    intrinsic: bool = True,
    radial: str = "beta",
    workers: int | None = None,
    chunk: int = CHUNK,
) -> TransportBatch:
    """Draw ``count`` samples of mu and push them through T.

    Chunk j is drawn from ``RngStream(seed, j)`` and chunks are concatenated
    in index order, so the result does not depend on ``workers``.

    With ``intrinsic=True`` sampling happens on the unit sphere of the span of
    the data. The pushforward of mu under T is unchanged by this reduction,
    and the output no longer depends on how the data is isometrically
    embedded.
    """
    if m.n == 0:
        raise EmptyModel("cannot sample an empty model")
    frame = data_frame(m.points) if intrinsic else None
    work = m
    if frame is not None:
        coords = m.points @ frame.T
        coords /= np.linalg.norm(coords, axis=1, keepdims=True)
        work = KdeModel(coords, m.weights, m.exponent)

    def run(j):
        size = min(chunk, count - j * chunk)
        x = draw_mu(work, size, RngStream(seed, j).generator(), radial)
        psi, y, val = work.transport_many(x)
        return x, y, val, psi

    n_chunks = -(-count // chunk)
    workers = workers or default_workers()
    if workers > 1 and n_chunks > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(run, range(n_chunks)))
    else:
        parts = [run(j) for j in range(n_chunks)]
    if not parts:
        d = m.dim
        return TransportBatch(np.empty((0, d)), np.empty((0, d)), np.empty(0), np.empty(0))
    x, y, val, psi = (np.concatenate(p) for p in zip(*parts))
    if frame is not None:
        x, y = x @ frame, y @ frame
    return TransportBatch(x, y, val, psi)


def separation_radius(s: float, t: float) -> float:
    """Chordal distance at which the kernel equals s: sqrt(2 - 2 s^(1/t))."""
    if not 0.0 < s < 1.0:
        raise DomainError(f"separation s must lie in (0, 1), got {s}")
    if not t > 0.0:
        raise DomainError(f"exponent t must be positive, got {t}")
    return math.sqrt(2.0 - 2.0 * s ** (1.0 / t))


@dataclass
class LandmarkSet:
    images: np.ndarray
    sources: np.ndarray
    values: np.ndarray
    threshold_a: float
    separation_s: float
    exponent: float
    radius_r: float = field(init=False)

    def __post_init__(self):
        self.radius_r = separation_radius(self.separation_s, self.exponent)

    def __len__(self):
        return self.values.shape[0]

    @property
    def landmarks(self) -> list[TransportedSample]:
        return [TransportedSample(self.sources[i], self.images[i], float(self.values[i])) for i in range(len(self))]

    def check(self):
        """Assert the separation and threshold invariants."""
        if len(self) == 0:
            return
        assert np.all(self.values >= self.threshold_a)
        dots = np.clip(self.images @ self.images.T, 0.0, None)
        np.fill_diagonal(dots, 0.0)
        assert np.all(dots**self.exponent < self.separation_s)


def select_landmarks(samples, a: float, s: float, t: float) -> LandmarkSet:
    """Greedy separated subset, visiting samples in decreasing conjugate value.

    A sample is admitted when its value is at least ``a`` and its kernel with
    every image already admitted is below ``s``. Ties in value keep input order.
    """
    if not isinstance(samples, TransportBatch):
        samples = list(samples)
        d = samples[0].image.shape[0] if samples else 1
        samples = TransportBatch(
            np.array([q.source for q in samples]).reshape(-1, d),
            np.array([q.image for q in samples]).reshape(-1, d),
            np.array([q.conjugate_value for q in samples], dtype=float),
            np.full(len(samples), np.nan),
        )
    separation_radius(s, t)
    vals = samples.values
    order = np.lexsort((np.arange(vals.shape[0]), -vals))
    d = samples.images.shape[1] if samples.images.ndim == 2 else 1
    chosen = []
    admitted = np.empty((0, d))
    for i in order:
        if not vals[i] >= a:
            break
        y = samples.images[i]
        if admitted.shape[0]:
            dots = admitted @ y
            if np.any(np.clip(dots, 0.0, None) ** t >= s):
                continue
        chosen.append(i)
        admitted = np.vstack([admitted, y])
    chosen = np.asarray(chosen, dtype=int)
    out = LandmarkSet(
        samples.images[chosen].reshape(-1, d),
        samples.sources[chosen].reshape(-1, d),
        vals[chosen],
        a,
        s,
        t,
    )
    out.check()
    return out


def quantile_threshold(m: KdeModel, quantile: float) -> float:
    """Threshold a such that psi(x_i) >= a for a ``quantile`` fraction of the data."""
    if not 0.0 < quantile < 1.0:
        raise DomainError("quantile must lie in (0, 1)")
    psi = m.log_density_many(m.points)
    return float(np.quantile(psi, 1.0 - quantile))
