"""Preprocessing, synthetic data and the end-to-end run.

Raw activity is a T x N matrix (time steps by channels). Preprocessing
smooths each channel in time, z-scores it, keeps the top singular
directions and puts every row on the unit sphere. The points then go
through density, threshold, sampling, landmarks, complex and homology.
"""
from __future__ import annotations

import dataclasses
import time
import warnings
from dataclasses import dataclass, field

import numpy as np
import yaml
from scipy.ndimage import gaussian_filter1d

from .alpha import SimplicialComplex, build_complex
from .embedding import EmbeddingState, NeighborGraph, metropolis_embed
from .errors import AllRowsZero, DegenerateColumn, DroppedRows, EmptyModel, RankDeficient, StageError
from .homology import betti_numbers
from .kde import KdeModel
from .sampler import LandmarkSet, RngStream, _as_generator, default_workers, quantile_threshold, sample_transported, select_landmarks
from .sphere import random_rotation


def as_matrix(A) -> np.ndarray:
    """Validate a time-series matrix: 2-D, finite, at least one row and column."""
    A = np.asarray(A, dtype=float)
    if A.ndim == 1:
        A = A[:, None]
    if A.ndim != 2 or A.shape[0] < 1 or A.shape[1] < 1:
        raise EmptyModel(f"need a non-empty T x N matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


def gaussian_smooth(A, sigma: float) -> np.ndarray:
    """Smooth every column with a normalised Gaussian truncated at 4 sigma, reflective ends."""
    A = as_matrix(A)
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return A
    return gaussian_filter1d(A, sigma, axis=0, mode="reflect", truncate=4.0)


def zscore_columns(A) -> np.ndarray:
    """Centre each column and scale to unit population variance; constant columns become 0."""
    A = as_matrix(A)
    mu = A.mean(axis=0)
    sd = A.std(axis=0)
    flat = sd <= 1e-12 * np.maximum(np.abs(mu), 1.0)
    if np.any(flat):
        warnings.warn(f"{int(flat.sum())} constant column(s) set to zero", DegenerateColumn, stacklevel=2)
    out = (A - mu) / np.where(flat, 1.0, sd)
    out[:, flat] = 0.0
    return out


def svd_reduce(A, k: int) -> np.ndarray:
    """Scores U_k S_k on the top ``k`` right singular vectors."""
    A = as_matrix(A)
    if not 1 <= k <= min(A.shape):
        raise ValueError(f"k = {k} outside 1..{min(A.shape)}")
    U, sv, _ = np.linalg.svd(A, full_matrices=False)
    if sv[0] == 0 or sv[k - 1] / sv[0] < 1e-12:
        warnings.warn(f"rank below {k}: sigma_k / sigma_1 = {sv[k - 1] / sv[0] if sv[0] else 0.0:.3g}", RankDeficient, stacklevel=2)
    return U[:, :k] * sv[:k]


def row_normalize(A, report: dict | None = None) -> np.ndarray:
    """Scale nonzero rows to unit norm and drop zero rows.

    The number of dropped rows goes into ``report["dropped_rows"]`` when a
    dict is given, and a DroppedRows warning is issued.
    """
    A = as_matrix(A)
    norms = np.linalg.norm(A, axis=1)
    keep = norms > 0
    dropped = int(np.sum(~keep))
    if report is not None:
        report["dropped_rows"] = dropped
    if not np.any(keep):
        raise AllRowsZero("every row is zero")
    if dropped:
        warnings.warn(f"dropped {dropped} zero row(s)", DroppedRows, stacklevel=2)
    return A[keep] / norms[keep, None]


def preprocess(A, smoothing_sigma: float = 5.0, svd_dim: int = 6, report: dict | None = None) -> np.ndarray:
    A = gaussian_smooth(A, smoothing_sigma)
    A = zscore_columns(A)
    A = svd_reduce(A, min(svd_dim, *A.shape))
    return row_normalize(A, report)


def synth_torus(n: int, noise: float, ambient_dim: int, rng, rotate: bool = True) -> np.ndarray:
    """Noisy Clifford torus (cos u, sin u, cos v, sin v) / sqrt 2 on S^{ambient_dim - 1}.

    u and v are uniform; Gaussian noise of scale ``noise`` is added before
    renormalising, then the points are zero padded and (optionally) rotated
    by a Haar-random orthogonal matrix.
    """
    if ambient_dim < 4:
        raise ValueError("ambient_dim must be >= 4")
    gen = _as_generator(rng)
    u, v = gen.uniform(0.0, 2 * np.pi, (2, n))
    P = np.stack([np.cos(u), np.sin(u), np.cos(v), np.sin(v)], axis=1) / np.sqrt(2.0)
    if noise > 0:
        P = P + noise * gen.standard_normal(P.shape)
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    P = np.hstack([P, np.zeros((n, ambient_dim - 4))])
    if rotate:
        P = P @ random_rotation(ambient_dim, gen).T
        P /= np.linalg.norm(P, axis=1, keepdims=True)
    return P


@dataclass
class PipelineConfig:
    smoothing_sigma: float = 5.0
    svd_dim: int = 6
    bandwidth_h: float = 0.3
    quantile_a: float = 0.9
    separation_s: float = 0.4
    samples_M: int = 50_000
    inflate: float = 1.1
    maxdim: int = 3
    seed: int = 0
    radial: str = "beta"
    intrinsic: bool = True
    embed_dim: int = 3
    embed_iters: int = 0
    threads: int | None = None

    def __post_init__(self):
        if self.smoothing_sigma < 0:
            raise ValueError("smoothing_sigma must be >= 0")
        if not 0 < self.bandwidth_h < 1:
            raise ValueError("bandwidth_h must lie in (0, 1) so that t = 1/h^2 > 1")
        if not 0 < self.quantile_a < 1:
            raise ValueError("quantile_a must lie in (0, 1)")
        if not 0 < self.separation_s < 1:
            raise ValueError("separation_s must lie in (0, 1)")
        if self.samples_M < 1 or self.svd_dim < 1:
            raise ValueError("samples_M and svd_dim must be positive")
        if self.inflate < 1:
            raise ValueError("inflate must be >= 1")
        if self.maxdim < 1:
            raise ValueError("maxdim must be >= 1")

    @property
    def exponent(self) -> float:
        return 1.0 / self.bandwidth_h**2

    @classmethod
    def from_dict(cls, doc: dict) -> "PipelineConfig":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(doc) - names
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**doc)

    @classmethod
    def load(cls, path) -> "PipelineConfig":
        with open(path) as fh:
            doc = yaml.safe_load(fh) or {}
        return cls.from_dict(doc)

    def to_yaml(self) -> str:
        return yaml.safe_dump(dataclasses.asdict(self), sort_keys=False)

    def save(self, path) -> None:
        with open(path, "w") as fh:
            fh.write(self.to_yaml())


@dataclass
class PipelineResult:
    report: dict
    points: np.ndarray | None = None
    landmarks: LandmarkSet | None = None
    complex: SimplicialComplex | None = None
    embedding: EmbeddingState | None = None
    timings: dict = field(default_factory=dict)


def _looks_normalized(X) -> bool:
    X = np.asarray(X, dtype=float)
    return X.ndim == 2 and X.size > 0 and bool(np.all(np.abs(np.linalg.norm(X, axis=1) - 1.0) <= 1e-12))


def run_pipeline(data, cfg: PipelineConfig, *, preprocessed: bool | None = None, progress=None) -> PipelineResult:
    """Run every stage and collect a report.

    ``preprocessed=None`` skips preprocessing exactly when every row of
    ``data`` already has unit norm. Errors are re-raised as StageError with
    the name of the failing stage. ``progress`` is called with a message per
    stage.
    """
    say = progress or (lambda msg: None)
    workers = cfg.threads or default_workers()
    report: dict = {"seed": cfg.seed}
    timings: dict = {}
    res = PipelineResult(report, timings=timings)

    def stage(name, fn):
        say(f"{name} ...")
        t0 = time.perf_counter()
        try:
            out = fn()
        except StageError:
            raise
        except Exception as exc:
            raise StageError(name, exc) from exc
        timings[name] = time.perf_counter() - t0
        return out

    if preprocessed is None:
        preprocessed = _looks_normalized(data)
    if preprocessed:
        X = stage("input", lambda: row_normalize(data, report))
    else:
        X = stage("preprocess", lambda: preprocess(data, cfg.smoothing_sigma, cfg.svd_dim, report))
    res.points = X
    report["points"] = X.shape[0]
    report["dimension"] = X.shape[1]

    model = stage("model", lambda: KdeModel(X, np.full(X.shape[0], 1.0 / X.shape[0]), cfg.exponent))
    report["exponent_t"] = model.exponent
    a = stage("threshold", lambda: quantile_threshold(model, cfg.quantile_a))
    report["threshold_a"] = a
    batch = stage(
        "sampling",
        lambda: sample_transported(model, cfg.samples_M, cfg.seed, intrinsic=cfg.intrinsic, radial=cfg.radial, workers=workers),
    )
    report["samples"] = len(batch)
    L = stage("landmarks", lambda: select_landmarks(batch, a, cfg.separation_s, model.exponent))
    res.landmarks = L
    report["landmarks"] = len(L)
    report["radius_r"] = L.radius_r
    cx = stage("complex", lambda: build_complex(L.images, L.radius_r, cfg.maxdim, cfg.inflate, workers))
    res.complex = cx
    report["simplex_counts"] = cx.counts()
    report["betti"] = stage("homology", lambda: betti_numbers(cx, cfg.maxdim - 1))
    if cfg.embed_iters > 0:
        res.embedding = stage(
            "embedding",
            lambda: metropolis_embed(NeighborGraph.from_complex(cx), cfg.embed_dim, cfg.embed_iters, rng=RngStream(cfg.seed, 1)),
        )
        report["embedding_loss"] = res.embedding.loss
    report["workers"] = workers
    return res


def format_report(report: dict) -> str:
    """``key: value`` lines; lists are space separated."""
    lines = []
    for key, val in report.items():
        if isinstance(val, (list, tuple)):
            val = " ".join(str(v) for v in val)
        elif isinstance(val, float):
            val = repr(val)
        lines.append(f"{key}: {val}")
    return "\n".join(lines) + "\n"
