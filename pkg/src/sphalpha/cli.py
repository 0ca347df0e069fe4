"""Command-line entry point: ``sphalpha <command> [flags]``.

Machine-readable results go to stdout, progress to stderr. Exit codes: 0
success, 1 usage error, 2 computational failure (message carries the stage).
"""
from __future__ import annotations

import argparse
import json
import sys
import warnings

import numpy as np

from . import matio
from .alpha import SimplicialComplex, build_complex
from .embedding import NeighborGraph, metropolis_embed
from .errors import StageError
from .homology import betti_numbers
from .kde import KdeModel
from .pipeline import PipelineConfig, format_report, run_pipeline, synth_torus
from .sampler import RngStream, default_workers, quantile_threshold, sample_transported, select_landmarks, separation_radius

_DEFAULTS = PipelineConfig()


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _common(p):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--threads", type=int, default=None, help="worker cap (default: SPHALPHA_THREADS or CPU count)")
    p.add_argument("--binary", action="store_true", help="write file outputs in the packed binary format")


def _model_flags(p):
    p.add_argument("--points", required=True, help="unit-norm data points, one per row")
    p.add_argument("--bandwidth_h", type=float, default=_DEFAULTS.bandwidth_h)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="sphalpha", description="Spherical kernel densities, transport and alpha complexes.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("density", help="psi, T and psi^c(T) at query points")
    _common(p)
    _model_flags(p)
    p.add_argument("--queries", required=True)

    p = sub.add_parser("transport", help="sample mu and push through T")
    _common(p)
    _model_flags(p)
    p.add_argument("--samples_M", type=int, default=_DEFAULTS.samples_M)
    p.add_argument("--radial", choices=["beta", "exact"], default=_DEFAULTS.radial)
    p.add_argument("--out")

    p = sub.add_parser("landmarks", help="threshold, sample and select separated landmarks")
    _common(p)
    _model_flags(p)
    p.add_argument("--quantile_a", type=float, default=_DEFAULTS.quantile_a)
    p.add_argument("--separation_s", type=float, default=_DEFAULTS.separation_s)
    p.add_argument("--samples_M", type=int, default=_DEFAULTS.samples_M)
    p.add_argument("--radial", choices=["beta", "exact"], default=_DEFAULTS.radial)
    p.add_argument("--out")

    p = sub.add_parser("complex", help="alpha complex on landmark images")
    _common(p)
    p.add_argument("--landmarks", required=True, help="landmark points, one per row")
    p.add_argument("--bandwidth_h", type=float, default=_DEFAULTS.bandwidth_h)
    p.add_argument("--separation_s", type=float, default=_DEFAULTS.separation_s)
    p.add_argument("--inflate", type=float, default=_DEFAULTS.inflate)
    p.add_argument("--maxdim", type=int, default=_DEFAULTS.maxdim)
    p.add_argument("--out")

    p = sub.add_parser("betti", help="Betti numbers of a stored complex")
    _common(p)
    p.add_argument("--complex", required=True)
    p.add_argument("--top", type=int, default=None, help="highest Betti number (default maxdim - 1)")

    p = sub.add_parser("embed", help="Metropolis layout of a complex's 1-skeleton")
    _common(p)
    p.add_argument("--complex", required=True)
    p.add_argument("--embed_dim", type=int, default=3)
    p.add_argument("--embed_iters", type=int, default=100_000)
    p.add_argument("--chains", type=int, default=1)
    p.add_argument("--out")

    p = sub.add_parser("synth-torus", help="noisy Clifford torus on a sphere")
    _common(p)
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--noise", type=float, default=0.12)
    p.add_argument("--ambient_dim", type=int, default=6)
    p.add_argument("--no-rotate", action="store_true")
    p.add_argument("--out")

    p = sub.add_parser("pipeline", help="end-to-end run with a report")
    _common(p)
    p.add_argument("--config", help="YAML file with PipelineConfig fields")
    p.add_argument("--input", help="time-series matrix or unit points (default: synthetic torus)")
    for f in ("smoothing_sigma", "bandwidth_h", "quantile_a", "separation_s", "inflate"):
        p.add_argument(f"--{f}", type=float, default=None)
    for f in ("svd_dim", "samples_M", "maxdim", "embed_dim", "embed_iters"):
        p.add_argument(f"--{f}", type=int, default=None)
    p.add_argument("--radial", choices=["beta", "exact"], default=None)
    for name in ("points", "landmarks", "complex", "coords"):
        p.add_argument(f"--out-{name}")
    return parser


def _emit(text: str, path):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _emit_matrix(A, columns, path, binary):
    if path and binary:
        matio.write_binary(path, A)
    else:
        _emit(matio.format_text(A, columns), path)


def _load_points(path):
    X = matio.read_matrix(path)
    return X / np.linalg.norm(X, axis=1, keepdims=True)


def _cols(prefix, d):
    return [f"{prefix}{j}" for j in range(d)]


def _cmd_density(args, workers):
    m = KdeModel.from_bandwidth(_load_points(args.points), args.bandwidth_h)
    Q = _load_points(args.queries)
    psi, y, val = m.transport_many(Q)
    out = np.column_stack([psi, y, val])
    _emit_matrix(out, ["psi"] + _cols("T", m.dim) + ["conj"], None, False)


def _cmd_transport(args, workers):
    m = KdeModel.from_bandwidth(_load_points(args.points), args.bandwidth_h)
    b = sample_transported(m, args.samples_M, args.seed, radial=args.radial, workers=workers)
    out = np.column_stack([b.sources, b.images, b.values])
    _emit_matrix(out, _cols("x", m.dim) + _cols("y", m.dim) + ["conj"], args.out, args.binary)


def _cmd_landmarks(args, workers):
    m = KdeModel.from_bandwidth(_load_points(args.points), args.bandwidth_h)
    a = quantile_threshold(m, args.quantile_a)
    b = sample_transported(m, args.samples_M, args.seed, radial=args.radial, workers=workers)
    L = select_landmarks(b, a, args.separation_s, m.exponent)
    print(f"threshold {a!r}, radius {L.radius_r!r}, {len(L)} landmarks", file=sys.stderr)
    out = np.column_stack([L.images, L.sources, L.values])
    _emit_matrix(out, _cols("y", m.dim) + _cols("x", m.dim) + ["conj"], args.out, args.binary)


def _cmd_complex(args, workers):
    S, names = matio.read_matrix(args.landmarks, with_columns=True)
    r = separation_radius(args.separation_s, 1.0 / args.bandwidth_h**2)
    # a landmark table holds images y*, sources x* and values; keep the images
    if names is not None and any(n.startswith("y") for n in names):
        S = S[:, [j for j, n in enumerate(names) if n.startswith("y")]]
    cx = build_complex(S, r, args.maxdim, args.inflate, workers)
    print(f"simplex counts {cx.counts()}", file=sys.stderr)
    _emit(cx.to_json() + "\n", args.out)


def _read_complex(path) -> SimplicialComplex:
    with open(path) as fh:
        text = fh.read()
    try:
        return SimplicialComplex.from_json(text)
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise matio.FormatError(f"{path}: not a complex file ({exc})") from None


def _cmd_betti(args, workers):
    cx = _read_complex(args.complex)
    top = cx.maxdim - 1 if args.top is None else args.top
    print(" ".join(str(b) for b in betti_numbers(cx, top)))


def _cmd_embed(args, workers):
    cx = _read_complex(args.complex)
    st = metropolis_embed(NeighborGraph.from_complex(cx), args.embed_dim, args.embed_iters, rng=RngStream(args.seed), chains=args.chains)
    print(f"loss {st.loss!r}, accepted {st.accepted}/{st.steps}", file=sys.stderr)
    out = np.column_stack([np.arange(st.coords.shape[0]), st.coords])
    names = ["x", "y", "z"][: args.embed_dim] if args.embed_dim <= 3 else _cols("z", args.embed_dim)
    _emit_matrix(out, ["index"] + names, args.out, args.binary)


def _cmd_synth(args, workers):
    P = synth_torus(args.n, args.noise, args.ambient_dim, args.seed, rotate=not args.no_rotate)
    _emit_matrix(P, _cols("x", P.shape[1]), args.out, args.binary)


def _cmd_pipeline(args, workers):
    doc = {}
    if args.config:
        cfg = PipelineConfig.load(args.config)
        doc = {k: v for k, v in vars(cfg).items()}
    for key in ("smoothing_sigma", "bandwidth_h", "quantile_a", "separation_s", "inflate", "svd_dim", "samples_M", "maxdim", "embed_dim", "embed_iters", "radial"):
        if getattr(args, key) is not None:
            doc[key] = getattr(args, key)
    if args.seed_given or "seed" not in doc:
        doc["seed"] = args.seed
    doc["threads"] = workers
    cfg = PipelineConfig.from_dict(doc)
    if args.input:
        data = matio.read_matrix(args.input)
    else:
        data = synth_torus(5000, 0.12, 6, cfg.seed)
    res = run_pipeline(data, cfg, progress=lambda msg: print(msg, file=sys.stderr))
    for name, secs in res.timings.items():
        print(f"{name}: {secs:.2f} s", file=sys.stderr)
    if args.out_points:
        matio.write_matrix(args.out_points, res.points, _cols("x", res.points.shape[1]), args.binary)
    if args.out_landmarks:
        L = res.landmarks
        d = L.images.shape[1]
        matio.write_matrix(args.out_landmarks, np.column_stack([L.images, L.sources, L.values]), _cols("y", d) + _cols("x", d) + ["conj"], args.binary)
    if args.out_complex:
        with open(args.out_complex, "w") as fh:
            fh.write(res.complex.to_json() + "\n")
    if args.out_coords and res.embedding is not None:
        z = res.embedding.coords
        names = ["x", "y", "z"][: z.shape[1]] if z.shape[1] <= 3 else _cols("z", z.shape[1])
        matio.write_matrix(args.out_coords, np.column_stack([np.arange(z.shape[0]), z]), ["index"] + names, args.binary)
    sys.stdout.write(format_report(res.report))


_COMMANDS = {
    "density": _cmd_density,
    "transport": _cmd_transport,
    "landmarks": _cmd_landmarks,
    "complex": _cmd_complex,
    "betti": _cmd_betti,
    "embed": _cmd_embed,
    "synth-torus": _cmd_synth,
    "pipeline": _cmd_pipeline,
}


def dispatch(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        print(parser.format_usage().rstrip(), file=sys.stderr)
        print(exc, file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help
        return 0 if not exc.code else 1
    args.seed_given = "--seed" in argv or any(a.startswith("--seed=") for a in argv)
    if args.threads is not None and args.threads < 1:
        print("sphalpha: --threads must be >= 1", file=sys.stderr)
        return 1
    workers = args.threads or default_workers()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            warnings.showwarning = lambda msg, cat, *rest, **kw: print(f"warning: {msg}", file=sys.stderr)
            _COMMANDS[args.command](args, workers)
    except FileNotFoundError as exc:
        print(f"sphalpha: no such file: {exc.filename or exc}", file=sys.stderr)
        return 1
    except StageError as exc:
        print(f"sphalpha: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        print(f"sphalpha: {StageError(args.command, exc)}", file=sys.stderr)
        return 2
    return 0


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
