"""Command-line entry point: ``meramsc {cluster,anchor,compress,eval,synth}``."""
from __future__ import annotations

import argparse
import sys
import time
from dataclasses import asdict, replace

import numpy as np

from . import anchor, io, mera, metrics, msc, synth


class UsageError(Exception):
    """Flags that parse but cannot work together; reported with exit status 2."""


def _int_list(text: str) -> list[int]:
    try:
        vals = [int(v) for v in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if any(v < 1 for v in vals):
        raise argparse.ArgumentTypeError(f"values must be positive, got {text!r}")
    return vals


def _split(text: str) -> tuple[int, int]:
    vals = _int_list(text)
    if len(vals) != 2:
        raise argparse.ArgumentTypeError(f"expected A,Q, got {text!r}")
    return vals[0], vals[1]


def _add_solver_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--data", required=True, help="dataset manifest file or directory")
    p.add_argument("--rank", type=int, required=True, help="MERA bond dimension R")
    p.add_argument("--lambda", dest="lam", type=float, default=0.01, help="l2,1 weight (default 0.01)")
    p.add_argument("--max-iters", type=int, default=50)
    p.add_argument("--mera-sweeps", type=int, default=10)
    p.add_argument("--kmeans-restarts", type=int, default=30)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1,
                   help="runs with seeds seed, seed+1, ...; metrics report their mean and std")
    p.add_argument("--split", type=_split, help="sample-axis factorization A,Q")
    p.add_argument("--out", help="write a run report here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="meramsc", description="MERA-regularized multi-view clustering")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="self-representation clustering on a dataset")
    _add_solver_args(p)

    p = sub.add_parser("anchor", help="anchor-graph clustering on a dataset")
    _add_solver_args(p)
    p.add_argument("--anchors", type=int, required=True, help="number of anchors M")
    p.add_argument("--anchor-init", choices=["sampled", "random"], default="sampled")
    p.add_argument("--anchor-split", type=_split, help="anchor-axis factorization m1,m2")

    p = sub.add_parser("compress", help="low-rank MERA approximation of a 5th-order tensor")
    p.add_argument("--input", required=True, help="MVTD file or raw little-endian float64 file")
    p.add_argument("--shape", type=_int_list, required=True, help="five comma-separated leg dimensions")
    p.add_argument("--rank", type=int, required=True)
    p.add_argument("--sweeps", type=int, default=10)
    p.add_argument("--init", choices=["svd", "random"], default="svd",
                   help="starting network: truncated SVD (default) or seeded random")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", help="write the reconstruction as MVTD (flattened column-major)")
    p.add_argument("--out", help="write a run report here")

    p = sub.add_parser("eval", help="compare two label files")
    p.add_argument("truth")
    p.add_argument("pred")
    p.add_argument("--out", help="write a run report here")

    p = sub.add_parser("synth", help="generate a synthetic dataset")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--kind", choices=["subspace", "planted"], default="subspace")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--n-per-cluster", type=int, default=20)
    p.add_argument("--subspace-dim", type=int, default=3)
    p.add_argument("--dims", type=_int_list, default=[30, 30, 30], help="per-view feature dimensions")
    p.add_argument("--noise", type=float, help="noise level (default 0 for subspace, 1 for planted)")
    p.add_argument("--separation", type=float, default=3.0)
    p.add_argument("--seed", type=int, default=0)
    return parser


def _emit(report: io.RunReport, out: str | None) -> None:
    if report.metrics:
        for k in ("acc", "nmi", "ari", "fscore", "precision", "recall"):
            print(f"{k:>9s}: {report.metrics[k]:.4f}")
    for k, v in report.extra.items():
        print(f"{k}: {v}")
    if out:
        io.save_report(report, out)
        print(f"report written to {out}")


def _run_clustering(args, cfg, ds, solver) -> io.RunReport:
    if args.repeats < 1:
        raise UsageError("--repeats must be >= 1")
    out = solver(ds, cfg)
    report = io.RunReport(
        config={"command": args.command, "data": args.data, "repeats": args.repeats,
                **{k: v for k, v in asdict(cfg).items() if v is not None}},
        residual_trace=out.residual_trace,
        timings=out.timings,
        labels=out.labels,
        extra={"iterations": out.iterations, "converged": out.converged},
    )
    if ds.labels is None:
        return report
    runs = [metrics.evaluate(ds.labels, out.labels)]
    for i in range(1, args.repeats):
        runs.append(metrics.evaluate(ds.labels, solver(ds, replace(cfg, seed=cfg.seed + i)).labels))
    summary = metrics.summarize(runs)
    report.metrics = {k: m for k, (m, _) in summary.items()}
    if args.repeats > 1:
        report.extra["metrics_std"] = {k: sd for k, (_, sd) in summary.items()}
    return report


def _cmd_cluster(args) -> int:
    ds = io.load_dataset(args.data)
    try:
        cfg = msc.MscConfig(
            rank=args.rank, lam=args.lam, max_iters=args.max_iters, mera_sweeps=args.mera_sweeps,
            seed=args.seed, split_override=args.split, kmeans_restarts=args.kmeans_restarts,
        )
        a, q = msc.resolve_split(ds.n_samples, cfg)
        msc.check_rank((a, q, a, q, ds.n_views), cfg.rank)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(_run_clustering(args, cfg, ds, msc.solve), args.out)
    return 0


def _cmd_anchor(args) -> int:
    ds = io.load_dataset(args.data)
    try:
        cfg = anchor.AnchorConfig(
            num_anchors=args.anchors, rank=args.rank, lam=args.lam, max_iters=args.max_iters,
            mera_sweeps=args.mera_sweeps, anchor_init=args.anchor_init, seed=args.seed,
            split_override=args.split, anchor_split_override=args.anchor_split,
            kmeans_restarts=args.kmeans_restarts,
        )
        m1, m2, a, q = anchor.anchor_split(cfg.num_anchors, ds.n_samples, cfg)
        msc.check_rank((m1, m2, a, q, ds.n_views), cfg.rank)
        if cfg.num_anchors > min(x.shape[0] for x in ds.views):
            raise ValueError(f"--anchors {cfg.num_anchors} exceeds the smallest view dimension")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    _emit(_run_clustering(args, cfg, ds, anchor.solve_anchor), args.out)
    return 0


def _read_tensor(path: str, shape) -> np.ndarray:
    with open(path, "rb") as fh:
        buf = fh.read()
    if buf[:4] == io.MAGIC:
        flat = io.decode_matrix(buf, path).ravel(order="F")
    else:
        if len(buf) % 8:
            raise io.LoadError(path, len(buf), "raw float64 file size is not a multiple of 8")
        flat = np.frombuffer(buf, dtype="<f8").astype(np.float64)
        bad = np.flatnonzero(~np.isfinite(flat))
        if bad.size:
            raise io.LoadError(path, 8 * int(bad[0]), "non-finite value")
    need = int(np.prod(shape))
    if flat.size != need:
        raise io.LoadError(path, 0, f"{flat.size} values do not fill shape {tuple(shape)} ({need})")
    return flat.reshape(shape, order="F")


def _cmd_compress(args) -> int:
    if len(args.shape) != 5:
        raise UsageError(f"--shape needs five dimensions, got {len(args.shape)}")
    try:
        msc.check_rank(args.shape, args.rank)
        if args.rank < 1 or args.sweeps < 1:
            raise ValueError("--rank and --sweeps must be >= 1")
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    y = _read_tensor(args.input, args.shape)
    t0 = time.perf_counter()
    if args.init == "svd":
        cfg = mera.MeraConfig(rank=args.rank, sweeps=args.sweeps, init="warm", warm_start=mera.svd_init(y, args.rank))
    else:
        cfg = mera.MeraConfig(rank=args.rank, sweeps=args.sweeps, seed=args.seed)
    net, rec, trace = mera.approximate(y, cfg)
    elapsed = time.perf_counter() - t0
    params = net.u1.size + net.w1.size + net.w2.size + net.b.size
    ynorm = float(np.linalg.norm(y))
    err = float(np.linalg.norm(rec - y))
    rel = err / ynorm if ynorm > 0 else err
    rmse = err / np.sqrt(y.size)
    peak = float(np.max(np.abs(y)))
    psnr = float("inf") if rmse == 0 else 20 * np.log10(peak / rmse) if peak > 0 else float("-inf")
    report = io.RunReport(
        config={"command": "compress", "input": args.input, "shape": list(args.shape), "rank": args.rank,
                "sweeps": args.sweeps, "init": args.init, "seed": args.seed},
        timings={"approximate": elapsed},
        extra={"compression_ratio": y.size / params, "relative_error": rel,
               # JSON has no infinity; an exact fit reports psnr as null
               "psnr_db": psnr if np.isfinite(psnr) else None,
               "fit_errors": trace.errors},
    )
    if args.output:
        io.save_matrix(rec.reshape(-1, 1, order="F"), args.output)
    print(f"compression_ratio: {y.size / params:.4f}")
    print(f"relative_error: {rel:.6e}")
    print(f"psnr_db: {psnr:.4f}")
    if args.out:
        io.save_report(report, args.out)
        print(f"report written to {args.out}")
    return 0


def _cmd_eval(args) -> int:
    truth, pred = io.load_labels(args.truth), io.load_labels(args.pred)
    if truth.shape != pred.shape:
        raise ValueError(f"label files differ in length: {truth.size} vs {pred.size}")
    report = io.RunReport(
        config={"command": "eval", "truth": args.truth, "pred": args.pred},
        metrics=metrics.evaluate(truth, pred).as_dict(),
    )
    _emit(report, args.out)
    return 0


def _cmd_synth(args) -> int:
    if args.kind == "subspace":
        noise = 0.0 if args.noise is None else args.noise
        ds = synth.synth_multiview(args.k, args.n_per_cluster, args.subspace_dim, args.dims, noise, args.seed)
    else:
        noise = 1.0 if args.noise is None else args.noise
        ds = synth.synth_planted(args.k, args.n_per_cluster, args.dims, args.separation, noise, args.seed)
    path = io.save_dataset(ds, args.out)
    print(f"wrote {ds.n_views} views x {ds.n_samples} samples to {path}")
    return 0


_COMMANDS = {
    "cluster": _cmd_cluster, "anchor": _cmd_anchor, "compress": _cmd_compress,
    "eval": _cmd_eval, "synth": _cmd_synth,
}


def main(argv=None) -> int:
    """Run the CLI; returns the exit status (2 for usage errors, 1 for failures)."""
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"meramsc {args.command}: usage error: {exc}", file=sys.stderr)
        return 2
    except (io.LoadError, ValueError, OSError, FloatingPointError) as exc:
        print(f"meramsc {args.command}: error: {exc}", file=sys.stderr)
        return 1


run_cli = main
