"""Command-line entry point: ``nsa <subcommand> ...``.

Exit status is 0 on success, 2 on a usage error and 1 when a computation
fails (or a gradient check does not pass).
"""
from __future__ import annotations

import argparse
import csv
import io as _stdio
import sys
from pathlib import Path

import numpy as np

from . import analysis, cloud, composite, reducer
from ._version import __version__
from .errors import NsaError
from .gnsa import gnsa
from .io import (
    RunManifest,
    dumps,
    format_float,
    load_embedding,
    save_embedding,
    write_table,
)
from .lnsa import lnsa_metric

GRADCHECK_TOL = 1e-4


# -- argument types ----------------------------------------------------------------

def _policy_text(text):
    try:
        cloud.NormalizationPolicy.parse(text)
    except (NsaError, ValueError) as exc:
        raise argparse.ArgumentTypeError(f"invalid normalization {text!r}: {exc}")
    return text


def _positive_int(text):
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return v


def _positive_float(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"expected a positive number, got {text}")
    return v


def _nonneg_float(text):
    v = float(text)
    if not v >= 0:
        raise argparse.ArgumentTypeError(f"expected a non-negative number, got {text}")
    return v


def _add_policy(p):
    p.add_argument("--norm", type=_policy_text, default="origin",
                   help="normalizer: origin | centered | quantile=Q (default origin)")
    p.add_argument("--radius-scale", type=_positive_float, default=1.0,
                   help="multiplier applied to the normalizer (default 1.0)")


def _add_weights(p, k_default=5):
    p.add_argument("--k", type=_positive_int, default=k_default, help=f"neighborhood size (default {k_default})")
    p.add_argument("--l", type=_nonneg_float, default=1.0, help="LNSA weight (default 1.0)")
    p.add_argument("--g", type=_nonneg_float, default=1.0, help="GNSA weight (default 1.0)")


def _nsa_config(args, seed=0) -> composite.NsaConfig:
    policy = cloud.NormalizationPolicy.parse(args.norm, args.radius_scale)
    return composite.NsaConfig(l=getattr(args, "l", 1.0), g=getattr(args, "g", 1.0),
                               k=getattr(args, "k", 5), policy=policy, seed=seed)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nsa", description="Normalized space alignment tools.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("compare", help="GNSA, LNSA metric and composite NSA of two clouds")
    p.add_argument("x")
    p.add_argument("y")
    _add_weights(p)
    _add_policy(p)
    p.add_argument("--pointwise", metavar="CSV", help="write per-point GNSA to this file")
    p.add_argument("--top", type=int, default=10, help="number of largest pointwise values to list")

    p = sub.add_parser("heatmap", help="layer-by-layer dissimilarity matrix as CSV")
    p.add_argument("--a", required=True, help="directory of layer files (npy or csv)")
    p.add_argument("--b", required=True, help="directory of layer files (npy or csv)")
    p.add_argument("--measure", choices=analysis.MEASURES, default="gnsa")
    p.add_argument("--k", type=_positive_int, default=5)
    _add_policy(p)
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("reduce", help="optimise a low-dimensional embedding under the NSA loss")
    p.add_argument("x")
    p.add_argument("--dim", type=_positive_int, required=True)
    p.add_argument("--epochs", type=_positive_int, default=250)
    p.add_argument("--batch", type=_positive_int, default=256)
    p.add_argument("--lr", type=_positive_float, default=1e-2)
    _add_weights(p)
    _add_policy(p)
    p.add_argument("--geodesic-k", type=_positive_int, default=None)
    p.add_argument("--init", choices=(reducer.INIT_PCA, reducer.INIT_GAUSS), default=reducer.INIT_PCA)
    p.add_argument("--lr-schedule", choices=("constant", "cosine"), default="constant")
    p.add_argument("--batch-normalizer", choices=("global", "batch"), default="global")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output embedding (npy or csv)")
    p.add_argument("--trace", help="per-epoch trace CSV (default: <out>.trace.csv)")

    p = sub.add_parser("minibatch-study", help="Monte-Carlo subset estimate of GNSA")
    p.add_argument("x")
    p.add_argument("y")
    p.add_argument("--batch", type=_positive_int, required=True)
    p.add_argument("--trials", type=_positive_int, required=True)
    p.add_argument("--per-batch-norm", action="store_true")
    p.add_argument("--seed", type=int, default=0)
    _add_policy(p)

    p = sub.add_parser("eval", help="embedding quality report")
    p.add_argument("x")
    p.add_argument("z")
    p.add_argument("--k", type=_positive_int, default=100)
    p.add_argument("--triplets", type=_positive_int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    _add_policy(p)

    p = sub.add_parser("sensitivity", help="dissimilarity under principal-component removal")
    p.add_argument("x")
    p.add_argument("--threshold", type=_nonneg_float, default=0.0)
    p.add_argument("--order", choices=(cloud.LEAST_VARIANCE_FIRST, cloud.MOST_VARIANCE_FIRST),
                   default=cloud.LEAST_VARIANCE_FIRST)
    p.add_argument("--measure", choices=analysis.MEASURES, default="nsa")
    _add_weights(p)
    _add_policy(p)
    p.add_argument("--out", help="CSV path (default: stdout)")

    p = sub.add_parser("gradcheck", help="analytic vs finite-difference gradient on a random instance")
    p.add_argument("--loss", type=str.lower, choices=("gnsa", "lnsa", "nsa"), required=True)
    p.add_argument("--n", type=_positive_int, default=40)
    p.add_argument("--dim-x", type=_positive_int, default=8)
    p.add_argument("--dim-z", type=_positive_int, default=3)
    p.add_argument("--h", type=_positive_float, default=1e-5)
    p.add_argument("--seed", type=int, default=0)
    _add_weights(p)
    _add_policy(p)

    p = sub.add_parser("gen", help="synthetic data sets")
    gen = p.add_subparsers(dest="kind", required=True)
    g = gen.add_parser("swissroll")
    g.add_argument("--n", type=_positive_int, default=1000)
    g.add_argument("--noise", type=_nonneg_float, default=0.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g = gen.add_parser("blobs")
    g.add_argument("--n", type=_positive_int, default=1000)
    g.add_argument("--d", type=_positive_int, default=50)
    g.add_argument("--clusters", type=_positive_int, default=3)
    g.add_argument("--separation", type=_positive_float, default=10.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g = gen.add_parser("spheres")
    g.add_argument("--n-per-sphere", type=_positive_int, default=100)
    g.add_argument("--n-spheres", type=_positive_int, default=10)
    g.add_argument("--d", type=_positive_int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    return parser


# -- subcommands -------------------------------------------------------------------

def _emit(out, doc):
    out.write(dumps(doc, indent=2) + "\n")


def _csv_text(header, rows) -> str:
    buf = _stdio.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([format_float(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buf.getvalue()


def _table(args, out, header, rows, manifest: RunManifest):
    if args.out:
        write_table(args.out, header, rows)
        manifest.outputs.append(str(args.out))
        manifest.write(args.out)
    else:
        out.write(_csv_text(header, rows))


def cmd_compare(args, out):
    cfg = _nsa_config(args)
    x = load_embedding(args.x)
    y = load_embedding(args.y)
    rep = analysis.pointwise_report(x, y, cfg.policy, top=max(args.top, 0))
    g = gnsa(x, y, cfg.policy)
    lm = lnsa_metric(x, y, min(cfg.k, x.shape[0] - 1))
    doc = {
        "n": x.shape[0], "gnsa": g.total, "lnsa_metric": lm.metric,
        "lnsa_xy": lm.directed_xy, "lnsa_yx": lm.directed_yx,
        "nsa": cfg.g * g.total + cfg.l * lm.metric,
        "normalizer_x": g.normalizer_x, "normalizer_y": g.normalizer_y,
        "top_pointwise": rep.top_indices,
    }
    outputs = []
    if args.pointwise:
        write_table(args.pointwise, ["index", "gnsa"], [(i, float(v)) for i, v in enumerate(rep.values)])
        outputs.append(args.pointwise)
    manifest = RunManifest.for_inputs("compare", cfg.to_dict(), None, [args.x, args.y], outputs)
    if args.pointwise:
        manifest.write(args.pointwise)
    doc["manifest"] = manifest.to_dict()
    _emit(out, doc)
    return 0


def _layer_files(directory):
    d = Path(directory)
    if not d.is_dir():
        raise NsaError(f"{d}: not a directory")
    files = sorted(p for p in d.iterdir() if p.suffix.lower() in (".npy", ".csv"))
    if not files:
        raise NsaError(f"{d}: no .npy or .csv layer files")
    return files


def cmd_heatmap(args, out):
    policy = cloud.NormalizationPolicy.parse(args.norm, args.radius_scale)
    fa, fb = _layer_files(args.a), _layer_files(args.b)
    hm = analysis.layer_heatmap([load_embedding(f) for f in fa], [load_embedding(f) for f in fb],
                                args.measure, policy, args.k,
                                labels=([f.name for f in fa], [f.name for f in fb]))
    rows = [[label] + [float(v) for v in row] for label, row in zip(hm.row_labels, hm.values)]
    config = {"measure": args.measure, "k": args.k, "norm": policy.describe(),
              "radius_scale": policy.radius_scale}
    manifest = RunManifest.for_inputs("heatmap", config, None, fa + fb)
    _table(args, out, ["layer"] + hm.col_labels, rows, manifest)
    return 0


def cmd_reduce(args, out):
    nsa = _nsa_config(args, args.seed)
    x = load_embedding(args.x)
    cfg = reducer.ReducerConfig(
        latent_dim=args.dim, epochs=args.epochs, batch_size=min(args.batch, x.shape[0]),
        step_size=args.lr, init=args.init, geodesic_k=args.geodesic_k,
        lr_schedule=args.lr_schedule, batch_normalizer=args.batch_normalizer, nsa=nsa,
    )
    trace = reducer.reduce(x, cfg)
    save_embedding(trace.z, args.out)
    trace_path = args.trace or f"{args.out}.trace.csv"
    # wall times vary run to run, so they go to stdout only, not the artifact
    write_table(trace_path, ["epoch", "loss", "gnsa", "lnsa"],
                [(e, float(a), float(b), float(c))
                 for e, (a, b, c) in enumerate(zip(trace.loss, trace.gnsa, trace.lnsa), start=1)])
    manifest = RunManifest.for_inputs("reduce", cfg.to_dict(), args.seed, [args.x], [args.out, trace_path])
    manifest.write(args.out)
    _emit(out, {
        "output": str(args.out), "trace": str(trace_path), "epochs": cfg.epochs,
        "initial_loss": trace.initial_loss, "final_loss": trace.loss[-1],
        "final_gnsa": trace.gnsa[-1], "final_lnsa": trace.lnsa[-1],
        "seconds": float(sum(trace.seconds)), "manifest": manifest.to_dict(),
    })
    return 0


def cmd_minibatch(args, out):
    policy = cloud.NormalizationPolicy.parse(args.norm, args.radius_scale)
    cfg = composite.NsaConfig(policy=policy, seed=args.seed)
    est = composite.subset_estimate(load_embedding(args.x), load_embedding(args.y),
                                    args.batch, args.trials, cfg, args.per_batch_norm)
    doc = est.to_dict()
    config = {"batch": args.batch, "trials": args.trials, "per_batch_norm": args.per_batch_norm,
              "norm": policy.describe(), "radius_scale": policy.radius_scale}
    doc["manifest"] = RunManifest.for_inputs("minibatch-study", config, args.seed, [args.x, args.y]).to_dict()
    _emit(out, doc)
    return 0


def cmd_eval(args, out):
    policy = cloud.NormalizationPolicy.parse(args.norm, args.radius_scale)
    rep = analysis.quality_report(load_embedding(args.x), load_embedding(args.z), args.k,
                                  args.triplets, args.seed, policy)
    doc = rep.to_dict()
    config = {"k": args.k, "triplets": args.triplets, "norm": policy.describe(),
              "radius_scale": policy.radius_scale}
    doc["manifest"] = RunManifest.for_inputs("eval", config, args.seed, [args.x, args.z]).to_dict()
    _emit(out, doc)
    return 0


def cmd_sensitivity(args, out):
    cfg = _nsa_config(args)
    curve = analysis.sensitivity_curve(load_embedding(args.x), cfg.policy, cfg.k, args.threshold,
                                       args.order, args.measure, cfg)
    config = dict(cfg.to_dict(), threshold=args.threshold, order=args.order, measure=args.measure)
    manifest = RunManifest.for_inputs("sensitivity", config, None, [args.x])
    _table(args, out, ["m", "value", "above_threshold"],
           [(m, v, int(f)) for m, v, f in curve.rows()], manifest)
    return 0


def cmd_gradcheck(args, out):
    cfg = _nsa_config(args, args.seed)
    rng = cloud.rng_from_seed(args.seed)
    if args.n < 3:
        raise NsaError("gradcheck needs --n >= 3")
    x = rng.standard_normal((args.n, args.dim_x))
    z = rng.standard_normal((args.n, args.dim_z))
    if cfg.k >= args.n:
        cfg = composite.NsaConfig(l=cfg.l, g=cfg.g, k=args.n - 1, policy=cfg.policy, seed=cfg.seed)
    rep = composite.grad_check(args.loss, x, z, cfg, args.h)
    doc = rep.to_dict()
    doc["passed"] = rep.max_rel_err <= GRADCHECK_TOL
    config = dict(cfg.to_dict(), n=args.n, dim_x=args.dim_x, dim_z=args.dim_z, h=args.h)
    doc["manifest"] = RunManifest("gradcheck", config, args.seed).to_dict()
    _emit(out, doc)
    return 0 if doc["passed"] else 1


def cmd_gen(args, out):
    if args.kind == "swissroll":
        data, side = cloud.make_swiss_roll(args.n, args.noise, args.seed)
        side_header = ["t", "h"]
        config = {"n": args.n, "noise": args.noise}
    elif args.kind == "blobs":
        data, labels = cloud.make_blobs(args.n, args.d, args.clusters, args.separation, args.seed)
        side, side_header = labels[:, None], ["label"]
        config = {"n": args.n, "d": args.d, "clusters": args.clusters, "separation": args.separation}
    else:
        data, labels = cloud.make_spheres(args.n_per_sphere, args.n_spheres, args.d, args.seed)
        side, side_header = labels[:, None], ["label"]
        config = {"n_per_sphere": args.n_per_sphere, "n_spheres": args.n_spheres, "d": args.d}
    save_embedding(data, args.out)
    sidecar = f"{args.out}.{'params' if args.kind == 'swissroll' else 'labels'}.csv"
    write_table(sidecar, side_header,
                [[float(v) if side.dtype.kind == "f" else int(v) for v in row] for row in side])
    manifest = RunManifest("gen", dict(config, kind=args.kind), args.seed, {}, [str(args.out), sidecar])
    manifest.write(args.out)
    _emit(out, {"kind": args.kind, "output": str(args.out), "shape": list(data.shape),
                "sidecar": sidecar, "manifest": manifest.to_dict()})
    return 0


COMMANDS = {
    "compare": cmd_compare,
    "heatmap": cmd_heatmap,
    "reduce": cmd_reduce,
    "minibatch-study": cmd_minibatch,
    "eval": cmd_eval,
    "sensitivity": cmd_sensitivity,
    "gradcheck": cmd_gradcheck,
    "gen": cmd_gen,
}


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except NsaError as exc:
        err.write(f"nsa {args.command}: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
