"""Command-line entry point: ``fisherem {fit,select,simulate}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .driver import FitConfig, best_of, clustering_accuracy
from .errors import FisherEMError
from .io import read_dataset, read_labels, write_csv, write_json
from .model import all_models, as_model
from .selection import CRITERIA, grid_select
from .simulate import SimSpec, preset, simulate_dlm

log = logging.getLogger("fisherem")

INIT_NAMES = {"random": "random_partition", "kmeans": "kmeans", "pca": "pca_params"}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad usage; 2 is reserved for fit failures here
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        sys.exit(1)


def _default_seed() -> int:
    env = os.environ.get("FISHEREM_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"FISHEREM_SEED must be an integer, got {env!r}") from None


def _d_arg(s):
    if s == "auto":
        return s
    try:
        return int(s)
    except ValueError:
        raise argparse.ArgumentTypeError("d must be an integer or 'auto'") from None


def _fit_flags(p, seed):
    p.add_argument("--input", required=True, help="CSV file of observations (rows) by variables")
    p.add_argument("--truth", help="CSV file of true labels; adds accuracy to the summary")
    p.add_argument("--d", type=_d_arg, default="auto", help="latent dimension (default K-1)")
    p.add_argument("--init", choices=sorted(INIT_NAMES), default="random")
    p.add_argument("--n-init", type=int, default=20)
    p.add_argument("--max-iter", type=int, default=100)
    p.add_argument("--tol", type=float, default=1e-6)
    p.add_argument("--seed", type=int, default=seed)
    p.add_argument("--jobs", type=int, default=1, help="parallel restarts")
    p.add_argument("--output-dir", default=".")


def build_parser(seed: int = 0) -> argparse.ArgumentParser:
    parser = _Parser(prog="fisherem", description="Fisher-EM clustering in a discriminative latent subspace")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    f = sub.add_parser("fit", help="fit one model")
    _fit_flags(f, seed)
    f.add_argument("--model", default="ak_b", help="one of " + ", ".join(m.name for m in all_models()))
    f.add_argument("--k", type=int, required=True, help="number of groups")
    f.add_argument("--threshold", type=float, default=None,
                   help="zero loadings with absolute value below this in loadings.csv")

    s = sub.add_parser("select", help="grid search over models and K")
    _fit_flags(s, seed)
    s.add_argument("--models", default="all", help="comma-separated model names or 'all'")
    s.add_argument("--k-min", type=int, default=2)
    s.add_argument("--k-max", type=int, default=6)
    s.add_argument("--criterion", choices=CRITERIA, default="bic")

    m = sub.add_parser("simulate", help="draw a synthetic dataset")
    src = m.add_mutually_exclusive_group(required=True)
    src.add_argument("--preset", choices=["dim-study", "bic-study"])
    src.add_argument("--spec", help="JSON file describing a simulation")
    m.add_argument("--p", type=int, default=None, help="observed dimension for presets")
    m.add_argument("--seed", type=int, default=seed)
    m.add_argument("--output-dir", default=".")
    return parser


def _config(args, model, K) -> FitConfig:
    return FitConfig(model=model, K=K, d=args.d, max_iter=args.max_iter, tol=args.tol,
                     n_init=args.n_init, init_method=INIT_NAMES[args.init], seed=args.seed)


def _load(args):
    data = read_dataset(args.input)
    truth = None
    if args.truth:
        truth = read_labels(args.truth)
        if truth.size != data.n:
            raise UsageError(f"{args.truth} has {truth.size} labels for {data.n} observations")
    return data, truth


def _summary(res, data, truth, args) -> dict:
    out = {
        "model": res.model.name, "k": res.K, "d": res.d, "n": data.n, "p": data.p,
        "loglik": res.loglik, "loglik_trace": res.loglik_trace, "criteria": res.criteria,
        "n_iter": res.n_iter, "converged": res.converged, "reason": res.reason,
        "seed": res.seed, "base_seed": args.seed, "n_init": args.n_init, "init": args.init,
        "pi": res.params.pi,
    }
    if truth is not None:
        out["accuracy"] = clustering_accuracy(res.labels, truth)
    return out


def write_fit_outputs(res, data, outdir: Path, threshold=None):
    T = res.partition.T
    write_csv(outdir / "labels.csv", ["row_id", "hard_label"] + [f"t_{k + 1}" for k in range(res.K)],
              [[i, int(res.labels[i]), *T[i]] for i in range(data.n)])
    U = np.array(res.params.U)
    if threshold is not None:
        U[np.abs(U) < threshold] = 0.0
    names = data.column_names()
    write_csv(outdir / "loadings.csv", ["variable"] + [f"u_{j + 1}" for j in range(res.d)],
              [[names[j], *U[j]] for j in range(data.p)])
    Z = data.Y @ np.asarray(res.params.U)
    write_csv(outdir / "projection.csv", [f"z_{j + 1}" for j in range(res.d)], Z.tolist())


def cmd_fit(args) -> int:
    data, truth = _load(args)
    if args.threshold is not None and args.threshold < 0:
        raise UsageError("--threshold must be non-negative")
    cfg = _config(args, as_model(args.model), args.k)
    res = best_of(data, cfg, jobs=args.jobs)
    outdir = Path(args.output_dir)
    write_fit_outputs(res, data, outdir, args.threshold)
    summary = _summary(res, data, truth, args)
    if args.threshold is not None:
        summary["threshold"] = args.threshold
    write_json(outdir / "summary.json", summary)
    msg = f"{res.model.name} K={res.K} d={res.d} loglik={res.loglik:.4f} ({res.reason}, {res.n_iter} iterations)"
    if "accuracy" in summary:
        msg += f" accuracy={summary['accuracy']:.4f}"
    print(msg)
    return 0


def cmd_select(args) -> int:
    data, truth = _load(args)
    if args.models == "all":
        models = all_models()
    else:
        models = [as_model(m.strip()) for m in args.models.split(",") if m.strip()]
    if not 2 <= args.k_min <= args.k_max:
        raise UsageError("need 2 <= --k-min <= --k-max")
    K_range = list(range(args.k_min, args.k_max + 1))
    cfg = _config(args, models[0], K_range[0])
    sel = grid_select(data, models, K_range, cfg=cfg, criterion=args.criterion, jobs=args.jobs)
    outdir = Path(args.output_dir)
    M = sel.matrix()
    write_csv(outdir / f"{args.criterion}_table.csv", ["model"] + [f"K={K}" for K in K_range],
              [[m.name, *["" if np.isnan(v) else v for v in M[i]]] for i, m in enumerate(models)])
    best = sel.best
    write_fit_outputs(best, data, outdir)
    summary = _summary(best, data, truth, args)
    summary["criterion"] = args.criterion
    summary["best_value"] = best.criteria[args.criterion]
    write_json(outdir / "best_summary.json", summary)
    print(f"best by {args.criterion}: {sel.best_model.name} K={sel.best_K} "
          f"({args.criterion}={best.criteria[args.criterion]:.4f})")
    return 0


def cmd_simulate(args) -> int:
    if args.preset:
        if args.preset == "bic-study" and args.p is not None and args.p != 50:
            log.warning("bic-study is defined at p=50; using p=%d", args.p)
        spec = preset(args.preset, p=args.p, seed=args.seed)
    else:
        try:
            with open(args.spec) as fh:
                raw = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read spec {args.spec}: {exc}") from None
        if not isinstance(raw, dict):
            raise UsageError("spec must be a JSON object")
        raw.setdefault("seed", args.seed)
        try:
            spec = SimSpec.from_dict(raw)
        except (TypeError, KeyError) as exc:
            raise UsageError(f"bad spec: {exc}") from None
    data, labels = simulate_dlm(spec)
    outdir = Path(args.output_dir)
    write_csv(outdir / "data.csv", data.column_names(), data.Y.tolist())
    write_csv(outdir / "labels.csv", ["label"], [[int(v)] for v in labels])
    write_json(outdir / "spec.json", spec.to_dict())
    print(f"wrote {data.n} x {data.p} observations to {outdir / 'data.csv'}")
    return 0


COMMANDS = {"fit": cmd_fit, "select": cmd_select, "simulate": cmd_simulate}


def main(argv=None) -> int:
    try:
        parser = build_parser(_default_seed())
    except UsageError as exc:
        print(f"fisherem: error: {exc}", file=sys.stderr)
        return 1
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if not args.verbose:
        warnings.simplefilter("ignore")
    try:
        return COMMANDS[args.command](args)
    except (UsageError, OSError) as exc:
        print(f"fisherem: error: {exc}", file=sys.stderr)
        return 1
    except FisherEMError as exc:
        print(f"fisherem: fit failed: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        # bad data, bad model names and invalid configurations
        print(f"fisherem: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
