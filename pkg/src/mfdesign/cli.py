"""Command-line front end.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 file-format or grid
mismatch, 5 internal error. Progress goes to stderr; results go to files or
stdout. All randomness flows from --seed; when omitted, an entropy seed is
drawn and logged to stderr so the run stays reproducible after the fact.
The MFDESIGN_JOBS environment variable sets the default parallelism of the
evaluation commands.
"""

import argparse
import json
import os
import sys

import numpy as np

from .bundle import ModelBundle, fit_bundle
from .data import (
    Spectrum,
    default_wavelength_grid,
    load_dataset,
    load_target,
    synth_generate,
    write_dataset,
)
from .ensemble import EnsembleConfig, mf_invert, solutions_to_dicts
from .errors import BundleFormatError, DataFormatError, GridMismatchError
from .harness import baseline_sweep, evaluate_on_test
from .metrics import batch_rmse
from .explain import shap_batch, write_shap_csv


def _log(message):
    print(message, file=sys.stderr)


def _resolve_seed(seed):
    if seed is not None:
        return seed
    drawn = int(np.random.SeedSequence().generate_state(1)[0])
    _log(f"no --seed given; using entropy seed {drawn}")
    return drawn


def _default_jobs():
    raw = os.environ.get("MFDESIGN_JOBS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        _log(f"ignoring invalid MFDESIGN_JOBS={raw!r}")
        return 1


def _emit_json(payload, path):
    text = json.dumps(payload, indent=2)
    if path is None:
        print(text)
    else:
        with open(path, "w") as fh:
            fh.write(text + "\n")


def _write_rows_csv(rows, path):
    if not rows:
        return
    keys = list(rows[0].keys())
    with open(path, "w") as fh:
        fh.write(",".join(keys) + "\n")
        for row in rows:
            fh.write(",".join("" if row[k] is None else str(row[k]) for k in keys) + "\n")


def cmd_train(args):
    if args.pca_components < 1:
        raise ValueError(f"--pca-components must be >= 1, got {args.pca_components}")
    if args.trees < 1 or args.inverse_trees < 1:
        raise ValueError("--trees and --inverse-trees must be >= 1")
    seed = _resolve_seed(args.seed)
    _log(f"loading dataset from {args.data}")
    ds = load_dataset(args.data)
    _log(f"training on {len(ds)} rows ({ds.grid.size} wavelengths)")
    bundle = fit_bundle(
        ds,
        n_components=args.pca_components,
        forward_trees=args.trees,
        inverse_trees=args.inverse_trees,
        max_depth=args.max_depth,
        seed=seed,
    )
    bundle.save(args.out)
    _log(f"bundle written to {args.out}")
    pred = bundle.predict_values(ds.params)
    pooled, _ = batch_rmse(
        [ds.spectrum(i) for i in range(len(ds))],
        [Spectrum(ds.grid, row) for row in pred],
    )
    print(f"training-set pooled RMSE: {pooled:.4f}%")
    return 0


def cmd_invert(args):
    seed = _resolve_seed(args.seed)
    bundle = ModelBundle.load(args.model)
    target = load_target(args.target)
    cfg = EnsembleConfig(
        n_estimators=args.n, n_max=args.nmax, f0=args.f0, top_k=args.top, seed=seed
    )
    solutions = mf_invert(bundle, target, cfg)
    payload = {
        "target": str(args.target),
        "config": {
            "n_estimators": args.n,
            "n_max": args.nmax,
            "f0_pct": args.f0,
            "top_k": args.top,
            "seed": seed,
        },
        "solutions": solutions_to_dicts(
            solutions, bundle=bundle, include_spectra=args.spectra
        ),
    }
    _emit_json(payload, args.out)
    return 0


def cmd_evaluate(args):
    seed = _resolve_seed(args.seed)
    bundle = ModelBundle.load(args.model)
    test = load_dataset(args.test)
    cfg = EnsembleConfig(
        n_estimators=args.n, n_max=args.nmax, f0=args.f0,
        top_k=args.top, seed=seed,
    )
    _log(
        f"evaluating mode={args.mode} on {len(test)} targets, "
        f"{args.repeats} repeat(s)"
    )
    report, rows = evaluate_on_test(
        bundle, test, cfg, mode=args.mode, repeats=args.repeats,
        n_jobs=_default_jobs(),
    )
    payload = {
        "mode": args.mode,
        "repeats": args.repeats,
        "seed": seed,
        "report": report.summary(),
    }
    _emit_json(payload, args.out)
    if args.out is not None:
        csv_path = os.path.splitext(args.out)[0] + "_rows.csv"
        _write_rows_csv(rows, csv_path)
        _log(f"per-instance rows written to {csv_path}")
    return 0


def cmd_explain(args):
    bundle = ModelBundle.load(args.model)
    ds = load_dataset(args.data)
    mode = "average" if args.output == "avg" else args.output
    rows, summary = shap_batch(bundle, ds.params, mode=mode)
    write_shap_csv(rows, args.out)
    _log(f"per-row attributions written to {args.out}")
    print(json.dumps({"mode": mode, "mean_abs_phi": summary}, indent=2))
    return 0


def cmd_synth(args):
    if args.n < 1:
        raise ValueError(f"--n must be >= 1, got {args.n}")
    seed = _resolve_seed(args.seed)
    grid = default_wavelength_grid(args.grid_points)
    ds = synth_generate(args.n, grid, noise_sd=args.noise, seed=seed)
    write_dataset(ds, args.out)
    _log(f"wrote {len(ds)} rows x {grid.size} wavelengths to {args.out}")
    return 0


def cmd_benchmark(args):
    seed = _resolve_seed(args.seed)
    bundle = ModelBundle.load(args.model)
    test = load_dataset(args.test)
    n_max_values = [int(v) for v in args.nmax_values.split(",")]
    cfg = EnsembleConfig(
        n_estimators=args.n, n_max=n_max_values[0], f0=args.f0,
        top_k=1, seed=seed,
    )
    _log(
        f"benchmarking mf/hf over n_max {n_max_values} on {len(test)} targets, "
        f"{args.repeats} repeat(s)"
    )
    rows = baseline_sweep(
        bundle, test, n_max_values, cfg, repeats=args.repeats,
        n_jobs=_default_jobs(),
    )
    _emit_json({"seed": seed, "cells": rows}, args.out)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="mfdesign",
        description="Multi-fidelity inverse design of laser-processed "
        "emissivity spectra",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="fit a model bundle from a dataset CSV")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--pca-components", type=int, default=50)
    p.add_argument("--trees", type=int, default=450)
    p.add_argument("--max-depth", type=int, default=10)
    p.add_argument("--inverse-trees", type=int, default=20)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("invert", help="design parameter sets for a target spectrum")
    p.add_argument("--model", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--nmax", type=int, default=25)
    p.add_argument("--f0", type=float, default=2.0)
    p.add_argument("--top", type=int, default=10)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--spectra", action="store_true",
                   help="include each solution's predicted spectrum")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("evaluate", help="score an inversion mode on a test CSV")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--mode", choices=("mf", "lf", "hf"), default="mf")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--nmax", type=int, default=25)
    p.add_argument("--f0", type=float, default=2.0)
    p.add_argument("--top", type=int, default=1)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("explain", help="Shapley attributions of the forward model")
    p.add_argument("--model", required=True)
    p.add_argument("--data", required=True)
    p.add_argument("--output", default="avg",
                   help="'avg' or 'wl:<wavelength in um>'")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("synth", help="generate a synthetic dataset CSV")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--grid-points", type=int, default=101)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("benchmark", help="sweep mf/hf over evaluation budgets")
    p.add_argument("--model", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--nmax-values", default="25,50,100")
    p.add_argument("--n", type=int, default=20)
    p.add_argument("--f0", type=float, default=2.0)
    p.add_argument("--repeats", type=int, default=5)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_benchmark)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (DataFormatError, GridMismatchError, BundleFormatError) as exc:
        _log(f"error: {exc}")
        return 4
    except OSError as exc:
        _log(f"error: {exc}")
        return 3
    except ValueError as exc:
        _log(f"error: {exc}")
        return 2
    except Exception as exc:  # pragma: no cover - internal invariant violations
        _log(f"internal error: {exc!r}")
        return 5


if __name__ == "__main__":
    sys.exit(main())
