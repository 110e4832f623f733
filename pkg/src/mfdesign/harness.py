"""Evaluation protocols: cross-validated learning curves, test-set design
evaluation, baseline comparisons over evaluation budgets, and inference
timing.

Randomness policy: repeat r of an experiment uses seed + r, and within a
repeat each target derives its own stream from (repeat seed, target index),
so every reported number is re-derivable from the top-level seed.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace

import numpy as np

from .bundle import fit_bundle
from .data import Dataset, kfold_indices
from .ensemble import EnsembleConfig, hf_invert, lf_invert, mf_invert
from .metrics import EvalReport, batch_rmse, nepd

_INVERTERS = {"mf": mf_invert, "lf": lf_invert, "hf": hf_invert}


def _derive_seed(*parts):
    return int(np.random.SeedSequence(list(parts)).generate_state(1)[0])


def learning_curve(ds: Dataset, sizes, k=10, seed=0, n_components=50,
                   forest_params=None):
    """K-fold cross-validated forward-model error at several training sizes.

    For each size a deterministic subsample is drawn, then each fold fits
    the PCA and forward forest on the fold's training part and scores the
    pooled percent RMSE of the decompressed predictions on the validation
    part. Returns rows of (size, mean RMSE %, std RMSE %).
    """
    sizes = list(sizes)
    if max(sizes) > len(ds):
        raise ValueError(f"size {max(sizes)} exceeds dataset size {len(ds)}")
    forest_params = dict(forest_params or {})
    rows = []
    for size in sizes:
        sub_rng = np.random.default_rng(_derive_seed(seed, size))
        sub = ds.subset(sub_rng.permutation(len(ds))[:size])
        fold_scores = []
        for fold_i, (train_idx, val_idx) in enumerate(kfold_indices(size, k, seed)):
            train, val = sub.subset(train_idx), sub.subset(val_idx)
            bundle = fit_bundle(
                train,
                n_components=min(n_components, len(train) - 1, train.grid.size),
                seed=_derive_seed(seed, size, fold_i),
                with_inverse=False,
                **forest_params,
            )
            pred = bundle.predict_values(val.params)
            pooled, _ = batch_rmse(
                [val.spectrum(i) for i in range(len(val))],
                [_as_spectrum(val.grid, row) for row in pred],
            )
            fold_scores.append(pooled)
        rows.append(
            {
                "size": size,
                "mean_rmse_pct": float(np.mean(fold_scores)),
                "std_rmse_pct": float(np.std(fold_scores, ddof=1)) if k > 1 else 0.0,
            }
        )
    return rows


def _as_spectrum(grid, values):
    from .data import Spectrum

    return Spectrum(grid, values)


def _eval_one_target(bundle, test, cfg, mode, repeat, index):
    target = test.spectrum(index)
    true_params = test.params[index]
    target_cfg = replace(cfg, seed=_derive_seed(cfg.seed, index))
    if mode == "mf":
        solutions = mf_invert(bundle, target, target_cfg)
    else:
        solutions = [_INVERTERS[mode](bundle, target, target_cfg)]
    rows = []
    for rank, sol in enumerate(solutions):
        rows.append(
            {
                "repeat": repeat,
                "target": index,
                "rank": rank,
                "power_w": sol.params.power,
                "speed_mm_s": sol.params.speed,
                "spacing_um": sol.params.spacing,
                "rmse_pct": sol.fitness,
                "nepd": nepd(true_params, sol.params, bundle.bounds),
                "evals_used": sol.evals_used,
                "source_tree": sol.source_tree,
                "refined": sol.refined,
            }
        )
    return rows


def evaluate_on_test(bundle, test: Dataset, cfg: EnsembleConfig, mode="mf",
                     repeats=1, n_jobs=1):
    """Run an inversion mode over every test target, repeats times.

    Returns (EvalReport, rows): the report aggregates the top-ranked
    solution of every (repeat, target) pair; rows additionally carry the
    lower-ranked solutions for mf mode.
    """
    if mode not in _INVERTERS:
        raise ValueError(f"mode must be one of {sorted(_INVERTERS)}, got {mode!r}")
    if len(test) == 0:
        raise ValueError("test dataset is empty")
    all_rows = []
    for rep in range(repeats):
        rep_cfg = replace(cfg, seed=cfg.seed + rep)
        jobs = (
            (bundle, test, rep_cfg, mode, rep, i) for i in range(len(test))
        )
        if n_jobs > 1:
            with ThreadPoolExecutor(max_workers=n_jobs) as pool:
                results = list(pool.map(lambda a: _eval_one_target(*a), jobs))
        else:
            results = [_eval_one_target(*args) for args in jobs]
        for rows in results:
            all_rows.extend(rows)
    top = [r for r in all_rows if r["rank"] == 0]
    report = EvalReport(
        rmse=[r["rmse_pct"] for r in top], nepd=[r["nepd"] for r in top]
    )
    return report, all_rows


def baseline_sweep(bundle, test: Dataset, n_max_values, cfg: EnsembleConfig,
                   repeats=5, models=("mf", "hf"), n_jobs=1):
    """Mean and spread of RMSE/NEPD per (model, n_max) cell.

    The spread is the sample standard deviation of the per-repeat means,
    matching error bars computed from repeated runs of the full test set.
    """
    rows = []
    for model in models:
        for n_max in n_max_values:
            cell_cfg = replace(cfg, n_max=n_max)
            rep_rmse, rep_nepd = [], []
            for rep in range(repeats):
                report, _ = evaluate_on_test(
                    bundle, test, replace(cell_cfg, seed=cfg.seed + rep),
                    mode=model, repeats=1, n_jobs=n_jobs,
                )
                rep_rmse.append(report.avg_rmse)
                rep_nepd.append(report.avg_nepd)
            rows.append(
                {
                    "model": model,
                    "n_max": n_max,
                    "mean_rmse_pct": float(np.mean(rep_rmse)),
                    "std_rmse_pct": float(np.std(rep_rmse, ddof=1)) if repeats > 1 else 0.0,
                    "mean_nepd": float(np.mean(rep_nepd)),
                    "std_nepd": float(np.std(rep_nepd, ddof=1)) if repeats > 1 else 0.0,
                }
            )
    return rows


def time_inference(bundle, targets: Dataset, cfg: EnsembleConfig, mode="mf"):
    """Wall-clock per-target inversion time in ms: (mean, std).

    Runs sequentially to avoid contention skew. Timing covers the full
    inversion including PCA compression of the target, not model loading.
    """
    if len(targets) == 0:
        raise ValueError("need at least one target to time")
    invert = _INVERTERS[mode]
    times = []
    for i in range(len(targets)):
        target = targets.spectrum(i)
        t0 = time.perf_counter()
        invert(bundle, target, replace(cfg, seed=_derive_seed(cfg.seed, i)))
        times.append((time.perf_counter() - t0) * 1000.0)
    return float(np.mean(times)), float(np.std(times))
