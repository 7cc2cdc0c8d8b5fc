"""Batch experiments: seeded trial batches, n-sweeps, and the scaling fit.

Trial seeds derive from (global_seed, trial_index) and map seeds from
(global_seed, trial_index, map-stream tag), so batches are reproducible
and embarrassingly parallel: results are aggregated in trial-index order
no matter how many workers ran them.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from multiprocessing import Pool
from pathlib import Path

import numpy as np

from .dynamics import DEFAULT_INIT_LEVEL, ElementA, ElementB, ElementC, VariantConfig
from .instance import ParamSet, TspInstance, generate_map
from .solver import DEFAULT_MAX_ITERS, TrialResult, run_trial

_MAP_STREAM = 0x6D61
_TRIAL_STREAM = 0x7472

RESULTS_CSV_HEADER = ["variant", "n", "trials", "success_rate", "avg_iterations",
                      "std_iterations", "avg_ratio", "std_ratio"]


@dataclass
class AggregateStats:
    """Batch-level outcome; averages cover successful trials only."""

    variant: str
    n: int
    trials: int
    success_rate: float
    avg_iterations: float | None
    std_iterations: float | None
    avg_ratio: float | None
    std_ratio: float | None
    per_trial: list[TrialResult] | None = None


@dataclass
class ScalingFit:
    """Log-log least-squares fit of mean iterations against city count."""

    points: list[tuple[int, float]]
    exponent: float
    prefactor: float
    r_squared: float


PRESETS = {
    "original": VariantConfig(),
    "a1": VariantConfig(element_a=ElementA.ZERO),
    "a2": VariantConfig(element_a=ElementA.NORMAL),
    "b1": VariantConfig(element_b=ElementB.SCALE_I, i_scale=0.9),
    "b2": VariantConfig(element_b=ElementB.SCALE_I, i_scale=1.1),
    "b3": VariantConfig(element_b=ElementB.ZERO_DELTA_IN),
    "b4": VariantConfig(element_b=ElementB.DENOM_N),
    "c1": VariantConfig(element_c=frozenset({ElementC.O_CONST})),
    "c2": VariantConfig(element_c=frozenset({ElementC.L_OUTER_STEP})),
    "c3": VariantConfig(element_c=frozenset({ElementC.L_INNER_STEP})),
    "improved": VariantConfig(element_a=ElementA.NORMAL,
                              element_b=ElementB.DENOM_N,
                              element_c=frozenset({ElementC.O_CONST})),
}

# Reference results bundled for side-by-side comparison in `reproduce`:
# per variant at n=20, (success rate, mean iterations, mean ratio).
REFERENCE_N20 = {
    "original": (0.992, 1870.6, 0.951),
    "a1": (0.000, None, None),
    "a2": (0.986, 1326.8, 0.941),
    "b1": (0.990, 1937.4, 0.957),
    "b2": (0.992, 1817.4, 0.949),
    "b3": (0.996, 1989.7, 0.958),
    "b4": (0.994, 1049.3, 0.912),
    "c1": (1.000, 974.5, 0.952),
    "c2": (0.991, 1874.8, 0.953),
    "c3": (0.460, 2578.7, 1.000),
}

# Improved-model reference sweep: n -> (success rate, mean iterations, mean ratio).
REFERENCE_IMPROVED_SWEEP = {
    10: (1.00, 199.5, 0.957), 11: (1.00, 201.3, 0.953), 12: (1.00, 211.1, 0.900),
    13: (1.00, 219.1, 0.926), 14: (1.00, 229.0, 0.954), 15: (1.00, 235.8, 0.916),
    16: (1.00, 247.0, 0.939), 17: (1.00, 253.2, 0.899), 18: (1.00, 260.4, 0.910),
    19: (1.00, 269.3, 0.891), 20: (1.00, 276.3, 0.934), 30: (1.00, 341.5, 0.887),
    40: (1.00, 393.3, 0.880), 50: (1.00, 437.7, 0.875), 60: (1.00, 479.5, 0.881),
    70: (1.00, 515.9, 0.871), 80: (1.00, 550.6, 0.867), 90: (1.00, 581.4, 0.876),
    100: (1.00, 622.2, 0.859),
}

REFERENCE_TABLES = {
    "2": ["a1", "a2", "original"],
    "3": ["b1", "b2", "b3", "b4", "original"],
    "4": ["c1", "c2", "c3", "original"],
}


def preset(name: str) -> VariantConfig:
    """Named variant configuration; unknown names are rejected."""
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None


def _derive_seed(*parts: int) -> int:
    return int(np.random.SeedSequence(tuple(parts)).generate_state(1)[0])


def _run_indexed_trial(args):
    (index, n, cfg, global_seed, max_iters, map_policy, map_seed,
     param_overrides, init_level, keep_trials) = args
    if map_policy == "fresh":
        inst = generate_map(n, _derive_seed(global_seed, index, _MAP_STREAM))
    else:
        inst = generate_map(n, map_seed)
    params = ParamSet.for_instance(inst, **param_overrides)
    result = run_trial(inst, params, cfg, seed=_derive_seed(global_seed, index, _TRIAL_STREAM),
                       max_iters=max_iters, init_level=init_level)
    if not keep_trials:
        result.final_x = None
        result.trace = None
    return index, result


def run_batch(n: int, trials: int, cfg: VariantConfig, global_seed: int,
              max_iters: int = DEFAULT_MAX_ITERS, map_policy: str = "fresh",
              map_seed: int | None = None, param_overrides: dict | None = None,
              init_level: float = DEFAULT_INIT_LEVEL, workers: int = 1,
              variant_name: str = "custom", keep_trials: bool = False) -> AggregateStats:
    """Run seeded trials of one configuration and aggregate the criteria.

    map_policy "fresh" draws a new map per trial (nu recalibrated each
    time); "fixed" reuses one map seeded by map_seed (derived from
    global_seed when omitted).
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if map_policy not in ("fresh", "fixed"):
        raise ValueError(f"unknown map_policy {map_policy!r}")
    if map_policy == "fixed" and map_seed is None:
        map_seed = _derive_seed(global_seed, _MAP_STREAM)
    jobs = [(i, n, cfg, global_seed, max_iters, map_policy, map_seed,
             param_overrides or {}, init_level, keep_trials) for i in range(trials)]
    if workers > 1:
        with Pool(workers) as pool:
            indexed = pool.map(_run_indexed_trial, jobs)
    else:
        indexed = [_run_indexed_trial(job) for job in jobs]
    indexed.sort(key=lambda pair: pair[0])
    results = [r for _, r in indexed]
    return aggregate(results, variant_name, n, keep_trials=keep_trials)


def aggregate(results: list[TrialResult], variant_name: str, n: int,
              keep_trials: bool = False) -> AggregateStats:
    """Fold trial results in order; empty success sets yield absent averages."""
    wins = [r for r in results if r.success]
    iters = np.array([r.iterations for r in wins], dtype=float)
    ratios = np.array([r.ratio for r in wins], dtype=float)

    def _mean(a):
        return float(a.mean()) if a.size else None

    def _std(a):
        return float(a.std(ddof=1)) if a.size > 1 else None

    return AggregateStats(
        variant=variant_name,
        n=n,
        trials=len(results),
        success_rate=len(wins) / len(results),
        avg_iterations=_mean(iters),
        std_iterations=_std(iters),
        avg_ratio=_mean(ratios),
        std_ratio=_std(ratios),
        per_trial=results if keep_trials else None,
    )


def run_sweep(n_list: list[int], trials: int, cfg: VariantConfig, global_seed: int,
              **kwargs) -> list[AggregateStats]:
    """run_batch per city count, in the given order."""
    if not n_list:
        raise ValueError("n_list must not be empty")
    return [run_batch(n, trials, cfg, global_seed, **kwargs) for n in n_list]


def fit_scaling(stats: list[AggregateStats]) -> ScalingFit:
    """Least squares on (ln n, ln mean iterations); needs 3+ solved sizes."""
    points = [(s.n, s.avg_iterations) for s in stats
              if s.success_rate > 0 and s.avg_iterations is not None]
    if len(points) < 3:
        raise ValueError("scaling fit needs at least 3 sizes with successes")
    ln_n = np.log([p[0] for p in points])
    ln_it = np.log([p[1] for p in points])
    design = np.vstack([ln_n, np.ones_like(ln_n)]).T
    (slope, intercept), *_ = np.linalg.lstsq(design, ln_it, rcond=None)
    predicted = design @ np.array([slope, intercept])
    ss_res = float(((ln_it - predicted) ** 2).sum())
    ss_tot = float(((ln_it - ln_it.mean()) ** 2).sum())
    r_squared = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return ScalingFit(points=points, exponent=float(slope),
                      prefactor=float(np.exp(intercept)), r_squared=r_squared)


def write_results_csv(stats: list[AggregateStats], path) -> None:
    """Fixed-column results CSV; absent averages become empty cells."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(RESULTS_CSV_HEADER)
        for s in stats:
            writer.writerow([
                s.variant, s.n, s.trials, repr(s.success_rate),
                "" if s.avg_iterations is None else repr(s.avg_iterations),
                "" if s.std_iterations is None else repr(s.std_iterations),
                "" if s.avg_ratio is None else repr(s.avg_ratio),
                "" if s.std_ratio is None else repr(s.std_ratio),
            ])


def read_results_csv(path) -> list[AggregateStats]:
    """Read a results CSV back into aggregates (per_trial not recoverable)."""
    out = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            out.append(AggregateStats(
                variant=row["variant"], n=int(row["n"]), trials=int(row["trials"]),
                success_rate=float(row["success_rate"]),
                avg_iterations=float(row["avg_iterations"]) if row["avg_iterations"] else None,
                std_iterations=float(row["std_iterations"]) if row["std_iterations"] else None,
                avg_ratio=float(row["avg_ratio"]) if row["avg_ratio"] else None,
                std_ratio=float(row["std_ratio"]) if row["std_ratio"] else None,
            ))
    return out


def write_fit_json(fit: ScalingFit, path) -> None:
    payload = {
        "points": [[n, it] for n, it in fit.points],
        "exponent": fit.exponent,
        "prefactor": fit.prefactor,
        "r_squared": fit.r_squared,
    }
    Path(path).write_text(json.dumps(payload, indent=2), encoding="utf-8")


def write_plot_data(stats: list[AggregateStats], iters_path, ratio_path) -> None:
    """Plot-ready CSVs: iteration scaling with a sqrt-n reference curve,
    and ratio against the 0.9 reference line."""
    points = [(s.n, s.avg_iterations, s.avg_ratio) for s in stats
              if s.avg_iterations is not None]
    if not points:
        raise ValueError("no successful sizes to plot")
    # sqrt-n curve fitted with the exponent pinned at 1/2
    c = float(np.exp(np.mean([np.log(it) - 0.5 * np.log(n) for n, it, _ in points])))
    with open(iters_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "avg_iterations", "sqrt_n_fit"])
        for n, it, _ in points:
            writer.writerow([n, repr(it), repr(c * np.sqrt(n))])
    with open(ratio_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["n", "avg_ratio", "reference_0.9"])
        for n, _, ratio in points:
            writer.writerow([n, repr(ratio), "0.9"])
