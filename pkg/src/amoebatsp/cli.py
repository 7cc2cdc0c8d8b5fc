"""Command-line surface: map generation, single solves, batches, sweeps,
scaling fits, and reference-table reproduction.

Exit codes are stable for scripting: 0 success, 1 usage or configuration
error, 2 no solution within the iteration budget.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys

from .dynamics import DEFAULT_INIT_LEVEL, ElementA, ElementB, ElementC, VariantConfig, conservation_residual
from .harness import (
    PRESETS,
    REFERENCE_IMPROVED_SWEEP,
    REFERENCE_N20,
    REFERENCE_TABLES,
    fit_scaling,
    preset,
    read_results_csv,
    run_batch,
    run_sweep,
    write_fit_json,
    write_plot_data,
    write_results_csv,
)
from .instance import ConfigurationError, InvalidInstanceError, ParamSet, generate_map, load_map, save_map
from .solver import DEFAULT_MAX_ITERS, run_trial

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_SOLUTION = 2

CONFIG_KEYS = {"preset", "element_a", "element_b", "i_scale", "element_c", "normal_sd",
               "trials", "max_iters", "global_seed", "map_policy", "map_seed",
               "n", "n_list", "workers", "init_level", "out", "plot_iters", "plot_ratio"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_USAGE)


def _variant_from_args(args) -> VariantConfig:
    if args.preset is not None:
        return preset(args.preset)
    element_c = frozenset(ElementC(flag) for flag in (args.element_c or []))
    return VariantConfig(
        element_a=ElementA(args.element_a),
        element_b=ElementB(args.element_b),
        i_scale=args.i_scale,
        element_c=element_c,
        normal_sd=args.normal_sd,
    )


def _add_variant_flags(parser):
    parser.add_argument("--preset", choices=sorted(PRESETS), default=None,
                        help="named variant; mutually exclusive with element flags")
    parser.add_argument("--element-a", dest="element_a", default="uniform",
                        choices=[e.value for e in ElementA])
    parser.add_argument("--element-b", dest="element_b", default="original",
                        choices=[e.value for e in ElementB])
    parser.add_argument("--i-scale", dest="i_scale", type=float, default=1.0)
    parser.add_argument("--element-c", dest="element_c", action="append",
                        choices=[e.value for e in ElementC],
                        help="repeatable flag replacements")
    parser.add_argument("--normal-sd", dest="normal_sd", type=float, default=0.003)


def _check_variant_exclusivity(parser, args):
    explicit = (args.element_a != "uniform" or args.element_b != "original"
                or args.i_scale != 1.0 or args.element_c or args.normal_sd != 0.003)
    if args.preset is not None and explicit:
        parser.error("--preset and explicit element flags are mutually exclusive")


def _add_run_flags(parser):
    parser.add_argument("--max-iters", type=int, default=DEFAULT_MAX_ITERS)
    parser.add_argument("--init-level", type=float, default=DEFAULT_INIT_LEVEL,
                        help="constant initial branch length")


def cmd_gen_map(args) -> int:
    inst = generate_map(args.n, args.seed, mean=args.mean, sd=args.sd)
    save_map(inst, args.out)
    print(f"wrote {args.out}: n={inst.n}, {inst.n * inst.n} matrix entries")
    return EXIT_OK


def cmd_solve(args, parser) -> int:
    _check_variant_exclusivity(parser, args)
    inst = load_map(args.map)
    cfg = _variant_from_args(args)
    params = ParamSet.for_instance(inst)
    result = run_trial(inst, params, cfg, seed=args.seed, max_iters=args.max_iters,
                       trace=args.trace is not None, init_level=args.init_level)
    if args.trace is not None and result.trace is not None:
        with open(args.trace, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh)
            writer.writerow(["t", "L_off", "sum_X", "S", "total_O", "residual"])
            for diag in result.trace:
                writer.writerow([diag.t, diag.l_off, repr(diag.sum_x), repr(diag.stock),
                                 repr(diag.total_o),
                                 repr(conservation_residual(diag, params.delta_in))])
        print(f"trace written to {args.trace} ({len(result.trace)} rows)")
    if result.success:
        tour_1based = " ".join(str(c + 1) for c in result.tour)
        print(f"solved in {result.iterations} iterations")
        print(f"tour: {tour_1based}")
        print(f"route length: {result.r_calc:.3f}")
        print(f"normalized ratio: {result.ratio:.4f}")
        return EXIT_OK
    print(f"no solution within {args.max_iters} iterations")
    return EXIT_NO_SOLUTION


def _load_config(parser, args, required):
    """Merge a JSON run-config file into args; unknown keys are rejected."""
    from pathlib import Path

    data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    unknown = set(data) - CONFIG_KEYS
    if unknown:
        parser.error(f"unknown config keys: {sorted(unknown)}")
    if "preset" in data and any(k in data for k in ("element_a", "element_b", "element_c")):
        parser.error("config: preset and explicit element fields are mutually exclusive")
    for key, value in data.items():
        setattr(args, key, value)
    for key in required:
        if getattr(args, key, None) is None:
            parser.error(f"config missing required key: {key}")
    return args


def _batch_variant(parser, args):
    if getattr(args, "preset", None) is not None:
        return args.preset, preset(args.preset)
    element_c = frozenset(ElementC(flag) for flag in (getattr(args, "element_c", None) or []))
    cfg = VariantConfig(element_a=ElementA(getattr(args, "element_a", "uniform")),
                        element_b=ElementB(getattr(args, "element_b", "original")),
                        i_scale=getattr(args, "i_scale", 1.0),
                        element_c=element_c,
                        normal_sd=getattr(args, "normal_sd", 0.003))
    return "custom", cfg


def cmd_batch(args, parser) -> int:
    if args.config:
        _load_config(parser, args, required=["n"])
    else:
        _check_variant_exclusivity(parser, args)
    if args.n is None:
        parser.error("--n is required")
    name, cfg = _batch_variant(parser, args)
    stats = run_batch(args.n, args.trials, cfg, global_seed=args.global_seed,
                      max_iters=args.max_iters, map_policy=args.map_policy,
                      map_seed=args.map_seed, init_level=args.init_level,
                      workers=args.workers, variant_name=name)
    write_results_csv([stats], args.out)
    print(f"{name} n={stats.n} trials={stats.trials}: "
          f"success_rate={stats.success_rate:.3f} "
          f"avg_iterations={_fmt(stats.avg_iterations)} avg_ratio={_fmt(stats.avg_ratio, 4)}")
    print(f"results written to {args.out}")
    return EXIT_OK


def cmd_sweep(args, parser) -> int:
    if args.config:
        _load_config(parser, args, required=["n_list"])
        n_list = args.n_list
    else:
        _check_variant_exclusivity(parser, args)
        n_list = _parse_n_list(parser, args.n_list)
    if not n_list:
        parser.error("n-list must not be empty")
    name, cfg = _batch_variant(parser, args)
    stats = run_sweep(list(n_list), args.trials, cfg, global_seed=args.global_seed,
                      max_iters=args.max_iters, map_policy=args.map_policy,
                      init_level=args.init_level, workers=args.workers,
                      variant_name=name)
    write_results_csv(stats, args.out)
    for s in stats:
        print(f"n={s.n}: success_rate={s.success_rate:.3f} "
              f"avg_iterations={_fmt(s.avg_iterations)} avg_ratio={_fmt(s.avg_ratio, 4)}")
    if args.plot_iters and args.plot_ratio:
        write_plot_data(stats, args.plot_iters, args.plot_ratio)
        print(f"plot data written to {args.plot_iters}, {args.plot_ratio}")
    print(f"results written to {args.out}")
    return EXIT_OK


def cmd_fit_scaling(args, parser) -> int:
    stats = read_results_csv(args.results)
    try:
        fit = fit_scaling(stats)
    except ValueError as exc:
        parser.error(str(exc))
    write_fit_json(fit, args.out)
    print(f"exponent={fit.exponent:.4f} prefactor={fit.prefactor:.3f} "
          f"r_squared={fit.r_squared:.5f}")
    print(f"fit written to {args.out}")
    return EXIT_OK


def _fmt(value, digits=1):
    return "-" if value is None else f"{value:.{digits}f}"


def cmd_reproduce(args, parser) -> int:
    """Re-run a reference table's variants and compare side by side."""
    rows = []
    all_ok = True
    if args.table == "5":
        n_list = _parse_n_list(parser, args.n_list) if args.n_list else [10, 20, 50, 100]
        for n in n_list:
            if n not in REFERENCE_IMPROVED_SWEEP:
                parser.error(f"no reference row for n={n}")
        stats = run_sweep(list(n_list), args.trials, preset("improved"),
                          global_seed=args.global_seed, workers=args.workers,
                          init_level=args.init_level)
        for s in stats:
            ref_sr, ref_it, ref_ratio = REFERENCE_IMPROVED_SWEEP[s.n]
            rows.append((f"improved n={s.n}", s, ref_sr, ref_it, ref_ratio))
    else:
        for name in REFERENCE_TABLES[args.table]:
            trials = args.trials
            s = run_batch(20, trials, preset(name), global_seed=args.global_seed,
                          workers=args.workers, init_level=args.init_level,
                          variant_name=name)
            ref_sr, ref_it, ref_ratio = REFERENCE_N20[name]
            rows.append((name, s, ref_sr, ref_it, ref_ratio))
    header = (f"{'variant':>14} | {'success':>15} | {'iterations':>19} | "
              f"{'ratio':>17} | verdict")
    print(header)
    print("-" * len(header))
    for name, s, ref_sr, ref_it, ref_ratio in rows:
        ok = True
        if ref_it is not None and s.avg_iterations is not None:
            ok &= abs(s.avg_iterations - ref_it) <= args.iters_tol * ref_it
        elif ref_it is not None:
            ok = False
        if ref_ratio is not None and s.avg_ratio is not None:
            ok &= abs(s.avg_ratio - ref_ratio) <= args.ratio_tol
        elif ref_ratio is not None:
            ok = False
        ok &= abs(s.success_rate - ref_sr) <= args.success_tol if ref_it is not None \
            else s.success_rate == ref_sr
        all_ok &= ok
        print(f"{name:>14} | {s.success_rate:>6.3f} vs {ref_sr:>5.3f} | "
              f"{_fmt(s.avg_iterations):>8} vs {_fmt(ref_it):>7} | "
              f"{_fmt(s.avg_ratio, 3):>6} vs {_fmt(ref_ratio, 3):>5} | "
              f"{'PASS' if ok else 'FAIL'}")
    print(f"overall: {'PASS' if all_ok else 'FAIL'}")
    return EXIT_OK


def _parse_n_list(parser, text):
    try:
        return [int(tok) for tok in str(text).replace(",", " ").split()]
    except ValueError:
        parser.error(f"bad n-list: {text!r}")


def build_parser() -> _Parser:
    parser = _Parser(prog="amoebatsp",
                     description="Amoeba-inspired TSP dynamics: solve, ablate, benchmark.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-map", help="generate a random map file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--mean", type=float, default=100.0)
    p.add_argument("--sd", type=float, default=17.0)
    p.add_argument("--out", required=True)

    p = sub.add_parser("solve", help="run one search on a map file")
    p.add_argument("--map", required=True)
    _add_variant_flags(p)
    p.add_argument("--seed", type=int, default=0)
    _add_run_flags(p)
    p.add_argument("--trace", default=None, help="write per-step trace CSV here")

    for name, helptext in (("batch", "seeded trial batch for one configuration"),
                           ("sweep", "batches across city counts")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", default=None, help="JSON run-config file")
        if name == "batch":
            p.add_argument("--n", type=int, default=None)
        else:
            p.add_argument("--n-list", dest="n_list", default=None,
                           help="comma-separated city counts")
            p.add_argument("--plot-iters", dest="plot_iters", default=None)
            p.add_argument("--plot-ratio", dest="plot_ratio", default=None)
        _add_variant_flags(p)
        p.add_argument("--trials", type=int, default=200)
        p.add_argument("--global-seed", dest="global_seed", type=int, default=0)
        _add_run_flags(p)
        p.add_argument("--map-policy", dest="map_policy", choices=["fresh", "fixed"],
                       default="fresh")
        p.add_argument("--map-seed", dest="map_seed", type=int, default=None)
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", required=True)

    p = sub.add_parser("fit-scaling", help="log-log fit on a sweep results CSV")
    p.add_argument("--results", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("reproduce", help="re-run a reference table and compare")
    p.add_argument("--table", choices=["2", "3", "4", "5"], required=True)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--global-seed", dest="global_seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--init-level", dest="init_level", type=float, default=DEFAULT_INIT_LEVEL)
    p.add_argument("--n-list", dest="n_list", default=None,
                   help="city counts for table 5 (default: 10,20,50,100)")
    p.add_argument("--iters-tol", dest="iters_tol", type=float, default=0.15,
                   help="relative tolerance on mean iterations")
    p.add_argument("--ratio-tol", dest="ratio_tol", type=float, default=0.03,
                   help="absolute tolerance on mean ratio")
    p.add_argument("--success-tol", dest="success_tol", type=float, default=0.05,
                   help="absolute tolerance on success rate")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "gen-map":
            return cmd_gen_map(args)
        if args.command == "solve":
            return cmd_solve(args, parser)
        if args.command == "batch":
            return cmd_batch(args, parser)
        if args.command == "sweep":
            return cmd_sweep(args, parser)
        if args.command == "fit-scaling":
            return cmd_fit_scaling(args, parser)
        if args.command == "reproduce":
            return cmd_reproduce(args, parser)
    except (InvalidInstanceError, ConfigurationError, ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    raise AssertionError("unreachable")


if __name__ == "__main__":
    sys.exit(main())
