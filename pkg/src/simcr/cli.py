"""Batch command line interface: ``run``, ``sweep``, ``bench`` and ``plot-data``."""
from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path

from . import harness


def _with_seed(config, seed):
    if seed is None:
        return config
    return dataclasses.replace(config, run=dataclasses.replace(config.run, seed=seed))


def cmd_run(args):
    config = _with_seed(harness.load_config(args.config), args.seed)
    out = Path(args.out or config.run.output_dir)
    summary = harness.run_experiment(config, out)
    d = summary.to_dict()
    print(f"{len(summary.realizations)} realizations -> {out}")
    print(f"R0 = {d['R0']['mean']:.4f} +/- {d['R0']['std']:.4f} bits, "
          f"MI = {d['MI']['mean']:.4f} +/- {d['MI']['std']:.4f} bits")


def cmd_sweep(args):
    config = _with_seed(harness.load_config(args.config), args.seed)
    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise harness.ConfigError("--values: empty list")
    out = Path(args.out or config.run.output_dir)
    summaries = harness.run_sweep(config, args.axis, values, out)
    for value, s in zip(values, summaries):
        print(f"{args.axis}={value}: R0 = {s.final_R0.mean():.4f}, MI = {s.final_MI.mean():.4f}")
    print(f"combined table -> {out / 'sweep.csv'}")


def cmd_bench(args):
    config = harness.load_config(args.config)
    sizes = [int(s) for s in args.sizes.split(",")]
    rows = harness.benchmark_iteration(config, args.repeats, sizes)
    print(f"{'N':>5} {'N_vec':>6} {'L*N^3':>10} {'Nvec^2*Ns^2':>12} "
          f"{'P ms':>9} {'phi ms':>9} {'psi ms':>9} {'pairsum ms':>11} {'total ms':>9}")
    for r in rows:
        print(f"{r['N']:>5} {r['N_vec']:>6} {r['layer_term']:>10} {r['pair_term']:>12} "
              f"{r['P_ms']:>9.3f} {r['phi_ms']:>9.3f} {r['psi_ms']:>9.3f} "
              f"{r['pair_sum_ms']:>11.3f} {r['total_ms']:>9.3f}")


def cmd_plot_data(args):
    n = harness.emit_plot_data(args.input, args.out)
    print(f"{n} rows -> {args.out}")


def build_parser():
    parser = argparse.ArgumentParser(prog="simcr", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run seeded realizations of one configuration")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="paired sweep over one axis")
    p.add_argument("--config", required=True)
    p.add_argument("--axis", required=True, choices=harness.SWEEP_AXES)
    p.add_argument("--values", required=True, help="comma separated, e.g. 49,100 or on,off")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("bench", help="per-block timing of one iteration")
    p.add_argument("--config", required=True)
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--sizes", default="25,49,100")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("plot-data", help="aggregate traces into plot-ready CSV")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_plot_data)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args.func(args)
    except (ValueError, OSError) as exc:
        print(f"simcr: error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
