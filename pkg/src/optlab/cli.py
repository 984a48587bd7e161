"""Command-line entry point ``optlab``.

Every subcommand writes CSV files into ``--out`` and prints their paths.
On failure the last stderr line is ``optlab-error: {"error": ..., "message": ...}``
and the exit status is nonzero.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import harness
from . import rng as rngs
from .channel import dump_matrix
from .drl import env
from .drl.actions import reduce_action_space
from .drl.tables import load_table, save_table
from .drop import drop_channels, prepare_drop
from .estimation import run_pilot_phase
from .fp import joint_optimize
from .scenario import NetworkConfig, load_config


def _list(text, cast=str):
    return [cast(t) for t in text.replace(",", " ").split()]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        line = json.dumps({"error": "UsageError", "message": message})
        print(f"optlab-error: {line}", file=sys.stderr)
        sys.exit(2)


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="key = value config file (defaults otherwise)")
    p.add_argument("--seed", type=int, default=0, help="master / first drop seed")
    p.add_argument("--out", default="optlab-out", help="output directory")
    p.add_argument("--workers", type=int, default=1, help="worker processes")
    p.add_argument("--drops", type=int, help="drops (or runs / intervals) to simulate")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def build_parser():
    common = _common()
    parser = _Parser(prog="optlab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sub.add_parser("estimate", parents=[common],
                   help="Monte-Carlo pilot estimation MSE against N M sigma_bs^2 / p_c")

    p = sub.add_parser("optimize", parents=[common], help="joint precoder and reflection optimisation on one drop")
    p.add_argument("--dump-solution", metavar="PATH", help="write W and phi as text matrices")

    p = sub.add_parser("sweep", parents=[common], help="sweep one parameter over schemes")
    p.add_argument("--scheme", default="proposed_fp,fixed_ir,direct")
    p.add_argument("--var", default="P_max", choices=sorted(harness.SWEEP_VARIABLES))
    p.add_argument("--values", default="20,30,40")

    p = sub.add_parser("reduce-actions", parents=[common], help="top-A phase-flip action set")
    p.add_argument("--size", type=int, help="actions to keep (config value by default)")

    p = sub.add_parser("train", parents=[common], help="train the tabular learners")
    p.add_argument("--scheme", default="qrdrl,qlearning")
    p.add_argument("--episodes", type=int, default=3000)
    p.add_argument("--actions", help="action file written by reduce-actions")

    p = sub.add_parser("evaluate", parents=[common], help="online evaluation of saved tables")
    p.add_argument("--table", action="append", default=[], help="saved table (repeatable)")

    p = sub.add_parser("report", parents=[common], help="aggregate the CSV files in --out")
    return parser


def _config(args):
    return load_config(args.config) if args.config else NetworkConfig()


def _out(args):
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_estimate(args):
    cfg = _config(args)
    runs = args.drops or 1000
    _, channels = drop_channels(cfg, args.seed)
    path = _out(args) / "estimate.csv"
    rng = rngs.stream(args.seed, "pilot_noise")
    errs = [run_pilot_phase(channels, cfg.p_pilot, cfg.sigma_bs2, rng).squared_error for _ in range(runs)]
    errs = np.array(errs)
    theory = cfg.num_ir_elements * cfg.num_bs_antennas * cfg.sigma_bs2 / cfg.p_pilot
    with open(path, "w") as fh:
        fh.write("ue,runs,mse,theory,relative_error\n")
        for k in range(errs.shape[1]):
            m = float(errs[:, k].mean())
            fh.write(f"{k},{runs},{m!r},{theory!r},{(m - theory) / theory!r}\n")
    return [path]


def cmd_optimize(args):
    cfg = _config(args)
    _, channels = drop_channels(cfg, args.seed)
    sol = joint_optimize(channels, cfg.p_max, cfg.sigma2, cfg.bandwidth)
    out = _out(args)
    path = out / "optimize.csv"
    with open(path, "w") as fh:
        fh.write("step,objective\n")
        for i, v in enumerate(sol.objective_trace):
            fh.write(f"{i},{v!r}\n")
    summary = out / "optimize_summary.csv"
    summary.write_text("seed,rate,iterations,converged\n"
                       f"{args.seed},{sol.rate!r},{sol.iterations},{int(sol.converged)}\n")
    paths = [summary, path]
    if args.dump_solution:
        with open(args.dump_solution, "w") as fh:
            dump_matrix(sol.W, fh, header="W")
            dump_matrix(sol.phi[None, :], fh, header="phi")
        paths.append(Path(args.dump_solution))
    return paths


def cmd_sweep(args):
    cfg = _config(args)
    recs = harness.sweep(cfg, _list(args.scheme), args.var, _list(args.values, float),
                         drops=args.drops or 100, seed=args.seed, workers=args.workers)
    out = _out(args)
    harness.emit_csv(recs, out / f"sweep_{args.var}.csv")
    harness.emit_plot_data(recs, out / f"plot_{args.var}.csv")
    return [out / f"sweep_{args.var}.csv", out / f"plot_{args.var}.csv"]


def _write_actions(red, path):
    with open(path, "w") as fh:
        fh.write(f"# N {red.N} samples {red.num_samples}\n")
        fh.write("action_id,count\n")
        for a in red.actions:
            fh.write(f"{a},{red.counts.get(a, 0)}\n")


def _read_actions(path):
    ids = []
    for line in Path(path).read_text().splitlines():
        if line.startswith("#") or line.startswith("action_id") or not line.strip():
            continue
        ids.append(int(line.split(",")[0]))
    return ids


def cmd_reduce_actions(args):
    cfg = _config(args)
    size = args.size or cfg.reduced_action_count
    red = reduce_action_space(harness.reduction_sampler(cfg, harness.TRAIN_SEED_OFFSET + args.seed),
                              args.drops or 500, size)
    path = _out(args) / "actions.csv"
    _write_actions(red, path)
    print(f"coverage on sampled drops: {red.coverage():.4f}")
    return [path]


def cmd_train(args):
    cfg = _config(args)
    out = _out(args)
    ids = _read_actions(args.actions) if args.actions else None
    if ids is None and (out / "actions.csv").exists():
        ids = _read_actions(out / "actions.csv")
    res = harness.train_and_eval(cfg, args.episodes, 0, seeds=(args.seed,), action_ids=ids,
                                 pool_size=args.drops or 100, learners=tuple(_list(args.scheme)))
    path = out / "train.csv"
    with open(path, "w") as fh:
        fh.write("episode,mean_rate,epsilon,scheme\n")
        for r in res.training:
            fh.write(f"{r.episode},{r.metric!r},{r.value!r},{r.scheme}\n")
    paths = [path]
    for (kind, seed), table in res.tables.items():
        p = out / f"table_{kind}_{seed}.txt"
        save_table(table, p)
        paths.append(p)
    return paths


def cmd_evaluate(args):
    cfg = _config(args)
    out = _out(args)
    tables = args.table or sorted(str(p) for p in out.glob("table_*.txt"))
    if not tables:
        raise FileNotFoundError("no tables given and none found in the output directory")
    intervals = args.drops or 100
    base = harness.EVAL_SEED_OFFSET + 10_000 * args.seed
    drops = [prepare_drop(cfg, base + j) for j in range(intervals)]
    path = out / "evaluate.csv"
    with open(path, "w") as fh:
        fh.write("interval,rate,scheme\n")
        for tpath in tables:
            table = load_table(tpath)
            kind = "qrdrl" if hasattr(table, "z") else "qlearning"
            for j, d in enumerate(drops):
                r = env.run_interval(d, cfg, table, seed=base, episode=j).rate
                fh.write(f"{j},{r!r},{kind}\n")
        for j, d in enumerate(drops):
            r = env.run_interval(d, cfg, None, seed=base, episode=j).rate
            fh.write(f"{j},{r!r},no_adapt\n")
    return [path]


def cmd_report(args):
    out = Path(args.out)
    paths = sorted(out.glob("sweep_*.csv"))
    if not paths:
        raise FileNotFoundError(f"no sweep_*.csv files in {out}")
    written = []
    for p in paths:
        recs = harness.read_csv(p)
        target = out / p.name.replace("sweep_", "plot_")
        harness.emit_plot_data(recs, target)
        written.append(target)
        for a in harness.aggregate(recs):
            print(f"{p.stem}: {a['scheme']:<12} {a['variable']}={a['value']:g} "
                  f"mean={a['mean'] / 1e6:.3f} Mbit/s stderr={a['stderr'] / 1e6:.3f} n={a['n']}")
    return written


COMMANDS = {
    "estimate": cmd_estimate,
    "optimize": cmd_optimize,
    "sweep": cmd_sweep,
    "reduce-actions": cmd_reduce_actions,
    "train": cmd_train,
    "evaluate": cmd_evaluate,
    "report": cmd_report,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        for path in COMMANDS[args.command](args):
            print(path)
    except Exception as exc:
        line = json.dumps({"error": type(exc).__name__, "message": str(exc)})
        print(f"optlab-error: {line}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
