"""Command-line front end.

    aoisched solve    --config paper --out des.aoi [--gamma 0.9] [--cost error|aoi] [--M 25]
    aoisched simulate --config paper [--policy des.aoi ...] [--scheduler GES ...] --out rows.csv
    aoisched compare  --config paper [--schedulers DES,AoIS,GES] --out rows.csv
    aoisched sweep    --config paper --out grid.csv

Exit codes: 0 ok, 2 configuration error, 3 solver non-convergence, 4 I/O.
"""

import argparse
import json
import logging
import sys
import time

from . import __version__
from ._accel import backend, set_threads
from .campaign import (TABLE_KINDS, check_policy, rows_to_csv, run_grid,
                       simulate_scheduler, summary_row)
from .config import load_config
from .errors import (ConfigurationError, ModelValidationError, NonConvergenceError, NumericError,
                     PenaltyOverflowError, PolicyFileError)
from .policyio import read_policy, write_policy
from .schedulers import LookupScheduler
from .solver import value_iteration

logger = logging.getLogger("aoisched")

EXIT_OK, EXIT_CONFIG, EXIT_SOLVER, EXIT_IO = 0, 2, 3, 4


def _config(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.cache_dir:
        cfg.cache_dir = args.cache_dir
    return cfg


def cmd_solve(args):
    cfg = _config(args)
    if args.gamma is not None:
        gamma = args.gamma
    elif len(cfg.gammas) == 1:
        gamma = cfg.gammas[0]
    else:
        raise ConfigurationError("config lists several gammas; pick one with --gamma")
    M = args.M if args.M is not None else cfg.M[0]
    t0 = time.perf_counter()
    result = value_iteration(cfg.loops, cfg.network(M), args.cost, cfg.solver(gamma))
    out = args.out or "policy.aoi"
    write_policy(out, result.policy)
    print(f"wrote {out}: cost={args.cost} N={cfg.N} M={M} gamma={gamma:g} sweeps={result.sweeps} "
          f"residual={result.final_residual:.6g} seconds={time.perf_counter() - t0:.2f} backend={backend()}")


def _single_M(cfg):
    if len(cfg.M) != 1:
        raise ConfigurationError("several M values configured; use 'sweep' for an M grid")
    return cfg.M[0]


def cmd_simulate(args):
    cfg = _config(args)
    set_threads(args.threads)
    rows = []
    for path in args.policy or []:
        policy = read_policy(path)
        check_policy(policy, cfg)
        sched = LookupScheduler(policy)
        summary = simulate_scheduler(sched, cfg, args.threads)
        rows.append(summary_row(sched.kind, policy.gamma, policy.network.M, summary))
    kinds = list(args.scheduler or [])
    if getattr(args, "schedulers", None):
        kinds += [k.strip() for k in args.schedulers.split(",") if k.strip()]
    if not args.policy and not kinds:
        kinds = cfg.schedulers
    if kinds:
        M = _single_M(cfg)
        rows += run_grid(cfg, kinds, Ms=[M], threads=args.threads)
    _emit(rows, cfg, args)


def cmd_sweep(args):
    cfg = _config(args)
    set_threads(args.threads)
    kinds = [k.strip() for k in args.schedulers.split(",")] if args.schedulers else cfg.schedulers
    rows = run_grid(cfg, kinds, threads=args.threads)
    _emit(rows, cfg, args)


def _emit(rows, cfg, args):
    out = args.out or cfg.output or "-"
    text = rows_to_csv(rows, cfg.N, out)
    if out == "-":
        sys.stdout.write(text)
    else:
        print(f"wrote {len(rows)} rows to {out}")


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help="JSON experiment config ('paper' for the bundled setup)")
    common.add_argument("--out", help="output path ('-' for stdout)")
    common.add_argument("--threads", type=int, default=None, help="worker threads for sweeps and episodes")
    common.add_argument("--seed", type=int, default=None, help="override the config's master seed")
    common.add_argument("--cache-dir", help="policy cache directory")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="aoisched", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", parents=[common], help="value-iterate one policy and write it")
    p.add_argument("--gamma", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--cost", choices=sorted(set(TABLE_KINDS.values())), default="error")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("simulate", parents=[common], help="Monte Carlo runs of policies / schedulers")
    p.add_argument("--policy", action="append", help="policy file (repeatable)")
    p.add_argument("--scheduler", action="append", help="scheduler kind (repeatable)")
    p.set_defaults(func=cmd_simulate, schedulers=None)

    p = sub.add_parser("compare", parents=[common], help="simulate several schedulers side by side")
    p.add_argument("--schedulers", help="comma-separated kinds (default: config)")
    p.set_defaults(func=cmd_simulate, policy=None, scheduler=None)

    p = sub.add_parser("sweep", parents=[common], help="gamma x M grid of solve + simulate")
    p.add_argument("--schedulers", help="comma-separated kinds (default: config)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(asctime)s %(name)s %(levelname)s %(message)s")
    try:
        set_threads(args.threads)
        args.func(args)
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except NumericError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SOLVER
    except (ConfigurationError, ModelValidationError, PenaltyOverflowError, json.JSONDecodeError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PolicyFileError, OSError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
