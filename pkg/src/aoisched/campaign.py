"""Solve/simulate/sweep campaigns shared by the CLI and the acceptance suite."""

from __future__ import annotations

import csv
import io
import logging
import os
from pathlib import Path

from .config import ExperimentConfig
from .errors import ConfigurationError, PolicyFileError
from .netsim import run_monte_carlo
from .policyio import read_policy, write_policy
from .schedulers import GreedyErrorScheduler, LookupScheduler, RoundRobinScheduler
from .solver import value_iteration

logger = logging.getLogger(__name__)

TABLE_KINDS = {"DES": "error", "AoIS": "aoi"}
FLOAT_FMT = "{:.10g}"


def default_cache_dir():
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "aoisched"


def solve_policy(cfg: ExperimentConfig, gamma, M, cost_kind, cache_dir=None, use_cache=True):
    """Solve (or fetch from the on-disk cache) one policy; returns ``(policy, result_or_None)``."""
    cache = Path(cache_dir or cfg.cache_dir or default_cache_dir())
    key = cfg.policy_key(gamma, M, cost_kind)
    path = cache / f"{cost_kind}-N{cfg.N}-M{M}-g{gamma:g}-{key[:16]}.aoi"
    if use_cache and path.exists():
        try:
            logger.info("policy cache hit %s", path.name)
            return read_policy(path), None
        except PolicyFileError:
            logger.warning("ignoring corrupt cached policy %s", path)
    result = value_iteration(cfg.loops, cfg.network(M), cost_kind, cfg.solver(gamma))
    if use_cache:
        cache.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        write_policy(tmp, result.policy)
        tmp.replace(path)
    return result.policy, result


def make_scheduler(kind, cfg: ExperimentConfig, gamma=None, M=None, cache_dir=None, use_cache=True):
    net = cfg.network(M)
    if kind in TABLE_KINDS:
        if gamma is None:
            raise ConfigurationError(f"{kind} needs a discount factor")
        policy, _ = solve_policy(cfg, gamma, net.M, TABLE_KINDS[kind], cache_dir, use_cache)
        return LookupScheduler(policy)
    if kind == "GES":
        return GreedyErrorScheduler(cfg.loops, net)
    if kind == "RoundRobin":
        return RoundRobinScheduler(net)
    raise ConfigurationError(f"unknown scheduler kind {kind!r}")


def check_policy(policy, cfg: ExperimentConfig):
    net = policy.network
    if net.N != cfg.N or net.R != cfg.R:
        raise ConfigurationError(
            f"policy is for N={net.N}, R={net.R}; config has N={cfg.N}, R={cfg.R}")
    if net.M not in cfg.M:
        raise ConfigurationError(f"policy M={net.M} not among configured M values {cfg.M}")


def csv_header(N):
    return (["scheduler", "gamma", "M", "avg_error_mean", "avg_error_ci", "avg_aoi_mean", "avg_aoi_ci"]
            + [f"share_{i + 1}" for i in range(N)])


def summary_row(kind, gamma, M, summary):
    f = FLOAT_FMT.format
    return ([kind, "" if gamma is None else f(gamma), "" if M is None else str(M),
             f(summary.avg_error.mean), f(summary.avg_error.ci),
             f(summary.avg_aoi.mean), f(summary.avg_aoi.ci)]
            + [f(s) for s in summary.shares.mean])


def simulate_scheduler(scheduler, cfg: ExperimentConfig, threads=None):
    net = cfg.network(scheduler.network.M)
    return run_monte_carlo(scheduler, cfg.loops, net, cfg.sim, threads=threads)


def run_grid(cfg: ExperimentConfig, kinds=None, gammas=None, Ms=None, threads=None,
             cache_dir=None, use_cache=True, on_result=None):
    """Rows for every table scheduler at each (M, gamma) and every online scheduler once.

    Rows follow the scheduler order of ``kinds`` then M, then gamma.
    ``on_result(kind, gamma, M, summary)`` sees every summary as it is produced.
    """
    kinds = kinds or cfg.schedulers
    gammas = gammas or cfg.gammas
    Ms = Ms or cfg.M
    rows = []
    for kind in kinds:
        if kind in TABLE_KINDS:
            points = [(g, M) for M in Ms for g in gammas]
        else:
            points = [(None, None)]
        for gamma, M in points:
            sched = make_scheduler(kind, cfg, gamma, M, cache_dir, use_cache)
            summary = simulate_scheduler(sched, cfg, threads)
            logger.info("%s gamma=%s M=%s: e=%.4g aoi=%.4g", kind, gamma, M,
                        summary.avg_error.mean, summary.avg_aoi.mean)
            if on_result:
                on_result(kind, gamma, M, summary)
            rows.append(summary_row(kind, gamma, M, summary))
    return rows


def rows_to_csv(rows, N, path=None) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(csv_header(N))
    writer.writerows(rows)
    text = buf.getvalue()
    if path is not None and str(path) != "-":
        Path(path).write_text(text)
    return text
