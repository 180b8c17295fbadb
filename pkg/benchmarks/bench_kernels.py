"""Compare the numba kernels with their pure-numpy twins.

    python3 benchmarks/bench_kernels.py            # moderate sizes
    python3 benchmarks/bench_kernels.py --full     # one full 25^5 sweep as well

Each case checks that both backends give bit-identical results before
reporting the timings.
"""

import argparse
import logging
import time

import numpy as np

from aoisched import _accel, kernels
from aoisched.config import load_config
from aoisched.mdp import NetworkConfig
from aoisched.netsim import SimConfig, _run_batch
from aoisched.schedulers import GreedyErrorScheduler, LookupScheduler
from aoisched.solver import SolverConfig, problem_arrays, value_iteration

log = logging.getLogger("bench")


def best_of(fn, repeat):
    times = []
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def bench_sweep(loops, M, repeat):
    """One Jacobi sweep from a non-trivial J."""
    net = NetworkConfig(len(loops), 1, M)
    _, cost, masks, probs, counts = problem_arrays(loops, net, "error")
    J = cost * 3.0
    rows = {}
    outs = {}
    for impl in ("numba", "numpy"):
        fn = kernels.IMPLEMENTATIONS[impl]["jacobi"]
        out = np.empty_like(J)
        pol = np.zeros(J.size, dtype=np.uint8)
        fn(J, out, pol, cost, 0.9, net.N, M, net.strides, masks, probs, counts, True)  # warm-up / JIT
        secs, _ = best_of(lambda: fn(J, out, pol, cost, 0.9, net.N, M, net.strides, masks, probs, counts, True),
                          repeat)
        rows[impl] = secs
        outs[impl] = (out.copy(), pol.copy())
    assert np.array_equal(outs["numba"][0], outs["numpy"][0])
    assert np.array_equal(outs["numba"][1], outs["numpy"][1])
    return net.num_states, rows


def bench_solve(loops, M):
    net = NetworkConfig(len(loops), 1, M)
    cfg = SolverConfig(0.9, 0.1)
    rows, res = {}, {}
    for impl in ("numba", "numpy"):
        value_iteration(loops, NetworkConfig(len(loops), 1, 2), "error", cfg, impl=impl)
        secs, res[impl] = best_of(lambda: value_iteration(loops, net, "error", cfg, impl=impl), 1)
        rows[impl] = secs
    assert np.array_equal(res["numba"].J, res["numpy"].J)
    return res["numba"].sweeps, rows


def bench_simulate(sched, loops, net, T, reps):
    sim = SimConfig(T=T, reps=reps, seed=1)
    rows, res = {}, {}
    for impl in ("numba", "numpy"):
        _run_batch(sched, loops, net, SimConfig(T=10, seed=1), [0], impl)
        secs, res[impl] = best_of(lambda: _run_batch(sched, loops, net, sim, list(range(reps)), impl), 1)
        rows[impl] = secs
    for a, b in zip(res["numba"], res["numpy"]):
        assert np.array_equal(a.per_loop_error, b.per_loop_error)
    return rows


def line(name, size, rows):
    speedup = rows["numpy"] / rows["numba"] if rows["numba"] > 0 else float("inf")
    print(f"{name:<42} {size:>12} {rows['numba']:>10.3f}s {rows['numpy']:>10.3f}s {speedup:>8.1f}x")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--full", action="store_true", help="include a single 25^5 Jacobi sweep")
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--threads", type=int, default=None)
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.WARNING)
    if not _accel.HAVE_NUMBA:
        raise SystemExit("numba is not installed; nothing to compare")
    _accel.set_threads(args.threads)

    cfg = load_config("paper")
    loops = cfg.loops
    print(f"{'case':<42} {'size':>12} {'numba':>11} {'numpy':>11} {'speedup':>9}")
    for M in (10, 15):
        size, rows = bench_sweep(loops, M, args.repeat)
        line(f"jacobi sweep N=5 M={M}", size, rows)
    if args.full:
        size, rows = bench_sweep(loops, 25, 1)
        line("jacobi sweep N=5 M=25", size, rows)
    sweeps, rows = bench_solve(loops, 10)
    line(f"value iteration N=5 M=10 ({sweeps} sweeps)", 10 ** 5, rows)

    net = cfg.network(15)
    policy = value_iteration(loops, net, "error", SolverConfig(0.9, 0.1)).policy
    for name, sched in (("simulate DES", LookupScheduler(policy)), ("simulate GES", GreedyErrorScheduler(loops, net))):
        rows = bench_simulate(sched, loops, net, T=20_000, reps=16)
        line(f"{name} T=20000 x16", 16 * 20_000, rows)


if __name__ == "__main__":
    main()
