"""Monte Carlo co-simulation of N loops sharing an erasure channel.

Per slot the scheduler sees the current (unclamped) ages, the scheduled
loops draw their channel outcome, every loop draws fresh noise, and the
error and age are accumulated before the update. A delivery at slot t
refreshes the estimator at t+1.

Randomness is pre-drawn per (episode, loop) from
``SeedSequence(seed, spawn_key=(rep, loop))``: row 0 of the normal draws
gives ``e[0]``, rows 1..T the disturbances, followed by T channel
uniforms. Channel uniforms are drawn for every slot whether or not the
loop is scheduled, so different schedulers see identical noise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from . import kernels
from ._accel import set_threads
from .control import initial_error_state, initial_full_state, step_error, step_full_state
from .errors import ConfigurationError
from .mdp import NetworkConfig

MODES = ("error_recursion", "full_state")
Z95 = 1.96


@dataclass(frozen=True)
class SimConfig:
    T: int = 20_000
    reps: int = 100
    seed: int = 0
    initial_aoi: Union[str, Sequence[int]] = "all_one"
    mode: str = "error_recursion"

    def __post_init__(self):
        if self.T < 1:
            raise ConfigurationError("T must be >= 1")
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if self.mode not in MODES:
            raise ConfigurationError(f"mode must be one of {MODES}")
        if not 0 <= int(self.seed) < 2 ** 64:
            raise ConfigurationError("seed must be an unsigned 64-bit integer")
        if isinstance(self.initial_aoi, str):
            if self.initial_aoi != "all_one":
                raise ConfigurationError(f"unknown initial_aoi {self.initial_aoi!r}")
        else:
            ages = tuple(int(d) for d in self.initial_aoi)
            if any(d < 1 for d in ages):
                raise ConfigurationError("initial ages must be >= 1")
            object.__setattr__(self, "initial_aoi", ages)

    def initial_ages(self, N) -> np.ndarray:
        if self.initial_aoi == "all_one":
            return np.ones(N, dtype=np.int64)
        if len(self.initial_aoi) != N:
            raise ConfigurationError(f"initial_aoi has {len(self.initial_aoi)} entries, expected {N}")
        return np.array(self.initial_aoi, dtype=np.int64)


@dataclass
class Metrics:
    avg_error: float
    avg_aoi: float
    shares: np.ndarray
    per_loop_error: np.ndarray
    per_loop_aoi: np.ndarray


@dataclass
class Stat:
    mean: Union[float, np.ndarray]
    std: Union[float, np.ndarray]
    ci: Union[float, np.ndarray]

    @classmethod
    def over(cls, samples):
        x = np.asarray(samples, dtype=np.float64)
        mean = x.mean(axis=0)
        if len(x) < 2:
            std = np.full_like(mean, np.nan)
        else:
            std = x.std(axis=0, ddof=1)
        ci = Z95 * std / math.sqrt(len(x))
        if np.ndim(mean) == 0:
            return cls(float(mean), float(std), float(ci))
        return cls(mean, std, ci)


@dataclass
class RunSummary:
    avg_error: Stat
    avg_aoi: Stat
    shares: Stat
    per_loop_error: Stat
    reps: int
    episodes: list = field(default_factory=list, repr=False)

    @classmethod
    def from_episodes(cls, episodes):
        return cls(
            avg_error=Stat.over([m.avg_error for m in episodes]),
            avg_aoi=Stat.over([m.avg_aoi for m in episodes]),
            shares=Stat.over([m.shares for m in episodes]),
            per_loop_error=Stat.over([m.per_loop_error for m in episodes]),
            reps=len(episodes),
            episodes=list(episodes),
        )


def _padded_dim(loops):
    return max(lp.n for lp in loops)


def episode_streams(loops, T, seed, rep):
    """Pre-drawn randomness of one episode: ``(E0[N, n], W[T, N, n], U[T, N])``."""
    N, n = len(loops), _padded_dim(loops)
    E0 = np.zeros((N, n))
    W = np.zeros((T, N, n))
    U = np.empty((T, N))
    for i, lp in enumerate(loops):
        rng = np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(rep), i)))
        z = rng.standard_normal((T + 1, lp.n))
        draws = z @ lp.noise_factor().T
        E0[i, :lp.n] = draws[0]
        W[:, i, :lp.n] = draws[1:]
        U[:, i] = rng.random(T)
    return E0, W, U


def _padded_dynamics(loops):
    n = _padded_dim(loops)
    A = np.zeros((len(loops), n, n))
    for i, lp in enumerate(loops):
        A[i, :lp.n, :lp.n] = lp.A
    return A


def _check(scheduler, loops, net):
    if len(loops) != net.N:
        raise ConfigurationError(f"{len(loops)} loops supplied for N={net.N}")
    snet = scheduler.network
    if snet.N != net.N or snet.R != net.R:
        raise ConfigurationError(
            f"scheduler built for N={snet.N}, R={snet.R}; network has N={net.N}, R={net.R}")


def _metrics_from_sums(err_sum, aoi_sum, share_cnt, T):
    N = len(err_sum)
    return Metrics(
        avg_error=float(err_sum.sum() / (T * N)),
        avg_aoi=float(aoi_sum.sum() / (T * N)),
        shares=share_cnt / T,
        per_loop_error=err_sum / T,
        per_loop_aoi=aoi_sum / T,
    )


def _run_batch(scheduler, loops, net, sim, reps, impl=None):
    simulate = kernels.IMPLEMENTATIONS[impl or kernels.DEFAULT_IMPL]["simulate"]
    N, T = net.N, sim.T
    streams = [episode_streams(loops, T, sim.seed, r) for r in reps]
    E0 = np.stack([s[0] for s in streams])
    W = np.stack([s[1] for s in streams])
    U = np.stack([s[2] for s in streams])
    A = _padded_dynamics(loops)
    p = np.array([lp.p for lp in loops])
    delta0 = sim.initial_ages(N)
    while True:
        B = len(reps)
        err = np.zeros((B, N))
        aoi = np.zeros((B, N), dtype=np.int64)
        cnt = np.zeros((B, N), dtype=np.int64)
        status = np.zeros(B, dtype=np.int64)
        kind, table, masks, M, strides, ges = scheduler.kernel_args()
        simulate(kind, net.R, p, table, masks, M, strides, ges, A, W, E0, U, delta0,
                 err, aoi, cnt, status)
        if not status.any():
            break
        scheduler.grow_for_kernel()
    return [_metrics_from_sums(err[b], aoi[b], cnt[b], T) for b in range(len(reps))]


def run_episode(scheduler, loops, net: NetworkConfig, sim: SimConfig, rep: int = 0, impl=None) -> Metrics:
    """Metrics of episode ``rep`` under master seed ``sim.seed``."""
    _check(scheduler, loops, net)
    if sim.mode == "full_state":
        return simulate_trajectory(scheduler, loops, net, sim, rep).metrics()
    return _run_batch(scheduler, loops, net, sim, [rep], impl)[0]


def run_monte_carlo(scheduler, loops, net: NetworkConfig, sim: SimConfig, *, batch: int = 16,
                    threads: Optional[int] = None, impl=None) -> RunSummary:
    """``sim.reps`` independent episodes aggregated into means and 95% normal CIs.

    Episodes inside a batch run on numba's thread pool (``threads`` caps
    it). Results depend only on ``sim`` (seed, reps, T), not on ``batch`` or
    ``threads``.
    """
    _check(scheduler, loops, net)
    if sim.mode == "full_state":
        return RunSummary.from_episodes(
            [simulate_trajectory(scheduler, loops, net, sim, r).metrics() for r in range(sim.reps)])
    set_threads(threads)
    chunks = [list(range(s, min(s + batch, sim.reps))) for s in range(0, sim.reps, batch)]
    parts = [_run_batch(scheduler, loops, net, sim, c, impl) for c in chunks]
    return RunSummary.from_episodes([m for part in parts for m in part])


@dataclass
class Trajectory:
    """Per-slot record of one episode (values before each slot's update)."""

    ages: np.ndarray        # (T+1, N); row T is the state after the last slot
    errors: list            # per loop: (T+1, n_i)
    scheduled: np.ndarray   # (T, N) bool
    delivered: np.ndarray   # (T, N) bool

    @property
    def T(self):
        return self.scheduled.shape[0]

    def metrics(self) -> Metrics:
        T = self.T
        err = np.array([np.sum(e[:T] * e[:T], axis=1).sum() for e in self.errors])
        aoi = self.ages[:T].sum(axis=0)
        return _metrics_from_sums(err, aoi, self.scheduled.sum(axis=0), T)


def simulate_trajectory(scheduler, loops, net: NetworkConfig, sim: SimConfig, rep: int = 0,
                        mode: Optional[str] = None) -> Trajectory:
    """Slot-by-slot reference simulation recording the full trajectory.

    Uses the same random streams as the kernels. ``mode="full_state"`` runs
    plant, estimator and controller explicitly instead of the error recursion.
    """
    _check(scheduler, loops, net)
    mode = mode or sim.mode
    N, T = net.N, sim.T
    E0, W, U = episode_streams(loops, T, sim.seed, rep)
    delta0 = sim.initial_ages(N)
    if mode == "full_state":
        if np.any(delta0 != 1):
            raise ConfigurationError("full-state mode starts every estimator at age 1")
        states = [initial_full_state(lp, E0[i, :lp.n]) for i, lp in enumerate(loops)]
    else:
        states = [initial_error_state(E0[i, :lp.n]) for i, lp in enumerate(loops)]
        states = [s.__class__(e=s.e, delta=int(d)) for s, d in zip(states, delta0)]
    ages = np.empty((T + 1, N), dtype=np.int64)
    errors = [np.empty((T + 1, lp.n)) for lp in loops]
    scheduled = np.zeros((T, N), dtype=bool)
    delivered = np.zeros((T, N), dtype=bool)
    scheduler.reset()
    for t in range(T):
        for i in range(N):
            ages[t, i] = states[i].delta
            errors[i][t] = states[i].e
        action = scheduler.decide(tuple(int(s.delta) for s in states))
        for i, lp in enumerate(loops):
            sch = i in action
            ok = sch and U[t, i] < lp.p
            scheduled[t, i] = sch
            delivered[t, i] = ok
            w = W[t, i, :lp.n]
            if mode == "full_state":
                states[i] = step_full_state(states[i], lp, w, ok)
            else:
                states[i] = step_error(states[i], lp.A, w, ok)
    for i in range(N):
        ages[T, i] = states[i].delta
        errors[i][T] = states[i].e
    return Trajectory(ages, errors, scheduled, delivered)
