"""Discounted value iteration over the truncated AoI MDP."""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .control import build_penalty_table
from .errors import ConfigurationError, NonConvergenceError, NumericError
from .mdp import (COST_KINDS, NetworkConfig, cost_vector, decode, encode, enumerate_actions,
                  outcome_tables, stage_cost_aoi, stage_cost_error, successors)

logger = logging.getLogger(__name__)

SWEEP_MODES = ("jacobi", "gauss_seidel")


@dataclass(frozen=True)
class SolverConfig:
    gamma: float
    theta: float = 0.1
    sweep: str = "jacobi"
    max_sweeps: int = 10_000

    def __post_init__(self):
        if not 0.0 < self.gamma < 1.0:
            raise ConfigurationError(f"gamma must lie in (0, 1), got {self.gamma}")
        if not self.theta > 0.0:
            raise ConfigurationError(f"theta must be positive, got {self.theta}")
        if self.sweep not in SWEEP_MODES:
            raise ConfigurationError(f"sweep must be one of {SWEEP_MODES}, got {self.sweep!r}")
        if self.max_sweeps < 1:
            raise ConfigurationError("max_sweeps must be >= 1")


@dataclass
class PolicyTable:
    """Stationary deterministic policy: one action index per state index."""

    actions: np.ndarray
    action_list: list
    network: NetworkConfig
    cost_kind: str
    gamma: float
    theta: float = float("nan")
    sweep: str = "jacobi"

    def __post_init__(self):
        self.actions = np.ascontiguousarray(self.actions, dtype=np.uint8)
        if self.actions.shape != (self.network.num_states,):
            raise ConfigurationError(
                f"policy has {self.actions.size} entries, expected {self.network.num_states}")
        if self.actions.size and int(self.actions.max()) >= len(self.action_list):
            raise ConfigurationError("policy references an action outside the action list")

    def action_at(self, state):
        return self.action_list[int(self.actions[encode(state, self.network)])]

    def masks(self) -> np.ndarray:
        return np.array([a.mask for a in self.action_list], dtype=np.int64)


@dataclass
class SolveResult:
    J: np.ndarray
    policy: PolicyTable
    sweeps: int
    final_residual: float
    residuals: list = field(default_factory=list)
    seconds: float = 0.0

    def __iter__(self):
        return iter((self.J, self.policy, self.sweeps, self.final_residual))


def _penalties(loops, M):
    return [build_penalty_table(lp, M) for lp in loops]


def problem_arrays(loops, network: NetworkConfig, cost_kind: str):
    """Everything the sweep kernels need, built once per solve."""
    if len(loops) != network.N:
        raise ConfigurationError(f"{len(loops)} loops supplied for N={network.N}")
    action_list = enumerate_actions(network)
    if len(action_list) > 255:
        raise ConfigurationError(f"{len(action_list)} admissible actions do not fit one byte per state")
    tables = _penalties(loops, network.M) if cost_kind == "error" else None
    cost = cost_vector(cost_kind, network, tables)
    masks, probs, counts = outcome_tables(action_list, [lp.p for lp in loops])
    return action_list, cost, masks, probs, counts


def bellman_backup(state, J, cost_kind, loops, network: NetworkConfig, gamma: float):
    """One backup at a single state: ``(value, best action index)``; lowest index wins ties."""
    if cost_kind == "error":
        c = stage_cost_error(state, _penalties(loops, network.M))
    elif cost_kind == "aoi":
        c = stage_cost_aoi(state)
    else:
        raise ConfigurationError(f"unknown cost kind {cost_kind!r}")
    best, best_a = np.inf, 0
    for ai, action in enumerate(enumerate_actions(network)):
        acc = 0.0
        for nxt, prob in successors(state, action, loops, network):
            acc += prob * J[nxt]
        q = c + gamma * acc
        if q < best:
            best, best_a = q, ai
    return best, best_a


def value_iteration(loops, network: NetworkConfig, cost_kind: str, solver: SolverConfig,
                    impl=None) -> SolveResult:
    """Iterate Bellman sweeps from ``J = 0`` until the max-norm change is at most ``theta``.

    ``impl`` picks ``"numba"`` or ``"numpy"`` kernels explicitly; by default
    the backend chosen at import time is used.
    """
    if cost_kind not in COST_KINDS:
        raise ConfigurationError(f"unknown cost kind {cost_kind!r}")
    t0 = time.perf_counter()
    action_list, cost, masks, probs, counts = problem_arrays(loops, network, cost_kind)
    kern = kernels.IMPLEMENTATIONS[impl or kernels.DEFAULT_IMPL]
    jacobi, gs = kern["jacobi"], kern["gauss_seidel"]

    S, N, M = network.num_states, network.N, network.M
    strides = network.strides
    gamma = float(solver.gamma)
    J = np.zeros(S)
    J_next = np.empty(S) if solver.sweep == "jacobi" else None
    policy = np.zeros(S, dtype=np.uint8)
    residuals = []

    def sweep(write_policy):
        nonlocal J, J_next
        if solver.sweep == "jacobi":
            u = jacobi(J, J_next, policy, cost, gamma, N, M, strides, masks, probs, counts, write_policy)
            J, J_next = J_next, J
        else:
            u = gs(J, policy, cost, gamma, N, M, strides, masks, probs, counts, write_policy)
        return float(u)

    while True:
        u = sweep(False)
        residuals.append(u)
        if not np.isfinite(u):
            raise NumericError(f"value function overflowed after {len(residuals)} sweeps")
        if u <= solver.theta:
            break
        if len(residuals) >= solver.max_sweeps:
            raise NonConvergenceError(len(residuals), u)

    # Greedy policy from the converged values; J itself is left untouched.
    scratch = np.empty(S)
    jacobi(J, scratch, policy, cost, gamma, N, M, strides, masks, probs, counts, True)
    if not np.all(np.isfinite(J)):
        raise NumericError("value function is not finite")

    table = PolicyTable(policy, action_list, network, cost_kind, gamma, solver.theta, solver.sweep)
    elapsed = time.perf_counter() - t0
    logger.info("solved %s M=%d N=%d gamma=%g in %d sweeps (residual %.3g, %.1fs)",
                cost_kind, M, N, gamma, len(residuals), residuals[-1], elapsed)
    return SolveResult(J, table, len(residuals), residuals[-1], residuals, elapsed)


def value_of(J, state, network: NetworkConfig) -> float:
    return float(J[encode(state, network)])


def states(network: NetworkConfig):
    for idx in range(network.num_states):
        yield idx, decode(idx, network)
