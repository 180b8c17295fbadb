"""Schedulers driving the simulator.

``decide(delta)`` takes the raw (unclamped) age vector and returns an
:class:`~aoisched.mdp.Action`. Each scheduler also knows how to describe
itself to the episode kernel via ``kernel_args()``.
"""

from __future__ import annotations

import numpy as np

from . import kernels
from .control import build_penalty_table
from .errors import ConfigurationError
from .mdp import Action, NetworkConfig, encode

KINDS = ("DES", "AoIS", "GES", "RoundRobin")

_EMPTY_TABLE = np.zeros(1, dtype=np.uint8)
_EMPTY_MASKS = np.zeros(1, dtype=np.int64)
_EMPTY_GES = np.zeros((1, 1))


class LookupScheduler:
    """Table policy from value iteration (DES for error cost, AoIS for age cost)."""

    def __init__(self, policy):
        self.policy = policy
        self.network: NetworkConfig = policy.network
        self.kind = "DES" if policy.cost_kind == "error" else "AoIS"
        self.gamma = policy.gamma
        self._masks = policy.masks()

    def clamp(self, delta):
        if len(delta) != self.network.N:
            raise ConfigurationError(f"state has {len(delta)} loops, policy expects {self.network.N}")
        return tuple(min(int(d), self.network.M) for d in delta)

    def decide(self, delta) -> Action:
        idx = encode(self.clamp(delta), self.network)
        return self.policy.action_list[int(self.policy.actions[idx])]

    def reset(self):
        pass

    def kernel_args(self):
        return (kernels.SCHED_LOOKUP, self.policy.actions, self._masks, self.network.M,
                self.network.strides, _EMPTY_GES)


class GreedyErrorScheduler:
    """Schedule the R loops with the largest ``p_i * g_i(delta_i)``; ties go to the lower index.

    Ages are not clamped. Penalty tables start at ``4 * M`` entries and grow
    on demand; an unstable loop whose penalty overflows raises
    :class:`PenaltyOverflowError`.
    """

    kind = "GES"
    gamma = None

    def __init__(self, loops, network: NetworkConfig, length=None):
        if len(loops) != network.N:
            raise ConfigurationError(f"{len(loops)} loops supplied for N={network.N}")
        self.loops = list(loops)
        self.network = network
        self.p = np.array([lp.p for lp in loops])
        self._build(length or max(4 * network.M, 16))

    def _build(self, length):
        self.tables = [build_penalty_table(lp, length) for lp in self.loops]
        self.length = length
        self._grid = np.vstack([t.values for t in self.tables])

    def extend(self, upto):
        """Grow the tables to cover ages up to ``upto``; stops at the overflow limit."""
        if upto <= self.length:
            return
        self._build(max(upto, 2 * self.length))

    def scores(self, delta):
        top = max(int(d) for d in delta)
        if top > self.length:
            self.extend(top)
        return np.array([self.p[i] * self._grid[i, int(d) - 1] for i, d in enumerate(delta)])

    def decide(self, delta) -> Action:
        if len(delta) != self.network.N:
            raise ConfigurationError(f"state has {len(delta)} loops, expected {self.network.N}")
        sc = self.scores(delta)
        k = min(self.network.R, self.network.N)
        order = np.argsort(-sc, kind="stable")[:k]
        return Action.of(order)

    def reset(self):
        pass

    def kernel_args(self):
        return (kernels.SCHED_GREEDY, _EMPTY_TABLE, _EMPTY_MASKS, 1,
                np.ones(1, dtype=np.int64), self._grid)

    def grow_for_kernel(self):
        """Called when an episode outran the tables."""
        self.extend(2 * self.length)


class RoundRobinScheduler:
    """Cyclic allocation of the next R loops; the cursor is per-episode state."""

    kind = "RoundRobin"
    gamma = None

    def __init__(self, network: NetworkConfig):
        self.network = network
        self.cursor = 0

    def decide(self, delta=None) -> Action:
        N, R = self.network.N, self.network.R
        loops = [(self.cursor + r) % N for r in range(min(R, N))]
        self.cursor = (self.cursor + R) % N
        return Action.of(loops)

    def reset(self):
        self.cursor = 0

    def kernel_args(self):
        return (kernels.SCHED_ROUND_ROBIN, _EMPTY_TABLE, _EMPTY_MASKS, 1,
                np.ones(1, dtype=np.int64), _EMPTY_GES)


def decide_round_robin(cursor, N, R):
    """Functional form: ``(action, next_cursor)``."""
    loops = [(cursor + r) % N for r in range(min(R, N))]
    return Action.of(loops), (cursor + R) % N


def decide_greedy(delta, tables, p, R) -> Action:
    scores = np.array([p[i] * tables[i][int(d)] for i, d in enumerate(delta)])
    order = np.argsort(-scores, kind="stable")[:min(R, len(delta))]
    return Action.of(order)
