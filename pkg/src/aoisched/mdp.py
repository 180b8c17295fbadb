"""Truncated AoI Markov decision process.

States are age vectors in ``{1..M}^N`` stored under a dense mixed-radix
index with loop 0 as the least significant digit. Ages above ``M`` are
clamped back to ``M`` so probability mass that would leave the finite set
stays on the boundary.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import NamedTuple, Sequence

import numpy as np

from .errors import ConfigurationError

COST_KINDS = ("error", "aoi")


@dataclass(frozen=True)
class NetworkConfig:
    N: int
    R: int
    M: int

    def __post_init__(self):
        if self.N < 1:
            raise ConfigurationError("N must be >= 1")
        if not 1 <= self.R <= self.N:
            raise ConfigurationError(f"R must lie in [1, N={self.N}], got {self.R}")
        if self.M < 1:
            raise ConfigurationError("M must be >= 1")
        if self.N > 62:
            raise ConfigurationError("at most 62 loops fit an action bitmask")

    @property
    def num_states(self) -> int:
        return self.M ** self.N

    @property
    def strides(self) -> np.ndarray:
        return self.M ** np.arange(self.N, dtype=np.int64)


@dataclass(frozen=True, order=True)
class Action:
    """Scheduled loops as a bitmask (bit i set means loop i transmits)."""

    mask: int

    @classmethod
    def of(cls, loops) -> "Action":
        mask = 0
        for i in loops:
            mask |= 1 << int(i)
        return cls(mask)

    @property
    def loops(self) -> tuple:
        out, m, i = [], self.mask, 0
        while m:
            if m & 1:
                out.append(i)
            m >>= 1
            i += 1
        return tuple(out)

    def __contains__(self, i):
        return bool(self.mask >> i & 1)

    def __len__(self):
        return bin(self.mask).count("1")

    def __repr__(self):
        return "Action({" + ", ".join(map(str, self.loops)) + "})"


class Transition(NamedTuple):
    next: int
    prob: float


def enumerate_actions(config: NetworkConfig) -> list:
    """All subsets of at most R loops: by size, then by mask value. Idle is index 0."""
    actions = []
    for k in range(config.R + 1):
        masks = sorted(Action.of(c).mask for c in combinations(range(config.N), k))
        actions.extend(Action(m) for m in masks)
    return actions


def encode(state: Sequence[int], config: NetworkConfig) -> int:
    if len(state) != config.N:
        raise ConfigurationError(f"state has {len(state)} components, expected {config.N}")
    idx = 0
    for i in reversed(range(config.N)):
        d = int(state[i])
        if not 1 <= d <= config.M:
            raise IndexError(f"age {d} of loop {i} outside 1..{config.M}")
        idx = idx * config.M + (d - 1)
    return idx


def decode(idx: int, config: NetworkConfig) -> tuple:
    idx = int(idx)
    if not 0 <= idx < config.num_states:
        raise IndexError(f"state index {idx} outside [0, {config.num_states})")
    out = []
    for _ in range(config.N):
        idx, r = divmod(idx, config.M)
        out.append(r + 1)
    return tuple(out)


def _check_loops(loops, config):
    if len(loops) != config.N:
        raise ConfigurationError(f"{len(loops)} loops supplied for N={config.N}")


def outcome_tables(action_list, p):
    """Channel outcomes per action, independent of the state.

    Returns ``(masks, probs, counts)`` where row ``a`` lists the subsets of
    the scheduled loops that are delivered together with their probability.
    Zero-probability outcomes are dropped.
    """
    p = np.asarray(p, dtype=np.float64)
    width = max(1 << len(a) for a in action_list)
    masks = np.zeros((len(action_list), width), dtype=np.int64)
    probs = np.zeros((len(action_list), width), dtype=np.float64)
    counts = np.zeros(len(action_list), dtype=np.int64)
    for ai, action in enumerate(action_list):
        loops = action.loops
        k = 0
        for bits in range(1 << len(loops)):
            prob, sub = 1.0, 0
            for j, i in enumerate(loops):
                if bits >> j & 1:
                    prob *= p[i]
                    sub |= 1 << i
                else:
                    prob *= 1.0 - p[i]
            if prob > 0.0:
                masks[ai, k] = sub
                probs[ai, k] = prob
                k += 1
        counts[ai] = k
    return masks, probs, counts


def successors(state, action: Action, loops, config: NetworkConfig) -> list:
    """Successor distribution of ``state`` under ``action`` with clamping at M."""
    _check_loops(loops, config)
    if len(action) > config.R:
        raise ConfigurationError(f"action {action} schedules more than R={config.R} loops")
    aged = [min(int(d) + 1, config.M) for d in state]
    encode(state, config)  # range check
    out = {}
    masks, probs, counts = outcome_tables([action], [lp.p for lp in loops])
    for k in range(counts[0]):
        nxt = list(aged)
        sub = int(masks[0, k])
        for i in range(config.N):
            if sub >> i & 1:
                nxt[i] = 1
        idx = encode(nxt, config)
        out[idx] = out.get(idx, 0.0) + float(probs[0, k])
    return [Transition(i, pr) for i, pr in out.items()]


def stage_cost_error(state, tables) -> float:
    total = 0.0
    for d, g in zip(state, tables):
        total += g[int(d)]
    return total


def stage_cost_aoi(state) -> float:
    total = 0.0
    for d in state:
        total += float(d)
    return total


def cost_vector(kind: str, config: NetworkConfig, tables=None) -> np.ndarray:
    """Stage cost for every state index, summed in loop order like the scalar versions."""
    if kind not in COST_KINDS:
        raise ConfigurationError(f"unknown cost kind {kind!r}")
    S, M = config.num_states, config.M
    cost = np.zeros(S)
    for i in range(config.N):
        if kind == "error":
            if tables is None or len(tables[i]) < M:
                raise ConfigurationError("penalty tables must cover ages 1..M")
            per_age = np.asarray(tables[i].values[:M], dtype=np.float64)
        else:
            per_age = np.arange(1, M + 1, dtype=np.float64)
        stride = M ** i
        cost += np.tile(np.repeat(per_age, stride), S // (stride * M))
    return cost
