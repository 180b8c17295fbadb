"""Binary policy files.

Little-endian layout::

    magic      4s   b"AOI1"
    version    u32  1
    N, M, R    u32 x3
    cost kind  u8   0 = error, 1 = aoi
    gamma      f64
    theta      f64
    n_actions  u32
    masks      u64 x n_actions   (bit i = loop i scheduled)
    actions    u8  x M**N        (ascending state index, loop 0 least significant)

Total size is ``41 + 8 * n_actions + M**N`` bytes.
"""

import struct
from pathlib import Path

import numpy as np

from .errors import PolicyFileError
from .mdp import Action, NetworkConfig
from .solver import PolicyTable

MAGIC = b"AOI1"
VERSION = 1
HEADER = struct.Struct("<4sIIIIBddI")
COST_CODES = {"error": 0, "aoi": 1}
COST_NAMES = {v: k for k, v in COST_CODES.items()}


def policy_bytes(policy: PolicyTable) -> bytes:
    net = policy.network
    head = HEADER.pack(MAGIC, VERSION, net.N, net.M, net.R, COST_CODES[policy.cost_kind],
                       float(policy.gamma), float(policy.theta), len(policy.action_list))
    masks = np.array([a.mask for a in policy.action_list], dtype="<u8").tobytes()
    return head + masks + np.ascontiguousarray(policy.actions, dtype=np.uint8).tobytes()


def write_policy(path, policy: PolicyTable):
    Path(path).write_bytes(policy_bytes(policy))


def parse_policy(data: bytes) -> PolicyTable:
    if len(data) < HEADER.size:
        raise PolicyFileError(f"policy file too short ({len(data)} bytes)")
    magic, version, N, M, R, cost, gamma, theta, n_actions = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise PolicyFileError(f"bad magic {magic!r}")
    if version != VERSION:
        raise PolicyFileError(f"unsupported policy file version {version}")
    if cost not in COST_NAMES:
        raise PolicyFileError(f"unknown cost kind code {cost}")
    expected = HEADER.size + 8 * n_actions + M ** N
    if len(data) != expected:
        raise PolicyFileError(f"policy file has {len(data)} bytes, expected {expected}")
    off = HEADER.size
    masks = np.frombuffer(data, dtype="<u8", count=n_actions, offset=off)
    actions = np.frombuffer(data, dtype=np.uint8, offset=off + 8 * n_actions).copy()
    if actions.size and int(actions.max()) >= n_actions:
        raise PolicyFileError("action index out of range")
    try:
        network = NetworkConfig(N=N, R=R, M=M)
    except ValueError as exc:
        raise PolicyFileError(str(exc)) from exc
    return PolicyTable(actions, [Action(int(m)) for m in masks], network, COST_NAMES[cost],
                       gamma, theta)


def read_policy(path) -> PolicyTable:
    return parse_policy(Path(path).read_bytes())
