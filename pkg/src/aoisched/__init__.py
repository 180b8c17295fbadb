"""Control-aware age-of-information scheduling for networked control loops."""

__version__ = "0.1.0"

from .control import LoopModel, PenaltyTable, build_penalty_table, step_error, step_full_state
from .mdp import Action, NetworkConfig, decode, encode, enumerate_actions, successors
from .netsim import Metrics, RunSummary, SimConfig, run_episode, run_monte_carlo
from .schedulers import GreedyErrorScheduler, LookupScheduler, RoundRobinScheduler
from .solver import PolicyTable, SolverConfig, bellman_backup, value_iteration

__all__ = [
    "Action", "GreedyErrorScheduler", "LookupScheduler", "LoopModel", "Metrics", "NetworkConfig",
    "PenaltyTable", "PolicyTable", "RoundRobinScheduler", "RunSummary", "SimConfig", "SolverConfig",
    "bellman_backup", "build_penalty_table", "decode", "encode", "enumerate_actions",
    "run_episode", "run_monte_carlo", "step_error", "step_full_state", "successors",
    "value_iteration",
]
