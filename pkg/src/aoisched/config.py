"""JSON experiment configuration."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Optional

from .control import LoopModel
from .errors import ConfigurationError, ModelValidationError
from .mdp import NetworkConfig
from .netsim import SimConfig
from .schedulers import KINDS
from .solver import SolverConfig

BUNDLED = ("paper",)


def _as_list(value, name):
    if isinstance(value, (list, tuple)):
        if not value:
            raise ConfigurationError(f"{name} list must not be empty")
        return list(value)
    return [value]


@dataclass
class ExperimentConfig:
    loops: list
    R: int
    M: list
    gammas: list
    theta: float = 0.1
    sweep: str = "jacobi"
    max_sweeps: int = 10_000
    sim: SimConfig = field(default_factory=SimConfig)
    schedulers: list = field(default_factory=lambda: ["DES", "AoIS", "GES"])
    output: Optional[str] = None
    cache_dir: Optional[str] = None

    @property
    def N(self) -> int:
        return len(self.loops)

    def network(self, M=None) -> NetworkConfig:
        return NetworkConfig(N=self.N, R=self.R, M=self.M[0] if M is None else M)

    def solver(self, gamma) -> SolverConfig:
        return SolverConfig(gamma=gamma, theta=self.theta, sweep=self.sweep, max_sweeps=self.max_sweeps)

    def with_seed(self, seed) -> "ExperimentConfig":
        return replace(self, sim=replace(self.sim, seed=int(seed)))

    def policy_key(self, gamma, M, cost_kind) -> str:
        """Content hash of everything a solved policy depends on."""
        blob = {
            "loops": [{k: v for k, v in lp.to_dict().items() if k != "name"} for lp in self.loops],
            "N": self.N, "R": self.R, "M": M, "gamma": float(gamma), "theta": self.theta,
            "sweep": self.sweep, "cost": cost_kind,
        }
        return hashlib.sha256(json.dumps(blob, sort_keys=True).encode()).hexdigest()


def _loop(entry, i):
    if not isinstance(entry, dict):
        raise ConfigurationError(f"loop {i} must be an object")
    missing = [k for k in ("A", "p") if k not in entry]
    if missing:
        raise ConfigurationError(f"loop {i} is missing {missing}")
    A = entry["A"]
    n = len(A) if isinstance(A, list) else 1
    eye = 1.0 if n == 1 else [[float(r == c) for c in range(n)] for r in range(n)]
    try:
        return LoopModel(A=A, B=entry.get("B", eye), Sigma=entry.get("Sigma", eye),
                         L=entry.get("L", A), p=entry["p"], name=entry.get("name", f"loop{i + 1}"))
    except ModelValidationError as exc:
        raise ConfigurationError(f"loop {i}: {exc}") from exc


def from_dict(raw: dict) -> ExperimentConfig:
    if not isinstance(raw, dict):
        raise ConfigurationError("config must be a JSON object")
    try:
        loops = [_loop(s, i) for i, s in enumerate(raw["loops"])]
    except KeyError:
        raise ConfigurationError("config needs a 'loops' list") from None
    if not loops:
        raise ConfigurationError("at least one loop is required")
    net = raw.get("network", {})
    if "N" in net and int(net["N"]) != len(loops):
        raise ConfigurationError(f"network.N={net['N']} but {len(loops)} loops given")
    R = int(net.get("R", 1))
    Ms = [int(m) for m in _as_list(net.get("M", 25), "network.M")]
    sol = raw.get("solver", {})
    gammas = [float(g) for g in _as_list(sol.get("gamma", 0.9), "solver.gamma")]
    sim_raw = raw.get("sim", {})
    sim = SimConfig(
        T=int(sim_raw.get("T", 20_000)),
        reps=int(sim_raw.get("reps", 100)),
        seed=int(sim_raw.get("seed", 0)),
        initial_aoi=sim_raw.get("initial_aoi", "all_one"),
        mode=sim_raw.get("mode", "error_recursion"),
    )
    schedulers = list(raw.get("schedulers", ["DES", "AoIS", "GES"]))
    unknown = [s for s in schedulers if s not in KINDS]
    if unknown:
        raise ConfigurationError(f"unknown scheduler kinds {unknown}; choose from {KINDS}")
    cfg = ExperimentConfig(
        loops=loops, R=R, M=Ms, gammas=gammas,
        theta=float(sol.get("theta", 0.1)),
        sweep=sol.get("sweep", "jacobi"),
        max_sweeps=int(sol.get("max_sweeps", 10_000)),
        sim=sim, schedulers=schedulers,
        output=raw.get("output"), cache_dir=raw.get("cache_dir"),
    )
    # cross-field validation via the typed constructors
    for M in cfg.M:
        cfg.network(M)
    for g in cfg.gammas:
        cfg.solver(g)
    if sim.initial_aoi != "all_one":
        sim.initial_ages(cfg.N)
    return cfg


def bundled_path(name: str) -> Path:
    return Path(str(resources.files("aoisched") / "data" / f"{name}.json"))


def load_config(path) -> ExperimentConfig:
    """Read a JSON config; ``paper`` (or a missing ``paper.json``) selects the bundled setup."""
    p = Path(path)
    if not p.exists() and p.stem in BUNDLED and p.parent == Path("."):
        p = bundled_path(p.stem)
    try:
        raw = json.loads(p.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{p}: invalid JSON ({exc})") from exc
    return from_dict(raw)
