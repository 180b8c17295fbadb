"""LTI control loops, AoI-dependent error penalty, and the estimation-error process."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .errors import InitializationError, ModelValidationError, PenaltyOverflowError


def _as_matrix(value, name):
    arr = np.atleast_2d(np.asarray(value, dtype=np.float64))
    if arr.ndim != 2:
        raise ModelValidationError(f"{name} must be a matrix, got shape {arr.shape}")
    return arr


@dataclass(frozen=True, eq=False)
class LoopModel:
    """One sub-system ``x' = A x + B u + w`` with ``w ~ N(0, Sigma)`` and ``u = -L xhat``.

    Scalars are promoted to 1x1 matrices. ``p`` is the per-transmission
    success probability of the loop's sensor link.
    """

    A: np.ndarray
    B: np.ndarray
    Sigma: np.ndarray
    L: np.ndarray
    p: float
    name: str = ""

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        Sigma = _as_matrix(self.Sigma, "Sigma")
        L = _as_matrix(self.L, "L")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ModelValidationError(f"A must be square, got {A.shape}")
        if B.shape[0] != n:
            raise ModelValidationError(f"B has {B.shape[0]} rows, expected {n}")
        m = B.shape[1]
        if L.shape != (m, n):
            raise ModelValidationError(f"L must be {m}x{n}, got {L.shape}")
        if Sigma.shape != (n, n):
            raise ModelValidationError(f"Sigma must be {n}x{n}, got {Sigma.shape}")
        if not np.allclose(Sigma, Sigma.T, rtol=0, atol=1e-12 * max(1.0, np.abs(Sigma).max())):
            raise ModelValidationError("Sigma must be symmetric")
        if np.any(np.diag(Sigma) < 0) or np.linalg.eigvalsh(Sigma).min() < -1e-10 * max(1.0, np.abs(Sigma).max()):
            raise ModelValidationError("Sigma must be positive semi-definite")
        if n > 1 and np.count_nonzero(Sigma - np.diag(np.diag(Sigma))):
            warnings.warn("non-diagonal noise covariance; penalty formula still applies", stacklevel=3)
        p = float(self.p)
        if not 0.0 < p <= 1.0:
            raise ModelValidationError(f"success probability must lie in (0, 1], got {p}")
        for arr in (A, B, Sigma, L):
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "B", B)
        object.__setattr__(self, "Sigma", Sigma)
        object.__setattr__(self, "L", L)
        object.__setattr__(self, "p", p)

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.B.shape[1]

    def noise_factor(self) -> np.ndarray:
        """F with ``F @ F.T == Sigma``; eigen-based so singular PSD covariances work."""
        vals, vecs = np.linalg.eigh(self.Sigma)
        return vecs * np.sqrt(np.clip(vals, 0.0, None))

    def to_dict(self) -> dict:
        def plain(a):
            return float(a[0, 0]) if a.shape == (1, 1) else a.tolist()

        return {"A": plain(self.A), "B": plain(self.B), "Sigma": plain(self.Sigma),
                "L": plain(self.L), "p": self.p, "name": self.name}


class PenaltyTable:
    """Mean-square estimation error ``g(delta)`` for ages ``1..len``.

    Indexing is 1-based in the age: ``table[1] == trace(Sigma)``.
    ``values`` exposes the underlying 0-based array.
    """

    def __init__(self, values):
        self.values = np.asarray(values, dtype=np.float64)
        self.values.setflags(write=False)

    def __len__(self):
        return len(self.values)

    def __getitem__(self, delta):
        if delta < 1 or delta > len(self.values):
            raise IndexError(f"age {delta} outside 1..{len(self.values)}")
        return float(self.values[delta - 1])

    def __repr__(self):
        return f"PenaltyTable({self.values.tolist()!r})"


def build_penalty_table(loop: LoopModel, M_max: int) -> PenaltyTable:
    """``g[d] = sum_{r<d} tr((A^T)^r A^r Sigma)``, accumulating ``P_r = (A^T)^r A^r``."""
    if M_max < 1:
        raise ValueError("M_max must be >= 1")
    A, Sigma = loop.A, loop.Sigma
    g = np.empty(M_max)
    P = np.eye(loop.n)
    total = 0.0
    with np.errstate(over="ignore", invalid="ignore"):
        for d in range(M_max):
            total = total + float(np.trace(P @ Sigma))
            if not np.isfinite(total):
                raise PenaltyOverflowError(loop.name or "<unnamed>", d + 1)
            g[d] = total
            P = A.T @ P @ A
    return PenaltyTable(g)


@dataclass(frozen=True)
class LoopSimState:
    """Per-loop simulation state.

    ``e`` and ``delta`` are always present. The full-state fields are only
    populated by :func:`initial_full_state` and kept consistent by
    :func:`step_full_state`: ``sample`` is the freshest delivered plant state
    and ``inputs`` the most recent control inputs, newest last.
    """

    e: np.ndarray
    delta: int = 1
    x: Optional[np.ndarray] = None
    xhat: Optional[np.ndarray] = None
    u: Optional[np.ndarray] = None
    sample: Optional[np.ndarray] = None
    inputs: tuple = field(default=(), repr=False)

    @property
    def full_state(self) -> bool:
        return self.x is not None


def initial_error_state(e0) -> LoopSimState:
    return LoopSimState(e=np.asarray(e0, dtype=np.float64).copy(), delta=1)


def step_error(state: LoopSimState, A, w, received: bool) -> LoopSimState:
    """Advance the error recursion one slot.

    A delivered packet carries the previous slot's sample, so the error
    collapses to that slot's disturbance; otherwise it propagates through A.
    """
    w = np.asarray(w, dtype=np.float64)
    if received:
        return replace(state, e=w.copy(), delta=1)
    A = np.atleast_2d(A)
    e = np.asarray(state.e, dtype=np.float64)
    if A.shape[1] != e.shape[0] or w.shape != e.shape:
        raise ModelValidationError("dimension mismatch in error update")
    return replace(state, e=A @ e + w, delta=state.delta + 1)


def initial_full_state(loop: LoopModel, x0) -> LoopSimState:
    """Plant at ``x0`` with an estimator that last saw ``x[-1] = 0`` under ``u[-1] = 0``.

    This gives ``xhat[0] = 0`` and therefore ``e[0] = x0`` with age 1.
    """
    x0 = np.asarray(x0, dtype=np.float64).reshape(loop.n)
    zero_x = np.zeros(loop.n)
    zero_u = np.zeros(loop.m)
    xhat = _estimate(loop, zero_x, (zero_u,), 1)
    return LoopSimState(e=x0 - xhat, delta=1, x=x0.copy(), xhat=xhat,
                        u=-loop.L @ xhat, sample=zero_x, inputs=(zero_u,))


def _estimate(loop, sample, inputs, delta):
    # xhat = A^delta sample + sum_{q=1}^{delta} A^{q-1} B u[t-q]
    if len(inputs) < delta:
        raise InitializationError(f"estimator needs {delta} past inputs, only {len(inputs)} stored")
    A, B = loop.A, loop.B
    acc = np.zeros(loop.n)
    Apow = np.eye(loop.n)
    for q in range(1, delta + 1):
        acc = acc + Apow @ (B @ inputs[-q])
        Apow = Apow @ A
    return Apow @ sample + acc


def step_full_state(state: LoopSimState, loop: LoopModel, w, received: bool) -> LoopSimState:
    """Advance plant, estimator and controller one slot (validation mode).

    ``received`` means the sample taken in the current slot is delivered at
    the start of the next one.
    """
    if not state.full_state:
        raise InitializationError("state was not initialised for full-state simulation")
    w = np.asarray(w, dtype=np.float64).reshape(loop.n)
    u = -loop.L @ state.xhat
    x_next = loop.A @ state.x + loop.B @ u + w
    if received:
        sample, delta = state.x, 1
    else:
        sample, delta = state.sample, state.delta + 1
    inputs = (state.inputs + (u,))[-delta:]
    xhat_next = _estimate(loop, sample, inputs, delta)
    return LoopSimState(e=x_next - xhat_next, delta=delta, x=x_next, xhat=xhat_next,
                        u=-loop.L @ xhat_next, sample=sample, inputs=inputs)
