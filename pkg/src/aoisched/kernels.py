"""Hot loops: Bellman sweeps over the dense state space and batched episode simulation.

Every kernel exists twice, ``*_nb`` (numba) and ``*_np`` (numpy). The public
names without suffix point at whichever twin :mod:`aoisched._accel` selected.
Both twins perform the same floating-point operations in the same order, so
their outputs agree bit-for-bit on scalar loops.
"""

import numpy as np

from ._accel import USE_NUMBA, njit, prange

SCHED_LOOKUP = 0
SCHED_GREEDY = 1
SCHED_ROUND_ROBIN = 2

STATUS_OK = 0
STATUS_TABLE_EXHAUSTED = 1

VI_BLOCK = 1 << 14


# --------------------------------------------------------------------------- value iteration


@njit
def _backup_range_nb(start, stop, J_in, J_out, policy, cost, gamma, N, M, strides,
                     out_masks, out_probs, out_counts, write_policy):
    digits = np.empty(N, np.int64)
    off = np.empty(N, np.int64)
    rem = start
    for i in range(N):
        digits[i] = rem % M
        rem //= M
    n_actions = out_counts.shape[0]
    res = 0.0
    for s in range(start, stop):
        aged = 0
        for i in range(N):
            d = digits[i] + 1
            if d >= M:
                d = M - 1
            off[i] = d * strides[i]
            aged += off[i]
        best = np.inf
        best_a = 0
        for a in range(n_actions):
            acc = 0.0
            for k in range(out_counts[a]):
                m = out_masks[a, k]
                idx = aged
                i = 0
                while m:
                    if m & 1:
                        idx -= off[i]
                    m >>= 1
                    i += 1
                acc += out_probs[a, k] * J_in[idx]
            q = cost[s] + gamma * acc
            if q < best:
                best = q
                best_a = a
        diff = abs(best - J_in[s])
        if diff > res:
            res = diff
        J_out[s] = best
        if write_policy:
            policy[s] = best_a
        i = 0
        while i < N:
            digits[i] += 1
            if digits[i] < M:
                break
            digits[i] = 0
            i += 1
    return res


@njit(parallel=True)
def _jacobi_sweep_nb(J_in, J_out, policy, cost, gamma, N, M, strides,
                     out_masks, out_probs, out_counts, write_policy):
    S = J_in.shape[0]
    nblocks = (S + VI_BLOCK - 1) // VI_BLOCK
    res = np.zeros(nblocks)
    for b in prange(nblocks):
        start = b * VI_BLOCK
        stop = min(S, start + VI_BLOCK)
        res[b] = _backup_range_nb(start, stop, J_in, J_out, policy, cost, gamma, N, M, strides,
                                  out_masks, out_probs, out_counts, write_policy)
    return res.max()


@njit
def _gauss_seidel_sweep_nb(J, policy, cost, gamma, N, M, strides,
                           out_masks, out_probs, out_counts, write_policy):
    return _backup_range_nb(0, J.shape[0], J, J, policy, cost, gamma, N, M, strides,
                            out_masks, out_probs, out_counts, write_policy)


# overflow surfaces as a non-finite residual, which the solver reports
@np.errstate(over="ignore", invalid="ignore")
def _jacobi_sweep_np(J_in, J_out, policy, cost, gamma, N, M, strides,
                     out_masks, out_probs, out_counts, write_policy, block=1 << 18):
    S = J_in.shape[0]
    n_actions = out_counts.shape[0]
    res = 0.0
    for start in range(0, S, block):
        stop = min(S, start + block)
        s = np.arange(start, stop, dtype=np.int64)
        digits = (s[None, :] // strides[:, None]) % M
        off = np.minimum(digits + 1, M - 1) * strides[:, None]
        aged = off.sum(axis=0)
        c = cost[start:stop]
        Q = np.empty((n_actions, stop - start))
        for a in range(n_actions):
            acc = np.zeros(stop - start)
            for k in range(out_counts[a]):
                idx = aged.copy()
                m = int(out_masks[a, k])
                for i in range(N):
                    if m >> i & 1:
                        idx -= off[i]
                acc = acc + out_probs[a, k] * J_in[idx]
            Q[a] = c + gamma * acc
        best_a = Q.argmin(axis=0)
        best = Q[best_a, np.arange(stop - start)]
        if stop > start:
            res = max(res, float(np.abs(best - J_in[start:stop]).max()))
        J_out[start:stop] = best
        if write_policy:
            policy[start:stop] = best_a
    return res


def _gauss_seidel_sweep_np(J, policy, cost, gamma, N, M, strides,
                           out_masks, out_probs, out_counts, write_policy):
    # In-place sweeps are inherently sequential; run the reference loop uncompiled.
    loop = getattr(_backup_range_nb, "py_func", _backup_range_nb)
    return loop(0, J.shape[0], J, J, policy, cost, gamma, N, M, strides,
                out_masks, out_probs, out_counts, write_policy)


# --------------------------------------------------------------------------- episodes


@njit(parallel=True)
def _simulate_nb(kind, R, p, table, masks, M, strides, ges, A, W, E0, U, delta0,
                 err_sum, aoi_sum, share_cnt, status):
    B, T, N, n = W.shape
    for b in prange(B):
        e = E0[b].copy()
        delta = delta0.copy()
        enew = np.empty(n)
        chosen = np.zeros(N, np.bool_)
        cursor = 0
        width = ges.shape[1]
        for t in range(T):
            mask = 0
            if kind == SCHED_LOOKUP:
                idx = 0
                for i in range(N):
                    d = delta[i] if delta[i] < M else M
                    idx += (d - 1) * strides[i]
                mask = masks[table[idx]]
            elif kind == SCHED_GREEDY:
                exhausted = False
                for i in range(N):
                    if delta[i] > width:
                        exhausted = True
                if exhausted:
                    status[b] = STATUS_TABLE_EXHAUSTED
                    break
                for i in range(N):
                    chosen[i] = False
                for r in range(min(R, N)):
                    bi = -1
                    bs = 0.0
                    for i in range(N):
                        if not chosen[i]:
                            sc = p[i] * ges[i, delta[i] - 1]
                            if bi < 0 or sc > bs:
                                bi = i
                                bs = sc
                    chosen[bi] = True
                    mask |= 1 << bi
            else:
                for r in range(min(R, N)):
                    mask |= 1 << ((cursor + r) % N)
                cursor = (cursor + R) % N
            for i in range(N):
                sq = 0.0
                for j in range(n):
                    sq += e[i, j] * e[i, j]
                err_sum[b, i] += sq
                aoi_sum[b, i] += delta[i]
                scheduled = (mask >> i) & 1
                if scheduled:
                    share_cnt[b, i] += 1
                if scheduled and U[b, t, i] < p[i]:
                    for j in range(n):
                        e[i, j] = W[b, t, i, j]
                    delta[i] = 1
                else:
                    for j in range(n):
                        acc = 0.0
                        for k in range(n):
                            acc += A[i, j, k] * e[i, k]
                        enew[j] = acc + W[b, t, i, j]
                    for j in range(n):
                        e[i, j] = enew[j]
                    delta[i] += 1


def _simulate_np(kind, R, p, table, masks, M, strides, ges, A, W, E0, U, delta0,
                 err_sum, aoi_sum, share_cnt, status):
    B, T, N, n = W.shape
    e = E0.copy()
    delta = np.tile(delta0, (B, 1))
    bits = np.int64(1) << np.arange(N, dtype=np.int64)
    rows = np.arange(N)
    width = ges.shape[1]
    k_sched = min(R, N)
    cursor = 0
    for t in range(T):
        if kind == SCHED_LOOKUP:
            idx = ((np.minimum(delta, M) - 1) * strides).sum(axis=1)
            mask = masks[table[idx]]
        elif kind == SCHED_GREEDY:
            over = (delta > width).any(axis=1)
            if over.any():
                status[over] = STATUS_TABLE_EXHAUSTED
                return
            scores = p * ges[rows, delta - 1]
            order = np.argsort(-scores, axis=1, kind="stable")[:, :k_sched]
            mask = np.bitwise_or.reduce(bits[order], axis=1)
        else:
            mask = np.int64(0)
            for r in range(k_sched):
                mask |= np.int64(1) << ((cursor + r) % N)
            cursor = (cursor + R) % N
            mask = np.full(B, mask)
        sched = (mask[:, None] & bits) != 0
        sq = np.zeros((B, N))
        for j in range(n):
            sq += e[:, :, j] * e[:, :, j]
        err_sum += sq
        aoi_sum += delta
        share_cnt += sched
        recv = sched & (U[:, t, :] < p)
        prop = np.empty_like(e)
        for j in range(n):
            acc = np.zeros((B, N))
            for k in range(n):
                acc += A[None, :, j, k] * e[:, :, k]
            prop[:, :, j] = acc + W[:, t, :, j]
        e = np.where(recv[:, :, None], W[:, t], prop)
        delta = np.where(recv, 1, delta + 1)


if USE_NUMBA:
    jacobi_sweep = _jacobi_sweep_nb
    gauss_seidel_sweep = _gauss_seidel_sweep_nb
    simulate_batch = _simulate_nb
else:
    jacobi_sweep = _jacobi_sweep_np
    gauss_seidel_sweep = _gauss_seidel_sweep_np
    simulate_batch = _simulate_np

DEFAULT_IMPL = "numba" if USE_NUMBA else "numpy"

IMPLEMENTATIONS = {
    "numba": {"jacobi": _jacobi_sweep_nb, "gauss_seidel": _gauss_seidel_sweep_nb,
              "simulate": _simulate_nb},
    "numpy": {"jacobi": _jacobi_sweep_np, "gauss_seidel": _gauss_seidel_sweep_np,
              "simulate": _simulate_np},
}
