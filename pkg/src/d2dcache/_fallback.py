"""Pure numpy implementations of the compiled kernels.

Each function returns exactly what its ``_core`` counterpart returns.  The
greedy scan and the exhaustive search accumulate their sums in the same
order as the compiled loops, so both backends agree bit for bit; the block
sampler may differ in the last ulp of ``log`` and therefore only agrees at
statistical tolerance (block counts almost always coincide).
"""

import numpy as np

from .rng import counter_uniform_array


def sample_blocks(key, n_samples, snr, scale, need, mean_gain, fixed, cap):
    blocks = np.full(n_samples, -1, dtype=np.int64)
    acc = np.zeros(n_samples)
    active = np.arange(n_samples)
    t = 0
    while active.size and t < cap:
        if fixed:
            z = np.full(active.size, mean_gain)
        else:
            z = -mean_gain * np.log(counter_uniform_array(key, active, t))
        acc[active] += scale * np.log2(1.0 + snr * z)
        t += 1
        done = acc[active] >= need
        blocks[active[done]] = t
        active = active[~done]
    return blocks, int(active.size)


def greedy_scan(phi, counts, allowed, omega, p, d, t_avg, mu):
    n, m = p.shape
    cand = (phi == 0) & (allowed != 0) & (counts < mu)[:, None]
    evals = int(cand.sum())
    if evals == 0:
        return -1, -1, -1.0, 0
    g = omega[:, None] * p * d
    for k in range(n):
        tk = t_avg[k, :][:, None]  # t_avg[k, i] down rows i
        gain_k = (omega[k] * p[k, :])[None, :] * (d[k, :][None, :] - tk)
        mask = d[k, :][None, :] > tk
        mask[k, :] = False
        g = g + np.where(mask, gain_k, 0.0)
    g = np.where(cand, g, -np.inf)
    flat = int(np.argmax(g))
    i, j = divmod(flat, m)
    return i, j, float(g[i, j]), evals


def _chunk_etas(holds, omega, p, t_avg):
    """eta for a block of combinations; ``holds`` is (chunk, N, M) bool."""
    n, m = p.shape
    eta = np.zeros(holds.shape[0])
    for i in range(n):
        row = np.zeros(holds.shape[0])
        for j in range(m):
            dij = np.full(holds.shape[0], t_avg[i, i])
            for k in range(n):
                if k != i:
                    better = holds[:, k, j] & (t_avg[i, k] < dij)
                    dij = np.where(better, t_avg[i, k], dij)
            dij = np.where(holds[:, i, j], 0.0, dij)
            row = row + p[i, j] * dij
        eta = eta + omega[i] * row
    return eta


def exhaustive(subsets, omega, p, t_avg, etas_out=None, chunk=65536):
    n = p.shape[0]
    n_sub = subsets.shape[0]
    total = n_sub ** n
    radix = n_sub ** np.arange(n - 1, -1, -1, dtype=np.int64)
    best_c, best = -1, np.inf
    for start in range(0, total, chunk):
        c = np.arange(start, min(start + chunk, total), dtype=np.int64)
        idx = (c[:, None] // radix[None, :]) % n_sub
        holds = subsets[idx].astype(bool)
        eta = _chunk_etas(holds, omega, p, t_avg)
        if etas_out is not None:
            etas_out[start:start + eta.size] = eta
        k = int(np.argmin(eta))
        if eta[k] < best:
            best, best_c = float(eta[k]), start + k
    return best_c, best
