# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops.  ``_fallback.py`` mirrors every function here."""

import numpy as np
cimport numpy as cnp
from libc.math cimport log, log2, INFINITY
from libc.stdint cimport uint64_t, int64_t

cnp.import_array()

cdef uint64_t GAMMA = 0x9E3779B97F4A7C15ULL
cdef double UNIT53 = 1.0 / 9007199254740992.0


cdef inline uint64_t _splitmix(uint64_t x) nogil:
    cdef uint64_t z = x + GAMMA
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL
    return z ^ (z >> 31)


cdef inline double _uniform(uint64_t key, uint64_t sample, uint64_t block) nogil:
    cdef uint64_t ctr = ((sample & 0xFFFFFFFFULL) << 32) | (block & 0xFFFFFFFFULL)
    cdef uint64_t bits = _splitmix(key ^ _splitmix(ctr))
    return <double>((bits >> 11) + 1) * UNIT53


def sample_blocks(uint64_t key, Py_ssize_t n_samples, double snr, double scale,
                  double need, double mean_gain, bint fixed, int64_t cap):
    """Blocks needed per sample; capped samples are reported as -1."""
    out = np.empty(n_samples, dtype=np.int64)
    cdef int64_t[::1] blocks = out
    cdef Py_ssize_t s
    cdef int64_t t
    cdef double acc, z
    cdef Py_ssize_t n_capped = 0
    with nogil:
        for s in range(n_samples):
            acc = 0.0
            t = 0
            while True:
                if t >= cap:
                    t = -1
                    n_capped += 1
                    break
                if fixed:
                    z = mean_gain
                else:
                    z = -mean_gain * log(_uniform(key, s, t))
                acc += scale * log2(1.0 + snr * z)
                t += 1
                if acc >= need:
                    break
            blocks[s] = t
    return out, n_capped


def greedy_scan(const unsigned char[:, ::1] phi, const int64_t[::1] counts,
                const unsigned char[:, ::1] allowed, const double[::1] omega,
                const double[:, ::1] p, const double[:, ::1] d,
                const double[:, ::1] t_avg, int64_t mu):
    """Best (user, file) pair by delay improvement, row-major first maximum."""
    cdef Py_ssize_t n = p.shape[0], m = p.shape[1]
    cdef Py_ssize_t i, j, k
    cdef Py_ssize_t bi = -1, bj = -1
    cdef double g, bg = -1.0, tik
    cdef int64_t evals = 0
    with nogil:
        for i in range(n):
            if counts[i] >= mu:
                continue
            for j in range(m):
                if phi[i, j] or not allowed[i, j]:
                    continue
                evals += 1
                g = omega[i] * p[i, j] * d[i, j]
                for k in range(n):
                    if k == i:
                        continue
                    tik = t_avg[k, i]
                    if d[k, j] > tik:
                        g += omega[k] * p[k, j] * (d[k, j] - tik)
                if g > bg:
                    bg = g
                    bi = i
                    bj = j
    return bi, bj, bg, evals


def exhaustive(const unsigned char[:, ::1] subsets, const double[::1] omega,
               const double[:, ::1] p, const double[:, ::1] t_avg,
               double[::1] etas_out=None):
    """Minimum eta over all per-user subset combinations (first minimiser)."""
    cdef Py_ssize_t n = p.shape[0], m = p.shape[1], n_sub = subsets.shape[0]
    cdef Py_ssize_t i, j, k, q, c, total = 1
    for i in range(n):
        total *= n_sub
    # helpers of each receiver that beat its downlink, fastest first; the
    # first one holding a file gives the minimum
    cdef Py_ssize_t[:, ::1] order = np.zeros((n, max(n, 1)), dtype=np.intp)
    cdef Py_ssize_t[::1] n_help = np.zeros(n, dtype=np.intp)
    for i in range(n):
        for k in np.argsort(np.asarray(t_avg[i]), kind="stable"):
            if k != i and t_avg[i, k] < t_avg[i, i]:
                order[i, n_help[i]] = k
                n_help[i] += 1
    cdef Py_ssize_t[::1] idx = np.zeros(n, dtype=np.intp)
    cdef Py_ssize_t best_c = -1
    cdef double best = INFINITY, eta, row, dij
    cdef bint record = etas_out is not None
    with nogil:
        for c in range(total):
            eta = 0.0
            for i in range(n):
                row = 0.0
                for j in range(m):
                    if subsets[idx[i], j]:
                        dij = 0.0
                    else:
                        dij = t_avg[i, i]
                        for q in range(n_help[i]):
                            k = order[i, q]
                            if subsets[idx[k], j]:
                                dij = t_avg[i, k]
                                break
                    row += p[i, j] * dij
                eta += omega[i] * row
            if record:
                etas_out[c] = eta
            if eta < best:
                best = eta
                best_c = c
            # odometer, last user fastest
            i = n - 1
            while i >= 0:
                idx[i] += 1
                if idx[i] < n_sub:
                    break
                idx[i] = 0
                i -= 1
    return best_c, best
