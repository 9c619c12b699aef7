"""Zipf popularity matrices under identical and independent preferences."""

import numpy as np

from .rng import numpy_generator

IDENTICAL = "identical"
INDEPENDENT = "independent"
MODES = (IDENTICAL, INDEPENDENT)


def zipf_pmf(ranks, beta):
    """Request probabilities for files with the given popularity ranks.

    ``ranks`` is a permutation of 1..M; entry j of the result is
    ``ranks[j] ** -beta / sum_k k ** -beta``.
    """
    ranks = np.asarray(ranks)
    m = ranks.size
    if ranks.ndim != 1 or not np.array_equal(np.sort(ranks), np.arange(1, m + 1)):
        raise ValueError("ranks must be a permutation of 1..M")
    if beta < 0:
        raise ValueError("beta must be non-negative")
    weights = np.arange(1, m + 1, dtype=float) ** -float(beta)
    return weights[ranks - 1] / weights.sum()


def gen_ranks(mode, n, m, rng_seed):
    """N x M rank matrix; identical rows or independent uniform permutations."""
    if mode not in MODES:
        raise ValueError(f"mode must be one of {MODES}")
    rng = numpy_generator(rng_seed, 0x504F50)
    if mode == IDENTICAL:
        row = rng.permutation(m) + 1
        return np.tile(row, (n, 1))
    return np.stack([rng.permutation(m) + 1 for _ in range(n)])


def gen_popularity(mode, beta, n, m, rng_seed):
    ranks = gen_ranks(mode, n, m, rng_seed)
    # one pmf per distinct row keeps identical-mode rows bit-equal
    return np.stack([zipf_pmf(r, beta) for r in ranks])
