"""Reference placements: most-popular caching and exhaustive search."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .model import weighted_delay
from .sources import build_source_tables

DEFAULT_BUDGET = 10_000_000


class BudgetExceeded(RuntimeError):
    def __init__(self, count, budget):
        self.count = count
        self.budget = budget
        super().__init__(f"exhaustive search needs {count} combinations, budget is {budget}")


def naive_plan(p, mu):
    """Each user caches its ``mu`` most requested files (ties: lower index)."""
    p = np.asarray(p, dtype=float)
    if not 0 <= mu <= p.shape[1]:
        raise ValueError("cache size must satisfy 0 <= mu <= M")
    phi = np.zeros(p.shape, dtype=np.uint8)
    for i, row in enumerate(p):
        phi[i, np.argsort(-row, kind="stable")[:mu]] = 1
    return phi


def combination_count(n, m, mu) -> int:
    """Number of feasible placements, ``C(M, mu) ** N``."""
    return math.comb(m, mu) ** n


@dataclass
class ExhaustiveResult:
    phi: np.ndarray
    eta: float
    n_combinations: int
    etas: Optional[np.ndarray] = None

    def write_csv(self, fh):
        if self.etas is None:
            raise ValueError("per-combination etas were not recorded")
        fh.write("combination,eta\n")
        for c, eta in enumerate(self.etas):
            fh.write(f"{c},{float(eta)!r}\n")


def subset_masks(m, mu):
    """All ``mu``-subsets of ``range(m)`` as rows of a 0/1 matrix, in
    ``itertools.combinations`` order."""
    combos = list(itertools.combinations(range(m), mu))
    masks = np.zeros((len(combos), m), dtype=np.uint8)
    for r, c in enumerate(combos):
        masks[r, list(c)] = 1
    return masks


def decode_combination(index, masks, n):
    phi = np.zeros((n, masks.shape[1]), dtype=np.uint8)
    for i in range(n - 1, -1, -1):
        index, r = divmod(index, masks.shape[0])
        phi[i] = masks[r]
    return phi


def exhaustive_plan(omega, p, t_avg, mu, budget=DEFAULT_BUDGET, record=False,
                    backend=None) -> ExhaustiveResult:
    """Globally optimal placement by enumerating every per-user subset.

    Combinations are visited with user 0 as the most significant digit and
    subsets in ``itertools.combinations`` order; the first minimiser wins.
    """
    impl = kernels if backend is None else kernels.get_backend(backend)
    omega = np.ascontiguousarray(omega, dtype=np.float64)
    p = np.ascontiguousarray(p, dtype=np.float64)
    t_avg = np.ascontiguousarray(t_avg, dtype=np.float64)
    n, m = p.shape
    if not 0 <= mu <= m:
        raise ValueError("cache size must satisfy 0 <= mu <= M")
    count = combination_count(n, m, mu)
    if count > budget:
        raise BudgetExceeded(count, budget)
    masks = subset_masks(m, mu)
    etas = np.empty(count) if record else None
    best_c, _ = impl.exhaustive(masks, omega, p, t_avg, etas)
    phi = decode_combination(best_c, masks, n)
    eta = weighted_delay(omega, p, build_source_tables(t_avg, phi).d)
    return ExhaustiveResult(phi=phi, eta=eta, n_combinations=count, etas=etas)
