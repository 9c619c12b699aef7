"""Cache re-planning across update cycles with a replacement budget.

In cycle ``kappa`` the greedy loop runs from empty caches on that cycle's
parameters.  User ``i`` may end with at most ``xi[i]`` files that were not
in its previous cache, i.e. a Hamming distance of at most ``2 * xi[i]`` to
its previous row.  Once a user has used its whole budget it may only pick
files it already held.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from .greedy import Plan, run_greedy
from .model import check_caching, check_popularity, check_weights


@dataclass(frozen=True)
class CycleParams:
    kappa: int
    omega: np.ndarray
    p: np.ndarray
    t_avg: np.ndarray
    xi: np.ndarray
    prev_phi: np.ndarray
    tau: float = 1.0


def replacements_used(phi, prev_phi):
    """Per-user count of cached files that were absent in ``prev_phi``."""
    return ((np.asarray(phi) == 1) & (np.asarray(prev_phi) == 0)).sum(axis=1)


def cache_distance(phi, prev_phi):
    """Per-user Hamming distance between two placements."""
    return np.abs(np.asarray(phi, dtype=int) - np.asarray(prev_phi, dtype=int)).sum(axis=1)


def plan_cycle(params: CycleParams, mu, backend=None) -> Plan:
    omega = check_weights(params.omega)
    p = check_popularity(params.p)
    prev = check_caching(params.prev_phi, mu, full=True)
    xi = np.asarray(params.xi)
    if xi.shape != (p.shape[0],):
        raise ValueError("xi must have one entry per user")
    if np.any(xi < 0):
        raise ValueError("replacement budgets must be non-negative")
    if np.any(xi > mu):
        raise ValueError("replacement budgets cannot exceed the cache size")
    xi = xi.astype(np.int64)

    # Budget check uses the Hamming distance the row will have once full:
    # 2 * (new files), so "exhausted" means new files == xi.
    def restrict(phi, counts, allowed):
        spent = replacements_used(phi, prev) >= xi
        allowed[spent] = prev[spent]

    return run_greedy(omega, p, params.t_avg, mu, restrict=restrict, backend=backend)


def replay_provider(cycles: Sequence[dict]) -> Iterator[dict]:
    """Default parameter provider: hands out ground-truth per-cycle values.

    Each item carries ``omega``, ``p``, ``t_avg`` and ``xi`` (and optionally
    ``tau``) for one cycle; estimation of these quantities is left to the
    caller.
    """
    yield from cycles


def run_cycles(initial_phi, provider, mu, backend=None):
    """Plan consecutive cycles; returns a list of ``(CycleParams, Plan)``."""
    prev = check_caching(initial_phi, mu, full=True)
    out = []
    for kappa, item in enumerate(provider, start=1):
        params = CycleParams(kappa=kappa, omega=np.asarray(item["omega"]),
                             p=np.asarray(item["p"]), t_avg=np.asarray(item["t_avg"]),
                             xi=np.asarray(item["xi"]), prev_phi=prev,
                             tau=item.get("tau", 1.0))
        plan = plan_cycle(params, mu, backend=backend)
        out.append((params, plan))
        prev = plan.phi
    return out


def write_cycle_csv(fh, results):
    """One row per (cycle, user): replacements used and the cycle's eta."""
    fh.write("kappa,user,replacements_used,eta\n")
    for params, plan in results:
        used = replacements_used(plan.phi, params.prev_phi)
        for i, u in enumerate(used):
            fh.write(f"{params.kappa},{i},{int(u)},{plan.eta!r}\n")
