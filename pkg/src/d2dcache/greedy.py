"""Greedy delay-aware cache placement.

Starting from empty caches, each iteration adds the (user, file) pair with
the largest reduction of the weighted delay, until every cache holds
``mu`` files.  The best-source table and best-delay matrix are maintained
incrementally; a full rebuild with :func:`sources.build_source_tables`
always yields the same tables.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import kernels
from .model import check_popularity, check_weights, user_node, weighted_delay
from .sources import initial_tables


class PlanningComplete(RuntimeError):
    """No user has spare cache capacity (or no admissible candidate is left)."""


@dataclass
class ImprovementResult:
    gain: float
    updated_s: np.ndarray
    updated_d: np.ndarray


@dataclass(frozen=True)
class PlanStep:
    iteration: int
    user: int
    file: int
    gain: float
    eta: float


@dataclass
class PlanTrace:
    """Chosen pairs in order, with eta after each step.

    ``candidate_evaluations`` counts gain evaluations of uncached pairs in
    rows that still had room; already-cached pairs short-circuit and are
    not counted.
    """

    eta_initial: float
    steps: List[PlanStep] = field(default_factory=list)
    candidate_evaluations: int = 0

    @property
    def eta_final(self) -> float:
        return self.steps[-1].eta if self.steps else self.eta_initial

    def write_csv(self, fh):
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["iteration", "user", "file", "gain", "eta"])
        for st in self.steps:
            writer.writerow([st.iteration, st.user, st.file, repr(st.gain), repr(st.eta)])

    def write_jsonl(self, fh):
        for st in self.steps:
            fh.write(json.dumps({"iteration": st.iteration, "user": st.user,
                                 "file": st.file, "gain": st.gain, "eta": st.eta}) + "\n")


@dataclass
class Plan:
    phi: np.ndarray
    s: np.ndarray
    d: np.ndarray
    trace: PlanTrace

    @property
    def eta(self) -> float:
        return self.trace.eta_final


def delay_improvement(i, j, phi, omega, p, s, t_avg, d) -> ImprovementResult:
    """Reduction of eta from caching file ``j`` at user ``i``, with the tables
    that would result.  Inputs are left untouched."""
    s_hat = np.array(s, copy=True)
    d_hat = np.array(d, dtype=float, copy=True)
    if phi[i, j]:
        return ImprovementResult(0.0, s_hat, d_hat)
    me = user_node(i)
    g = omega[i] * p[i, j] * d[i, j]
    s_hat[i, j] = me
    d_hat[i, j] = 0.0
    for k in range(len(omega)):
        if k == i:
            continue
        tki = t_avg[k, i]
        if d[k, j] > tki:
            g += omega[k] * p[k, j] * (d[k, j] - tki)
            d_hat[k, j] = tki
            s_hat[k, j] = me
        elif d[k, j] == tki and s[k, j] > me:
            # equal delay: lowest user index serves, as in a full rebuild
            s_hat[k, j] = me
    return ImprovementResult(float(g), s_hat, d_hat)


def _commit(i, j, phi, counts, s, d, t_avg):
    """In-place version of the table update in :func:`delay_improvement`."""
    me = user_node(i)
    col = d[:, j]
    tcol = t_avg[:, i]
    better = col > tcol
    tie = (col == tcol) & (s[:, j] > me)
    better[i] = tie[i] = False
    d[better, j] = tcol[better]
    s[better | tie, j] = me
    d[i, j] = 0.0
    s[i, j] = me
    phi[i, j] = 1
    counts[i] += 1


def _as_kernel_inputs(omega, p, t_avg):
    return (np.ascontiguousarray(omega, dtype=np.float64),
            np.ascontiguousarray(p, dtype=np.float64),
            np.ascontiguousarray(t_avg, dtype=np.float64))


def best_pair(phi, omega, p, s, t_avg, d, mu, allowed=None, backend=None):
    """One greedy step on copies of the inputs.

    Returns ``(i, j, gain, phi, s, d, n_evaluated)`` with the winner
    committed.  Ties go to the first maximiser in row-major order.
    """
    impl = kernels if backend is None else kernels.get_backend(backend)
    omega, p, t_avg = _as_kernel_inputs(omega, p, t_avg)
    phi = np.array(phi, dtype=np.uint8, order="C")
    s = np.array(s, dtype=np.int64, order="C")
    d = np.array(d, dtype=np.float64, order="C")
    counts = phi.sum(axis=1).astype(np.int64)
    if allowed is None:
        allowed = np.ones_like(phi)
    allowed = np.ascontiguousarray(allowed, dtype=np.uint8)
    if not np.any(counts < mu):
        raise PlanningComplete("every cache is full")
    i, j, g, evals = impl.greedy_scan(phi, counts, allowed, omega, p, d, t_avg, mu)
    if i < 0:
        raise PlanningComplete("no admissible (user, file) pair left")
    _commit(i, j, phi, counts, s, d, t_avg)
    return i, j, g, phi, s, d, evals


def run_greedy(omega, p, t_avg, mu, restrict: Optional[Callable] = None,
               backend=None) -> Plan:
    """The placement loop shared by :func:`plan_cache` and cycle planning.

    ``restrict(phi, counts, allowed)`` may narrow the ``allowed`` mask in
    place; it is called before the first iteration and after every commit.
    """
    impl = kernels if backend is None else kernels.get_backend(backend)
    omega, p, t_avg = _as_kernel_inputs(omega, p, t_avg)
    n, m = p.shape
    if t_avg.shape != (n, n) or omega.shape != (n,):
        raise ValueError("dimension mismatch between omega, P and t_avg")
    if not 0 <= mu <= m:
        raise ValueError("cache size must satisfy 0 <= mu <= M")
    tables = initial_tables(t_avg, m)
    s, d = tables.s.copy(), tables.d.copy()
    phi = np.zeros((n, m), dtype=np.uint8)
    counts = np.zeros(n, dtype=np.int64)
    allowed = np.ones((n, m), dtype=np.uint8)
    trace = PlanTrace(eta_initial=weighted_delay(omega, p, d))
    eta = trace.eta_initial
    if restrict is not None:
        restrict(phi, counts, allowed)
    for it in range(1, n * mu + 1):
        i, j, g, evals = impl.greedy_scan(phi, counts, allowed, omega, p, d, t_avg, mu)
        if i < 0:
            raise PlanningComplete(f"no admissible pair at iteration {it}")
        trace.candidate_evaluations += evals
        _commit(i, j, phi, counts, s, d, t_avg)
        eta -= g
        trace.steps.append(PlanStep(it, int(i), int(j), float(g), eta))
        if restrict is not None:
            restrict(phi, counts, allowed)
    return Plan(phi=phi, s=s, d=d, trace=trace)


def plan_cache(omega, p, t_avg, mu, backend=None) -> Plan:
    """Fill every cache with ``mu`` files by repeated best-pair selection."""
    check_weights(omega)
    check_popularity(p)
    return run_greedy(omega, p, t_avg, mu, backend=backend)


def candidate_count(n, m, mu) -> int:
    """Size of the greedy search space if every iteration skipped only the
    pairs chosen before it: ``N^2 M mu - (N^2 mu^2 - N mu) / 2``."""
    if mu > m:
        raise ValueError("mu must not exceed M")
    steps = n * mu
    return n * n * m * mu - steps * (steps - 1) // 2
