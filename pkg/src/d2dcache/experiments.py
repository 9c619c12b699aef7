"""Randomised systems and averaged delay sweeps."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Dict, Tuple

import numpy as np

from .baselines import BudgetExceeded, combination_count, exhaustive_plan, naive_plan
from .channel import build_delay_table
from .config import ExperimentSpec, SystemConfig
from .greedy import plan_cache
from .model import Topology, throughput, weighted_delay
from .popularity import gen_popularity
from .rng import mix, numpy_generator
from .sources import build_source_tables

CSV_COLUMNS = ["axis", "algorithm", "mode", "mean_eta", "std_err_eta",
               "mean_throughput", "n_instances", "seed"]


def gen_topology(cfg: SystemConfig, rng_seed) -> Topology:
    """Users uniform over the disk of radius ``cell_radius_m``, BS at origin."""
    rng = numpy_generator(rng_seed, 0x544F50)
    u = rng.random(cfg.n_users)
    theta = 2.0 * np.pi * rng.random(cfg.n_users)
    r = cfg.cell_radius_m * np.sqrt(u)
    pos = np.column_stack([r * np.cos(theta), r * np.sin(theta)])
    return Topology.from_positions(pos, (0.0, 0.0))


@dataclass
class Instance:
    cfg: SystemConfig
    topology: Topology
    t_avg: np.ndarray
    popularity: Dict[str, np.ndarray]
    omega: np.ndarray


def make_instance(cfg, seed, modes=("identical", "independent"), n_mc_samples=2000,
                  n_jobs=1, t_avg=None) -> Instance:
    """Topology, delay table and one popularity matrix per mode.

    The modes share topology and delays so that they differ only in
    preferences.  A precomputed ``t_avg`` skips delay estimation.
    """
    topo = gen_topology(cfg, mix(seed, 1))
    if t_avg is None:
        t_avg = build_delay_table(topo, cfg, n_mc_samples, mix(seed, 2), n_jobs=n_jobs)
    pops = {mode: gen_popularity(mode, cfg.zipf_beta, cfg.n_users, cfg.n_files, mix(seed, 3))
            for mode in modes}
    return Instance(cfg, topo, t_avg, pops, cfg.alloc_probs)


def solve(algorithm, instance: Instance, mode, oracle_budget=10_000_000):
    """Placement of one algorithm on one instance; returns ``(phi, eta)``."""
    cfg = instance.cfg
    p = instance.popularity[mode]
    mu = cfg.cache_size
    if algorithm == "greedy":
        phi = plan_cache(instance.omega, p, instance.t_avg, mu).phi
    elif algorithm == "naive":
        phi = naive_plan(p, mu)
    elif algorithm == "oracle":
        phi = exhaustive_plan(instance.omega, p, instance.t_avg, mu, budget=oracle_budget).phi
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    d = build_source_tables(instance.t_avg, phi).d
    return phi, weighted_delay(instance.omega, p, d)


@dataclass
class PointResult:
    """Per-instance eta for every (algorithm, mode) that was run."""

    cfg: SystemConfig
    seed: int
    etas: Dict[Tuple[str, str], np.ndarray] = field(default_factory=dict)

    def mean_eta(self, algorithm, mode) -> float:
        return float(np.mean(self.etas[algorithm, mode]))

    def std_err_eta(self, algorithm, mode) -> float:
        e = self.etas[algorithm, mode]
        return float(np.std(e, ddof=1) / math.sqrt(e.size)) if e.size > 1 else 0.0

    def mean_throughput(self, algorithm, mode) -> float:
        vals = [throughput(e, self.cfg) if e > 0 else math.inf
                for e in self.etas[algorithm, mode]]
        return float(np.mean(vals))


def run_point(cfg, modes, algorithms, n_instances, seed, axis_index=0,
              n_mc_samples=2000, oracle_budget=10_000_000, n_jobs=1) -> PointResult:
    """Average the algorithms over ``n_instances`` random systems.

    Instance ``b`` of sweep point ``a`` is seeded with ``mix(seed, a, b)``.
    Instances are summed in index order, so results are reproducible.
    """
    result = PointResult(cfg=cfg, seed=int(seed))
    algorithms = list(algorithms)
    if "oracle" in algorithms:
        count = combination_count(cfg.n_users, cfg.n_files, cfg.cache_size)
        if count > oracle_budget:
            warnings.warn(f"oracle skipped: {count} combinations exceed budget {oracle_budget}")
            algorithms.remove("oracle")
    collected = {(a, m): [] for a in algorithms for m in modes}
    for b in range(n_instances):
        inst = make_instance(cfg, mix(seed, axis_index, b), modes, n_mc_samples, n_jobs)
        for mode in modes:
            for alg in algorithms:
                try:
                    _, eta = solve(alg, inst, mode, oracle_budget)
                except BudgetExceeded as exc:  # pragma: no cover - guarded above
                    warnings.warn(str(exc))
                    continue
                collected[alg, mode].append(eta)
    result.etas = {k: np.array(v) for k, v in collected.items() if v}
    return result


def _fmt(x):
    return repr(float(x)) if isinstance(x, (float, np.floating)) else str(x)


def run_sweep(spec: ExperimentSpec, out=None, n_jobs=1):
    """Run every axis value of ``spec``; one CSV row per (value, algorithm, mode).

    Rows are written to ``out`` (a text file object) as each point finishes.
    Returns ``(rows, point_results)``.
    """
    writer = None
    if out is not None:
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
    rows, points = [], []
    for a, value in enumerate(spec.axis_values):
        cfg = spec.config_at(value)
        point = run_point(cfg, spec.popularity_modes, spec.algorithms, spec.n_instances,
                          spec.master_seed, axis_index=a, n_mc_samples=spec.n_mc_samples,
                          oracle_budget=spec.oracle_budget, n_jobs=n_jobs)
        points.append(point)
        for alg in spec.algorithms:
            for mode in spec.popularity_modes:
                if (alg, mode) not in point.etas:
                    continue
                row = {
                    "axis": value,
                    "algorithm": alg,
                    "mode": mode,
                    "mean_eta": point.mean_eta(alg, mode),
                    "std_err_eta": point.std_err_eta(alg, mode),
                    "mean_throughput": point.mean_throughput(alg, mode),
                    "n_instances": int(point.etas[alg, mode].size),
                    "seed": int(spec.master_seed),
                }
                rows.append(row)
                if writer is not None:
                    writer.writerow([_fmt(row[c]) for c in CSV_COLUMNS])
        if out is not None:
            out.flush()
    return rows, points
