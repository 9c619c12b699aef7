"""Exit criteria for the package; each test reports one PASS/FAIL line.

The lines are printed in the pytest terminal summary (see conftest) and also
directly when running with ``-s``.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from d2dcache.baselines import exhaustive_plan
from d2dcache.channel import FIXED, LinkParams, estimate_avg_delay
from d2dcache.cli import main as cli_main
from d2dcache.config import SystemConfig
from d2dcache.dynamic import CycleParams, cache_distance, plan_cycle
from d2dcache.experiments import make_instance, run_point
from d2dcache.greedy import candidate_count, delay_improvement, plan_cache
from d2dcache.model import weighted_delay
from d2dcache.popularity import gen_popularity
from d2dcache.rng import mix
from d2dcache.sources import build_source_tables

from conftest import eta_exact, random_instance

RESULTS = []


def report(name, ok, detail):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}: {detail}"
    RESULTS.append(line)
    print(line)
    assert ok, line


def _eta(omega, p, t_avg, phi):
    return weighted_delay(omega, p, build_source_tables(t_avg, phi).d)


# 1 ---------------------------------------------------------------------------

def test_01_oracle_agreement():
    cfg = SystemConfig(n_users=4, n_files=6, cache_size=2)
    start = time.perf_counter()
    exact, gaps = 0, []
    for b in range(100):
        mode = "identical" if b % 2 == 0 else "independent"
        inst = make_instance(cfg, mix(2024, b), (mode,), 2000)
        p = inst.popularity[mode]
        g_eta = _eta(inst.omega, p, inst.t_avg, plan_cache(inst.omega, p, inst.t_avg, 2).phi)
        opt = exhaustive_plan(inst.omega, p, inst.t_avg, 2)
        gap = (g_eta - opt.eta) / opt.eta
        gaps.append(gap)
        exact += gap <= 1e-12
    elapsed = time.perf_counter() - start
    mean_gap = float(np.mean(gaps))
    ok = exact >= 70 and mean_gap <= 0.05 and elapsed <= 300 and min(gaps) >= -1e-12
    report("1 oracle agreement", ok,
           f"greedy optimal on {exact}/100 (>=70), mean gap {mean_gap:.2e} (<=5e-2), "
           f"{elapsed:.1f}s (<=300s)")


# 2 ---------------------------------------------------------------------------

def test_02_greedy_speed():
    small = make_instance(SystemConfig(n_users=5, n_files=10, cache_size=2), 1, ("independent",))
    t0 = time.perf_counter()
    plan_cache(small.omega, small.popularity["independent"], small.t_avg, 2)
    t_small = time.perf_counter() - t0
    big = make_instance(SystemConfig(n_users=25, n_files=100, cache_size=30), 2, ("independent",))
    t0 = time.perf_counter()
    plan_cache(big.omega, big.popularity["independent"], big.t_avg, 30)
    t_big = time.perf_counter() - t0
    report("2 greedy speed", t_small < 1 and t_big < 60,
           f"5/10/2 in {t_small * 1e3:.2f} ms (<1 s), 25/100/30 in {t_big:.3f} s (<60 s)")


# 3 ---------------------------------------------------------------------------

def _closed_form(n, m, mu):
    return Fraction(n * n * m * mu) - Fraction(n * n * mu * mu, 2) + Fraction(n * mu, 2)


def test_03_complexity_counter():
    rng = np.random.default_rng(3)
    triples = [(1, 7, 3), (1, 12, 5)]
    while len(triples) < 20:
        m = int(rng.integers(1, 15))
        triples.append((int(rng.integers(1, 8)), m, int(rng.integers(0, m + 1))))
    failures = []
    for n, m, mu in triples:
        cc = candidate_count(n, m, mu)
        if cc != _closed_form(n, m, mu):
            failures.append(("formula", n, m, mu))
        inst = random_instance(rng, n, m, mu=mu)
        trace = plan_cache(**inst).trace
        counts = np.zeros(n, int)
        fill_iters = []
        for st in trace.steps:
            counts[st.user] += 1
            if counts[st.user] == mu:
                fill_iters.append(st.iteration)
        no_early_fill = all(it == n * mu for it in fill_iters)
        if trace.candidate_evaluations > cc:
            failures.append(("bound", n, m, mu))
        if no_early_fill and trace.candidate_evaluations != cc:
            failures.append(("equality", n, m, mu))
    report("3 complexity counter", not failures,
           f"{len(triples)} triples, closed form exact, counter <= bound; failures={failures}")


# 4 ---------------------------------------------------------------------------

def test_04_bookkeeping_identity():
    rng = np.random.default_rng(4)
    worst, mismatched = 0.0, 0
    for k in range(50):
        n, m = int(rng.integers(1, 11)), int(rng.integers(1, 21))
        inst = random_instance(rng, n, m, integer_delays=bool(k % 2))
        plan = plan_cache(**inst)
        tab = build_source_tables(inst["t_avg"], plan.phi)
        eta = weighted_delay(inst["omega"], inst["p"], tab.d)
        booked = plan.trace.eta_initial - sum(st.gain for st in plan.trace.steps)
        scale = max(abs(eta), plan.trace.eta_initial * 1e-300)
        worst = max(worst, abs(booked - eta) / scale if eta else abs(booked))
        mismatched += not (np.array_equal(plan.s, tab.s) and np.array_equal(plan.d, tab.d))
    report("4 bookkeeping identity", worst <= 1e-9 and mismatched == 0,
           f"max relative error {worst:.2e} (<=1e-9), incremental != rebuild on {mismatched}/50")


# 5 ---------------------------------------------------------------------------

def test_05_gain_oracle():
    rng = np.random.default_rng(5)
    worst = 0.0
    for k in range(200):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 9))
        inst = random_instance(rng, n, m, integer_delays=bool(k % 3 == 0))
        phi = (rng.random((n, m)) < 0.3).astype(np.uint8)
        tab = build_source_tables(inst["t_avg"], phi)
        i, j = int(rng.integers(n)), int(rng.integers(m))
        g = delay_improvement(i, j, phi, inst["omega"], inst["p"], tab.s, inst["t_avg"], tab.d).gain
        after = phi.copy()
        after[i, j] = 1
        ref = eta_exact(inst["omega"], inst["p"], inst["t_avg"], phi) - \
            eta_exact(inst["omega"], inst["p"], inst["t_avg"], after)
        err = abs(Fraction(g) - ref)
        rel = float(err / abs(ref)) if ref else float(err)
        worst = max(worst, rel)
    report("5 gain oracle", worst <= 1e-12,
           f"200 probes, max relative deviation from exact eta difference {worst:.2e} (<=1e-12)")


# 6 & 7 -----------------------------------------------------------------------

DESK = SystemConfig(n_users=10, n_files=30, cache_size=6)
SWEEPS = {
    "beta": ("zipf_beta", [0.0, 0.4, 0.8, 1.2]),
    "mu": ("cache_size", [0, 2, 4, 8]),
    "n_users": ("n_users", [4, 8, 12]),
}
MODES = ("identical", "independent")


@pytest.fixture(scope="module")
def sweeps():
    out = {}
    for axis, (field, values) in SWEEPS.items():
        out[axis] = [
            run_point(DESK.replace(**{field: v}), MODES, ("greedy", "naive"), 50,
                      seed=mix(6, len(axis)), axis_index=a)
            for a, v in enumerate(values)
        ]
    return out


def _pooled(point_a, point_b, alg, mode):
    return math.hypot(point_a.std_err_eta(alg, mode), point_b.std_err_eta(alg, mode))


def test_06_trend_reproduction(sweeps):
    problems, notes = [], []
    for axis, points in sweeps.items():
        for mode in MODES:
            means = [pt.mean_eta("greedy", mode) for pt in points]
            notes.append(f"{axis}/{mode}: " + ",".join(f"{x:.3f}" for x in means))
            for a, b in zip(points, points[1:]):
                if b.mean_eta("greedy", mode) > a.mean_eta("greedy", mode) + 3 * _pooled(a, b, "greedy", mode):
                    problems.append((axis, mode))
    naive_n = sweeps["n_users"]
    for x in range(len(naive_n)):
        for y in range(x + 1, len(naive_n)):
            a, b = naive_n[x], naive_n[y]
            diff = abs(a.mean_eta("naive", "identical") - b.mean_eta("naive", "identical"))
            if diff >= 3 * _pooled(a, b, "naive", "identical"):
                problems.append(("naive-identical-vs-N", x, y))
    flat = ",".join(f"{p.mean_eta('naive', 'identical'):.3f}" for p in naive_n)
    report("6 trend reproduction", not problems,
           "greedy eta " + "; ".join(notes) + f"; naive-identical over N: {flat}; "
           f"violations={problems}")


def test_07_dominance(sweeps):
    n_points = n_ok = n_inst = n_inst_ok = 0
    for points in sweeps.values():
        for pt in points:
            for mode in MODES:
                g, nv = pt.etas["greedy", mode], pt.etas["naive", mode]
                n_points += 1
                n_ok += g.mean() <= nv.mean()
                n_inst += g.size
                n_inst_ok += int(np.sum(g <= nv))
    frac_pts, frac_inst = n_ok / n_points, n_inst_ok / n_inst
    report("7 dominance", frac_pts >= 0.95 and frac_inst >= 0.90,
           f"mean greedy <= naive at {n_ok}/{n_points} points ({frac_pts:.1%}, >=95%), "
           f"per instance {frac_inst:.1%} (>=90%)")


# 8 ---------------------------------------------------------------------------

def test_08_zipf_correctness():
    worst = 0.0
    for mode in MODES:
        for beta in (0.0, 0.3, 1.0, 2.5):
            p = gen_popularity(mode, beta, 20, 50, 8)
            worst = max(worst, float(np.abs(p.sum(axis=1) - 1).max()))
    uniform = np.all(gen_popularity("independent", 0.0, 3, 7, 1) == 1 / 7)
    tops = [gen_popularity("identical", b, 1, 30, 2).max() for b in (0, 0.5, 1, 2)]
    monotone = all(a <= b for a, b in zip(tops, tops[1:]))
    report("8 zipf correctness", worst <= 1e-12 and uniform and monotone,
           f"max row-sum error {worst:.1e}, beta=0 uniform {uniform}, "
           f"rank-1 probability {['%.4f' % t for t in tops]}")


# 9 ---------------------------------------------------------------------------

def test_09_dynamic_constraint():
    rng = np.random.default_rng(9)
    violations = zero_bad = full_bad = 0
    for _ in range(50):
        n, m = int(rng.integers(1, 7)), int(rng.integers(2, 12))
        mu = int(rng.integers(1, m + 1))
        prev = plan_cache(**random_instance(rng, n, m, mu=mu)).phi
        inst = random_instance(rng, n, m, mu=mu)

        def cycle(xi):
            return plan_cycle(CycleParams(1, inst["omega"], inst["p"], inst["t_avg"],
                                          np.asarray(xi), prev), mu).phi

        xi = rng.integers(0, mu + 1, size=n)
        violations += int(np.any(cache_distance(cycle(xi), prev) > 2 * xi))
        zero_bad += not np.array_equal(cycle(np.zeros(n, int)), prev)
        full_bad += not np.array_equal(cycle(np.full(n, mu)), plan_cache(**inst).phi)
    report("9 dynamic constraint", violations == zero_bad == full_bad == 0,
           f"50 scenarios: budget violations {violations}, xi=0 mismatches {zero_bad}, "
           f"xi=mu mismatches {full_bad}")


# 10 --------------------------------------------------------------------------

def test_10_monte_carlo_sanity():
    f = 11.3
    got = {}
    for k in (1, 3, 7):
        # unit SNR and unit gain give C = 1 bit/s, so T0 = F/k gives T0*C = F/k
        link = LinkParams(tx_power_linear=1.0, distance_m=1.0, file_size_bits=f,
                          block_duration_s=f / k, fading=FIXED)
        est = estimate_avg_delay(link, 1000, rng_seed=k)
        got[k] = (est.mean_blocks, est.std_error)
    exact = all(got[k] == (float(k), 0.0) for k in got)
    link = LinkParams(tx_power_linear=10 ** 2.0, distance_m=1.0, file_size_bits=f)
    a = estimate_avg_delay(link, 10_000, rng_seed=101)
    b = estimate_avg_delay(link, 10_000, rng_seed=202)
    agree = abs(a.mean_blocks - b.mean_blocks) <= 3 * math.hypot(a.std_error, b.std_error)
    report("10 monte carlo sanity", exact and agree,
           f"fixed channel {got}; Rayleigh means {a.mean_blocks:.4f} vs {b.mean_blocks:.4f} "
           f"(3 se = {3 * math.hypot(a.std_error, b.std_error):.4f})")


# 11 --------------------------------------------------------------------------

def test_11_cli_determinism(tmp_path, capsys):
    cfg = tmp_path / "c.cfg"
    cfg.write_text("profile = desk\nn_users = 4\nn_files = 6\ncache_size = 2\n"
                   "n_mc_samples = 400\nsweep_axis = beta\naxis_values = 0, 1\n"
                   "n_instances = 2\nxi = 1\n")
    commands = ["topology", "delays", "plan", "naive", "oracle", "cycle", "sweep"]
    differing = []
    for cmd in commands:
        outs = []
        for k in range(2):
            out = tmp_path / f"{cmd}{k}.csv"
            code = cli_main([cmd, "-c", str(cfg), "--seed", "31", "-o", str(out)])
            outs.append((code, out.read_bytes()))
        if outs[0] != outs[1] or outs[0][0] != 0:
            differing.append(cmd)
    capsys.readouterr()
    report("11 cli determinism", not differing,
           f"{len(commands)} subcommands byte-identical on repeat; differing={differing}")
