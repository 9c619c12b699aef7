"""Command-line front end.

Every subcommand reads an optional ``key = value`` config file, then applies
``--set key=value`` overrides.  CSV goes to ``--out`` (default stdout); a
short summary goes to stdout, or to stderr when the CSV itself is on stdout.
Failures exit non-zero and print ``{"error": <category>, "message": ...}``
on stderr.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import os
import sys

import numpy as np

from . import kernels
from .baselines import BudgetExceeded, exhaustive_plan, naive_plan
from .channel import CappedSampleError, read_delay_csv, write_delay_csv
from .config import ConfigError, build_configs, build_experiment, parse_value, read_config_file
from .dynamic import replay_provider, run_cycles, write_cycle_csv
from .experiments import gen_topology, make_instance, run_sweep
from .greedy import PlanningComplete, plan_cache
from .model import throughput, weighted_delay
from .rng import mix
from .sources import build_source_tables

EXIT_CODES = {"config": 2, "budget": 3, "capped-sample": 4, "planning": 5, "io": 6,
              "internal": 1}


def _load_values(args) -> dict:
    values = read_config_file(args.config) if args.config else {}
    for item in args.set or []:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        values[key.strip()] = parse_value(key.strip(), raw)
    if args.seed is not None:
        values["seed"] = args.seed
    return values


@contextlib.contextmanager
def _output(path):
    if path is None or path == "-":
        yield sys.stdout
    else:
        with open(path, "w", newline="") as fh:
            yield fh


def _summary(args, text):
    stream = sys.stderr if args.out in (None, "-") else sys.stdout
    print(text, file=stream)


def _write_placement(fh, phi):
    m = phi.shape[1]
    fh.write("user," + ",".join(f"f{j}" for j in range(m)) + "\n")
    for i, row in enumerate(phi):
        fh.write(f"{i}," + ",".join(str(int(x)) for x in row) + "\n")


def _instance(args, values):
    cfg, rest = build_configs(values)
    seed = int(rest.get("seed", 0))
    mode = rest.get("mode", "independent")
    n_samples = int(rest.get("n_mc_samples", 2000))
    t_avg = None
    if getattr(args, "delays", None):
        t_avg, _ = read_delay_csv(args.delays)
        if t_avg.shape != (cfg.n_users, cfg.n_users):
            raise ConfigError(f"delay table is {t_avg.shape}, config has {cfg.n_users} users")
    inst = make_instance(cfg, seed, (mode,), n_samples, t_avg=t_avg)
    return cfg, inst, mode, seed


def cmd_topology(args):
    cfg, rest = build_configs(_load_values(args))
    topo = gen_topology(cfg, mix(int(rest.get("seed", 0)), 1))
    with _output(args.out) as fh:
        fh.write("node,x,y,dist_to_bs\n")
        bx, by = (float(v) for v in topo.bs_position)
        fh.write(f"0,{bx!r},{by!r},0.0\n")
        for i, (x, y) in enumerate(topo.user_positions):
            fh.write(f"{i + 1},{float(x)!r},{float(y)!r},{float(topo.dist_user_bs[i])!r}\n")
    _summary(args, f"{cfg.n_users} users in a cell of radius {cfg.cell_radius_m}")


def cmd_delays(args):
    values = _load_values(args)
    cfg, inst, _, seed = _instance(args, values)
    with _output(args.out) as fh:
        write_delay_csv(fh, inst.t_avg, seed, int(values.get("n_mc_samples", 2000)))
    bs = np.diag(inst.t_avg).mean()
    _summary(args, f"{cfg.n_users} users, mean base-station delay {bs:.4f} blocks")


def _report(cfg, inst, mode, phi):
    p = inst.popularity[mode]
    eta = weighted_delay(inst.omega, p, build_source_tables(inst.t_avg, phi).d)
    rate = throughput(eta, cfg) if eta > 0 else float("inf")
    return eta, f"eta = {eta:.6f} blocks, throughput = {rate:.6f} bits/block ({mode} popularity)"


def cmd_plan(args):
    values = _load_values(args)
    cfg, inst, mode, _ = _instance(args, values)
    plan = plan_cache(inst.omega, inst.popularity[mode], inst.t_avg, cfg.cache_size)
    with _output(args.out) as fh:
        plan.trace.write_csv(fh)
    if args.placement:
        with open(args.placement, "w") as fh:
            _write_placement(fh, plan.phi)
    if args.jsonl:
        with open(args.jsonl, "w") as fh:
            plan.trace.write_jsonl(fh)
    _, text = _report(cfg, inst, mode, plan.phi)
    _summary(args, f"greedy: {text}; {plan.trace.candidate_evaluations} candidate evaluations")


def cmd_naive(args):
    values = _load_values(args)
    cfg, inst, mode, _ = _instance(args, values)
    phi = naive_plan(inst.popularity[mode], cfg.cache_size)
    with _output(args.out) as fh:
        _write_placement(fh, phi)
    _summary(args, "naive: " + _report(cfg, inst, mode, phi)[1])


def cmd_oracle(args):
    values = _load_values(args)
    cfg, inst, mode, _ = _instance(args, values)
    res = exhaustive_plan(inst.omega, inst.popularity[mode], inst.t_avg, cfg.cache_size,
                          budget=args.budget, record=bool(args.etas))
    with _output(args.out) as fh:
        _write_placement(fh, res.phi)
    if args.etas:
        with open(args.etas, "w") as fh:
            res.write_csv(fh)
    _summary(args, f"oracle over {res.n_combinations} combinations: "
                   + _report(cfg, inst, mode, res.phi)[1])


def cmd_cycle(args):
    values = _load_values(args)
    cfg, inst, mode, seed = _instance(args, values)
    xi = np.full(cfg.n_users, int(values.get("xi", max(cfg.cache_size // 2, 0))))
    n_samples = int(values.get("n_mc_samples", 2000))
    first = plan_cache(inst.omega, inst.popularity[mode], inst.t_avg, cfg.cache_size)
    cycles = []
    for kappa in range(1, args.cycles + 1):
        # ground truth of the next cycle: same users, fresh preferences and fading
        nxt = make_instance(cfg, mix(seed, 0xC1C1E, kappa), (mode,), n_samples)
        cycles.append({"omega": inst.omega, "p": nxt.popularity[mode],
                       "t_avg": nxt.t_avg, "xi": xi})
    results = run_cycles(first.phi, replay_provider(cycles), cfg.cache_size)
    with _output(args.out) as fh:
        write_cycle_csv(fh, results)
    _summary(args, "; ".join(f"cycle {p.kappa}: eta = {pl.eta:.6f}" for p, pl in results))


def cmd_sweep(args):
    values = _load_values(args)
    if "seed" in values:
        values["master_seed"] = values.pop("seed")
    spec = build_experiment(values)
    with _output(args.out) as fh:
        rows, _ = run_sweep(spec, fh, n_jobs=args.jobs)
    lines = [f"{r['axis']!s:>6} {r['algorithm']:>6} {r['mode']:>11} "
             f"eta={r['mean_eta']:.4f} +- {r['std_err_eta']:.4f}" for r in rows]
    _summary(args, f"sweep over {spec.sweep_axis} ({kernels.BACKEND} kernels)\n" + "\n".join(lines))


def _count(text):
    """Integer count, also accepting forms like ``1e6``."""
    value = float(text)
    if not value.is_integer() or value < 0:
        raise argparse.ArgumentTypeError(f"not a non-negative integer: {text!r}")
    return int(value)


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("-c", "--config", help="key = value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override a config key (repeatable)")
    common.add_argument("--seed", type=int, help="master seed")
    common.add_argument("-o", "--out", help="CSV output path (default stdout)")

    parser = argparse.ArgumentParser(prog="d2dcache", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("topology", parents=[common], help="random user positions").set_defaults(
        func=cmd_topology)
    sub.add_parser("delays", parents=[common], help="Monte Carlo expected link delays"
                   ).set_defaults(func=cmd_delays)

    p = sub.add_parser("plan", parents=[common], help="greedy placement and its trace")
    p.add_argument("--delays", help="reuse a delay table written by 'delays'")
    p.add_argument("--placement", help="also write the placement matrix here")
    p.add_argument("--jsonl", help="also write the trace as JSON lines here")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("naive", parents=[common], help="most-popular placement")
    p.add_argument("--delays")
    p.set_defaults(func=cmd_naive)

    p = sub.add_parser("oracle", parents=[common], help="exhaustive optimal placement")
    p.add_argument("--delays")
    p.add_argument("--budget", type=_count, default=10_000_000)
    p.add_argument("--etas", help="write (combination, eta) for every combination")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("cycle", parents=[common], help="re-plan under replacement budgets")
    p.add_argument("--delays")
    p.add_argument("--cycles", type=int, default=1)
    p.set_defaults(func=cmd_cycle)

    p = sub.add_parser("sweep", parents=[common], help="averaged delay versus one parameter")
    p.add_argument("--jobs", type=int, default=1, help="threads for delay estimation")
    p.set_defaults(func=cmd_sweep)
    return parser


def _fail(category, exc):
    print(json.dumps({"error": category, "message": str(exc)}), file=sys.stderr)
    return EXIT_CODES[category]


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        return _fail("config", exc)
    except BudgetExceeded as exc:
        return _fail("budget", exc)
    except CappedSampleError as exc:
        return _fail("capped-sample", exc)
    except PlanningComplete as exc:
        return _fail("planning", exc)
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        return 1
    except OSError as exc:
        return _fail("io", exc)
    except ValueError as exc:
        return _fail("config", exc)
    return 0


if __name__ == "__main__":
    sys.exit(main())
