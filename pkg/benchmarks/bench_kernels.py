"""Compare the compiled and numpy kernel backends.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Prints the best wall time per kernel and backend, the speedup, and whether the
two backends produced the same result.
"""

import argparse
import time

import numpy as np

from d2dcache import kernels
from d2dcache.baselines import exhaustive_plan
from d2dcache.channel import LinkParams, sample_blocks
from d2dcache.config import SystemConfig
from d2dcache.experiments import make_instance
from d2dcache.greedy import plan_cache


def best_time(fn, repeat):
    out, best = None, float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    link = LinkParams(tx_power_linear=100.0, distance_m=1.0, file_size_bits=11.3)
    big = make_instance(SystemConfig(n_users=25, n_files=100, cache_size=30), 1, ("independent",))
    small = make_instance(SystemConfig(n_users=4, n_files=6, cache_size=2), 2, ("independent",))

    def blocks(b):
        return sample_blocks(link, 200_000, key=7, backend=b)[0]

    def greedy(b):
        return plan_cache(big.omega, big.popularity["independent"], big.t_avg, 30, backend=b).phi

    def oracle(b):
        return exhaustive_plan(small.omega, small.popularity["independent"], small.t_avg, 2,
                               backend=b).phi

    return {
        "sample_blocks (2e5 samples)": (blocks, lambda a, b: np.mean(a == b)),
        "greedy plan (25/100/30)": (greedy, lambda a, b: float(np.array_equal(a, b))),
        "exhaustive (4/6/2, 15^4)": (oracle, lambda a, b: float(np.array_equal(a, b))),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)
    backends = ["python"]
    try:
        kernels.get_backend("cython")
        backends.insert(0, "cython")
    except ImportError:
        print("compiled kernels not built; timing the numpy fallback only")

    print(f"{'kernel':30s} " + " ".join(f"{b:>10s}" for b in backends) + "   speedup  agree")
    for name, (fn, agree) in cases().items():
        times, outs = [], []
        for b in backends:
            t, out = best_time(lambda: fn(b), args.repeat)
            times.append(t)
            outs.append(out)
        cols = " ".join(f"{t * 1e3:8.2f}ms" for t in times)
        if len(backends) == 2:
            print(f"{name:30s} {cols} {times[1] / times[0]:8.1f}x  {agree(*outs):.4f}")
        else:
            print(f"{name:30s} {cols}")


if __name__ == "__main__":
    main()
