"""Rayleigh block fading and expected file-transfer delays.

A file of ``F`` bits is delivered after the smallest number of blocks ``t``
whose accumulated ``T0 * C[k]`` reaches ``F``.  The per-block power gain is
exponential with mean ``d ** -alpha`` and is redrawn independently in every
block.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import kernels
from .rng import mix

RAYLEIGH = "rayleigh"
FIXED = "fixed"

# Relative slack on the delivery test so that T0*C = F/k gives exactly k
# blocks despite rounding in the accumulated sum.
DELIVERY_RTOL = 1e-12


class CappedSampleError(RuntimeError):
    """A delay sample exceeded ``max_blocks_cap`` blocks."""

    def __init__(self, n_capped, n_samples, cap, link=None):
        self.n_capped = n_capped
        self.n_samples = n_samples
        self.cap = cap
        self.link = link
        super().__init__(
            f"{n_capped} of {n_samples} delay samples exceeded {cap} blocks"
            + (f" (link {link})" if link is not None else "")
        )


@dataclass(frozen=True)
class LinkParams:
    tx_power_linear: float
    distance_m: float
    bandwidth_hz: float = 1.0
    noise_power: float = 1.0
    block_duration_s: float = 1.0
    file_size_bits: float = 11.3
    pathloss_exponent: float = 4.0
    fading: str = RAYLEIGH

    def __post_init__(self):
        for name in ("tx_power_linear", "distance_m", "bandwidth_hz", "noise_power",
                     "block_duration_s", "file_size_bits"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        if self.fading not in (RAYLEIGH, FIXED):
            raise ValueError(f"fading must be {RAYLEIGH!r} or {FIXED!r}")

    @property
    def mean_gain(self) -> float:
        return self.distance_m ** -self.pathloss_exponent

    @property
    def snr_scale(self) -> float:
        """P_t / (B sigma^2): multiplies the fading gain inside the log."""
        return self.tx_power_linear / (self.bandwidth_hz * self.noise_power)


@dataclass(frozen=True)
class DelayEstimate:
    mean_blocks: float
    std_error: float
    n_samples: int


def fading_from_uniform(u, mean):
    """Inverse-CDF exponential draw ``-mean * ln(1 - u)``."""
    return -mean * np.log1p(-np.asarray(u, dtype=float))


def sample_fading(distance_m, pathloss_exponent, rng, size=None):
    """Exponential power gain with mean ``distance ** -exponent``."""
    if not distance_m > 0:
        raise ValueError("distance must be positive")
    return fading_from_uniform(rng.random(size), distance_m ** -pathloss_exponent)


def block_capacity(link: LinkParams, z):
    """Instantaneous capacity ``B log2(1 + P_t z / (B sigma^2))`` in bits/s."""
    return link.bandwidth_hz * np.log2(1.0 + link.snr_scale * np.asarray(z, dtype=float))


def sample_transmission_blocks(link: LinkParams, rng, cap=1_000_000) -> int:
    """One delay draw, block by block, using a numpy ``Generator``.

    This scalar path is independent of the counter-based kernels used by
    :func:`estimate_avg_delay` and serves as their cross-check.
    """
    need = link.file_size_bits * (1.0 - DELIVERY_RTOL)
    sent = 0.0
    for t in range(1, cap + 1):
        if link.fading == FIXED:
            z = link.mean_gain
        else:
            z = -link.mean_gain * math.log1p(-rng.random())
        sent += link.block_duration_s * float(block_capacity(link, z))
        if sent >= need:
            return t
    raise CappedSampleError(1, 1, cap)


def sample_blocks(link: LinkParams, n_samples, key, cap=1_000_000, backend=None):
    """Raw block counts from the kernel stream ``key``; -1 marks capped draws."""
    impl = kernels if backend is None else kernels.get_backend(backend)
    return impl.sample_blocks(
        int(key),
        int(n_samples),
        link.snr_scale,
        link.block_duration_s * link.bandwidth_hz,
        link.file_size_bits * (1.0 - DELIVERY_RTOL),
        link.mean_gain,
        link.fading == FIXED,
        int(cap),
    )


def estimate_avg_delay(link: LinkParams, n_samples, rng_seed, cap=1_000_000,
                       backend=None) -> DelayEstimate:
    """Monte Carlo mean delay (in blocks) of ``n_samples`` i.i.d. transfers."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    blocks, n_capped = sample_blocks(link, n_samples, mix(rng_seed), cap, backend)
    if n_capped:
        raise CappedSampleError(n_capped, n_samples, cap)
    mean = float(blocks.mean())
    se = float(blocks.std(ddof=1) / math.sqrt(n_samples)) if n_samples > 1 else 0.0
    return DelayEstimate(mean, se, int(n_samples))


def _link(cfg, power, distance):
    return LinkParams(
        tx_power_linear=power,
        distance_m=distance,
        bandwidth_hz=cfg.bandwidth_hz,
        noise_power=cfg.noise_power,
        block_duration_s=cfg.block_duration_s,
        file_size_bits=cfg.file_size_bits,
        pathloss_exponent=cfg.pathloss_exponent,
    )


def build_delay_table(topology, cfg, n_samples, rng_seed, n_jobs=1,
                      return_errors=False, backend=None):
    """N x N expected-delay table ``t_avg[receiver, transmitter]``.

    The diagonal holds base-station downlinks.  With a shared user power each
    unordered pair is estimated once and mirrored; with per-user powers both
    directions are estimated and the table is generally asymmetric.  Entry
    (i, j) always uses the substream ``mix(rng_seed, i, j)``, so results do
    not depend on ``n_jobs``.
    """
    n = topology.n_users
    if n != cfg.n_users:
        raise ValueError(f"topology has {n} users, config expects {cfg.n_users}")
    powers = cfg.user_powers_linear()
    symmetric = cfg.uniform_user_power
    jobs = []
    for r in range(n):
        jobs.append((r, r, _link(cfg, cfg.bs_power_linear, topology.dist_user_bs[r])))
        for t in range(n):
            if t == r or (symmetric and t < r):
                continue
            jobs.append((r, t, _link(cfg, powers[t], topology.dist_user_user[r, t])))

    def run(job):
        r, t, link = job
        try:
            return estimate_avg_delay(link, n_samples, mix(rng_seed, r, t),
                                      cfg.max_blocks_cap, backend)
        except CappedSampleError as exc:
            exc.link = (r, t)
            raise

    if n_jobs == 1:
        results = [run(j) for j in jobs]
    else:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(run, jobs))

    t_avg = np.zeros((n, n))
    se = np.zeros((n, n))
    for (r, t, _), est in zip(jobs, results):
        t_avg[r, t] = est.mean_blocks
        se[r, t] = est.std_error
        if symmetric:
            t_avg[t, r] = est.mean_blocks
            se[t, r] = est.std_error
    return (t_avg, se) if return_errors else t_avg


def write_delay_csv(dest, t_avg, seed, n_samples):
    """Row-major CSV of ``t_avg`` with a one-line ``#`` metadata header.

    ``dest`` is a path or an open text file.
    """
    t_avg = np.asarray(t_avg, dtype=float)
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w") as fh:
            return write_delay_csv(fh, t_avg, seed, n_samples)
    dest.write(f"# n_users={t_avg.shape[0]},seed={int(seed)},n_samples={int(n_samples)}\n")
    for row in t_avg:
        dest.write(",".join(repr(float(x)) for x in row) + "\n")


def read_delay_csv(path):
    """Inverse of :func:`write_delay_csv`; returns ``(t_avg, metadata)``."""
    with open(path) as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError(f"{path}: missing metadata header")
        meta = {}
        for item in header[1:].strip().split(","):
            key, _, value = item.partition("=")
            meta[key.strip()] = int(value)
        rows = [[float(x) for x in line.split(",")] for line in fh if line.strip()]
    t_avg = np.array(rows, dtype=float).reshape(len(rows), -1)
    if t_avg.shape != (meta["n_users"], meta["n_users"]):
        raise ValueError(f"{path}: table shape {t_avg.shape} disagrees with header")
    return t_avg, meta
