"""Shared domain types, the weighted-delay objective and throughput.

Conventions used throughout the package:

* users and files are 0-based array indices;
* source tables hold *node identifiers*: ``BS = 0`` is the base station and
  user ``i`` is node ``i + 1``;
* ``t_avg[r, t]`` is the expected number of blocks for transmitter ``t`` to
  deliver a file to receiver ``r``; the diagonal ``t_avg[i, i]`` is the
  base-station downlink of user ``i``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

BS = 0


def user_node(i: int) -> int:
    return i + 1


@dataclass(frozen=True)
class Topology:
    user_positions: np.ndarray
    bs_position: np.ndarray
    dist_user_user: np.ndarray
    dist_user_bs: np.ndarray

    @classmethod
    def from_positions(cls, user_positions, bs_position=(0.0, 0.0)) -> "Topology":
        pos = np.atleast_2d(np.asarray(user_positions, dtype=float))
        bs = np.asarray(bs_position, dtype=float)
        diff = pos[:, None, :] - pos[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        to_bs = np.hypot(pos[:, 0] - bs[0], pos[:, 1] - bs[1])
        for a in (pos, bs, dist, to_bs):
            a.setflags(write=False)
        return cls(pos, bs, dist, to_bs)

    @property
    def n_users(self) -> int:
        return self.user_positions.shape[0]


@dataclass(frozen=True)
class DelayTables:
    """Expected link delays with the derived best-source table and delays."""

    t_avg: np.ndarray
    d: np.ndarray
    s: np.ndarray


def check_popularity(p, atol=1e-12) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    if p.ndim != 2:
        raise ValueError("popularity matrix must be 2-D")
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("popularity entries must lie in [0, 1]")
    if np.any(np.abs(p.sum(axis=1) - 1.0) > atol):
        raise ValueError("popularity rows must sum to 1")
    return p


def check_weights(omega) -> np.ndarray:
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1 or np.any(omega < 0) or np.any(omega > 1):
        raise ValueError("weights must be a vector with entries in [0, 1]")
    return omega


def check_caching(phi, mu=None, full=False) -> np.ndarray:
    phi = np.asarray(phi)
    if phi.ndim != 2 or not np.isin(phi, (0, 1)).all():
        raise ValueError("caching state must be a binary matrix")
    phi = phi.astype(np.uint8)
    if mu is not None:
        rows = phi.sum(axis=1)
        if np.any(rows > mu) or (full and np.any(rows != mu)):
            raise ValueError(f"cache rows must hold {'exactly' if full else 'at most'} {mu} files")
    return phi


def user_avg_delay(i: int, p, d) -> float:
    """Average delay of the requests of user ``i`` (popularity-weighted D row)."""
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if not 0 <= i < p.shape[0]:
        raise IndexError(f"user index {i} out of range")
    return float(np.dot(p[i], d[i]))


def weighted_delay(omega, p, d) -> float:
    """Weighted sum over users of their average request delay (eta)."""
    omega = np.asarray(omega, dtype=float)
    p = np.asarray(p, dtype=float)
    d = np.asarray(d, dtype=float)
    if p.shape != d.shape or omega.shape != (p.shape[0],):
        raise ValueError(f"shape mismatch: omega {omega.shape}, P {p.shape}, D {d.shape}")
    return float(np.dot(omega, np.einsum("ij,ij->i", p, d)))


def throughput(eta: float, cfg) -> float:
    """System throughput ``N_c * F / eta`` in bits per block."""
    if not eta > 0:
        raise ValueError("throughput is undefined for eta <= 0")
    return cfg.n_channels * cfg.file_size_bits / eta
