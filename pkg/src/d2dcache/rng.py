"""Seed mixing and counter-based uniforms.

Every random quantity in the package is derived from a 64-bit master seed
through SplitMix64 mixing.  Fading draws are *counter based*: the uniform
for (sample ``s``, block ``k``) of a link stream ``key`` is a pure function
of ``(key, s, k)``.  That lets the scalar compiled kernel and the vectorised
numpy fallback consume the very same numbers in different orders.
"""

import numpy as np

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

# 2**-53
UNIT53 = 1.0 / 9007199254740992.0


def splitmix64(x):
    """One SplitMix64 step: advance ``x`` by the golden gamma and finalise."""
    z = (int(x) + GOLDEN_GAMMA) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def mix(seed, *parts):
    """Derive a substream key from a seed and any number of integer labels.

    ``mix(seed, i, j)`` is the key of link (i, j); ``mix(seed, a, b)`` the
    seed of sweep point ``a`` instance ``b`` and so on.  Labels are reduced
    modulo 2**64, so negative labels are allowed but discouraged.
    """
    h = splitmix64(int(seed) & MASK64)
    for p in parts:
        h = splitmix64(h ^ (int(p) & MASK64))
    return h


def counter_bits(key, sample, block):
    """64 random bits for draw ``(sample, block)`` of stream ``key``."""
    ctr = ((int(sample) & 0xFFFFFFFF) << 32) | (int(block) & 0xFFFFFFFF)
    return splitmix64(int(key) ^ splitmix64(ctr))


def counter_uniform(key, sample, block):
    """Uniform draw on (0, 1] for ``(sample, block)``; never exactly zero."""
    return ((counter_bits(key, sample, block) >> 11) + 1) * UNIT53


def _splitmix64_array(x):
    z = x + np.uint64(GOLDEN_GAMMA)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    return z ^ (z >> np.uint64(31))


def counter_uniform_array(key, samples, block):
    """Vectorised :func:`counter_uniform` over an array of sample indices."""
    samples = np.asarray(samples, dtype=np.uint64)
    ctr = ((samples & np.uint64(0xFFFFFFFF)) << np.uint64(32)) | np.uint64(
        int(block) & 0xFFFFFFFF
    )
    with np.errstate(over="ignore"):
        bits = _splitmix64_array(np.uint64(int(key) & MASK64) ^ _splitmix64_array(ctr))
    return ((bits >> np.uint64(11)) + np.uint64(1)).astype(np.float64) * UNIT53


def numpy_generator(seed, *parts):
    """A numpy ``Generator`` seeded from :func:`mix`, for non-kernel draws."""
    return np.random.Generator(np.random.PCG64(mix(seed, *parts)))
