import itertools

import numpy as np
import pytest

from d2dcache import kernels


@pytest.fixture
def instance_w():
    """Two users, two files, one slot each; BS links cost 10, D2D costs 2."""
    return dict(
        omega=np.array([0.5, 0.5]),
        p=np.array([[0.8, 0.2], [0.6, 0.4]]),
        t_avg=np.array([[10.0, 2.0], [2.0, 10.0]]),
        mu=1,
    )


def random_instance(rng, n, m, mu=None, integer_delays=False):
    """Random weights, row-stochastic popularity and a symmetric delay table."""
    omega = rng.random(n)
    omega /= omega.sum()
    p = rng.random((n, m)) ** 3
    p /= p.sum(axis=1, keepdims=True)
    if integer_delays:
        t = rng.integers(1, 6, size=(n, n)).astype(float)
    else:
        t = 1.0 + 5.0 * rng.random((n, n))
    t = np.triu(t) + np.triu(t, 1).T
    if mu is None:
        mu = int(rng.integers(0, m + 1))
    return dict(omega=omega, p=p, t_avg=t, mu=mu)


def brute_force_d(t_avg, phi):
    """Best delays by listing every holder of every file."""
    n, m = phi.shape
    d = np.empty((n, m))
    for i, j in itertools.product(range(n), range(m)):
        if phi[i, j]:
            d[i, j] = 0.0
            continue
        options = [t_avg[i, i]] + [t_avg[i, k] for k in range(n) if k != i and phi[k, j]]
        d[i, j] = min(options)
    return d


def eta_from_scratch(omega, p, t_avg, phi):
    d = brute_force_d(t_avg, phi)
    return sum(omega[i] * sum(p[i, j] * d[i, j] for j in range(p.shape[1]))
               for i in range(p.shape[0]))


BACKENDS = ["python"] + (["cython"] if kernels.BACKEND == "cython" else [])


def eta_exact(omega, p, t_avg, phi):
    """eta in exact rational arithmetic from the float inputs."""
    from fractions import Fraction

    d = brute_force_d(t_avg, phi)
    n, m = p.shape
    return sum(Fraction(omega[i]) * sum(Fraction(p[i, j]) * Fraction(d[i, j]) for j in range(m))
               for i in range(n))


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
