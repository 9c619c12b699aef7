"""Best-source selection: who serves each (user, file) request, and how fast."""

import numpy as np

from .model import BS, DelayTables, user_node


def best_source(i, j, t_avg, phi):
    """``(node, delay)`` of the fastest holder of file ``j`` for user ``i``.

    A locally cached file costs nothing.  Otherwise the base station and all
    other holders compete on expected delay; ties go to the base station,
    then to the lowest user index.
    """
    if phi[i, j]:
        return user_node(i), 0.0
    node, delay = BS, t_avg[i, i]
    for k in range(phi.shape[0]):
        if k != i and phi[k, j] and t_avg[i, k] < delay:
            node, delay = user_node(k), t_avg[i, k]
    return node, float(delay)


def build_source_tables(t_avg, phi) -> DelayTables:
    t_avg = np.asarray(t_avg, dtype=float)
    phi = np.asarray(phi)
    n, m = phi.shape
    if t_avg.shape != (n, n):
        raise ValueError(f"t_avg shape {t_avg.shape} does not match {n} users")
    s = np.zeros((n, m), dtype=np.int64)
    d = np.zeros((n, m))
    for i in range(n):
        for j in range(m):
            s[i, j], d[i, j] = best_source(i, j, t_avg, phi)
    return DelayTables(t_avg=t_avg, d=d, s=s)


def initial_tables(t_avg, m) -> DelayTables:
    """Empty caches: every request is served by the base station."""
    t_avg = np.asarray(t_avg, dtype=float)
    n = t_avg.shape[0]
    d = np.repeat(np.diag(t_avg)[:, None], m, axis=1)
    return DelayTables(t_avg=t_avg, d=d, s=np.full((n, m), BS, dtype=np.int64))
