"""Independent numeric oracles used by the tests.

These deliberately avoid the symbolic differentiation path of the
package: derivatives are central finite differences of numerically
evaluated fields, so route agreement actually checks something.
"""

import numpy as np


def fd_step(x: float, h: float = 1e-6) -> float:
    return h * max(1.0, abs(x))


def fd_partial(field, env: dict, coord: str) -> np.ndarray:
    """Central finite difference of field(env) -> ndarray along coord."""
    h = fd_step(env[coord])
    up = dict(env)
    dn = dict(env)
    up[coord] += h
    dn[coord] -= h
    return (np.asarray(field(up)) - np.asarray(field(dn))) / (2.0 * h)


def fd_christoffel_lower(metric_at, env: dict, coords) -> np.ndarray:
    """Gamma_cab from finite differences of the metric alone."""
    n = len(coords)
    dg = np.stack([fd_partial(metric_at, env, c) for c in coords])
    gamma = np.empty((n, n, n))
    for c in range(n):
        for a in range(n):
            for b in range(n):
                gamma[c, a, b] = 0.5 * (dg[a][c, b] + dg[b][c, a]
                                        - dg[c][a, b])
    return gamma


def fd_riemann_mixed(gamma_mixed_at, env: dict, coords) -> np.ndarray:
    """R^a_bcd from finite differences of the mixed connection field."""
    n = len(coords)
    gm = np.asarray(gamma_mixed_at(env))
    dgm = np.stack([fd_partial(gamma_mixed_at, env, c) for c in coords])
    riem = np.empty((n, n, n, n))
    for a in range(n):
        for b in range(n):
            for c in range(n):
                for d in range(n):
                    val = dgm[c][a, b, d] - dgm[d][a, b, c]
                    for e in range(n):
                        val += gm[a, e, c] * gm[e, b, d] \
                            - gm[a, e, d] * gm[e, b, c]
                    riem[a, b, c, d] = val
    return riem
