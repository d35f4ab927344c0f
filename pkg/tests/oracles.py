"""Reference solvers used only by the tests."""
import itertools

import numpy as np
from scipy.optimize import lsq_linear


def box_qp_bvls(H, f, ub):
    """Exact solve of max -1/2 a'Ha + f'a, 0 <= a <= ub, for positive definite H.

    With H = R'R the problem is min 1/2 ||R a - R^{-T} f||^2 over the box,
    which bounded-variable least squares solves by an active-set method.
    """
    R = np.linalg.cholesky(H).T
    target = np.linalg.solve(R.T, f)
    res = lsq_linear(R, target, bounds=(np.zeros_like(ub), ub), method="bvls", tol=1e-14)
    return res.x


def box_qp_enumerate(H, f, ub):
    """Try every assignment of lower / upper / free to each coordinate."""
    n = len(f)
    best, best_val = None, -np.inf
    for pattern in itertools.product((0, 1, 2), repeat=n):
        pattern = np.array(pattern)
        a = np.where(pattern == 1, ub, 0.0)
        free = pattern == 2
        if free.any():
            rhs = f[free] - H[np.ix_(free, ~free)] @ a[~free]
            try:
                a[free] = np.linalg.solve(H[np.ix_(free, free)], rhs)
            except np.linalg.LinAlgError:
                continue
        if np.any(a < -1e-12) or np.any(a > ub + 1e-12):
            continue
        val = -0.5 * a @ H @ a + f @ a
        if val > best_val:
            best, best_val = a, val
    return best, best_val


def random_box_qp(rng, n):
    G = rng.normal(size=(n, n))
    H = G.T @ G + np.eye(n)
    f = rng.normal(size=n) * 3
    ub = rng.uniform(0.1, 2.0, size=n)
    return H, f, ub
