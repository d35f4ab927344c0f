"""Box-constrained concave QP: maximise ``-1/2 a^T H a + f^T a``, ``0 <= a <= ub``.

Solved by projected cyclic coordinate descent. Each coordinate step is the
exact one-dimensional maximiser clipped to the box, so the objective never
decreases. The gradient ``g = H a - f`` of the equivalent minimisation is
kept up to date incrementally and recomputed from scratch before every
convergence test.

Coordinate descent crawls when ``H`` is rank deficient with a large spread
of eigenvalues, as happens with strong task coupling. Every
``NEWTON_EVERY`` sweeps the solver therefore also takes a few active-set
Newton steps on the free coordinates, kept only if the objective improves.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import ValidationError

DEGENERATE_DIAG = 1e-12
NEWTON_EVERY = 20


@dataclass(frozen=True)
class BoxQpResult:
    alpha: np.ndarray
    objective: float
    kkt_residual: float
    iterations: int
    converged: bool
    history: list[float] = field(default_factory=list, repr=False)


def dual_objective(H, f, alpha) -> float:
    """``-1/2 alpha^T H alpha + f^T alpha``."""
    alpha = np.asarray(alpha, dtype=float)
    return float(-0.5 * alpha @ (np.asarray(H) @ alpha) + np.asarray(f) @ alpha)


def kkt_violation(grad: np.ndarray, alpha: np.ndarray, ub: np.ndarray) -> float:
    """Largest violation of the box optimality conditions.

    With ``grad = H alpha - f``: ``grad >= 0`` at the lower bound,
    ``grad <= 0`` at the upper bound and ``grad = 0`` in between.
    """
    if alpha.size == 0:
        return 0.0
    lo = alpha <= 0.0
    hi = alpha >= ub
    v = np.where(lo, np.maximum(-grad, 0.0), np.where(hi, np.maximum(grad, 0.0), np.abs(grad)))
    v[lo & hi] = 0.0
    return float(v.max())


@njit(cache=True, nogil=True)
def _sweep(H, ub, alpha, grad, order):
    n = H.shape[0]
    for k in range(order.shape[0]):
        i = order[k]
        hii = H[i, i]
        old = alpha[i]
        if hii > DEGENERATE_DIAG:
            new = old - grad[i] / hii
            if new < 0.0:
                new = 0.0
            elif new > ub[i]:
                new = ub[i]
        elif grad[i] < 0.0:
            new = ub[i]
        elif grad[i] > 0.0:
            new = 0.0
        else:
            new = old
        d = new - old
        if d != 0.0:
            alpha[i] = new
            for j in range(n):
                grad[j] += d * H[i, j]  # H symmetric, row access is contiguous


def _face_step(H, f, ub, alpha, grad, rounds=8):
    """Active-set steps on the current face of the box.

    The direction is Newton on the range of ``H_FF`` and steepest descent
    on its null space, where the objective is linear. The step length is
    the exact line minimiser, cut at the first bound hit. Coordinates at a
    bound that would leave the box are dropped from the free set. Every
    accepted step lowers the objective, so the caller may keep the result
    unconditionally.
    """
    alpha = alpha.copy()
    for _ in range(rounds):
        free = ~(((alpha <= 0.0) & (grad >= 0.0)) | ((alpha >= ub) & (grad <= 0.0)))
        d = None
        while free.any():
            idx = np.flatnonzero(free)
            g = grad[idx]
            lam, Q = np.linalg.eigh(H[np.ix_(idx, idx)])
            c = Q.T @ g
            rng = lam > 1e-10 * max(1.0, float(lam[-1]))
            d = Q @ np.where(rng, -c / np.where(rng, lam, 1.0), -c)
            blocked = ((alpha[idx] <= 0.0) & (d < 0.0)) | ((alpha[idx] >= ub[idx]) & (d > 0.0))
            if not blocked.any():
                break
            free[idx[blocked]] = False
            d = None
        if d is None:
            break
        slope = float(g @ d)
        if not slope < 0.0:
            break
        curv = float(d @ (H[np.ix_(idx, idx)] @ d))
        t = -slope / curv if curv > 0.0 else np.inf
        with np.errstate(divide="ignore"):
            room = np.where(d > 0.0, (ub[idx] - alpha[idx]) / d, np.where(d < 0.0, -alpha[idx] / d, np.inf))
        t = min(t, float(room.min()))
        if not np.isfinite(t) or t <= 0.0:
            break
        alpha[idx] = np.clip(alpha[idx] + t * d, 0.0, ub[idx])
        grad = H @ alpha - f
    return alpha


def solve_box_qp(
    H,
    f,
    ub,
    tol: float = 1e-6,
    max_iter: int = 10_000,
    alpha0=None,
    seed: int = 0,
    record_history: bool = False,
) -> BoxQpResult:
    """Projected coordinate descent for the box-constrained dual.

    Parameters
    ----------
    H : array, shape (n, n)
        Symmetric positive semidefinite.
    f : array, shape (n,)
    ub : array, shape (n,)
        Positive upper bounds.
    tol : float
        Stop once :func:`kkt_violation` is at most ``tol``.
    max_iter : int
        Maximum number of full sweeps.
    alpha0 : array, optional
        Starting point, projected onto the box. Zero by default.
    seed : int
        Seeds the random-order sweep run before convergence is declared.
    record_history : bool
        Keep the objective after every sweep.

    Returns
    -------
    BoxQpResult
        ``converged`` is False when ``max_iter`` sweeps were not enough;
        ``alpha`` is then the last iterate.
    """
    H = np.ascontiguousarray(H, dtype=float)
    f = np.asarray(f, dtype=float).ravel()
    ub = np.asarray(ub, dtype=float).ravel()
    n = f.shape[0]
    if H.shape != (n, n) or ub.shape != (n,):
        raise ValidationError(f"shape mismatch: H {H.shape}, f {f.shape}, ub {ub.shape}")
    if not tol > 0:
        raise ValidationError("tol must be positive")
    if np.any(ub < 0):
        raise ValidationError("upper bounds must be non-negative")
    scale = max(1.0, float(np.max(np.abs(H)))) if n else 1.0
    if not np.allclose(H, H.T, rtol=1e-10, atol=1e-10 * scale):
        raise ValidationError("H must be symmetric")

    alpha = np.zeros(n) if alpha0 is None else np.clip(np.asarray(alpha0, dtype=float), 0.0, ub)
    if n == 0:
        return BoxQpResult(alpha, 0.0, 0.0, 0, True, [])
    rng = np.random.default_rng(seed)
    cyclic = np.arange(n)
    grad = H @ alpha - f
    history = []
    converged = False
    it = 0
    viol = kkt_violation(grad, alpha, ub)
    while it < max_iter:
        _sweep(H, ub, alpha, grad, cyclic)
        it += 1
        grad = H @ alpha - f
        if it % NEWTON_EVERY == 0 and kkt_violation(grad, alpha, ub) > tol:
            trial = _face_step(H, f, ub, alpha, grad)
            if dual_objective(H, f, trial) >= dual_objective(H, f, alpha):
                alpha = trial
                grad = H @ alpha - f
        if record_history:
            history.append(dual_objective(H, f, alpha))
        viol = kkt_violation(grad, alpha, ub)
        if viol <= tol:
            # random-order pass guards against cyclic stalls
            _sweep(H, ub, alpha, grad, rng.permutation(n))
            grad = H @ alpha - f
            if record_history:
                history.append(dual_objective(H, f, alpha))
            viol = kkt_violation(grad, alpha, ub)
            if viol <= tol:
                converged = True
                break
    return BoxQpResult(
        alpha=alpha,
        objective=dual_objective(H, f, alpha),
        kkt_residual=viol,
        iterations=it,
        converged=converged,
        history=history,
    )
