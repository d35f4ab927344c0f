"""Cholesky solves for the symmetric positive definite least-squares systems."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .errors import NumericError, ValidationError

JITTER = 1e-8


@dataclass(frozen=True)
class LsSolution:
    x: np.ndarray
    residual: float
    jittered: bool = False


def solve_spd(M, rhs) -> LsSolution:
    """Solve ``M x = rhs`` for symmetric positive definite ``M``.

    If the Cholesky factorisation fails, it is retried once with
    ``1e-8 * mean(diag(M))`` added to the diagonal (``jittered=True``).
    The reported residual ``||Mx - rhs|| / max(1, ||rhs||)`` is always
    measured against the original ``M``.
    """
    M = np.asarray(M, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    n = rhs.shape[0]
    if M.shape != (n, n):
        raise ValidationError(f"shape mismatch: M {M.shape}, rhs {rhs.shape}")
    if not np.all(np.isfinite(M)) or not np.all(np.isfinite(rhs)):
        raise NumericError("system contains non-finite values")
    if n == 0:
        return LsSolution(np.zeros(0), 0.0)
    jittered = False
    try:
        factor = linalg.cho_factor(M, lower=True, check_finite=False)
    except linalg.LinAlgError:
        bump = JITTER * float(np.mean(np.diag(M)))
        try:
            factor = linalg.cho_factor(M + bump * np.eye(n), lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericError(f"system matrix ({n}x{n}) is not positive definite") from exc
        jittered = True
    x = linalg.cho_solve(factor, rhs, check_finite=False)
    residual = float(np.linalg.norm(M @ x - rhs) / max(1.0, np.linalg.norm(rhs)))
    return LsSolution(x, residual, jittered)
