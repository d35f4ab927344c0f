"""Block matrices behind the twin multi-task problems.

Each of the two problems ("first" builds the plane hugging the positive
class, "second" the negative one) is described by

* the *own* block whose squared projections are minimised (``A`` for the
  first problem, ``B`` for the second) and its per-task slices,
* a constraint matrix ``C`` whose rows are the opposite-class rows followed
  by the negated Universum rows, ``C = [B; -U]`` or ``C = [A; -U]``,
* one regularised Gram ``G = own^T own + delta I`` globally and one per task.

With ``W = L^{-1} C^T`` (``G = L L^T``) the shared quadratic form is
``H = W^T W + (T / mu) * sum_t scatter(W_t^T W_t)``. The box-QP dual and the
least-squares system both use ``H``; the latter adds ``diag(1 / penalty)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import linalg

from .data import TaskDataset, concat_rows
from .errors import ConfigurationError, NumericError
from .kernel import Basis, KernelSpec, kernel_matrix

if TYPE_CHECKING:
    from .models import Hyperparams

SIDES = ("first", "second")


@dataclass(frozen=True)
class AugmentedBlocks:
    """Augmented matrices ``[F(X) e]`` stacked over tasks and per task.

    ``F`` is the identity on raw features, or ``k(., D)`` when
    ``kernelized``.
    """

    A: np.ndarray
    B: np.ndarray
    U: np.ndarray
    A_t: tuple[np.ndarray, ...]
    B_t: tuple[np.ndarray, ...]
    U_t: tuple[np.ndarray, ...]
    kernelized: bool
    basis: Basis | None

    @property
    def n_tasks(self) -> int:
        return len(self.A_t)

    @property
    def n_columns(self) -> int:
        return self.A.shape[1]


def augment(F: np.ndarray) -> np.ndarray:
    return np.hstack([F, np.ones((F.shape[0], 1))])


def feature_map(X, spec: KernelSpec, basis: Basis | None) -> np.ndarray:
    """Augmented representation ``[x, 1]`` or ``[k(x, D), 1]`` of rows ``X``."""
    X = np.asarray(X, dtype=float)
    if spec.kernelized:
        return augment(kernel_matrix(X, basis, spec))
    return augment(X)


def build_blocks(ds: TaskDataset, spec: KernelSpec) -> AugmentedBlocks:
    basis = Basis.from_dataset(ds) if spec.kernelized else None
    A_t = tuple(feature_map(t.positives, spec, basis) for t in ds.tasks)
    B_t = tuple(feature_map(t.negatives, spec, basis) for t in ds.tasks)
    U_t = tuple(feature_map(t.universum, spec, basis) for t in ds.tasks)
    p = A_t[0].shape[1]
    return AugmentedBlocks(
        A=concat_rows(A_t, p),
        B=concat_rows(B_t, p),
        U=concat_rows(U_t, p),
        A_t=A_t,
        B_t=B_t,
        U_t=U_t,
        kernelized=spec.kernelized,
        basis=basis,
    )


class RegularizedGram:
    """Cholesky factor of ``G_base^T G_base + delta * I``.

    Parameters
    ----------
    G_base : array, shape (n, p)
    delta : float
        Absolute ridge added to the diagonal.
    """

    def __init__(self, G_base: np.ndarray, delta: float):
        G_base = np.asarray(G_base, dtype=float)
        if not np.all(np.isfinite(G_base)) or not np.isfinite(delta) or delta < 0:
            raise NumericError("Gram base matrix or delta is not finite")
        self.base = G_base
        self.delta = float(delta)
        gram = G_base.T @ G_base
        gram[np.diag_indices_from(gram)] += self.delta
        try:
            self.L = linalg.cholesky(gram, lower=True, check_finite=False)
        except linalg.LinAlgError as exc:
            raise NumericError(
                f"regularised Gram ({gram.shape[0]}x{gram.shape[0]}, delta={delta:g}) "
                "is not positive definite"
            ) from exc

    @classmethod
    def relative(cls, G_base: np.ndarray, rel_delta: float) -> "RegularizedGram":
        """Ridge scaled by the mean diagonal of ``G_base^T G_base``."""
        scale = float(np.mean(np.sum(np.asarray(G_base) ** 2, axis=0)))
        return cls(G_base, rel_delta * scale)

    def half_solve(self, Y: np.ndarray) -> np.ndarray:
        """``L^{-1} Y``."""
        return linalg.solve_triangular(self.L, Y, lower=True, check_finite=False)

    def solve(self, Y: np.ndarray) -> np.ndarray:
        """``G^{-1} Y``."""
        return linalg.cho_solve((self.L, True), Y, check_finite=False)

    def quad(self, u: np.ndarray) -> float:
        """``u^T G u``."""
        r = self.base @ u
        return float(r @ r + self.delta * (u @ u))


def reg_gram_inverse_apply(G_base, M, delta: float) -> np.ndarray:
    """``(G_base^T G_base + delta I)^{-1} M^T`` by Cholesky, no explicit inverse."""
    M = np.asarray(M, dtype=float)
    return RegularizedGram(G_base, delta).solve(M.T)


@dataclass
class SideOperator:
    """Everything needed to state, solve and invert one of the two problems.

    Dual variables are ordered ``z = [lab_1, ..., lab_T, uni_1, ..., uni_T]``
    (multipliers of opposite-class rows, then of Universum rows);
    ``task_index[t]`` lists the positions belonging to task ``t``.
    """

    side: str
    sign: float
    coupling: float
    gram: RegularizedGram
    task_grams: list[RegularizedGram]
    C: np.ndarray
    C_t: list[np.ndarray]
    task_index: list[np.ndarray]
    f: np.ndarray
    penalty: np.ndarray
    n_labeled: int
    n_universum: int

    @property
    def n_tasks(self) -> int:
        return len(self.C_t)

    def quadratic_form(self) -> np.ndarray:
        W = self.gram.half_solve(self.C.T)
        H = W.T @ W
        for Ct, idx, g in zip(self.C_t, self.task_index, self.task_grams):
            if len(idx) == 0:
                continue
            Wt = g.half_solve(Ct.T)
            H[np.ix_(idx, idx)] += self.coupling * (Wt.T @ Wt)
        return 0.5 * (H + H.T)

    def recover(self, z: np.ndarray):
        """Common plane and per-task offsets from multipliers ``z``.

        Returns ``(w0, offsets)`` with ``offsets`` of shape ``(T, p)``.
        """
        w0 = self.sign * self.gram.solve(self.C.T @ z)
        offsets = np.vstack(
            [
                self.sign * self.coupling * g.solve(Ct.T @ z[idx])
                for Ct, idx, g in zip(self.C_t, self.task_index, self.task_grams)
            ]
        )
        return w0, offsets

    def residual_rows(self, w0: np.ndarray, offsets: np.ndarray) -> np.ndarray:
        """``f - sign * C_i w_task(i)`` per constraint row, in ``z`` order.

        Positive entries are hinge slacks for the QP problem; for the
        least-squares problem the whole vector is the equality slack.
        """
        out = np.empty(self.n_labeled + self.n_universum)
        for Ct, idx, wt in zip(self.C_t, self.task_index, offsets):
            out[idx] = self.f[idx] - self.sign * (Ct @ (w0 + wt))
        return out


def _side_parts(blocks: AugmentedBlocks, side: str):
    if side == "first":
        return blocks.A, blocks.A_t, blocks.B_t, -1.0
    if side == "second":
        return blocks.B, blocks.B_t, blocks.A_t, 1.0
    raise ConfigurationError(f"side must be 'first' or 'second', got {side!r}")


def build_side(blocks: AugmentedBlocks, side: str, hp: "Hyperparams") -> SideOperator:
    own, own_t, opp_t, sign = _side_parts(blocks, side)
    if side == "first":
        c_lab, c_uni, mu = hp.c1, hp.c_u, hp.mu1
    else:
        c_lab, c_uni, mu = hp.c2, hp.c_u_star, hp.mu2
    T = blocks.n_tasks
    # a zero Universum penalty switches the Universum constraints off
    uni_t = blocks.U_t if c_uni > 0 else tuple(u[:0] for u in blocks.U_t)
    n_lab = sum(b.shape[0] for b in opp_t)
    n_uni = sum(u.shape[0] for u in uni_t)

    C_t, index = [], []
    lab_off, uni_off = 0, n_lab
    for b, u in zip(opp_t, uni_t):
        C_t.append(np.vstack([b, -u]))
        index.append(
            np.r_[np.arange(lab_off, lab_off + b.shape[0]), np.arange(uni_off, uni_off + u.shape[0])]
        )
        lab_off += b.shape[0]
        uni_off += u.shape[0]
    p = own.shape[1]
    C = np.vstack([concat_rows(opp_t, p), -concat_rows(uni_t, p)])
    f = np.r_[np.ones(n_lab), np.full(n_uni, -1.0 + hp.epsilon)]
    penalty = np.r_[np.full(n_lab, float(c_lab)), np.full(n_uni, float(c_uni))]
    return SideOperator(
        side=side,
        sign=sign,
        coupling=T / mu,
        gram=RegularizedGram.relative(own, hp.delta),
        task_grams=[RegularizedGram.relative(a, hp.delta) for a in own_t],
        C=C,
        C_t=C_t,
        task_index=index,
        f=f,
        penalty=penalty,
        n_labeled=n_lab,
        n_universum=n_uni,
    )


@dataclass(frozen=True)
class DualSystem:
    """``max -1/2 z^T H z + f^T z`` subject to ``0 <= z <= ub``."""

    H: np.ndarray
    f: np.ndarray
    ub: np.ndarray
    n_labeled: int
    n_universum: int


@dataclass(frozen=True)
class LsSystem:
    """Symmetric positive definite system ``M x = rhs``."""

    M: np.ndarray
    rhs: np.ndarray
    n_labeled: int
    n_universum: int


def dual_system_from(op: SideOperator) -> DualSystem:
    return DualSystem(op.quadratic_form(), op.f.copy(), op.penalty.copy(), op.n_labeled, op.n_universum)


def ls_system_from(op: SideOperator) -> LsSystem:
    M = op.quadratic_form()
    M[np.diag_indices_from(M)] += 1.0 / op.penalty
    return LsSystem(M, op.f.copy(), op.n_labeled, op.n_universum)


def build_dual_system(blocks: AugmentedBlocks, side: str, hp: "Hyperparams") -> DualSystem:
    return dual_system_from(build_side(blocks, side, hp))


def build_ls_system(blocks: AugmentedBlocks, side: str, hp: "Hyperparams") -> LsSystem:
    return ls_system_from(build_side(blocks, side, hp))

