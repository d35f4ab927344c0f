"""Multi-task twin SVM classifiers, with and without Universum rows.

Four methods share one pipeline:

=============  ==================  ===========================
method         Universum rows      solver
=============  ==================  ===========================
``dmtsvm``     ignored             box-constrained dual QP
``umtsvm``     used                box-constrained dual QP
``mtls``       ignored             SPD linear system
``ls_umtsvm``  used                SPD linear system
=============  ==================  ===========================

Every task ``t`` gets two planes, ``u0 + u_t`` (close to its positives) and
``v0 + v_t`` (close to its negatives). A point is labelled by the nearer
plane in the sense of ``|z^T w|`` with ``z = [x, 1]`` or ``[k(x, D), 1]``.
"""
from __future__ import annotations

import io
import json
import zipfile
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .assembly import SIDES, SideOperator, build_blocks, build_side, dual_system_from, feature_map, ls_system_from
from .data import ScalingRecord, TaskDataset
from .errors import ConfigurationError, FormatError, NumericError, ValidationError
from .kernel import LINEAR, Basis, KernelSpec
from .lsys import solve_spd
from .qp import solve_box_qp

METHODS = ("dmtsvm", "umtsvm", "mtls", "ls_umtsvm")
QP_METHODS = ("dmtsvm", "umtsvm")
UNIVERSUM_METHODS = ("umtsvm", "ls_umtsvm")
FORMAT_TAG = "umtsvm-model"
FORMAT_VERSION = 1


@dataclass(frozen=True)
class Hyperparams:
    """Model and solver settings.

    ``delta`` is relative: every Gram ``G^T G`` is regularised with
    ``delta * mean(diag(G^T G))`` on its diagonal. ``seed`` only drives the
    random-order sweep of the QP solver.
    """

    c1: float = 1.0
    c2: float = 1.0
    c_u: float = 1.0
    c_u_star: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    epsilon: float = 0.3
    kernel: KernelSpec = LINEAR
    delta: float = 1e-6
    qp_tol: float = 1e-6
    max_iter: int = 10_000
    seed: int = 0

    def __post_init__(self):
        for name in ("c1", "c2", "mu1", "mu2"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v > 0):
                raise ValidationError(f"{name} must be positive, got {v!r}")
        for name in ("c_u", "c_u_star"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0):
                raise ValidationError(f"{name} must be non-negative, got {v!r}")
        if not 0 < self.epsilon < 1:
            raise ValidationError(f"epsilon must lie in (0,1), got {self.epsilon!r}")
        if not (np.isfinite(self.delta) and self.delta >= 0):
            raise ValidationError("delta must be non-negative")
        if not self.qp_tol > 0:
            raise ValidationError("qp_tol must be positive")
        if int(self.max_iter) < 1:
            raise ValidationError("max_iter must be at least 1")
        if not isinstance(self.kernel, KernelSpec):
            raise ConfigurationError("kernel must be a KernelSpec")

    def replace(self, **changes) -> "Hyperparams":
        if "gamma" in changes or "kernel_kind" in changes:
            kind = changes.pop("kernel_kind", self.kernel.kind)
            gamma = changes.pop("gamma", self.kernel.gamma)
            changes["kernel"] = KernelSpec(kind, gamma, self.kernel.use_basis)
        return replace(self, **changes)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kernel"] = asdict(self.kernel)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        d = dict(d)
        d["kernel"] = KernelSpec(**d["kernel"])
        return cls(**d)


@dataclass(frozen=True)
class DualSolution:
    """Multipliers of both problems, split into labelled and Universum parts."""

    alpha1: np.ndarray
    alpha2: np.ndarray
    alpha1_star: np.ndarray
    alpha2_star: np.ndarray
    objectives: tuple[float, float]
    converged: tuple[bool, bool]


@dataclass(frozen=True)
class TrainedModel:
    method: str
    u0: np.ndarray
    v0: np.ndarray
    u_t: np.ndarray
    v_t: np.ndarray
    task_ids: tuple[int, ...]
    hp: Hyperparams
    basis: Basis | None = None
    scaling: ScalingRecord | None = None
    converged: bool = True
    info: dict = field(default_factory=dict, compare=False)
    dual: DualSolution | None = field(default=None, compare=False, repr=False)

    @property
    def kernel(self) -> KernelSpec:
        return self.hp.kernel

    def task_position(self, task_id: int) -> int:
        try:
            return self.task_ids.index(int(task_id))
        except ValueError:
            raise KeyError(f"unknown task id {task_id}") from None

    def planes(self, task_id: int):
        """``(u0 + u_t, v0 + v_t)`` for one task."""
        i = self.task_position(task_id)
        return self.u0 + self.u_t[i], self.v0 + self.v_t[i]


# ---------------------------------------------------------------------------
# fitting


def _solve_side(op: SideOperator, method: str, hp: Hyperparams):
    if method in QP_METHODS:
        system = dual_system_from(op)
        res = solve_box_qp(system.H, system.f, system.ub, tol=hp.qp_tol, max_iter=hp.max_iter, seed=hp.seed)
        diag = {"objective": res.objective, "kkt_residual": res.kkt_residual, "iterations": res.iterations}
        return res.alpha, res.converged, diag
    system = ls_system_from(op)
    sol = solve_spd(system.M, system.rhs)
    diag = {"residual": sol.residual, "jittered": sol.jittered}
    return sol.x, bool(sol.residual <= 1e-8), diag


def fit(ds: TaskDataset, hp: Hyperparams, method: str) -> TrainedModel:
    """Fit one of :data:`METHODS` on ``ds``."""
    if method not in METHODS:
        raise ConfigurationError(f"unknown method {method!r}; choose from {', '.join(METHODS)}")
    if method not in UNIVERSUM_METHODS:
        ds = ds.without_universum()
    blocks = build_blocks(ds, hp.kernel)
    planes, multipliers, flags, info = [], [], [], {}
    for side in SIDES:
        op = build_side(blocks, side, hp)
        z, ok, diag = _solve_side(op, method, hp)
        if not np.all(np.isfinite(z)):
            raise NumericError(f"{side} problem produced non-finite multipliers")
        planes.append(op.recover(z))
        multipliers.append((z[: op.n_labeled], z[op.n_labeled :]))
        flags.append(ok)
        info[side] = diag
    (u0, u_t), (v0, v_t) = planes
    dual = None
    if method in QP_METHODS:
        dual = DualSolution(
            alpha1=multipliers[0][0],
            alpha2=multipliers[0][1],
            alpha1_star=multipliers[1][0],
            alpha2_star=multipliers[1][1],
            objectives=(info["first"]["objective"], info["second"]["objective"]),
            converged=tuple(flags),
        )
    else:
        info["multipliers"] = multipliers
    return TrainedModel(
        method=method,
        u0=u0,
        v0=v0,
        u_t=u_t,
        v_t=v_t,
        task_ids=ds.task_ids,
        hp=hp,
        basis=blocks.basis,
        converged=all(flags),
        info=info,
        dual=dual,
    )


def fit_dmtsvm(ds: TaskDataset, hp: Hyperparams) -> TrainedModel:
    return fit(ds, hp, "dmtsvm")


def fit_umtsvm(ds: TaskDataset, hp: Hyperparams) -> TrainedModel:
    return fit(ds, hp, "umtsvm")


def fit_mtls_twsvm(ds: TaskDataset, hp: Hyperparams) -> TrainedModel:
    return fit(ds, hp, "mtls")


def fit_ls_umtsvm(ds: TaskDataset, hp: Hyperparams) -> TrainedModel:
    return fit(ds, hp, "ls_umtsvm")


# ---------------------------------------------------------------------------
# prediction


def _features(model: TrainedModel, X) -> np.ndarray:
    X = np.atleast_2d(np.asarray(X, dtype=float))
    dim = model.basis.D.shape[1] if model.basis is not None else model.u0.shape[0] - 1
    if X.shape[1] != dim:
        raise ValidationError(f"expected {dim} features, got {X.shape[1]}")
    if model.scaling is not None:
        X = model.scaling.transform(X)
    return feature_map(X, model.kernel, model.basis)


def decision_distances(model: TrainedModel, X, tasks):
    """``(|z^T (u0 + u_t)|, |z^T (v0 + v_t)|)`` for each row of ``X``."""
    Z = _features(model, X)
    tasks = np.broadcast_to(np.asarray(tasks), (Z.shape[0],))
    pos = np.array([model.task_position(t) for t in tasks], dtype=int)
    W1 = model.u0 + model.u_t[pos]
    W2 = model.v0 + model.v_t[pos]
    return np.abs(np.einsum("ij,ij->i", Z, W1)), np.abs(np.einsum("ij,ij->i", Z, W2))


def predict_batch(model: TrainedModel, X, tasks) -> np.ndarray:
    """Labels in {+1, -1}; ties go to +1."""
    d1, d2 = decision_distances(model, X, tasks)
    return np.where(d1 <= d2, 1, -1)


def predict(model: TrainedModel, x, task: int) -> int:
    return int(predict_batch(model, np.asarray(x, dtype=float).reshape(1, -1), [task])[0])


# ---------------------------------------------------------------------------
# primal checks


def qp_primal_objective(op: SideOperator, w0: np.ndarray, offsets: np.ndarray) -> float:
    """Hinge-loss primal of one problem at the given planes, regularised Grams included."""
    res = op.residual_rows(w0, offsets)
    reg = 0.5 * op.gram.quad(w0) + sum(g.quad(w) for g, w in zip(op.task_grams, offsets)) / (2 * op.coupling)
    return float(reg + op.penalty @ np.maximum(res, 0.0))


def ls_primal_objective(op: SideOperator, w0: np.ndarray, offsets: np.ndarray) -> float:
    """Squared-slack primal with the equality constraints substituted."""
    res = op.residual_rows(w0, offsets)
    reg = 0.5 * op.gram.quad(w0) + sum(g.quad(w) for g, w in zip(op.task_grams, offsets)) / (2 * op.coupling)
    return float(reg + 0.5 * op.penalty @ res**2)


def ls_primal_gradient(op: SideOperator, w0: np.ndarray, offsets: np.ndarray):
    """Analytic gradient of :func:`ls_primal_objective` w.r.t. ``(w0, offsets)``."""
    res = op.residual_rows(w0, offsets)
    weighted = op.penalty * res

    def gram_times(g, w):
        return g.base.T @ (g.base @ w) + g.delta * w

    g0 = gram_times(op.gram, w0)
    gt = []
    for Ct, idx, g, w in zip(op.C_t, op.task_index, op.task_grams, offsets):
        back = -op.sign * (Ct.T @ weighted[idx])
        g0 = g0 + back
        gt.append(gram_times(g, w) / op.coupling + back)
    return g0, np.vstack(gt)


# ---------------------------------------------------------------------------
# persistence


def save_model(model: TrainedModel, path) -> None:
    """Write a self-describing ``.npz`` archive."""
    meta = {
        "format": FORMAT_TAG,
        "version": FORMAT_VERSION,
        "method": model.method,
        "task_ids": list(model.task_ids),
        "hyperparams": model.hp.to_dict(),
        "converged": bool(model.converged),
        "has_basis": model.basis is not None,
        "has_scaling": model.scaling is not None,
    }
    arrays = {"u0": model.u0, "v0": model.v0, "u_t": model.u_t, "v_t": model.v_t}
    if model.basis is not None:
        arrays["basis"] = model.basis.D
    if model.scaling is not None:
        arrays["scale_min"], arrays["scale_span"] = model.scaling.to_arrays()
    with open(path, "wb") as fh:
        np.savez(fh, meta=np.array(json.dumps(meta)), **arrays)


def load_model(path) -> TrainedModel:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
        with np.load(io.BytesIO(raw), allow_pickle=False) as z:
            meta = json.loads(str(z["meta"]))
            arrays = {k: np.array(z[k]) for k in z.files if k != "meta"}
    except (OSError, ValueError, KeyError, EOFError, zipfile.BadZipFile, json.JSONDecodeError) as exc:
        raise FormatError(f"{path}: not a readable model file ({exc})") from exc
    if not isinstance(meta, dict) or meta.get("format") != FORMAT_TAG:
        raise FormatError(f"{path}: not a model file")
    if meta.get("version") != FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported format version {meta.get('version')!r}")
    try:
        basis = Basis(arrays["basis"]) if meta["has_basis"] else None
        scaling = ScalingRecord(arrays["scale_min"], arrays["scale_span"]) if meta["has_scaling"] else None
        return TrainedModel(
            method=meta["method"],
            u0=arrays["u0"],
            v0=arrays["v0"],
            u_t=arrays["u_t"],
            v_t=arrays["v_t"],
            task_ids=tuple(int(t) for t in meta["task_ids"]),
            hp=Hyperparams.from_dict(meta["hyperparams"]),
            basis=basis,
            scaling=scaling,
            converged=bool(meta["converged"]),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: incomplete model file ({exc})") from exc
