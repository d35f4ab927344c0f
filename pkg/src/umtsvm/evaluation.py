"""Cross-validation, grid search and accuracy reporting."""
from __future__ import annotations

import csv
import itertools
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from . import data as _data
from . import models as _models
from . import universum as _universum
from .data import TaskDataset
from .errors import ConfigurationError, UMTSVMError, ValidationError
from .models import Hyperparams
from .universum import UniversumConfig

POWERS_OF_TWO = tuple(2.0**i for i in range(-10, 11))
EPSILONS = tuple(round(0.1 * i, 1) for i in range(1, 10))
GRID_PARAMS = ("c1", "c2", "c_u", "c_u_star", "mu1", "mu2", "epsilon", "gamma")


def accuracy(predictions, truths) -> float:
    """Percentage of matching entries."""
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape or p.size == 0:
        raise ValidationError("predictions and truths must be non-empty and equally long")
    return 100.0 * float(np.mean(p == t))


def kfold_split(n: int, k: int = 5, seed: int = 0, strata=None):
    """Random k-fold split, stratified when ``strata`` labels are given.

    Each stratum is shuffled, the strata are laid end to end and positions
    are dealt to folds round-robin. Fold sizes therefore differ by at most
    one and every stratum is spread evenly over the folds.

    Returns a list of ``(train_indices, test_indices)`` pairs.
    """
    if k < 2 or n < k:
        raise ValidationError(f"need k >= 2 and n >= k (got n={n}, k={k})")
    rng = np.random.default_rng(seed)
    if strata is None:
        order = rng.permutation(n)
    else:
        strata = np.asarray(strata)
        if strata.shape != (n,):
            raise ValidationError("one stratum label per sample is required")
        parts = []
        for s in np.unique(strata):
            members = np.flatnonzero(strata == s)
            if len(members) < 2:
                raise ValidationError(f"stratum {s!r} has {len(members)} sample(s); cannot stratify")
            parts.append(rng.permutation(members))
        order = np.concatenate(parts)
    fold_of = np.empty(n, dtype=int)
    fold_of[order] = np.arange(n) % k
    all_idx = np.arange(n)
    return [(all_idx[fold_of != f], all_idx[fold_of == f]) for f in range(k)]


@dataclass(frozen=True)
class CvReport:
    """Fold accuracies in percent. ``std`` is the population std over folds."""

    mean_accuracy: float
    std: float
    fold_accuracies: tuple[float, ...]
    wall_time: float
    convergence_flags: int

    @classmethod
    def from_folds(cls, accs, wall_time, flags) -> "CvReport":
        a = np.asarray(accs, dtype=float)
        return cls(float(a.mean()), float(a.std()), tuple(float(x) for x in a), float(wall_time), int(flags))


def _fold_strata(task, y):
    return np.array([f"{t}:{int(v)}" for t, v in zip(task, y)])


def cross_validate(
    method: str,
    ds: TaskDataset,
    hp: Hyperparams,
    k: int = 5,
    seed: int = 0,
    universum: UniversumConfig | None = UniversumConfig(),
    normalize: bool = True,
) -> CvReport:
    """k-fold estimate of test accuracy.

    Inside every fold, scaling statistics and Universum rows come from the
    training rows only. With ``universum=None`` any Universum rows already in
    ``ds`` are passed through unchanged. ``wall_time`` covers fitting and
    prediction.
    """
    X, y, task = ds.to_rows()
    given = {t.task_id: t.universum for t in ds.tasks}
    folds = kfold_split(len(y), k, seed, strata=_fold_strata(task, y))
    accs, flags, elapsed = [], 0, 0.0
    for i, (tr, te) in enumerate(folds):
        train = TaskDataset.from_rows(X[tr], y[tr], task[tr], universum=given if universum is None else None)
        scaling = None
        if normalize:
            train, scaling = _data.normalize(train)
        if universum is not None and method in _models.UNIVERSUM_METHODS:
            train = _universum.generate_universum(train, replace(universum, seed=universum.seed + 7919 * i))
        t0 = time.perf_counter()
        try:
            model = _models.fit(train, hp, method)
        except UMTSVMError as exc:
            raise type(exc)(f"fold {i}: {exc}") from exc
        model = replace(model, scaling=scaling)
        pred = _models.predict_batch(model, X[te], task[te])
        elapsed += time.perf_counter() - t0
        accs.append(accuracy(pred, y[te]))
        flags += not model.converged
    return CvReport.from_folds(accs, elapsed, flags)


@dataclass(frozen=True)
class GridSpec:
    """Candidate values per hyper-parameter.

    Names are fields of :class:`Hyperparams` plus ``gamma``. The best
    configuration has the highest mean accuracy; ties go to the smaller
    ``c1 + c2`` and then to the configuration evaluated first.
    """

    params: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for name, values in dict(self.params).items():
            if name not in GRID_PARAMS:
                raise ConfigurationError(f"unknown grid parameter {name!r}")
            values = tuple(float(v) for v in np.atleast_1d(values))
            if not values:
                raise ConfigurationError(f"grid parameter {name!r} has no candidates")
            clean[name] = values
        object.__setattr__(self, "params", clean)

    @property
    def size(self) -> int:
        return int(np.prod([len(v) for v in self.params.values()])) if self.params else 1

    def configurations(self):
        names = list(self.params)
        for combo in itertools.product(*(self.params[n] for n in names)):
            yield dict(zip(names, combo))


def paper_grid(method: str, kernel: str = "linear") -> GridSpec:
    """Full candidate ranges: powers of two 2^-10..2^10, epsilon 0.1..0.9."""
    names = ["c1", "c2", "mu1", "mu2"]
    if method in _models.UNIVERSUM_METHODS:
        names += ["c_u", "c_u_star"]
    params = {n: POWERS_OF_TWO for n in names}
    if method in _models.UNIVERSUM_METHODS:
        params["epsilon"] = EPSILONS
    if kernel == "gaussian":
        params["gamma"] = POWERS_OF_TWO
    return GridSpec(params)


def grid_search(
    method: str,
    ds: TaskDataset,
    grid: GridSpec,
    k: int = 5,
    seed: int = 0,
    base: Hyperparams = Hyperparams(),
    universum: UniversumConfig | None = UniversumConfig(),
    normalize: bool = True,
    n_jobs: int = 1,
):
    """Exhaustive search over ``grid`` with :func:`cross_validate`.

    All configurations share the same folds. Configuration ``i`` runs its QP
    solver with seed ``seed + i``, so parallel and sequential runs agree.

    Returns ``(best_hp, best_report, table)``; ``table`` holds one dict per
    configuration in evaluation order.
    """
    configs = list(grid.configurations())
    hps = [base.replace(seed=seed + i, **cfg) for i, cfg in enumerate(configs)]

    def run(i):
        return cross_validate(method, ds, hps[i], k=k, seed=seed, universum=universum, normalize=normalize)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            reports = list(pool.map(run, range(len(hps))))
    else:
        reports = [run(i) for i in range(len(hps))]

    best = 0
    for i in range(1, len(reports)):
        a, b = reports[i], reports[best]
        if a.mean_accuracy > b.mean_accuracy or (
            a.mean_accuracy == b.mean_accuracy and hps[i].c1 + hps[i].c2 < hps[best].c1 + hps[best].c2
        ):
            best = i
    table = [table_row(method, h, r) for h, r in zip(hps, reports)]
    return hps[best], reports[best], table


def table_row(method: str, hp: Hyperparams, rep: CvReport) -> dict:
    return {
        "method": method,
        "c1": hp.c1,
        "c2": hp.c2,
        "c_u": hp.c_u,
        "c_u_star": hp.c_u_star,
        "mu1": hp.mu1,
        "mu2": hp.mu2,
        "epsilon": hp.epsilon,
        "kernel": hp.kernel.kind,
        "gamma": hp.kernel.gamma,
        "mean_acc": rep.mean_accuracy,
        "std_over_folds": rep.std,
        "time_s": rep.wall_time,
        "nonconverged": rep.convergence_flags,
    }


def write_table_csv(table, path) -> None:
    if not table:
        raise ValidationError("empty table")
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=list(table[0]), lineterminator="\n")
        w.writeheader()
        for row in table:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})


def format_report_table(rows) -> str:
    """Plain-text table of ``(name, CvReport)`` pairs: accuracy and time."""
    lines = [
        f"{'Method':<12} {'Acc(%) ± Std':>16} {'Time(s)':>9} {'Flags':>6}",
        "-" * 46,
    ]
    for name, rep in rows:
        acc = f"{rep.mean_accuracy:.2f} ± {rep.std:.2f}"
        lines.append(f"{name:<12} {acc:>16} {rep.wall_time:>9.3f} {rep.convergence_flags:>6d}")
    lines.append("(Std is taken over folds.)")
    return "\n".join(lines)
