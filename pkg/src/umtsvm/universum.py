"""Universum rows built as midpoints of positive/negative pairs."""
from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .data import TaskDataset
from .errors import ValidationError


@dataclass(frozen=True)
class UniversumConfig:
    """How Universum rows are generated.

    Attributes
    ----------
    fraction : float
        Share of ``min(n_pos, n_neg)`` turned into midpoint pairs.
    seed : int
    per_task : bool
        Pair samples within each task (default) or across the pooled data,
        then hand the rows out to tasks in proportion to their size.
    consume : bool
        Remove the paired samples from the labelled training data.
    """

    fraction: float = 0.5
    seed: int = 0
    per_task: bool = True
    consume: bool = False

    def __post_init__(self):
        if not 0 < self.fraction <= 1:
            raise ValidationError("fraction must lie in (0, 1]")


def _pair(pos, neg, fraction, rng):
    m = int(np.floor(fraction * min(len(pos), len(neg))))
    ip = rng.permutation(len(pos))[:m]
    ineg = rng.permutation(len(neg))[:m]
    return 0.5 * (pos[ip] + neg[ineg]), ip, ineg


def generate_universum(ds: TaskDataset, cfg: UniversumConfig = UniversumConfig()) -> TaskDataset:
    """Return ``ds`` with Universum rows replaced by fresh midpoints."""
    rng = np.random.default_rng(cfg.seed)
    if cfg.per_task:
        tasks = []
        for t in ds.tasks:
            U, ip, ineg = _pair(t.positives, t.negatives, cfg.fraction, rng)
            if cfg.consume:
                t = replace(
                    t,
                    positives=np.delete(t.positives, ip, axis=0),
                    negatives=np.delete(t.negatives, ineg, axis=0),
                )
            tasks.append(replace(t, universum=U))
        return replace(ds, tasks=tuple(tasks))

    pos = np.vstack([t.positives for t in ds.tasks])
    neg = np.vstack([t.negatives for t in ds.tasks])
    U, ip, ineg = _pair(pos, neg, cfg.fraction, rng)
    if cfg.consume:
        keep_p = np.ones(len(pos), bool)
        keep_p[ip] = False
        keep_n = np.ones(len(neg), bool)
        keep_n[ineg] = False
        tasks, op, on = [], 0, 0
        for t in ds.tasks:
            kp = keep_p[op : op + len(t.positives)]
            kn = keep_n[on : on + len(t.negatives)]
            op += len(t.positives)
            on += len(t.negatives)
            tasks.append(replace(t, positives=t.positives[kp], negatives=t.negatives[kn]))
        ds = replace(ds, tasks=tuple(tasks))
    return split_universum_by_task(U, ds)


def _apportion(n: int, weights: np.ndarray) -> np.ndarray:
    """Largest-remainder rounding of ``n * weights`` to integers summing to ``n``."""
    raw = n * weights
    counts = np.floor(raw).astype(int)
    rest = n - counts.sum()
    order = np.argsort(-(raw - counts), kind="stable")
    counts[order[:rest]] += 1
    return counts


def split_universum_by_task(U, ds: TaskDataset, weights=None) -> TaskDataset:
    """Give each task a contiguous slice of the rows of ``U``.

    Parameters
    ----------
    U : array, shape (n_u, d)
    ds : TaskDataset
    weights : sequence of float, optional
        Share per task, summing to one. Defaults to task sizes.
    """
    U = np.asarray(U, dtype=float)
    if U.ndim != 2 or U.shape[1] != ds.dimension:
        raise ValidationError(f"Universum must have shape (n, {ds.dimension})")
    if U.shape[0] < ds.n_tasks:
        raise ValidationError(f"{U.shape[0]} Universum rows cannot cover {ds.n_tasks} tasks")
    if weights is None:
        sizes = np.array([t.n_labeled for t in ds.tasks], dtype=float)
        w = sizes / sizes.sum()
    else:
        w = np.asarray(weights, dtype=float)
        if w.shape != (ds.n_tasks,) or np.any(w < 0) or not np.isclose(w.sum(), 1.0):
            raise ValidationError("weights need one non-negative entry per task summing to 1")
    counts = _apportion(U.shape[0], w)
    edges = np.r_[0, np.cumsum(counts)]
    return ds.with_universum([U[edges[i] : edges[i + 1]] for i in range(ds.n_tasks)])


def export_universum_csv(ds: TaskDataset, path) -> None:
    """Write Universum rows with a task column and no label column."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(ds.dimension)] + ["task"])
        for t in ds.tasks:
            for row in t.universum:
                w.writerow([repr(float(v)) for v in row] + [t.task_id])

