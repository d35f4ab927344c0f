"""Multi-task datasets: containers, CSV I/O, task partitioning, scaling and
synthetic problems.

A dataset is an ordered collection of tasks. Every task holds its positive
rows, its negative rows and (possibly empty) Universum rows, all sharing one
feature dimension.
"""
from __future__ import annotations

import csv
import math
import sys
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigurationError, ParseError, ValidationError


def _frozen(a, d=None):
    a = np.array(a, dtype=float, copy=True)
    if a.ndim == 1 and a.size == 0:
        a = a.reshape(0, 0 if d is None else d)
    if a.ndim != 2:
        raise ValidationError(f"expected a 2-D matrix, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Task:
    """Samples of one task.

    Parameters
    ----------
    positives, negatives : array, shape (n_pos, d) / (n_neg, d)
    universum : array, shape (n_u, d), optional
        Universum rows; empty by default.
    task_id : int
        Identifier, must be >= 1.
    """

    positives: np.ndarray
    negatives: np.ndarray
    universum: np.ndarray | None = None
    task_id: int = 1

    def __post_init__(self):
        pos = _frozen(self.positives)
        neg = _frozen(self.negatives)
        d = pos.shape[1]
        uni = _frozen(np.empty((0, d)) if self.universum is None else self.universum, d)
        if int(self.task_id) != self.task_id or self.task_id < 1:
            raise ValidationError(f"task id must be an integer >= 1, got {self.task_id!r}")
        if pos.shape[0] < 1 or neg.shape[0] < 1:
            raise ValidationError(
                f"task {self.task_id} needs at least one positive and one negative sample "
                f"(has {pos.shape[0]} positive, {neg.shape[0]} negative)"
            )
        if neg.shape[1] != d or uni.shape[1] != d:
            raise ValidationError(f"task {self.task_id}: inconsistent feature dimensions")
        for name, a in (("positives", pos), ("negatives", neg), ("universum", uni)):
            if not np.all(np.isfinite(a)):
                raise ValidationError(f"task {self.task_id}: non-finite value in {name}")
        object.__setattr__(self, "positives", pos)
        object.__setattr__(self, "negatives", neg)
        object.__setattr__(self, "universum", uni)
        object.__setattr__(self, "task_id", int(self.task_id))

    def __eq__(self, other):
        if not isinstance(other, Task):
            return NotImplemented
        return self.task_id == other.task_id and all(
            np.array_equal(a, b)
            for a, b in (
                (self.positives, other.positives),
                (self.negatives, other.negatives),
                (self.universum, other.universum),
            )
        )

    __hash__ = None

    @property
    def dimension(self) -> int:
        return self.positives.shape[1]

    @property
    def n_labeled(self) -> int:
        return self.positives.shape[0] + self.negatives.shape[0]


@dataclass(frozen=True)
class TaskDataset:
    """Ordered tuple of :class:`Task` objects sharing a feature dimension.

    ``dropped`` counts rows that were discarded while building the dataset
    (see :func:`partition_tasks`); it does not take part in equality.
    """

    tasks: tuple[Task, ...]
    dropped: int = field(default=0, compare=False)

    def __post_init__(self):
        tasks = tuple(self.tasks)
        if not tasks:
            raise ValidationError("a dataset needs at least one task")
        d = tasks[0].dimension
        if any(t.dimension != d for t in tasks):
            raise ValidationError("all tasks must have the same number of features")
        ids = [t.task_id for t in tasks]
        if len(set(ids)) != len(ids):
            raise ValidationError(f"duplicate task ids: {ids}")
        object.__setattr__(self, "tasks", tasks)

    @property
    def dimension(self) -> int:
        return self.tasks[0].dimension

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def task_ids(self) -> tuple[int, ...]:
        return tuple(t.task_id for t in self.tasks)

    @property
    def n_labeled(self) -> int:
        return sum(t.n_labeled for t in self.tasks)

    @property
    def n_universum(self) -> int:
        return sum(t.universum.shape[0] for t in self.tasks)

    def task(self, task_id: int) -> Task:
        for t in self.tasks:
            if t.task_id == task_id:
                return t
        raise KeyError(f"unknown task id {task_id}")

    def without_universum(self) -> "TaskDataset":
        return replace(self, tasks=tuple(replace(t, universum=None) for t in self.tasks))

    def with_universum(self, blocks: Sequence[np.ndarray]) -> "TaskDataset":
        if len(blocks) != self.n_tasks:
            raise ValidationError("need one Universum block per task")
        return replace(
            self, tasks=tuple(replace(t, universum=u) for t, u in zip(self.tasks, blocks))
        )

    def map_features(self, fn) -> "TaskDataset":
        """Apply ``fn`` to every feature matrix (positives, negatives, Universum)."""
        return replace(
            self,
            tasks=tuple(
                replace(
                    t,
                    positives=fn(t.positives),
                    negatives=fn(t.negatives),
                    universum=fn(t.universum),
                )
                for t in self.tasks
            ),
        )

    def to_rows(self):
        """Flatten labelled samples into ``(X, y, task)`` arrays.

        Row order is task by task, positives before negatives.
        """
        X = np.vstack([np.vstack([t.positives, t.negatives]) for t in self.tasks])
        y = np.concatenate(
            [np.r_[np.ones(t.positives.shape[0]), -np.ones(t.negatives.shape[0])] for t in self.tasks]
        )
        task = np.concatenate([np.full(t.n_labeled, t.task_id) for t in self.tasks])
        return X, y, task

    @classmethod
    def from_rows(cls, X, y, task=None, universum: Mapping[int, np.ndarray] | None = None):
        """Group labelled rows by task id (ascending) into a dataset."""
        X = np.asarray(X, dtype=float)
        y = np.asarray(y)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValidationError("X must be 2-D with one label per row")
        if not np.all(np.isin(y, (-1, 1))):
            raise ValidationError("labels must be +1 or -1")
        task = np.ones(len(y), dtype=int) if task is None else np.asarray(task)
        universum = universum or {}
        tasks = []
        for tid in np.unique(task):
            sel = task == tid
            tasks.append(
                Task(
                    positives=X[sel & (y == 1)].reshape(-1, X.shape[1]),
                    negatives=X[sel & (y == -1)].reshape(-1, X.shape[1]),
                    universum=universum.get(int(tid)),
                    task_id=int(tid),
                )
            )
        return cls(tuple(tasks))


# ---------------------------------------------------------------------------
# CSV input / output


@dataclass(frozen=True)
class LabeledRows:
    """Raw labelled table: features, labels in {+1, -1} and column names."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple[str, ...]

    def column_index(self, column) -> int:
        if isinstance(column, (int, np.integer)):
            if not 0 <= column < len(self.columns):
                raise ConfigurationError(f"feature index {column} out of range")
            return int(column)
        try:
            return self.columns.index(column)
        except ValueError:
            raise ConfigurationError(f"no feature column named {column!r}") from None


def _map_label(raw: str, label_map, row: int) -> int:
    if label_map is None:
        try:
            v = float(raw)
        except ValueError:
            raise ParseError(f"row {row}: label {raw!r} is not numeric; pass a label_map") from None
        if v not in (1.0, -1.0):
            raise ValidationError(
                f"row {row}: label {raw!r} is not +1/-1; pass an explicit label_map"
            )
        return int(v)
    if raw in label_map:
        out = label_map[raw]
    else:
        out = None
        try:
            v = float(raw)
            for k, m in label_map.items():
                try:
                    if float(k) == v:
                        out = m
                        break
                except (TypeError, ValueError):
                    continue
        except ValueError:
            pass
        if out is None:
            raise ValidationError(f"row {row}: label {raw!r} missing from label_map")
    if out not in (1, -1):
        raise ConfigurationError(f"label_map must map onto +1/-1, got {out!r}")
    return int(out)


def _read_table(path, label_column, task_column, label_map, skip=()):
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ParseError(f"{path}: empty file, header row expected") from None
        for col in (label_column, task_column):
            if col is not None and col not in header:
                raise ConfigurationError(f"{path}: no column named {col!r}")
        li = header.index(label_column) if label_column is not None else None
        ti = header.index(task_column) if task_column is not None else None
        fcols = [i for i in range(len(header)) if i not in (li, ti) and header[i] not in skip]
        X, y, tasks = [], [], []
        for r, rec in enumerate(reader, start=1):
            if not rec or all(not c.strip() for c in rec):
                continue
            if len(rec) != len(header):
                raise ParseError(f"row {r}: expected {len(header)} cells, got {len(rec)}")
            try:
                feats = [float(rec[i]) for i in fcols]
            except ValueError:
                bad = next(i for i in fcols if not _is_float(rec[i]))
                raise ParseError(
                    f"row {r}: non-numeric value {rec[bad]!r} in column {header[bad]!r}"
                ) from None
            if not all(math.isfinite(v) for v in feats):
                raise ParseError(f"row {r}: non-finite feature value")
            X.append(feats)
            if li is not None:
                y.append(_map_label(rec[li].strip(), label_map, r))
            if ti is not None:
                try:
                    tasks.append(int(rec[ti]))
                except ValueError:
                    raise ParseError(f"row {r}: task id {rec[ti]!r} is not an integer") from None
    X = np.array(X, dtype=float).reshape(len(X), len(fcols))
    return X, np.array(y, dtype=int), (np.array(tasks, dtype=int) if ti is not None else None), tuple(
        header[i] for i in fcols
    )


def _is_float(s: str) -> bool:
    try:
        float(s)
    except ValueError:
        return False
    return True


def read_rows(path, label_column: str = "label", label_map=None) -> LabeledRows:
    """Read a labelled CSV without grouping it into tasks."""
    X, y, _, columns = _read_table(path, label_column, None, label_map)
    return LabeledRows(X, y, columns)


def read_features(path, task_column: str = "task", ignore=("label",)):
    """Read unlabelled rows for prediction.

    Returns ``(X, task, columns)``; columns named in ``ignore`` are skipped
    when present. ``task`` is None when the file has no ``task_column``.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        header = [h.strip() for h in next(csv.reader(fh), [])]
    if not header:
        return np.empty((0, 0)), None, ()
    task_column = task_column if task_column in header else None
    X, _, task, columns = _read_table(path, None, task_column, None, skip=tuple(ignore))
    return X, task, columns


def load_csv(path, label_column: str = "label", task_column: str | None = None, label_map=None):
    """Load a CSV file into a :class:`TaskDataset`.

    Parameters
    ----------
    path : str or path-like
        UTF-8, comma separated, header in the first row.
    label_column : str
        Column holding class labels.
    task_column : str, optional
        Integer column with task ids. Without it, all rows form task 1.
    label_map : mapping, optional
        Raw label -> +1/-1. Needed whenever labels are not literally +/-1.
    """
    X, y, task, _ = _read_table(path, label_column, task_column, label_map)
    if len(y) == 0:
        raise ValidationError(f"{path}: no data rows")
    return TaskDataset.from_rows(X, y, task)


def _fmt(v: float) -> str:
    return repr(float(v))


def write_csv(ds: TaskDataset, path, label_column: str = "label", task_column: str = "task"):
    """Write labelled rows with exact (round-trippable) float text."""
    X, y, task = ds.to_rows()
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"x{j + 1}" for j in range(ds.dimension)] + [label_column, task_column])
        for xi, yi, ti in zip(X, y, task):
            w.writerow([_fmt(v) for v in xi] + [int(yi), int(ti)])


# ---------------------------------------------------------------------------
# Partitioning rows into tasks


@dataclass(frozen=True)
class Interval:
    """Numeric interval ``[low, high)``, or ``[low, high]`` with ``closed=True``."""

    low: float
    high: float = math.inf
    closed: bool = False

    def __post_init__(self):
        if not self.low <= self.high:
            raise ConfigurationError(f"empty interval [{self.low}, {self.high}]")

    def contains(self, x: np.ndarray) -> np.ndarray:
        upper = x <= self.high if self.closed else x < self.high
        return (x >= self.low) & upper

    def overlaps(self, other: "Interval") -> bool:
        lo = max(self.low, other.low)
        hi = min(self.high, other.high)
        if lo < hi:
            return True
        if lo > hi:
            return False
        # touching endpoints: shared only when both sides include the point
        def has(iv, p):
            return iv.low <= p and (p < iv.high or (iv.closed and p == iv.high))

        return has(self, lo) and has(other, lo)


@dataclass(frozen=True)
class PartitionRule:
    """Assigns rows to tasks by the value of one column.

    ``bins`` holds one entry per task, in task order: an :class:`Interval`,
    a ``(low, high)`` pair (half-open) or a set of discrete values.
    """

    column: str | int
    bins: tuple
    drop_column: bool = False

    def __post_init__(self):
        if not self.bins:
            raise ConfigurationError("a partition rule needs at least one bin")
        norm = []
        for b in self.bins:
            if isinstance(b, Interval):
                norm.append(b)
            elif isinstance(b, (set, frozenset)):
                norm.append(frozenset(float(v) for v in b))
            elif isinstance(b, tuple) and len(b) == 2:
                norm.append(Interval(float(b[0]), float(b[1])))
            else:
                raise ConfigurationError(f"unsupported bin {b!r}")
        for i in range(len(norm)):
            for j in range(i + 1, len(norm)):
                if _bins_overlap(norm[i], norm[j]):
                    raise ConfigurationError(f"partition bins {i + 1} and {j + 1} overlap")
        object.__setattr__(self, "bins", tuple(norm))

    def assign(self, values: np.ndarray) -> np.ndarray:
        """Task number (1-based) per value, 0 where no bin matches."""
        out = np.zeros(len(values), dtype=int)
        for k, b in enumerate(self.bins, start=1):
            if isinstance(b, Interval):
                hit = b.contains(values)
            else:
                hit = np.isin(values, list(b))
            out[hit & (out == 0)] = k
        return out


def _bins_overlap(a, b) -> bool:
    if isinstance(a, Interval) and isinstance(b, Interval):
        return a.overlaps(b)
    if isinstance(a, frozenset) and isinstance(b, frozenset):
        return bool(a & b)
    iv, vals = (a, b) if isinstance(a, Interval) else (b, a)
    return bool(np.any(iv.contains(np.array(sorted(vals)))))


def partition_tasks(rows: LabeledRows, rule: PartitionRule) -> TaskDataset:
    """Split labelled rows into tasks with ``rule``.

    Rows that fall in no bin are dropped; their count is written to stderr
    and stored in ``TaskDataset.dropped``.
    """
    col = rows.column_index(rule.column)
    assigned = rule.assign(rows.X[:, col])
    dropped = int(np.sum(assigned == 0))
    if dropped:
        print(f"partition_tasks: dropped {dropped} row(s) matching no bin", file=sys.stderr)
    X = np.delete(rows.X, col, axis=1) if rule.drop_column else rows.X
    tasks = []
    for k in range(1, len(rule.bins) + 1):
        sel = assigned == k
        if not np.any(sel):
            raise ValidationError(f"partition bin {k} received no rows")
        tasks.append(
            Task(
                positives=X[sel & (rows.y == 1)].reshape(-1, X.shape[1]),
                negatives=X[sel & (rows.y == -1)].reshape(-1, X.shape[1]),
                task_id=k,
            )
        )
    return TaskDataset(tuple(tasks), dropped=dropped)


# ---------------------------------------------------------------------------
# Scaling


@dataclass(frozen=True)
class ScalingRecord:
    """Per-feature min-max map fitted on one dataset, reusable on new rows."""

    minimum: np.ndarray
    span: np.ndarray

    def transform(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.size == 0:
            return X.reshape(-1, self.minimum.shape[0]) if X.ndim < 2 else X.copy()
        safe = np.where(self.span > 0, self.span, 1.0)
        out = (X - self.minimum) / safe
        return np.where(self.span > 0, out, 0.0)

    def to_arrays(self):
        return np.asarray(self.minimum), np.asarray(self.span)


def normalize(ds: TaskDataset) -> tuple[TaskDataset, ScalingRecord]:
    """Rescale every feature to [0, 1] with min/max taken over all tasks.

    Universum rows take part in the statistics. Constant columns map to 0.
    """
    stacked = np.vstack(
        [np.vstack([t.positives, t.negatives, t.universum]) for t in ds.tasks]
    )
    lo = stacked.min(axis=0)
    span = stacked.max(axis=0) - lo
    rec = ScalingRecord(lo, span)
    return ds.map_features(rec.transform), rec


# ---------------------------------------------------------------------------
# Synthetic problems


def synth_multitask(
    tasks: int = 3,
    per_class: int = 40,
    dimension: int = 2,
    task_shift: float = 1.0,
    noise: float = 0.3,
    seed: int = 0,
    n_samples: int | None = None,
) -> TaskDataset:
    """Related binary tasks: two Gaussian blobs per task.

    All tasks share the direction separating the class means (unit vector
    ``w``; class centres at ``s_t +/- w``). Task ``t`` is displaced by a
    random offset ``s_t`` of norm ``task_shift``, so a single plane is not
    optimal for every task.

    ``n_samples``, when given, replaces ``per_class``: that many rows are
    spread as evenly as possible over all ``2 * tasks`` blobs.
    """
    if n_samples is None:
        sizes = np.full(2 * tasks, per_class)
    else:
        sizes = np.full(2 * tasks, n_samples // (2 * tasks))
        sizes[: n_samples % (2 * tasks)] += 1
    if tasks < 1 or sizes.min() < 2 or dimension < 2:
        raise ValidationError("need tasks >= 1, at least 2 rows per class, dimension >= 2")
    rng = np.random.default_rng(seed)
    w = rng.normal(size=dimension)
    w /= np.linalg.norm(w)
    out = []
    for t in range(tasks):
        s = rng.normal(size=dimension)
        s *= task_shift / np.linalg.norm(s)
        pos = s + w + noise * rng.normal(size=(sizes[2 * t], dimension))
        neg = s - w + noise * rng.normal(size=(sizes[2 * t + 1], dimension))
        out.append(Task(pos, neg, task_id=t + 1))
    return TaskDataset(tuple(out))


def concat_rows(blocks: Iterable[np.ndarray], d: int) -> np.ndarray:
    blocks = [b for b in blocks if b.size]
    return np.vstack(blocks) if blocks else np.empty((0, d))
