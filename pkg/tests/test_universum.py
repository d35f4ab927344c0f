import csv

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from numpy.testing import assert_allclose

import umtsvm as m
from umtsvm.data import Task, TaskDataset
from umtsvm.universum import UniversumConfig, export_universum_csv


def one_task(n_pos, n_neg, d=2, task_id=1, seed=0):
    rng = np.random.default_rng(seed)
    return Task(rng.normal(size=(n_pos, d)), rng.normal(size=(n_neg, d)), task_id=task_id)


def test_midpoint():
    ds = TaskDataset((Task([[0.0, 0.0]], [[2.0, 2.0]]),))
    out = m.generate_universum(ds, UniversumConfig(fraction=1.0))
    assert_allclose(out.tasks[0].universum, [[1.0, 1.0]])


def test_half_of_smaller_class():
    out = m.generate_universum(TaskDataset((one_task(10, 6),)), UniversumConfig(fraction=0.5))
    assert out.tasks[0].universum.shape == (3, 2)


def test_rows_are_true_midpoints():
    t = one_task(7, 9)
    U = m.generate_universum(TaskDataset((t,)), UniversumConfig(fraction=1.0, seed=3)).tasks[0].universum
    for u in U:
        # 2u - p must be one of the negatives for some positive p
        cands = 2 * u - t.positives
        assert np.any(np.all(np.isclose(cands[:, None, :], t.negatives[None]), axis=2))


def test_pairing_uses_each_sample_once():
    t = one_task(6, 6)
    U = m.generate_universum(TaskDataset((t,)), UniversumConfig(fraction=1.0, seed=1)).tasks[0].universum
    assert_allclose(U.sum(axis=0), 0.5 * (t.positives.sum(axis=0) + t.negatives.sum(axis=0)))


def test_deterministic():
    ds = m.synth_multitask(3, 10, seed=2)
    a = m.generate_universum(ds, UniversumConfig(seed=4))
    assert a == m.generate_universum(ds, UniversumConfig(seed=4))
    assert a != m.generate_universum(ds, UniversumConfig(seed=5))


def test_labelled_rows_untouched_by_default():
    ds = m.synth_multitask(2, 10, seed=2)
    out = m.generate_universum(ds)
    assert out.without_universum() == ds


def test_consume_removes_pairs():
    ds = TaskDataset((one_task(10, 6),))
    out = m.generate_universum(ds, UniversumConfig(consume=True))
    assert out.tasks[0].positives.shape[0] == 7
    assert out.tasks[0].negatives.shape[0] == 3


def test_pooled_mode():
    ds = TaskDataset((one_task(10, 10, task_id=1), one_task(30, 30, task_id=2, seed=1)))
    out = m.generate_universum(ds, UniversumConfig(per_task=False, fraction=0.5))
    assert out.n_universum == 20
    assert [t.universum.shape[0] for t in out.tasks] == [5, 15]


def test_pooled_consume_keeps_task_membership():
    ds = TaskDataset((one_task(10, 10, task_id=1), one_task(30, 30, task_id=2, seed=1)))
    out = m.generate_universum(ds, UniversumConfig(per_task=False, fraction=0.5, consume=True))
    assert out.n_labeled == 80 - 40
    for t_in, t_out in zip(ds.tasks, out.tasks):
        assert np.all(np.isin(t_out.positives, t_in.positives).all(axis=1))


def test_invalid_fraction():
    with pytest.raises(m.ValidationError):
        UniversumConfig(fraction=0.0)


class TestSplit:
    def ds(self, sizes):
        return TaskDataset(tuple(one_task(n // 2, n - n // 2, task_id=i + 1, seed=i) for i, n in enumerate(sizes)))

    def test_equal(self):
        out = m.split_universum_by_task(np.zeros((10, 2)), self.ds((20, 20)))
        assert [t.universum.shape[0] for t in out.tasks] == [5, 5]

    def test_weights(self):
        out = m.split_universum_by_task(np.zeros((10, 2)), self.ds((20, 20)), weights=(0.7, 0.3))
        assert [t.universum.shape[0] for t in out.tasks] == [7, 3]

    def test_size_proportional(self):
        out = m.split_universum_by_task(np.zeros((8, 2)), self.ds((30, 10)))
        assert [t.universum.shape[0] for t in out.tasks] == [6, 2]

    def test_contiguous_slices(self):
        U = np.arange(20.0).reshape(10, 2)
        out = m.split_universum_by_task(U, self.ds((20, 20)))
        assert_allclose(np.vstack([t.universum for t in out.tasks]), U)

    def test_too_few_rows(self):
        with pytest.raises(m.ValidationError, match="cannot cover"):
            m.split_universum_by_task(np.zeros((1, 2)), self.ds((4, 4)))

    def test_bad_weights(self):
        with pytest.raises(m.ValidationError):
            m.split_universum_by_task(np.zeros((4, 2)), self.ds((4, 4)), weights=(0.9, 0.3))

    @given(st.integers(3, 60), st.lists(st.integers(2, 40), min_size=1, max_size=3))
    def test_counts_sum(self, n, sizes):
        if n < len(sizes):
            return
        out = m.split_universum_by_task(np.zeros((n, 2)), self.ds(sizes))
        counts = [t.universum.shape[0] for t in out.tasks]
        assert sum(counts) == n
        ideal = n * np.array(sizes) / sum(sizes)
        assert np.all(np.abs(np.array(counts) - ideal) < 1.0)


def test_export(tmp_path):
    ds = m.generate_universum(m.synth_multitask(2, 6, seed=0))
    export_universum_csv(ds, tmp_path / "u.csv")
    rows = list(csv.reader(open(tmp_path / "u.csv")))
    assert rows[0] == ["x1", "x2", "task"]
    assert len(rows) == 1 + ds.n_universum
