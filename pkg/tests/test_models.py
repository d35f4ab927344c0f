import time

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

import umtsvm as m
from umtsvm.assembly import build_blocks, build_side
from umtsvm.kernel import KernelSpec
from umtsvm.models import (
    TrainedModel,
    decision_distances,
    ls_primal_gradient,
    ls_primal_objective,
    qp_primal_objective,
)

from conftest import blobs


def side_ops(ds, hp):
    blocks = build_blocks(ds, hp.kernel)
    return [build_side(blocks, s, hp) for s in ("first", "second")]


def plane_model(u, v):
    return TrainedModel(
        method="mtls",
        u0=np.asarray(u, float),
        v0=np.asarray(v, float),
        u_t=np.zeros((1, len(u))),
        v_t=np.zeros((1, len(v))),
        task_ids=(1,),
        hp=m.Hyperparams(),
    )


def assert_same_planes(a, b):
    for name in ("u0", "v0", "u_t", "v_t"):
        assert np.array_equal(getattr(a, name), getattr(b, name)), name
    assert a.task_ids == b.task_ids


def assert_same_model(a, b):
    assert_same_planes(a, b)
    assert a.method == b.method and a.hp == b.hp


class TestHyperparams:
    def test_epsilon_range(self):
        with pytest.raises(m.ValidationError, match=r"epsilon must lie in \(0,1\)"):
            m.Hyperparams(epsilon=1.5)

    @pytest.mark.parametrize("field", ["c1", "c2", "mu1", "mu2"])
    def test_positive(self, field):
        with pytest.raises(m.ValidationError, match=field):
            m.Hyperparams(**{field: 0.0})

    def test_universum_penalty_may_be_zero(self):
        m.Hyperparams(c_u=0.0, c_u_star=0.0)
        with pytest.raises(m.ValidationError):
            m.Hyperparams(c_u=-1.0)

    def test_dict_round_trip(self):
        hp = m.Hyperparams(c1=2.0, kernel=KernelSpec("gaussian", 0.5))
        assert m.Hyperparams.from_dict(hp.to_dict()) == hp
        assert hp.replace(gamma=4.0).kernel.gamma == 4.0


class TestFit:
    def test_separable_training_accuracy(self):
        ds = m.synth_multitask(2, 30, 2, 1.0, 0.1, seed=3)
        model = m.fit_dmtsvm(ds, m.Hyperparams())
        X, y, task = ds.to_rows()
        assert m.accuracy(m.predict_batch(model, X, task), y) == 100.0

    @pytest.mark.parametrize("kernel", [m.kernel.LINEAR, KernelSpec("gaussian", 1.0)])
    def test_reductions_bit_equal(self, kernel):
        ds = blobs(tasks=3, per_class=10, seed=8)
        hp = m.Hyperparams(kernel=kernel)
        bare = ds.without_universum()
        X, _, task = ds.to_rows()
        probes = np.random.default_rng(0).uniform(0, 1, size=(50, 2))
        ptask = np.resize(ds.task_ids, 50)
        for with_u, base in (("umtsvm", "dmtsvm"), ("ls_umtsvm", "mtls")):
            a = m.fit(bare, hp, with_u)
            b = m.fit(ds, hp, base)
            assert_same_planes(a, b)
            assert_array_equal(m.predict_batch(a, probes, ptask), m.predict_batch(b, probes, ptask))

    def test_zero_universum_penalty_equals_baseline(self):
        ds = blobs(seed=3)
        a = m.fit(ds, m.Hyperparams(c_u=0.0, c_u_star=0.0), "ls_umtsvm")
        assert_same_planes(a, m.fit(ds, m.Hyperparams(c_u=0.0, c_u_star=0.0), "mtls"))

    def test_baselines_ignore_universum(self):
        ds = blobs(seed=5)
        assert_same_model(m.fit_mtls_twsvm(ds, m.Hyperparams()), m.fit_mtls_twsvm(ds.without_universum(), m.Hyperparams()))

    def test_unknown_method(self, small_ds):
        with pytest.raises(m.ConfigurationError, match="unknown method"):
            m.fit(small_ds, m.Hyperparams(), "svm")

    @pytest.mark.parametrize("method", m.METHODS)
    def test_task_coupling(self, method):
        ds = blobs(tasks=3, per_class=15, seed=2)
        lo = m.fit(ds, m.Hyperparams(mu1=2.0**-10, mu2=2.0**-10), method)
        hi = m.fit(ds, m.Hyperparams(mu1=2.0**10, mu2=2.0**10), method)
        assert lo.converged and hi.converged
        assert np.all(np.linalg.norm(hi.u_t, axis=1) < np.linalg.norm(lo.u_t, axis=1))
        assert np.all(np.linalg.norm(hi.v_t, axis=1) < np.linalg.norm(lo.v_t, axis=1))

    def test_continuous_in_universum_penalty(self):
        ds = blobs(seed=4)
        a = m.fit_umtsvm(ds, m.Hyperparams(c_u=1e-4, c_u_star=1e-4, qp_tol=1e-10))
        b = m.fit_umtsvm(ds, m.Hyperparams(c_u=1e-4 + 1e-6, c_u_star=1e-4 + 1e-6, qp_tol=1e-10))
        assert np.all(a.dual.alpha2 <= 1e-4)
        for name in ("u0", "v0", "u_t", "v_t"):
            assert np.abs(getattr(a, name) - getattr(b, name)).max() <= 1e-3

    def test_ls_multipliers_scale_with_penalty(self):
        ds = blobs(seed=6, universum=False)
        norms = []
        for c in (1e-4, 1e-5):
            model = m.fit_mtls_twsvm(ds, m.Hyperparams(c1=c, c2=c))
            norms.append(np.linalg.norm(model.info["multipliers"][0][0]))
        assert norms[0] / norms[1] == pytest.approx(10.0, rel=1e-2)

    def test_ls_faster_than_qp(self):
        ds, _ = m.normalize(m.synth_multitask(3, n_samples=500, noise=0.5, seed=0))
        m.fit_dmtsvm(ds, m.Hyperparams())  # warm up
        t0 = time.perf_counter()
        m.fit_mtls_twsvm(ds, m.Hyperparams())
        t_ls = time.perf_counter() - t0
        t0 = time.perf_counter()
        m.fit_dmtsvm(ds, m.Hyperparams())
        assert t_ls < time.perf_counter() - t0

    def test_universum_not_worse_than_baseline(self):
        diffs = []
        for seed in range(10):
            ds = m.synth_multitask(2, 20, 2, 1.0, 0.8, seed=seed)
            hp = m.Hyperparams(c_u=0.25, c_u_star=0.25)
            diffs.append(
                m.cross_validate("umtsvm", ds, hp, seed=seed).mean_accuracy
                - m.cross_validate("dmtsvm", ds, hp, seed=seed).mean_accuracy
            )
        assert np.mean(diffs) >= -1.0


class TestOptimality:
    @pytest.mark.parametrize("kernel", [m.kernel.LINEAR, KernelSpec("gaussian", 2.0)])
    def test_duality_gap(self, kernel):
        ds = blobs(tasks=3, per_class=12, seed=1)
        hp = m.Hyperparams(kernel=kernel, mu1=0.5, mu2=2.0)
        model = m.fit_umtsvm(ds, hp)
        assert model.converged
        planes = [(model.u0, model.u_t), (model.v0, model.v_t)]
        for op, (w0, wt), dual in zip(side_ops(ds, hp), planes, model.dual.objectives):
            gap = qp_primal_objective(op, w0, wt) - dual
            assert -1e-8 * (1 + abs(dual)) <= gap <= 1e-4 * (1 + abs(dual))

    def test_ls_stationarity(self):
        ds = blobs(tasks=2, per_class=10, seed=7)
        hp = m.Hyperparams(c1=2.0, c_u=0.5, mu1=0.7)
        model = m.fit_ls_umtsvm(ds, hp)
        planes = [(model.u0, model.u_t), (model.v0, model.v_t)]
        for op, (w0, wt) in zip(side_ops(ds, hp), planes):
            g0, gt = ls_primal_gradient(op, w0, wt)
            assert np.sqrt(np.sum(g0**2) + np.sum(gt**2)) <= 1e-6

    def test_ls_gradient_matches_finite_differences(self, rng):
        ds = blobs(tasks=2, per_class=8, seed=3)
        op = side_ops(ds, m.Hyperparams(mu1=0.3))[0]
        w0 = rng.normal(size=3)
        wt = rng.normal(size=(2, 3))
        g0, gt = ls_primal_gradient(op, w0, wt)
        flat = np.r_[w0, wt.ravel()]

        def F(z):
            return ls_primal_objective(op, z[:3], z[3:].reshape(2, 3))

        h = 1e-6
        fd = np.array([(F(flat + h * e) - F(flat - h * e)) / (2 * h) for e in np.eye(flat.size)])
        assert_allclose(np.r_[g0, gt.ravel()], fd, rtol=1e-6, atol=1e-6)

    def test_slacks_follow_multipliers(self):
        ds = blobs(tasks=2, per_class=10, seed=2)
        hp = m.Hyperparams(c1=3.0, c_u=0.5)
        model = m.fit_ls_umtsvm(ds, hp)
        op = side_ops(ds, hp)[0]
        z = np.concatenate(model.info["multipliers"][0])
        assert_allclose(op.residual_rows(model.u0, model.u_t), z / op.penalty, atol=1e-8)


class TestPredict:
    def test_nearest_plane(self):
        model = plane_model([1.0, 0.0, 0.0], [0.0, 1.0, 0.0])
        d1, d2 = decision_distances(model, [[0.1, 5.0]], [1])
        assert d1[0] == pytest.approx(0.1) and d2[0] == pytest.approx(5.0)
        assert m.predict(model, [0.1, 5.0], 1) == 1
        assert m.predict(model, [5.0, 0.1], 1) == -1

    def test_tie_goes_positive(self):
        assert m.predict(plane_model([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [2.0, 2.0], 1) == 1

    def test_unknown_task(self):
        with pytest.raises(KeyError, match="unknown task id 4"):
            m.predict(plane_model([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0], 4)

    def test_dimension_mismatch(self):
        with pytest.raises(m.ValidationError):
            m.predict(plane_model([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]), [0.0, 0.0, 1.0], 1)

    def test_shared_offset_invariance(self, rng):
        ds = blobs(tasks=3, seed=0)
        model = m.fit_ls_umtsvm(ds, m.Hyperparams())
        w = rng.normal(size=model.u0.shape)
        shifted = TrainedModel(
            method=model.method,
            u0=model.u0 + w,
            v0=model.v0 - w,
            u_t=model.u_t - w,
            v_t=model.v_t + w,
            task_ids=model.task_ids,
            hp=model.hp,
        )
        X = rng.uniform(size=(100, 2))
        t = np.resize(model.task_ids, 100)
        d = decision_distances(model, X, t)
        ds_ = decision_distances(shifted, X, t)
        assert_allclose(d, ds_, rtol=1e-9, atol=1e-12)

    def test_self_consistency(self):
        ds = blobs(tasks=2, per_class=30, noise=0.15, seed=1)
        X, y, task = ds.to_rows()
        for method in m.METHODS:
            model = m.fit(ds, m.Hyperparams(kernel=KernelSpec("gaussian", 1.0)), method)
            assert m.accuracy(m.predict_batch(model, X, task), y) >= 99.0

    def test_basis_linear_matches_raw_linear(self):
        ds = blobs(tasks=2, per_class=15, seed=5)
        raw = m.fit_ls_umtsvm(ds, m.Hyperparams(delta=1e-9))
        via = m.fit_ls_umtsvm(ds, m.Hyperparams(delta=1e-9, kernel=KernelSpec("linear", use_basis=True)))
        assert via.basis is not None and raw.basis is None
        probes = np.random.default_rng(0).uniform(size=(200, 2))
        t = np.resize(ds.task_ids, 200)
        agree = np.mean(m.predict_batch(raw, probes, t) == m.predict_batch(via, probes, t))
        assert agree >= 0.98


class TestPersistence:
    def test_round_trip_kernel_model(self, tmp_path):
        ds, rec = m.normalize(m.synth_multitask(2, 10, seed=0))
        model = m.fit_umtsvm(m.generate_universum(ds), m.Hyperparams(kernel=KernelSpec("gaussian", 0.5)))
        model = m.models.replace(model, scaling=rec)
        m.save_model(model, tmp_path / "a.model")
        back = m.load_model(tmp_path / "a.model")
        assert_same_model(model, back)
        assert np.array_equal(back.basis.D, model.basis.D)
        assert np.array_equal(back.scaling.minimum, rec.minimum)
        probes = np.random.default_rng(1).normal(size=(100, 2))
        t = np.resize(model.task_ids, 100)
        assert np.array_equal(m.predict_batch(model, probes, t), m.predict_batch(back, probes, t))
        assert np.array_equal(decision_distances(model, probes, t), decision_distances(back, probes, t))

    def test_corrupted(self, tmp_path):
        p = tmp_path / "bad.model"
        model = m.fit_mtls_twsvm(blobs(), m.Hyperparams())
        m.save_model(model, p)
        raw = p.read_bytes()
        p.write_bytes(raw[: len(raw) // 2])
        with pytest.raises(m.FormatError):
            m.load_model(p)
        p.write_bytes(b"not a model")
        with pytest.raises(m.FormatError):
            m.load_model(p)

    def test_version_mismatch(self, tmp_path, monkeypatch):
        model = m.fit_mtls_twsvm(blobs(), m.Hyperparams())
        monkeypatch.setattr(m.models, "FORMAT_VERSION", 99)
        m.save_model(model, tmp_path / "v.model")
        monkeypatch.undo()
        with pytest.raises(m.FormatError, match="version"):
            m.load_model(tmp_path / "v.model")
