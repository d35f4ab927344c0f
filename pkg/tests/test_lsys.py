import numpy as np
import pytest
from numpy.testing import assert_allclose

import umtsvm as m


def test_identity():
    assert_allclose(m.solve_spd(np.eye(3), np.ones(3)).x, np.ones(3))


def test_diagonal():
    sol = m.solve_spd(np.diag([2.0, 4.0]), np.array([2.0, 8.0]))
    assert_allclose(sol.x, [1.0, 2.0])
    assert sol.residual < 1e-15 and not sol.jittered


def test_random_spd_against_inverse(rng):
    G = rng.normal(size=(30, 30))
    M = G.T @ G + np.eye(30)
    b = rng.normal(size=30)
    assert_allclose(m.solve_spd(M, b).x, np.linalg.inv(M) @ b, rtol=1e-9)


def test_semidefinite_gets_jitter():
    M = np.array([[1.0, 1.0], [1.0, 1.0]])
    sol = m.solve_spd(M, np.array([1.0, 1.0]))
    assert sol.jittered
    assert sol.residual < 1e-6


def test_indefinite_fails():
    with pytest.raises(m.NumericError, match="not positive definite"):
        m.solve_spd(np.diag([1.0, -1.0]), np.ones(2))


def test_non_finite():
    with pytest.raises(m.NumericError):
        m.solve_spd(np.diag([1.0, np.inf]), np.ones(2))


def test_shape_mismatch():
    with pytest.raises(m.ValidationError):
        m.solve_spd(np.eye(2), np.ones(3))
