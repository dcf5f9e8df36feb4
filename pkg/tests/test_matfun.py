from __future__ import annotations

import math

import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, settings
from hypothesis import strategies as st

from ouac.errors import NumericalFailure, RangeError, ShapeError
from ouac.exactlin import RationalMatrix
from ouac.matfun import expm, psi_eval, psi_matrix


def _rand_rational(rng, n):
    num = rng.integers(-6, 7, (n, n))
    den = rng.integers(1, 4, (n, n))
    return RationalMatrix([[f"{num[i, j]}/{den[i, j]}" for j in range(n)] for i in range(n)])


def test_expm_zero_time_is_identity():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(expm(A, 0.0), np.eye(2))


def test_expm_rotation():
    th = math.pi / 2
    R = expm(np.array([[0, th], [-th, 0]]), 1.0)
    assert np.allclose(R, [[0, 1], [-1, 0]], atol=1e-12, rtol=0)


def test_expm_diagonal():
    E = expm(np.diag([1.0, 2.0]))
    assert np.allclose(E, np.diag([math.e, math.e**2]), rtol=1e-12, atol=0)


def test_expm_batched_times():
    A = np.array([[0.3, 1.0], [-0.5, 0.1]])
    ts = np.array([[0.0, 0.5], [1.5, -2.0]])
    E = expm(A, ts)
    assert E.shape == (2, 2, 2, 2)
    for i in range(2):
        for j in range(2):
            assert np.allclose(E[i, j], scipy.linalg.expm(ts[i, j] * A), rtol=1e-12, atol=1e-14)


def test_expm_errors():
    with pytest.raises(ShapeError):
        expm(np.ones((2, 3)))
    with pytest.raises(RangeError):
        expm(np.eye(2) * 1e5, 1.0)
    with pytest.raises((ValueError, NumericalFailure)):
        expm(np.eye(2), math.nan)


def test_expm_matches_scipy_on_random_inputs():
    rng = np.random.default_rng(3)
    for _ in range(500):
        n = rng.integers(1, 6)
        A = rng.normal(size=(n, n))
        t = rng.uniform(-3, 3)
        ref = scipy.linalg.expm(t * A)
        assert np.linalg.norm(expm(A, t) - ref) <= 1e-12 * max(np.linalg.norm(ref), 1.0) * 10


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 10_000), st.floats(-2, 2), st.floats(-2, 2))
def test_semigroup_and_inverse(seed, s, t):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 5))
    A = rng.normal(size=(n, n))
    Es, Et, Est = expm(A, s), expm(A, t), expm(A, s + t)
    assert np.linalg.norm(Es @ Et - Est) <= 1e-10 * np.linalg.norm(Est)
    I = expm(A, t) @ expm(A, -t)
    assert np.linalg.norm(I - np.eye(n)) <= 1e-10 * np.linalg.norm(expm(A, t)) * np.linalg.norm(expm(A, -t))


def test_derivative_by_central_difference():
    rng = np.random.default_rng(9)
    h = 1e-5
    for _ in range(100):
        n = int(rng.integers(1, 5))
        A = rng.normal(size=(n, n))
        t = rng.uniform(-1, 1)
        fd = (expm(A, t + h) - expm(A, t - h)) / (2 * h)
        exact = A @ expm(A, t)
        assert np.linalg.norm(fd - exact) <= 1e-6 * max(np.linalg.norm(exact), 1.0)


# -- psi ---------------------------------------------------------------------


def test_psi_scalar_matrix():
    ev = psi_eval(RationalMatrix.diag(3, 3), 0.7)
    assert ev.values.shape == (1,)
    assert ev.values[0] == pytest.approx(math.exp(2.1), rel=1e-12)


def test_psi_diag_vandermonde():
    e = math.e
    ev = psi_eval(RationalMatrix.diag(1, 2), 1.0)
    assert ev.values == pytest.approx([2 * e - e**2, e**2 - e], rel=1e-10)


@pytest.mark.parametrize("alpha", [-1, 0, 2])
def test_psi_jordan_cell(alpha):
    ev = psi_eval(RationalMatrix([[alpha, 1], [0, alpha]]), 1.0)
    ea = math.exp(alpha)
    assert ev.values == pytest.approx([ea * (1 - alpha), ea], rel=1e-10, abs=1e-12)


def test_psi_matrix_examples():
    assert psi_matrix(RationalMatrix.identity(1), [0.0]) == pytest.approx(np.array([[1.0]]))
    M = psi_matrix(RationalMatrix.diag(1, 2), [0.0, math.log(2)])
    # exp(t) = psi1 + psi2, exp(2t) = psi1 + 2 psi2 at t = ln 2 gives psi = (0, 2)
    assert M == pytest.approx(np.array([[1.0, 0.0], [0.0, 2.0]]), abs=1e-12)


def test_psi_matrix_errors():
    A = RationalMatrix.diag(1, 2)
    with pytest.raises(ShapeError):
        psi_matrix(A, [0.1])
    with pytest.raises(ValueError):
        psi_matrix(A, [0.1, 0.1])
    with pytest.raises(ShapeError):
        psi_eval(RationalMatrix([[1, 2]]), 0.0)


def test_psi_reconstruction_random():
    rng = np.random.default_rng(21)
    for _ in range(300):
        A = _rand_rational(rng, int(rng.integers(1, 5)))
        t = float(rng.uniform(-5, 5))
        ev = psi_eval(A, t)
        assert ev.residual <= 1e-8 * np.linalg.norm(expm(A.to_numpy(), t))


def test_psi_matrix_nonsingular_almost_always():
    rng = np.random.default_rng(5)
    trials, bad = 10_000, 0
    cache = {}
    for k in range(trials):
        n = int(rng.integers(1, 5))
        key = k % 200
        if key not in cache:
            cache[key] = _rand_rational(rng, n)
        A = cache[key]
        from ouac.exactlin import structure

        q = structure(A).q
        times = rng.uniform(-1, 1, q)
        s = np.linalg.svd(psi_matrix(A, times), compute_uv=False)
        if not s[-1] > 1e-8 * s[0]:
            bad += 1
    assert bad <= 0.001 * trials
