from __future__ import annotations

import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ouac import polynomial as P
from ouac.errors import ParameterError, ShapeError
from ouac.exactlin import (
    RationalMatrix,
    Subspace,
    characteristic_polynomial,
    cyclic_index,
    det,
    hyperplane_complement_basis,
    kernel,
    krylov_span,
    minimal_polynomial,
    poly_of_matrix,
    primitive,
    rank,
    structure,
    to_rational,
)

from oracles import cyclic_index_oracle, minimal_polynomial_oracle, minor_rank, perm_det

F = Fraction
ints = st.integers(-3, 3)


def square(n):
    return st.lists(st.lists(ints, min_size=n, max_size=n), min_size=n, max_size=n).map(RationalMatrix)


matrices = st.integers(1, 4).flatmap(square)


# -- Rational ---------------------------------------------------------------


@pytest.mark.parametrize(
    "text, value",
    [("3", F(3)), ("-7/14", F(-1, 2)), ("0.25", F(1, 4)), (" 2/3 ", F(2, 3)), (5, F(5)), (F(4, 6), F(2, 3))],
)
def test_to_rational_accepts_exact_forms(text, value):
    assert to_rational(text) == value


@pytest.mark.parametrize("bad", ["pi", "1/0", "sqrt(2)", "", float("nan"), True])
def test_to_rational_rejects(bad):
    with pytest.raises((ParameterError, ValueError, TypeError, ZeroDivisionError)):
        to_rational(bad)


@given(st.integers(-50, 50), st.integers(1, 50))
def test_fractions_stay_normalized(p, q):
    x = to_rational(f"{p}/{q}")
    from math import gcd

    assert x.denominator > 0
    assert gcd(abs(x.numerator), x.denominator) == 1


def test_primitive_clears_denominators():
    assert primitive((F(1, 2), F(-1, 3))) == (3, -2)
    assert primitive((0, -4)) == (0, 1)


# -- rank -------------------------------------------------------------------


def test_rank_examples():
    assert rank(RationalMatrix.zeros(3, 3)) == 0
    for n in range(1, 5):
        assert rank(RationalMatrix.identity(n)) == n
    assert rank(RationalMatrix([[0, 0], [1, 0]])) == 1


def test_rank_matches_minor_oracle_on_sampled_matrices():
    rng = random.Random(20240611)
    for _ in range(10_000):
        r, c = rng.randint(1, 4), rng.randint(1, 4)
        M = [[rng.randint(-2, 2) for _ in range(c)] for _ in range(r)]
        assert rank(RationalMatrix(M)) == minor_rank(M), M


@given(matrices)
def test_det_matches_leibniz(A):
    assert det(A) == perm_det(A.entries)


def test_kernel_vectors_are_annihilated():
    M = RationalMatrix([[1, 2, 3], [2, 4, 6]])
    K = kernel(M)
    assert len(K) == 2
    for v in K:
        assert all(x == 0 for x in M @ v)


def test_inverse_round_trip():
    A = RationalMatrix([[2, 1], [F(1, 3), 1]])
    assert A @ A.inverse() == RationalMatrix.identity(2)


def test_matrix_is_immutable_and_hashable():
    A = RationalMatrix([[1, 2], [3, 4]])
    with pytest.raises(AttributeError):
        A.rows = 3
    assert hash(A) == hash(RationalMatrix([["1", "2"], ["3", "4"]]))


# -- minimal polynomial and cyclic index -----------------------------------


def test_minimal_polynomial_examples():
    assert minimal_polynomial(RationalMatrix.identity(2)) == (F(-1), F(1))
    assert minimal_polynomial(RationalMatrix([[3, 1], [0, 3]])) == P.from_roots([3, 3])
    D = RationalMatrix.diag(1, 2, 3)
    mp = minimal_polynomial(D)
    assert mp == P.from_roots([1, 2, 3])
    assert mp == tuple(minimal_polynomial_oracle(D.entries))


@pytest.mark.parametrize(
    "A, kappa",
    [
        ([[1, 1], [-1, 1]], 1),
        ([[0, 1], [-1, 0]], 1),
        ([[3, 0], [0, 3]], 2),
        ([[2, 0, 0], [0, 2, 1], [0, 0, 2]], 2),
        ([[2, 1, 0], [0, 2, 1], [0, 0, 2]], 1),
        ([[0, 0], [1, 0]], 1),
        ([[0, 0, 0], [0, 0, 0], [0, 0, 0]], 3),
    ],
)
def test_cyclic_index_examples(A, kappa):
    assert cyclic_index(RationalMatrix(A)) == kappa
    assert cyclic_index_oracle(A) == kappa


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_minimal_polynomial_annihilates_and_is_least(A):
    mp = minimal_polynomial(A)
    n = A.rows
    assert mp[-1] == 1
    assert poly_of_matrix(mp, A) == RationalMatrix.zeros(n, n)
    assert list(mp) == minimal_polynomial_oracle(A.entries)
    assert P.divides(mp, characteristic_polynomial(A))


@settings(max_examples=200, deadline=None)
@given(matrices)
def test_cyclic_one_iff_minimal_equals_characteristic(A):
    st_ = structure(A)
    assert 1 <= st_.cyclic_index <= A.rows
    assert st_.q <= A.rows
    assert (st_.cyclic_index == 1) == (st_.minimal_polynomial == st_.characteristic_polynomial)
    assert st_.is_singular == (det(A) == 0)


def _random_unimodular(rng, n):
    P_ = RationalMatrix.identity(n)
    for _ in range(3 * n):
        i, j = rng.sample(range(n), 2) if n > 1 else (0, 0)
        E = [list(r) for r in RationalMatrix.identity(n).entries]
        if i != j:
            E[i][j] = F(rng.randint(-2, 2), rng.randint(1, 3))
        else:
            E[i][i] = F(rng.choice([-2, -1, 2, 3]))
        P_ = P_ @ RationalMatrix(E)
    return P_


def test_similarity_invariance():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(1, 4)
        A = RationalMatrix([[rng.randint(-2, 2) for _ in range(n)] for _ in range(n)])
        Pm = _random_unimodular(rng, n)
        B = Pm.inverse() @ A @ Pm
        assert minimal_polynomial(B) == minimal_polynomial(A)
        assert cyclic_index(B) == cyclic_index(A)


# -- Krylov -------------------------------------------------------------------


def test_krylov_examples():
    K = RationalMatrix([[0, 0], [1, 0]])
    assert krylov_span(K, Subspace.zero(2)).dim == 0
    assert krylov_span(K, [(1, 0)]).is_full
    assert krylov_span(RationalMatrix.diag(1, 2), [(1, 1)]).is_full
    assert krylov_span(RationalMatrix.identity(2), [(1, 0)]) == Subspace.span([(1, 0)], 2)


def test_krylov_dimension_mismatch():
    with pytest.raises(ShapeError):
        krylov_span(RationalMatrix.identity(2), Subspace.full(3))


@settings(max_examples=150, deadline=None)
@given(st.integers(1, 4).flatmap(lambda n: st.tuples(square(n), st.lists(st.lists(ints, min_size=n, max_size=n), max_size=3))))
def test_krylov_invariant_idempotent_monotone(data):
    A, seeds = data
    n = A.rows
    S = Subspace.span(seeds, n)
    K = krylov_span(A, S)
    assert K.contains_subspace(S)
    assert all(K.contains(A @ v) for v in K.basis)
    assert krylov_span(A, K) == K
    bigger = Subspace.span(list(seeds) + [[1] * n], n)
    assert krylov_span(A, bigger).contains_subspace(K)


# -- subspace algebra ---------------------------------------------------------------


def test_subspace_operations():
    x = Subspace.span([(1, 0)], 2)
    y = Subspace.span([(0, 1)], 2)
    assert (x + y).is_full
    z0 = Subspace.span([(1, 0, 0), (0, 1, 0)], 3)
    y0 = Subspace.span([(1, 0, 0), (0, 0, 1)], 3)
    assert z0.intersection(y0) == Subspace.span([(1, 0, 0)], 3)
    assert Subspace.span([(1, 1)], 2).contains((2, 2))
    assert not Subspace.span([(1, 1)], 2).contains((2, 1))
    assert Subspace.span([(2, 4)], 2) == Subspace.span([(F(1, 2), 1)], 2)


def test_subspace_dimension_mismatch():
    with pytest.raises(ShapeError):
        Subspace.full(2) + Subspace.full(3)
    with pytest.raises(ShapeError):
        Subspace.full(2).contains((1, 2, 3))


def test_hyperplane_complement_basis():
    S = Subspace.full(3)
    H = Subspace.span([(1, 1, 0), (0, 0, 1)], 3)
    (v,) = hyperplane_complement_basis(S, H)
    assert (H + Subspace.span([v], 3)).is_full


@given(st.lists(st.lists(ints, min_size=3, max_size=3), max_size=3), st.lists(st.lists(ints, min_size=3, max_size=3), max_size=3))
def test_intersection_and_sum_dimensions(a, b):
    S, T = Subspace.span(a, 3), Subspace.span(b, 3)
    I = S.intersection(T)
    assert S.contains_subspace(I) and T.contains_subspace(I)
    assert S.dim + T.dim == (S + T).dim + I.dim
    comp = S.orthogonal_complement()
    assert comp.dim == 3 - S.dim
    assert all(sum(x * y for x, y in zip(u, v)) == 0 for u in comp.basis for v in S.basis)
