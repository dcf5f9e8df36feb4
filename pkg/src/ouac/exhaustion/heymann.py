"""Generating sequences: independent b_1..b_r in the support whose Krylov spans add up to R^n."""

from __future__ import annotations

import random
from fractions import Fraction

from ..errors import PreconditionError
from ..exactlin import RationalMatrix, Subspace, Vector, krylov_span, rank, structure, subspace_sum
from .decide import is_controllable


def krylov_sum(A: RationalMatrix, vectors) -> Subspace:
    n = A.rows
    return subspace_sum(Subspace.zero(n), *(krylov_span(A, [v]) for v in vectors))


def is_generating_sequence(A: RationalMatrix, vectors) -> bool:
    vectors = [tuple(v) for v in vectors]
    if not vectors:
        return A.rows == 0
    return rank(vectors) == len(vectors) and krylov_sum(A, vectors).is_full


def _combination(basis: list[Vector], coefs: list[int]) -> Vector:
    n = len(basis[0])
    return tuple(sum((c * v[k] for c, v in zip(coefs, basis)), Fraction(0)) for k in range(n))


def heymann_sequence(
    A: RationalMatrix,
    support_span: Subspace,
    *,
    seed: int = 0,
    random_candidates: int = 24,
    reduction_tries: int = 64,
) -> list[Vector]:
    """A generating sequence of length r with kappa <= r <= m.

    Greedy phase: repeatedly take the candidate (basis vectors, their sum,
    then seeded random integer combinations) that enlarges the accumulated
    Krylov span the most.  Reduction phase: look for shorter sequences of
    random combinations, down to the cyclic index.
    """
    if not is_controllable(A, support_span):
        raise PreconditionError("(A, support) is not controllable; no generating sequence exists")
    n = A.rows
    kappa = structure(A).cyclic_index
    basis = list(support_span.basis)
    rng = random.Random(seed)
    candidates = list(basis)
    if len(basis) > 1:
        candidates.append(_combination(basis, [1] * len(basis)))
    for _ in range(random_candidates):
        coefs = [rng.randint(-3, 3) for _ in basis]
        if any(coefs):
            candidates.append(_combination(basis, coefs))

    chosen: list[Vector] = []
    current = Subspace.zero(n)
    while not current.is_full:
        best, best_dim = None, current.dim
        for b in candidates:
            d = (current + krylov_span(A, [b])).dim
            if d > best_dim:
                best, best_dim = b, d
        # a basis vector outside the current invariant span always exists
        assert best is not None
        chosen.append(best)
        current = current + krylov_span(A, [best])

    for target in range(kappa, len(chosen)):
        found = None
        for _ in range(reduction_tries):
            trial = [_combination(basis, [rng.randint(-3, 3) for _ in basis]) for _ in range(target)]
            if is_generating_sequence(A, trial):
                found = trial
                break
        if found is not None:
            chosen = found
            break

    if len(chosen) < kappa:
        raise AssertionError(f"generating sequence of length {len(chosen)} below the cyclic index {kappa}")
    return chosen
