"""Exhaustion verdicts for a drift matrix and a jump measure.

The jump measure exhausts R^n with respect to A when some subspace H_r of
its support carries infinite mass off every hyperplane of H_r and its
Krylov span is the whole space.  For a nonsingular drift this is
equivalent to absolute continuity of X_1.
"""

from __future__ import annotations

import enum
import random
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from ..errors import ParameterError, ShapeError
from ..exactlin import RationalMatrix, Subspace, Vector, krylov_span, rank, structure, subspace_sum
from ..levymodel import AtomSet, MeasureSpec, contained_in

MAX_COMPONENTS = 16


class AbsContinuity(str, enum.Enum):
    YES = "yes"
    NO = "no"
    INAPPLICABLE = "theorem-inapplicable-singular-A"


@dataclass(frozen=True)
class ExhaustionVerdict:
    controllable: bool
    exhausts: bool
    tau_zero: bool
    abs_continuous: AbsContinuity
    witness: Subspace | None
    witness_components: tuple | None
    obstruction: tuple | None  # annihilating linear forms, primary first
    kappa: int
    m: int
    q: int
    gaussian: Subspace | None = None
    escape_mass: Fraction | None = None  # atom mass off the Krylov span of the infinite part

    @property
    def r(self) -> int | None:
        return None if self.witness is None else self.witness.dim

    @property
    def functional(self) -> Vector | None:
        return self.obstruction[0] if self.obstruction else None


def is_controllable(A: RationalMatrix, support_span: Subspace) -> bool:
    """Kalman condition: the Krylov span of the support is all of R^n."""
    _check_square(A, support_span.ambient_dim)
    return krylov_span(A, support_span).is_full


def _check_square(A: RationalMatrix, n: int) -> None:
    if not A.is_square:
        raise ShapeError(f"drift matrix must be square, got {A.shape}")
    if A.rows != n:
        raise ShapeError(f"drift matrix is {A.rows}x{A.cols} but the measure lives in R^{n}")


def _fills(A: RationalMatrix, V: Subspace, H: Subspace) -> bool:
    K = krylov_span(A, V)
    return (K + H).is_full if H.dim else K.is_full


def decide_exhaustion(A: RationalMatrix, spec: MeasureSpec) -> ExhaustionVerdict:
    """Decide exhaustion by enumerating subsets of infinite-activity components.

    Candidate subspaces are spans of generator sets of component subsets,
    tried in order of dimension and then lexicographic component ids; the
    first whose Krylov span is R^n is the witness.  Without a witness, the
    annihilator of the Krylov span of every infinite generator is returned
    as the obstruction.
    """
    return _decide(A, spec, None)


def decide_exhaustion_with_gaussian(A: RationalMatrix, spec: MeasureSpec, w_image: Subspace) -> ExhaustionVerdict:
    """Same decision with a Brownian part whose covariance image is ``w_image``.

    Every fullness test becomes ``<A, V> + H = R^n`` with ``H = <A, Im W>``.
    """
    if w_image.ambient_dim != spec.ambient_dim:
        raise ShapeError("Gaussian image lives in the wrong ambient dimension")
    _check_square(A, spec.ambient_dim)
    return _decide(A, spec, krylov_span(A, w_image))


def _decide(A: RationalMatrix, spec: MeasureSpec, H: Subspace | None) -> ExhaustionVerdict:
    n = spec.ambient_dim
    _check_square(A, n)
    ids = spec.infinite_ids()
    if len(ids) > MAX_COMPONENTS:
        raise ParameterError(f"at most {MAX_COMPONENTS} infinite components are supported, got {len(ids)}")
    st = structure(A)
    Hs = H if H is not None else Subspace.zero(n)
    support = spec.support_span()
    m = support.dim
    controllable = _fills(A, support, Hs)
    directions = [v for c in spec.components for v in c.support_vectors()]
    kappa = st.cyclic_index if H is None or H.dim == 0 else gaussian_cyclic_index(A, support, Hs, directions)

    spans = {i: Subspace.span(spec.components[i].generator_vectors(), n) for i in ids}
    candidates: list[tuple[int, tuple, Subspace]] = []
    for size in range(len(ids) + 1):
        for subset in combinations(ids, size):
            V = subspace_sum(Subspace.zero(n), *(spans[i] for i in subset))
            candidates.append((V.dim, subset, V))
    candidates.sort(key=lambda c: (c[0], c[1]))

    witness = None
    witness_ids = None
    tried: dict[Subspace, bool] = {}
    for _, subset, V in candidates:
        if V not in tried:
            tried[V] = _fills(A, V, Hs)
        if tried[V]:
            witness, witness_ids = V, subset
            break

    obstruction = None
    escape = None
    if witness is not None:
        # hyperplane quantifier: the components living in V must span V
        usable = [spans[i] for i in ids if contained_in(spec.components[i], witness)]
        assert subspace_sum(Subspace.zero(n), *usable) == witness
        if not kappa <= witness.dim <= m:
            raise AssertionError(
                f"witness dimension {witness.dim} outside [kappa={kappa}, m={m}]; model class assumption broken"
            )
    else:
        K = krylov_span(A, spec.infinite_span()) + Hs
        obstruction = tuple(K.orthogonal_complement().primitive_basis())
        escape = sum(
            (mass for c in spec.components if isinstance(c, AtomSet) for p, mass in c.atoms if not K.contains(p)),
            Fraction(0),
        )

    exhausts = witness is not None
    if st.is_singular:
        verdict = AbsContinuity.INAPPLICABLE
    else:
        verdict = AbsContinuity.YES if exhausts else AbsContinuity.NO
    return ExhaustionVerdict(
        controllable=controllable,
        exhausts=exhausts,
        tau_zero=exhausts,
        abs_continuous=verdict,
        witness=witness,
        witness_components=witness_ids,
        obstruction=obstruction,
        kappa=kappa,
        m=m,
        q=st.q,
        gaussian=H,
        escape_mass=escape,
    )


def single_shot_exhausts(A: RationalMatrix, spec: MeasureSpec, H: Subspace | None = None) -> bool:
    """The maximal candidate alone decides: <A, span of all infinite generators> (+ H) = R^n."""
    Hs = H if H is not None else Subspace.zero(spec.ambient_dim)
    return _fills(A, spec.infinite_span(), Hs)


def gaussian_cyclic_index(
    A: RationalMatrix, support: Subspace, H: Subspace, directions=(), seed: int = 0
) -> int | None:
    """Least p such that p independent vectors of ``support`` have Krylov spans summing with H to R^n.

    Brute force over support directions and seeded random combinations;
    None when even the whole support does not fill R^n together with H.
    """
    n = support.ambient_dim
    if not _fills(A, support, H):
        return None
    if H.is_full:
        return 0
    rng = random.Random(seed)
    basis = list(support.basis)
    pool = [tuple(v) for v in directions] + basis + [tuple(sum(c * v[k] for c, v in zip(coefs, basis)) for k in range(n))
                    for coefs in ([rng.randint(-3, 3) for _ in basis] for _ in range(2 * len(basis) + 4))]
    pool = list(dict.fromkeys(v for v in pool if any(v)))
    for p in range(1, support.dim + 1):
        for combo in combinations(pool, p):
            if rank(combo) == p and _fills(A, Subspace.span(combo, n), H):
                return p
    raise AssertionError("unreachable: the full support basis fills R^n")  # pragma: no cover
