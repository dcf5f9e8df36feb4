"""Canonical drift matrices in dimensions 2 and 3 with their infinity sets.

For each canonical form the infinity set describes where the jump measure
must be infinite for exhaustion to hold.  The descriptions are encoded as
predicates over regions of the form ``inside(S_1..S_k) minus (T_1 u ... u T_l)``;
a region is infinite exactly when some infinite-activity component lies in
every ``S_i`` and in none of the ``T_j`` (for these archetypes a component
not contained in a subspace puts only finitely many atoms, or a null set,
on it).  The batteries compare these hand-coded predicates with the
general decision procedure.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Callable

from ..errors import InapplicableError, ShapeError
from ..exactlin import RationalMatrix, Subspace, det
from ..levymodel import AtomSet, InfiniteRay, MeasureSpec, PolynomialCurve, SubspaceAC, contained_in
from .decide import AbsContinuity, decide_exhaustion


def region_infinite(spec: MeasureSpec, inside=(), outside=()) -> bool:
    n = spec.ambient_dim
    inside = [S if isinstance(S, Subspace) else Subspace.span(S, n) for S in inside]
    outside = [T if isinstance(T, Subspace) else Subspace.span(T, n) for T in outside]
    for c in spec.components:
        if not c.infinite:
            continue
        if all(contained_in(c, S) for S in inside) and not any(contained_in(c, T) for T in outside):
            return True
    return False


def _axis(n: int, i: int) -> tuple:
    return tuple(Fraction(int(k == i)) for k in range(n))


def _coordinate_hyperplane(n: int, i: int) -> Subspace:
    return Subspace.span([_axis(n, k) for k in range(n) if k != i], n)


def _line(n: int, i: int) -> Subspace:
    return Subspace.span([_axis(n, i)], n)


@dataclass(frozen=True)
class CatalogCase:
    label: str
    title: str
    A: RationalMatrix
    kappa: int
    infinity_set: str
    oracle: Callable[[MeasureSpec], bool]


# -- n = 2 -----------------------------------------------------------------------


def _any_infinite(spec: MeasureSpec) -> bool:
    return region_infinite(spec)


def _not_on_a_line(spec: MeasureSpec) -> bool:
    # A line trapping all infinite activity is spanned by one of the generators,
    # so checking the complement of those lines covers the whole family.
    n = spec.ambient_dim
    lines = [Subspace.span([g], n) for c in spec.components if c.infinite for g in c.generator_vectors()]
    return bool(lines) and all(region_infinite(spec, outside=[L]) for L in lines)


def _off_x_axis(spec: MeasureSpec) -> bool:
    return region_infinite(spec, outside=[_line(2, 0)])


def _diag2(spec: MeasureSpec) -> bool:
    x, y = _line(2, 0), _line(2, 1)
    return region_infinite(spec, outside=[x, y]) or (
        region_infinite(spec, inside=[x]) and region_infinite(spec, inside=[y])
    )


# -- n = 3 -----------------------------------------------------------------------

_HX, _HY, _HZ = (_coordinate_hyperplane(3, i) for i in range(3))
_H = {"x": _HX, "y": _HY, "z": _HZ}


def _jordan3(spec: MeasureSpec) -> bool:
    return region_infinite(spec, outside=[_HZ])


def _simple_plus_jordan(spec: MeasureSpec) -> bool:
    # Hx^c n Hz^c, or the two-cone garland {Hz n Hx^c and Hx n Hz^c}.
    return region_infinite(spec, outside=[_HX, _HZ]) or (
        region_infinite(spec, inside=[_HZ], outside=[_HX]) and region_infinite(spec, inside=[_HX], outside=[_HZ])
    )


def _xz_family(spec: MeasureSpec) -> bool:
    # Every H_u with u in the xz-plane must miss some infinite activity; a trapping
    # u is e_x, e_z, or orthogonal to the xz-shadow of a generator.
    candidates = {(1, 0, 0), (0, 0, 1)}
    for c in spec.components:
        if c.infinite:
            for g in c.generator_vectors():
                if g[0] or g[2]:
                    candidates.add((-g[2], 0, g[0]))
    if not spec.infinite_ids():
        return False
    return all(region_infinite(spec, outside=[Subspace.span([u], 3).orthogonal_complement()]) for u in candidates)


def _diag3(spec: MeasureSpec) -> bool:
    if region_infinite(spec, outside=[_HX, _HY, _HZ]):
        return True
    for p, q, r in (("x", "y", "z"), ("y", "x", "z"), ("y", "z", "x"), ("z", "y", "x"), ("z", "x", "y"), ("x", "z", "y")):
        if region_infinite(spec, inside=[_H[p]], outside=[_H[q], _H[r]]) and region_infinite(
            spec, inside=[_H[q]], outside=[_H[p]]
        ):
            return True
    return all(
        region_infinite(spec, inside=[_H[p], _H[q]], outside=[_H[r]])
        for p, q, r in (("x", "y", "z"), ("y", "z", "x"), ("z", "x", "y"))
    )


CASES_2D = (
    CatalogCase("a", "no real eigenvalue", RationalMatrix([[1, 1], [-1, 1]]), 1, "R^2 (any infinite activity)", _any_infinite),
    CatalogCase("b", "multiple of the identity", RationalMatrix([[3, 0], [0, 3]]), 2,
                "{(Vect b)^c : b in R^2} (infinite part not carried by a line)", _not_on_a_line),
    CatalogCase("c", "Jordan cell", RationalMatrix([[2, 1], [0, 2]]), 1, "(Vect (1,0))^c", _off_x_axis),
    CatalogCase("d", "distinct real eigenvalues", RationalMatrix([[1, 0], [0, 2]]), 1,
                "{(Vect e1)^c n (Vect e2)^c} u {Vect e1 and Vect e2}", _diag2),
)

CASES_3D = (
    CatalogCase("f", "Jordan cell J3", RationalMatrix([[2, 1, 0], [0, 2, 1], [0, 0, 2]]), 1, "Hz^c", _jordan3),
    CatalogCase("g", "diag(a) + J2(b), a != b", RationalMatrix([[1, 0, 0], [0, 2, 1], [0, 0, 2]]), 1,
                "{Hx^c n Hz^c} u {Hz n Hx^c and Hx n Hz^c}", _simple_plus_jordan),
    CatalogCase("h", "diag(a) + J2(a)", RationalMatrix([[2, 0, 0], [0, 2, 1], [0, 0, 2]]), 2,
                "{H_u^c : u in Oxz}", _xz_family),
    CatalogCase("i", "three distinct eigenvalues", RationalMatrix([[1, 0, 0], [0, 2, 0], [0, 0, 3]]), 1,
                "Hx^c n Hy^c n Hz^c, six two-cone families {Hp n Hq^c n Hr^c and Hq n Hp^c}, "
                "and {Hx n Hy n Hz^c and Hy n Hz n Hx^c and Hz n Hx n Hy^c} (eight sets)", _diag3),
)


def battery_2d() -> list[tuple[str, MeasureSpec]]:
    """Twelve specs: rays on and off the axes, a plane component, curves and atoms."""
    S = lambda *cs: MeasureSpec(2, cs)  # noqa: E731
    return [
        ("empty", S()),
        ("atoms only", S(AtomSet((((1, 0), 1), ((0, 1), 2), ((1, 1), 1))))),
        ("ray e1", S(InfiniteRay((1, 0)))),
        ("ray e2", S(InfiniteRay((0, 1)))),
        ("ray (1,1)", S(InfiniteRay((1, 1)))),
        ("rays e1, e2", S(InfiniteRay((1, 0)), InfiniteRay((0, 1)))),
        ("two-sided ray (1,-2) + atoms", S(InfiniteRay((1, -2), two_sided=True), AtomSet((((1, 0), 1),)))),
        ("plane component", S(SubspaceAC(((1, 0), (0, 1))))),
        ("parabola y = x^2", S(PolynomialCurve(((1, 0), (0, 1))))),
        ("curve inside the x-axis", S(PolynomialCurve(((1, 0), (2, 0))))),
        ("ray e1 + two-sided ray (2,0)", S(InfiniteRay((1, 0)), InfiniteRay((2, 0), two_sided=True))),
        ("ray e2 + atom e1", S(InfiniteRay((0, 1)), AtomSet((((1, 0), 3),)))),
    ]


def battery_3d() -> list[tuple[str, MeasureSpec]]:
    S = lambda *cs: MeasureSpec(3, cs)  # noqa: E731
    return [
        ("ray (1,1,1)", S(InfiniteRay((1, 1, 1)))),
        ("rays e1, e2", S(InfiniteRay((1, 0, 0)), InfiniteRay((0, 1, 0)))),
        ("rays e1, e2, e3", S(InfiniteRay((1, 0, 0)), InfiniteRay((0, 1, 0)), InfiniteRay((0, 0, 1)))),
        ("rays (0,1,1), (1,1,0)", S(InfiniteRay((0, 1, 1)), InfiniteRay((1, 1, 0)))),
        ("ray e3 + atoms", S(InfiniteRay((0, 0, 1)), AtomSet((((1, 0, 0), 1), ((0, 1, 0), 1))))),
        ("parabola in the xz-plane", S(PolynomialCurve(((1, 0, 0), (0, 0, 1))))),
        ("xy-plane component", S(SubspaceAC(((1, 0, 0), (0, 1, 0))))),
        ("ray (0,1,1) + two-sided ray e1", S(InfiniteRay((0, 1, 1)), InfiniteRay((1, 0, 0), two_sided=True))),
    ]


@dataclass(frozen=True)
class BatteryResult:
    case: str
    spec_name: str
    expected: bool
    verdict: AbsContinuity

    @property
    def agrees(self) -> bool:
        return (self.verdict is AbsContinuity.YES) == self.expected


def run_battery(dim: int) -> list[BatteryResult]:
    cases, battery = (CASES_2D, battery_2d()) if dim == 2 else (CASES_3D, battery_3d()) if dim == 3 else (None, None)
    if cases is None:
        raise ShapeError(f"catalog exists for dimensions 2 and 3, not {dim}")
    out = []
    for case in cases:
        for name, spec in battery:
            v = decide_exhaustion(case.A, spec)
            out.append(BatteryResult(case.label, name, case.oracle(spec), v.abs_continuous))
    return out


def catalog(dim: int) -> list[tuple[CatalogCase, int, int]]:
    """Catalog rows with (agreements, battery size) from running the battery."""
    results = run_battery(dim)
    cases = CASES_2D if dim == 2 else CASES_3D
    return [
        (c, sum(r.agrees for r in results if r.case == c.label), sum(r.case == c.label for r in results)) for c in cases
    ]


def canonical_case_2d(A: RationalMatrix) -> str:
    """Label (a)-(d) of a nonsingular 2x2 drift matrix."""
    if A.shape != (2, 2):
        raise ShapeError(f"expected a 2x2 matrix, got {A.shape}")
    d = det(A)
    if d == 0:
        raise InapplicableError("the classification assumes a nonsingular drift matrix")
    tr = A[0, 0] + A[1, 1]
    disc = tr * tr - 4 * d
    if disc < 0:
        return "a"
    if disc > 0:
        return "d"
    return "b" if A[0, 1] == 0 and A[1, 0] == 0 else "c"
