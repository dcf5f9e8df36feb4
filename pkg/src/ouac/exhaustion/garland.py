"""Generating garlands: disjoint cones, each heavy under the jump measure, such that
any choice of one vector per cone is a generating sequence.

Exact rank is checked on the (rational) cone axes.  Extending that to every
vector in the cones uses a singular value margin: if each selected vector
is within angle w_i of its axis, the Krylov stack moves by at most
``sqrt(sum_i w_i^2 * sum_k ||A^k||^2)`` in Frobenius norm, and the stack
keeps full rank while that is below its smallest singular value.  The
margin is required to hold with a safety factor of 10.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from ..errors import GeometryError, ParameterError, PreconditionError
from ..exactlin import RationalMatrix, Subspace, Vector, rank, structure
from ..levymodel import InfiniteRay, MeasureSpec, PolynomialCurve, SubspaceAC
from ..streams import Stream
from .decide import decide_exhaustion
from .heymann import krylov_sum

SAFETY_FACTOR = 10.0
_AXIS_DENOMINATOR = 10**9


@dataclass(frozen=True)
class Cone:
    axis: Vector
    half_width: float
    inner_radius: float
    mass: float  # inf, or the exact summed rung mass inside the cone
    exact: bool
    component_id: int

    def unit_axis(self) -> np.ndarray:
        a = np.array([float(x) for x in self.axis])
        return a / np.linalg.norm(a)

    def contains(self, v) -> bool:
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v)
        if nv == 0 or nv < self.inner_radius:
            return False
        return _angle(self.unit_axis(), v / nv) <= self.half_width


@dataclass(frozen=True)
class GarlandCertificate:
    cones: tuple
    mass_bound: float
    krylov_margin: float
    krylov_perturbation: float
    independence_margin: float
    independence_perturbation: float
    safety_factor: float = SAFETY_FACTOR

    @property
    def r(self) -> int:
        return len(self.cones)

    @property
    def sequence(self) -> tuple:
        return tuple(c.axis for c in self.cones)

    def disjoint(self) -> bool:
        return _pairwise_disjoint(self.cones)


def _angle(u: np.ndarray, v: np.ndarray) -> float:
    # atan2 form stays accurate for nearly parallel unit vectors
    return float(math.atan2(np.linalg.norm(u - v * np.dot(u, v)), np.dot(u, v)))


def _pairwise_disjoint(cones) -> bool:
    axes = [c.unit_axis() for c in cones]
    for i in range(len(cones)):
        for j in range(i + 1, len(cones)):
            if _angle(axes[i], axes[j]) <= cones[i].half_width + cones[j].half_width:
                return False
    return True


def _rationalize(u: np.ndarray) -> tuple[Vector, float]:
    axis = tuple(Fraction(float(x)).limit_denominator(_AXIS_DENOMINATOR) for x in u)
    a = np.array([float(x) for x in axis])
    return axis, _angle(u, a / np.linalg.norm(a))


def _curve_group(c: PolynomialCurve, cid: int, start: int, count: int) -> Cone | None:
    """Cone around the chords of rungs start..start+count-1 (rungs at the origin are skipped)."""
    js = np.arange(start, start + 4 * count + 4)
    pts = c.evaluate(js.astype(float) ** (-float(c.beta)))
    norms = np.linalg.norm(pts, axis=1)
    keep = norms > 0
    pts, norms = pts[keep][:count], norms[keep][:count]
    if len(pts) < count:
        return None
    units = pts / norms[:, None]
    mean = units.mean(axis=0)
    if np.linalg.norm(mean) == 0:
        return None
    mean /= np.linalg.norm(mean)
    axis, err = _rationalize(mean)
    width = max(_angle(mean, u) for u in units) + err + 1e-12
    return Cone(axis, width, float(norms.min()), float(c.rung_mass * count), True, cid)


def _certify(A: RationalMatrix, cones: list[Cone]) -> tuple[bool, dict]:
    n = A.rows
    q = structure(A).q
    axes = [c.axis for c in cones]
    if rank(axes) != len(axes) or not krylov_sum(A, axes).is_full:
        return False, {}
    D = np.column_stack([c.unit_axis() for c in cones])
    Af = A.to_numpy()
    powers = [np.linalg.matrix_power(Af, k) for k in range(q)]
    K = np.column_stack([P @ D for P in powers])
    sig_k = float(np.linalg.svd(K, compute_uv=False)[n - 1])
    sig_d = float(np.linalg.svd(D, compute_uv=False)[len(cones) - 1])
    w2 = sum(c.half_width**2 for c in cones)
    pert_k = math.sqrt(w2 * sum(np.linalg.norm(P, 2) ** 2 for P in powers))
    pert_d = math.sqrt(w2)
    info = dict(
        krylov_margin=sig_k,
        krylov_perturbation=pert_k,
        independence_margin=sig_d,
        independence_perturbation=pert_d,
    )
    ok = (
        SAFETY_FACTOR * pert_k < sig_k
        and SAFETY_FACTOR * pert_d < sig_d
        and all(c.half_width < math.pi / 2 for c in cones)
        and _pairwise_disjoint(cones)
    )
    return ok, info


def build_garland(
    A: RationalMatrix,
    spec: MeasureSpec,
    M: float,
    stream: Stream | None = None,
    *,
    max_attempts: int = 30,
) -> GarlandCertificate:
    """Cones about support directions of the witness components, each of mass >= M.

    Rays and subspace components give cones of infinite mass; curve
    components give cones around blocks of consecutive rungs whose summed
    mass reaches M.  Widths shrink (and curve blocks move closer to the
    origin) until the cones are disjoint and the margin certificate holds.
    """
    if not M > 0:
        raise ParameterError(f"mass bound must be > 0, got {M}", field="M")
    verdict = decide_exhaustion(A, spec)
    if not verdict.exhausts:
        raise PreconditionError("the jump measure does not exhaust R^n; no generating garland exists")
    n = spec.ambient_dim
    r = verdict.witness.dim
    ids = verdict.witness_components
    rng = stream.generator() if stream is not None else None

    last_info: dict = {}
    for attempt in range(2 * max_attempts if rng is not None else max_attempts):
        randomize = attempt >= max_attempts
        depth = attempt % max_attempts
        width = 0.25 * 2.0**-depth
        cones: list[Cone] = []
        span = Subspace.zero(n)

        def offer(cone: Cone | None) -> None:
            nonlocal span
            if cone is None or len(cones) == r or span.contains(cone.axis):
                return
            cones.append(cone)
            span = Subspace.span(span.basis + (cone.axis,), n)

        for cid in ids:
            c = spec.components[cid]
            if isinstance(c, InfiniteRay):
                offer(Cone(c.direction, width, 0.0, math.inf, True, cid))
            elif isinstance(c, SubspaceAC):
                vectors = list(c.basis)
                if randomize:
                    vectors = [
                        tuple(sum((int(k) * v[i] for k, v in zip(rng.integers(-3, 4, len(c.basis)), c.basis)), Fraction(0))
                              for i in range(n))
                        for _ in range(2 * len(c.basis))
                    ] + vectors
                for v in vectors:
                    if any(v):
                        offer(Cone(v, width, 0.0, math.inf, True, cid))
        for cid in ids:
            c = spec.components[cid]
            if isinstance(c, PolynomialCurve):
                count = math.ceil(M / float(c.rung_mass))
                start = max(10 * count, 10) * 4**depth
                for g in range(len(c.coefficients) + 3):
                    offer(_curve_group(c, cid, start * 4**g, count))

        if len(cones) < r:
            continue
        ok, last_info = _certify(A, cones)
        if ok:
            return GarlandCertificate(cones=tuple(cones), mass_bound=float(M), **last_info)
    raise GeometryError(f"no certified garland after {max_attempts} refinements (last margins: {last_info})")
