"""Finite symbolic descriptions of a jump measure on R^n.

Four archetypes cover the measures this package reasons about:

* :class:`AtomSet`: finitely many point masses (finite activity).
* :class:`InfiniteRay`: radial density ``scale * r**(-1-alpha)`` on a ray
  (or on both halves of a line).
* :class:`SubspaceAC`: the same radial density with a uniform direction on
  the unit sphere of a subspace, hence absolutely continuous there.
* :class:`PolynomialCurve`: point masses on ``gamma(s_j)`` with
  ``gamma(s) = sum_k s**k c_k`` and ``s_j = j**(-beta)``.

All geometry is rational so containment questions are decided exactly.
Samplers draw the jumps of size at least ``eps`` on ``[0, horizon]``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence, Union

import numpy as np

from .errors import ParameterError, ShapeError
from .exactlin import RationalMatrix, Subspace, Vector, rank, to_rational
from .streams import Stream

MAX_CURVE_RUNGS = 10_000_000
_BLOCK = 64


def _rvec(v, name: str) -> Vector:
    try:
        return tuple(to_rational(x) for x in v)
    except Exception as exc:  # noqa: BLE001 - re-raised with the field name
        raise ParameterError(str(exc), field=name) from None


def _positive(x, name: str) -> Fraction:
    x = to_rational(x)
    if x <= 0:
        raise ParameterError(f"must be > 0, got {x}", field=name)
    return x


def _stability(x, name: str = "alpha") -> Fraction:
    x = to_rational(x)
    if not 0 < x < 1:
        raise ParameterError(f"must lie in (0, 1), got {x}", field=name)
    return x


@dataclass(frozen=True)
class AtomSet:
    atoms: tuple  # ((point, mass), ...)

    kind = "atoms"
    infinite = False

    def __post_init__(self):
        atoms = []
        for i, (point, mass) in enumerate(self.atoms):
            p = _rvec(point, f"atoms[{i}].point")
            if not any(p):
                raise ParameterError("an atom cannot sit at the origin", field=f"atoms[{i}].point")
            atoms.append((p, _positive(mass, f"atoms[{i}].mass")))
        object.__setattr__(self, "atoms", tuple(atoms))

    @property
    def dim(self) -> int:
        return len(self.atoms[0][0]) if self.atoms else 0

    @property
    def total_mass(self) -> Fraction:
        return sum((m for _, m in self.atoms), Fraction(0))

    def generator_vectors(self) -> tuple:
        return ()

    def support_vectors(self) -> tuple:
        return tuple(p for p, _ in self.atoms)

    def mapped(self, M: RationalMatrix) -> "AtomSet":
        return AtomSet(tuple((M @ p, m) for p, m in self.atoms))


@dataclass(frozen=True)
class InfiniteRay:
    direction: Vector
    alpha: Fraction = Fraction(1, 2)
    scale: Fraction = Fraction(1)
    two_sided: bool = False

    kind = "ray"
    infinite = True

    def __post_init__(self):
        d = _rvec(self.direction, "direction")
        if not any(d):
            raise ParameterError("direction must be nonzero", field="direction")
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "alpha", _stability(self.alpha))
        object.__setattr__(self, "scale", _positive(self.scale, "scale"))

    @property
    def dim(self) -> int:
        return len(self.direction)

    def generator_vectors(self) -> tuple:
        return (self.direction,)

    support_vectors = generator_vectors

    def tail_rate(self, eps: float) -> float:
        """Mass of {r >= eps}: scale * eps**(-alpha) / alpha."""
        a = float(self.alpha)
        return float(self.scale) * eps ** (-a) / a

    def truncation_bias(self, eps: float) -> float:
        """Expected total size of the omitted jumps per unit time."""
        a = float(self.alpha)
        return float(self.scale) * eps ** (1 - a) / (1 - a)

    def mapped(self, M: RationalMatrix) -> "InfiniteRay":
        return InfiniteRay(M @ self.direction, self.alpha, self.scale, self.two_sided)


@dataclass(frozen=True)
class SubspaceAC:
    basis: tuple
    alpha: Fraction = Fraction(1, 2)
    scale: Fraction = Fraction(1)

    kind = "subspace"
    infinite = True

    def __post_init__(self):
        basis = tuple(_rvec(v, f"basis[{i}]") for i, v in enumerate(self.basis))
        if not basis:
            raise ParameterError("a subspace component needs dimension >= 1", field="basis")
        if len({len(v) for v in basis}) != 1:
            raise ParameterError("basis vectors have different lengths", field="basis")
        if rank(basis) != len(basis):
            raise ParameterError("basis vectors are linearly dependent", field="basis")
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "alpha", _stability(self.alpha))
        object.__setattr__(self, "scale", _positive(self.scale, "scale"))

    @property
    def dim(self) -> int:
        return len(self.basis[0])

    def generator_vectors(self) -> tuple:
        return self.basis

    support_vectors = generator_vectors

    tail_rate = InfiniteRay.tail_rate
    truncation_bias = InfiniteRay.truncation_bias

    def orthonormal_frame(self) -> np.ndarray:
        """Columns form an orthonormal basis of the subspace (floating point)."""
        Q, _ = np.linalg.qr(np.array([[float(x) for x in v] for v in self.basis]).T)
        return Q

    def mapped(self, M: RationalMatrix) -> "SubspaceAC":
        return SubspaceAC(tuple(M @ v for v in self.basis), self.alpha, self.scale)


@dataclass(frozen=True)
class PolynomialCurve:
    coefficients: tuple  # c_1, ..., c_K ; gamma(s) = sum_k s**k c_k
    beta: Fraction = Fraction(2)
    rung_mass: Fraction = Fraction(1)

    kind = "curve"
    infinite = True

    def __post_init__(self):
        cs = tuple(_rvec(v, f"coefficients[{i}]") for i, v in enumerate(self.coefficients))
        if not cs or not any(any(c) for c in cs):
            raise ParameterError("a curve needs at least one nonzero coefficient vector", field="coefficients")
        if len({len(c) for c in cs}) != 1:
            raise ParameterError("coefficient vectors have different lengths", field="coefficients")
        beta = to_rational(self.beta)
        if beta <= Fraction(1, 2):
            raise ParameterError(f"must be > 1/2 so that sum |x|^2 is finite, got {beta}", field="beta")
        object.__setattr__(self, "coefficients", cs)
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "rung_mass", _positive(self.rung_mass, "rung_mass"))

    @property
    def dim(self) -> int:
        return len(self.coefficients[0])

    def generator_vectors(self) -> tuple:
        return tuple(c for c in self.coefficients if any(c))

    support_vectors = generator_vectors

    def coefficient_array(self) -> np.ndarray:
        return np.array([[float(x) for x in c] for c in self.coefficients])

    def rung_parameters(self, count: int) -> np.ndarray:
        return np.arange(1, count + 1, dtype=float) ** (-float(self.beta))

    def evaluate(self, s) -> np.ndarray:
        """Points gamma(s) for an array of parameters, shape (len(s), n)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        C = self.coefficient_array()
        powers = s[:, None] ** np.arange(1, len(C) + 1)[None, :]
        return powers @ C

    def rung_bound(self, eps: float) -> int:
        """Every rung beyond this index has |gamma(s_j)| < eps."""
        total = sum(float(np.linalg.norm(c)) for c in self.coefficient_array())
        count = math.floor((total / eps) ** (1.0 / float(self.beta)))
        if count > MAX_CURVE_RUNGS:
            raise ParameterError(f"truncation level {eps} needs {count} curve rungs", field="eps")
        return count

    def truncation_bias(self, eps: float) -> float:
        """Bound on the expected total size of omitted rung jumps per unit time (inf when beta <= 1)."""
        beta = float(self.beta)
        if beta <= 1:
            return math.inf
        J = self.rung_bound(eps)
        total = sum(float(np.linalg.norm(c)) for c in self.coefficient_array())
        return float(self.rung_mass) * (total * max(J, 1) ** (1 - beta) / (beta - 1) + eps * J)

    def mapped(self, M: RationalMatrix) -> "PolynomialCurve":
        return PolynomialCurve(tuple(M @ c for c in self.coefficients), self.beta, self.rung_mass)


MeasureComponent = Union[AtomSet, InfiniteRay, SubspaceAC, PolynomialCurve]


@dataclass(frozen=True)
class MeasureSpec:
    """A jump measure on R^n as a list of components; ids are list positions."""

    ambient_dim: int
    components: tuple = ()
    b_matrix: RationalMatrix | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "components", tuple(self.components))
        for i, c in enumerate(self.components):
            if c.dim not in (0, self.ambient_dim):
                raise ShapeError(f"component {i} lives in R^{c.dim}, spec is R^{self.ambient_dim}")
        if self.b_matrix is not None:
            if self.b_matrix.rows != self.ambient_dim:
                raise ShapeError(f"B has {self.b_matrix.rows} rows, expected {self.ambient_dim}")
            image = Subspace.span(self.b_matrix.columns(), self.ambient_dim)
            for i, c in enumerate(self.components):
                if not all(image.contains(v) for v in c.support_vectors()):
                    raise ParameterError(f"support of component {i} is not contained in Im B", field="B")

    def __len__(self) -> int:
        return len(self.components)

    def infinite_ids(self) -> list[int]:
        return [i for i, c in enumerate(self.components) if c.infinite]

    def support_span(self) -> Subspace:
        """The space spanned by all component supports; stands in for Im B."""
        vs = [v for c in self.components for v in c.support_vectors()]
        return Subspace.span(vs, self.ambient_dim)

    def infinite_span(self) -> Subspace:
        vs = [v for c in self.components if c.infinite for v in c.generator_vectors()]
        return Subspace.span(vs, self.ambient_dim)

    def finite_mass(self) -> Fraction:
        return sum((c.total_mass for c in self.components if isinstance(c, AtomSet)), Fraction(0))

    def mapped(self, M: RationalMatrix) -> "MeasureSpec":
        """Push the measure forward through the linear map M."""
        return MeasureSpec(self.ambient_dim, tuple(c.mapped(M) for c in self.components))


@dataclass(frozen=True)
class GeneratorSet:
    component_id: int
    vectors: tuple


def generators(spec: MeasureSpec) -> list[GeneratorSet]:
    """One generator set per infinite-activity component, in id order."""
    return [GeneratorSet(i, c.generator_vectors()) for i, c in enumerate(spec.components) if c.infinite]


def component_span(c: MeasureComponent, n: int) -> Subspace:
    return Subspace.span(c.support_vectors(), n)


def contained_in(c: MeasureComponent, V: Subspace) -> bool:
    return all(V.contains(v) for v in c.support_vectors())


def infinite_outside(c: MeasureComponent, H: Subspace, V: Subspace) -> bool:
    """Does ``c`` put infinite mass on ``V`` minus the hyperplane ``H`` of ``V``?

    A component whose support near 0 is not inside V is not usable there,
    and the answer is False.
    """
    if H.ambient_dim != V.ambient_dim:
        raise ShapeError("H and V live in different ambient spaces")
    if H.dim != V.dim - 1 or not V.contains_subspace(H):
        raise ShapeError(f"H (dim {H.dim}) is not a hyperplane of V (dim {V.dim})")
    if not c.infinite:
        return False
    gens = c.generator_vectors()
    if not all(V.contains(g) for g in gens):
        return False
    # rays: the whole ray is off H; subspaces: H meets them in a null set;
    # curves: a nonzero polynomial has finitely many roots among the rungs.
    return any(not H.contains(g) for g in gens)


# -- sampling -------------------------------------------------------------------


def _uniform_rows(gen: np.random.Generator, width: int, threshold: float) -> tuple[np.ndarray, np.ndarray]:
    """Unit-rate Poisson epochs up to ``threshold`` and one uniform row per epoch.

    Rows are drawn in fixed blocks, so a larger threshold only appends
    rows: truncation levels are coupled along a shared stream.
    """
    epochs = []
    rows = []
    last = 0.0
    while True:
        block = gen.random((_BLOCK, width))
        g = last + np.cumsum(-np.log1p(-block[:, 0]))
        keep = g <= threshold
        epochs.append(g[keep])
        rows.append(block[keep])
        if not keep.all():
            break
        last = g[-1]
    return np.concatenate(epochs), np.concatenate(rows)


def sample_jumps(c: MeasureComponent, horizon: float, eps: float, stream: Stream) -> tuple[np.ndarray, np.ndarray]:
    """Jumps of size >= eps on [0, horizon], as ``(times, vectors)`` sorted by time.

    Atoms are included whatever their size (the atom part is finite).
    """
    if not eps > 0:
        raise ParameterError(f"truncation level must be > 0, got {eps}", field="eps")
    if horizon < 0:
        raise ParameterError(f"horizon must be >= 0, got {horizon}", field="horizon")
    n = c.dim
    empty = (np.zeros(0), np.zeros((0, n)))
    if horizon == 0:
        return empty
    gen = stream.generator()

    if isinstance(c, AtomSet):
        times, jumps = [], []
        for point, mass in c.atoms:
            k = gen.poisson(float(mass) * horizon)
            times.append(gen.uniform(0.0, horizon, size=k))
            jumps.append(np.tile(np.array([float(x) for x in point]), (k, 1)))
        if not times:
            return empty
        t, j = np.concatenate(times), np.concatenate(jumps).reshape(-1, n)

    elif isinstance(c, (InfiniteRay, SubspaceAC)):
        a = float(c.alpha)
        rate = horizon * float(c.scale) / a
        threshold = rate * eps ** (-a)
        gamma, rows = _uniform_rows(gen, 3, threshold)
        radii = (gamma / rate) ** (-1.0 / a)
        t = horizon * rows[:, 1]
        if isinstance(c, InfiniteRay):
            d = np.array([float(x) for x in c.direction])
            d = d / np.linalg.norm(d)
            signs = np.where(rows[:, 2] < 0.5, 1.0, -1.0) if c.two_sided else np.ones(len(radii))
            j = (radii * signs)[:, None] * d[None, :]
        else:
            frame = c.orthonormal_frame()
            normals = stream.child(1).generator().standard_normal((len(radii), frame.shape[1]))
            dirs = normals / np.linalg.norm(normals, axis=1, keepdims=True)
            j = radii[:, None] * (dirs @ frame.T)

    elif isinstance(c, PolynomialCurve):
        J = c.rung_bound(eps)
        counts = gen.poisson(float(c.rung_mass) * horizon, size=J)
        all_times = stream.child(1).generator().uniform(0.0, horizon, size=int(counts.sum()))
        points = c.evaluate(c.rung_parameters(J))
        keep_rung = np.linalg.norm(points, axis=1) >= eps
        rung_of = np.repeat(np.arange(J), counts)
        keep = keep_rung[rung_of]
        t = all_times[keep]
        j = points[rung_of[keep]]
    else:  # pragma: no cover
        raise TypeError(f"unknown component type {type(c).__name__}")

    order = np.argsort(t, kind="stable")
    return t[order], j[order].reshape(-1, n)
