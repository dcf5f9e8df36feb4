"""Exact linear algebra over the rationals.

Everything here works on :class:`fractions.Fraction` values, so ranks,
kernels and spans are decided without any tolerance.  Matrices are small
(the intended scale is n <= 12) and are stored densely as tuples.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache, reduce
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import polynomial as P
from .errors import ShapeError, ValidationError

Vector = tuple  # tuple[Fraction, ...]

_RATIONAL_RE = re.compile(
    r"""^\s*[+-]?(
        \d+\s*/\s*\d+                      # p/q
      | (\d+\.?\d*|\.\d+)([eE][+-]?\d+)?   # integer or decimal
    )\s*$""",
    re.VERBOSE,
)


def to_rational(value) -> Fraction:
    """Convert ``value`` to a Fraction, refusing anything irrational-looking.

    Accepted: ints, Fractions, finite floats (read through their shortest
    decimal repr), and strings such as ``"3"``, ``"-0.25"``, ``"1e-3"`` or
    ``"2/3"``.
    """
    if isinstance(value, bool):
        raise ValidationError(f"expected a rational number, got boolean {value!r}")
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, np.integer)):
        return Fraction(int(value))
    if isinstance(value, (float, np.floating)):
        if not math.isfinite(value):
            raise ValidationError(f"expected a finite rational number, got {value!r}")
        return Fraction(repr(float(value)))
    if isinstance(value, str):
        if not _RATIONAL_RE.match(value):
            raise ValidationError(f"not a rational literal: {value!r}")
        s = value.replace(" ", "")
        try:
            return Fraction(s)
        except ZeroDivisionError:
            raise ValidationError(f"zero denominator in {value!r}") from None
    raise ValidationError(f"expected a rational number, got {type(value).__name__}")


def vec(*xs) -> Vector:
    """Build a rational vector, e.g. ``vec(1, "1/2", 0)``."""
    if len(xs) == 1 and not isinstance(xs[0], (int, str, Fraction, float)):
        xs = tuple(xs[0])
    return tuple(to_rational(x) for x in xs)


def dot(u: Sequence, v: Sequence):
    return sum((a * b for a, b in zip(u, v)), Fraction(0))


def primitive(v: Sequence) -> Vector:
    """Scale a nonzero rational vector to a primitive integer vector.

    The first nonzero entry is made positive, so the result is a canonical
    representative of the line through ``v``.
    """
    v = [Fraction(x) for x in v]
    nz = [x for x in v if x != 0]
    if not nz:
        return tuple(v)
    den = reduce(math.lcm, (x.denominator for x in nz), 1)
    ints = [int(x * den) for x in v]
    g = reduce(math.gcd, (abs(i) for i in ints if i), 0)
    sign = -1 if next(i for i in ints if i) < 0 else 1
    return tuple(Fraction(sign * i // g) for i in ints)


class RationalMatrix:
    """Immutable dense matrix with Fraction entries."""

    __slots__ = ("rows", "cols", "entries", "_hash")

    def __init__(self, entries: Iterable[Iterable], cols: int | None = None):
        rows = tuple(tuple(to_rational(x) for x in row) for row in entries)
        if cols is None:
            cols = len(rows[0]) if rows else 0
        if any(len(r) != cols for r in rows):
            raise ShapeError("ragged matrix rows")
        object.__setattr__(self, "rows", len(rows))
        object.__setattr__(self, "cols", cols)
        object.__setattr__(self, "entries", rows)
        object.__setattr__(self, "_hash", None)

    def __setattr__(self, name, value):
        raise AttributeError("RationalMatrix is immutable")

    def __reduce__(self):
        return (RationalMatrix, (self.entries, self.cols))

    @classmethod
    def identity(cls, n: int) -> "RationalMatrix":
        return cls([[int(i == j) for j in range(n)] for i in range(n)], cols=n)

    @classmethod
    def zeros(cls, rows: int, cols: int) -> "RationalMatrix":
        return cls([[0] * cols for _ in range(rows)], cols=cols)

    @classmethod
    def from_columns(cls, columns: Sequence[Sequence], nrows: int) -> "RationalMatrix":
        if not columns:
            return cls([[] for _ in range(nrows)], cols=0)
        return cls([[c[i] for c in columns] for i in range(nrows)], cols=len(columns))

    @classmethod
    def diag(cls, *values) -> "RationalMatrix":
        n = len(values)
        return cls([[values[i] if i == j else 0 for j in range(n)] for i in range(n)], cols=n)

    @property
    def shape(self) -> tuple[int, int]:
        return self.rows, self.cols

    @property
    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij):
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> Vector:
        return self.entries[i]

    def column(self, j: int) -> Vector:
        return tuple(r[j] for r in self.entries)

    def columns(self) -> list[Vector]:
        return [self.column(j) for j in range(self.cols)]

    @property
    def T(self) -> "RationalMatrix":
        return RationalMatrix(zip(*self.entries), cols=self.rows) if self.rows else RationalMatrix.zeros(self.cols, 0)

    def __eq__(self, other) -> bool:
        return isinstance(other, RationalMatrix) and self.shape == other.shape and self.entries == other.entries

    def __hash__(self) -> int:
        if self._hash is None:
            object.__setattr__(self, "_hash", hash((self.shape, self.entries)))
        return self._hash

    def __repr__(self) -> str:
        body = ", ".join("[" + ", ".join(str(x) for x in r) + "]" for r in self.entries)
        return f"RationalMatrix([{body}])"

    def __add__(self, other: "RationalMatrix") -> "RationalMatrix":
        if self.shape != other.shape:
            raise ShapeError(f"cannot add {self.shape} and {other.shape}")
        return RationalMatrix(
            [[a + b for a, b in zip(r, s)] for r, s in zip(self.entries, other.entries)], cols=self.cols
        )

    def __neg__(self) -> "RationalMatrix":
        return RationalMatrix([[-a for a in r] for r in self.entries], cols=self.cols)

    def __sub__(self, other: "RationalMatrix") -> "RationalMatrix":
        return self + (-other)

    def __mul__(self, c) -> "RationalMatrix":
        c = to_rational(c)
        return RationalMatrix([[c * a for a in r] for r in self.entries], cols=self.cols)

    __rmul__ = __mul__

    def __matmul__(self, other):
        if isinstance(other, RationalMatrix):
            if self.cols != other.rows:
                raise ShapeError(f"cannot multiply {self.shape} by {other.shape}")
            cols = other.columns()
            return RationalMatrix([[dot(r, c) for c in cols] for r in self.entries], cols=other.cols)
        v = tuple(other)
        if len(v) != self.cols:
            raise ShapeError(f"cannot apply {self.shape} matrix to a {len(v)}-vector")
        return tuple(dot(r, v) for r in self.entries)

    def power(self, k: int) -> "RationalMatrix":
        if not self.is_square:
            raise ShapeError("power of a non-square matrix")
        out = RationalMatrix.identity(self.rows)
        base = self
        while k:
            if k & 1:
                out = out @ base
            base = base @ base
            k >>= 1
        return out

    def inverse(self) -> "RationalMatrix":
        if not self.is_square:
            raise ShapeError("inverse of a non-square matrix")
        n = self.rows
        aug = [list(r) + [Fraction(int(i == j)) for j in range(n)] for i, r in enumerate(self.entries)]
        red, piv = rref(aug, 2 * n)
        if piv[:n] != list(range(n)):
            raise ZeroDivisionError("matrix is singular")
        return RationalMatrix([r[n:] for r in red[:n]], cols=n)

    def to_numpy(self) -> np.ndarray:
        return np.array([[float(x) for x in r] for r in self.entries], dtype=float).reshape(self.rows, self.cols)

    def to_strings(self) -> list[list[str]]:
        return [[str(x) for x in r] for r in self.entries]


def _as_rows(M) -> tuple[list[list[Fraction]], int]:
    if isinstance(M, RationalMatrix):
        return [list(r) for r in M.entries], M.cols
    rows = [[to_rational(x) for x in r] for r in M]
    return rows, (len(rows[0]) if rows else 0)


def _integer_rows(rows: list[list[Fraction]]) -> list[list[int]]:
    out = []
    for r in rows:
        den = reduce(math.lcm, (x.denominator for x in r), 1)
        out.append([int(x * den) for x in r])
    return out


def rank(M) -> int:
    """Exact rank by fraction-free (Bareiss) elimination on integer rows."""
    rows, ncols = _as_rows(M)
    a = _integer_rows(rows)
    nrows = len(a)
    r = 0
    prev = 1
    for c in range(ncols):
        if r == nrows:
            break
        piv = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        for i in range(r + 1, nrows):
            f = a[i][c]
            row_i, row_r = a[i], a[r]
            a[i] = [(p * row_i[j] - f * row_r[j]) // prev for j in range(ncols)]
        prev = p
        r += 1
    return r


def det(M: RationalMatrix) -> Fraction:
    if not M.is_square:
        raise ShapeError("determinant of a non-square matrix")
    n = M.rows
    if n == 0:
        return Fraction(1)
    rows = [list(r) for r in M.entries]
    dens = [reduce(math.lcm, (x.denominator for x in r), 1) for r in rows]
    a = [[int(x * d) for x in r] for r, d in zip(rows, dens)]
    sign = 1
    prev = 1
    for k in range(n - 1):
        piv = next((i for i in range(k, n) if a[i][k] != 0), None)
        if piv is None:
            return Fraction(0)
        if piv != k:
            a[k], a[piv] = a[piv], a[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                a[i][j] = (a[i][j] * a[k][k] - a[i][k] * a[k][j]) // prev
        prev = a[k][k]
    total_den = math.prod(dens)
    return Fraction(sign * a[n - 1][n - 1], total_den)


def rref(rows: list[list], ncols: int) -> tuple[list[list[Fraction]], list[int]]:
    """Reduced row echelon form; returns (nonzero rows, pivot columns)."""
    a = [[Fraction(x) for x in r] for r in rows]
    pivots: list[int] = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, len(a)) if a[i][c] != 0), None)
        if piv is None:
            continue
        a[r], a[piv] = a[piv], a[r]
        p = a[r][c]
        if p != 1:
            a[r] = [x / p for x in a[r]]
        for i in range(len(a)):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == len(a):
            break
    return a[:r], pivots


def kernel(M) -> list[Vector]:
    """Basis of the right null space ``{v : M v = 0}``."""
    rows, ncols = _as_rows(M)
    red, pivots = rref(rows, ncols)
    free = [c for c in range(ncols) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * ncols
        v[f] = Fraction(1)
        for r, pc in zip(red, pivots):
            v[pc] = -r[f]
        basis.append(tuple(v))
    return basis


@dataclass(frozen=True)
class Subspace:
    """Linear subspace of Q^n held by its canonical (RREF) basis.

    Two subspaces are equal exactly when their canonical bases are equal,
    so ``==`` is set equality.
    """

    ambient_dim: int
    basis: tuple = ()

    @classmethod
    def span(cls, vectors: Iterable[Sequence], ambient_dim: int) -> "Subspace":
        vs = [tuple(to_rational(x) for x in v) for v in vectors]
        for v in vs:
            if len(v) != ambient_dim:
                raise ShapeError(f"vector of length {len(v)} in ambient dimension {ambient_dim}")
        red, _ = rref(vs, ambient_dim)
        return cls(ambient_dim, tuple(tuple(r) for r in red))

    @classmethod
    def zero(cls, n: int) -> "Subspace":
        return cls(n, ())

    @classmethod
    def full(cls, n: int) -> "Subspace":
        return cls.span(RationalMatrix.identity(n).entries, n)

    @property
    def dim(self) -> int:
        return len(self.basis)

    @property
    def is_full(self) -> bool:
        return self.dim == self.ambient_dim

    def _check(self, other: "Subspace") -> None:
        if self.ambient_dim != other.ambient_dim:
            raise ShapeError(f"ambient dimensions differ: {self.ambient_dim} vs {other.ambient_dim}")

    def contains(self, v: Sequence) -> bool:
        v = tuple(to_rational(x) for x in v)
        if len(v) != self.ambient_dim:
            raise ShapeError(f"vector of length {len(v)} in ambient dimension {self.ambient_dim}")
        return rank(list(self.basis) + [v]) == self.dim

    def contains_subspace(self, other: "Subspace") -> bool:
        self._check(other)
        return all(self.contains(v) for v in other.basis)

    def __add__(self, other: "Subspace") -> "Subspace":
        self._check(other)
        return Subspace.span(self.basis + other.basis, self.ambient_dim)

    def intersection(self, other: "Subspace") -> "Subspace":
        """Intersection through the kernel of the stacked system [S1 | -S2]."""
        self._check(other)
        if not self.basis or not other.basis:
            return Subspace.zero(self.ambient_dim)
        n = self.ambient_dim
        k1 = self.dim
        cols = list(self.basis) + [tuple(-x for x in v) for v in other.basis]
        M = RationalMatrix.from_columns(cols, n)
        out = []
        for coeffs in kernel(M):
            out.append(tuple(sum((coeffs[i] * self.basis[i][j] for i in range(k1)), Fraction(0)) for j in range(n)))
        return Subspace.span(out, n)

    def orthogonal_complement(self) -> "Subspace":
        if not self.basis:
            return Subspace.full(self.ambient_dim)
        return Subspace.span(kernel(self.basis), self.ambient_dim)

    def primitive_basis(self) -> list[Vector]:
        return [primitive(v) for v in self.basis]

    def as_matrix(self) -> RationalMatrix:
        """Basis vectors as the columns of an n x dim matrix."""
        return RationalMatrix.from_columns(list(self.basis), self.ambient_dim)

    def __repr__(self) -> str:
        vs = ", ".join("(" + ", ".join(str(x) for x in v) + ")" for v in self.primitive_basis())
        return f"Subspace(n={self.ambient_dim}, span{{{vs}}})"


def subspace_sum(*spaces: Subspace) -> Subspace:
    if not spaces:
        raise ValueError("need at least one subspace")
    out = spaces[0]
    for s in spaces[1:]:
        out = out + s
    return out


def hyperplane_complement_basis(S: Subspace, H: Subspace) -> list[Vector]:
    """Vectors of ``S``'s basis that extend a basis of ``H`` (a subspace of ``S``) to one of ``S``.

    For a hyperplane H of S this is a single vector off H.
    """
    S._check(H)
    if not S.contains_subspace(H):
        raise ShapeError("H is not contained in S")
    out = []
    cur = H
    for v in S.basis:
        if not cur.contains(v):
            out.append(v)
            cur = Subspace.span(cur.basis + (v,), S.ambient_dim)
    return out


# -- polynomial structure of a square matrix -------------------------------------


def poly_of_matrix(p: P.Poly, A: RationalMatrix) -> RationalMatrix:
    """Evaluate ``p(A)`` by Horner's rule."""
    n = A.rows
    out = RationalMatrix.zeros(n, n)
    eye = RationalMatrix.identity(n)
    for c in reversed(p):
        out = out @ A + eye * c
    return out


def characteristic_polynomial(A: RationalMatrix) -> P.Poly:
    """det(xI - A) via the Faddeev-LeVerrier recursion (exact over Q)."""
    if not A.is_square:
        raise ShapeError("characteristic polynomial of a non-square matrix")
    n = A.rows
    coeffs = [Fraction(0)] * (n + 1)
    coeffs[n] = Fraction(1)
    M = RationalMatrix.zeros(n, n)
    eye = RationalMatrix.identity(n)
    for k in range(1, n + 1):
        M = A @ M + eye * coeffs[n - k + 1]
        AM = A @ M
        tr = sum((AM[i, i] for i in range(n)), Fraction(0))
        coeffs[n - k] = -tr / k
    return tuple(coeffs)


def minimal_polynomial(A: RationalMatrix) -> P.Poly:
    """Monic annihilating polynomial of least degree.

    Scans degrees 1..n for the first linear dependence among the
    vectorised powers I, A, A^2, ...
    """
    if not A.is_square:
        raise ShapeError("minimal polynomial of a non-square matrix")
    n = A.rows
    if n == 0:
        return P.ONE
    powers = [RationalMatrix.identity(n)]
    flat = [tuple(x for r in powers[0].entries for x in r)]
    for d in range(1, n + 1):
        powers.append(powers[-1] @ A)
        flat.append(tuple(x for r in powers[-1].entries for x in r))
        M = RationalMatrix.from_columns(flat, n * n)
        ker = kernel(M)
        if ker:
            (v,) = ker  # first dependence is one-dimensional
            return P.monic(P.normalize(v))
    raise AssertionError("Cayley-Hamilton violated")  # pragma: no cover


def _poly_det(mat: list[list[P.Poly]]) -> P.Poly:
    """Determinant of a square matrix over Q[x] by Bareiss elimination."""
    k = len(mat)
    if k == 0:
        return P.ONE
    a = [list(r) for r in mat]
    sign = 1
    prev = P.ONE
    for i in range(k - 1):
        piv = next((r for r in range(i, k) if a[r][i]), None)
        if piv is None:
            return P.ZERO
        if piv != i:
            a[i], a[piv] = a[piv], a[i]
            sign = -sign
        for r in range(i + 1, k):
            for c in range(i + 1, k):
                num = P.sub(P.mul(a[r][c], a[i][i]), P.mul(a[r][i], a[i][c]))
                a[r][c] = P.exact_div(num, prev)
        prev = a[i][i]
    out = a[k - 1][k - 1]
    return out if sign > 0 else P.neg(out)


def _char_matrix(A: RationalMatrix) -> list[list[P.Poly]]:
    n = A.rows
    return [
        [P.normalize((-A[i, j], Fraction(1))) if i == j else P.normalize((-A[i, j],)) for j in range(n)]
        for i in range(n)
    ]


def _minors_gcd(xa: list[list[P.Poly]], k: int, stop_at_one: bool) -> P.Poly:
    n = len(xa)
    g = P.ZERO
    for rs in combinations(range(n), k):
        for cs in combinations(range(n), k):
            m = _poly_det([[xa[r][c] for c in cs] for r in rs])
            g = P.gcd(g, m)
            if stop_at_one and g == P.ONE:
                return g
    return g


def determinantal_divisors(A: RationalMatrix) -> list[P.Poly]:
    """``[D_1, ..., D_n]``: monic gcds of the k x k minors of xI - A."""
    if not A.is_square:
        raise ShapeError("determinantal divisors of a non-square matrix")
    xa = _char_matrix(A)
    return [_minors_gcd(xa, k, stop_at_one=False) for k in range(1, A.rows + 1)]


def invariant_factors(A: RationalMatrix) -> list[P.Poly]:
    """Invariant factors d_k = D_k / D_{k-1} of xI - A, in divisibility order."""
    D = [P.ONE] + determinantal_divisors(A)
    return [P.exact_div(D[k], D[k - 1]) for k in range(1, len(D))]


def cyclic_index(A: RationalMatrix) -> int:
    """Number of nontrivial invariant factors of xI - A.

    Since D_k divides D_{k+1}, the index is ``n - max{k : D_k = 1}``; the
    search runs downward from k = n - 1 and stops at the first unit gcd.
    """
    if not A.is_square:
        raise ShapeError("cyclic index of a non-square matrix")
    n = A.rows
    if n == 0:
        return 0
    xa = _char_matrix(A)
    for k in range(n - 1, 0, -1):
        if _minors_gcd(xa, k, stop_at_one=True) == P.ONE:
            return n - k
    return n


@dataclass(frozen=True)
class MatrixStructure:
    """Polynomial invariants of a square matrix; coefficient lists are ascending."""

    minimal_polynomial: tuple
    cyclic_index: int
    characteristic_polynomial: tuple
    is_singular: bool

    @property
    def q(self) -> int:
        return P.degree(self.minimal_polynomial)


@lru_cache(maxsize=4096)
def structure(A: RationalMatrix) -> MatrixStructure:
    chi = characteristic_polynomial(A)
    return MatrixStructure(
        minimal_polynomial=minimal_polynomial(A),
        cyclic_index=cyclic_index(A),
        characteristic_polynomial=chi,
        is_singular=(chi[0] == 0) if chi else True,
    )


def krylov_span(A: RationalMatrix, seeds) -> Subspace:
    """``Vect[A^(i-1) e_j : 1 <= i <= q]`` for the seeds e_j.

    ``seeds`` is a :class:`Subspace` or an iterable of vectors.  Powers stop
    at q, the degree of the minimal polynomial (earlier if the span has
    already stabilised, which cannot change the result).
    """
    if not A.is_square:
        raise ShapeError("Krylov span needs a square matrix")
    n = A.rows
    if isinstance(seeds, Subspace):
        if seeds.ambient_dim != n:
            raise ShapeError(f"seed subspace lives in dimension {seeds.ambient_dim}, matrix is {n}x{n}")
        start = list(seeds.basis)
    else:
        start = [tuple(to_rational(x) for x in v) for v in seeds]
    current = Subspace.span(start, n)
    q = structure(A).q
    frontier = list(current.basis)
    for _ in range(1, q):
        frontier = [A @ v for v in frontier]
        nxt = Subspace.span(current.basis + tuple(frontier), n)
        if nxt.dim == current.dim:
            break
        current = nxt
        if current.is_full:
            break
    return current
