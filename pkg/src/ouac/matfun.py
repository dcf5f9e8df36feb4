"""Floating point matrix exponential and the coordinates of exp(tA) in {I, A, ..., A^(q-1)}."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalFailure, RangeError, ShapeError
from .exactlin import RationalMatrix, structure

PSI_RESIDUAL_TOL = 1e-8

# Pade coefficients b_0..b_m (Higham 2005, "The scaling and squaring method revisited").
_PADE = {
    3: (120.0, 60.0, 12.0, 1.0),
    5: (30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0),
    7: (17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0),
    9: (
        17643225600.0, 8821612800.0, 2075673600.0, 302702400.0, 30270240.0,
        2162160.0, 110880.0, 3960.0, 90.0, 1.0,
    ),
    13: (
        64764752532480000.0, 32382376266240000.0, 7771770303897600.0,
        1187353796428800.0, 129060195264000.0, 10559470521600.0,
        670442572800.0, 33522128640.0, 1323241920.0, 40840800.0,
        960960.0, 16380.0, 182.0, 1.0,
    ),
}
# 1-norm thresholds below which the degree-m approximant is accurate to unit roundoff.
_THETA = {3: 1.495585217958292e-2, 5: 2.539398330063230e-1, 7: 9.504178996162932e-1,
          9: 2.097847961257068e0, 13: 5.371920351148152e0}
_MAX_SQUARINGS = 1000


def _pade(A: np.ndarray, m: int) -> np.ndarray:
    b = _PADE[m]
    n = A.shape[-1]
    eye = np.broadcast_to(np.eye(n), A.shape)
    A2 = A @ A
    if m == 13:
        A4 = A2 @ A2
        A6 = A4 @ A2
        U = A @ (A6 @ (b[13] * A6 + b[11] * A4 + b[9] * A2) + b[7] * A6 + b[5] * A4 + b[3] * A2 + b[1] * eye)
        V = A6 @ (b[12] * A6 + b[10] * A4 + b[8] * A2) + b[6] * A6 + b[4] * A4 + b[2] * A2 + b[0] * eye
    else:
        U = b[1] * eye
        V = b[0] * eye
        A2k = eye
        for k in range(1, m // 2 + 1):
            A2k = A2k @ A2
            U = U + b[2 * k + 1] * A2k
            V = V + b[2 * k] * A2k
        U = A @ U
    return np.linalg.solve(V - U, V + U)


def expm(A, t=1.0) -> np.ndarray:
    """``exp(t A)`` by scaling and squaring with a Pade approximant.

    ``A`` may be a single ``(n, n)`` matrix or a stack ``(..., n, n)``; ``t``
    broadcasts against the stack shape.  Each matrix picks its own Pade
    degree and squaring count from its 1-norm, so a result never depends
    on which other matrices share the call.
    """
    if isinstance(A, RationalMatrix):
        A = A.to_numpy()
    A = np.asarray(A, dtype=float)
    if A.ndim < 2 or A.shape[-1] != A.shape[-2]:
        raise ShapeError(f"expm needs square matrices, got shape {A.shape}")
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)):
        raise ValueError("t must be finite")
    batch = np.broadcast_shapes(A.shape[:-2], t.shape)
    n = A.shape[-1]
    M = np.ascontiguousarray(np.broadcast_to(A, batch + (n, n)) * t.reshape(t.shape + (1, 1)))
    if n == 0:
        return M
    flat = M.reshape(-1, n, n)
    norms = np.abs(flat).sum(axis=-2).max(axis=-1)
    if not np.all(np.isfinite(norms)):
        raise RangeError("non-finite entries in tA")
    # Group by (degree, squarings) so a matrix's arithmetic is independent of its batch-mates.
    keys = _group_keys(norms)
    out = np.empty_like(flat)
    for key in np.unique(keys):
        idx = np.nonzero(keys == key)[0]
        out[idx] = _expm_fixed(np.ascontiguousarray(flat[idx]), int(key))
    if not np.all(np.isfinite(out)):
        raise RangeError("matrix exponential overflowed")
    return out.reshape(batch + (n, n))


def _group_keys(norms: np.ndarray) -> np.ndarray:
    keys = np.full(norms.shape, -1, dtype=np.int64)
    with np.errstate(divide="ignore"):
        s = np.ceil(np.log2(np.maximum(norms, 1e-300) / _THETA[13]))
    big = norms > _THETA[9]
    if np.any(s[big] > _MAX_SQUARINGS):
        raise RangeError("norm of tA is too large for the matrix exponential")
    keys[big] = np.maximum(0, s[big]).astype(np.int64)
    for k, m in reversed(list(enumerate((3, 5, 7, 9)))):
        keys[norms <= _THETA[m]] = -4 + k
    return keys


def _expm_fixed(M: np.ndarray, key: int) -> np.ndarray:
    if key < 0:
        return _pade(M, (3, 5, 7, 9)[key + 4])
    E = _pade(M / 2.0**key, 13)
    with np.errstate(over="ignore", invalid="ignore"):  # overflow is reported by the caller
        for _ in range(key):
            E = E @ E
    return E


@dataclass(frozen=True)
class PsiEvaluation:
    t: float
    values: np.ndarray
    residual: float


def _power_basis(A: RationalMatrix) -> np.ndarray:
    q = structure(A).q
    n = A.rows
    powers = []
    Af = A.to_numpy()
    cur = np.eye(n)
    for _ in range(q):
        powers.append(cur)
        cur = cur @ Af
    return np.stack(powers) if powers else np.zeros((0, n, n))


def psi_eval(A: RationalMatrix, t: float) -> PsiEvaluation:
    """Coordinates psi_1(t)..psi_q(t) with exp(tA) = sum_r psi_r(t) A^(r-1).

    Solved by least squares on the vectorised powers; the family is
    independent because q is the minimal polynomial degree, so the solution
    is unique and the residual only measures conditioning.
    """
    if not A.is_square:
        raise ShapeError("psi_eval needs a square matrix")
    powers = _power_basis(A)
    E = expm(A.to_numpy(), t)
    return _solve_psi(powers, E, float(t))


def _solve_psi(powers: np.ndarray, E: np.ndarray, t: float) -> PsiEvaluation:
    q, n, _ = powers.shape
    cols = powers.reshape(q, n * n).T
    norms = np.linalg.norm(cols, axis=0)
    coef, *_ = np.linalg.lstsq(cols / norms, E.reshape(-1), rcond=None)
    values = coef / norms
    recon = np.tensordot(values, powers, axes=1)
    residual = float(np.linalg.norm(E - recon))
    scale = float(np.linalg.norm(E))
    if residual > PSI_RESIDUAL_TOL * scale:
        raise NumericalFailure(
            f"psi reconstruction residual {residual:.3e} exceeds {PSI_RESIDUAL_TOL:g} * ||exp(tA)|| = {PSI_RESIDUAL_TOL * scale:.3e}"
        )
    return PsiEvaluation(t=t, values=values, residual=residual)


def psi_matrix(A: RationalMatrix, times) -> np.ndarray:
    """The q x q matrix {psi_i(t_j)}: column j holds psi evaluated at t_j."""
    times = [float(t) for t in times]
    powers = _power_basis(A)
    q = powers.shape[0]
    if len(times) != q:
        raise ShapeError(f"need exactly q={q} times, got {len(times)}")
    if len(set(times)) != len(times):
        raise ValueError("times must be distinct")
    Es = expm(A.to_numpy(), np.array(times))
    return np.column_stack([_solve_psi(powers, E, t).values for E, t in zip(Es, times)]) if q else np.zeros((0, 0))
