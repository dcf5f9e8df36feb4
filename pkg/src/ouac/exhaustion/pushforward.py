"""Levy measure of X_1: nu^X(L) = int nu(dx) int_0^1 1_L(exp(sA) x) ds.

The inner time integral is computed by locating the boundary crossings of
``s -> exp(sA) x`` (sign changes of each constraint on a grid of
``resolution`` panels, refined with Brent's method) and summing the
lengths of the pieces inside the target.  Infinite-activity components are
truncated at ``eps``; their radial integral uses Gauss-Legendre panels in
the variable ``u = (r/eps)**(-alpha)``, in which the truncated radial
measure is uniform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from ..errors import ParameterError, ShapeError
from ..exactlin import RationalMatrix
from ..levymodel import AtomSet, InfiniteRay, MeasureSpec, PolynomialCurve, SubspaceAC
from ..matfun import expm

_GAUSS_POINTS = 8


@dataclass(frozen=True)
class HalfSpace:
    """{y : <normal, y> >= offset}"""

    normal: tuple
    offset: float = 0.0

    def margins(self, Y: np.ndarray) -> np.ndarray:
        u = np.array([float(x) for x in self.normal])
        if not np.any(u):
            raise ParameterError("half-space normal must be nonzero", field="normal")
        return (Y @ u - float(self.offset))[..., None]


@dataclass(frozen=True)
class Box:
    """{y : lower <= y <= upper} coordinatewise; infinite bounds allowed."""

    lower: tuple
    upper: tuple

    def margins(self, Y: np.ndarray) -> np.ndarray:
        lo = np.array([float(x) for x in self.lower])
        hi = np.array([float(x) for x in self.upper])
        if np.any(lo > hi):
            raise ParameterError("box has lower > upper", field="lower")
        cols = [Y - lo, hi - Y]
        out = np.concatenate(cols, axis=-1)
        return out[..., np.isfinite(np.concatenate([lo, hi]))]


@dataclass(frozen=True)
class Whole:
    """R^n minus the origin."""

    def margins(self, Y: np.ndarray) -> np.ndarray:
        return np.zeros(Y.shape[:-1] + (0,))


Target = HalfSpace | Box | Whole


@dataclass(frozen=True)
class PushforwardEstimate:
    value: float
    finite_part: float
    truncated_part: float
    eps: float | None
    truncated_components: tuple = field(default=())


class _Flow:
    def __init__(self, A: RationalMatrix, resolution: int):
        self.Af = A.to_numpy()
        self.nodes = np.linspace(0.0, 1.0, resolution + 1)
        self.E = expm(self.Af, self.nodes)

    def occupation(self, points: np.ndarray, target) -> np.ndarray:
        """Lebesgue measure of {s in [0,1] : exp(sA) p in target} for each row p."""
        Y = np.einsum("kij,pj->pki", self.E, points)
        G = target.margins(Y)  # (points, nodes, constraints)
        out = np.empty(len(points))
        for i, p in enumerate(points):
            out[i] = self._length(p, G[i], target)
        return out

    def _length(self, p: np.ndarray, g: np.ndarray, target) -> float:
        if g.shape[-1] == 0:
            return 1.0
        breaks = [0.0, 1.0]
        for c in range(g.shape[-1]):
            gc = g[:, c]
            for k in np.nonzero(gc[:-1] * gc[1:] <= 0)[0]:
                a, b = self.nodes[k], self.nodes[k + 1]
                if gc[k] == 0:
                    breaks.append(a)
                    continue
                if gc[k + 1] == 0:
                    breaks.append(b)
                    continue
                f = lambda s, c=c: target.margins(expm(self.Af, s) @ p)[c]  # noqa: E731
                breaks.append(brentq(f, a, b, xtol=1e-15, rtol=4 * np.finfo(float).eps))
        breaks = np.unique(breaks)
        mids = 0.5 * (breaks[:-1] + breaks[1:])
        if len(mids) == 0:
            return 0.0
        inside = np.all(target.margins(expm(self.Af, mids) @ p) >= 0, axis=-1)
        return float(np.sum(np.diff(breaks)[inside]))


def _gauss_panels(panels: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(_GAUSS_POINTS)
    edges = np.linspace(0.0, 1.0, panels + 1)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = (0.5 * (b - a) * x[None, :] + 0.5 * (a + b)).ravel()
    weights = (0.5 * (b - a) * w[None, :]).ravel()
    return nodes, weights


def levy_measure_of_X1(
    A: RationalMatrix,
    spec: MeasureSpec,
    target,
    resolution: int = 256,
    eps: float | None = None,
) -> PushforwardEstimate:
    """nu^X(target) for the finite part exactly, plus the eps-truncated infinite part."""
    n = spec.ambient_dim
    if A.shape != (n, n):
        raise ShapeError(f"drift matrix is {A.shape}, measure lives in R^{n}")
    if resolution < 1:
        raise ParameterError("resolution must be >= 1", field="resolution")
    if spec.infinite_ids():
        if eps is None or not eps > 0:
            raise ParameterError("infinite components need a truncation level eps > 0", field="eps")
    flow = _Flow(A, resolution)

    finite = 0.0
    for c in spec.components:
        if isinstance(c, AtomSet) and c.atoms:
            pts = np.array([[float(x) for x in p] for p, _ in c.atoms])
            masses = np.array([float(m) for _, m in c.atoms])
            finite += float(masses @ flow.occupation(pts, target))

    truncated = 0.0
    used = []
    u, w = _gauss_panels(resolution)
    for i, c in enumerate(spec.components):
        if isinstance(c, (InfiniteRay, SubspaceAC)):
            a = float(c.alpha)
            radii = eps * u ** (-1.0 / a)
            total = c.tail_rate(eps)
            if isinstance(c, InfiniteRay):
                d = np.array([float(x) for x in c.direction])
                d /= np.linalg.norm(d)
                signs = (1.0, -1.0) if c.two_sided else (1.0,)
                val = sum(w @ flow.occupation(s * radii[:, None] * d[None, :], target) for s in signs) / len(signs)
            else:
                frame = c.orthonormal_frame()
                k = frame.shape[1]
                if k == 1:
                    dirs, dw = np.array([[1.0], [-1.0]]), np.array([0.5, 0.5])
                elif k == 2:
                    m = 4 * resolution
                    th = 2 * math.pi * (np.arange(m) + 0.5) / m
                    dirs, dw = np.stack([np.cos(th), np.sin(th)], axis=1), np.full(m, 1.0 / m)
                else:
                    raise ParameterError("pushforward supports subspace components of dimension <= 2", field="basis")
                val = 0.0
                for dvec, dwt in zip(dirs @ frame.T, dw):
                    val += dwt * (w @ flow.occupation(radii[:, None] * dvec[None, :], target))
            truncated += total * float(val)
            used.append(i)
        elif isinstance(c, PolynomialCurve):
            J = c.rung_bound(eps)
            pts = c.evaluate(c.rung_parameters(J)) if J else np.zeros((0, n))
            pts = pts[np.linalg.norm(pts, axis=1) >= eps]
            truncated += float(c.rung_mass) * float(flow.occupation(pts, target).sum())
            used.append(i)

    return PushforwardEstimate(
        value=finite + truncated,
        finite_part=finite,
        truncated_part=truncated,
        eps=eps,
        truncated_components=tuple(used),
    )
