"""Statistical checks of simulated endpoints against an exhaustion verdict.

Finite samples cannot prove absolute continuity.  These checks look for
evidence against a verdict: mass on a hyperplane, repeated points, or an
intrinsic dimension below n.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import ParameterError, PreconditionError
from .exactlin import RationalMatrix, structure
from .exhaustion.decide import AbsContinuity, ExhaustionVerdict
from .exhaustion.heymann import is_generating_sequence
from .matfun import expm
from .simulator import SampleBatch
from .streams import Stream

RANK_TOL = 1e-8
NN_MIN_SAMPLES = 1000
NN_BAND = 0.3


def hyperplane_concentration(batch: SampleBatch, functional, offset: float = 0.0, tol: float = 1e-9) -> float:
    """Fraction of samples s with |<functional, s> - offset| <= tol."""
    u = np.array([float(x) for x in functional])
    if not np.any(u):
        raise ParameterError("functional must be nonzero", field="functional")
    if batch.sample_count == 0:
        return 0.0
    return float(np.mean(np.abs(batch.points @ u - float(offset)) <= tol))


def duplicate_rate(points: np.ndarray) -> float:
    """Fraction of sample pairs that coincide exactly (full double precision)."""
    N = len(points)
    if N < 2:
        return 0.0
    _, counts = np.unique(np.ascontiguousarray(points).view(np.dtype((np.void, points.dtype.itemsize * points.shape[1]))),
                          return_counts=True)
    pairs = float(np.sum(counts * (counts - 1) / 2))
    return pairs / (N * (N - 1) / 2)


@dataclass(frozen=True)
class DimensionEstimate:
    estimate: float
    ci_low: float
    ci_high: float
    used: int  # points with a nonzero nearest-neighbour distance


def nn_dimension(points: np.ndarray, *, resamples: int = 1000, stream: Stream | None = None) -> DimensionEstimate:
    """Two-nearest-neighbour maximum likelihood intrinsic dimension.

    d = (N - 1) / sum log(r2 / r1), with r1, r2 the first two neighbour
    distances; points with a duplicate (r1 = 0) are dropped.  Neighbouring
    points share distances, so the log ratios are not independent.  The 95%
    interval therefore resamples whole clusters, the weakly connected
    components of the graph joining each point to its two nearest
    neighbours, rather than single points.
    """
    points = np.asarray(points, dtype=float)
    N = len(points)
    if N < NN_MIN_SAMPLES:
        raise ParameterError(f"need at least {NN_MIN_SAMPLES} samples, got {N}", field="samples")
    dist, idx = cKDTree(points).query(points, k=3)
    r1, r2 = dist[:, 1], dist[:, 2]
    ok = r1 > 0
    logs = np.zeros(N)
    logs[ok] = np.log(r2[ok] / r1[ok])
    used = int(ok.sum())
    if used < 2 or logs.sum() == 0:
        return DimensionEstimate(0.0, 0.0, 0.0, used)
    est = (used - 1) / logs.sum()
    graph = coo_matrix((np.ones(2 * N), (np.repeat(np.arange(N), 2), idx[:, 1:].ravel())), shape=(N, N))
    K, label = connected_components(graph, directed=True, connection="weak")
    S = np.bincount(label, weights=logs, minlength=K)
    C = np.bincount(label, weights=ok.astype(float), minlength=K)
    gen = (stream or Stream(0, (0xD1,))).generator()
    boots = np.empty(resamples)
    for b in range(resamples):
        pick = gen.integers(0, K, K)
        boots[b] = (C[pick].sum() - 1) / S[pick].sum()
    lo, hi = np.percentile(boots, [2.5, 97.5])
    return DimensionEstimate(float(est), float(lo), float(hi), used)


@dataclass(frozen=True)
class RankExperimentReport:
    trials: int
    failures: int
    worst_margin: float
    worst_times: tuple

    @property
    def passed(self) -> bool:
        return self.failures == 0


def _margins(Af: np.ndarray, B: np.ndarray, times: np.ndarray) -> np.ndarray:
    """sigma_min / sigma_max of [exp(t_j^i A) b_i] for a stack of time arrays shaped (..., r, q)."""
    n = Af.shape[0]
    E = expm(Af, times)  # (..., r, q, n, n)
    cols = np.einsum("...rqij,rj->...rqi", E, B)
    cols = cols.reshape(cols.shape[:-3] + (-1, n))
    s = np.linalg.svd(np.swapaxes(cols, -1, -2), compute_uv=False)
    top = s[..., 0]
    return np.where(top > 0, s[..., n - 1] / np.where(top > 0, top, 1.0), 0.0)


def van1_margin(A: RationalMatrix, sequence, times) -> float:
    """sigma_min / sigma_max of the stack [exp(t_j^i A) b_i], times shaped (r, q)."""
    B = np.array([[float(x) for x in b] for b in sequence])
    return float(_margins(A.to_numpy(), B, np.asarray(times, dtype=float)))


def van1_experiment(A: RationalMatrix, sequence, trials: int, stream: Stream) -> RankExperimentReport:
    """Random q*r time tuples in [0,1]; a failure is a relative margin <= 1e-8."""
    sequence = [tuple(b) for b in sequence]
    if not is_generating_sequence(A, sequence):
        raise PreconditionError("the vectors are not a generating sequence for A")
    if trials <= 0:
        return RankExperimentReport(0, 0, math.nan, ())
    q = structure(A).q
    r = len(sequence)
    B = np.array([[float(x) for x in b] for b in sequence])
    times = stream.generator().random((trials, r, q))
    margins = np.concatenate([_margins(A.to_numpy(), B, times[i : i + 2048]) for i in range(0, trials, 2048)])
    k = int(np.argmin(margins))
    return RankExperimentReport(
        trials, int(np.sum(margins <= RANK_TOL)), float(margins[k]), tuple(map(tuple, times[k].tolist()))
    )


@dataclass(frozen=True)
class HyperplaneTest:
    functional: tuple | None
    offset: float
    tol: float
    fraction: float
    predicted: float | None  # lower bound exp(-h * escape mass) when computable


@dataclass(frozen=True)
class DiagnosticsReport:
    hyperplane_test: HyperplaneTest
    random_functional_max: float  # worst concentration over random functionals
    duplicate_rate: float
    nn_dimension: DimensionEstimate | None
    n: int
    sample_count: int
    verdict_consistency: bool | None = None
    narrative: str = ""


def diagnose(
    batch: SampleBatch,
    verdict: ExhaustionVerdict,
    A: RationalMatrix,
    x0=None,
    *,
    tol: float = 1e-9,
    random_functionals: int = 8,
    stream: Stream | None = None,
) -> DiagnosticsReport:
    """Run every check on a batch simulated from the configuration behind ``verdict``."""
    n = batch.n
    stream = stream or Stream(0, (0xD1A9,))
    x0v = np.zeros(n) if x0 is None else np.array([float(x) for x in x0])
    drift = expm(A.to_numpy(), batch.horizon) @ x0v
    if verdict.obstruction:
        u = verdict.obstruction[0]
        offset = float(np.array([float(x) for x in u]) @ drift)
        frac = hyperplane_concentration(batch, u, offset, tol)
        pred = None
        if verdict.escape_mass is not None:
            pred = math.exp(-batch.horizon * float(verdict.escape_mass))
        hp = HyperplaneTest(tuple(u), offset, tol, frac, pred)
    else:
        hp = HyperplaneTest(None, 0.0, tol, 0.0, None)
    gen = stream.child(1).generator()
    worst = 0.0
    for _ in range(random_functionals):
        u = gen.standard_normal(n)
        worst = max(worst, hyperplane_concentration(batch, u, float(u @ drift), tol))
    dim = nn_dimension(batch.points, stream=stream.child(2)) if batch.sample_count >= NN_MIN_SAMPLES else None
    report = DiagnosticsReport(hp, worst, duplicate_rate(batch.points), dim, n, batch.sample_count)
    ok, text = consistency_check(verdict, report)
    return DiagnosticsReport(hp, worst, report.duplicate_rate, dim, n, batch.sample_count, ok, text)


def consistency_check(verdict: ExhaustionVerdict, report: DiagnosticsReport) -> tuple[bool | None, str]:
    """Are the diagnostics consistent with the verdict?  None when no conclusion applies."""
    if verdict.abs_continuous is AbsContinuity.INAPPLICABLE:
        return None, (
            "theorem inapplicable (singular drift matrix); no absolute continuity conclusion is drawn "
            f"(exhausts={verdict.exhausts})"
        )
    notes = []
    if verdict.abs_continuous is AbsContinuity.YES:
        ok = True
        if report.duplicate_rate > 0:
            ok = False
            notes.append(f"duplicate rate {report.duplicate_rate:.3g} > 0")
        if report.random_functional_max > 0.01:
            ok = False
            notes.append(f"concentration {report.random_functional_max:.3g} on a random hyperplane")
        if report.nn_dimension is not None:
            d = report.nn_dimension
            if not (report.n - NN_BAND <= d.estimate <= report.n + NN_BAND):
                ok = False
                notes.append(f"intrinsic dimension {d.estimate:.3f} outside [{report.n - NN_BAND}, {report.n + NN_BAND}]")
        head = "consistent with an absolutely continuous law" if ok else "inconsistent with absolute continuity"
        return ok, head + ("" if ok else ": " + "; ".join(notes))
    hp = report.hyperplane_test
    if hp.functional is None:
        return False, "verdict lacks an obstruction functional"
    N = max(report.sample_count, 1)
    if hp.predicted is not None:
        sigma = math.sqrt(hp.predicted * (1 - hp.predicted) / N)
        ok = hp.fraction >= hp.predicted - 3 * sigma
        text = f"concentration {hp.fraction:.4f} on the obstruction hyperplane vs predicted >= {hp.predicted:.4f}"
    else:
        ok = hp.fraction > 0
        text = f"concentration {hp.fraction:.4f} on the obstruction hyperplane"
    return ok, ("consistent: " if ok else "inconsistent: ") + text
