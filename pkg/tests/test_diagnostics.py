from __future__ import annotations

import math

import numpy as np
import pytest

from ouac.diagnostics import (
    DiagnosticsReport,
    HyperplaneTest,
    consistency_check,
    diagnose,
    duplicate_rate,
    hyperplane_concentration,
    nn_dimension,
    van1_experiment,
    van1_margin,
)
from ouac.errors import ParameterError, PreconditionError
from ouac.exactlin import RationalMatrix
from ouac.exhaustion import AbsContinuity, decide_exhaustion
from ouac.levymodel import AtomSet, InfiniteRay, MeasureSpec
from ouac.simulator import SampleBatch, SimConfig, sample_batch
from ouac.streams import Stream

I2 = RationalMatrix.identity(2)
D12 = RationalMatrix.diag(1, 2)
ROT = RationalMatrix([[1, 1], [-1, 1]])
KOLMOGOROV = RationalMatrix([[0, 0], [1, 0]])


def _batch(points):
    points = np.asarray(points, dtype=float).reshape(-1, 2)
    return SampleBatch(points, np.zeros(len(points), dtype=np.int64), seed=0, eps=1e-3)


@pytest.fixture(scope="module")
def two_ray():
    spec = MeasureSpec(2, (InfiniteRay((1, 0)), InfiniteRay((0, 1))))
    return spec, sample_batch(SimConfig(D12, spec, sample_count=20_000, seed=1))


@pytest.fixture(scope="module")
def one_ray():
    spec = MeasureSpec(2, (InfiniteRay((1, 0)),))
    return spec, sample_batch(SimConfig(I2, spec, x0=(1, 1), sample_count=5000, seed=2))


# -- concentration and duplicates ----------------------------------------------------------


def test_hyperplane_concentration_examples(one_ray, two_ray):
    _, b = one_ray
    assert hyperplane_concentration(b, (0, 1), math.e, 1e-9) == 1.0
    _, b = two_ray
    assert hyperplane_concentration(b, (0, 1), 0.0, 1e-6) < 0.01
    assert hyperplane_concentration(_batch(np.zeros((0, 2))), (1, 0)) == 0.0


def test_zero_functional_rejected():
    with pytest.raises(ParameterError):
        hyperplane_concentration(_batch([[1, 2]]), (0, 0))


def test_duplicate_rate():
    assert duplicate_rate(np.array([[1.0, 2.0], [1.0, 2.0], [3.0, 4.0]])) == pytest.approx(1 / 3)
    assert duplicate_rate(np.array([[1.0, 2.0]])) == 0.0
    assert duplicate_rate(np.random.default_rng(0).random((1000, 2))) == 0.0


# -- intrinsic dimension ----------------------------------------------------------------


def test_nn_dimension_square_and_line():
    sq = nn_dimension(np.random.default_rng(100).random((100_000, 2)), stream=Stream(0))
    assert sq.ci_low <= 2.0 <= sq.ci_high
    t = np.random.default_rng(101).random(100_000)
    seg = nn_dimension(np.column_stack([t, 2 * t]), stream=Stream(0))
    assert seg.ci_low <= 1.0 <= seg.ci_high
    assert seg.used == 100_000


@pytest.mark.parametrize("dim", [1, 2])
def test_nn_dimension_interval_coverage(dim):
    # a single draw misses 5% of the time; calibration is judged over many draws
    hits = 0
    for s in range(40):
        gen = np.random.default_rng(1000 * dim + s)
        pts = gen.random((10_000, 2)) if dim == 2 else np.outer(gen.random(10_000), [1.0, -3.0])
        d = nn_dimension(pts, resamples=300, stream=Stream(s))
        hits += d.ci_low <= dim <= d.ci_high
    assert hits >= 34


def test_nn_dimension_exhausting_config(two_ray):
    _, b = two_ray
    d = nn_dimension(b.points, stream=Stream(3))
    assert 1.7 <= d.estimate <= 2.3


def test_nn_dimension_needs_samples():
    with pytest.raises(ParameterError):
        nn_dimension(np.random.default_rng(0).random((999, 2)))


def test_nn_dimension_ignores_duplicates():
    pts = np.random.default_rng(5).random((2000, 3))
    pts = np.vstack([pts, pts[:10]])
    d = nn_dimension(pts, resamples=200)
    assert d.used == len(pts) - 20
    assert 2.5 < d.estimate < 3.5


# -- van1 -----------------------------------------------------------------------


def test_van1_rotation():
    rep = van1_experiment(ROT, [(1, 0)], 10_000, Stream(4))
    assert rep.trials == 10_000 and rep.failures == 0 and rep.passed
    assert len(rep.worst_times) == 1 and len(rep.worst_times[0]) == 2
    # rotation by angle -t: det[e^{t1 A} b, e^{t2 A} b] = e^{t1+t2} sin(t1 - t2)
    assert van1_margin(ROT, [(1, 0)], [[0.1, 0.1 + math.pi]]) <= 1e-8


def test_van1_margin_matches_closed_form_determinant():
    rng = np.random.default_rng(0)
    Af = ROT.to_numpy()
    for t1, t2 in rng.random((50, 2)):
        from ouac.matfun import expm

        M = np.column_stack([expm(Af, t1) @ [1, 0], expm(Af, t2) @ [1, 0]])
        assert abs(np.linalg.det(M)) == pytest.approx(math.exp(t1 + t2) * abs(math.sin(t1 - t2)), rel=1e-10)


def test_van1_diag_real_spectrum():
    rep = van1_experiment(D12, [(1, 1)], 10_000, Stream(5))
    assert rep.failures == 0
    # e^{t1} e^{2 t2} - e^{t2} e^{2 t1} vanishes only on the diagonal
    assert van1_margin(D12, [(1, 1)], [[0.3, 0.3]]) <= 1e-12
    assert van1_margin(D12, [(1, 1)], [[0.3, 0.30001]]) > 0


def test_van1_precondition():
    with pytest.raises(PreconditionError):
        van1_experiment(I2, [(1, 0)], 10, Stream(0))


def test_van1_zero_trials():
    rep = van1_experiment(D12, [(1, 1)], 0, Stream(0))
    assert rep.trials == 0 and rep.failures == 0


# -- consistency -------------------------------------------------------------------


def test_consistency_two_ray(two_ray):
    spec, b = two_ray
    v = decide_exhaustion(D12, spec)
    rep = diagnose(b, v, D12)
    assert rep.duplicate_rate == 0
    assert rep.verdict_consistency is True
    ok, text = consistency_check(v, rep)
    assert ok and "consistent" in text


def test_consistency_one_ray(one_ray):
    spec, b = one_ray
    v = decide_exhaustion(I2, spec)
    rep = diagnose(b, v, I2, x0=(1, 1))
    assert rep.hyperplane_test.fraction == 1.0
    assert rep.hyperplane_test.predicted == 1.0
    assert rep.verdict_consistency is True


def test_consistency_kolmogorov():
    spec = MeasureSpec(2, (InfiniteRay((1, 0), two_sided=True),))
    b = sample_batch(SimConfig(KOLMOGOROV, spec, sample_count=2000, seed=3))
    v = decide_exhaustion(KOLMOGOROV, spec)
    rep = diagnose(b, v, KOLMOGOROV)
    assert rep.verdict_consistency is None
    assert "theorem inapplicable" in rep.narrative and "no absolute continuity conclusion" in rep.narrative


def test_escape_mass_prediction_matches_concentration():
    # atoms off the trapping line leave it at rate 1; P[no such jump] = e^{-1}
    spec = MeasureSpec(2, (InfiniteRay((1, 0)), AtomSet((((0, 1), 1), ((2, 0), 3)))))
    v = decide_exhaustion(I2, spec)
    b = sample_batch(SimConfig(I2, spec, sample_count=20_000, seed=8))
    rep = diagnose(b, v, I2)
    p = math.exp(-1)
    assert rep.hyperplane_test.predicted == pytest.approx(p)
    assert abs(rep.hyperplane_test.fraction - p) <= 3 * math.sqrt(p * (1 - p) / 20_000)
    assert rep.verdict_consistency is True


def test_consistency_flags_atoms_under_yes_verdict():
    v = decide_exhaustion(D12, MeasureSpec(2, (InfiniteRay((1, 1)),)))
    rep = DiagnosticsReport(HyperplaneTest(None, 0.0, 1e-9, 0.0, None), 0.2, 0.05, None, 2, 1000)
    ok, text = consistency_check(v, rep)
    assert ok is False and "duplicate" in text
    assert v.abs_continuous is AbsContinuity.YES
