from __future__ import annotations

import math

import numpy as np
import pytest

from ouac.errors import ParameterError, ShapeError
from ouac.exactlin import RationalMatrix
from ouac.levymodel import AtomSet, InfiniteRay, MeasureSpec, PolynomialCurve
from ouac.matfun import expm
from ouac.simulator import (
    SimConfig,
    batch_to_csv,
    conditional_jump_times_check,
    read_csv,
    sample_batch,
    sample_endpoint,
    write_csv,
)
from ouac.streams import Stream

I2 = RationalMatrix.identity(2)
D12 = RationalMatrix.diag(1, 2)
ROT = RationalMatrix([[1, 1], [-1, 1]])


def cfg(A, *cs, **kw):
    return SimConfig(A, MeasureSpec(A.rows, cs), **kw)


def test_empty_spec_is_deterministic_flow():
    c = cfg(ROT, x0=("1/2", -1), sample_count=5)
    b = sample_batch(c)
    expected = expm(ROT.to_numpy(), 1.0) @ np.array([0.5, -1.0])
    assert np.array_equal(b.points, np.tile(expected, (5, 1)))
    assert np.all(b.jump_counts == 0)


def test_linearity_in_x0():
    a = sample_batch(cfg(ROT, x0=(1, 3), sample_count=2)).points
    b = sample_batch(cfg(ROT, x0=(2, 6), sample_count=2)).points
    assert np.array_equal(2 * a, b)


def test_atom_zero_jump_frequency():
    b = sample_batch(cfg(I2, AtomSet((((1, 0), 2),)), sample_count=100_000, seed=3))
    p = math.exp(-2)
    frac = float(np.mean(np.all(b.points == 0, axis=1)))
    assert abs(frac - p) <= 3 * math.sqrt(p * (1 - p) / 100_000)
    assert np.array_equal(np.all(b.points == 0, axis=1), b.jump_counts == 0)


def test_ray_samples_stay_on_axis():
    b = sample_batch(cfg(I2, InfiniteRay((1, 0)), sample_count=2000, seed=4))
    assert np.all(np.abs(b.points[:, 1]) <= 1e-12)


def test_sample_count_one_matches_endpoint():
    c = cfg(D12, InfiniteRay((1, 1)), AtomSet((((0, 1), 1),)), sample_count=1, seed=8)
    assert np.array_equal(sample_batch(c).points[0], sample_endpoint(c, Stream(8).child(0)))


def test_same_seed_bit_identical_and_seed_matters():
    c = cfg(D12, InfiniteRay((1, 0)), InfiniteRay((0, 1)), sample_count=700, seed=11)
    assert batch_to_csv(sample_batch(c)) == batch_to_csv(sample_batch(c))
    other = cfg(D12, InfiniteRay((1, 0)), InfiniteRay((0, 1)), sample_count=700, seed=12)
    assert not np.array_equal(sample_batch(c).points, sample_batch(other).points)


def test_worker_count_does_not_change_output():
    spec = (InfiniteRay((1, 0)), PolynomialCurve(((1, 0), (0, 1))), AtomSet((((1, 1), 1),)))
    one = sample_batch(cfg(ROT, *spec, sample_count=1500, seed=5, workers=1))
    many = sample_batch(cfg(ROT, *spec, sample_count=1500, seed=5, workers=4))
    assert np.array_equal(one.points, many.points)
    assert np.array_equal(one.jump_counts, many.jump_counts)
    assert batch_to_csv(one) == batch_to_csv(many)


def test_flow_consistency_pathwise():
    # atoms only: split jumps at time s, run horizon s, feed the endpoint as x0 for the remaining t
    A = np.array([[0.3, 1.0], [-1.0, 0.2]])
    rng = np.random.default_rng(2)
    for _ in range(50):
        k = rng.poisson(4)
        T = np.sort(rng.uniform(0, 1.5, k))
        V = rng.normal(size=(k, 2))
        s, h = 0.6, 1.5
        x0 = rng.normal(size=2)
        full = expm(A, h) @ x0 + sum((expm(A, h - t) @ v for t, v in zip(T, V)), np.zeros(2))
        mid = expm(A, s) @ x0 + sum((expm(A, s - t) @ v for t, v in zip(T, V) if t <= s), np.zeros(2))
        end = expm(A, h - s) @ mid + sum((expm(A, h - t) @ v for t, v in zip(T, V) if t > s), np.zeros(2))
        assert np.allclose(full, end, atol=1e-10, rtol=0)


def test_flow_consistency_in_distribution():
    # horizon 2 with atoms equals horizon 1 fed into horizon 1, compared by mean
    A = RationalMatrix([["-1/2", 0], [0, -1]])
    spec = (AtomSet((((1, 0), 2), ((0, 1), 1))),)
    two = sample_batch(cfg(A, *spec, horizon=2.0, sample_count=20_000, seed=1)).points
    one = sample_batch(cfg(A, *spec, horizon=1.0, sample_count=20_000, seed=2)).points
    E = expm(A.to_numpy(), 1.0)
    fresh = sample_batch(cfg(A, *spec, horizon=1.0, sample_count=20_000, seed=3)).points
    chained = one @ E.T + fresh
    se = np.sqrt(two.var(axis=0) / 20_000 + chained.var(axis=0) / 20_000)
    assert np.all(np.abs(two.mean(axis=0) - chained.mean(axis=0)) <= 4 * se)


def test_support_confinement_in_invariant_subspace():
    A = RationalMatrix([[1, 1, 0], [0, 1, 0], [0, 0, 2]])  # xy-plane invariant
    b = sample_batch(cfg(A, InfiniteRay((1, 1, 0)), PolynomialCurve(((0, 1, 0), (1, 0, 0))),
                         AtomSet((((2, -1, 0), 1),)), x0=(1, 2, 0), sample_count=3000, seed=9))
    assert np.all(np.abs(b.points[:, 2]) <= 1e-10)


def test_truncation_monotonicity_for_matched_streams():
    spec = (InfiniteRay((1, 0)), InfiniteRay((0, 1), two_sided=True), AtomSet((((1, 1), 1),)))
    coarse = sample_batch(cfg(D12, *spec, eps=1e-2, sample_count=400, seed=6))
    fine = sample_batch(cfg(D12, *spec, eps=1e-4, sample_count=400, seed=6))
    assert np.all(fine.jump_counts >= coarse.jump_counts)


def test_truncation_bias_reported_per_infinite_component():
    c = cfg(D12, AtomSet((((1, 1), 1),)), InfiniteRay((1, 0)), eps=1e-2)
    bias = c.truncation_bias()
    assert list(bias) == [1]
    # tail mass r^{-1/2}/(1/2) has density r^{-3/2}; int_0^eps r * r^{-3/2} dr = 2 eps^{1/2}
    assert bias[1] == pytest.approx(2 * math.sqrt(1e-2), rel=1e-12)


def test_config_validation():
    spec = MeasureSpec(2, ())
    with pytest.raises(ParameterError):
        SimConfig(I2, spec, eps=0)
    with pytest.raises(ParameterError):
        SimConfig(I2, spec, sample_count=0)
    with pytest.raises(ParameterError):
        SimConfig(I2, spec, workers=0)
    with pytest.raises(ShapeError):
        SimConfig(RationalMatrix.identity(3), spec)
    with pytest.raises(ShapeError):
        SimConfig(I2, spec, x0=(1, 2, 3))


def test_time_reversed_integral_same_law_for_empty_drift_part():
    # with x0 = 0 and atoms, exp((h-T)A) and exp(TA) give the same law since T is uniform
    spec = (AtomSet((((1, 0), 1),)),)
    fwd = sample_batch(cfg(ROT, *spec, sample_count=20_000, seed=1)).points
    rev = sample_batch(cfg(ROT, *spec, sample_count=20_000, seed=2, time_reversed=True)).points
    se = np.sqrt(fwd.var(axis=0) / 20_000 + rev.var(axis=0) / 20_000)
    assert np.all(np.abs(fwd.mean(axis=0) - rev.mean(axis=0)) <= 4 * se)


def test_csv_round_trip(tmp_path):
    b = sample_batch(cfg(ROT, InfiniteRay((1, 0)), x0=("1/3", 0), sample_count=50, seed=21))
    path = tmp_path / "out.csv"
    write_csv(b, path)
    text = path.read_text()
    assert text.splitlines()[0] == "x1,x2,jumps"
    assert "# seed=21" in text
    back = read_csv(path)
    assert np.array_equal(back.points, b.points)
    assert np.array_equal(back.jump_counts, b.jump_counts)
    assert back.seed == 21 and back.eps == b.eps
    assert back.truncation_bias == b.truncation_bias


def test_read_csv_rejects_bad_header(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(ValueError):
        read_csv(p)


# -- order statistics -------------------------------------------------------------


@pytest.mark.parametrize("q", [1, 2])
def test_order_statistics(q):
    rep = conditional_jump_times_check(q, 1.0, 100_000, Stream(1, (q,)))
    assert len(rep.lines) == q
    for line in rep.lines:
        assert line.critical_1pct == pytest.approx(1.63 / math.sqrt(100_000))
        assert line.passed, line


def test_order_statistics_detects_wrong_law():
    # the unscaled arrival times are not uniform order statistics on [0, 1]
    rep = conditional_jump_times_check(2, 5.0, 20_000, Stream(3))
    assert rep.passed
    from scipy import stats

    gen = Stream(4).generator()
    U = np.sort(gen.uniform(size=(20_000, 2)) ** 2, axis=1)
    assert stats.kstest(U[:, 0], stats.beta(1, 2).cdf).statistic > 1.63 / math.sqrt(20_000)


def test_order_statistics_empty_and_invalid():
    rep = conditional_jump_times_check(3, 1.0, 0, Stream(0))
    assert rep.lines == () and rep.trials == 0
    with pytest.raises(ParameterError):
        conditional_jump_times_check(0, 1.0, 10, Stream(0))
