"""Monte Carlo endpoints of dX = AX dt + dB for a jump process B described by a MeasureSpec.

Finite-activity parts are simulated exactly; infinite-activity parts keep
only jumps of size >= eps, and the omitted part is reported as a bias
bound.  Random streams are keyed by (seed, sample index, component id),
and samples are processed in chunks of fixed size, so a batch is
bit-identical for any number of workers.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

from .errors import ParameterError, ShapeError
from .exactlin import RationalMatrix, to_rational
from .levymodel import MeasureSpec, sample_jumps
from .matfun import expm
from .streams import Stream

CHUNK_SIZE = 512


@dataclass(frozen=True)
class SimConfig:
    A: RationalMatrix
    spec: MeasureSpec
    x0: tuple | None = None
    horizon: float = 1.0
    eps: float = 1e-3
    sample_count: int = 1
    seed: int = 0
    workers: int = 1
    time_reversed: bool = False  # use exp(T A) instead of exp((h - T) A)

    def __post_init__(self):
        n = self.spec.ambient_dim
        if self.A.shape != (n, n):
            raise ShapeError(f"drift matrix is {self.A.shape}, measure lives in R^{n}")
        x0 = tuple(to_rational(x) for x in self.x0) if self.x0 is not None else (0,) * n
        if len(x0) != n:
            raise ShapeError(f"x0 has length {len(x0)}, expected {n}")
        object.__setattr__(self, "x0", x0)
        if not self.eps > 0:
            raise ParameterError(f"must be > 0, got {self.eps}", field="eps")
        if self.sample_count < 1:
            raise ParameterError(f"must be >= 1, got {self.sample_count}", field="sample_count")
        if not (self.horizon >= 0 and math.isfinite(self.horizon)):
            raise ParameterError(f"must be finite and >= 0, got {self.horizon}", field="horizon")
        if self.workers < 1:
            raise ParameterError(f"must be >= 1, got {self.workers}", field="workers")

    @property
    def n(self) -> int:
        return self.spec.ambient_dim

    def truncation_bias(self) -> dict:
        """Per infinite component: bound on the expected size of the omitted jumps over the horizon."""
        return {i: self.horizon * c.truncation_bias(self.eps) for i, c in enumerate(self.spec.components) if c.infinite}


@dataclass
class SampleBatch:
    points: np.ndarray
    jump_counts: np.ndarray
    seed: int
    eps: float
    horizon: float = 1.0
    workers: int = 1
    truncation_bias: dict = field(default_factory=dict)

    @property
    def sample_count(self) -> int:
        return len(self.points)

    @property
    def n(self) -> int:
        return self.points.shape[1]


def _jumps(cfg: SimConfig, stream: Stream) -> tuple[np.ndarray, np.ndarray]:
    times, vecs = [], []
    for cid, c in enumerate(cfg.spec.components):
        t, v = sample_jumps(c, cfg.horizon, cfg.eps, stream.child(cid))
        times.append(t)
        vecs.append(v)
    if not times:
        return np.zeros(0), np.zeros((0, cfg.n))
    t, v = np.concatenate(times), np.concatenate(vecs)
    order = np.argsort(t, kind="stable")
    return t[order], v[order]


def _endpoints(cfg: SimConfig, jump_lists: list[tuple[np.ndarray, np.ndarray]]) -> np.ndarray:
    """Apply the flow to each sample's jumps; one batched exponential for the whole chunk."""
    Af = cfg.A.to_numpy()
    base = expm(Af, cfg.horizon) @ np.array([float(x) for x in cfg.x0])
    out = np.tile(base, (len(jump_lists), 1))
    counts = np.array([len(t) for t, _ in jump_lists])
    if counts.sum() == 0:
        return out
    T = np.concatenate([t for t, _ in jump_lists])
    V = np.concatenate([v for _, v in jump_lists])
    lag = T if cfg.time_reversed else cfg.horizon - T
    contrib = np.einsum("kij,kj->ki", expm(Af, lag), V)
    # segment sums run over each sample's jumps in time order
    nonempty = counts > 0
    offsets = np.concatenate([[0], np.cumsum(counts)[:-1]])[nonempty]
    out[nonempty] += np.add.reduceat(contrib, offsets, axis=0)
    return out


def sample_endpoint(cfg: SimConfig, stream: Stream) -> np.ndarray:
    """One draw of X_h = exp(hA) x0 + sum_k exp((h - T_k) A) dB_k."""
    return _endpoints(cfg, [_jumps(cfg, stream)])[0]


def _chunk(cfg: SimConfig, start: int, stop: int) -> tuple[np.ndarray, np.ndarray]:
    root = Stream(cfg.seed)
    lists = [_jumps(cfg, root.child(i)) for i in range(start, stop)]
    return _endpoints(cfg, lists), np.array([len(t) for t, _ in lists], dtype=np.int64)


def _chunk_args(args):
    return _chunk(*args)


def sample_batch(cfg: SimConfig) -> SampleBatch:
    """``cfg.sample_count`` endpoints; sample i uses the stream keyed (seed, i)."""
    bounds = [(s, min(s + CHUNK_SIZE, cfg.sample_count)) for s in range(0, cfg.sample_count, CHUNK_SIZE)]
    tasks = [(cfg, a, b) for a, b in bounds]
    try:
        if cfg.workers > 1 and len(tasks) > 1:
            with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
                parts = list(pool.map(_chunk_args, tasks))
        else:
            parts = [_chunk(*t) for t in tasks]
    except MemoryError as exc:
        raise MemoryError(f"out of memory simulating {cfg.sample_count} samples at eps={cfg.eps}") from exc
    points = np.concatenate([p for p, _ in parts])
    counts = np.concatenate([c for _, c in parts])
    return SampleBatch(
        points=points,
        jump_counts=counts,
        seed=cfg.seed,
        eps=cfg.eps,
        horizon=cfg.horizon,
        workers=cfg.workers,
        truncation_bias=cfg.truncation_bias(),
    )


# -- CSV ------------------------------------------------------------------------


def batch_to_csv(batch: SampleBatch) -> str:
    """Header x1..xn,jumps; one row per sample; metadata as trailing comment lines.

    The worker count is deliberately not written: files must not depend on it.
    """
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"x{i + 1}" for i in range(batch.n)] + ["jumps"])
    for p, k in zip(batch.points, batch.jump_counts):
        w.writerow([repr(float(x)) for x in p] + [int(k)])
    buf.write(f"# seed={batch.seed}, eps={batch.eps!r}, horizon={batch.horizon!r}, samples={batch.sample_count}\n")
    for cid, bias in sorted(batch.truncation_bias.items()):
        buf.write(f"# truncation_bias[{cid}]={bias!r}\n")
    return buf.getvalue()


def write_csv(batch: SampleBatch, path) -> None:
    Path(path).write_text(batch_to_csv(batch))


def read_csv(path) -> SampleBatch:
    text = Path(path).read_text()
    meta: dict = {}
    bias: dict = {}
    rows = []
    header = None
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.startswith("#"):
            for item in line[1:].split(","):
                if "=" in item:
                    k, v = (s.strip() for s in item.split("=", 1))
                    if k.startswith("truncation_bias["):
                        bias[int(k[len("truncation_bias[") : -1])] = float(v)
                    else:
                        meta[k] = v
            continue
        fields = next(csv.reader([line]))
        if header is None:
            header = fields
            if not header or header[-1] != "jumps" or header[:-1] != [f"x{i + 1}" for i in range(len(header) - 1)]:
                raise ValueError(f"unexpected CSV header {header!r}")
            continue
        if len(fields) != len(header):
            raise ValueError(f"row has {len(fields)} fields, header has {len(header)}")
        rows.append(fields)
    if header is None:
        raise ValueError("CSV has no header")
    n = len(header) - 1
    points = np.array([[float(x) for x in r[:-1]] for r in rows], dtype=float).reshape(-1, n)
    counts = np.array([int(r[-1]) for r in rows], dtype=np.int64)
    return SampleBatch(
        points=points,
        jump_counts=counts,
        seed=int(meta.get("seed", 0)),
        eps=float(meta.get("eps", "nan")),
        horizon=float(meta.get("horizon", 1.0)),
        truncation_bias=bias,
    )


# -- order statistics -------------------------------------------------------------


@dataclass(frozen=True)
class OrderStatLine:
    j: int
    ks_statistic: float
    p_value: float
    critical_1pct: float

    @property
    def passed(self) -> bool:
        return self.ks_statistic < self.critical_1pct


@dataclass(frozen=True)
class OrderStatReport:
    q: int
    rate: float
    trials: int
    lines: tuple

    @property
    def passed(self) -> bool:
        return all(l.passed for l in self.lines)


def conditional_jump_times_check(q: int, rate: float, trials: int, stream: Stream) -> OrderStatReport:
    """Given T_{q+1}, the first q Poisson arrivals rescaled by T_{q+1} are uniform order statistics.

    The j-th rescaled arrival is compared with Beta(j, q + 1 - j) by a
    Kolmogorov-Smirnov test; the 1% critical value is 1.63 / sqrt(trials).
    """
    if q < 1:
        raise ParameterError(f"must be >= 1, got {q}", field="q")
    if not rate > 0:
        raise ParameterError(f"must be > 0, got {rate}", field="rate")
    if trials <= 0:
        return OrderStatReport(q, float(rate), 0, ())
    gen = stream.generator()
    T = np.cumsum(gen.exponential(1.0 / rate, size=(trials, q + 1)), axis=1)
    U = T[:, :q] / T[:, q:]
    lines = []
    for j in range(1, q + 1):
        res = stats.kstest(U[:, j - 1], stats.beta(j, q + 1 - j).cdf)
        lines.append(OrderStatLine(j, float(res.statistic), float(res.pvalue), 1.63 / math.sqrt(trials)))
    return OrderStatReport(q, float(rate), trials, tuple(lines))
