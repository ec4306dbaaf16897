"""Timing harness: matrix build and replacement costs versus core-set size.

Each stream is timed on its own, one after another, with a monotonic clock.
Per-``k`` means are fitted by least squares on a linear ``[1, k]`` and a
quadratic ``[1, k, k^2]`` basis, and the fits are combined into a predicted
total construction time per stream.
"""

from __future__ import annotations

import time
import warnings
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np

from ..engine import Algorithm, EngineConfig, StreamWorker
from ..errors import DataError, FitError
from ..points import LabeledPoint
from ..streams import StreamSource, local_timestamp, partition
from ..vecspace import Vector

DEFAULT_K_VALUES = (10, 50, 100, 500, 1000)
DEFAULT_STREAMS = 5
DEFAULT_REPLACE_FRACTION = 0.9

BUILD = "matrix_build"
REPLACEMENT = "replacement"
_BASIS_SIZE = {"linear": 2, "quadratic": 3}


@dataclass(frozen=True, slots=True)
class TimingSample:
    k: int
    stream_id: int
    phase: str
    duration: float

    def __post_init__(self) -> None:
        if self.phase not in (BUILD, REPLACEMENT):
            raise ValueError(f"unknown phase {self.phase!r}")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")


@dataclass
class MeasureResult:
    samples: list[TimingSample]
    replacement_rates: dict[int, float]
    stream_seconds: dict[tuple[int, int], float]
    stream_lengths: dict[int, int]

    def __iter__(self):
        return iter(self.samples)

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def mean_stream_length(self) -> float:
        return float(np.mean(list(self.stream_lengths.values())))

    def mean_stream_seconds(self, k: int) -> float:
        vals = [s for (kk, _), s in self.stream_seconds.items() if kk == k]
        return float(np.mean(vals)) if vals else float("nan")


def measure(
    dataset: Sequence[Vector],
    k_values: Sequence[int] = DEFAULT_K_VALUES,
    n_streams: int = DEFAULT_STREAMS,
    *,
    seed: int = 0,
    clock: Callable[[], float] = time.perf_counter,
    progress: Callable[[int, int], None] | None = None,
) -> MeasureResult:
    """Run the adjacency engine once per ``k`` over ``n_streams`` partitions.

    Records one build sample per stream and one replacement sample per
    accepted steady-state arrival (the full offer, selection included).
    """
    if not k_values:
        raise DataError("k_values must not be empty")
    streams = partition(dataset, n_streams)
    shortest = min(len(s) for s in streams)
    for k in k_values:
        if k < 2:
            raise DataError(f"k must be at least 2, got {k}")
        if k >= shortest:
            raise DataError(f"k={k} must be smaller than the shortest stream ({shortest} elements)")

    samples: list[TimingSample] = []
    rates: dict[int, float] = {}
    totals: dict[tuple[int, int], float] = {}
    for k in k_values:
        config = EngineConfig(k=k, rng_seed=seed, algorithm=Algorithm.K_ADJACENCY)
        steady = accepted = 0
        for src in streams:
            if progress is not None:
                progress(k, src.stream_id)
            source = StreamSource(src.stream_id, src.elements, src.first_id)
            worker = StreamWorker(src.stream_id, config)
            core = worker.core
            start = clock()
            for local in range(len(source)):
                pid, vec = source.next()
                point = LabeledPoint(pid, src.stream_id, local_timestamp(local, src.stream_id, n_streams), vec)
                if not core.full:
                    worker.offer(point)
                    continue
                if worker.matrix is None:
                    t0 = clock()
                    worker.ensure_matrix()
                    samples.append(TimingSample(k, src.stream_id, BUILD, clock() - t0))
                t0 = clock()
                decision = worker.offer(point)
                dt = clock() - t0
                steady += 1
                if decision.accepted:
                    accepted += 1
                    samples.append(TimingSample(k, src.stream_id, REPLACEMENT, dt))
            totals[(k, src.stream_id)] = clock() - start
        rates[k] = accepted / steady if steady else float("nan")
    return MeasureResult(samples, rates, totals, {s.stream_id: len(s) for s in streams})


def mean_by_k(samples: Iterable[TimingSample], phase: str) -> list[tuple[int, float]]:
    groups: dict[int, list[float]] = defaultdict(list)
    for s in samples:
        if s.phase == phase:
            groups[s.k].append(s.duration)
    return [(k, float(np.mean(v))) for k, v in sorted(groups.items())]


@dataclass(frozen=True)
class RegressionFit:
    basis: str
    coefficients: tuple[float, ...]
    r_squared: float

    def __post_init__(self) -> None:
        if len(self.coefficients) != _BASIS_SIZE[self.basis]:
            raise ValueError(f"{self.basis} fit needs {_BASIS_SIZE[self.basis]} coefficients")

    def __call__(self, k: float) -> float:
        return float(sum(c * k**p for p, c in enumerate(self.coefficients)))


def design_matrix(ks: Sequence[float], basis: str) -> np.ndarray:
    if basis not in _BASIS_SIZE:
        raise ValueError(f"unknown basis {basis!r}; expected linear or quadratic")
    x = np.asarray(ks, dtype=np.float64)
    return np.vander(x, _BASIS_SIZE[basis], increasing=True)


def fit(points: Sequence[tuple[float, float]], basis: str = "linear") -> RegressionFit:
    """Ordinary least squares of ``y`` on ``k`` over the chosen basis."""
    need = _BASIS_SIZE.get(basis)
    if need is None:
        raise ValueError(f"unknown basis {basis!r}; expected linear or quadratic")
    ks = [p[0] for p in points]
    if len(set(ks)) < need:
        raise FitError(f"{basis} fit needs {need} distinct k values, got {len(set(ks))}")
    y = np.asarray([p[1] for p in points], dtype=np.float64)
    X = design_matrix(ks, basis)
    coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - X @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    if ss_tot == 0.0:
        r2 = 1.0 if ss_res <= 1e-24 else 0.0
    else:
        r2 = 1.0 - ss_res / ss_tot
    return RegressionFit(basis, tuple(float(c) for c in coef), r2)


def try_fits(points: Sequence[tuple[float, float]]) -> dict[str, RegressionFit]:
    """Every basis the data can support, keyed by basis name."""
    out = {}
    for basis in _BASIS_SIZE:
        try:
            out[basis] = fit(points, basis)
        except FitError:
            pass
    return out


def best_fit(fits: dict[str, RegressionFit]) -> RegressionFit | None:
    """Highest R^2; linear wins ties."""
    best = None
    for basis in ("linear", "quadratic"):
        f = fits.get(basis)
        if f is not None and (best is None or f.r_squared > best.r_squared):
            best = f
    return best


def _predict(model: Callable[[float], float], k: float, what: str) -> float:
    y = float(model(k))
    if y < 0:
        warnings.warn(f"{what} prediction at k={k} is negative ({y:.3g}); clamped to 0", RuntimeWarning, stacklevel=3)
        return 0.0
    return y


def extrapolate_total(
    k: float,
    n_elements_per_stream: float,
    build_fit: Callable[[float], float],
    replace_fit: Callable[[float], float],
    replace_fraction: float = DEFAULT_REPLACE_FRACTION,
) -> float:
    """Predicted seconds to summarise one stream:
    ``build(k) + fraction * (N - k) * replace(k)``."""
    if not 0.0 <= replace_fraction <= 1.0:
        raise ValueError(f"replace_fraction must lie in [0, 1], got {replace_fraction}")
    if n_elements_per_stream < k:
        raise ValueError(f"stream length {n_elements_per_stream} is shorter than k={k}")
    build = _predict(build_fit, k, "build")
    replace = _predict(replace_fit, k, "replacement")
    return build + replace_fraction * (n_elements_per_stream - k) * replace


@dataclass
class BenchAnalysis:
    build_points: list[tuple[int, float]]
    replace_points: list[tuple[int, float]]
    build_fits: dict[str, RegressionFit]
    replace_fits: dict[str, RegressionFit]
    replace_fraction: float
    predictions: dict[int, float] = field(default_factory=dict)

    @property
    def build_model(self) -> RegressionFit | None:
        return best_fit(self.build_fits)

    @property
    def replace_model(self) -> RegressionFit | None:
        return best_fit(self.replace_fits)


def analyze(
    result: MeasureResult,
    replace_fraction: float = DEFAULT_REPLACE_FRACTION,
    extra_k: Sequence[int] = (),
) -> BenchAnalysis:
    """Fit both bases to both phases and predict totals for measured and ``extra_k`` sizes.

    Predictions are left empty when either phase has too few distinct k values.
    """
    build_pts = mean_by_k(result.samples, BUILD)
    repl_pts = mean_by_k(result.samples, REPLACEMENT)
    out = BenchAnalysis(build_pts, repl_pts, try_fits(build_pts), try_fits(repl_pts), replace_fraction)
    bm, rm = out.build_model, out.replace_model
    if bm is None or rm is None:
        return out
    n = result.mean_stream_length
    for k in sorted({k for k, _ in build_pts} | set(extra_k)):
        if k <= n:
            out.predictions[k] = extrapolate_total(k, n, bm, rm, replace_fraction)
    return out
