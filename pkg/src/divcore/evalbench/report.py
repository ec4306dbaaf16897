"""Composability evaluation and bench artifact writers."""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from ..engine import Algorithm, EngineConfig, compose, diversity, replacement_rate, run
from ..errors import DataError, OracleGuardError
from ..streams import partition
from ..vecspace import Vector
from .oracles import EXHAUSTIVE_LIMIT, alpha_ratio, exhaustive_max_min, gmm_greedy
from .timing import BenchAnalysis, MeasureResult, RegressionFit


@dataclass
class EvalReport:
    composed_diversity: float
    baseline_diversity: float
    alpha: float
    replacement_rate: float
    baseline: str = "greedy"
    composed_size: int = 0
    fits: dict[str, RegressionFit] = field(default_factory=dict)
    extrapolated_total_seconds: dict[int, float] = field(default_factory=dict)


def evaluate_composability(
    dataset: Sequence[Vector],
    k: int,
    n_streams: int,
    *,
    baseline: str = "greedy",
    seed: int = 0,
    algorithm: Algorithm | str = Algorithm.K_ADJACENCY,
) -> EvalReport:
    """Compose per-stream core-sets and compare against an offline selection
    of the same size over the pooled dataset."""
    if baseline not in ("greedy", "exhaustive"):
        raise ValueError(f"unknown baseline {baseline!r}")
    if baseline == "exhaustive" and len(dataset) > EXHAUSTIVE_LIMIT:
        raise OracleGuardError(
            f"exhaustive baseline is limited to {EXHAUSTIVE_LIMIT} pooled points (got {len(dataset)}); use the greedy baseline"
        )
    streams = partition(dataset, n_streams)
    result = run(streams, EngineConfig(k=k, rng_seed=seed, algorithm=algorithm))
    composed = compose(result.coresets)
    if len(composed) < 2:
        raise DataError("composed core-set has fewer than two points")
    achieved = diversity(composed)
    oracle = exhaustive_max_min if baseline == "exhaustive" else gmm_greedy
    reference = oracle(dataset, len(composed)).diversity
    return EvalReport(
        composed_diversity=achieved,
        baseline_diversity=reference,
        alpha=alpha_ratio(reference, achieved),
        replacement_rate=replacement_rate(result.decisions),
        baseline=baseline,
        composed_size=len(composed),
    )


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return repr(float(x))


def _write(path: Path, header: Sequence[str], rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)
    return path


def write_eval_csv(path: str | os.PathLike, report: EvalReport) -> Path:
    return _write(
        Path(path),
        ["composed_diversity", "baseline_diversity", "alpha", "replacement_rate"],
        [[_num(report.composed_diversity), _num(report.baseline_diversity), _num(report.alpha), _num(report.replacement_rate)]],
    )


def _fit_row(phase: str, basis: str, f: RegressionFit | None) -> list[str]:
    if f is None:
        return [phase, basis, "", "", "", ""]
    coef = list(f.coefficients) + [None] * (3 - len(f.coefficients))
    return [phase, basis, *(_num(c) for c in coef), _num(f.r_squared)]


def write_bench_artifacts(
    out_dir: str | os.PathLike,
    result: MeasureResult,
    analysis: BenchAnalysis,
    *,
    svg: bool = False,
) -> list[Path]:
    """Write report, fits, extrapolation and per-figure CSVs (plus SVG charts)."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        _write(
            out / "report.csv",
            ["k", "stream_id", "phase", "duration_s"],
            ([s.k, s.stream_id, s.phase, _num(s.duration)] for s in result.samples),
        ),
        _write(
            out / "fits.csv",
            ["phase", "basis", "c0", "c1", "c2", "r_squared"],
            [
                _fit_row(phase, basis, fits.get(basis))
                for phase, fits in (("matrix_build", analysis.build_fits), ("replacement", analysis.replace_fits))
                for basis in ("linear", "quadratic")
            ],
        ),
        _write(
            out / "extrapolation.csv",
            ["k", "predicted_total_s", "measured_replacement_rate", "assumed_replacement_fraction"],
            (
                [k, _num(analysis.predictions.get(k)), _num(result.replacement_rates.get(k)), _num(analysis.replace_fraction)]
                for k in sorted(set(result.replacement_rates) | set(analysis.predictions))
            ),
        ),
    ]

    bm, rm = analysis.build_model, analysis.replace_model
    figures = {
        "fig3a": ("Mean matrix build time", [(k, y, bm(k) if bm else None) for k, y in analysis.build_points]),
        "fig3b": ("Mean replacement time", [(k, y, rm(k) if rm else None) for k, y in analysis.replace_points]),
        "fig3c": (
            "Total construction time per stream",
            [(k, result.mean_stream_seconds(k), analysis.predictions.get(k)) for k in sorted(result.replacement_rates)],
        ),
    }
    for name, (title, rows) in figures.items():
        written.append(_write(out / f"{name}.csv", ["x", "y_measured", "y_fit"], ([x, _num(y), _num(f)] for x, y, f in rows)))
        if svg:
            written.append(write_svg(out / f"{name}.svg", title, rows))
    return written


def write_svg(path: str | os.PathLike, title: str, rows: Sequence[tuple[float, float | None, float | None]]) -> Path:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, ax = plt.subplots(figsize=(6, 4))
    xs = [r[0] for r in rows]
    measured = [(x, y) for x, y, _ in rows if y is not None and not math.isnan(y)]
    fitted = [(x, f) for x, _, f in rows if f is not None]
    if measured:
        ax.plot(*zip(*measured), marker="o", label="measured")
    if fitted:
        ax.plot(*zip(*fitted), linestyle="--", label="fit")
    ax.set_xlabel("core-set size k")
    ax.set_ylabel("seconds")
    ax.set_title(title)
    if xs:
        ax.legend()
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
    return Path(path)
