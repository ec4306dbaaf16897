"""Command-line entry point.

    divcore summarize --input vecs.csv --k 10 --out run/
    divcore bench     --input vecs.bin --k-list 10,50,100 --out bench/
    divcore evaluate  --input vecs.csv --k 2 --streams 2 --baseline exhaustive --out eval/
    divcore convert   --input vecs.csv --output vecs.bin

Exit codes: 0 success, 1 data or runtime error, 2 usage error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
import warnings
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from . import __version__
from .engine import Algorithm, EngineConfig, compose, diversity, replacement_rate, run, run_parallel
from .engine import write_coreset_csv, write_decisions_csv
from .errors import DivcoreError
from .evalbench import (
    DEFAULT_K_VALUES,
    DEFAULT_REPLACE_FRACTION,
    DEFAULT_STREAMS,
    analyze,
    evaluate_composability,
    measure,
    write_bench_artifacts,
    write_eval_csv,
)
from .streams import load_vectors, partition, write_binary

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2
_ALGORITHMS = {"brute": Algorithm.BRUTE_FORCE, "adjacency": Algorithm.K_ADJACENCY}


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="milliseconds")


def _sha256(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _warn(msg: str) -> None:
    print(f"warning: {msg}", file=sys.stderr)


def _positive(minimum: int):
    def parse(text: str) -> int:
        try:
            value = int(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
        if value < minimum:
            raise argparse.ArgumentTypeError(f"must be at least {minimum}, got {value}")
        return value

    return parse


def _int_list(text: str) -> list[int]:
    try:
        values = [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None
    if not values or any(v < 2 for v in values):
        raise argparse.ArgumentTypeError("every k must be an integer >= 2")
    return values


def _fraction(text: str) -> float:
    try:
        value = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None
    if not 0.0 <= value <= 1.0:
        raise argparse.ArgumentTypeError(f"must lie in [0, 1], got {value}")
    return value


def _fmt(x: float) -> str:
    return "n/a" if x is None or math.isnan(x) else f"{x:.6g}"


def cmd_summarize(args: argparse.Namespace) -> int:
    started = _now()
    vectors = load_vectors(args.input, header=args.header)
    config = EngineConfig(
        k=args.k, horizon=args.horizon, rng_seed=args.seed, algorithm=_ALGORITHMS[args.algorithm],
        memory_budget=args.memory_budget,
    )
    streams = partition(vectors, args.streams)
    result = run_parallel(streams, config) if args.parallel else run(streams, config)
    composed = compose(result.coresets)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_coreset_csv(out / "coreset.csv", composed)
    write_decisions_csv(out / "decisions.csv", result.decisions)
    artifacts = {"coreset_csv": str(out / "coreset.csv"), "decisions_csv": str(out / "decisions.csv")}
    if args.dump_matrix:
        for sid, m in result.matrices.items():
            path = out / f"matrix_stream{sid}.csv"
            m.write_csv(path)
            artifacts[f"matrix_stream{sid}_csv"] = str(path)

    div = diversity(composed) if len(composed) >= 2 else float("nan")
    manifest = {
        "command": "summarize",
        "argv": " ".join(sys.argv),
        "version": __version__,
        "input": str(args.input),
        "input_sha256": _sha256(args.input),
        "k": config.k,
        "streams": args.streams,
        "algorithm": config.algorithm.value,
        "horizon": config.horizon,
        "rng_seed": config.rng_seed,
        "parallel": bool(args.parallel),
        "started_at": started,
        "finished_at": _now(),
        "composed_size": len(composed),
        "composed_diversity": None if math.isnan(div) else div,
        "replacement_rate": None if math.isnan(rr := replacement_rate(result.decisions)) else rr,
        "tie_events": result.tie_events,
        **artifacts,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2) + "\n")
    print(f"composed size: {len(composed)}")
    print(f"composed diversity: {_fmt(div)}")
    return EXIT_OK


def cmd_bench(args: argparse.Namespace) -> int:
    vectors = load_vectors(args.input, header=args.header)
    k_values = list(dict.fromkeys(args.k_list))

    def progress(k: int, sid: int) -> None:
        if args.verbose:
            print(f"k={k} stream={sid}", file=sys.stderr)

    result = measure(vectors, k_values, args.streams, seed=args.seed, progress=progress)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        analysis = analyze(result, args.replace_fraction, extra_k=args.extrapolate_k or ())
        write_bench_artifacts(args.out, result, analysis, svg=args.svg)
    for w in caught:
        _warn(str(w.message))
    if analysis.build_model is None or analysis.replace_model is None:
        _warn("too few distinct k values to fit; fit and prediction columns left empty")

    print(f"{'k':>6} {'build_s':>12} {'replace_s':>12} {'rate':>8} {'predicted_s':>12}")
    build = dict(analysis.build_points)
    repl = dict(analysis.replace_points)
    for k in k_values:
        print(
            f"{k:>6} {_fmt(build.get(k, math.nan)):>12} {_fmt(repl.get(k, math.nan)):>12} "
            f"{_fmt(result.replacement_rates[k]):>8} {_fmt(analysis.predictions.get(k, math.nan)):>12}"
        )
    for phase, fits in (("build", analysis.build_fits), ("replace", analysis.replace_fits)):
        for basis, f in fits.items():
            print(f"{phase} {basis} fit: R^2={f.r_squared:.4f} coefficients={', '.join(f'{c:.4g}' for c in f.coefficients)}")
    return EXIT_OK


def cmd_evaluate(args: argparse.Namespace) -> int:
    vectors = load_vectors(args.input, header=args.header)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        report = evaluate_composability(
            vectors, args.k, args.streams, baseline=args.baseline, seed=args.seed,
            algorithm=_ALGORITHMS[args.algorithm],
        )
    for w in caught:
        _warn(str(w.message))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_eval_csv(out / "eval.csv", report)
    print(f"composed size: {report.composed_size}")
    print(f"composed diversity: {_fmt(report.composed_diversity)}")
    print(f"{report.baseline} baseline diversity: {_fmt(report.baseline_diversity)}")
    print(f"alpha: {_fmt(report.alpha)}")
    print(f"replacement rate: {_fmt(report.replacement_rate)}")
    return EXIT_OK


def cmd_convert(args: argparse.Namespace) -> int:
    vectors = load_vectors(args.input, header=args.header)
    write_binary(args.output, vectors)
    print(f"wrote {len(vectors)} vectors of dimension {vectors[0].dim} to {args.output}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="divcore", description="Streaming max-min diversity core-sets.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser) -> None:
        p.add_argument("--input", required=True, help="CSV or DIVCORE1 binary vector file")
        p.add_argument("--header", action="store_true", help="skip the first CSV row")

    p = sub.add_parser("summarize", help="build per-stream core-sets and compose them")
    common(p)
    p.add_argument("--k", type=_positive(2), required=True)
    p.add_argument("--streams", type=_positive(1), default=DEFAULT_STREAMS)
    p.add_argument("--algorithm", choices=sorted(_ALGORITHMS), default="adjacency")
    p.add_argument("--horizon", type=_positive(0), default=None, help="scheduler ticks (default: until exhausted)")
    p.add_argument("--seed", type=_positive(0), default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--parallel", action="store_true", help="one process per stream (stream-local timestamps)")
    p.add_argument("--dump-matrix", action="store_true", help="write each stream's distance matrix as CSV")
    p.add_argument("--memory-budget", type=_positive(1), default=EngineConfig.memory_budget, help="bytes allowed per distance matrix")
    p.set_defaults(func=cmd_summarize)

    p = sub.add_parser("bench", help="time matrix build and replacement across core-set sizes")
    common(p)
    p.add_argument("--k-list", type=_int_list, default=list(DEFAULT_K_VALUES))
    p.add_argument("--streams", type=_positive(1), default=DEFAULT_STREAMS)
    p.add_argument("--replace-fraction", type=_fraction, default=DEFAULT_REPLACE_FRACTION)
    p.add_argument("--extrapolate-k", type=_int_list, default=None, help="extra core-set sizes to predict totals for")
    p.add_argument("--seed", type=_positive(0), default=0)
    p.add_argument("--out", required=True)
    p.add_argument("--svg", action="store_true", help="also write SVG charts")
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("evaluate", help="compare the composed core-set with an offline baseline")
    common(p)
    p.add_argument("--k", type=_positive(2), required=True)
    p.add_argument("--streams", type=_positive(1), default=DEFAULT_STREAMS)
    p.add_argument("--baseline", choices=("exhaustive", "greedy"), default="greedy")
    p.add_argument("--algorithm", choices=sorted(_ALGORITHMS), default="adjacency")
    p.add_argument("--seed", type=_positive(0), default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("convert", help="rewrite a vector file in DIVCORE1 binary form")
    common(p)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_convert)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (DivcoreError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
