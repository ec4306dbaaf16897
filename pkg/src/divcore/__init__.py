"""Composable streaming core-sets that maximise remote-edge (max-min) diversity."""

__version__ = "0.1.0"

from .engine import (
    Algorithm,
    CoreSet,
    EngineConfig,
    ReplacementDecision,
    RunResult,
    closest_pair,
    compose,
    diversity,
    process_point,
    run,
    run_parallel,
)
from .errors import DataError, DivcoreError, MemoryBudgetError, OracleGuardError
from .points import LabeledPoint
from .streams import Scheduler, StreamSource, load_binary, load_csv, load_vectors, partition, write_binary
from .trimatrix import TriangularDistanceMatrix
from .vecspace import Vector, cosine_distance, cosine_similarity

__all__ = [
    "Algorithm",
    "CoreSet",
    "DataError",
    "DivcoreError",
    "EngineConfig",
    "LabeledPoint",
    "MemoryBudgetError",
    "OracleGuardError",
    "ReplacementDecision",
    "RunResult",
    "Scheduler",
    "StreamSource",
    "TriangularDistanceMatrix",
    "Vector",
    "closest_pair",
    "compose",
    "cosine_distance",
    "cosine_similarity",
    "diversity",
    "load_binary",
    "load_csv",
    "load_vectors",
    "partition",
    "process_point",
    "run",
    "run_parallel",
    "write_binary",
]
