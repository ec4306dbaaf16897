"""Streaming core-set maintenance by greedy max-min replacement.

Each stream owns a :class:`CoreSet` of capacity ``k``. Until it is full every
arrival is appended. Afterwards an arrival ``r`` is *eligible* when its
smallest distance to the members exceeds the core-set's smallest pairwise
distance; if eligible it replaces whichever endpoint of that closest pair is
nearer to ``r`` (a seeded coin flip settles exact ties). Otherwise it is
dropped.

Two interchangeable algorithms find the closest pair:

``brute_force``
    rescans all ``(k*k - k) / 2`` pairs for every arrival.
``k_adjacency``
    keeps a :class:`~divcore.trimatrix.TriangularDistanceMatrix`, built once
    when the core-set first fills, and patches ``k - 1`` entries per
    replacement.

Both read identical distance values and use the same tie rules, so they
produce identical decision logs.
"""

from __future__ import annotations

import csv
import enum
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

from .errors import DataError
from .points import LabeledPoint
from .streams import Scheduler, StreamSource, local_timestamp
from .trimatrix import (
    DEFAULT_MEMORY_BUDGET,
    TriangularDistanceMatrix,
    column_distances,
    unflatten,
)
from .vecspace import condensed_distances, distances_to, pairwise_distances, stack

__all__ = [
    "Algorithm",
    "CoreSet",
    "EngineConfig",
    "LabeledPoint",
    "ReplacementDecision",
    "RunResult",
    "StreamWorker",
    "TIE_TOLERANCE",
    "closest_pair",
    "compose",
    "diversity",
    "process_point",
    "replacement_rate",
    "run",
    "run_parallel",
    "stream_rng",
    "write_coreset_csv",
    "write_decisions_csv",
]

TIE_TOLERANCE = 1e-12


class Algorithm(str, enum.Enum):
    BRUTE_FORCE = "brute_force"
    K_ADJACENCY = "k_adjacency"

    @classmethod
    def parse(cls, value: "str | Algorithm") -> "Algorithm":
        if isinstance(value, cls):
            return value
        aliases = {"brute": cls.BRUTE_FORCE, "adjacency": cls.K_ADJACENCY}
        try:
            return aliases.get(value) or cls(value)
        except ValueError:
            raise ValueError(f"unknown algorithm {value!r}") from None


@dataclass(frozen=True)
class EngineConfig:
    """Run parameters.

    ``horizon`` counts scheduler ticks (one element offered from each live
    stream per tick); ``None`` runs until every stream is exhausted.
    """

    k: int
    horizon: int | None = None
    rng_seed: int = 0
    algorithm: Algorithm = Algorithm.K_ADJACENCY
    memory_budget: int | None = DEFAULT_MEMORY_BUDGET

    def __post_init__(self) -> None:
        object.__setattr__(self, "algorithm", Algorithm.parse(self.algorithm))
        if self.k < 2:
            raise ValueError(f"k must be at least 2, got {self.k}")
        if self.horizon is not None and self.horizon < 0:
            raise ValueError(f"horizon must be non-negative, got {self.horizon}")
        if self.rng_seed < 0:
            raise ValueError(f"rng_seed must be non-negative, got {self.rng_seed}")


def stream_rng(seed: int, stream_id: int) -> np.random.Generator:
    """Independent tie-breaking generator for one stream, derived from the run seed."""
    return np.random.default_rng([seed, stream_id])


class CoreSet:
    """The (at most) ``capacity`` points currently retained for one stream.

    Members keep a fixed slot each; a replacement reuses the evicted slot.
    Stacked vectors and norms are cached for the metric kernels.
    """

    def __init__(self, stream_id: int, capacity: int):
        if capacity < 1:
            raise ValueError(f"capacity must be positive, got {capacity}")
        self.stream_id = stream_id
        self.capacity = capacity
        self.members: list[LabeledPoint] = []
        self._ids: list[int] = []
        self._block: np.ndarray | None = None
        self._norms = np.empty(capacity, dtype=np.float64)

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self) -> Iterator[LabeledPoint]:
        return iter(self.members)

    def __getitem__(self, slot: int) -> LabeledPoint:
        return self.members[slot]

    @property
    def full(self) -> bool:
        return len(self.members) >= self.capacity

    @property
    def dim(self) -> int | None:
        return None if self._block is None else self._block.shape[1]

    @property
    def ids(self) -> list[int]:
        return self._ids

    def vectors(self) -> tuple[np.ndarray, np.ndarray]:
        n = len(self.members)
        if self._block is None:
            raise DataError("core-set is empty")
        return self._block[:n], self._norms[:n]

    def _check_dim(self, point: LabeledPoint) -> None:
        if self._block is not None and point.dim != self._block.shape[1]:
            raise DataError(
                f"stream {point.stream_id}, timestamp {point.timestamp}: "
                f"dimension {point.dim} does not match core-set dimension {self._block.shape[1]}"
            )

    def append(self, point: LabeledPoint) -> int:
        if self.full:
            raise DataError(f"core-set for stream {self.stream_id} is full")
        self._check_dim(point)
        if self._block is None:
            self._block = np.empty((self.capacity, point.dim), dtype=np.float64)
        slot = len(self.members)
        self._block[slot] = point.vector.components
        self._norms[slot] = point.vector.norm
        self.members.append(point)
        self._ids.append(point.point_id)
        return slot

    def replace(self, slot: int, point: LabeledPoint) -> LabeledPoint:
        self._check_dim(point)
        old = self.members[slot]
        self._block[slot] = point.vector.components
        self._norms[slot] = point.vector.norm
        self.members[slot] = point
        self._ids[slot] = point.point_id
        return old

    def __repr__(self) -> str:
        return f"CoreSet(stream_id={self.stream_id}, {len(self)}/{self.capacity})"


@dataclass(frozen=True, slots=True)
class ReplacementDecision:
    """Audit record for one arrival.

    Fill-phase arrivals are accepted with no minima. For steady-state
    arrivals ``min_core_edge`` is the core-set's closest-pair distance
    (realised by slots ``core_pair``) and ``min_incoming_edge`` the arrival's
    smallest distance to any member.
    """

    stream_id: int
    timestamp: int
    incoming_id: int
    accepted: bool
    evicted_slot: int | None = None
    evicted_id: int | None = None
    min_core_edge: float | None = None
    min_incoming_edge: float | None = None
    core_pair: tuple[int, int] | None = None
    tie_broken: bool = False

    @property
    def steady(self) -> bool:
        return self.min_core_edge is not None


def _as_points(points: Sequence) -> tuple[np.ndarray, np.ndarray]:
    if len(points) < 2:
        raise DataError(f"diversity needs at least 2 points, got {len(points)}")
    return stack(points)


def diversity(points: Sequence) -> float:
    """Smallest pairwise cosine distance among ``points``."""
    block, norms = _as_points(points)
    return float(condensed_distances(block, norms).min())


def closest_pair(points: Sequence) -> tuple[int, int, float]:
    """Indices ``(i, j)``, ``i < j``, of the closest pair and their distance.

    Ties resolve to the lexicographically smallest ``(i, j)``.
    """
    block, norms = _as_points(points)
    full = pairwise_distances(block, norms)
    rows, cols = np.triu_indices(len(points), 1)
    f = int(np.argmin(full[rows, cols]))
    return int(rows[f]), int(cols[f]), float(full[rows[f], cols[f]])


def process_point(
    core: CoreSet,
    incoming: LabeledPoint,
    aux: TriangularDistanceMatrix | None = None,
    rng: np.random.Generator | None = None,
) -> ReplacementDecision:
    """Offer one arrival to ``core`` and apply the outcome in place.

    With ``aux`` the closest pair comes from the matrix and the matrix is
    patched on replacement; without it every pair is recomputed. Ties on the
    closest pair go to the smallest flat index ``(i, j)``, ``i > j``, in both
    modes. ``rng`` settles eviction ties; if omitted a fresh seed-0 generator
    is used for this call.
    """
    core._check_dim(incoming)
    if not core.full:
        core.append(incoming)
        return ReplacementDecision(core.stream_id, incoming.timestamp, incoming.point_id, True)

    block, norms = core.vectors()
    if aux is not None:
        if aux.slot_ids != core.ids:
            raise DataError(f"stream {core.stream_id}: distance matrix slots disagree with core-set members")
        i, j, min_core = aux.min_entry()
        column = column_distances(incoming.vector, aux, (block, norms))
    else:
        pairs = condensed_distances(block, norms)
        f = int(np.argmin(pairs))
        i, j = unflatten(f)
        min_core = float(pairs[f])
        column = distances_to(incoming.vector, block, norms)
    min_incoming = float(column.min())

    if not min_incoming > min_core:
        return ReplacementDecision(
            core.stream_id, incoming.timestamp, incoming.point_id, False,
            min_core_edge=min_core, min_incoming_edge=min_incoming, core_pair=(i, j),
        )

    to_i, to_j = column[i], column[j]
    tie = bool(abs(to_i - to_j) <= TIE_TOLERANCE)
    if tie:
        if rng is None:
            rng = np.random.default_rng(0)
        slot = i if rng.integers(2) == 0 else j
    else:
        slot = i if to_i < to_j else j

    evicted = core.replace(slot, incoming)
    if aux is not None:
        aux.replace_slot(slot, incoming.point_id, column)
    return ReplacementDecision(
        core.stream_id, incoming.timestamp, incoming.point_id, True,
        evicted_slot=slot, evicted_id=evicted.point_id,
        min_core_edge=min_core, min_incoming_edge=min_incoming,
        core_pair=(i, j), tie_broken=tie,
    )


class StreamWorker:
    """Owns one stream's core-set, its matrix (adjacency mode) and tie RNG."""

    def __init__(self, stream_id: int, config: EngineConfig, rng: np.random.Generator | None = None):
        self.stream_id = stream_id
        self.config = config
        self.core = CoreSet(stream_id, config.k)
        self.matrix: TriangularDistanceMatrix | None = None
        self.rng = rng if rng is not None else stream_rng(config.rng_seed, stream_id)

    @property
    def uses_matrix(self) -> bool:
        return self.config.algorithm is Algorithm.K_ADJACENCY

    def ensure_matrix(self) -> TriangularDistanceMatrix:
        if self.matrix is None:
            if not self.core.full:
                raise DataError(f"stream {self.stream_id}: matrix requested before the core-set filled")
            self.matrix = TriangularDistanceMatrix.build(
                self.core.members,
                ids=list(self.core.ids),
                memory_budget=self.config.memory_budget,
                block=self.core.vectors(),
            )
        return self.matrix

    def offer(self, point: LabeledPoint) -> ReplacementDecision:
        if self.uses_matrix and self.core.full and self.matrix is None:
            self.ensure_matrix()
        return process_point(self.core, point, self.matrix, self.rng)


@dataclass
class RunResult:
    coresets: list[CoreSet]
    decisions: list[ReplacementDecision]
    matrices: dict[int, TriangularDistanceMatrix] = field(default_factory=dict)

    def __iter__(self):
        # unpacks as (coresets, decisions)
        return iter((self.coresets, self.decisions))

    @property
    def tie_events(self) -> int:
        return sum(d.tie_broken for d in self.decisions)


DecisionHook = Callable[[ReplacementDecision, StreamWorker], None]


def run(
    streams: Sequence[StreamSource],
    config: EngineConfig,
    on_decision: DecisionHook | None = None,
) -> RunResult:
    """Drive every stream round-robin until the horizon or exhaustion.

    ``on_decision`` is called after each arrival with the decision and the
    worker that made it, so callers can inspect the core-set mid-run.
    """
    if not streams:
        raise DataError("no streams to run")
    workers = {s.stream_id: StreamWorker(s.stream_id, config) for s in streams}
    if len(workers) != len(streams):
        raise DataError("stream ids must be distinct")
    scheduler = Scheduler(streams)
    decisions: list[ReplacementDecision] = []
    dim = None
    tick = 0
    while config.horizon is None or tick < config.horizon:
        batch = scheduler.next_round()
        if not batch:
            break
        for sid, point in batch:
            if dim is None:
                dim = point.dim
            elif point.dim != dim:
                raise DataError(
                    f"stream {sid}, timestamp {point.timestamp}: dimension {point.dim}, expected {dim}"
                )
            worker = workers[sid]
            decision = worker.offer(point)
            decisions.append(decision)
            if on_decision is not None:
                on_decision(decision, worker)
        tick += 1
    ordered = sorted(workers.values(), key=lambda w: w.stream_id)
    return RunResult(
        coresets=[w.core for w in ordered],
        decisions=decisions,
        matrices={w.stream_id: w.matrix for w in ordered if w.matrix is not None},
    )


def _run_one(source: StreamSource, config: EngineConfig, n_streams: int):
    worker = StreamWorker(source.stream_id, config)
    decisions = []
    limit = source.remaining if config.horizon is None else min(config.horizon, source.remaining)
    for local in range(limit):
        pid, vec = source.next()
        point = LabeledPoint(pid, source.stream_id, local_timestamp(local, source.stream_id, n_streams), vec)
        decisions.append(worker.offer(point))
    return worker.core, decisions, worker.matrix


def run_parallel(
    streams: Sequence[StreamSource],
    config: EngineConfig,
    max_workers: int | None = None,
) -> RunResult:
    """Process each stream in its own process, then merge at a barrier.

    Timestamps are stream-local (see :func:`~divcore.streams.local_timestamp`),
    so the decision log differs from :func:`run` only in timestamps and order.
    """
    if not streams:
        raise DataError("no streams to run")
    dims = {s.elements[0].dim for s in streams if len(s.elements)}
    if len(dims) > 1:
        raise DataError(f"streams disagree on dimension: {sorted(dims)}")
    n = len(streams)
    with ProcessPoolExecutor(max_workers=max_workers) as pool:
        results = list(pool.map(_run_one, streams, [config] * n, [n] * n))
    results.sort(key=lambda r: r[0].stream_id)
    decisions = sorted((d for _, ds, _ in results for d in ds), key=lambda d: d.timestamp)
    return RunResult(
        coresets=[core for core, _, _ in results],
        decisions=decisions,
        matrices={core.stream_id: m for core, _, m in results if m is not None},
    )


def compose(coresets: Iterable[CoreSet]) -> list[LabeledPoint]:
    """Union of the per-stream core-sets, in stream then slot order."""
    out: list[LabeledPoint] = []
    for core in coresets:
        out.extend(core.members)
    return out


def replacement_rate(decisions: Iterable[ReplacementDecision]) -> float:
    """Fraction of steady-state arrivals that were accepted (NaN if there were none)."""
    steady = accepted = 0
    for d in decisions:
        if d.steady:
            steady += 1
            accepted += d.accepted
    return accepted / steady if steady else float("nan")


def _fmt(x: float | None) -> str:
    return "" if x is None else repr(float(x))


def write_coreset_csv(path: str | os.PathLike, points: Sequence[LabeledPoint]) -> None:
    dim = points[0].dim if points else 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stream_id", "point_id", "timestamp", "dim", *(f"v{i}" for i in range(dim))])
        for p in points:
            w.writerow([p.stream_id, p.point_id, p.timestamp, p.dim, *(repr(float(x)) for x in p.vector.components)])


def write_decisions_csv(path: str | os.PathLike, decisions: Iterable[ReplacementDecision]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["stream_id", "timestamp", "incoming_id", "accepted", "evicted_id", "min_core_edge", "min_incoming_edge"])
        for d in decisions:
            w.writerow([
                d.stream_id, d.timestamp, d.incoming_id, int(d.accepted),
                "" if d.evicted_id is None else d.evicted_id,
                _fmt(d.min_core_edge), _fmt(d.min_incoming_edge),
            ])
