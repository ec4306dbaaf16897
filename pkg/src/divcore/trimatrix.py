"""Packed strict-lower-triangular store of pairwise cosine distances.

A core-set of ``k`` points has ``(k*k - k) / 2`` distinct pairs. The pair of
slots ``(i, j)`` with ``i > j`` is stored at ``i*(i-1)/2 + j``, so the pairs of
row ``i`` against earlier slots form one contiguous run::

    flat:  0      1      2      3      4      5
    pair: (1,0)  (2,0)  (2,1)  (3,0)  (3,1)  (3,2)
"""

from __future__ import annotations

import csv
import math
import os
from typing import Any, Sequence

import numpy as np

from .errors import DataError, MemoryBudgetError
from .vecspace import Metric, as_vector, condensed_distances, distances_to, stack

DEFAULT_MEMORY_BUDGET = 1 << 30  # bytes of float64 entries


def entry_count(k: int) -> int:
    return k * (k - 1) // 2


def flat_index(i: int, j: int) -> int:
    """Flat position of the pair ``(i, j)``; requires ``i > j >= 0``."""
    if not (0 <= j < i):
        raise IndexError(f"only strict-lower-triangle pairs are stored, got ({i}, {j})")
    return i * (i - 1) // 2 + j


def unflatten(index: int) -> tuple[int, int]:
    if index < 0:
        raise IndexError(f"negative flat index {index}")
    i = (1 + math.isqrt(1 + 8 * index)) // 2
    return i, index - i * (i - 1) // 2


def _check_budget(k: int, budget: int | None) -> None:
    if budget is None:
        return
    need = entry_count(k) * 8
    if need > budget:
        raise MemoryBudgetError(
            f"k={k} needs {need} bytes for {entry_count(k)} distances, "
            f"over the {budget}-byte memory budget"
        )


class TriangularDistanceMatrix:
    """Pairwise distances of ``k`` slotted points plus the id held by each slot."""

    __slots__ = ("k", "entries", "slot_ids")

    def __init__(self, k: int, entries: np.ndarray, slot_ids: Sequence[Any]):
        if k < 2:
            raise DataError(f"a distance matrix needs at least 2 points, got k={k}")
        entries = np.asarray(entries, dtype=np.float64)
        if entries.shape != (entry_count(k),):
            raise DataError(f"expected {entry_count(k)} entries for k={k}, got {entries.shape}")
        if len(slot_ids) != k:
            raise DataError(f"expected {k} slot ids, got {len(slot_ids)}")
        if len(set(slot_ids)) != k:
            raise DataError("slot ids must be pairwise distinct")
        self.k = k
        self.entries = entries
        self.slot_ids = list(slot_ids)

    @classmethod
    def build(
        cls,
        points: Sequence[Any],
        *,
        ids: Sequence[Any] | None = None,
        metric: Metric = distances_to,
        memory_budget: int | None = DEFAULT_MEMORY_BUDGET,
        block: tuple[np.ndarray, np.ndarray] | None = None,
    ) -> "TriangularDistanceMatrix":
        """Compute every pairwise distance of ``points`` exactly once.

        Slot ids default to each point's ``point_id``. ``block`` lets a caller
        that already holds the stacked ``(vectors, norms)`` skip restacking.
        """
        k = len(points)
        if k < 2:
            raise DataError(f"a distance matrix needs at least 2 points, got {k}")
        _check_budget(k, memory_budget)
        if ids is None:
            ids = [getattr(p, "point_id", i) for i, p in enumerate(points)]
        vecs, norms = block if block is not None else stack(points)
        return cls(k, condensed_distances(vecs, norms, metric), ids)

    def distance(self, i: int, j: int) -> float:
        if i == j:
            return 0.0
        if i < j:
            i, j = j, i
        if i >= self.k:
            raise IndexError(f"slot {i} out of range for k={self.k}")
        return float(self.entries[flat_index(i, j)])

    def min_entry(self) -> tuple[int, int, float]:
        """Smallest stored distance as ``(i, j, distance)`` with ``i > j``.

        Linear scan; ties go to the smallest flat index.
        """
        f = int(np.argmin(self.entries))
        i, j = unflatten(f)
        return i, j, float(self.entries[f])

    def replace_slot(self, slot: int, new_id: Any, new_column: Sequence[float] | np.ndarray) -> None:
        """Install ``new_id`` in ``slot`` and overwrite the ``k - 1`` incident entries.

        ``new_column[t]`` is the new point's distance to slot ``t``; the value
        at ``new_column[slot]`` (its distance to the evicted point) is ignored.
        """
        if not (0 <= slot < self.k):
            raise IndexError(f"slot {slot} out of range for k={self.k}")
        col = np.asarray(new_column, dtype=np.float64)
        if col.shape != (self.k,):
            raise DataError(f"column must have {self.k} values, got shape {col.shape}")
        if new_id != self.slot_ids[slot] and new_id in self.slot_ids:
            raise DataError(f"point {new_id!r} already occupies another slot")
        base = slot * (slot - 1) // 2
        self.entries[base : base + slot] = col[:slot]
        later = np.arange(slot + 1, self.k)
        self.entries[later * (later - 1) // 2 + slot] = col[slot + 1 :]
        self.slot_ids[slot] = new_id

    def recompute(self, members: Sequence[Any]) -> np.ndarray:
        """Fresh O(k^2) recomputation from ``members``, for consistency checks."""
        vecs, norms = stack(members)
        return condensed_distances(vecs, norms)

    def to_square(self) -> np.ndarray:
        full = np.zeros((self.k, self.k))
        rows, cols = np.tril_indices(self.k, -1)
        full[rows, cols] = self.entries
        full[cols, rows] = self.entries
        return full

    def rows(self):
        """Yield ``(i, j, distance)`` in flat order."""
        for f, d in enumerate(self.entries):
            i, j = unflatten(f)
            yield i, j, float(d)

    def write_csv(self, path: str | os.PathLike) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["i", "j", "distance"])
            for i, j, d in self.rows():
                w.writerow([i, j, repr(d)])

    def __len__(self) -> int:
        return len(self.entries)

    def __repr__(self) -> str:
        return f"TriangularDistanceMatrix(k={self.k}, entries={len(self.entries)})"


build = TriangularDistanceMatrix.build


def min_entry(m: TriangularDistanceMatrix) -> tuple[int, int, float]:
    return m.min_entry()


def column_distances(
    p: Any,
    m: TriangularDistanceMatrix,
    members: Sequence[Any] | tuple[np.ndarray, np.ndarray],
) -> np.ndarray:
    """Distances from ``p`` to every member, in slot order (``k`` metric calls).

    ``members`` is either the member points or their stacked ``(vectors, norms)``.
    """
    if isinstance(members, tuple) and len(members) == 2 and isinstance(members[0], np.ndarray):
        vecs, norms = members
    else:
        vecs, norms = stack(members)
    if vecs.shape[0] != m.k:
        raise DataError(f"matrix tracks {m.k} slots but {vecs.shape[0]} members were given")
    return distances_to(as_vector(p), vecs, norms)


def replace_slot(m: TriangularDistanceMatrix, slot: int, new_id: Any, new_column) -> TriangularDistanceMatrix:
    m.replace_slot(slot, new_id, new_column)
    return m


__all__ = [
    "DEFAULT_MEMORY_BUDGET",
    "TriangularDistanceMatrix",
    "build",
    "column_distances",
    "entry_count",
    "flat_index",
    "min_entry",
    "replace_slot",
    "unflatten",
]
