"""Embedding vectors and the cosine metric.

Every edge weight in divcore is a cosine *distance*, ``1 - cos(u, v)``, so
"smallest edge" always means "least diverse pair".

All batch kernels reduce along the last axis of C-contiguous float64 arrays.
Numpy performs that reduction row by row with the same summation routine it
uses for a single 1-D vector, so a pair's distance is bit-identical whether it
is computed alone, inside a column, or inside a full condensed scan. The
brute-force and adjacency engines depend on that to produce identical logs.
"""

from __future__ import annotations

from typing import Any, Callable, Iterable, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "Vector",
    "as_vector",
    "vectors_from_array",
    "stack",
    "cosine_similarity",
    "cosine_distance",
    "distances_to",
    "condensed_distances",
    "pairwise_distances",
]


def _row_norms(block: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore"):
        return np.sqrt((block * block).sum(axis=-1))


class Vector:
    """An immutable, validated embedding vector stored in double precision.

    >>> Vector([3.0, 4.0]).norm
    5.0
    """

    __slots__ = ("components", "norm")

    components: np.ndarray
    norm: float

    def __init__(self, components: Iterable[float] | np.ndarray):
        arr = np.array(components, dtype=np.float64, order="C", ndmin=1)
        if arr.ndim != 1 or arr.size == 0:
            raise DataError(f"vector must be a non-empty 1-D sequence, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise DataError("vector has non-finite components")
        norm = float(_row_norms(arr[None, :])[0])
        if not norm > 0.0:
            raise DataError("zero vector: cosine distance is undefined")
        if not np.isfinite(norm):
            raise DataError("vector norm overflows float64")
        arr.flags.writeable = False
        object.__setattr__(self, "components", arr)
        object.__setattr__(self, "norm", norm)

    @classmethod
    def _trusted(cls, components: np.ndarray, norm: float) -> "Vector":
        # bulk loaders validate whole arrays up front
        self = object.__new__(cls)
        object.__setattr__(self, "components", components)
        object.__setattr__(self, "norm", norm)
        return self

    def __setattr__(self, name: str, value: Any) -> None:
        raise AttributeError("Vector is immutable")

    @property
    def dim(self) -> int:
        return int(self.components.shape[0])

    def __len__(self) -> int:
        return self.dim

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vector):
            return NotImplemented
        return bool(np.array_equal(self.components, other.components))

    __hash__ = None  # type: ignore[assignment]

    def __reduce__(self):
        return (Vector, (self.components.copy(),))

    def __repr__(self) -> str:
        if self.dim <= 6:
            body = ", ".join(f"{x:g}" for x in self.components)
        else:
            head = ", ".join(f"{x:g}" for x in self.components[:3])
            body = f"{head}, ... ({self.dim} dims)"
        return f"Vector([{body}])"


def as_vector(x: Any) -> Vector:
    """Coerce a Vector, anything with a ``.vector`` attribute, or an array-like."""
    if isinstance(x, Vector):
        return x
    inner = getattr(x, "vector", None)
    if isinstance(inner, Vector):
        return inner
    return Vector(x)


def vectors_from_array(arr: np.ndarray, *, first_row: int = 0) -> list[Vector]:
    """Validate a 2-D array in bulk and wrap each row as a :class:`Vector`.

    Rows become read-only views into one C-contiguous float64 copy of ``arr``.
    Error messages number rows starting at ``first_row``.
    """
    data = np.array(arr, dtype=np.float64, order="C", ndmin=2)
    if data.ndim != 2 or data.shape[1] == 0:
        raise DataError(f"expected a 2-D array with at least one column, got shape {data.shape}")
    finite = np.isfinite(data).all(axis=1)
    if not finite.all():
        bad = int(np.argmin(finite))
        raise DataError(f"row {bad + first_row}: non-finite value")
    norms = _row_norms(data)
    zero = ~(norms > 0.0)
    if zero.any():
        bad = int(np.argmax(zero))
        raise DataError(f"row {bad + first_row}: zero vector")
    if not np.isfinite(norms).all():
        bad = int(np.argmin(np.isfinite(norms)))
        raise DataError(f"row {bad + first_row}: vector norm overflows float64")
    data.flags.writeable = False
    return [Vector._trusted(data[i], float(norms[i])) for i in range(data.shape[0])]


def stack(points: Sequence[Any]) -> tuple[np.ndarray, np.ndarray]:
    """Stack points into a C-contiguous ``(n, dim)`` block plus their norms."""
    vecs = [as_vector(p) for p in points]
    if not vecs:
        raise DataError("cannot stack an empty point sequence")
    dim = vecs[0].dim
    for i, v in enumerate(vecs):
        if v.dim != dim:
            raise DataError(f"dimension mismatch at position {i}: {v.dim} != {dim}")
    block = np.ascontiguousarray(np.stack([v.components for v in vecs]))
    norms = np.array([v.norm for v in vecs], dtype=np.float64)
    return block, norms


def _similarities(u: np.ndarray, u_norm: float, block: np.ndarray, norms: np.ndarray) -> np.ndarray:
    sims = (block * u).sum(axis=-1) / (norms * u_norm)
    return np.clip(sims, -1.0, 1.0, out=sims)


def _check_dims(u: Vector, block: np.ndarray) -> None:
    if block.shape[-1] != u.dim:
        raise DataError(f"dimension mismatch: {u.dim} != {block.shape[-1]}")


def cosine_similarity(u: Any, v: Any) -> float:
    """Return ``u.v / (|u| |v|)`` clamped to ``[-1, 1]``."""
    u, v = as_vector(u), as_vector(v)
    _check_dims(u, v.components)
    return float(_similarities(u.components, u.norm, v.components[None, :], np.array([v.norm]))[0])


def cosine_distance(u: Any, v: Any) -> float:
    """Return ``1 - cosine_similarity(u, v)``, a value in ``[0, 2]``."""
    return 1.0 - cosine_similarity(u, v)


def distances_to(u: Any, block: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Cosine distances from ``u`` to every row of ``block``, in row order.

    This is the one metric kernel every other routine goes through.
    """
    u = as_vector(u)
    _check_dims(u, block)
    return 1.0 - _similarities(u.components, u.norm, block, norms)


Metric = Callable[[Vector, np.ndarray, np.ndarray], np.ndarray]


def condensed_distances(
    block: np.ndarray, norms: np.ndarray, metric: Metric = distances_to
) -> np.ndarray:
    """All pairwise distances of ``block`` in strict-lower-triangle order.

    Pair ``(i, j)`` with ``i > j`` lands at index ``i*(i-1)/2 + j``. Row ``i``
    contributes a contiguous run of ``i`` values, each pair evaluated once.
    """
    n = block.shape[0]
    out = np.empty(n * (n - 1) // 2, dtype=np.float64)
    for i in range(1, n):
        base = i * (i - 1) // 2
        u = Vector._trusted(block[i], float(norms[i]))
        out[base : base + i] = metric(u, block[:i], norms[:i])
    return out


def pairwise_distances(block: np.ndarray, norms: np.ndarray) -> np.ndarray:
    """Full symmetric ``(n, n)`` distance matrix with an exact zero diagonal."""
    n = block.shape[0]
    full = np.zeros((n, n), dtype=np.float64)
    for i in range(1, n):
        u = Vector._trusted(block[i], float(norms[i]))
        row = distances_to(u, block[:i], norms[:i])
        full[i, :i] = row
        full[:i, i] = row
    return full
