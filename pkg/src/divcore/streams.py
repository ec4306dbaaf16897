"""Dataset ingestion, partitioning into streams, and round-robin scheduling.

Two on-disk formats are understood:

* CSV: one vector per line, comma-separated decimals, optional header line.
* ``DIVCORE1`` binary: the 8-byte magic, ``uint32`` count ``N``, ``uint32``
  dimension ``d`` (both little-endian), then ``N*d`` little-endian float32
  values in row-major order.
"""

from __future__ import annotations

import codecs
import csv
import os
import struct
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import DataError
from .points import LabeledPoint
from .vecspace import Vector, as_vector, vectors_from_array

MAGIC = b"DIVCORE1"
_HEADER = struct.Struct("<II")


def _parse_csv_strict(path: str | os.PathLike, header: bool) -> list[Vector]:
    try:
        return _scan_csv(path, header)
    except (csv.Error, UnicodeDecodeError) as exc:
        raise DataError(f"{path}: not a readable CSV file ({exc})") from None


def _scan_csv(path: str | os.PathLike, header: bool) -> list[Vector]:
    rows: list[list[float]] = []
    width = None
    with open(path, newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if header and lineno == 1:
                continue
            if not row or all(not cell.strip() for cell in row):
                continue
            if width is None:
                width = len(row)
            elif len(row) != width:
                raise DataError(f"{path}: row {lineno} has {len(row)} columns, expected {width}")
            values = []
            for col, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise DataError(
                        f"{path}: row {lineno}, column {col}: cannot parse {cell.strip()!r} as a number"
                    ) from None
            try:
                as_vector(values)
            except DataError as exc:
                raise DataError(f"{path}: row {lineno}: {exc}") from None
            rows.append(values)
    if not rows:
        raise DataError(f"{path}: no vectors found")
    return vectors_from_array(np.array(rows))


def load_csv(path: str | os.PathLike, header: bool = False) -> list[Vector]:
    """Read one vector per CSV row.

    Rows are numbered by file line (a header counts as row 1). Ragged rows,
    unparseable cells, non-finite values and zero vectors raise
    :class:`DataError` naming the offending row (and column, for parse errors).
    """
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            data = np.loadtxt(path, delimiter=",", dtype=np.float64, ndmin=2, skiprows=1 if header else 0)
        if data.size == 0:
            raise ValueError("empty")
        return vectors_from_array(data)
    except (ValueError, DataError):
        # rescan line by line for a precise error location
        return _parse_csv_strict(path, header)


def load_binary(path: str | os.PathLike) -> list[Vector]:
    with open(path, "rb") as fh:
        raw = fh.read()
    if raw[: len(MAGIC)] != MAGIC:
        raise DataError(f"{path}: bad magic, expected {MAGIC.decode()}")
    if len(raw) < len(MAGIC) + _HEADER.size:
        raise DataError(f"{path}: truncated header")
    n, d = _HEADER.unpack_from(raw, len(MAGIC))
    if n == 0 or d == 0:
        raise DataError(f"{path}: empty dataset (N={n}, d={d})")
    start = len(MAGIC) + _HEADER.size
    need = n * d * 4
    have = len(raw) - start
    if have < need:
        raise DataError(f"{path}: truncated payload, {have} bytes present but {need} required")
    if have > need:
        raise DataError(f"{path}: {have - need} unexpected trailing bytes after payload")
    data = np.frombuffer(raw, dtype="<f4", count=n * d, offset=start).astype(np.float64).reshape(n, d)
    try:
        return vectors_from_array(data, first_row=1)
    except DataError as exc:
        raise DataError(f"{path}: {exc}") from None


def write_binary(path: str | os.PathLike, vectors: Sequence[Vector]) -> None:
    if not vectors:
        raise DataError("refusing to write an empty dataset")
    data = np.stack([as_vector(v).components for v in vectors])
    with np.errstate(over="ignore"):
        packed = data.astype("<f4")
    if not np.isfinite(packed).all():
        raise DataError("values overflow float32")
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(_HEADER.pack(data.shape[0], data.shape[1]))
        fh.write(packed.tobytes(order="C"))


def is_binary(path: str | os.PathLike) -> bool:
    with open(path, "rb") as fh:
        return fh.read(len(MAGIC)) == MAGIC


def _looks_binary(head: bytes) -> bool:
    if head.startswith(MAGIC) or b"\0" in head:
        return True
    try:
        codecs.getincrementaldecoder("utf-8")().decode(head, final=False)
    except UnicodeDecodeError:
        return True
    return False


def load_vectors(path: str | os.PathLike, header: bool = False) -> list[Vector]:
    """Load either format, sniffing the binary magic and falling back to CSV.

    Content that cannot be CSV text (NUL bytes, invalid UTF-8) goes to the
    binary reader so a damaged header is reported as such.
    """
    with open(path, "rb") as fh:
        head = fh.read(4096)
    if _looks_binary(head):
        return load_binary(path)
    return load_csv(path, header=header)


@dataclass
class StreamSource:
    """One simulated stream: yields its elements once, in stored order.

    ``first_id`` is the global point id of element 0, so ids stay unique
    across streams cut from the same dataset.
    """

    stream_id: int
    elements: Sequence[Vector]
    first_id: int = 0
    cursor: int = 0

    def __len__(self) -> int:
        return len(self.elements)

    @property
    def exhausted(self) -> bool:
        return self.cursor >= len(self.elements)

    @property
    def remaining(self) -> int:
        return len(self.elements) - self.cursor

    def next(self) -> tuple[int, Vector] | None:
        if self.exhausted:
            return None
        i = self.cursor
        self.cursor += 1
        return self.first_id + i, self.elements[i]


def partition(dataset: Sequence[Vector], n: int) -> list[StreamSource]:
    """Split ``dataset`` into ``n`` contiguous blocks; the last takes the remainder."""
    if n < 1:
        raise DataError(f"need at least one stream, got n={n}")
    if n > len(dataset):
        raise DataError(f"cannot cut {len(dataset)} vectors into {n} streams")
    size = len(dataset) // n
    out = []
    for i in range(n):
        lo = i * size
        hi = len(dataset) if i == n - 1 else lo + size
        out.append(StreamSource(stream_id=i, elements=dataset[lo:hi], first_id=lo))
    return out


@dataclass
class Scheduler:
    """Round-robin over live streams with one global timestamp counter."""

    streams: Sequence[StreamSource]
    next_timestamp: int = 0
    _order: list[StreamSource] = field(init=False, repr=False)

    def __post_init__(self) -> None:
        self._order = sorted(self.streams, key=lambda s: s.stream_id)

    @property
    def exhausted(self) -> bool:
        return all(s.exhausted for s in self._order)

    def next_round(self) -> list[tuple[int, LabeledPoint]]:
        """One element from each non-exhausted stream, by ascending stream id.

        An empty list means every stream is exhausted.
        """
        out = []
        for src in self._order:
            item = src.next()
            if item is None:
                continue
            pid, vec = item
            out.append((src.stream_id, LabeledPoint(pid, src.stream_id, self.next_timestamp, vec)))
            self.next_timestamp += 1
        return out


def local_timestamp(local_index: int, stream_id: int, n_streams: int) -> int:
    """Timestamp for a worker consuming its stream without the shared scheduler.

    Unique across streams and increasing within one, with no coordination.
    """
    return local_index * n_streams + stream_id


def next_round(scheduler: Scheduler) -> list[tuple[int, LabeledPoint]]:
    return scheduler.next_round()
