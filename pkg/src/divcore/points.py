from __future__ import annotations

from dataclasses import dataclass

from .vecspace import Vector


@dataclass(frozen=True, slots=True)
class LabeledPoint:
    """A vector tagged with its global id, origin stream and arrival timestamp."""

    point_id: int
    stream_id: int
    timestamp: int
    vector: Vector

    @property
    def dim(self) -> int:
        return self.vector.dim
