"""Offline reference selections for judging streamed core-sets."""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass
from typing import Any, Sequence

import numpy as np

from ..errors import DataError, OracleGuardError
from ..vecspace import Vector, as_vector, distances_to, pairwise_distances, stack

EXHAUSTIVE_LIMIT = 20
_EXACT_FARTHEST_LIMIT = 2048
_PREFILTER_MARGIN = 1e-9
_CHUNK = 1 << 16


@dataclass
class Selection:
    """A chosen subset, unpackable as ``(subset, diversity)``."""

    indices: tuple[int, ...]
    diversity: float
    subset: list[Any]

    def __iter__(self):
        return iter((self.subset, self.diversity))


def _check_k(k: int, n: int) -> None:
    if k < 2:
        raise DataError(f"subset size must be at least 2, got {k}")
    if k > n:
        raise DataError(f"subset size {k} exceeds the {n} available points")


def exhaustive_max_min(points: Sequence[Any], k: int) -> Selection:
    """Best size-``k`` subset by enumerating all ``C(n, k)`` candidates.

    Among equally diverse subsets the lexicographically smallest index set
    wins. Refuses ``n > 20``.
    """
    n = len(points)
    if n > EXHAUSTIVE_LIMIT:
        raise OracleGuardError(
            f"exhaustive search is limited to {EXHAUSTIVE_LIMIT} points (got {n}); use gmm_greedy instead"
        )
    _check_k(k, n)
    block, norms = stack(points)
    dist = pairwise_distances(block, norms)
    pair_slots = list(itertools.combinations(range(k), 2))

    best_val, best_combo = -math.inf, None
    combos = itertools.combinations(range(n), k)
    while True:
        chunk = np.fromiter(
            itertools.chain.from_iterable(itertools.islice(combos, _CHUNK)), dtype=np.intp
        ).reshape(-1, k)
        if chunk.shape[0] == 0:
            break
        worst = np.full(chunk.shape[0], np.inf)
        for a, b in pair_slots:
            np.minimum(worst, dist[chunk[:, a], chunk[:, b]], out=worst)
        f = int(np.argmax(worst))
        if worst[f] > best_val:
            best_val, best_combo = float(worst[f]), tuple(int(x) for x in chunk[f])
    return Selection(best_combo, best_val, [points[i] for i in best_combo])


def _farthest_pair(block: np.ndarray, norms: np.ndarray) -> tuple[int, int]:
    n = block.shape[0]
    if n <= _EXACT_FARTHEST_LIMIT:
        dist = pairwise_distances(block, norms)
        rows, cols = np.triu_indices(n, 1)
        f = int(np.argmax(dist[rows, cols]))
        return int(rows[f]), int(cols[f])

    # BLAS prefilter, then exact recheck of every pair near the approximate max
    unit = block / norms[:, None]
    step = max(1, (1 << 24) // n)
    best = -math.inf
    cands: list[np.ndarray] = []
    for lo in range(0, n, step):
        hi = min(n, lo + step)
        approx = 1.0 - unit[lo:hi] @ unit.T
        approx[np.arange(hi - lo)[:, None] >= np.arange(n)[None, :] - lo] = -math.inf
        top = float(approx.max())
        if top < best - _PREFILTER_MARGIN:
            continue
        best = max(best, top)
        r, c = np.nonzero(approx >= best - _PREFILTER_MARGIN)
        cands.append(np.stack([r + lo, c], axis=1))
    pairs = np.concatenate(cands)
    best_exact, best_pair = -math.inf, None
    for i, j in sorted(map(tuple, pairs.tolist())):
        d = float(distances_to(Vector._trusted(block[i], float(norms[i])), block[j : j + 1], norms[j : j + 1])[0])
        if d > best_exact:
            best_exact, best_pair = d, (i, j)
    return best_pair


def gmm_greedy(points: Sequence[Any], k: int) -> Selection:
    """Farthest-first selection of ``k`` points.

    Starts from the farthest pair, then repeatedly adds the point whose
    distance to the nearest selected point is largest. Ties go to the
    smallest index (smallest index pair for the seed).
    """
    n = len(points)
    _check_k(k, n)
    block, norms = stack(points)
    a, b = _farthest_pair(block, norms)
    chosen = [a, b]

    def dists(i: int) -> np.ndarray:
        return distances_to(Vector._trusted(block[i], float(norms[i])), block, norms)

    gap = np.minimum(dists(a), dists(b))
    gap[chosen] = -np.inf
    while len(chosen) < k:
        nxt = int(np.argmax(gap))
        chosen.append(nxt)
        np.minimum(gap, dists(nxt), out=gap)
        gap[chosen] = -np.inf
    chosen_block = block[chosen]
    sub_norms = norms[chosen]
    div = float(pairwise_distances(chosen_block, sub_norms)[np.triu_indices(k, 1)].min())
    return Selection(tuple(chosen), div, [points[i] for i in chosen])


def alpha_ratio(reference_diversity: float, achieved_diversity: float) -> float:
    """How far ``achieved`` falls short of ``reference``, as ``reference / achieved``.

    A zero achieved diversity means duplicates survived into the core-set;
    that yields ``inf`` with a warning.
    """
    if achieved_diversity < 0 or reference_diversity < 0:
        raise ValueError("diversities are non-negative")
    if achieved_diversity == 0:
        warnings.warn("achieved diversity is zero (duplicate points survived); alpha is infinite", RuntimeWarning, stacklevel=2)
        return math.inf
    return reference_diversity / achieved_diversity


@dataclass(frozen=True)
class SeparationAudit:
    """Post-hoc check of a subset against the points it left out.

    ``internal`` is the subset's diversity, ``to_outside`` the smallest
    distance from a member to a non-member, ``outside`` the smallest distance
    between two non-members (``inf`` when fewer than two were left out).
    """

    internal: float
    to_outside: float
    outside: float

    @property
    def beats_cross_edges(self) -> bool:
        return self.internal > self.to_outside

    @property
    def beats_outside_edges(self) -> bool:
        return self.internal > self.outside


def separation_audit(universe: Sequence[Any], member_indices: Sequence[int]) -> SeparationAudit:
    n = len(universe)
    inside = sorted(set(member_indices))
    if len(inside) < 2:
        raise DataError("audit needs at least two members")
    outside = [i for i in range(n) if i not in set(inside)]
    block, norms = stack([as_vector(p) for p in universe])
    dist = pairwise_distances(block, norms)
    sub = dist[np.ix_(inside, inside)][np.triu_indices(len(inside), 1)]
    cross = dist[np.ix_(inside, outside)] if outside else np.array([math.inf])
    out = dist[np.ix_(outside, outside)][np.triu_indices(len(outside), 1)] if len(outside) > 1 else np.array([math.inf])
    return SeparationAudit(float(sub.min()), float(cross.min()), float(out.min()))
