"""Curve-shape similarity: dynamic time warping, baselines, and source ranking.

The DTW distance here is the minimum cumulative sum of squared stress
differences along a valid monotone alignment path between two curves that were
normalized and resampled onto the same strain grid. No square root and no
path-length normalization are applied, and the recurrence is unconstrained
(no warping window).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .curves import RawCurve, Dataset, GridCurve, grid_curve, DEFAULT_GRID_N
from .metrics import pearson

BRUTE_FORCE_MAX_LEN = 10


@dataclass(frozen=True)
class CostMatrices:
    """Local squared-difference matrix and its cumulative-cost counterpart."""

    local: np.ndarray
    cumulative: np.ndarray


@dataclass(frozen=True)
class DtwResult:
    """DTW distance plus the warping path that realizes it.

    The path uses 0-based (row, col) indices, runs from (0, 0) to
    (N-1, N-1), and steps by (1, 0), (0, 1), or (1, 1).
    """

    distance: float
    path: list[tuple[int, int]]


@dataclass(frozen=True)
class SourceRanking:
    """Average-DTW ranking of candidate source datasets, ascending.

    Ties are broken by lexicographic dataset name; ``selected`` is the first
    entry (smallest average distance).
    """

    entries: list[tuple[str, float]]
    selected: str


def _check_same_length(a: GridCurve, b: GridCurve) -> None:
    if len(a.stress_norm) != len(b.stress_norm):
        raise ValueError(
            f"grid length mismatch: {len(a.stress_norm)} vs {len(b.stress_norm)}"
        )


def local_distance_matrix(a: GridCurve, b: GridCurve) -> np.ndarray:
    """Matrix of squared differences between every pair of stress values."""
    _check_same_length(a, b)
    return (a.stress_norm[:, None] - b.stress_norm[None, :]) ** 2


def cumulative_cost(local: np.ndarray) -> np.ndarray:
    """Cumulative-cost matrix of the DTW recurrence.

    The first cell copies the local cost, the first row and column are running
    sums, and each interior cell adds its local cost to the cheapest of the
    three admissible predecessors.
    """
    local = np.asarray(local, dtype=float)
    n, m = local.shape
    # Row-local Python lists beat numpy scalar indexing for this sequential DP.
    loc = local.tolist()
    rows = [[0.0] * m for _ in range(n)]
    rows[0][0] = loc[0][0]
    for l in range(1, m):
        rows[0][l] = loc[0][l] + rows[0][l - 1]
    for k in range(1, n):
        cur, prev, lk = rows[k], rows[k - 1], loc[k]
        cur[0] = lk[0] + prev[0]
        for l in range(1, m):
            best = prev[l - 1]
            if prev[l] < best:
                best = prev[l]
            if cur[l - 1] < best:
                best = cur[l - 1]
            cur[l] = lk[l] + best
    return np.array(rows)


def _backtrack(local: np.ndarray, cumulative: np.ndarray) -> list[tuple[int, int]]:
    # Tie-break at equal cost: diagonal > up > left.
    k, l = cumulative.shape[0] - 1, cumulative.shape[1] - 1
    path = [(k, l)]
    while k > 0 or l > 0:
        if k == 0:
            l -= 1
        elif l == 0:
            k -= 1
        else:
            diag, up, left = cumulative[k - 1, l - 1], cumulative[k - 1, l], cumulative[k, l - 1]
            if diag <= up and diag <= left:
                k, l = k - 1, l - 1
            elif up <= left:
                k -= 1
            else:
                l -= 1
        path.append((k, l))
    path.reverse()
    return path


def dtw_alignment(a: GridCurve, b: GridCurve) -> tuple[DtwResult, CostMatrices]:
    """DTW distance, warping path, and both cost matrices for one curve pair."""
    local = local_distance_matrix(a, b)
    cumulative = cumulative_cost(local)
    path = _backtrack(local, cumulative)
    return DtwResult(float(cumulative[-1, -1]), path), CostMatrices(local, cumulative)


def dtw_distance(a: GridCurve, b: GridCurve) -> DtwResult:
    """DTW distance between two gridded curves, with the optimal path."""
    result, _ = dtw_alignment(a, b)
    return result


def brute_force_dtw(a, b) -> float:
    """Exhaustive-enumeration DTW over all valid alignment paths.

    Test oracle for :func:`dtw_distance`: recursively explores every monotone
    path from (0, 0) to (K-1, L-1) without memoization and returns the minimum
    total squared-difference cost. Exponential in sequence length, hence the
    length cap.
    """
    a = [float(v) for v in a]
    b = [float(v) for v in b]
    K, L = len(a), len(b)
    if K == 0 or L == 0:
        raise ValueError("sequences must be non-empty")
    if K > BRUTE_FORCE_MAX_LEN or L > BRUTE_FORCE_MAX_LEN:
        raise ValueError(f"sequences longer than {BRUTE_FORCE_MAX_LEN} are intractable to enumerate")
    d = [[(ai - bj) ** 2 for bj in b] for ai in a]

    def best_from(k: int, l: int) -> float:
        cost = d[k][l]
        if k == K - 1 and l == L - 1:
            return cost
        best = None
        if k + 1 < K:
            best = best_from(k + 1, l)
        if l + 1 < L:
            v = best_from(k, l + 1)
            best = v if best is None or v < best else best
        if k + 1 < K and l + 1 < L:
            v = best_from(k + 1, l + 1)
            best = v if v < best else best
        return cost + best

    return best_from(0, 0)


def average_dtw(source: list[GridCurve], target: list[GridCurve]) -> float:
    """Mean DTW distance over all source x target curve pairs."""
    if not source or not target:
        raise ValueError("average_dtw requires non-empty curve lists")
    total = 0.0
    for p in source:
        for m in target:
            total += dtw_distance(p, m).distance
    return total / (len(source) * len(target))


def rank_sources(
    sources: list[Dataset],
    target_train: list[RawCurve],
    n: int = DEFAULT_GRID_N,
) -> SourceRanking:
    """Rank candidate source datasets by average DTW distance to the target training curves.

    Only target TRAINING curves may be passed here; using test curves would
    leak them into model selection.
    """
    if not sources:
        raise ValueError("rank_sources requires at least one source dataset")
    if not target_train:
        raise ValueError("rank_sources requires at least one target training curve")
    target_grids = [grid_curve(c, n) for c in target_train]
    entries = []
    for dataset in sources:
        if not dataset.curves:
            raise ValueError(f"source dataset {dataset.name!r} is empty")
        source_grids = [grid_curve(c, n) for c in dataset.curves]
        entries.append((dataset.name, average_dtw(source_grids, target_grids)))
    entries.sort(key=lambda e: (e[1], e[0]))
    return SourceRanking(entries=entries, selected=entries[0][0])


def euclidean_distance(a: GridCurve, b: GridCurve) -> float:
    """Point-by-point sum of squared stress differences (no warping)."""
    _check_same_length(a, b)
    return float(np.sum((a.stress_norm - b.stress_norm) ** 2))


def pearson_similarity(a: GridCurve, b: GridCurve) -> float:
    """Sample Pearson correlation of the two gridded stress vectors."""
    _check_same_length(a, b)
    return pearson(a.stress_norm, b.stress_norm)
