"""Exact maximum-weight bipartite matching (Hungarian algorithm, O(n^3)).

Costs are compared lexicographically as (-weight, date distance), so among
equally heavy matchings the one with the smaller total date distance wins;
remaining ties resolve toward earlier row and column indices.
"""

from __future__ import annotations

import math
from typing import Optional, Sequence

_INF = (math.inf, math.inf)


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1])


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1])


def _hungarian(cost: list[list[tuple]]) -> list[int]:
    """Min-cost perfect assignment on a square matrix; returns col index per row."""
    n = len(cost)
    zero = (0.0, 0.0)
    u = [zero] * (n + 1)
    v = [zero] * (n + 1)
    owner = [0] * (n + 1)  # owner[j]: row (1-based) assigned to column j
    way = [0] * (n + 1)
    for i in range(1, n + 1):
        owner[0] = i
        j0 = 0
        minv = [_INF] * (n + 1)
        used = [False] * (n + 1)
        while True:
            used[j0] = True
            i0 = owner[j0]
            delta, j1 = _INF, 0
            row = cost[i0 - 1]
            ui0 = u[i0]
            for j in range(1, n + 1):
                if used[j]:
                    continue
                c = row[j - 1]
                cur = (c[0] - ui0[0] - v[j][0], c[1] - ui0[1] - v[j][1])
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta, j1 = minv[j], j
            for j in range(n + 1):
                if used[j]:
                    u[owner[j]] = _add(u[owner[j]], delta)
                    v[j] = _sub(v[j], delta)
                else:
                    minv[j] = _sub(minv[j], delta)
            j0 = j1
            if owner[j0] == 0:
                break
        while True:
            j1 = way[j0]
            owner[j0] = owner[j1]
            j0 = j1
            if j0 == 0:
                break
    assignment = [0] * n
    for j in range(1, n + 1):
        assignment[owner[j] - 1] = j - 1
    return assignment


def max_weight_assignment(weights: Sequence[Sequence[float]],
                          distances: Optional[Sequence[Sequence[float]]] = None) -> list[tuple[int, int]]:
    """One-to-one partial matching of maximum total weight; zero-weight pairs are left out.

    ``distances`` (same shape) only breaks ties between equally heavy matchings.
    Returns (row, col) pairs sorted by row.
    """
    p = len(weights)
    r = len(weights[0]) if p else 0
    if p == 0 or r == 0:
        return []
    for row in weights:
        if len(row) != r:
            raise ValueError("ragged weight matrix")
        for w in row:
            if not math.isfinite(w) or w < 0:
                raise ValueError(f"weights must be finite and >= 0, got {w}")
    n = max(p, r)
    cost = [[(0.0, 0.0)] * n for _ in range(n)]
    for i in range(p):
        for j in range(r):
            w = float(weights[i][j])
            if w > 0:
                d = float(distances[i][j]) if distances is not None else 0.0
                cost[i][j] = (-w, d)
    cols = _hungarian(cost)
    return [(i, cols[i]) for i in range(p) if cols[i] < r and weights[i][cols[i]] > 0]


def matching_weight(weights: Sequence[Sequence[float]], matching: Sequence[tuple[int, int]]) -> float:
    return math.fsum(weights[i][j] for i, j in matching)
