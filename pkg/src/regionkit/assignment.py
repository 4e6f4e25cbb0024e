"""Optimal one-to-one matching between predictions and ground truths.

hungarian_match maximizes the total pairwise score under a one-to-one
constraint. Internally the problem is turned into square cost minimization
(cost = 1 - score, padding cost 1), solved with the Jonker-Volgenant
shortest augmenting path algorithm, and then canonicalized so that among all
maximizing assignments the reported one is lexicographically smallest in
(prediction index, ground-truth index) order. That makes results reproducible
across runs and platforms even when scores tie, and guarantees that matching
a list against itself yields the identity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Matrices up to this size run on plain lists; the constant factors of numpy
# dominate for the tiny matrices produced by per-sample evaluation.
_NUMPY_THRESHOLD = 32


@dataclass(frozen=True)
class ScoreMatrix:
    """Dense rows x cols matrix of pairwise scores in [0, 1], row-major."""

    rows: int
    cols: int
    data: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "data", tuple(float(x) for x in self.data))
        if self.rows < 0 or self.cols < 0:
            raise ValueError("matrix dimensions must be non-negative")
        if len(self.data) != self.rows * self.cols:
            raise ValueError(
                f"expected {self.rows * self.cols} entries for "
                f"{self.rows}x{self.cols}, got {len(self.data)}"
            )
        for value in self.data:
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"score {value!r} outside [0, 1]")

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "ScoreMatrix":
        rows = [list(r) for r in rows]
        cols = len(rows[0]) if rows else 0
        for r in rows:
            if len(r) != cols:
                raise ValueError("ragged rows in score matrix")
        flat = tuple(x for r in rows for x in r)
        return cls(len(rows), cols, flat)

    def at(self, i: int, j: int) -> float:
        if not (0 <= i < self.rows and 0 <= j < self.cols):
            raise IndexError(f"({i}, {j}) outside {self.rows}x{self.cols}")
        return self.data[i * self.cols + j]


@dataclass(frozen=True)
class Assignment:
    """Result of a matching: triples (prediction, ground truth, score).

    matches is ordered by prediction index and always has min(rows, cols)
    entries; zero-score matches are included. The unmatched tuples list the
    leftover indices of the larger side in ascending order.
    """

    matches: tuple[tuple[int, int, float], ...]
    unmatched_predictions: tuple[int, ...]
    unmatched_ground_truths: tuple[int, ...]

    @property
    def total(self) -> float:
        return math.fsum(score for _, _, score in self.matches)


def hungarian_match(matrix: ScoreMatrix) -> Assignment:
    """Maximize total matched score; ties break lexicographically."""
    n, m = matrix.rows, matrix.cols
    k = max(n, m)
    if k == 0:
        return Assignment((), (), ())

    cost = [
        [1.0 - matrix.at(i, j) if i < n and j < m else 1.0 for j in range(k)]
        for i in range(k)
    ]
    if k <= _NUMPY_THRESHOLD:
        col_of, u, v = _solve_lists(cost)
    else:
        col_of, u, v = _solve_numpy(np.asarray(cost, dtype=np.float64))

    col_of = _lexicographic_pass(cost, col_of, u, v, n, m)

    row_of = [0] * k
    for i, j in enumerate(col_of):
        row_of[j] = i
    matches = tuple(
        (i, col_of[i], matrix.at(i, col_of[i])) for i in range(n) if col_of[i] < m
    )
    unmatched_predictions = tuple(i for i in range(n) if col_of[i] >= m)
    unmatched_ground_truths = tuple(j for j in range(m) if row_of[j] >= n)
    return Assignment(matches, unmatched_predictions, unmatched_ground_truths)


def _solve_lists(cost: list[list[float]]):
    """Jonker-Volgenant on nested lists; returns (col_of, u, v), 0-based."""
    k = len(cost)
    inf = math.inf
    u = [0.0] * (k + 1)
    v = [0.0] * (k + 1)
    match_row = [0] * (k + 1)  # 1-based: row matched to each column, 0 = free
    way = [0] * (k + 1)
    for i in range(1, k + 1):
        match_row[0] = i
        j0 = 0
        minv = [inf] * (k + 1)
        used = [False] * (k + 1)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            row = cost[i0 - 1]
            u_i0 = u[i0]
            delta = inf
            j1 = 0
            for j in range(1, k + 1):
                if used[j]:
                    continue
                cur = row[j - 1] - u_i0 - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(k + 1):
                if used[j]:
                    u[match_row[j]] += delta
                    v[j] -= delta
                else:
                    minv[j] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            match_row[j0] = match_row[j1]
            j0 = j1
    col_of = [0] * k
    for j in range(1, k + 1):
        col_of[match_row[j] - 1] = j - 1
    return col_of, u[1:], v[1:]


def _solve_numpy(cost: np.ndarray):
    """Same algorithm as _solve_lists with vectorized inner scans."""
    k = cost.shape[0]
    u = np.zeros(k + 1)
    v = np.zeros(k + 1)
    match_row = np.zeros(k + 1, dtype=np.intp)
    way = np.zeros(k + 1, dtype=np.intp)
    for i in range(1, k + 1):
        match_row[0] = i
        j0 = 0
        minv = np.full(k + 1, np.inf)
        used = np.zeros(k + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = int(match_row[j0])
            cur = cost[i0 - 1] - u[i0] - v[1:]
            free = ~used[1:]
            improve = free & (cur < minv[1:])
            if improve.any():
                minv[1:][improve] = cur[improve]
                way[1:][improve] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = float(masked[j1 - 1])
            u[match_row[used]] += delta
            v[used] -= delta
            minv[~used] -= delta
            j0 = j1
            if match_row[j0] == 0:
                break
        while j0:
            j1 = int(way[j0])
            match_row[j0] = match_row[j1]
            j0 = j1
    col_of = np.zeros(k, dtype=np.intp)
    col_of[match_row[1:] - 1] = np.arange(k)
    return col_of.tolist(), u[1:].tolist(), v[1:].tolist()


def _lexicographic_pass(cost, col_of, u, v, n, m):
    """Rewire an optimal matching to the lexicographically smallest one.

    Optimality is preserved by moving only along edges that are provably part
    of some optimal assignment: zero-reduced-cost edges under the dual
    potentials, plus the edges of the incoming matching. When every matched
    real edge has cost exactly zero the tight set is widened to all zero-cost
    edges, which sidesteps float noise in the duals for the common
    self-comparison case.
    """
    k = len(col_of)
    matched0 = {(i, col_of[i]) for i in range(k)}
    real_zero = all(
        cost[i][col_of[i]] == 0.0 for i in range(n) if col_of[i] < m
    )
    if real_zero:

        def allowed(i: int, j: int) -> bool:
            if i >= n or j >= m:
                return True
            return cost[i][j] == 0.0

    else:

        def allowed(i: int, j: int) -> bool:
            if (i, j) in matched0:
                return True
            return (cost[i][j] - u[i] - v[j]) == 0.0

    row_of = [0] * k
    for i, j in enumerate(col_of):
        row_of[j] = i
    fixed = [False] * k
    for i in range(k):
        current = col_of[i]
        for j in range(k):
            if j == current:
                break
            if fixed[j] or not allowed(i, j):
                continue
            if _reroute(i, j, col_of, row_of, fixed, allowed):
                break
        fixed[col_of[i]] = True
    return col_of


def _reroute(i, new_j, col_of, row_of, fixed, allowed: Callable[[int, int], bool]):
    """Give column new_j to row i if the rest can still be perfectly matched.

    Frees row i's current column, assigns new_j to i, then searches an
    augmenting path that re-seats the displaced row using only allowed edges
    and unfixed columns. Commits on success, leaves state untouched on
    failure.
    """
    k = len(col_of)
    free_col = col_of[i]
    displaced = row_of[new_j]
    visited = [False] * k
    visited[new_j] = True
    claimed_by: dict[int, int] = {}

    stack = [(displaced, 0)]
    found = False
    while stack and not found:
        row, start = stack.pop()
        for c in range(start, k):
            if visited[c] or fixed[c] or not allowed(row, c):
                continue
            visited[c] = True
            claimed_by[c] = row
            if c == free_col:
                found = True
            else:
                stack.append((row, c + 1))
                stack.append((row_of[c], 0))
            break
    if not found:
        return False

    # Walk the alternating path backwards, reassigning as we go.
    col_of[i] = new_j
    row_of[new_j] = i
    c = free_col
    while True:
        row = claimed_by[c]
        previous = col_of[row]
        col_of[row] = c
        row_of[c] = row
        if row == displaced:
            break
        c = previous
    return True
