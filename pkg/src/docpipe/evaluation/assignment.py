"""Minimum-cost assignment for list matching.

The solver runs on exact rational arithmetic (every float is a dyadic
rational, so the conversion is lossless): the reported minimum is exact,
never off by a rounding epsilon, and ties are broken reproducibly by the
lexicographically smallest pair list.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence


def _solve_min(matrix: list[list[Fraction]]) -> Fraction:
    """Exact minimum total over perfect matchings of all rows; requires rows <= cols."""
    n = len(matrix)
    m = len(matrix[0])
    big = sum(sum(row) for row in matrix) + 1
    u = [Fraction(0)] * (n + 1)
    v = [Fraction(0)] * (m + 1)
    match_row = [0] * (m + 1)  # match_row[j] = row matched to column j (1-based), 0 = free
    way = [0] * (m + 1)
    for i in range(1, n + 1):
        match_row[0] = i
        j0 = 0
        minv = [big] * (m + 1)
        used = [False] * (m + 1)
        while True:
            used[j0] = True
            i0 = match_row[j0]
            delta = big
            j1 = 0
            for j in range(1, m + 1):
                if used[j]:
                    continue
                cur = matrix[i0 - 1][j - 1] - u[i0] - v[j]
                if cur < minv[j]:
                    minv[j] = cur
                    way[j] = j0
                if minv[j] < delta:
                    delta = minv[j]
                    j1 = j
            for j in range(m + 1):
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
    return sum(matrix[match_row[j] - 1][j - 1] for j in range(1, m + 1) if match_row[j])


def _min_total(cost: list[list[Fraction]], rows: Sequence[int], cols: Sequence[int]) -> Fraction:
    """Exact minimum assignment cost of size min(|rows|,|cols|) on a submatrix."""
    if not rows or not cols:
        return Fraction(0)
    sub = [[cost[r][c] for c in cols] for r in rows]
    if len(rows) > len(cols):
        sub = [list(col) for col in zip(*sub)]
    return _solve_min(sub)


def hungarian_assign(cost: Sequence[Sequence[float]]) -> tuple[list[tuple[int, int]], float]:
    """Minimum-cost injective assignment of size min(n, m).

    Returns the pair list sorted by row and the total cost of the selected
    entries. Ties between equal-cost assignments resolve to the
    lexicographically smallest pair list. An empty matrix yields an empty
    assignment with cost 0.
    """
    n = len(cost)
    m = len(cost[0]) if n else 0
    for row in cost:
        if len(row) != m:
            raise ValueError("cost matrix must be rectangular")
        for entry in row:
            value = float(entry)
            if not math.isfinite(value) or value < 0:
                raise ValueError(f"cost entries must be finite and nonnegative, got {entry!r}")
    if n == 0 or m == 0:
        return [], 0.0

    exact = [[Fraction(float(entry)) for entry in row] for row in cost]
    remaining = min(n, m)
    rows = list(range(n))
    cols = list(range(m))
    budget = _min_total(exact, rows, cols)
    pairs: list[tuple[int, int]] = []
    while remaining:
        chosen = None
        for ri, r in enumerate(rows):
            rest_rows = rows[ri + 1 :]
            if len(rest_rows) < remaining - 1:
                break  # too few rows left below r; later rows are worse
            for c in cols:
                rest_cols = [cc for cc in cols if cc != c]
                completion = _min_total(exact, rest_rows, rest_cols) if remaining > 1 else Fraction(0)
                if exact[r][c] + completion == budget:
                    chosen = (r, c)
                    budget -= exact[r][c]
                    rows = rest_rows
                    cols = rest_cols
                    break
            if chosen:
                break
        if chosen is None:  # unreachable: an optimal assignment always completes
            raise AssertionError("assignment completion failed")
        pairs.append(chosen)
        remaining -= 1
    total = math.fsum(float(cost[r][c]) for r, c in pairs)
    return pairs, total
