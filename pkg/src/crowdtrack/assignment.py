"""Exact rectangular assignment with forbidden pairs and deterministic ties.

A solution assigns every row of the zero-padded square matrix to a distinct
column. Pairs landing on padding or on a forbidden cell contribute 0 to the
objective and are dropped from the result, so unmatched rows and columns are
always permitted. Among optimal solutions the one that gives row 0 the
lowest real column, then row 1, and so on is returned ("unmatched" ranks
after every real column).
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

__all__ = ["Assignment", "brute_force_solve", "solve", "solve_sparse"]

MAXIMIZE = "maximize"
MINIMIZE = "minimize"
BRUTE_FORCE_LIMIT = 8


@dataclass(frozen=True)
class Assignment:
    pairs: list[tuple[int, int]]
    objective: float

    def as_dict(self) -> dict[int, int]:
        return dict(self.pairs)


def _forbidden_mask(
    shape: tuple[int, int], forbidden: Callable[[int, int], bool] | np.ndarray | None
) -> np.ndarray:
    if forbidden is None:
        return np.zeros(shape, dtype=bool)
    if callable(forbidden):
        mask = np.zeros(shape, dtype=bool)
        for r in range(shape[0]):
            for c in range(shape[1]):
                mask[r, c] = bool(forbidden(r, c))
        return mask
    mask = np.asarray(forbidden, dtype=bool)
    if mask.shape != shape:
        raise ValueError(f"forbidden mask shape {mask.shape} != matrix shape {shape}")
    return mask


def _check_sense(sense: str) -> None:
    if sense not in (MAXIMIZE, MINIMIZE):
        raise ValueError(f"sense must be 'maximize' or 'minimize', got {sense!r}")


def _hungarian(cost: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Min-cost perfect matching of a square matrix.

    Shortest augmenting path formulation with row/column potentials.
    Returns ``(row_to_col, u, v)`` with ``cost[i, j] - u[i] - v[j] >= 0``
    everywhere and ``== 0`` on the matching (up to rounding).
    """
    n = cost.shape[0]
    u = np.zeros(n + 1)
    v = np.zeros(n + 1)
    p = np.zeros(n + 1, dtype=int)  # p[j]: 1-based row owning column j
    way = np.zeros(n + 1, dtype=int)
    for i in range(1, n + 1):
        p[0] = i
        j0 = 0
        minv = np.full(n + 1, np.inf)
        used = np.zeros(n + 1, dtype=bool)
        while True:
            used[j0] = True
            i0 = p[j0]
            free = ~used[1:]
            cur = cost[i0 - 1] - u[i0] - v[1:]
            better = free & (cur < minv[1:])
            minv[1:][better] = cur[better]
            way[1:][better] = j0
            masked = np.where(free, minv[1:], np.inf)
            j1 = int(np.argmin(masked)) + 1
            delta = masked[j1 - 1]
            u[p[used]] += delta
            v[used] -= delta
            minv[1:][free] -= delta
            j0 = j1
            if p[j0] == 0:
                break
        while j0:
            j1 = way[j0]
            p[j0] = p[j1]
            j0 = j1
    row_to_col = np.empty(n, dtype=int)
    row_to_col[p[1:] - 1] = np.arange(n)
    return row_to_col, u[1:], v[1:]


def _canonicalize(
    row_to_col: np.ndarray, tight: np.ndarray, n_rows: int, real: np.ndarray
) -> np.ndarray:
    """Rotate an optimal matching to the row-wise lexicographic minimum.

    ``tight`` marks zero-reduced-cost cells; every perfect matching inside it
    is optimal. ``real[i, j]`` is True where the pair would be kept. A row
    already settled as unmatched may still shuffle between non-kept cells.
    """
    n = len(row_to_col)
    match = row_to_col.copy()
    owner = np.empty(n, dtype=int)
    owner[match] = np.arange(n)
    settled = np.zeros(n, dtype=bool)
    locked_cols = np.zeros(n, dtype=bool)  # held by rows settled on a kept pair
    adj = [np.flatnonzero(tight[i]) for i in range(n)]

    def can_take(r: int, c: int) -> bool:
        if locked_cols[c]:
            return False
        return not (settled[r] and real[r, c])

    for i in range(n_rows):
        cur = match[i]
        cur_real = real[i, cur]
        for j in adj[i]:
            if locked_cols[j] or not real[i, j]:
                continue
            if cur_real and j >= cur:
                break
            start = owner[j]
            prev_col: dict[int, int] = {}
            queue = deque([start])
            seen_rows = {start, i}
            found = False
            while queue and not found:
                r = queue.popleft()
                for c in adj[r]:
                    if c == j or c in prev_col or not can_take(r, c):
                        continue
                    prev_col[c] = r
                    if c == cur:
                        found = True
                        break
                    nr = owner[c]
                    if nr not in seen_rows:
                        seen_rows.add(nr)
                        queue.append(nr)
            if not found:
                continue
            c = cur
            while True:
                r = prev_col[c]
                old = match[r]
                match[r] = c
                owner[c] = r
                if r == start:
                    break
                c = old
            match[i] = j
            owner[j] = i
            break
        settled[i] = True
        if real[i, match[i]]:
            locked_cols[match[i]] = True
    return match


def _solve_dense(
    values: np.ndarray, mask: np.ndarray, sense: str
) -> list[tuple[int, int]]:
    r, c = values.shape
    n = max(r, c)
    gain = np.zeros((n, n))
    real = np.zeros((n, n), dtype=bool)
    real[:r, :c] = ~mask
    sub = values if sense == MAXIMIZE else -values
    gain[:r, :c] = np.where(mask, 0.0, sub)
    cost = -gain
    row_to_col, u, v = _hungarian(cost)
    reduced = cost - u[:, None] - v[None, :]
    scale = max(1.0, float(np.abs(cost).max()))
    tight = reduced <= 1e-9 * scale * n
    tight[np.arange(n), row_to_col] = True
    match = _canonicalize(row_to_col, tight, r, real)
    return [(i, int(match[i])) for i in range(r) if real[i, match[i]]]


def _small_component(vals: np.ndarray, rows: np.ndarray, cols: np.ndarray):
    """Single-row or single-column component: pick the best positive entry."""
    k = int(np.argmax(vals))  # first maximum -> lowest index
    return [(int(rows[k]), int(cols[k]))]


def solve_sparse(
    rows: np.ndarray,
    cols: np.ndarray,
    values: np.ndarray,
    shape: tuple[int, int],
) -> Assignment:
    """Maximum-weight matching over a sparse set of strictly positive pairs.

    Absent pairs are forbidden. Because every allowed value is positive the
    problem splits exactly into connected components of the allowed graph,
    which keeps large, sparse metric problems cheap.
    """
    rows = np.asarray(rows, dtype=int)
    cols = np.asarray(cols, dtype=int)
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        return Assignment([], 0.0)
    if np.any(values <= 0) or not np.all(np.isfinite(values)):
        raise ValueError("solve_sparse requires finite, strictly positive values")
    n_r, n_c = shape
    graph = coo_matrix(
        (np.ones(len(values)), (rows, cols + n_r)), shape=(n_r + n_c, n_r + n_c)
    )
    _, labels = connected_components(graph, directed=False)
    comp = labels[rows]
    order = np.lexsort((cols, rows, comp))
    rows, cols, values, comp = rows[order], cols[order], values[order], comp[order]
    bounds = np.flatnonzero(np.diff(comp)) + 1
    pairs: list[tuple[int, int]] = []
    for idx in np.split(np.arange(len(values)), bounds):
        rr, cc, vv = rows[idx], cols[idx], values[idx]
        ur = np.unique(rr)
        uc = np.unique(cc)
        if len(ur) == 1 or len(uc) == 1:
            pairs.extend(_small_component(vv, rr, cc))
            continue
        ri = np.searchsorted(ur, rr)
        ci = np.searchsorted(uc, cc)
        dense = np.zeros((len(ur), len(uc)))
        mask = np.ones_like(dense, dtype=bool)
        dense[ri, ci] = vv
        mask[ri, ci] = False
        for a, b in _solve_dense(dense, mask, MAXIMIZE):
            pairs.append((int(ur[a]), int(uc[b])))
    pairs.sort()
    lookup = {(int(r), int(c)): v for r, c, v in zip(rows, cols, values)}
    return Assignment(pairs, float(sum(lookup[p] for p in pairs)))


def solve(
    matrix,
    forbidden: Callable[[int, int], bool] | np.ndarray | None = None,
    sense: str = MAXIMIZE,
) -> Assignment:
    """Optimal assignment on a dense ``rows x cols`` matrix.

    Args:
        matrix: finite values, any rectangular shape (including empty).
        forbidden: boolean mask or ``(row, col) -> bool`` predicate.
        sense: ``"maximize"`` or ``"minimize"``.

    Returns:
        Assignment with pairs sorted by row.
    """
    _check_sense(sense)
    values = np.asarray(matrix, dtype=float)
    if values.ndim != 2:
        values = values.reshape(0, 0) if values.size == 0 else values.reshape(1, -1)
    if not np.all(np.isfinite(values)):
        raise ValueError("cost matrix must be finite")
    r, c = values.shape
    if r == 0 or c == 0:
        return Assignment([], 0.0)
    mask = _forbidden_mask((r, c), forbidden)
    pairs = _solve_dense(values, mask, sense)
    return Assignment(pairs, float(sum(values[i, j] for i, j in pairs)))


def brute_force_solve(
    matrix,
    forbidden: Callable[[int, int], bool] | np.ndarray | None = None,
    sense: str = MAXIMIZE,
) -> Assignment:
    """Exhaustive reference solver with the same semantics as :func:`solve`.

    Enumerates every column permutation of the padded square matrix, so it is
    limited to ``max(rows, cols) <= 8``.
    """
    _check_sense(sense)
    values = np.asarray(matrix, dtype=float)
    if values.size == 0:
        return Assignment([], 0.0)
    r, c = values.shape
    n = max(r, c)
    if n > BRUTE_FORCE_LIMIT:
        raise ValueError(f"brute force limited to dimension {BRUTE_FORCE_LIMIT}, got {n}")
    mask = _forbidden_mask((r, c), forbidden)
    perms = np.array(list(itertools.permutations(range(n))), dtype=int)[:, :r]
    padded = np.zeros((r, n))
    keep = np.zeros((r, n), dtype=bool)
    keep[:, :c] = ~mask
    padded[:, :c] = np.where(mask, 0.0, values)
    rows = np.arange(r)
    kept = keep[rows, perms]  # (n!, r)
    objective = padded[rows, perms].sum(axis=1)
    score = objective if sense == MAXIMIZE else -objective
    # rank each row's choice: its real column, or n when left unmatched
    rank = np.where(kept, perms, n)
    best = score.max()
    cand = np.flatnonzero(score >= best - 1e-9)
    order = np.lexsort(rank[cand].T[::-1])
    k = cand[order[0]]
    pairs = [(i, int(perms[k, i])) for i in range(r) if kept[k, i]]
    return Assignment(pairs, float(sum(values[i, j] for i, j in pairs)))
