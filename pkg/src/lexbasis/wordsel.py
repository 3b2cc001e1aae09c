"""Leave-one-column-out context word scoring.

Each context column is scored by the Frobenius norm of the change its
removal induces in the pairwise Euclidean distance matrix of the training
rows. The naive route rebuilds the reduced distance matrix per column; the
incremental route updates squared distances in one pass over the column's
nonzeros, which is the fast path (one O(h * nnz_j) sweep per column against
the naive O(h^2 * dim) rebuild).

Memory note: the h x h distance matrix dominates at 8*h^2 bytes (plus the
same again for its square in the incremental route); cap the training set
accordingly.
"""

from __future__ import annotations

import math

import numpy as np

from .matrix import SparseMatrix


def distance_matrix(rows: SparseMatrix) -> np.ndarray:
    """Pairwise Euclidean distances of the matrix rows over the full context
    dimension; exactly symmetric with a zero diagonal."""
    h = rows.n_rows
    if h < 2:
        raise ValueError(f"need at least 2 training rows, got {h}")
    w = rows.to_dense()
    sq = (w * w).sum(axis=1)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (w @ w.T)
    np.maximum(d2, 0.0, out=d2)
    d = np.sqrt(d2)
    # mirror the upper triangle so floating-point asymmetry cannot creep in
    iu = np.triu_indices(h, k=1)
    d[(iu[1], iu[0])] = d[iu]
    np.fill_diagonal(d, 0.0)
    return d


def frobenius(m: np.ndarray) -> float:
    """Elementwise form: sqrt of the sum of squared entries."""
    m = np.asarray(m, dtype=np.float64)
    return math.sqrt(float((m * m).sum()))


def frobenius_via_trace(m: np.ndarray) -> float:
    """Equivalent trace form: sqrt(trace(M^T M)); kept as a cross-check."""
    m = np.asarray(m, dtype=np.float64)
    return math.sqrt(float(np.trace(m.T @ m)))


def _columns_by_nonzeros(rows: SparseMatrix) -> list[tuple[np.ndarray, np.ndarray]]:
    """Per column: (row indices, values) of its nonzero cells."""
    row_ids, col_ids, scores = rows.triplets()
    order = np.argsort(col_ids, kind="stable")
    col_sorted = col_ids[order]
    bounds = np.searchsorted(col_sorted, np.arange(rows.n_cols + 1))
    out = []
    for j in range(rows.n_cols):
        lo, hi = bounds[j], bounds[j + 1]
        out.append((row_ids[order[lo:hi]], scores[order[lo:hi]]))
    return out


def column_influence(rows: SparseMatrix, method: str = "incremental") -> dict[str, float]:
    """Score every context column by ||D - D_without_column||_F.

    Returns scores keyed by context word, in column order. Both methods
    clamp squared distances at zero before the square root so round-off
    cannot produce NaNs when one column carries nearly all of a distance.
    """
    if method not in ("incremental", "naive"):
        raise ValueError(f"method must be 'incremental' or 'naive', got {method!r}")
    if method == "naive":
        return _column_influence_naive(rows)
    return _column_influence_incremental(rows)


def _column_influence_naive(rows: SparseMatrix) -> dict[str, float]:
    base = distance_matrix(rows)
    w = rows.to_dense()
    scores: dict[str, float] = {}
    for j, key in enumerate(rows.col_keys):
        reduced = np.delete(w, j, axis=1)
        sq = (reduced * reduced).sum(axis=1)
        d2 = sq[:, None] + sq[None, :] - 2.0 * (reduced @ reduced.T)
        np.maximum(d2, 0.0, out=d2)
        scores[key] = frobenius(base - np.sqrt(d2))
    return scores


def _column_influence_incremental(rows: SparseMatrix) -> dict[str, float]:
    base = distance_matrix(rows)
    base_sq = base * base
    h = rows.n_rows
    scores: dict[str, float] = {}
    for key, (touched, values) in zip(rows.col_keys, _columns_by_nonzeros(rows)):
        if len(touched) == 0:
            scores[key] = 0.0
            continue
        col = np.zeros(h)
        col[touched] = values
        # d'_ik^2 = d_ik^2 - (v_ij - v_kj)^2, for rows i touching column j
        diff = values[:, None] - col[None, :]
        reduced_sq = base_sq[touched] - diff * diff
        np.maximum(reduced_sq, 0.0, out=reduced_sq)
        delta = base[touched] - np.sqrt(reduced_sq)
        contrib = delta * delta
        # full-matrix sum: rows in `touched` plus their mirrored columns,
        # minus the touched-touched block counted twice
        total = 2.0 * contrib.sum() - contrib[:, touched].sum()
        scores[key] = math.sqrt(max(total, 0.0))
    return scores


def select_top(scores: dict[str, float], n_s: int) -> set[str]:
    """The n_s highest-scoring context words; ties break lexicographically."""
    if n_s > len(scores):
        raise ValueError(f"n_s={n_s} exceeds {len(scores)} scored columns")
    ranked = sorted(scores.items(), key=lambda kv: (-kv[1], kv[0]))
    return {word for word, _ in ranked[:n_s]}
