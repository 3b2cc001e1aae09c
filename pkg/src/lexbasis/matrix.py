"""Sparse word-context matrices: decay and window co-occurrence counting,
PPMI weighting, cosine similarity, column masking, and the text file formats
for matrices and dense embeddings.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .corpus import Sentence, Vocabulary, make_key

logger = logging.getLogger(__name__)


class SparseMatrix:
    """Row-major sparse matrix keyed by word strings on both axes.

    Stored cells are strictly positive; a missing cell reads as 0. Each row
    holds a pair of parallel arrays (column ids ascending, scores).
    """

    def __init__(self, row_keys: Sequence[str], col_keys: Sequence[str],
                 rows: list[tuple[np.ndarray, np.ndarray]]):
        if len(rows) != len(row_keys):
            raise ValueError("row storage does not match row keys")
        self.row_keys = list(row_keys)
        self.col_keys = list(col_keys)
        self.rows = rows
        self.row_index = {k: i for i, k in enumerate(self.row_keys)}
        self.col_index = {k: i for i, k in enumerate(self.col_keys)}

    @property
    def n_rows(self) -> int:
        return len(self.row_keys)

    @property
    def n_cols(self) -> int:
        return len(self.col_keys)

    @property
    def nnz(self) -> int:
        return sum(len(cols) for cols, _ in self.rows)

    @classmethod
    def from_triplets(cls, row_ids: np.ndarray, col_ids: np.ndarray, scores: np.ndarray,
                      row_keys: Sequence[str], col_keys: Sequence[str]) -> "SparseMatrix":
        """Aggregate (row, col, score) triplets; duplicate cells sum, zeros drop."""
        n_cols = len(col_keys)
        combined = row_ids.astype(np.int64) * n_cols + col_ids.astype(np.int64)
        uniq, inverse = np.unique(combined, return_inverse=True)
        agg = np.bincount(inverse, weights=scores.astype(np.float64), minlength=len(uniq))
        keep = agg > 0
        uniq, agg = uniq[keep], agg[keep]
        r = uniq // n_cols
        c = uniq % n_cols
        rows: list[tuple[np.ndarray, np.ndarray]] = []
        bounds = np.searchsorted(r, np.arange(len(row_keys) + 1))
        for i in range(len(row_keys)):
            lo, hi = bounds[i], bounds[i + 1]
            rows.append((c[lo:hi].copy(), agg[lo:hi].copy()))
        return cls(row_keys, col_keys, rows)

    @classmethod
    def empty(cls, row_keys: Sequence[str], col_keys: Sequence[str]) -> "SparseMatrix":
        rows = [(np.empty(0, dtype=np.int64), np.empty(0, dtype=np.float64))
                for _ in row_keys]
        return cls(row_keys, col_keys, rows)

    def triplets(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        if self.nnz == 0:
            z = np.empty(0, dtype=np.int64)
            return z, z.copy(), np.empty(0, dtype=np.float64)
        row_ids = np.concatenate([np.full(len(cols), i, dtype=np.int64)
                                  for i, (cols, _) in enumerate(self.rows)])
        col_ids = np.concatenate([cols for cols, _ in self.rows])
        scores = np.concatenate([vals for _, vals in self.rows])
        return row_ids, col_ids, scores

    def cell(self, row_key: str, col_key: str) -> float:
        i = self.row_index[row_key]
        j = self.col_index[col_key]
        cols, vals = self.rows[i]
        pos = np.searchsorted(cols, j)
        if pos < len(cols) and cols[pos] == j:
            return float(vals[pos])
        return 0.0

    def row_dense(self, i: int) -> np.ndarray:
        out = np.zeros(self.n_cols)
        cols, vals = self.rows[i]
        out[cols] = vals
        return out

    def row_dense_by_key(self, key: str) -> np.ndarray:
        return self.row_dense(self.row_index[key])

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.n_rows, self.n_cols))
        for i, (cols, vals) in enumerate(self.rows):
            out[i, cols] = vals
        return out

    def save(self, path: str | Path) -> None:
        """Triplet text format: header `rows cols nnz`, then
        row_word<TAB>col_word<TAB>score with 9 significant digits.

        Only words with at least one stored cell appear in the file, so rows
        and columns that are entirely empty do not survive a save/load trip;
        the header counts describe the file body.
        """
        row_ids, col_ids, scores = self.triplets()
        live_rows = np.unique(row_ids)
        live_cols = np.unique(col_ids)
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"{len(live_rows)} {len(live_cols)} {len(scores)}\n")
            for i, (cols, vals) in enumerate(self.rows):
                rk = self.row_keys[i]
                for j, v in zip(cols.tolist(), vals.tolist()):
                    fh.write(f"{rk}\t{self.col_keys[j]}\t{v:.9g}\n")

    @classmethod
    def load(cls, path: str | Path) -> "SparseMatrix":
        """Inverse of save; key order is first appearance in the file."""
        row_keys: list[str] = []
        col_keys: list[str] = []
        row_index: dict[str, int] = {}
        col_index: dict[str, int] = {}
        rids, cids, scores = [], [], []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().split()
            if len(header) != 3:
                raise ValueError(f"{path}: bad header, expected 'rows cols nnz'")
            n_rows, n_cols, nnz = (int(x) for x in header)
            for line_no, line in enumerate(fh, start=2):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 3:
                    raise ValueError(f"{path}:{line_no}: expected 3 tab-separated fields")
                rk, ck, sv = parts
                if rk not in row_index:
                    row_index[rk] = len(row_keys)
                    row_keys.append(rk)
                if ck not in col_index:
                    col_index[ck] = len(col_keys)
                    col_keys.append(ck)
                rids.append(row_index[rk])
                cids.append(col_index[ck])
                scores.append(float(sv))
        if (len(row_keys), len(col_keys), len(scores)) != (n_rows, n_cols, nnz):
            raise ValueError(f"{path}: header {n_rows} {n_cols} {nnz} does not match body "
                             f"({len(row_keys)} {len(col_keys)} {len(scores)})")
        return cls.from_triplets(np.array(rids, dtype=np.int64),
                                 np.array(cids, dtype=np.int64),
                                 np.array(scores), row_keys, col_keys)


def _count_pairs(corpus: Iterable[Sentence], targets: Vocabulary, contexts: Iterable[str],
                 weight_of_alpha: Callable[[np.ndarray], np.ndarray],
                 max_alpha: int | None) -> SparseMatrix:
    """Shared pair counter: every ordered position pair (p, q), p != q, with a
    target occurrence at p and a context occurrence at q contributes
    weight(|p - q|) to cell (target, context). Scope is a single sentence.
    """
    row_keys = targets.keys()
    col_keys = sorted(set(contexts))
    col_of = {k: j for j, k in enumerate(col_keys)}
    row_of = targets.index

    key_chunks: list[np.ndarray] = []
    weight_chunks: list[np.ndarray] = []
    acc: dict[int, float] = {}
    pending = 0
    n_cols = len(col_keys)

    def fold():
        nonlocal pending
        if not key_chunks:
            return
        keys = np.concatenate(key_chunks)
        ws = np.concatenate(weight_chunks)
        uniq, inverse = np.unique(keys, return_inverse=True)
        sums = np.bincount(inverse, weights=ws, minlength=len(uniq))
        for k, s in zip(uniq.tolist(), sums.tolist()):
            acc[k] = acc.get(k, 0.0) + s
        key_chunks.clear()
        weight_chunks.clear()
        pending = 0

    for sentence in corpus:
        length = len(sentence.tokens)
        if length < 2:
            continue
        tid = np.full(length, -1, dtype=np.int64)
        cid = np.full(length, -1, dtype=np.int64)
        for p, tok in enumerate(sentence.tokens):
            lp = (tok.lemma, tok.pos)
            if lp in row_of:
                tid[p] = row_of[lp]
            j = col_of.get(make_key(tok.lemma, tok.pos))
            if j is not None:
                cid[p] = j
        if (tid < 0).all() or (cid < 0).all():
            continue
        offsets = np.arange(length)
        alpha = np.abs(offsets[:, None] - offsets[None, :])
        valid = (alpha > 0) & (tid[:, None] >= 0) & (cid[None, :] >= 0)
        if max_alpha is not None:
            valid &= alpha <= max_alpha
        if not valid.any():
            continue
        pair_keys = (tid[:, None] * n_cols + cid[None, :])[valid]
        key_chunks.append(pair_keys)
        weight_chunks.append(weight_of_alpha(alpha[valid]))
        pending += len(pair_keys)
        if pending >= 2_000_000:
            fold()
    fold()

    if not acc:
        return SparseMatrix.empty(row_keys, col_keys)
    items = np.array(sorted(acc.items()), dtype=np.float64)
    combined = items[:, 0].astype(np.int64)
    return SparseMatrix.from_triplets(combined // n_cols, combined % n_cols,
                                      items[:, 1], row_keys, col_keys)


def build_cooc_decay(corpus: Iterable[Sentence], targets: Vocabulary, contexts: Iterable[str],
                     decay: float = 0.1, max_alpha: int | None = None) -> SparseMatrix:
    """Exponentially decayed co-occurrence: cell (t, c) += e^(-decay * alpha)
    with alpha the absolute positional offset inside one sentence.

    No offset cap by default; decay itself suppresses long distances.
    """
    if decay <= 0:
        raise ValueError(f"decay must be positive, got {decay}")
    return _count_pairs(corpus, targets, contexts,
                        lambda a: np.exp(-decay * a.astype(np.float64)), max_alpha)


def build_cooc_window(corpus: Iterable[Sentence], targets: Vocabulary, contexts: Iterable[str],
                      window: int = 10) -> SparseMatrix:
    """Plain counts within a symmetric window: cell += 1 when |p - q| <= window."""
    if window < 1:
        raise ValueError(f"window must be >= 1, got {window}")
    return _count_pairs(corpus, targets, contexts,
                        lambda a: np.ones(len(a)), max_alpha=window)


def merge(a: SparseMatrix, b: SparseMatrix) -> SparseMatrix:
    """Cell-wise sum of two shards sharing the same row and column keys."""
    if a.row_keys != b.row_keys or a.col_keys != b.col_keys:
        raise ValueError("shards must share row and column keys")
    ra, ca, sa = a.triplets()
    rb, cb, sb = b.triplets()
    return SparseMatrix.from_triplets(np.concatenate([ra, rb]), np.concatenate([ca, cb]),
                                      np.concatenate([sa, sb]), a.row_keys, a.col_keys)


def ppmi_transform(raw: SparseMatrix) -> SparseMatrix:
    """Positive pointwise mutual information, log base 2.

    Probabilities come from the stored score mass: P(w,c) = x/T,
    P(w) = row sum/T, P(c) = col sum/T. Cells with non-positive PMI drop out.
    """
    row_ids, col_ids, scores = raw.triplets()
    total = scores.sum()
    if total <= 0:
        raise ValueError("empty mass")
    row_sums = np.bincount(row_ids, weights=scores, minlength=raw.n_rows)
    col_sums = np.bincount(col_ids, weights=scores, minlength=raw.n_cols)
    pmi = np.log2(scores * total / (row_sums[row_ids] * col_sums[col_ids]))
    keep = pmi > 0
    return SparseMatrix.from_triplets(row_ids[keep], col_ids[keep], pmi[keep],
                                      raw.row_keys, raw.col_keys)


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity with the zero-vector convention cos(0, anything) = 0."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"dimension mismatch: {u.shape} vs {v.shape}")
    nu = math.sqrt(float(u @ u))
    nv = math.sqrt(float(v @ v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def row_cosine(m: SparseMatrix, key_a: str, key_b: str) -> float:
    """Cosine of two sparse rows without densifying the whole matrix."""
    ca, va = m.rows[m.row_index[key_a]]
    cb, vb = m.rows[m.row_index[key_b]]
    na = math.sqrt(float(va @ va))
    nb = math.sqrt(float(vb @ vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    shared, ia, ib = np.intersect1d(ca, cb, assume_unique=True, return_indices=True)
    if len(shared) == 0:
        return 0.0
    return float(va[ia] @ vb[ib]) / (na * nb)


def mask_columns(m: SparseMatrix, mask: np.ndarray) -> SparseMatrix:
    """Drop cells in columns whose mask bit is 0; column labels are kept so
    dimensions stay interpretable.
    """
    mask = np.asarray(mask)
    if mask.shape != (m.n_cols,):
        raise ValueError(f"mask length {mask.shape} does not match n_cols {m.n_cols}")
    keep = mask != 0
    rows = []
    for cols, vals in m.rows:
        sel = keep[cols]
        rows.append((cols[sel].copy(), vals[sel].copy()))
    return SparseMatrix(m.row_keys, m.col_keys, rows)


def restrict_rows(m: SparseMatrix, keys: Sequence[str]) -> SparseMatrix:
    """Sub-matrix with the given rows, in the given order; columns unchanged."""
    rows = []
    for k in keys:
        if k not in m.row_index:
            raise KeyError(f"row {k!r} not in matrix")
        cols, vals = m.rows[m.row_index[k]]
        rows.append((cols.copy(), vals.copy()))
    return SparseMatrix(list(keys), m.col_keys, rows)


def restrict_columns(m: SparseMatrix, keys: Sequence[str]) -> SparseMatrix:
    """Sub-matrix with only the given columns, reindexed in the given order."""
    remap = np.full(m.n_cols, -1, dtype=np.int64)
    for j, k in enumerate(keys):
        if k not in m.col_index:
            raise KeyError(f"column {k!r} not in matrix")
        remap[m.col_index[k]] = j
    rows = []
    for cols, vals in m.rows:
        new_cols = remap[cols]
        sel = new_cols >= 0
        nc, nv = new_cols[sel], vals[sel]
        order = np.argsort(nc, kind="stable")
        rows.append((nc[order], nv[order]))
    return SparseMatrix(m.row_keys, list(keys), rows)


@dataclass
class DenseEmbeddings:
    """External dense word vectors, all the same length."""

    dim: int | None
    vectors: dict[str, np.ndarray] = field(default_factory=dict)

    def __contains__(self, word: str) -> bool:
        return word in self.vectors

    def __getitem__(self, word: str) -> np.ndarray:
        return self.vectors[word]

    def __len__(self) -> int:
        return len(self.vectors)


def load_embeddings(path: str | Path) -> DenseEmbeddings:
    """Parse `word v1 v2 ... vd` lines (single spaces); duplicates keep the
    last occurrence with a warning; inconsistent dimensions are an error.
    """
    dim: int | None = None
    vectors: dict[str, np.ndarray] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            parts = line.rstrip("\n").split(" ")
            if parts == [""]:
                continue
            word, values = parts[0], parts[1:]
            if dim is None:
                if not values:
                    raise ValueError(f"{path}:{line_no}: no vector components")
                dim = len(values)
            elif len(values) != dim:
                raise ValueError(
                    f"{path}:{line_no}: expected {dim} components, got {len(values)}")
            if word in vectors:
                logger.warning("%s:%d: duplicate word %r, last occurrence wins",
                               path, line_no, word)
            vectors[word] = np.array([float(v) for v in values])
    return DenseEmbeddings(dim, vectors)
