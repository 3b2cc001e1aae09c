"""Independent reference implementations used to cross-check the package.

Everything here is written directly from the defining formulas, favoring
obviousness over speed, and shares no code with the package internals.
"""

import math

import numpy as np


def ppmi_oracle(dense: np.ndarray) -> np.ndarray:
    """Direct PPMI: pmi = log2(P(w,c) / (P(w) P(c))), clamped at zero."""
    total = dense.sum()
    assert total > 0
    out = np.zeros_like(dense, dtype=np.float64)
    row_sums = dense.sum(axis=1)
    col_sums = dense.sum(axis=0)
    for i in range(dense.shape[0]):
        for j in range(dense.shape[1]):
            x = dense[i, j]
            if x <= 0:
                continue
            pmi = math.log2((x / total) / ((row_sums[i] / total) * (col_sums[j] / total)))
            out[i, j] = max(pmi, 0.0)
    return out


def decay_cell_oracle(sentences, target_key: str, context_key: str, decay: float) -> float:
    """Per-sentence enumeration of every ordered position pair (p, q), p != q,
    summing e^(-decay * |p - q|) when the target occupies p and the context q.
    Keys are `lemma/P` strings.
    """
    total = 0.0
    for sentence in sentences:
        keys = [f"{t.lemma}/{t.pos.value}" for t in sentence.tokens]
        for p, kp in enumerate(keys, start=1):
            if kp != target_key:
                continue
            for q, kq in enumerate(keys, start=1):
                if q == p or kq != context_key:
                    continue
                total += math.exp(-decay * abs(p - q))
    return total


def window_cell_oracle(sentences, target_key: str, context_key: str, window: int) -> float:
    total = 0.0
    for sentence in sentences:
        keys = [f"{t.lemma}/{t.pos.value}" for t in sentence.tokens]
        for p, kp in enumerate(keys, start=1):
            if kp != target_key:
                continue
            for q, kq in enumerate(keys, start=1):
                if q != p and kq == context_key and abs(p - q) <= window:
                    total += 1.0
    return total


def cosine_oracle(u, v) -> float:
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    nu = math.sqrt(float((u * u).sum()))
    nv = math.sqrt(float((v * v).sum()))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float((u * v).sum()) / (nu * nv)


def objective_oracle(rows: np.ndarray, mask: np.ndarray) -> float:
    """Direct cosine-distortion objective over unordered row pairs."""
    masked = rows * mask[None, :]
    n = rows.shape[0]
    total = 0.0
    for i in range(n):
        for j in range(i + 1, n):
            d = cosine_oracle(rows[i], rows[j]) - cosine_oracle(masked[i], masked[j])
            total += d * d
    return total


def column_influence_oracle(rows: np.ndarray) -> np.ndarray:
    """Leave-one-column-out Frobenius scores by full recomputation."""

    def dist(m):
        h = m.shape[0]
        d = np.zeros((h, h))
        for i in range(h):
            for k in range(h):
                d[i, k] = math.sqrt(float(((m[i] - m[k]) ** 2).sum()))
        return d

    base = dist(rows)
    scores = np.zeros(rows.shape[1])
    for j in range(rows.shape[1]):
        reduced = dist(np.delete(rows, j, axis=1))
        scores[j] = math.sqrt(float(((base - reduced) ** 2).sum()))
    return scores


def spearman_oracle(x, y) -> float:
    """Explicit fractional ranks (ties get the average of their positions),
    then the Pearson formula written out longhand.
    """

    def ranks(values):
        order = sorted(range(len(values)), key=lambda i: values[i])
        r = [0.0] * len(values)
        i = 0
        while i < len(order):
            j = i
            while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
                j += 1
            avg = (i + j) / 2 + 1
            for k in range(i, j + 1):
                r[order[k]] = avg
            i = j + 1
        return r

    rx, ry = ranks(list(x)), ranks(list(y))
    n = len(rx)
    mx = sum(rx) / n
    my = sum(ry) / n
    cov = sum((a - mx) * (b - my) for a, b in zip(rx, ry))
    vx = sum((a - mx) ** 2 for a in rx)
    vy = sum((b - my) ** 2 for b in ry)
    return cov / math.sqrt(vx * vy)


def gini_oracle(labels) -> float:
    n = len(labels)
    if n == 0:
        return 0.0
    impurity = 1.0
    for lab in set(labels):
        p = sum(1 for l in labels if l == lab) / n
        impurity -= p * p
    return impurity


def best_split_oracle(features: np.ndarray, labels: np.ndarray):
    """Exhaustive enumeration of every midpoint split on every feature.

    Returns (feature index, threshold, weighted child Gini) for the best
    split, preferring lower weighted Gini, then feature order (as given),
    then lower threshold. None when no split separates the data.
    """
    n, n_feat = features.shape
    best = None
    for f in range(n_feat):
        values = np.unique(features[:, f])
        for a, b in zip(values[:-1], values[1:]):
            thr = (a + b) / 2
            left = labels[features[:, f] <= thr]
            right = labels[features[:, f] > thr]
            w = (len(left) * gini_oracle(list(left))
                 + len(right) * gini_oracle(list(right))) / n
            cand = (w, f, thr)
            if best is None or cand < best:
                best = cand
    if best is None:
        return None
    w, f, thr = best
    return f, thr, w
