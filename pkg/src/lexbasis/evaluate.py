"""Word-similarity evaluation: test-set loading, Spearman rank correlation,
per-matrix scoring with OOV accounting, and the comparison report.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .corpus import POS_ORDER, split_key
from .matrix import SparseMatrix, row_cosine


@dataclass(frozen=True)
class TestSet:
    name: str
    pairs: tuple[tuple[str, str, float], ...]

    def __len__(self) -> int:
        return len(self.pairs)


def load_testset(path: str | Path, name: str | None = None) -> TestSet:
    """Parse `word1<TAB>word2<TAB>score` lines; a non-numeric score on the
    first line is treated as a header and skipped. Words are lowercased;
    duplicate unordered pairs are an error.
    """
    path = Path(path)
    pairs: list[tuple[str, str, float]] = []
    seen: set[frozenset] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            fields = stripped.split("\t")
            if len(fields) != 3:
                raise ValueError(f"{path}:{line_no}: expected 3 tab-separated fields")
            w1, w2, raw_score = fields
            try:
                score = float(raw_score)
            except ValueError:
                if line_no == 1:
                    continue  # header row
                raise ValueError(f"{path}:{line_no}: non-numeric score {raw_score!r}")
            if not math.isfinite(score):
                raise ValueError(f"{path}:{line_no}: non-finite score")
            w1, w2 = w1.lower(), w2.lower()
            key = frozenset((w1, w2))
            if key in seen:
                raise ValueError(f"{path}:{line_no}: duplicate pair ({w1}, {w2})")
            seen.add(key)
            pairs.append((w1, w2, score))
    return TestSet(name=name or path.stem, pairs=tuple(pairs))


def fractional_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the average of their positions."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values))
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(x: Sequence[float], y: Sequence[float]) -> float:
    """Pearson correlation of fractional ranks (exact under ties)."""
    if len(x) != len(y):
        raise ValueError("length mismatch")
    if len(x) < 2:
        raise ValueError("need at least 2 observations")
    rx = fractional_ranks(x)
    ry = fractional_ranks(y)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("zero rank variance")
    return float(dx @ dy) / math.sqrt(vx * vy)


@dataclass(frozen=True)
class EvalEntry:
    matrix_name: str
    testset_name: str
    spearman: float
    pairs_used: int
    pairs_skipped_oov: int


def build_lemma_lookup(row_keys: Iterable[str]) -> dict[str, str]:
    """Map bare lemmas to row keys, preferring noun > verb > adjective >
    adverb > other when one lemma has several POS rows."""
    rank = {pos: i for i, pos in enumerate(POS_ORDER)}
    best: dict[str, tuple[int, str]] = {}
    for key in row_keys:
        lemma, pos = split_key(key)
        cand = (rank[pos], key)
        if lemma not in best or cand < best[lemma]:
            best[lemma] = cand
    return {lemma: key for lemma, (_, key) in best.items()}


def evaluate(matrix: SparseMatrix, ts: TestSet, matrix_name: str = "matrix") -> EvalEntry:
    """Spearman correlation between row-cosine similarities and human scores.

    Test words are matched by full `lemma/P` key when present in the matrix,
    else by bare lemma through the POS-preference lookup. Pairs with either
    word missing are skipped and counted.
    """
    lookup = build_lemma_lookup(matrix.row_keys)

    def find(word: str) -> str | None:
        if word in matrix.row_index:
            return word
        return lookup.get(word)

    model_scores: list[float] = []
    human_scores: list[float] = []
    skipped = 0
    for w1, w2, human in ts.pairs:
        k1, k2 = find(w1), find(w2)
        if k1 is None or k2 is None:
            skipped += 1
            continue
        model_scores.append(row_cosine(matrix, k1, k2))
        human_scores.append(human)
    if len(model_scores) < 2:
        raise ValueError(f"insufficient coverage: {len(model_scores)} usable pairs "
                         f"of {len(ts)} in {ts.name}")
    rho = spearman(model_scores, human_scores)
    return EvalEntry(matrix_name=matrix_name, testset_name=ts.name, spearman=rho,
                     pairs_used=len(model_scores), pairs_skipped_oov=skipped)


def report(entries: Sequence[EvalEntry], baselines: Sequence[str]) -> list[str]:
    """CSV lines: the per-matrix results, then one delta block per baseline.

    Delta rows carry the difference in Spearman percentage points
    ((rho - rho_base) * 100) and the relative change in percent; cells stay
    empty when the baseline has no row for that test set or is zero.
    """
    if not entries:
        raise ValueError("no evaluation entries")
    known = {e.matrix_name for e in entries}
    for b in baselines:
        if b not in known:
            raise ValueError(f"unknown baseline matrix {b!r}")

    lines = ["matrix,testset,spearman,pairs_used,oov"]
    for e in entries:
        lines.append(f"{e.matrix_name},{e.testset_name},{e.spearman:.9g},"
                     f"{e.pairs_used},{e.pairs_skipped_oov}")

    base_rho = {(e.matrix_name, e.testset_name): e.spearman for e in entries}
    lines.append("")
    lines.append("baseline,matrix,testset,delta_points,delta_relative_pct")
    for b in baselines:
        for e in entries:
            rho_b = base_rho.get((b, e.testset_name))
            if rho_b is None:
                points = rel = ""
            else:
                points = f"{(e.spearman - rho_b) * 100:.9g}"
                rel = ("" if rho_b == 0
                       else f"{(e.spearman - rho_b) / abs(rho_b) * 100:.9g}")
            lines.append(f"{b},{e.matrix_name},{e.testset_name},{points},{rel}")
    return lines
