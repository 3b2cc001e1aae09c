"""Per-word selection criteria over a candidate set: corpus frequency (WF),
summed cosine similarity to the other candidates (WS), and the count of
near-zero embedding components (NZ), plus the labeled word sets used to
train the rule classifiers.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable

import numpy as np

from .corpus import POSClass, Vocabulary, split_key
from .matrix import DenseEmbeddings

logger = logging.getLogger(__name__)

CONTENT_POS = (POSClass.NOUN, POSClass.VERB, POSClass.ADJECTIVE, POSClass.ADVERB)

SCATTER_PAIRS = {
    "wf-ws": ("wf", "ws"),
    "nz-ws": ("nz", "ws"),
    "nz-wf": ("nz", "wf"),
}


class CoverageError(Exception):
    """Raised when the embedding file misses most candidates, which almost
    always means the wrong file was supplied."""


@dataclass
class CriteriaRow:
    word: str
    wf: int
    ws: float
    nz: int
    wf_norm: float | None = None
    ws_norm: float | None = None
    nz_norm: float | None = None
    label: int | None = None

    def value(self, criterion: str, normalized: bool) -> float:
        v = getattr(self, f"{criterion}_norm" if normalized else criterion)
        if v is None:
            raise ValueError(f"{criterion} has no normalized value; normalize first")
        return float(v)


class CriteriaTable:
    """Rows keyed by word, kept in lexicographic order."""

    def __init__(self, rows: Iterable[CriteriaRow]):
        self.rows = {r.word: r for r in sorted(rows, key=lambda r: r.word)}

    def __len__(self) -> int:
        return len(self.rows)

    def __contains__(self, word: str) -> bool:
        return word in self.rows

    def __getitem__(self, word: str) -> CriteriaRow:
        return self.rows[word]

    def words(self) -> list[str]:
        return list(self.rows)

    def save(self, path: str | Path) -> None:
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, int):
                return str(v)
            return f"{v:.9g}"

        with open(path, "w", encoding="utf-8") as fh:
            fh.write("word\twf\tws\tnz\twf_norm\tws_norm\tnz_norm\tlabel\n")
            for r in self.rows.values():
                fh.write("\t".join([r.word, str(r.wf), f"{r.ws:.9g}", str(r.nz),
                                    fmt(r.wf_norm), fmt(r.ws_norm), fmt(r.nz_norm),
                                    fmt(r.label)]) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "CriteriaTable":
        rows = []
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n").split("\t")
            if header[:4] != ["word", "wf", "ws", "nz"]:
                raise ValueError(f"{path}: unrecognized criteria header")
            for line in fh:
                f = line.rstrip("\n").split("\t")
                rows.append(CriteriaRow(
                    word=f[0], wf=int(f[1]), ws=float(f[2]), nz=int(f[3]),
                    wf_norm=float(f[4]) if f[4] else None,
                    ws_norm=float(f[5]) if f[5] else None,
                    nz_norm=float(f[6]) if f[6] else None,
                    label=int(f[7]) if f[7] else None))
        return cls(rows)


def compute_criteria(candidates: Iterable[str], emb: DenseEmbeddings, vocab: Vocabulary,
                     zero_eps: float = 0.01, ws_mode: str = "sum") -> CriteriaTable:
    """Build the criteria table for a candidate word set.

    WF is the corpus frequency from the vocabulary; NZ counts embedding
    components with |v| < zero_eps; WS aggregates cosine similarity to every
    other candidate (sum by default, mean optionally). Embeddings are looked
    up by the full `lemma/P` key first, then by the bare lemma, so plain
    word-per-line embedding files work. Candidates without an embedding are
    excluded with a warning; losing more than half of them aborts.
    """
    if ws_mode not in ("sum", "mean"):
        raise ValueError(f"ws_mode must be 'sum' or 'mean', got {ws_mode!r}")
    requested = sorted(set(candidates))
    kept: list[str] = []
    vecs: list[np.ndarray] = []
    for key in requested:
        lemma, pos = split_key(key)
        if (lemma, pos) not in vocab.index:
            raise ValueError(f"candidate {key!r} is not in the vocabulary")
        vec = emb.vectors.get(key)
        if vec is None:
            vec = emb.vectors.get(lemma)
        if vec is None:
            logger.warning("no embedding for %s, excluded from candidate set", key)
            continue
        kept.append(key)
        vecs.append(vec)
    if len(kept) * 2 < len(requested):
        raise CoverageError(
            f"embeddings cover only {len(kept)} of {len(requested)} candidates; "
            "check that the right embedding file was supplied")

    table_rows: list[CriteriaRow] = []
    if kept:
        matrix = np.stack(vecs)
        norms = np.linalg.norm(matrix, axis=1)
        unit = np.divide(matrix, norms[:, None], out=np.zeros_like(matrix),
                         where=norms[:, None] > 0)
        sims = unit @ unit.T
        ws = sims.sum(axis=1) - np.diag(sims)
        if ws_mode == "mean" and len(kept) > 1:
            ws = ws / (len(kept) - 1)
        nz = (np.abs(matrix) < zero_eps).sum(axis=1)
        for i, key in enumerate(kept):
            lemma, pos = split_key(key)
            table_rows.append(CriteriaRow(word=key, wf=vocab.freq(lemma, pos),
                                          ws=float(ws[i]), nz=int(nz[i])))
    return CriteriaTable(table_rows)


@dataclass(frozen=True)
class LabeledSets:
    candidate_c: frozenset
    set_a: frozenset
    set_s: frozenset
    set_f: frozenset
    set_z: frozenset
    triple: frozenset
    common: frozenset
    set_in: frozenset
    set_out: frozenset
    u_at: frozenset

    def by_name(self, name: str) -> frozenset:
        aliases = {"c": "candidate_c", "candidate": "candidate_c", "a": "set_a",
                   "s": "set_s", "f": "set_f", "z": "set_z", "in": "set_in",
                   "out": "set_out"}
        attr = aliases.get(name.lower(), name.lower())
        if not hasattr(self, attr):
            raise ValueError(f"unknown set name {name!r}")
        return getattr(self, attr)


def _top_m(table: CriteriaTable, criterion: str, m: int) -> frozenset:
    ranked = sorted(table.rows.values(), key=lambda r: (-getattr(r, criterion), r.word))
    return frozenset(r.word for r in ranked[:m])


def build_labeled_sets(table: CriteriaTable, a: Iterable[str], m: int) -> LabeledSets:
    """Build S/F/Z (top-m by WS/WF/NZ, ties lexicographic), their union
    Triple, and the classifier label sets; labels 1/2/3 are written into the
    table for Common / IN / OUT words.

    Set A is restricted to the four content POS classes.
    """
    if m > len(table):
        raise ValueError(f"m={m} exceeds candidate table size {len(table)}")
    set_a = frozenset(k for k in a if split_key(k)[1] in CONTENT_POS)
    missing = sorted(set_a - set(table.rows))
    if missing:
        raise ValueError(f"set A word {missing[0]!r} is not in the candidate table")
    set_s = _top_m(table, "ws", m)
    set_f = _top_m(table, "wf", m)
    set_z = _top_m(table, "nz", m)
    triple = set_s | set_f | set_z
    common = set_a & triple
    set_in = triple - set_a
    set_out = set_a - triple
    for word in common:
        table[word].label = 1
    for word in set_in:
        table[word].label = 2
    for word in set_out:
        table[word].label = 3
    return LabeledSets(candidate_c=frozenset(table.rows), set_a=set_a,
                       set_s=set_s, set_f=set_f, set_z=set_z, triple=triple,
                       common=common, set_in=set_in, set_out=set_out,
                       u_at=set_a | triple)


def normalize_criteria(table: CriteriaTable) -> CriteriaTable:
    """Divide each criterion by its maximum over the table (infinity norm).

    Recomputes from the raw columns, so applying it twice changes nothing.
    A criterion whose maximum is 0 normalizes to all zeros with a warning.
    """
    rows = list(table.rows.values())
    if not rows:
        return table
    for criterion in ("wf", "ws", "nz"):
        peak = max(getattr(r, criterion) for r in rows)
        if peak <= 0:
            logger.warning("criterion %s has max <= 0; normalized values set to 0",
                           criterion)
            for r in rows:
                setattr(r, f"{criterion}_norm", 0.0)
        else:
            for r in rows:
                setattr(r, f"{criterion}_norm", getattr(r, criterion) / peak)
    return table


def emit_scatter(table: CriteriaTable, sets: LabeledSets, pair: str,
                 subset: str = "u_at") -> list[str]:
    """CSV lines `word,label,x,y` for one criteria pair over one labeled set."""
    key = pair.lower()
    if key not in SCATTER_PAIRS:
        raise ValueError(f"pair must be one of {sorted(SCATTER_PAIRS)}, got {pair!r}")
    x_name, y_name = SCATTER_PAIRS[key]
    lines = [f"word,label,{x_name},{y_name}"]
    for word in sorted(sets.by_name(subset)):
        r = table[word]
        label = "" if r.label is None else str(r.label)
        x = getattr(r, x_name)
        y = getattr(r, y_name)
        lines.append(f"{word},{label},{x:.9g},{y:.9g}")
    return lines
