"""Streaming ingestion of POS-tagged corpora and vocabulary construction.

Corpus files are vertical text: one token per line with at least three
tab-separated fields (surface, lemma, POS tag); extra fields are ignored.
A blank line or a ``</s>`` line ends the current sentence.
"""

from __future__ import annotations

import logging
from collections import Counter
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Iterable, Iterator

logger = logging.getLogger(__name__)


class POSClass(Enum):
    NOUN = "N"
    VERB = "V"
    ADJECTIVE = "J"
    ADVERB = "R"
    OTHER = "O"

    @classmethod
    def from_letter(cls, letter: str) -> "POSClass":
        for member in cls:
            if member.value == letter:
                return member
        raise ValueError(f"unknown POS letter {letter!r}")


# Fixed precedence used wherever ties between POS classes must break
# deterministically (vocabulary ordering, lemma lookup preference).
POS_ORDER = (POSClass.NOUN, POSClass.VERB, POSClass.ADJECTIVE, POSClass.ADVERB, POSClass.OTHER)
_POS_RANK = {pos: i for i, pos in enumerate(POS_ORDER)}

# Tag prefixes for the Penn-style tagsets; longest matching prefix wins,
# anything unmatched maps to OTHER.
DEFAULT_TAG_MAP = {
    "NN": POSClass.NOUN,
    "VB": POSClass.VERB,
    "VV": POSClass.VERB,
    "JJ": POSClass.ADJECTIVE,
    "RB": POSClass.ADVERB,
}

DEFAULT_CAPS = {
    POSClass.NOUN: 20000,
    POSClass.VERB: 10000,
    POSClass.ADJECTIVE: 10000,
    POSClass.ADVERB: 5000,
}


def map_tag(tag: str, tag_map: dict[str, POSClass] | None = None) -> POSClass:
    table = DEFAULT_TAG_MAP if tag_map is None else tag_map
    best = None
    for prefix, pos in table.items():
        if tag.startswith(prefix) and (best is None or len(prefix) > len(best[0])):
            best = (prefix, pos)
    return best[1] if best else POSClass.OTHER


def make_key(lemma: str, pos: POSClass) -> str:
    """Canonical word identity used across matrices, word lists and tables."""
    return f"{lemma}/{pos.value}"


def split_key(key: str) -> tuple[str, POSClass]:
    lemma, _, letter = key.rpartition("/")
    if not lemma:
        # bare word without a POS marker
        return key, POSClass.OTHER
    return lemma, POSClass.from_letter(letter)


@dataclass(frozen=True)
class Token:
    surface: str
    lemma: str
    pos: POSClass


@dataclass(frozen=True)
class Sentence:
    """Non-empty token sequence; token positions are 1-based (tokens[0] is position 1)."""

    tokens: tuple[Token, ...]

    def __len__(self) -> int:
        return len(self.tokens)


class ParseError(Exception):
    def __init__(self, path: str | Path, line_no: int, message: str):
        super().__init__(f"{path}:{line_no}: {message}")
        self.path = str(path)
        self.line_no = line_no


def load_corpus(
    path: str | Path,
    on_error: str = "abort",
    tag_map: dict[str, POSClass] | None = None,
) -> Iterator[Sentence]:
    """Stream sentences from a vertical-text corpus file.

    on_error: "abort" raises ParseError on a malformed line, "skip" drops the
    line with a warning. Lemmas are lowercased; tags map through tag_map.
    """
    if on_error not in ("abort", "skip"):
        raise ValueError(f"on_error must be 'abort' or 'skip', got {on_error!r}")
    tokens: list[Token] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if line.strip() == "" or line.strip() == "</s>":
                if tokens:
                    yield Sentence(tuple(tokens))
                    tokens = []
                continue
            fields = line.split("\t")
            if len(fields) < 3:
                if on_error == "abort":
                    raise ParseError(path, line_no, f"expected >=3 tab-separated fields, got {len(fields)}")
                logger.warning("%s:%d: skipping malformed line", path, line_no)
                continue
            surface, lemma, tag = fields[0], fields[1], fields[2]
            tokens.append(Token(surface, lemma.lower(), map_tag(tag, tag_map)))
    if tokens:
        yield Sentence(tuple(tokens))


@dataclass(frozen=True)
class VocabEntry:
    lemma: str
    pos: POSClass
    freq: int

    @property
    def key(self) -> str:
        return make_key(self.lemma, self.pos)


@dataclass
class Vocabulary:
    """Frequency-ranked (lemma, POS) table; order is freq desc, lemma asc, POS rank."""

    entries: list[VocabEntry]

    def __post_init__(self):
        self.index = {(e.lemma, e.pos): i for i, e in enumerate(self.entries)}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, item: tuple[str, POSClass]) -> bool:
        return item in self.index

    def freq(self, lemma: str, pos: POSClass) -> int:
        return self.entries[self.index[(lemma, pos)]].freq

    def keys(self) -> list[str]:
        return [e.key for e in self.entries]

    def top_keys(self, n: int) -> list[str]:
        return [e.key for e in self.entries[:n]]

    @classmethod
    def from_counts(cls, counts: Counter, caps: dict[POSClass, int] | None = None) -> "Vocabulary":
        caps = DEFAULT_CAPS if caps is None else caps
        selected: list[VocabEntry] = []
        for pos, cap in caps.items():
            if cap <= 0:
                raise ValueError(f"cap for {pos} must be positive")
            pool = [(lemma, n) for (lemma, p), n in counts.items() if p == pos]
            pool.sort(key=lambda it: (-it[1], it[0]))
            selected.extend(VocabEntry(lemma, pos, n) for lemma, n in pool[:cap])
        selected.sort(key=lambda e: (-e.freq, e.lemma, _POS_RANK[e.pos]))
        return cls(selected)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for e in self.entries:
                fh.write(f"{e.lemma}\t{e.pos.value}\t{e.freq}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        entries = []
        with open(path, encoding="utf-8") as fh:
            for line in fh:
                lemma, letter, freq = line.rstrip("\n").split("\t")
                entries.append(VocabEntry(lemma, POSClass.from_letter(letter), int(freq)))
        return cls(entries)


def count_frequencies(sentences: Iterable[Sentence]) -> Counter:
    """(lemma, POS) occurrence counts; merging shards is plain Counter addition."""
    counts: Counter = Counter()
    for sentence in sentences:
        counts.update((tok.lemma, tok.pos) for tok in sentence.tokens)
    return counts


def build_vocabulary(
    sentences: Iterable[Sentence], caps: dict[POSClass, int] | None = None
) -> Vocabulary:
    return Vocabulary.from_counts(count_frequencies(sentences), caps)


def proportional_sample(vocab: Vocabulary, size: int) -> list[str]:
    """Most frequent `size` words drawn 4:2:2:1 across noun/verb/adjective/adverb.

    Classes short on words hand their leftover quota to the most frequent
    remaining words of the other classes.
    """
    ratios = {
        POSClass.NOUN: 4,
        POSClass.VERB: 2,
        POSClass.ADJECTIVE: 2,
        POSClass.ADVERB: 1,
    }
    total = sum(ratios.values())
    by_pos: dict[POSClass, list[VocabEntry]] = {pos: [] for pos in ratios}
    for e in vocab.entries:
        if e.pos in by_pos:
            by_pos[e.pos].append(e)

    exact = {pos: size * r / total for pos, r in ratios.items()}
    alloc = {pos: int(exact[pos]) for pos in ratios}
    remainder = size - sum(alloc.values())
    # distribute leftover units by largest fractional part, POS rank breaking ties
    for pos in sorted(ratios, key=lambda p: (-(exact[p] - alloc[p]), _POS_RANK[p])):
        if remainder <= 0:
            break
        alloc[pos] += 1
        remainder -= 1

    chosen: list[VocabEntry] = []
    for pos in ratios:
        chosen.extend(by_pos[pos][: alloc[pos]])
    if len(chosen) < size:
        taken = {(e.lemma, e.pos) for e in chosen}
        leftovers = [e for e in vocab.entries if e.pos in by_pos and (e.lemma, e.pos) not in taken]
        chosen.extend(leftovers[: size - len(chosen)])
    chosen.sort(key=lambda e: (-e.freq, e.lemma, _POS_RANK[e.pos]))
    return [e.key for e in chosen]
