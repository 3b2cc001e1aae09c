import sys
from collections import Counter
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from lexbasis.corpus import POSClass, Sentence, Token, Vocabulary
from lexbasis.matrix import SparseMatrix

DATA_DIR = Path(__file__).parent / "data"

LETTER_TO_POS = {p.value: p for p in POSClass}


def sent(text: str) -> Sentence:
    """Build a sentence from space-separated `lemma` or `lemma/P` words.

    A bare lemma defaults to noun so it lands in the default vocabulary caps.
    """
    tokens = []
    for word in text.split():
        if "/" in word:
            lemma, letter = word.rsplit("/", 1)
            pos = LETTER_TO_POS[letter]
        else:
            lemma, pos = word, POSClass.NOUN
        tokens.append(Token(lemma, lemma, pos))
    return Sentence(tuple(tokens))


def vocab_of(*sentences: Sentence) -> Vocabulary:
    counts = Counter()
    for s in sentences:
        counts.update((t.lemma, t.pos) for t in s.tokens)
    caps = {pos: 1000 for pos in POSClass}
    return Vocabulary.from_counts(counts, caps)


def matrix_from_dense(dense: np.ndarray, row_keys=None, col_keys=None) -> SparseMatrix:
    dense = np.asarray(dense, dtype=np.float64)
    n_rows, n_cols = dense.shape
    row_keys = row_keys or [f"w{i}/N" for i in range(n_rows)]
    col_keys = col_keys or [f"c{j}/N" for j in range(n_cols)]
    rids, cids = np.nonzero(dense)
    return SparseMatrix.from_triplets(rids.astype(np.int64), cids.astype(np.int64),
                                      dense[rids, cids], row_keys, col_keys)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# Micro corpus pair for end-to-end runs: 40 lemmas, embeddings built so the
# final normalized rule selects exactly the first MICRO_CLUSTER words in both
# corpora, making downstream set sizes deterministic under a pinned seed.

MICRO_DIM = 12
MICRO_WORDS = 40
MICRO_CLUSTER = 11
_MICRO_TAGS = ["NN", "VV", "JJ", "RB"]


def _micro_lemma(i: int) -> str:
    return f"w{i:02d}"


def _micro_tag(i: int) -> str:
    return "NN" if i < 16 else _MICRO_TAGS[1 + (i - 16) // 8]


def write_micro_corpus(path: Path, seed: int, mix: float) -> None:
    """Two overlapping zipfian topic mixtures over the shared 40 lemmas."""
    rng = np.random.default_rng(seed)
    base = 1.0 / (np.arange(MICRO_WORDS) + 2.0) ** 0.7
    first = base.copy()
    first[20:] *= mix
    second = base.copy()
    second[:20] *= mix
    first /= first.sum()
    second /= second.sum()
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(240):
            weights = first if rng.random() < 0.5 else second
            length = int(rng.integers(8, 13))
            for i in rng.choice(MICRO_WORDS, size=length, p=weights):
                fh.write(f"{_micro_lemma(i)}\t{_micro_lemma(i)}\t{_micro_tag(i)}\n")
            fh.write("</s>\n")


def write_micro_embeddings(path: Path, seed: int) -> None:
    """First MICRO_CLUSTER words share a direction and a 4-dim zero pattern;
    one word carries the maximum zero count with low similarity; the rest are
    signed noise failing both the similarity-sum and zero-share cuts."""
    rng = np.random.default_rng(seed)
    cluster_dir = np.abs(rng.normal(0, 1, MICRO_DIM))
    cluster_dir /= np.linalg.norm(cluster_dir)
    zero4 = rng.choice(MICRO_DIM, size=4, replace=False)
    with open(path, "w", encoding="utf-8") as fh:
        for i in range(MICRO_WORDS):
            if i < MICRO_CLUSTER:
                v = 0.9 * cluster_dir + 0.04 * rng.normal(0, 1, MICRO_DIM)
                v[zero4] = 0.0
            elif i == MICRO_CLUSTER:
                v = rng.normal(0, 0.3, MICRO_DIM)
                v[rng.choice(MICRO_DIM, size=9, replace=False)] = 0.0
            else:
                v = rng.normal(0, 0.6, MICRO_DIM)
                v[rng.choice(MICRO_DIM, size=2, replace=False)] = 0.0
            fh.write(_micro_lemma(i) + " "
                     + " ".join(f"{x:.6f}" for x in v) + "\n")


def write_micro_testset(path: Path) -> None:
    pairs = [("w00", "w01", 9.0), ("w02", "w03", 8.5), ("w04", "w05", 8.0),
             ("w00", "w30", 2.0), ("w06", "w25", 1.5), ("w10", "w35", 1.0),
             ("w01", "w28", 2.5), ("w12", "w22", 4.0)]
    with open(path, "w", encoding="utf-8") as fh:
        for a, b, s in pairs:
            fh.write(f"{a}\t{b}\t{s}\n")


@pytest.fixture(scope="session")
def micro(tmp_path_factory):
    root = tmp_path_factory.mktemp("micro")
    write_micro_corpus(root / "a.vert", seed=101, mix=0.30)
    write_micro_corpus(root / "b.vert", seed=202, mix=0.35)
    write_micro_embeddings(root / "emb.txt", seed=7)
    write_micro_testset(root / "sim.tsv")
    return root
