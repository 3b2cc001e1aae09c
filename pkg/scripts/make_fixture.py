"""Regenerate the bundled toy fixture under tests/data/.

Produces two synthetic POS-tagged corpora, a 50-dim embedding file, three
word-similarity test sets, and the pipeline config that ties them together.
Everything is deterministic (fixed RNG seed), so reruns are byte-identical.

The corpora are head-heavy topical text shaped so that every pipeline stage
has real work at toy scale:
  - a handful of hyper-frequent core words trips the raw frequency rules
    (the sparse-embedding cores satisfy WF>=11063 & NZ>30);
  - mid-frequency topical words pass the final normalized rule in bulk;
  - embedding sparsity (zeroed components) spreads the NZ criterion;
  - the two corpora share the lemma inventory but mix topics differently,
    so golden words extracted from each overlap without being identical.

Run: python3 scripts/make_fixture.py
"""

from __future__ import annotations

import sys
from pathlib import Path

import numpy as np

from lexbasis.corpus import POSClass, Vocabulary, build_vocabulary, load_corpus
from lexbasis.criteria import build_labeled_sets, compute_criteria, normalize_criteria
from lexbasis.matrix import load_embeddings
from lexbasis.rules import builtin_rule_sets, evaluate_rule_set

DATA_DIR = Path(__file__).resolve().parents[1] / "tests" / "data"
SEED = 20260817
DIM = 50

N_SENT_A = 26_000
N_SENT_B = 19_000

# (surface==lemma, tag); tags map through the default prefix table
CORES = [
    ("time", "NN"), ("people", "NN"), ("year", "NN"), ("way", "NN"),
    ("day", "NN"), ("world", "NN"), ("life", "NN"), ("part", "NN"),
    ("make", "VV"), ("take", "VV"), ("know", "VV"), ("see", "VV"), ("get", "VV"),
    ("good", "JJ"), ("new", "JJ"), ("great", "JJ"),
    ("well", "RB"), ("still", "RB"),
]

FUNCTION_WORDS = [
    ("the", "DT"), ("of", "IN"), ("and", "CC"), ("a", "DT"), ("in", "IN"),
    ("to", "TO"), ("for", "IN"), ("on", "IN"), ("with", "IN"), ("that", "IN"),
    ("it", "PP"), ("as", "IN"), ("at", "IN"), ("by", "IN"), ("from", "IN"),
    ("this", "DT"), ("or", "CC"), ("an", "DT"), ("but", "CC"), ("they", "PP"),
]

TOPIC_PREFIXES = ["mar", "bot", "ast", "mus", "cul", "arc", "med", "tek"]
# per-topic lemma counts by POS class (noun, verb, adjective, adverb)
TOPIC_SHAPE = {"NN": 42, "VV": 21, "JJ": 21, "RB": 10}
TAIL_SHAPE = {"NN": 72, "VV": 36, "JJ": 36, "RB": 16}
N_HUBS = 2
HUB_BOOST = 3.0
# each topic's N_COLLO most frequent members get a dedicated collocation
# partner emitted right after them; those partner columns carry pair signal
# no other column can substitute, anchoring swarm runs to a shared optimum
N_COLLO = 4
P_COLLO = 0.55
_PARTNER_TAGS = ["NN", "VV", "JJ", "RB"]

_ONSETS = ["b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z"]
_NUCLEI = ["a", "e", "i", "o", "u", "ai", "ea", "oo", "ou"]
_CODAS = ["", "n", "r", "s", "l", "m", "t", "nd", "st"]


def synth_lemmas(rng: np.random.Generator, prefix: str, count: int,
                 taken: set[str]) -> list[str]:
    out: list[str] = []
    while len(out) < count:
        lemma = prefix + "".join(
            rng.choice(part) for part in (_ONSETS, _NUCLEI, _CODAS, _ONSETS, _NUCLEI))
        if lemma not in taken:
            taken.add(lemma)
            out.append(lemma)
    return out


def build_inventory(rng: np.random.Generator):
    """Topic -> list of (lemma, tag) ordered by descending draw weight,
    plus per-topic collocation partners and the anchor -> partner map."""
    taken = {lemma for lemma, _ in CORES} | {lemma for lemma, _ in FUNCTION_WORDS}
    topics: list[list[tuple[str, str]]] = []
    for prefix in TOPIC_PREFIXES:
        members: list[tuple[str, str]] = []
        for tag, count in TOPIC_SHAPE.items():
            members.extend((lemma, tag) for lemma in synth_lemmas(rng, prefix, count, taken))
        rng.shuffle(members)
        topics.append(members)
    # collocation partners are never drawn on their own; they only follow
    # their anchor, so each partner column is a pure pair-association signal
    partners: list[list[tuple[str, str]]] = []
    collo: dict[str, tuple[str, str]] = {}
    for t, prefix in enumerate(TOPIC_PREFIXES):
        plist = []
        lemmas = synth_lemmas(rng, prefix, N_COLLO, taken)
        for i, lemma in enumerate(lemmas):
            partner = (lemma, _PARTNER_TAGS[i % len(_PARTNER_TAGS)])
            plist.append(partner)
            collo[topics[t][i][0]] = partner
        partners.append(plist)
    # rare tail words appended after the topical block so they land in the
    # low-weight ranks of whichever topic hosts them
    tail: list[tuple[str, str]] = []
    for tag, count in TAIL_SHAPE.items():
        tail.extend((lemma, tag) for lemma in synth_lemmas(rng, "x", count, taken))
    rng.shuffle(tail)
    for i, item in enumerate(tail):
        topics[i % len(topics)].append(item)
    return topics, partners, collo


def zipf_weights(n: int, offset: float, exponent: float) -> np.ndarray:
    w = 1.0 / (np.arange(n) + offset) ** exponent
    return w / w.sum()


def core_weights() -> np.ndarray:
    """Three near-equal mega cores on top of a Zipf tail, so both corpora
    push several words past the highest raw frequency threshold."""
    head = np.array([0.23, 0.21, 0.19])
    tail = zipf_weights(len(CORES) - 3, 1.0, 1.1) * (1.0 - head.sum())
    return np.concatenate([head, tail])


def write_corpus(path: Path, rng: np.random.Generator, topics, collo,
                 n_sentences: int, topic_probs: np.ndarray, p_function: float,
                 p_core: float, p_leak: float) -> None:
    core_w = core_weights()
    # the first two members of each topic are "hub" words: boosted so their
    # context columns carry co-occurrence mass no sibling column can replace
    topic_w = []
    for t in topics:
        w = zipf_weights(len(t), 2.0, 1.05)
        w[:N_HUBS] *= HUB_BOOST
        topic_w.append(w / w.sum())
    func_w = zipf_weights(len(FUNCTION_WORDS), 1.0, 1.0)
    n_topics = len(topics)
    with open(path, "w", encoding="utf-8") as fh:
        for _ in range(n_sentences):
            topic_id = int(rng.choice(n_topics, p=topic_probs))
            length = int(rng.integers(8, 19))
            cats = rng.random(length)
            pending: tuple[str, str] | None = None
            for u in cats:
                if pending is not None:
                    lemma, tag = pending
                    pending = None
                elif u < p_function:
                    lemma, tag = FUNCTION_WORDS[int(rng.choice(len(FUNCTION_WORDS), p=func_w))]
                elif u < p_function + p_core:
                    lemma, tag = CORES[int(rng.choice(len(CORES), p=core_w))]
                else:
                    t = topic_id
                    if u > 1.0 - p_leak:
                        t = int(rng.integers(n_topics))
                    lemma, tag = topics[t][int(rng.choice(len(topics[t]), p=topic_w[t]))]
                    if lemma in collo and rng.random() < P_COLLO:
                        pending = collo[lemma]
                fh.write(f"{lemma}\t{lemma}\t{tag}\n")
            fh.write(".\t.\tSENT\n")
            fh.write("</s>\n")


def write_embeddings(path: Path, rng: np.random.Generator, topics,
                     partners) -> dict[str, int]:
    """50-dim vectors with controlled sparsity; returns lemma -> zero count."""
    core_dir = np.abs(rng.normal(0, 1, DIM))
    core_dir /= np.linalg.norm(core_dir)
    centroids = []
    for _ in topics:
        c = np.abs(rng.normal(0, 1, DIM))
        centroids.append(c / np.linalg.norm(c))

    # sparse-embedding cores: the raw rule WF>=11063 & NZ>30 needs a few
    # hyper-frequent words with more than 30 near-zero components
    sparse_cores = {CORES[i][0] for i in range(4)}
    rows: list[tuple[str, np.ndarray]] = []
    zero_of: dict[str, int] = {}

    def emit(lemma: str, centroid: np.ndarray, base_lo: float, base_hi: float,
             z: int) -> None:
        base = rng.uniform(base_lo, base_hi)
        v = base * core_dir + 0.6 * centroid + rng.normal(0, 0.12, DIM)
        idx = rng.choice(DIM, size=z, replace=False)
        v[idx] = 0.0
        zero_of[lemma] = z
        rows.append((lemma, v))

    for lemma, _ in CORES:
        z = int(rng.integers(31, 39)) if lemma in sparse_cores else int(rng.integers(6, 15))
        emit(lemma, core_dir, 0.55, 0.8, z)

    flat = [(lemma, t) for t, members in enumerate(topics) for lemma, _ in members]
    outliers = {flat[i][0] for i in rng.choice(len(flat), size=6, replace=False)}
    for lemma, t in flat:
        z = int(rng.integers(42, 47)) if lemma in outliers else int(rng.integers(4, 31))
        emit(lemma, centroids[t], 0.3, 0.75, z)
    # partners need to clear the normalized selection thresholds: zero
    # counts safely above the NZ cut, base weight high enough for the WS cut
    for t, plist in enumerate(partners):
        for lemma, _ in plist:
            emit(lemma, centroids[t], 0.52, 0.78, int(rng.integers(12, 19)))

    with open(path, "w", encoding="utf-8") as fh:
        for lemma, v in rows:
            fh.write(lemma + " " + " ".join(f"{x:.6f}" for x in v) + "\n")
    return zero_of


def pick_pair_pool(vocab: Vocabulary, topics) -> list[list[str]]:
    """Per topic: the six most frequent member lemmas (any content POS)."""
    pools = []
    for members in topics:
        freqs = []
        for lemma, tag in members:
            pos = {"NN": POSClass.NOUN, "VV": POSClass.VERB,
                   "JJ": POSClass.ADJECTIVE, "RB": POSClass.ADVERB}[tag]
            if (lemma, pos) in vocab.index:
                freqs.append((vocab.freq(lemma, pos), lemma))
        freqs.sort(reverse=True)
        pools.append([lemma for _, lemma in freqs[:6]])
    return pools


def write_testsets(rng: np.random.Generator, pools) -> None:
    def intra_pairs(count: int, used: set[frozenset]) -> list[tuple[str, str, float]]:
        out = []
        while len(out) < count:
            topic = pools[int(rng.integers(len(pools)))]
            a, b = rng.choice(len(topic), size=2, replace=False)
            key = frozenset((topic[a], topic[b]))
            if key in used:
                continue
            used.add(key)
            out.append((topic[a], topic[b], 6.0 + 3.0 * rng.random()))
        return out

    def cross_pairs(count: int, used: set[frozenset]) -> list[tuple[str, str, float]]:
        out = []
        while len(out) < count:
            t1, t2 = rng.choice(len(pools), size=2, replace=False)
            a = pools[t1][int(rng.integers(len(pools[t1])))]
            b = pools[t2][int(rng.integers(len(pools[t2])))]
            key = frozenset((a, b))
            if key in used:
                continue
            used.add(key)
            out.append((a, b, 0.5 + 3.0 * rng.random()))
        return out

    specs = [("toy_men.tsv", 24, 16, True),
             ("toy_rg65.tsv", 16, 14, False),
             ("toy_simlex.tsv", 20, 16, False)]
    for name, n_intra, n_cross, header in specs:
        used: set[frozenset] = set()
        pairs = intra_pairs(n_intra, used) + cross_pairs(n_cross, used)
        order = rng.permutation(len(pairs))
        with open(DATA_DIR / name, "w", encoding="utf-8") as fh:
            if header:
                fh.write("word1\tword2\tscore\n")
            for i in order:
                a, b, s = pairs[int(i)]
                fh.write(f"{a}\t{b}\t{s:.2f}\n")


CONFIG_TEXT = """\
[pipeline]
out_dir = out
seed = 42

[corpus]
corpus_a = toy_corpus_a.vert
corpus_b = toy_corpus_b.vert
cap_nouns = 2000
cap_verbs = 1000
cap_adjectives = 1000
cap_adverbs = 500

[cooc]
decay = 0.1
window = 10

[criteria]
embeddings = toy_embeddings.txt
candidate_size = 2000
a_size = 500
m = 100
zero_eps = 0.01

[rules]
rule_set = final_normalized

[bpso]
n_b = 50
population = 30
iterations = 20
inertia = 0.7
cognitive = 0.15
social = 0.15
v_max = 4.0
train_size = 200

[golden]
runs = 12
keep = 2

[wordsel]
n_s = 50
train_size = 200
method = incremental

[eval]
testsets = toy_men.tsv, toy_rg65.tsv, toy_simlex.tsv
baseline = X_baseline
"""

CAPS = {POSClass.NOUN: 2000, POSClass.VERB: 1000,
        POSClass.ADJECTIVE: 1000, POSClass.ADVERB: 500}


def check(corpus_path: Path, emb_path: Path, label: str,
          partner_keys: set[str]) -> Vocabulary:
    """Recompute criteria/rules on a generated corpus and enforce the
    distributional targets the pipeline relies on."""
    vocab = build_vocabulary(load_corpus(corpus_path), CAPS)
    emb = load_embeddings(emb_path)
    candidates = vocab.top_keys(2000)
    table = compute_criteria(candidates, emb, vocab)
    a_set = [k for k in vocab.top_keys(500) if k in table]
    build_labeled_sets(table, a_set, 100)
    normalize_criteria(table)
    rules = builtin_rule_sets()
    ir = evaluate_rule_set(rules["initial_raw"], table)
    fr = evaluate_rule_set(rules["final_normalized"], table)
    top = max(r.wf for r in table.rows.values())
    ws_values = [r.ws for r in table.rows.values()]
    in_fr = len(partner_keys & fr)
    print(f"[{label}] vocab={len(vocab)} candidates={len(table)} "
          f"max_wf={top} ws=[{min(ws_values):.0f}..{max(ws_values):.0f}] "
          f"|IR|={len(ir)} |FR|={len(fr)} partners_in_FR={in_fr}/{len(partner_keys)}")
    assert len(ir) >= 2, f"{label}: initial raw rules selected too few words ({len(ir)})"
    assert 60 <= len(fr) <= 600, f"{label}: |FR|={len(fr)} outside [60, 600]"
    assert in_fr >= int(0.75 * len(partner_keys)), \
        f"{label}: only {in_fr} collocation partners pass the final rule"
    return vocab


def main() -> int:
    DATA_DIR.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(SEED)
    topics, partners, collo = build_inventory(rng)
    tag_pos = {"NN": "N", "VV": "V", "JJ": "J", "RB": "R"}
    partner_keys = {f"{lemma}/{tag_pos[tag]}"
                    for plist in partners for lemma, tag in plist}

    write_corpus(DATA_DIR / "toy_corpus_a.vert", rng, topics, collo, N_SENT_A,
                 topic_probs=np.array([.19, .16, .14, .13, .11, .10, .09, .08]),
                 p_function=0.32, p_core=0.26, p_leak=0.05)
    write_corpus(DATA_DIR / "toy_corpus_b.vert", rng, topics, collo, N_SENT_B,
                 topic_probs=np.array([.08, .09, .10, .11, .13, .14, .16, .19]),
                 p_function=0.32, p_core=0.26, p_leak=0.07)
    write_embeddings(DATA_DIR / "toy_embeddings.txt", rng, topics, partners)

    vocab_a = check(DATA_DIR / "toy_corpus_a.vert", DATA_DIR / "toy_embeddings.txt",
                    "corpus_a", partner_keys)
    check(DATA_DIR / "toy_corpus_b.vert", DATA_DIR / "toy_embeddings.txt",
          "corpus_b", partner_keys)

    pools = pick_pair_pool(vocab_a, topics)
    write_testsets(rng, pools)
    (DATA_DIR / "pipeline_toy.cfg").write_text(CONFIG_TEXT, encoding="utf-8")
    print(f"fixture written to {DATA_DIR}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
