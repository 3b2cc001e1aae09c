"""One-config orchestration of the whole vector-construction workflow.

A run walks a fixed stage graph: vocabulary -> co-occurrence counts -> PPMI
-> criteria -> rule filtering -> swarm weighting / influence selection ->
golden-word extraction -> evaluation. Every stage reads its inputs from
files and writes its outputs to files under the configured output
directory, so a stage's behavior never depends on whether its inputs came
from this run or an earlier one.

Each stage writes a `<stage>.prov` sidecar recording a provenance key (a
hash over the stage name, its parameters, and its input file hashes) plus
the hashes of its outputs. A stage is skipped as a cache hit when the
recorded key matches the freshly computed one and every output file still
hashes to its recorded value. Outputs carry no timestamps, so a rerun with
an unchanged config is byte-identical.

Matrix naming: X_baseline (window counts over the top-frequency set A),
X_A (decay counts over A), X_IR / X_FR (decay counts over the words picked
by the initial / final selection rules), X_BA / X_BFR (swarm-weighted
subsets of A / FR), X_SA / X_SFR (influence-selected subsets), X_SA_G
(SA plus this corpus's golden words), X_SA_Gc / X_BA_Gc (SA / BA plus the
golden words common to both corpora; the BA variant is kept even though
augmenting an optimized set is expected to hurt).
"""

from __future__ import annotations

import configparser
import hashlib
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .bpso import SwarmConfig, extract_golden, run_bpso
from .corpus import POSClass, Vocabulary, build_vocabulary, load_corpus, proportional_sample
from .criteria import CriteriaTable, build_labeled_sets, compute_criteria, normalize_criteria
from .evaluate import evaluate, load_testset, report
from .matrix import (SparseMatrix, build_cooc_decay, build_cooc_window,
                     load_embeddings, ppmi_transform, restrict_columns, restrict_rows)
from .rules import builtin_rule_sets, evaluate_rule_set
from .wordsel import column_influence, select_top

logger = logging.getLogger(__name__)

MATRIX_ARTIFACTS = ("X_baseline", "X_A", "X_IR", "X_FR", "X_BA", "X_BFR",
                    "X_SA", "X_SFR", "X_SA_G", "X_SA_Gc", "X_BA_Gc")

# execution order; a run executes the subset it needs in this sequence
STAGE_ORDER = ("vocab_a", "set_A", "counts_a", "counts_window_a", "criteria_a",
               "rules_a", "train_bpso_a", "train_wordsel_a",
               "X_baseline", "X_A", "X_IR", "X_FR",
               "X_BA", "X_BFR", "X_SA", "X_SFR", "golden_a", "X_SA_G",
               "vocab_b", "counts_b", "criteria_b", "rules_b", "X_FR_b",
               "train_bpso_b", "golden_b", "Gc", "X_SA_Gc", "X_BA_Gc")

TWO_CORPUS_STAGES = frozenset({"vocab_b", "counts_b", "criteria_b", "rules_b",
                               "X_FR_b", "train_bpso_b", "golden_b", "Gc",
                               "X_SA_Gc", "X_BA_Gc"})

# swarm-based stages draw their seeds from disjoint spawns of the run seed
_SEED_CHANNEL = {"X_BA": 1, "X_BFR": 2, "golden_a": 3, "golden_b": 4}


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class PipelineConfig:
    corpus_a: Path
    embeddings: Path
    out_dir: Path
    corpus_b: Path | None = None
    caps: dict[POSClass, int] = field(default_factory=lambda: {
        POSClass.NOUN: 20000, POSClass.VERB: 10000,
        POSClass.ADJECTIVE: 10000, POSClass.ADVERB: 5000})
    decay: float = 0.1
    window: int = 10
    max_alpha: int | None = None
    candidate_size: int = 10000
    a_size: int = 5000
    m: int = 3000
    zero_eps: float = 0.01
    rule_set: str = "final_normalized"
    n_b: int = 1000
    n_s: int = 1000
    bpso_train_size: int = 2000
    population: int = 30
    iterations: int = 20
    inertia: float = 0.7
    cognitive: float = 0.15
    social: float = 0.15
    v_max: float = 4.0
    golden_runs: int = 20
    golden_keep: int = 3
    wordsel_train_size: int = 18000
    wordsel_method: str = "incremental"
    testsets: tuple[Path, ...] = ()
    baseline: str = "X_baseline"
    seed: int = 0

    def __post_init__(self):
        if self.a_size > self.candidate_size:
            raise ValueError(f"a_size={self.a_size} exceeds candidate_size={self.candidate_size}")
        if self.n_b > self.a_size or self.n_s > self.a_size:
            raise ValueError("n_b and n_s must not exceed a_size")
        for name in ("n_b", "n_s", "m", "candidate_size", "a_size", "window"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if self.bpso_train_size < 2 or self.wordsel_train_size < 2:
            raise ValueError("training set sizes must be >= 2")
        if self.decay <= 0:
            raise ValueError("decay must be positive")
        if self.golden_keep > self.golden_runs:
            raise ValueError("golden_keep must not exceed golden_runs")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")

    @classmethod
    def from_ini(cls, path: str | Path) -> "PipelineConfig":
        """Flat key=value config with one section per stage; relative paths
        resolve against the config file's directory."""
        path = Path(path).resolve()
        parser = configparser.ConfigParser()
        if not parser.read(path):
            raise FileNotFoundError(f"config file {path} not found")
        base = path.parent

        def resolve(value: str) -> Path:
            return (base / value.strip()).resolve()

        def opt(section: str, key: str, fallback: str | None = None) -> str | None:
            return parser.get(section, key, fallback=fallback)

        corpus_a = opt("corpus", "corpus_a")
        if corpus_a is None:
            raise ValueError(f"{path}: [corpus] corpus_a is required")
        emb = opt("criteria", "embeddings")
        if emb is None:
            raise ValueError(f"{path}: [criteria] embeddings is required")
        corpus_b = opt("corpus", "corpus_b")
        max_alpha = opt("cooc", "max_alpha")
        testsets_raw = opt("eval", "testsets", "") or ""
        testsets = tuple(resolve(t) for t in testsets_raw.split(",") if t.strip())

        def geti(section, key, fallback):
            return parser.getint(section, key, fallback=fallback)

        def getf(section, key, fallback):
            return parser.getfloat(section, key, fallback=fallback)

        return cls(
            corpus_a=resolve(corpus_a),
            corpus_b=resolve(corpus_b) if corpus_b else None,
            embeddings=resolve(emb),
            out_dir=resolve(opt("pipeline", "out_dir", "out")),
            caps={POSClass.NOUN: geti("corpus", "cap_nouns", 20000),
                  POSClass.VERB: geti("corpus", "cap_verbs", 10000),
                  POSClass.ADJECTIVE: geti("corpus", "cap_adjectives", 10000),
                  POSClass.ADVERB: geti("corpus", "cap_adverbs", 5000)},
            decay=getf("cooc", "decay", 0.1),
            window=geti("cooc", "window", 10),
            max_alpha=int(max_alpha) if max_alpha else None,
            candidate_size=geti("criteria", "candidate_size", 10000),
            a_size=geti("criteria", "a_size", 5000),
            m=geti("criteria", "m", 3000),
            zero_eps=getf("criteria", "zero_eps", 0.01),
            rule_set=opt("rules", "rule_set", "final_normalized"),
            n_b=geti("bpso", "n_b", 1000),
            n_s=geti("wordsel", "n_s", 1000),
            bpso_train_size=geti("bpso", "train_size", 2000),
            population=geti("bpso", "population", 30),
            iterations=geti("bpso", "iterations", 20),
            inertia=getf("bpso", "inertia", 0.7),
            cognitive=getf("bpso", "cognitive", 0.15),
            social=getf("bpso", "social", 0.15),
            v_max=getf("bpso", "v_max", 4.0),
            golden_runs=geti("golden", "runs", 20),
            golden_keep=geti("golden", "keep", 3),
            wordsel_train_size=geti("wordsel", "train_size", 18000),
            wordsel_method=opt("wordsel", "method", "incremental"),
            testsets=testsets,
            baseline=opt("eval", "baseline", "X_baseline"),
            seed=geti("pipeline", "seed", 0),
        )


@dataclass
class StageArtifact:
    name: str
    path: Path
    provenance: str
    recipe: str
    n_context_words: int | None
    cache_hit: bool


@dataclass
class RunResult:
    artifacts: list[StageArtifact]
    cache_hits: dict[str, bool]
    manifest_path: Path


def _stage_seed(seed: int, channel: int) -> int:
    return int(np.random.SeedSequence([seed, channel]).generate_state(1)[0])


def _read_words(path: Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _write_words(path: Path, words: Iterable[str]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for w in sorted(set(words)):
            fh.write(w + "\n")


def _file_sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def _smat_n_cols(path: Path) -> int:
    with open(path, encoding="utf-8") as fh:
        return int(fh.readline().split()[1])


@dataclass(frozen=True)
class _StageDef:
    name: str
    deps: tuple[str, ...]
    external: tuple[Path, ...]
    params: dict
    outputs: tuple[str, ...]
    build: Callable[[], None]
    matrix: str | None = None  # .smat filename when the stage yields a matrix
    recipe: str = ""


class PipelineRunner:
    """Executes the dependency-closed subset of stages the caller asks for,
    reusing any stage whose provenance is unchanged."""

    def __init__(self, cfg: PipelineConfig):
        self.cfg = cfg
        self.out = Path(cfg.out_dir)
        self._hashes: dict[Path, str] = {}
        self._defs = self._build_graph()

    # -- provenance ------------------------------------------------------

    def _hash(self, path: Path) -> str:
        if path not in self._hashes:
            self._hashes[path] = _file_sha256(path)
        return self._hashes[path]

    def _provenance_key(self, sd: _StageDef) -> str:
        inputs: dict[str, str] = {}
        for dep in sd.deps:
            for out_name in self._defs[dep].outputs:
                inputs[out_name] = self._hash(self.out / out_name)
        for ext in sd.external:
            inputs[str(ext)] = self._hash(ext)
        blob = json.dumps({"stage": sd.name, "params": sd.params, "inputs": inputs},
                          sort_keys=True)
        return hashlib.sha256(blob.encode()).hexdigest()

    def _cache_hit(self, sd: _StageDef, key: str) -> bool:
        prov_path = self.out / f"{sd.name}.prov"
        if not prov_path.exists():
            return False
        try:
            record = json.loads(prov_path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            return False
        if record.get("key") != key:
            return False
        for out_name, recorded in record.get("outputs", {}).items():
            out_path = self.out / out_name
            if not out_path.exists() or _file_sha256(out_path) != recorded:
                return False
        return set(record.get("outputs", {})) == set(sd.outputs)

    def _write_prov(self, sd: _StageDef, key: str) -> None:
        outputs = {name: _file_sha256(self.out / name) for name in sd.outputs}
        for name, digest in outputs.items():
            self._hashes[self.out / name] = digest
        record = {"stage": sd.name, "key": key, "outputs": outputs}
        (self.out / f"{sd.name}.prov").write_text(
            json.dumps(record, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    # -- stage bodies ------------------------------------------------------

    def _load_vocab(self, name: str) -> Vocabulary:
        return Vocabulary.load(self.out / name)

    def _load_matrix(self, name: str) -> SparseMatrix:
        return SparseMatrix.load(self.out / name)

    def _restricted_ppmi(self, master_name: str, context_words: Sequence[str],
                         out_name: str) -> None:
        """PPMI matrix over the given context words; counts come from the
        master decay matrix. Context words with no co-occurrence data are
        dropped with a warning (their columns would be all-zero)."""
        master = self._load_matrix(master_name)
        cols = [k for k in sorted(set(context_words)) if k in master.col_index]
        dropped = len(set(context_words)) - len(cols)
        if dropped:
            logger.warning("%s: %d context words have no co-occurrence data",
                           out_name, dropped)
        if not cols:
            raise PipelineError(f"no usable context words for {out_name}")
        ppmi_transform(restrict_columns(master, cols)).save(self.out / out_name)

    def _train_matrix(self, matrix_name: str, train_file: str) -> SparseMatrix:
        m = self._load_matrix(matrix_name)
        words = _read_words(self.out / train_file)
        rows = [w for w in words if w in m.row_index]
        if len(rows) < len(words):
            logger.warning("%s: %d training words missing from %s",
                           train_file, len(words) - len(rows), matrix_name)
        if len(rows) < 2:
            raise PipelineError(f"fewer than 2 training rows available in {matrix_name}")
        return restrict_rows(m, rows)

    def _swarm_config(self, stage: str, n_select: int) -> SwarmConfig:
        cfg = self.cfg
        return SwarmConfig(n_select=n_select, population=cfg.population,
                           iterations=cfg.iterations, inertia=cfg.inertia,
                           cognitive=cfg.cognitive, social=cfg.social,
                           v_max=cfg.v_max,
                           seed=_stage_seed(cfg.seed, _SEED_CHANNEL[stage]))

    def _swarm_params(self) -> dict:
        cfg = self.cfg
        return {"population": cfg.population, "iterations": cfg.iterations,
                "inertia": cfg.inertia, "cognitive": cfg.cognitive,
                "social": cfg.social, "v_max": cfg.v_max, "seed": cfg.seed}

    def _build_vocab(self, corpus: Path, out_name: str) -> None:
        vocab = build_vocabulary(load_corpus(corpus), self.cfg.caps)
        if not len(vocab):
            raise PipelineError(f"corpus {corpus} yielded an empty vocabulary")
        vocab.save(self.out / out_name)

    def _build_counts(self, corpus: Path, vocab_name: str, out_name: str) -> None:
        vocab = self._load_vocab(vocab_name)
        candidates = vocab.top_keys(self.cfg.candidate_size)
        matrix = build_cooc_decay(load_corpus(corpus), vocab, candidates,
                                  decay=self.cfg.decay, max_alpha=self.cfg.max_alpha)
        matrix.save(self.out / out_name)

    def _build_criteria(self, vocab_name: str, out_name: str,
                        labels: bool) -> None:
        vocab = self._load_vocab(vocab_name)
        emb = load_embeddings(self.cfg.embeddings)
        candidates = vocab.top_keys(self.cfg.candidate_size)
        table = compute_criteria(candidates, emb, vocab, zero_eps=self.cfg.zero_eps)
        if labels:
            a_words = [w for w in _read_words(self.out / "A.txt") if w in table]
            build_labeled_sets(table, a_words, self.cfg.m)
        normalize_criteria(table)
        table.save(self.out / out_name)

    def _apply_rules(self, criteria_name: str, write_initial: bool,
                     fr_name: str) -> None:
        table = CriteriaTable.load(self.out / criteria_name)
        rule_sets = builtin_rule_sets()
        if self.cfg.rule_set not in rule_sets:
            raise PipelineError(f"unknown rule set {self.cfg.rule_set!r}; "
                                f"choose from {sorted(rule_sets)}")
        if write_initial:
            ir = evaluate_rule_set(rule_sets["initial_raw"], table)
            _write_words(self.out / "IR.txt", ir)
        fr = evaluate_rule_set(rule_sets[self.cfg.rule_set], table)
        _write_words(self.out / fr_name, fr)

    def _build_swarm_stage(self, stage: str, source_matrix: str, master: str,
                           list_name: str, out_name: str) -> None:
        train = self._train_matrix(source_matrix, "train_bpso.txt")
        result = run_bpso(train, self._swarm_config(stage, self.cfg.n_b))
        logger.info("%s: objective %.6g after %d iterations",
                    stage, result.value, self.cfg.iterations)
        _write_words(self.out / list_name, result.selected)
        self._restricted_ppmi(master, result.selected, out_name)

    def _build_wordsel_stage(self, source_matrix: str, master: str,
                             list_name: str, scores_name: str, out_name: str) -> None:
        train = self._train_matrix(source_matrix, "train_wordsel.txt")
        scores = column_influence(train, method=self.cfg.wordsel_method)
        chosen = select_top(scores, self.cfg.n_s)
        with open(self.out / scores_name, "w", encoding="utf-8") as fh:
            fh.write("word,frobenius_score\n")
            for word, value in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{word},{value:.9g}\n")
        _write_words(self.out / list_name, chosen)
        self._restricted_ppmi(master, sorted(chosen), out_name)

    def _build_golden(self, stage: str, source_matrix: str, train_file: str,
                      out_name: str) -> None:
        m = self._load_matrix(source_matrix)
        words = _read_words(self.out / train_file)
        rows = [w for w in words if w in m.row_index]
        if len(rows) < 2:
            raise PipelineError(f"fewer than 2 training rows available in {source_matrix}")
        train = restrict_rows(m, rows)
        result = extract_golden(train, self._swarm_config(stage, self.cfg.n_b),
                                n_runs=self.cfg.golden_runs, n_keep=self.cfg.golden_keep)
        logger.info("%s: %d golden words from runs %s", stage,
                    len(result.golden), result.kept_runs)
        _write_words(self.out / out_name, result.golden)

    def _build_union_matrix(self, base_list: str, extra_list: str, out_name: str) -> None:
        base = _read_words(self.out / base_list)
        extra = _read_words(self.out / extra_list)
        self._restricted_ppmi("counts_decay_a.smat", set(base) | set(extra), out_name)

    def _build_eval(self, matrix_stages: Sequence[str]) -> None:
        entries = []
        for name in matrix_stages:
            matrix = self._load_matrix(f"{name}.smat")
            for ts_path in self.cfg.testsets:
                entries.append(evaluate(matrix, load_testset(ts_path), matrix_name=name))
        if not entries:
            raise PipelineError("nothing to evaluate: no matrices or no test sets")
        present = {e.matrix_name for e in entries}
        baselines = [b for b in dict.fromkeys([self.cfg.baseline, "X_SA"])
                     if b in present]
        lines = report(entries, baselines)
        (self.out / "report.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    # -- graph ------------------------------------------------------------

    def _build_graph(self) -> dict[str, _StageDef]:
        cfg = self.cfg
        defs: dict[str, _StageDef] = {}

        def add(name: str, deps: Sequence[str], external: Sequence[Path],
                params: dict, outputs: Sequence[str], build: Callable[[], None],
                matrix: str | None = None, recipe: str = "") -> None:
            defs[name] = _StageDef(name, tuple(deps), tuple(external), params,
                                   tuple(outputs), build, matrix, recipe)

        caps_params = {pos.value: cap for pos, cap in cfg.caps.items()}
        rule_sets = builtin_rule_sets()
        rendered_fr = ([r.render() for r in rule_sets[cfg.rule_set].rules]
                       if cfg.rule_set in rule_sets else [cfg.rule_set])
        rendered_ir = [r.render() for r in rule_sets["initial_raw"].rules]

        add("vocab_a", [], [cfg.corpus_a], {"caps": caps_params}, ["vocab_a.tsv"],
            lambda: self._build_vocab(cfg.corpus_a, "vocab_a.tsv"))
        add("set_A", ["vocab_a"], [], {"a_size": cfg.a_size}, ["A.txt"],
            lambda: _write_words(self.out / "A.txt",
                                 self._load_vocab("vocab_a.tsv").top_keys(cfg.a_size)))
        add("counts_a", ["vocab_a"], [cfg.corpus_a],
            {"decay": cfg.decay, "max_alpha": cfg.max_alpha,
             "candidate_size": cfg.candidate_size},
            ["counts_decay_a.smat"],
            lambda: self._build_counts(cfg.corpus_a, "vocab_a.tsv", "counts_decay_a.smat"))
        add("counts_window_a", ["vocab_a", "set_A"], [cfg.corpus_a],
            {"window": cfg.window}, ["counts_window_a.smat"],
            lambda: build_cooc_window(
                load_corpus(cfg.corpus_a), self._load_vocab("vocab_a.tsv"),
                _read_words(self.out / "A.txt"), window=cfg.window,
            ).save(self.out / "counts_window_a.smat"))
        add("criteria_a", ["vocab_a", "set_A"], [cfg.embeddings],
            {"candidate_size": cfg.candidate_size, "zero_eps": cfg.zero_eps,
             "m": cfg.m, "ws_mode": "sum"},
            ["criteria_a.tsv"],
            lambda: self._build_criteria("vocab_a.tsv", "criteria_a.tsv", labels=True))
        add("rules_a", ["criteria_a"], [],
            {"rule_set": cfg.rule_set, "final": rendered_fr, "initial": rendered_ir},
            ["IR.txt", "FR.txt"],
            lambda: self._apply_rules("criteria_a.tsv", write_initial=True,
                                      fr_name="FR.txt"))
        add("train_bpso_a", ["vocab_a"], [], {"size": cfg.bpso_train_size},
            ["train_bpso.txt"],
            lambda: _write_words(self.out / "train_bpso.txt", proportional_sample(
                self._load_vocab("vocab_a.tsv"), cfg.bpso_train_size)))
        add("train_wordsel_a", ["vocab_a"], [], {"size": cfg.wordsel_train_size},
            ["train_wordsel.txt"],
            lambda: _write_words(self.out / "train_wordsel.txt", proportional_sample(
                self._load_vocab("vocab_a.tsv"), cfg.wordsel_train_size)))

        add("X_baseline", ["counts_window_a"], [], {}, ["X_baseline.smat"],
            lambda: ppmi_transform(self._load_matrix("counts_window_a.smat"))
            .save(self.out / "X_baseline.smat"),
            matrix="X_baseline.smat",
            recipe=f"window={cfg.window} counts over set A + PPMI")
        add("X_A", ["counts_a", "set_A"], [], {}, ["X_A.smat"],
            lambda: self._restricted_ppmi("counts_decay_a.smat",
                                          _read_words(self.out / "A.txt"), "X_A.smat"),
            matrix="X_A.smat",
            recipe=f"decay={cfg.decay} counts over set A + PPMI")
        add("X_IR", ["counts_a", "rules_a"], [], {}, ["X_IR.smat"],
            lambda: self._restricted_ppmi("counts_decay_a.smat",
                                          _read_words(self.out / "IR.txt"), "X_IR.smat"),
            matrix="X_IR.smat",
            recipe="decay counts over initial-rule words + PPMI")
        add("X_FR", ["counts_a", "rules_a"], [], {}, ["X_FR.smat"],
            lambda: self._restricted_ppmi("counts_decay_a.smat",
                                          _read_words(self.out / "FR.txt"), "X_FR.smat"),
            matrix="X_FR.smat",
            recipe=f"decay counts over {cfg.rule_set} words + PPMI")

        add("X_BA", ["X_A", "train_bpso_a", "counts_a"],
            [], {**self._swarm_params(), "n_b": cfg.n_b}, ["BA.txt", "X_BA.smat"],
            lambda: self._build_swarm_stage("X_BA", "X_A.smat", "counts_decay_a.smat",
                                            "BA.txt", "X_BA.smat"),
            matrix="X_BA.smat",
            recipe=f"swarm-weighted {cfg.n_b} of set A + PPMI")
        add("X_BFR", ["X_FR", "train_bpso_a", "counts_a"],
            [], {**self._swarm_params(), "n_b": cfg.n_b}, ["BFR.txt", "X_BFR.smat"],
            lambda: self._build_swarm_stage("X_BFR", "X_FR.smat", "counts_decay_a.smat",
                                            "BFR.txt", "X_BFR.smat"),
            matrix="X_BFR.smat",
            recipe=f"swarm-weighted {cfg.n_b} of final-rule words + PPMI")
        add("X_SA", ["X_A", "train_wordsel_a", "counts_a"],
            [], {"n_s": cfg.n_s, "method": cfg.wordsel_method},
            ["SA.txt", "scores_SA.csv", "X_SA.smat"],
            lambda: self._build_wordsel_stage("X_A.smat", "counts_decay_a.smat",
                                              "SA.txt", "scores_SA.csv", "X_SA.smat"),
            matrix="X_SA.smat",
            recipe=f"influence-selected {cfg.n_s} of set A + PPMI")
        add("X_SFR", ["X_FR", "train_wordsel_a", "counts_a"],
            [], {"n_s": cfg.n_s, "method": cfg.wordsel_method},
            ["SFR.txt", "scores_SFR.csv", "X_SFR.smat"],
            lambda: self._build_wordsel_stage("X_FR.smat", "counts_decay_a.smat",
                                              "SFR.txt", "scores_SFR.csv", "X_SFR.smat"),
            matrix="X_SFR.smat",
            recipe=f"influence-selected {cfg.n_s} of final-rule words + PPMI")
        add("golden_a", ["X_FR", "train_bpso_a"],
            [], {**self._swarm_params(), "n_b": cfg.n_b,
                 "runs": cfg.golden_runs, "keep": cfg.golden_keep},
            ["golden.txt"],
            lambda: self._build_golden("golden_a", "X_FR.smat", "train_bpso.txt",
                                       "golden.txt"))
        add("X_SA_G", ["X_SA", "golden_a", "counts_a"], [], {}, ["X_SA_G.smat"],
            lambda: self._build_union_matrix("SA.txt", "golden.txt", "X_SA_G.smat"),
            matrix="X_SA_G.smat",
            recipe="SA plus this corpus's golden words + PPMI")

        if cfg.corpus_b is not None:
            add("vocab_b", [], [cfg.corpus_b], {"caps": caps_params}, ["vocab_b.tsv"],
                lambda: self._build_vocab(cfg.corpus_b, "vocab_b.tsv"))
            add("counts_b", ["vocab_b"], [cfg.corpus_b],
                {"decay": cfg.decay, "max_alpha": cfg.max_alpha,
                 "candidate_size": cfg.candidate_size},
                ["counts_decay_b.smat"],
                lambda: self._build_counts(cfg.corpus_b, "vocab_b.tsv",
                                           "counts_decay_b.smat"))
            add("criteria_b", ["vocab_b"], [cfg.embeddings],
                {"candidate_size": cfg.candidate_size, "zero_eps": cfg.zero_eps,
                 "ws_mode": "sum"},
                ["criteria_b.tsv"],
                lambda: self._build_criteria("vocab_b.tsv", "criteria_b.tsv",
                                             labels=False))
            add("rules_b", ["criteria_b"], [],
                {"rule_set": cfg.rule_set, "final": rendered_fr}, ["FR_b.txt"],
                lambda: self._apply_rules("criteria_b.tsv", write_initial=False,
                                          fr_name="FR_b.txt"))
            add("X_FR_b", ["counts_b", "rules_b"], [], {}, ["X_FR_b.smat"],
                lambda: self._restricted_ppmi("counts_decay_b.smat",
                                              _read_words(self.out / "FR_b.txt"),
                                              "X_FR_b.smat"))
            add("train_bpso_b", ["vocab_b"], [], {"size": cfg.bpso_train_size},
                ["train_bpso_b.txt"],
                lambda: _write_words(self.out / "train_bpso_b.txt", proportional_sample(
                    self._load_vocab("vocab_b.tsv"), cfg.bpso_train_size)))
            add("golden_b", ["X_FR_b", "train_bpso_b"],
                [], {**self._swarm_params(), "n_b": cfg.n_b,
                     "runs": cfg.golden_runs, "keep": cfg.golden_keep},
                ["golden_b.txt"],
                lambda: self._build_golden("golden_b", "X_FR_b.smat",
                                           "train_bpso_b.txt", "golden_b.txt"))
            add("Gc", ["golden_a", "golden_b"], [], {}, ["Gc.txt"],
                lambda: _write_words(self.out / "Gc.txt",
                                     set(_read_words(self.out / "golden.txt"))
                                     & set(_read_words(self.out / "golden_b.txt"))))
            add("X_SA_Gc", ["X_SA", "Gc", "counts_a"], [], {}, ["X_SA_Gc.smat"],
                lambda: self._build_union_matrix("SA.txt", "Gc.txt", "X_SA_Gc.smat"),
                matrix="X_SA_Gc.smat",
                recipe="SA plus golden words common to both corpora + PPMI")
            add("X_BA_Gc", ["X_BA", "Gc", "counts_a"], [], {}, ["X_BA_Gc.smat"],
                lambda: self._build_union_matrix("BA.txt", "Gc.txt", "X_BA_Gc.smat"),
                matrix="X_BA_Gc.smat",
                recipe="BA plus golden words common to both corpora + PPMI")
        return defs

    # -- execution ---------------------------------------------------------

    def _closure(self, requested: Iterable[str]) -> set[str]:
        closed: set[str] = set()
        work = list(requested)
        while work:
            name = work.pop()
            if name in closed:
                continue
            if name not in self._defs:
                if name in TWO_CORPUS_STAGES:
                    raise PipelineError(f"stage {name}: corpus_b is not configured")
                raise PipelineError(f"unknown stage {name!r}; valid stages: "
                                    f"{', '.join(STAGE_ORDER)}, eval")
            closed.add(name)
            work.extend(self._defs[name].deps)
        return closed

    def _execute(self, sd: _StageDef) -> bool:
        """Returns True when the stage was a cache hit."""
        for ext in sd.external:
            if not Path(ext).exists():
                raise PipelineError(f"stage {sd.name}: required input {ext} does not exist")
        key = self._provenance_key(sd)
        if self._cache_hit(sd, key):
            logger.info("stage %s: cache hit", sd.name)
            for out_name in sd.outputs:
                self._hashes.pop(self.out / out_name, None)
            return True
        logger.info("stage %s: building", sd.name)
        try:
            sd.build()
        except PipelineError as exc:
            if str(exc).startswith("stage "):
                raise
            raise PipelineError(f"stage {sd.name}: {exc}") from exc
        except Exception as exc:
            raise PipelineError(f"stage {sd.name}: {exc}") from exc
        for out_name in sd.outputs:
            if not (self.out / out_name).exists():
                raise PipelineError(f"stage {sd.name}: expected output {out_name} missing")
            self._hashes.pop(self.out / out_name, None)
        self._write_prov(sd, key)
        return False

    def run(self, stages: Iterable[str] | None = None) -> RunResult:
        cfg = self.cfg
        if stages is None:
            requested = set(MATRIX_ARTIFACTS if cfg.corpus_b is not None
                            else [m for m in MATRIX_ARTIFACTS
                                  if m not in TWO_CORPUS_STAGES])
            want_eval = bool(cfg.testsets)
        else:
            requested = {s.strip() for s in stages if s.strip()}
            want_eval = "eval" in requested
            requested.discard("eval")
            if not requested and not want_eval:
                raise PipelineError("no stages requested")

        closed = self._closure(requested)
        matrix_stages = [m for m in MATRIX_ARTIFACTS if m in closed]
        if want_eval:
            if not matrix_stages:
                raise PipelineError("stage eval: no matrices requested")
            if not cfg.testsets:
                raise PipelineError("stage eval: no test sets configured")

        self.out.mkdir(parents=True, exist_ok=True)
        cache_hits: dict[str, bool] = {}
        for name in STAGE_ORDER:
            if name in closed:
                cache_hits[name] = self._execute(self._defs[name])

        artifacts: list[StageArtifact] = []
        for name in STAGE_ORDER:
            sd = self._defs.get(name)
            if sd is None or name not in closed or sd.matrix is None:
                continue
            path = self.out / sd.matrix
            prov = json.loads((self.out / f"{name}.prov").read_text(encoding="utf-8"))
            artifacts.append(StageArtifact(
                name=name, path=path, provenance=prov["key"], recipe=sd.recipe,
                n_context_words=_smat_n_cols(path), cache_hit=cache_hits[name]))

        if want_eval:
            eval_def = _StageDef(
                name="eval", deps=tuple(matrix_stages), external=cfg.testsets,
                params={"baseline": cfg.baseline, "matrices": matrix_stages,
                        "testsets": [p.name for p in cfg.testsets]},
                outputs=("report.csv",),
                build=lambda: self._build_eval(matrix_stages))
            self._defs["eval"] = eval_def
            cache_hits["eval"] = self._execute(eval_def)
            prov = json.loads((self.out / "eval.prov").read_text(encoding="utf-8"))
            artifacts.append(StageArtifact(
                name="report", path=self.out / "report.csv", provenance=prov["key"],
                recipe="spearman evaluation of all built matrices",
                n_context_words=None, cache_hit=cache_hits["eval"]))

        manifest_path = self.out / "manifest.txt"
        emit_manifest(artifacts, manifest_path)
        return RunResult(artifacts=artifacts, cache_hits=cache_hits,
                         manifest_path=manifest_path)


def emit_manifest(artifacts: Sequence[StageArtifact], path: str | Path) -> None:
    """One tab-separated line per artifact: name, file, context-word count,
    provenance key, recipe. Carries no timestamps so reruns are stable."""
    if not artifacts:
        raise ValueError("no artifacts to list")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("artifact\tfile\tcontext_words\tprovenance\trecipe\n")
        for a in artifacts:
            contexts = "-" if a.n_context_words is None else str(a.n_context_words)
            fh.write(f"{a.name}\t{a.path.name}\t{contexts}\t{a.provenance}\t{a.recipe}\n")


def run_pipeline(cfg: PipelineConfig, stages: Iterable[str] | None = None) -> RunResult:
    return PipelineRunner(cfg).run(stages)
