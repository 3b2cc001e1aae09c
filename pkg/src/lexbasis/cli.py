"""Command-line entry points for every step of the workflow.

Each subcommand wraps one library operation and moves data through files,
so any pipeline stage can be reproduced or inspected by hand. `pipeline
run` drives the whole graph from one config file.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys
from pathlib import Path
from typing import Sequence

from .bpso import SwarmConfig, extract_golden, run_bpso
from .corpus import ParseError, POSClass, Vocabulary, build_vocabulary, load_corpus
from .criteria import (CoverageError, CriteriaTable, build_labeled_sets, compute_criteria,
                       emit_scatter, normalize_criteria, LabeledSets, SCATTER_PAIRS)
from .evaluate import evaluate, load_testset, report
from .matrix import (SparseMatrix, build_cooc_decay, build_cooc_window, load_embeddings,
                     ppmi_transform, restrict_rows)
from .pipeline import PipelineConfig, PipelineError, run_pipeline
from .rules import (builtin_rule_sets, evaluate_rule_set, parse_rule_file, save_tree,
                    train_tree, tree_to_rules, write_rule_file)
from .wordsel import column_influence, select_top

logger = logging.getLogger(__name__)


def _read_words(path: str | Path) -> list[str]:
    with open(path, encoding="utf-8") as fh:
        return [line.strip() for line in fh if line.strip()]


def _write_words(path: str | Path, words) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for w in sorted(set(words)):
            fh.write(w + "\n")


def _parse_caps(text: str) -> dict[POSClass, int]:
    """`N=20000,V=10000,J=10000,R=5000`; classes left out are excluded."""
    caps: dict[POSClass, int] = {}
    for chunk in text.split(","):
        chunk = chunk.strip()
        if not chunk:
            continue
        name, _, value = chunk.partition("=")
        try:
            pos = POSClass(name.strip().upper())
        except ValueError:
            raise ValueError(f"unknown POS class {name.strip()!r} in --caps") from None
        caps[pos] = int(value)
    if not caps:
        raise ValueError("--caps parsed to an empty mapping")
    return caps


def cmd_build_vocab(args) -> int:
    caps = _parse_caps(args.caps) if args.caps else None
    vocab = build_vocabulary(load_corpus(args.corpus), caps)
    vocab.save(args.out)
    logger.info("wrote %d vocabulary entries to %s", len(vocab), args.out)
    return 0


def cmd_build_cooc(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    contexts = _read_words(args.contexts)
    corpus = load_corpus(args.corpus)
    if args.mode == "decay":
        m = build_cooc_decay(corpus, vocab, contexts, decay=args.decay,
                             max_alpha=args.max_alpha)
    else:
        m = build_cooc_window(corpus, vocab, contexts, window=args.window)
    m.save(args.out)
    logger.info("wrote %dx%d count matrix to %s", m.n_rows, m.n_cols, args.out)
    return 0


def cmd_ppmi(args) -> int:
    ppmi_transform(SparseMatrix.load(args.infile)).save(args.out)
    return 0


def cmd_criteria(args) -> int:
    vocab = Vocabulary.load(args.vocab)
    emb = load_embeddings(args.emb)
    candidates = vocab.top_keys(args.candidates)
    table = compute_criteria(candidates, emb, vocab, zero_eps=args.eps)
    a_words = [k for k in vocab.top_keys(args.a_size) if k in table]
    build_labeled_sets(table, a_words, args.m)
    normalize_criteria(table)
    table.save(args.out)
    logger.info("wrote criteria for %d words to %s", len(table), args.out)
    return 0


def _sets_from_labels(table: CriteriaTable, m: int | None) -> LabeledSets:
    """Rebuild the labeled sets recorded in a saved criteria table; S/F/Z
    need the top-m cutoff, so they are recomputed when m is given."""
    labeled = {w: r.label for w, r in table.rows.items() if r.label is not None}
    if not labeled:
        raise ValueError("criteria table carries no labels; rerun the criteria step")
    a = sorted(w for w, lab in labeled.items() if lab in (1, 3))
    if m is not None:
        return build_labeled_sets(table, a, m)
    common = frozenset(w for w, lab in labeled.items() if lab == 1)
    set_in = frozenset(w for w, lab in labeled.items() if lab == 2)
    set_out = frozenset(w for w, lab in labeled.items() if lab == 3)
    empty = frozenset()
    return LabeledSets(candidate_c=frozenset(table.rows), set_a=frozenset(a),
                       set_s=empty, set_f=empty, set_z=empty,
                       triple=common | set_in, common=common, set_in=set_in,
                       set_out=set_out, u_at=frozenset(labeled))


def cmd_scatter(args) -> int:
    table = CriteriaTable.load(args.criteria)
    name = args.set.lower()
    needs_m = name in ("s", "f", "z", "set_s", "set_f", "set_z")
    if needs_m and args.m is None:
        raise ValueError(f"set {args.set!r} needs --M to recompute the top-m cutoff")
    sets = _sets_from_labels(table, args.m if needs_m else None)
    lines = emit_scatter(table, sets, pair=args.pair, subset=args.set)
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote %d scatter rows to %s", len(lines) - 1, args.out)
    return 0


def cmd_rules_apply(args) -> int:
    table = CriteriaTable.load(args.criteria)
    builtin = builtin_rule_sets()
    if args.ruleset in builtin:
        rs = builtin[args.ruleset]
    elif Path(args.ruleset).exists():
        rs = parse_rule_file(args.ruleset)
    else:
        raise ValueError(f"{args.ruleset!r} is neither a built-in rule set "
                         f"({', '.join(sorted(builtin))}) nor a rule file")
    selected = evaluate_rule_set(rs, table)
    _write_words(args.out, selected)
    logger.info("%d of %d words selected", len(selected), len(table))
    return 0


def cmd_rules_train(args) -> int:
    table = CriteriaTable.load(args.criteria)
    pos = None if args.pos == "any" else args.pos
    tree = train_tree(table, pos_filter=pos, max_depth=args.max_depth,
                      min_leaf=args.min_leaf, normalized=args.normalized)
    save_tree(tree, args.out)
    rs = tree_to_rules(tree)
    if args.rules_out:
        write_rule_file(rs, args.rules_out)
    logger.info("trained tree with %d rules", len(rs.rules))
    return 0


def _swarm_config(args, n_select: int) -> SwarmConfig:
    return SwarmConfig(n_select=n_select, population=args.pop, iterations=args.iters,
                       inertia=args.w, cognitive=args.c1, social=args.c2,
                       v_max=args.v_max, seed=args.seed)


def cmd_bpso(args) -> int:
    train = SparseMatrix.load(args.train_matrix)
    result = run_bpso(train, _swarm_config(args, args.nb))
    _write_words(args.out, result.selected)
    if args.trace:
        with open(args.trace, "w", encoding="utf-8") as fh:
            fh.write("iteration,gbest_value\n")
            for i, v in enumerate(result.trace):
                fh.write(f"{i},{v:.9g}\n")
    logger.info("selected %d context words, objective %.9g", len(result.selected),
                result.value)
    return 0


def cmd_golden(args) -> int:
    train = SparseMatrix.load(args.train_matrix)
    result = extract_golden(train, _swarm_config(args, args.nb),
                            n_runs=args.runs, n_keep=args.keep)
    _write_words(args.out, result.golden)
    logger.info("%d golden words (kept runs %s)", len(result.golden), result.kept_runs)
    return 0


def cmd_wordsel(args) -> int:
    m = SparseMatrix.load(args.matrix)
    words = _read_words(args.train_words)
    rows = [w for w in words if w in m.row_index]
    if len(rows) < len(words):
        logger.warning("%d training words missing from the matrix",
                       len(words) - len(rows))
    if len(rows) < 2:
        raise ValueError("fewer than 2 training rows available")
    train = restrict_rows(m, rows)
    scores = column_influence(train, method=args.method)
    chosen = select_top(scores, args.ns)
    _write_words(args.out, chosen)
    if args.scores:
        with open(args.scores, "w", encoding="utf-8") as fh:
            fh.write("word,frobenius_score\n")
            for word, value in sorted(scores.items(), key=lambda kv: (-kv[1], kv[0])):
                fh.write(f"{word},{value:.9g}\n")
    logger.info("selected %d of %d context words", len(chosen), len(scores))
    return 0


def cmd_eval(args) -> int:
    testsets = [load_testset(p) for p in args.testset]
    entries = []
    for mpath in args.matrix:
        m = SparseMatrix.load(mpath)
        name = Path(mpath).stem
        for ts in testsets:
            entries.append(evaluate(m, ts, matrix_name=name))
    lines = report(entries, [args.baseline] if args.baseline else [])
    Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
    logger.info("wrote report for %d matrices to %s", len(args.matrix), args.out)
    return 0


def cmd_pipeline_run(args) -> int:
    cfg = PipelineConfig.from_ini(args.config)
    if args.out_dir:
        cfg = dataclasses.replace(cfg, out_dir=Path(args.out_dir).resolve())
    stages = args.stages.split(",") if args.stages else None
    result = run_pipeline(cfg, stages)
    for a in result.artifacts:
        contexts = "-" if a.n_context_words is None else str(a.n_context_words)
        state = "cached" if a.cache_hit else "built"
        print(f"{a.name}\t{contexts}\t{state}\t{a.path}")
    print(f"manifest: {result.manifest_path}")
    return 0


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="lexbasis",
                                description="low-dimensional interpretable "
                                            "distributional word vectors")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("build-vocab", help="count lemma/POS frequencies")
    v.add_argument("--corpus", required=True)
    v.add_argument("--caps", default=None,
                   help="per-class caps, e.g. N=20000,V=10000,J=10000,R=5000")
    v.add_argument("--out", required=True)
    v.set_defaults(func=cmd_build_vocab)

    c = sub.add_parser("build-cooc", help="build a co-occurrence count matrix")
    c.add_argument("--corpus", required=True)
    c.add_argument("--vocab", required=True, help="vocabulary TSV (matrix rows)")
    c.add_argument("--mode", choices=("decay", "window"), required=True)
    c.add_argument("--decay", type=float, default=0.1)
    c.add_argument("--window", type=int, default=10)
    c.add_argument("--max-alpha", type=int, default=None,
                   help="ignore decay pairs farther apart than this")
    c.add_argument("--contexts", required=True, help="context word list (matrix columns)")
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_build_cooc)

    pp = sub.add_parser("ppmi", help="positive PMI transform of a count matrix")
    pp.add_argument("--in", dest="infile", required=True)
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=cmd_ppmi)

    cr = sub.add_parser("criteria", help="compute WS/NZ/WF criteria with labels")
    cr.add_argument("--emb", required=True)
    cr.add_argument("--vocab", required=True)
    cr.add_argument("--candidates", type=int, default=10000)
    cr.add_argument("--a-size", type=int, default=5000,
                    help="size of the top-frequency reference set A")
    cr.add_argument("--eps", type=float, default=0.01)
    cr.add_argument("--M", dest="m", type=int, default=3000)
    cr.add_argument("--out", required=True)
    cr.set_defaults(func=cmd_criteria)

    sc = sub.add_parser("scatter", help="criteria scatter data for one labeled set")
    sc.add_argument("--criteria", required=True)
    sc.add_argument("--pair", choices=sorted(SCATTER_PAIRS), required=True)
    sc.add_argument("--set", default="u_at")
    sc.add_argument("--M", dest="m", type=int, default=None,
                    help="top-m cutoff, needed to rebuild the S/F/Z sets")
    sc.add_argument("--out", required=True)
    sc.set_defaults(func=cmd_scatter)

    r = sub.add_parser("rules", help="apply or train selection rules")
    rsub = r.add_subparsers(dest="rules_command", required=True)
    ra = rsub.add_parser("apply", help="apply a rule set to a criteria table")
    ra.add_argument("--ruleset", required=True,
                    help="built-in rule set name or rule file path")
    ra.add_argument("--criteria", required=True)
    ra.add_argument("--out", required=True)
    ra.set_defaults(func=cmd_rules_apply)
    rt = rsub.add_parser("train", help="train a decision tree on labeled criteria")
    rt.add_argument("--criteria", required=True)
    rt.add_argument("--pos", choices=("noun", "verb", "adjective", "adverb", "any"),
                    default="any")
    rt.add_argument("--max-depth", type=int, default=6)
    rt.add_argument("--min-leaf", type=int, default=1)
    rt.add_argument("--normalized", action="store_true",
                    help="train on normalized criteria values")
    rt.add_argument("--out", required=True, help="tree JSON output")
    rt.add_argument("--rules-out", default=None, help="flattened rule file output")
    rt.set_defaults(func=cmd_rules_train)

    b = sub.add_parser("bpso", help="binary swarm context-word weighting")
    b.add_argument("--train-matrix", required=True)
    b.add_argument("--nb", type=int, required=True, help="number of context words to keep")
    b.add_argument("--pop", type=int, default=30)
    b.add_argument("--iters", type=int, default=20)
    b.add_argument("--w", type=float, default=0.7)
    b.add_argument("--c1", type=float, default=0.15)
    b.add_argument("--c2", type=float, default=0.15)
    b.add_argument("--v-max", type=float, default=4.0)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", required=True, help="selected words, one per line")
    b.add_argument("--trace", default=None, help="gbest-per-iteration CSV")
    b.set_defaults(func=cmd_bpso)

    g = sub.add_parser("golden", help="multi-run swarm intersection")
    g.add_argument("--train-matrix", required=True)
    g.add_argument("--nb", type=int, required=True)
    g.add_argument("--runs", type=int, default=20)
    g.add_argument("--keep", type=int, default=3)
    g.add_argument("--pop", type=int, default=30)
    g.add_argument("--iters", type=int, default=20)
    g.add_argument("--w", type=float, default=0.7)
    g.add_argument("--c1", type=float, default=0.15)
    g.add_argument("--c2", type=float, default=0.15)
    g.add_argument("--v-max", type=float, default=4.0)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_golden)

    ws = sub.add_parser("wordsel", help="distance-matrix influence selection")
    ws.add_argument("--matrix", required=True)
    ws.add_argument("--train-words", required=True)
    ws.add_argument("--ns", type=int, required=True)
    ws.add_argument("--method", choices=("incremental", "naive"), default="incremental")
    ws.add_argument("--out", required=True)
    ws.add_argument("--scores", default=None, help="word,frobenius_score CSV")
    ws.set_defaults(func=cmd_wordsel)

    ev = sub.add_parser("eval", help="Spearman evaluation against test sets")
    ev.add_argument("--matrix", nargs="+", required=True)
    ev.add_argument("--testset", nargs="+", required=True)
    ev.add_argument("--baseline", default=None,
                    help="matrix name (file stem) the delta block compares against")
    ev.add_argument("--out", required=True)
    ev.set_defaults(func=cmd_eval)

    pl = sub.add_parser("pipeline", help="run the full workflow from a config")
    psub = pl.add_subparsers(dest="pipeline_command", required=True)
    pr = psub.add_parser("run")
    pr.add_argument("--config", required=True)
    pr.add_argument("--stages", default=None,
                    help="comma-separated stage names, e.g. X_SA_Gc,eval")
    pr.add_argument("--out-dir", default=None, help="override the configured output dir")
    pr.set_defaults(func=cmd_pipeline_run)
    return p


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO, stream=sys.stderr,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except (OSError, ValueError, KeyError, ParseError, CoverageError,
            PipelineError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
