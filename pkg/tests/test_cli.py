"""Command-line interface: each subcommand's happy path and error reporting,
exercised in process via main(argv) on the shared micro corpus."""

import json
from pathlib import Path

import pytest

from conftest import MICRO_CLUSTER
from lexbasis.cli import main
from lexbasis.corpus import Vocabulary
from lexbasis.criteria import CriteriaTable
from lexbasis.matrix import SparseMatrix
from lexbasis.rules import load_tree

CLUSTER_KEYS = {f"w{i:02d}/N" for i in range(MICRO_CLUSTER)}


@pytest.fixture(scope="session")
def chain(micro, tmp_path_factory):
    """Artifacts from one pass over the file-based workflow: vocabulary,
    decay counts, the PPMI matrix, and a labeled criteria table."""
    out = tmp_path_factory.mktemp("cli_chain")
    assert main(["build-vocab", "--corpus", str(micro / "a.vert"),
                 "--caps", "N=30,V=10,J=10,R=10",
                 "--out", str(out / "vocab.tsv")]) == 0
    vocab = Vocabulary.load(out / "vocab.tsv")
    (out / "ctx.txt").write_text("\n".join(vocab.top_keys(40)) + "\n",
                                 encoding="utf-8")
    assert main(["build-cooc", "--corpus", str(micro / "a.vert"),
                 "--vocab", str(out / "vocab.tsv"), "--mode", "decay",
                 "--contexts", str(out / "ctx.txt"),
                 "--out", str(out / "counts.smat")]) == 0
    assert main(["ppmi", "--in", str(out / "counts.smat"),
                 "--out", str(out / "X.smat")]) == 0
    assert main(["criteria", "--emb", str(micro / "emb.txt"),
                 "--vocab", str(out / "vocab.tsv"), "--candidates", "40",
                 "--a-size", "30", "--M", "15",
                 "--out", str(out / "crit.tsv")]) == 0
    return out


class TestVocabAndCounts:
    def test_vocabulary_respects_caps(self, chain):
        vocab = Vocabulary.load(chain / "vocab.tsv")
        assert len(vocab) == 40

    def test_unknown_pos_class_in_caps(self, micro, tmp_path, capsys):
        rc = main(["build-vocab", "--corpus", str(micro / "a.vert"),
                   "--caps", "Q=5", "--out", str(tmp_path / "v.tsv")])
        assert rc == 1
        assert "unknown POS class" in capsys.readouterr().err

    def test_missing_corpus_reports_error(self, tmp_path, capsys):
        rc = main(["build-vocab", "--corpus", str(tmp_path / "absent.vert"),
                   "--out", str(tmp_path / "v.tsv")])
        assert rc == 1
        assert capsys.readouterr().err.startswith("error:")

    def test_window_mode(self, micro, chain, tmp_path):
        out = tmp_path / "win.smat"
        rc = main(["build-cooc", "--corpus", str(micro / "a.vert"),
                   "--vocab", str(chain / "vocab.tsv"), "--mode", "window",
                   "--window", "5", "--contexts", str(chain / "ctx.txt"),
                   "--out", str(out)])
        assert rc == 0
        m = SparseMatrix.load(out)
        assert m.n_rows == 40 and 0 < m.n_cols <= 40

    def test_ppmi_output_is_nonnegative(self, chain):
        dense = SparseMatrix.load(chain / "X.smat").to_dense()
        assert dense.min() >= 0.0
        assert dense.max() > 0.0


class TestCriteriaAndScatter:
    def test_table_has_labels_and_normalized_columns(self, chain):
        table = CriteriaTable.load(chain / "crit.tsv")
        assert len(table) == 40
        labels = [r.label for r in table.rows.values() if r.label is not None]
        assert set(labels) <= {1, 2, 3} and labels
        assert all(r.ws_norm is not None and r.nz_norm is not None
                   and r.wf_norm is not None for r in table.rows.values())

    def test_scatter_default_set(self, chain, tmp_path):
        out = tmp_path / "sc.csv"
        rc = main(["scatter", "--criteria", str(chain / "crit.tsv"),
                   "--pair", "nz-ws", "--out", str(out)])
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "word,label,nz,ws"
        assert len(lines) > 1
        assert all(line.count(",") == 3 for line in lines[1:])

    def test_scatter_top_m_set_needs_m(self, chain, tmp_path, capsys):
        rc = main(["scatter", "--criteria", str(chain / "crit.tsv"),
                   "--pair", "wf-ws", "--set", "s",
                   "--out", str(tmp_path / "sc.csv")])
        assert rc == 1
        assert "needs --M" in capsys.readouterr().err

    def test_scatter_top_m_set_with_m(self, chain, tmp_path):
        rc = main(["scatter", "--criteria", str(chain / "crit.tsv"),
                   "--pair", "wf-ws", "--set", "s", "--M", "15",
                   "--out", str(tmp_path / "sc.csv")])
        assert rc == 0


class TestRules:
    def test_apply_builtin_selects_the_cluster(self, chain, tmp_path):
        out = tmp_path / "fr.txt"
        rc = main(["rules", "apply", "--ruleset", "final_normalized",
                   "--criteria", str(chain / "crit.tsv"), "--out", str(out)])
        assert rc == 0
        assert set(out.read_text(encoding="utf-8").split()) == CLUSTER_KEYS

    def test_apply_unknown_ruleset_lists_builtins(self, chain, tmp_path, capsys):
        rc = main(["rules", "apply", "--ruleset", "nope",
                   "--criteria", str(chain / "crit.tsv"),
                   "--out", str(tmp_path / "x.txt")])
        assert rc == 1
        err = capsys.readouterr().err
        assert "final_normalized" in err and "initial_raw" in err

    def test_train_then_reapply_rule_file(self, chain, tmp_path):
        tree_path = tmp_path / "tree.json"
        rules_path = tmp_path / "rules.txt"
        rc = main(["rules", "train", "--criteria", str(chain / "crit.tsv"),
                   "--max-depth", "3", "--out", str(tree_path),
                   "--rules-out", str(rules_path)])
        assert rc == 0
        assert load_tree(tree_path) is not None
        json.loads(tree_path.read_text(encoding="utf-8"))
        sel_path = tmp_path / "sel.txt"
        rc = main(["rules", "apply", "--ruleset", str(rules_path),
                   "--criteria", str(chain / "crit.tsv"), "--out", str(sel_path)])
        assert rc == 0
        table = CriteriaTable.load(chain / "crit.tsv")
        selected = set(sel_path.read_text(encoding="utf-8").split())
        assert selected <= set(table.rows)


class TestSwarmAndSelection:
    def test_bpso_selection_and_trace(self, chain, tmp_path):
        out, trace = tmp_path / "sel.txt", tmp_path / "trace.csv"
        rc = main(["bpso", "--train-matrix", str(chain / "X.smat"), "--nb", "5",
                   "--pop", "6", "--iters", "3", "--seed", "3",
                   "--out", str(out), "--trace", str(trace)])
        assert rc == 0
        cols = set(SparseMatrix.load(chain / "X.smat").col_keys)
        selected = out.read_text(encoding="utf-8").split()
        assert len(selected) == 5 and set(selected) <= cols
        lines = trace.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "iteration,gbest_value"
        assert len(lines) == 1 + 3 + 1  # header, initial gbest, one per iteration
        values = [float(line.split(",")[1]) for line in lines[1:]]
        assert values == sorted(values, reverse=True)  # objective only improves

    def test_golden_words_come_from_matrix_columns(self, chain, tmp_path):
        out = tmp_path / "g.txt"
        rc = main(["golden", "--train-matrix", str(chain / "X.smat"), "--nb", "5",
                   "--runs", "3", "--keep", "2", "--pop", "6", "--iters", "3",
                   "--seed", "3", "--out", str(out)])
        assert rc == 0
        cols = set(SparseMatrix.load(chain / "X.smat").col_keys)
        assert set(out.read_text(encoding="utf-8").split()) <= cols

    def test_wordsel_with_scores(self, chain, tmp_path):
        m = SparseMatrix.load(chain / "X.smat")
        train = tmp_path / "train.txt"
        train.write_text("\n".join(list(m.row_keys[:10]) + ["missing/N"]) + "\n",
                         encoding="utf-8")
        out, scores = tmp_path / "ns.txt", tmp_path / "scores.csv"
        rc = main(["wordsel", "--matrix", str(chain / "X.smat"),
                   "--train-words", str(train), "--ns", "4",
                   "--out", str(out), "--scores", str(scores)])
        assert rc == 0
        assert len(out.read_text(encoding="utf-8").split()) == 4
        lines = scores.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "word,frobenius_score"
        assert len(lines) == 1 + m.n_cols

    def test_wordsel_needs_two_training_rows(self, chain, tmp_path, capsys):
        train = tmp_path / "train.txt"
        train.write_text("w00/N\nmissing/N\n", encoding="utf-8")
        rc = main(["wordsel", "--matrix", str(chain / "X.smat"),
                   "--train-words", str(train), "--ns", "4",
                   "--out", str(tmp_path / "ns.txt")])
        assert rc == 1
        assert "fewer than 2 training rows" in capsys.readouterr().err


class TestEval:
    def test_report_with_baseline_delta_block(self, chain, micro, tmp_path):
        out = tmp_path / "rep.csv"
        rc = main(["eval", "--matrix", str(chain / "X.smat"),
                   "--testset", str(micro / "sim.tsv"),
                   "--baseline", "X", "--out", str(out)])
        assert rc == 0
        lines = out.read_text(encoding="utf-8").splitlines()
        assert lines[0] == "matrix,testset,spearman,pairs_used,oov"
        assert lines[1].startswith("X,sim,")
        assert "baseline,matrix,testset,delta_points,delta_relative_pct" in lines
        assert any(line.startswith("X,X,sim,0,") for line in lines)

    def test_unknown_baseline_name(self, chain, micro, tmp_path, capsys):
        rc = main(["eval", "--matrix", str(chain / "X.smat"),
                   "--testset", str(micro / "sim.tsv"),
                   "--baseline", "nope", "--out", str(tmp_path / "rep.csv")])
        assert rc == 1
        assert "unknown baseline" in capsys.readouterr().err


def _write_micro_ini(path: Path, micro: Path) -> None:
    path.write_text(f"""\
[pipeline]
out_dir = out
seed = 11

[corpus]
corpus_a = {micro / 'a.vert'}
corpus_b = {micro / 'b.vert'}

[cooc]
window = 5

[criteria]
embeddings = {micro / 'emb.txt'}
candidate_size = 60
a_size = 30
m = 15

[bpso]
n_b = 8
population = 8
iterations = 4
train_size = 25

[golden]
runs = 3
keep = 2

[wordsel]
n_s = 8
train_size = 25

[eval]
testsets = {micro / 'sim.tsv'}
""", encoding="utf-8")


class TestPipelineCommand:
    def test_run_then_cached_rerun(self, micro, tmp_path, capsys):
        cfg = tmp_path / "micro.cfg"
        _write_micro_ini(cfg, micro)
        rc = main(["pipeline", "run", "--config", str(cfg),
                   "--stages", "X_baseline,eval"])
        assert rc == 0
        rows = [line.split("\t") for line in capsys.readouterr().out.splitlines()
                if "\t" in line]
        assert [(r[0], r[1], r[2]) for r in rows] == [
            ("X_baseline", "30", "built"), ("report", "-", "built")]
        assert (tmp_path / "out" / "manifest.txt").exists()

        rc = main(["pipeline", "run", "--config", str(cfg),
                   "--stages", "X_baseline,eval"])
        assert rc == 0
        assert all(r[2] == "cached" for r in
                   (line.split("\t") for line in capsys.readouterr().out.splitlines()
                    if "\t" in line))

    def test_out_dir_override(self, micro, tmp_path, capsys):
        cfg = tmp_path / "micro.cfg"
        _write_micro_ini(cfg, micro)
        rc = main(["pipeline", "run", "--config", str(cfg),
                   "--stages", "X_baseline", "--out-dir", str(tmp_path / "elsewhere")])
        assert rc == 0
        capsys.readouterr()
        assert (tmp_path / "elsewhere" / "X_baseline.smat").exists()
        assert not (tmp_path / "out").exists()

    def test_unknown_stage_is_reported(self, micro, tmp_path, capsys):
        cfg = tmp_path / "micro.cfg"
        _write_micro_ini(cfg, micro)
        rc = main(["pipeline", "run", "--config", str(cfg), "--stages", "bogus"])
        assert rc == 1
        assert "unknown stage" in capsys.readouterr().err

    def test_subcommand_is_required(self):
        with pytest.raises(SystemExit):
            main([])
