import hashlib
import random

import pytest

from girit.cli import main
from girit.corpus import write_corpus
from girit.models import MODEL_IDS
from girit.retrieval import parse_topics, write_topics
from girit.synth import synth_experiment


def run_cli(*args):
    return main([str(a) for a in args])


def dir_hash(path, suffix=None):
    digest = hashlib.blake2b(digest_size=16)
    for f in sorted(path.iterdir()):
        if f.is_file() and (suffix is None or f.name.endswith(suffix)):
            digest.update(f.name.encode())
            digest.update(f.read_bytes())
    return digest.hexdigest()


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    base = tmp_path_factory.mktemp("experiment")
    exp = synth_experiment(random.Random(2024), num_docs=126, num_topics=6)
    write_corpus(exp.docs, base / "corpus.trec")
    with open(base / "topics.txt", "w", encoding="utf-8") as fh:
        write_topics(exp.topics, fh)
    (base / "qrels.txt").write_text(exp.qrels_text, encoding="utf-8")
    (base / "thesaurus.tsv").write_text(exp.thesaurus_text, encoding="utf-8")
    return base


class TestIndexCommand:
    def test_builds_index_and_reports_stats(self, fixture_dir, tmp_path, capsys):
        code = run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", tmp_path / "idx")
        assert code == 0
        out = capsys.readouterr().out
        assert "num_documents: 126" in out
        for name in ("header.json", "lexicon.bin", "postings.bin", "doctable.bin", "stats.txt", "stats.csv"):
            assert (tmp_path / "idx" / name).exists()

    def test_rerun_is_byte_identical(self, fixture_dir, tmp_path):
        run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", tmp_path / "a")
        run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", tmp_path / "b")
        assert dir_hash(tmp_path / "a") == dir_hash(tmp_path / "b")

    def test_missing_corpus_is_validation_error(self, tmp_path):
        assert run_cli("index", "--corpus", tmp_path / "nope.trec", "--index-dir", tmp_path / "idx") == 1

    def test_malformed_corpus_is_data_error(self, tmp_path):
        bad = tmp_path / "bad.trec"
        bad.write_text("<DOC><TEXT>no docno</TEXT></DOC>", encoding="utf-8")
        assert run_cli("index", "--corpus", bad, "--index-dir", tmp_path / "idx") == 2

    def test_directory_corpus_processed_lexicographically(self, fixture_dir, tmp_path, capsys):
        corpus_dir = tmp_path / "corpus"
        corpus_dir.mkdir()
        (corpus_dir / "b.trec").write_text(
            "<DOC><DOCNO>z2</DOCNO><TEXT>beta</TEXT></DOC>", encoding="utf-8"
        )
        (corpus_dir / "a.trec").write_text(
            "<DOC><DOCNO>z1</DOCNO><TEXT>alpha</TEXT></DOC>", encoding="utf-8"
        )
        assert run_cli("index", "--corpus", corpus_dir, "--index-dir", tmp_path / "idx") == 0
        from girit.index import Index

        loaded = Index.load(tmp_path / "idx")
        assert loaded.doc_table.docids == ["z1", "z2"]


@pytest.fixture(scope="module")
def workspace(fixture_dir, tmp_path_factory):
    ws = tmp_path_factory.mktemp("pipeline")
    models = "BM25,PL2,DPH,InL2,Js_KLs"
    assert run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", ws / "idx") == 0
    assert (
        run_cli(
            "run", "--index-dir", ws / "idx", "--topics", fixture_dir / "topics.txt",
            "--models", models, "--cutoff", 50, "--output-dir", ws / "runs_before", "--tag", "exp",
        )
        == 0
    )
    assert (
        run_cli(
            "expand", "--topics", fixture_dir / "topics.txt", "--thesaurus",
            fixture_dir / "thesaurus.tsv", "--index-dir", ws / "idx",
            "--output", ws / "topics.expanded.txt",
        )
        == 0
    )
    assert (
        run_cli(
            "run", "--index-dir", ws / "idx", "--topics", ws / "topics.expanded.txt",
            "--models", models, "--cutoff", 50, "--output-dir", ws / "runs_after", "--tag", "exp",
        )
        == 0
    )
    for phase in ("before", "after"):
        assert (
            run_cli(
                "eval", "--runs", ws / f"runs_{phase}", "--qrels", fixture_dir / "qrels.txt",
                "--cutoff", 50, "--output-dir", ws / f"eval_{phase}",
            )
            == 0
        )
    assert (
        run_cli("compare", "--before", ws / "eval_before", "--after", ws / "eval_after",
                "--output-dir", ws / "cmp")
        == 0
    )
    return ws


class TestPipeline:
    def test_run_files_written_per_model(self, workspace):
        names = {f.name for f in (workspace / "runs_before").iterdir()}
        assert names == {f"exp.{m}.run" for m in ("BM25", "PL2", "DPH", "InL2", "Js_KLs")}

    def test_expanded_topics_carry_added_terms(self, workspace, fixture_dir):
        before = parse_topics(fixture_dir / "topics.txt")
        after = parse_topics(workspace / "topics.expanded.txt")
        assert [t.qid for t in after] == [t.qid for t in before]
        assert any(len(a.title) > len(b.title) for a, b in zip(after, before))
        assert (workspace / "topics.expanded.txt.stats.txt").exists()

    def test_comparison_report_shape(self, workspace):
        text = (workspace / "cmp" / "comparison.txt").read_text(encoding="utf-8")
        lines = text.strip().splitlines()
        assert lines[0].split() == ["MODEL", "RELEVANT", "BEFORE", "BEFORE%", "AFTER", "AFTER%", "RESULT"]
        assert len(lines) == 1 + 5
        csv = (workspace / "cmp" / "comparison.csv").read_text(encoding="utf-8")
        assert csv.splitlines()[0].startswith("model,relevant,")

    def test_expansion_improves_recall_on_fixture(self, workspace):
        csv_lines = (workspace / "cmp" / "comparison.csv").read_text(encoding="utf-8").splitlines()[1:]
        improvements = [line for line in csv_lines if line.endswith("Improvement")]
        assert improvements, "constructed fixture must show expansion gains"

    def test_rerun_runs_byte_identical(self, workspace, fixture_dir):
        first = dir_hash(workspace / "runs_before", suffix=".run")
        assert (
            run_cli(
                "run", "--index-dir", workspace / "idx", "--topics", fixture_dir / "topics.txt",
                "--models", "BM25,PL2,DPH,InL2,Js_KLs", "--cutoff", 50,
                "--output-dir", workspace / "runs_before", "--tag", "exp",
            )
            == 0
        )
        assert dir_hash(workspace / "runs_before", suffix=".run") == first


class TestRunCommand:
    def test_all_models_by_default(self, fixture_dir, tmp_path):
        assert run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", tmp_path / "idx") == 0
        assert (
            run_cli(
                "run", "--index-dir", tmp_path / "idx", "--topics", fixture_dir / "topics.txt",
                "--cutoff", 20, "--output-dir", tmp_path / "runs", "--tag", "all",
            )
            == 0
        )
        assert len(list((tmp_path / "runs").glob("*.run"))) == 21
        assert {f.name for f in (tmp_path / "runs").glob("*.run")} == {
            f"all.{m}.run" for m in MODEL_IDS
        }

    def test_unknown_model_is_validation_error(self, fixture_dir, tmp_path):
        run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", tmp_path / "idx")
        code = run_cli(
            "run", "--index-dir", tmp_path / "idx", "--topics", fixture_dir / "topics.txt",
            "--models", "BM26", "--output-dir", tmp_path / "runs",
        )
        assert code == 1

    def test_scoring_domain_abort_spares_other_models(self, tmp_path, capsys):
        # a short document owning a term's whole collection mass breaks BB2
        corpus = tmp_path / "c.trec"
        corpus.write_text(
            "<DOC><DOCNO>tiny</DOCNO><TEXT>rare rare</TEXT></DOC>"
            "<DOC><DOCNO>pad</DOCNO><TEXT>" + "x " * 40 + "</TEXT></DOC>",
            encoding="utf-8",
        )
        topics = tmp_path / "t.txt"
        topics.write_text("<top><num>1</num><title>rare</title></top>", encoding="utf-8")
        run_cli("index", "--corpus", corpus, "--index-dir", tmp_path / "idx")
        code = run_cli(
            "run", "--index-dir", tmp_path / "idx", "--topics", topics, "--fields", "T",
            "--models", "BB2,BM25", "--output-dir", tmp_path / "runs", "--tag", "t",
        )
        assert code == 2
        assert not (tmp_path / "runs" / "t.BB2.run").exists()
        assert (tmp_path / "runs" / "t.BM25.run").exists()
        err = capsys.readouterr().err
        assert "BB2" in err and "aborted" in err

    def test_param_flags_change_scores(self, fixture_dir, tmp_path):
        run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", tmp_path / "idx")
        for mu, out in (("2500", "runs_a"), ("50", "runs_b")):
            assert (
                run_cli(
                    "run", "--index-dir", tmp_path / "idx", "--topics", fixture_dir / "topics.txt",
                    "--models", "DirichletLM", "--cutoff", 10, "--mu", mu,
                    "--output-dir", tmp_path / out, "--tag", "p",
                )
                == 0
            )
        a = (tmp_path / "runs_a" / "p.DirichletLM.run").read_text()
        b = (tmp_path / "runs_b" / "p.DirichletLM.run").read_text()
        assert a != b


class TestConfigFile:
    def test_config_supplies_options_and_flags_win(self, fixture_dir, tmp_path, capsys):
        config = tmp_path / "exp.conf"
        config.write_text(
            f"""# experiment configuration
corpus={fixture_dir / 'corpus.trec'}
index_dir={tmp_path / 'idx'}
cutoff=7
tag=fromconfig
""",
            encoding="utf-8",
        )
        assert run_cli("index", "--config", config) == 0
        assert (
            run_cli(
                "run", "--config", config, "--topics", fixture_dir / "topics.txt",
                "--models", "BM25", "--output-dir", tmp_path / "runs",
            )
            == 0
        )
        run_file = tmp_path / "runs" / "fromconfig.BM25.run"
        assert run_file.exists()
        ranks = [int(line.split()[3]) for line in run_file.read_text().splitlines()]
        assert max(ranks) <= 7
        # flag overrides the config cutoff
        assert (
            run_cli(
                "run", "--config", config, "--topics", fixture_dir / "topics.txt",
                "--models", "BM25", "--output-dir", tmp_path / "runs2", "--cutoff", 3,
            )
            == 0
        )
        ranks = [
            int(line.split()[3])
            for line in (tmp_path / "runs2" / "fromconfig.BM25.run").read_text().splitlines()
        ]
        assert max(ranks) <= 3

    def test_unknown_config_key_rejected(self, tmp_path):
        config = tmp_path / "bad.conf"
        config.write_text("cuttoff=9\n", encoding="utf-8")
        assert run_cli("index", "--config", config) == 1

    def test_missing_config_file_rejected(self, tmp_path):
        assert run_cli("index", "--config", tmp_path / "nope.conf") == 1


class TestExpandCommand:
    def test_empty_thesaurus_is_identity(self, fixture_dir, tmp_path):
        empty = tmp_path / "empty.tsv"
        empty.write_text("", encoding="utf-8")
        out = tmp_path / "expanded.txt"
        assert (
            run_cli("expand", "--topics", fixture_dir / "topics.txt", "--thesaurus", empty,
                    "--output", out)
            == 0
        )
        assert parse_topics(out) == parse_topics(fixture_dir / "topics.txt")
        stats = (tmp_path / "expanded.txt.stats.txt").read_text(encoding="utf-8")
        assert "mean_added: 0.0000" in stats

    def test_cap_honored(self, fixture_dir, tmp_path, capsys):
        rich = tmp_path / "rich.tsv"
        topics = parse_topics(fixture_dir / "topics.txt")
        head = topics[0].title.split()[0].lower()
        rich.write_text(
            head + "\t" + "|".join(f"extra{i}" for i in range(10)) + "\n", encoding="utf-8"
        )
        out = tmp_path / "expanded.txt"
        assert (
            run_cli("expand", "--topics", fixture_dir / "topics.txt", "--thesaurus", rich,
                    "--output", out, "--fields", "T")
            == 0
        )
        stats_text = capsys.readouterr().out
        assert f"{topics[0].qid}: 6" in stats_text


class TestCompareCommand:
    def test_identical_directories_all_fail(self, fixture_dir, tmp_path, capsys):
        ws = tmp_path
        run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", ws / "idx")
        run_cli("run", "--index-dir", ws / "idx", "--topics", fixture_dir / "topics.txt",
                "--models", "BM25,DPH", "--cutoff", 30, "--output-dir", ws / "runs", "--tag", "t")
        run_cli("eval", "--runs", ws / "runs", "--qrels", fixture_dir / "qrels.txt",
                "--cutoff", 30, "--output-dir", ws / "eval")
        assert run_cli("compare", "--before", ws / "eval", "--after", ws / "eval",
                       "--output-dir", ws / "cmp") == 0
        csv_lines = (ws / "cmp" / "comparison.csv").read_text(encoding="utf-8").splitlines()[1:]
        assert all(line.endswith("Fail") for line in csv_lines)

    def test_model_set_mismatch_is_validation_error(self, fixture_dir, tmp_path):
        ws = tmp_path
        run_cli("index", "--corpus", fixture_dir / "corpus.trec", "--index-dir", ws / "idx")
        run_cli("run", "--index-dir", ws / "idx", "--topics", fixture_dir / "topics.txt",
                "--models", "BM25", "--cutoff", 10, "--output-dir", ws / "runs_a", "--tag", "t")
        run_cli("run", "--index-dir", ws / "idx", "--topics", fixture_dir / "topics.txt",
                "--models", "DPH", "--cutoff", 10, "--output-dir", ws / "runs_b", "--tag", "t")
        run_cli("eval", "--runs", ws / "runs_a", "--qrels", fixture_dir / "qrels.txt",
                "--cutoff", 10, "--output-dir", ws / "eval_a")
        run_cli("eval", "--runs", ws / "runs_b", "--qrels", fixture_dir / "qrels.txt",
                "--cutoff", 10, "--output-dir", ws / "eval_b")
        assert run_cli("compare", "--before", ws / "eval_a", "--after", ws / "eval_b") == 1


class TestVerifyCommand:
    def test_ranker_agrees_with_reference(self, capsys):
        assert run_cli("verify", "--instances", 3, "--seed", 5, "--models", "BM25,DPH,InL2") == 0
        out = capsys.readouterr().out
        assert out.count("PASS") == 3
