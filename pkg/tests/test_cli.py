import json
import subprocess
import sys

import pytest

from superblock.cli import main, read_run
from superblock.synth import SyntheticCorpusSpec, write_spec


@pytest.fixture
def workspace(tmp_path):
    spec = SyntheticCorpusSpec(num_docs=200, vocab_size=300, terms_per_doc=10, num_clusters=6, seed=5, num_queries=8)
    write_spec(spec, tmp_path / "spec.json")
    assert main(["synth", "--spec", str(tmp_path / "spec.json"), "--out", str(tmp_path / "data")]) == 0
    assert main(["index", "build", "--docs", str(tmp_path / "data/docs.jsonl"), "--out", str(tmp_path / "ix.sbpi"),
                 "--b", "4", "--c", "8", "--order", "greedy"]) == 0
    return tmp_path


def _search(ws, out, *extra):
    return main(["search", "--index", str(ws / "ix.sbpi"), "--queries", str(ws / "data/queries.jsonl"),
                 "--k", "10", "--out", str(ws / out), *extra])


def test_search_matches_oracle_run(workspace):
    assert _search(workspace, "sp.run") == 0
    assert _search(workspace, "oracle.run", "--oracle") == 0
    sp = (workspace / "sp.run").read_text().splitlines()
    ex = (workspace / "oracle.run").read_text().splitlines()
    assert [l.rsplit("\t", 1)[0] for l in sp] == [l.rsplit("\t", 1)[0] for l in ex]
    qid, q0, doc, rank, score, tag = sp[0].split("\t")
    assert (q0, rank, tag) == ("Q0", "1", "sp")


def test_eval_reports_json(workspace, capsys):
    _search(workspace, "sp.run")
    capsys.readouterr()
    assert main(["eval", "--results", str(workspace / "sp.run"), "--qrels", str(workspace / "data/qrels.tsv"),
                 "--k", "10"]) == 0
    report = json.loads(capsys.readouterr().out)
    # synthetic qrels are the exact top-10, so safe search recovers all of them
    assert report["recall_at_k"] == 1.0
    assert report["mrr_at_10"] == 1.0
    assert len(read_run(workspace / "sp.run")) == report["num_queries"]


def test_bench(workspace, capsys):
    capsys.readouterr()
    assert main(["bench", "--index", str(workspace / "ix.sbpi"), "--queries", str(workspace / "data/queries.jsonl"),
                 "--reps", "3", "--qrels", str(workspace / "data/qrels.tsv"), "--mu", "0.5"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert len(report["pass_latencies_ms"]) == 3
    assert 0 <= report["recall_at_k"] <= 1


def test_bench_grid(workspace, capsys):
    capsys.readouterr()
    assert main(["bench", "--index", str(workspace / "ix.sbpi"), "--queries", str(workspace / "data/queries.jsonl"),
                 "--reps", "3", "--qrels", str(workspace / "data/qrels.tsv"), "--grid-mu", "0.4,1"]) == 0
    rows = json.loads(capsys.readouterr().out)["grid"]
    assert [r["mu"] for r in rows] == ["2/5", "1"]


def test_bad_mu_eta_exit_code(workspace):
    assert _search(workspace, "x.run", "--mu", "0.9", "--eta", "0.5") == 2


def test_missing_file_exit_code(tmp_path):
    assert main(["index", "build", "--docs", str(tmp_path / "nope.jsonl"), "--out", str(tmp_path / "o")]) == 2


def test_corrupt_index_exit_code(workspace):
    data = bytearray((workspace / "ix.sbpi").read_bytes())
    data[100] ^= 0xFF
    (workspace / "bad.sbpi").write_bytes(bytes(data))
    rc = main(["search", "--index", str(workspace / "bad.sbpi"), "--queries", str(workspace / "data/queries.jsonl")])
    assert rc == 2


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "superblock", "--help"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "synth" in out.stdout
