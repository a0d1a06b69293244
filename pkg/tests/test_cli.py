from __future__ import annotations

import json
import shutil

import pytest

from lithub.cli import main

from conftest import FIXTURES, hub_env


def run_cli(*argv) -> int:
    return main([str(a) for a in argv])


@pytest.fixture(scope="module")
def ran_env(hub_env, tmp_path_factory):
    """hub_env copy with one pipeline run already executed."""
    root = tmp_path_factory.mktemp("cli")
    shutil.copytree(hub_env, root / "hub")
    config = root / "hub" / "config.json"
    assert run_cli("run", "--delta", root / "hub" / "delta.jsonl", "--config", config) == 0
    return config


class TestIngest:
    def test_summary_and_reject_lines(self, tmp_path, capsys):
        delta = tmp_path / "delta.jsonl"
        delta.write_text(
            json.dumps({"pmid": 1, "title": "T.", "pub_date": "2021-01-01"})
            + "\nnot json\n"
        )
        code = run_cli("ingest", delta, "--data-dir", tmp_path / "data")
        out = capsys.readouterr().out
        assert code == 0
        assert "new=1" in out and "rejected=1" in out
        assert "reject line 2" in out

    def test_dry_run(self, tmp_path, capsys):
        delta = tmp_path / "delta.jsonl"
        delta.write_text(json.dumps({"pmid": 1, "title": "T.", "pub_date": "2021-01-01"}))
        run_cli("ingest", delta, "--dry-run", "--data-dir", tmp_path / "data")
        assert "[dry-run]" in capsys.readouterr().out
        code = run_cli("ingest", delta, "--data-dir", tmp_path / "data")
        assert "new=1" in capsys.readouterr().out  # nothing was written before


class TestModelCommands:
    def test_train_and_apply_triage(self, tmp_path, capsys):
        model = tmp_path / "triage.json"
        decisions = tmp_path / "decisions.tsv"
        assert run_cli("train", "triage", "--data", FIXTURES / "triage_train.jsonl", "--out", model) == 0
        assert run_cli(
            "triage", "--model", model,
            "--in", FIXTURES / "triage_heldout.jsonl", "--out", decisions,
        ) == 0
        rows = [l.split("\t") for l in decisions.read_text().splitlines()]
        assert len(rows) == 50
        assert all(len(r) == 4 for r in rows)

    def test_train_and_apply_topics(self, tmp_path):
        model = tmp_path / "topics.json"
        out = tmp_path / "topics.tsv"
        assert run_cli(
            "train", "topics",
            "--data", FIXTURES / "corpus_1000_topics.tsv",
            "--corpus", FIXTURES / "corpus_1000.jsonl",
            "--out", model, "--min-df", "2", "--epochs", "150",
        ) == 0
        assert run_cli(
            "annotate", "topics", "--model", model,
            "--in", FIXTURES / "corpus_1000.jsonl", "--out", out,
        ) == 0
        assert out.read_text().strip()

    def test_all_scores_emits_every_topic(self, tmp_path):
        model = tmp_path / "topics.json"
        out = tmp_path / "scores.tsv"
        run_cli(
            "train", "topics",
            "--data", FIXTURES / "corpus_1000_topics.tsv",
            "--corpus", FIXTURES / "corpus_1000.jsonl",
            "--out", model, "--min-df", "2", "--epochs", "60",
        )
        small = tmp_path / "one.jsonl"
        small.write_text(
            (FIXTURES / "corpus_1000.jsonl").read_text().splitlines()[0] + "\n"
        )
        run_cli("annotate", "topics", "--model", model, "--in", small, "--out", out, "--all-scores")
        assert len(out.read_text().splitlines()) == 8

    def test_annotate_entities(self, tmp_path):
        out = tmp_path / "mentions.tsv"
        assert run_cli(
            "annotate", "entities", "--lexicon", FIXTURES / "lexicon.tsv",
            "--in", FIXTURES / "ner_benchmark.jsonl", "--out", out,
        ) == 0
        rows = [l.split("\t") for l in out.read_text().splitlines()]
        assert all(len(r) == 7 for r in rows)


class TestEval:
    def test_prf_json_line(self, tmp_path, capsys):
        gold = tmp_path / "gold.tsv"
        pred = tmp_path / "pred.tsv"
        gold.write_text("1\ta\n2\tb\n3\tc\n4\td\n5\te\n")
        pred.write_text("1\ta\n2\tb\n3\tc\n6\tf\n")
        run_cli("eval", "prf", "--gold", gold, "--pred", pred)
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["precision"] == 0.75
        assert payload["recall"] == 0.6

    def test_prf_by_type(self, tmp_path, capsys):
        gold = tmp_path / "gold.tsv"
        pred = tmp_path / "pred.tsv"
        rows = [
            "1\ttitle\t0\t4\tBeta\tstrain\tSTRAIN:Beta",
            "1\ttitle\t10\t18\tBNT162b2\tvaccine\tVAX:BNT162b2",
        ]
        gold.write_text("\n".join(rows) + "\n")
        pred.write_text(rows[0] + "\n")
        run_cli("eval", "prf", "--gold", gold, "--pred", pred, "--by-type")
        out = capsys.readouterr().out
        assert "strain" in out and "vaccine" in out

    def test_prf_macro_implies_by_type(self, tmp_path, capsys):
        gold = tmp_path / "gold.tsv"
        pred = tmp_path / "pred.tsv"
        gold.write_text("1\tt\t0\t4\tBeta\tstrain\tS:B\n1\tt\t9\t17\tX\tvaccine\tV:X\n")
        pred.write_text("1\tt\t0\t4\tBeta\tstrain\tS:B\n")
        assert run_cli("eval", "prf", "--gold", gold, "--pred", pred, "--macro") == 0
        payload = json.loads(capsys.readouterr().out.strip().splitlines()[-1])
        assert payload["average"] == "macro"
        assert payload["recall"] == 0.5  # mean of per-type recalls 1.0 and 0.0

    def test_iaa(self, tmp_path, capsys):
        a = tmp_path / "a.tsv"
        b = tmp_path / "b.tsv"
        shared = [f"{i}\tt\t0\t4\tx\tstrain\tS:{i}" for i in range(8)]
        a.write_text("\n".join(shared + ["100\tt\t0\t1\ty\tstrain\tS:a", "101\tt\t0\t1\ty\tstrain\tS:b"]))
        b.write_text("\n".join(shared + ["200\tt\t0\t1\ty\tstrain\tS:c", "201\tt\t0\t1\ty\tstrain\tS:d"]))
        run_cli("eval", "iaa", "--a", a, "--b", b)
        payload = json.loads(capsys.readouterr().out)
        assert payload["matches"] == 8 and payload["union"] == 12
        assert payload["ratio_a"] == 0.8

    def test_split(self, capsys):
        run_cli("eval", "split", "--n", "500", "--train", "400", "--seed", "7")
        payload = json.loads(capsys.readouterr().out)
        assert payload == {"train": 400, "test": 100, "seed": 7}

    def test_coverage(self, tmp_path, capsys):
        a = tmp_path / "a.txt"
        b = tmp_path / "b.txt"
        a.write_text("\n".join(str(i) for i in range(90)))
        b.write_text("\n".join(str(i) for i in range(70, 92)))
        run_cli("eval", "coverage", "--a", a, "--b", b)
        payload = json.loads(capsys.readouterr().out)
        assert payload["intersection"] == 20
        assert payload["b_covered_by_a"] == round(20 / 22, 6)


class TestHubCommands:
    def test_run_prints_stage_lines(self, ran_env, capsys):
        pass  # ran_env already asserted exit code 0

    def test_partial_run_exits_nonzero(self, hub_env, tmp_path, capsys):
        import shutil

        root = tmp_path / "hub"
        shutil.copytree(hub_env, root)
        delta = root / "delta_bad.jsonl"
        good = (root / "delta.jsonl").read_text().splitlines()[:20]
        delta.write_text("\n".join(good + ["definitely not json"]) + "\n")
        assert run_cli("run", "--delta", delta, "--config", root / "config.json") == 1
        assert "status=partial" in capsys.readouterr().out

    def test_search(self, ran_env, capsys):
        code = run_cli(
            "search", "covid-19 topic:Treatment", "--config", ran_env, "--size", "5"
        )
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("total=")

    def test_stats_growth_csv(self, ran_env, capsys):
        code = run_cli("stats", "growth", "--csv", "--config", ran_env)
        out = capsys.readouterr().out
        assert code == 0
        assert out.startswith("period,new,cumulative")

    def test_stats_overview(self, ran_env, capsys):
        run_cli("stats", "overview", "--config", ran_env)
        payload = json.loads(capsys.readouterr().out)
        assert payload["publications"] > 0

    def test_loop_queue_and_decide(self, ran_env, capsys):
        assert run_cli("loop", "queue", "-k", "3", "--config", ran_env) == 0
        out = capsys.readouterr().out.strip().splitlines()
        assert len(out) == 3
        pmid = out[0].split("\t")[0]
        assert run_cli("loop", "decide", pmid, "accept", "--curator", "cli-c", "--config", ran_env) == 0
        assert "accepted" in capsys.readouterr().out
        # double decision surfaces as a clean error, not a traceback
        assert run_cli("loop", "decide", pmid, "accept", "--curator", "cli-c", "--config", ran_env) == 1

    def test_loop_iterate_and_signals(self, ran_env, capsys):
        queue_out = None
        run_cli("loop", "queue", "-k", "1", "--config", ran_env)
        pmid = capsys.readouterr().out.split("\t")[0]
        run_cli("loop", "decide", pmid, "reject", "--curator", "cli-c", "--config", ran_env)
        capsys.readouterr()
        assert run_cli("loop", "iterate", "--config", ran_env) == 0
        assert "iteration" in capsys.readouterr().out
        assert run_cli("loop", "signals", "--config", ran_env) == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0].startswith("pmid\ts1")
        assert len(lines) > 1

    def test_search_before_run_fails_cleanly(self, tmp_path, capsys):
        assert run_cli("search", "x", "--data-dir", tmp_path / "nodata") == 1
