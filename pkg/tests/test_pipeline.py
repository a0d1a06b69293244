from __future__ import annotations

import hashlib
import json
import shutil
from pathlib import Path

import pytest

import lithub.pipeline as pipeline_mod
from lithub.errors import StageFailure
from lithub.pipeline import (
    HubConfig,
    Snapshot,
    current_snapshot_dir,
    load_current_snapshot,
    run_daily,
)

from conftest import FIXTURES, hub_env


def tree_digest(root: Path, skip: tuple[str, ...] = ("runs",)) -> dict[str, str]:
    """Relative path -> content hash for every file under root."""
    out = {}
    for path in sorted(root.rglob("*")):
        if any(part in skip for part in path.relative_to(root).parts):
            continue
        if path.is_file():
            out[str(path.relative_to(root))] = hashlib.sha256(path.read_bytes()).hexdigest()
    return out


def fresh_env(hub_env, tmp_path) -> HubConfig:
    root = tmp_path / "hub"
    shutil.copytree(hub_env, root)
    return HubConfig.from_file(root / "config.json")


class TestRunDaily:
    def test_stage_counts_chain(self, hub_env, tmp_path):
        config = fresh_env(hub_env, tmp_path)
        run = run_daily(config.data_dir.parent / "delta.jsonl", config)
        assert run.status == "succeeded"
        by_name = {s.name: s for s in run.stages}
        assert by_name["ingest"].n_in == 1000
        assert by_name["triage"].n_in == by_name["ingest"].n_out
        assert by_name["topics"].n_in == by_name["triage"].n_out
        assert by_name["entities"].n_in == by_name["topics"].n_out
        assert by_name["longcovid"].n_in == by_name["entities"].n_out
        assert by_name["triage"].n_out < by_name["triage"].n_in  # some excluded

    def test_snapshot_published_and_loadable(self, hub_env, tmp_path):
        config = fresh_env(hub_env, tmp_path)
        run = run_daily(config.data_dir.parent / "delta.jsonl", config)
        snapshot = load_current_snapshot(config.data_dir)
        assert snapshot is not None
        assert snapshot.snapshot_id == run.snapshot_id
        assert len(snapshot.records) == next(
            s for s in run.stages if s.name == "index"
        ).n_out
        index = snapshot.build_index()
        assert len(index) == len(snapshot.records)
        assert snapshot.stats["overview"]["publications"] == len(snapshot.records)

    def test_idempotent_second_run_is_byte_identical(self, hub_env, tmp_path):
        config = fresh_env(hub_env, tmp_path)
        delta = config.data_dir.parent / "delta.jsonl"
        first = run_daily(delta, config)
        digest_after_first = tree_digest(config.data_dir)
        second = run_daily(delta, config)
        assert second.status == "succeeded"
        assert second.snapshot_id == first.snapshot_id  # pointer did not move
        assert tree_digest(config.data_dir) == digest_after_first
        by_name = {s.name: s for s in second.stages}
        assert by_name["ingest"].n_out == 0

    def test_failed_entity_stage_keeps_prior_snapshot(self, hub_env, tmp_path, monkeypatch):
        config = fresh_env(hub_env, tmp_path)
        delta_small = config.data_dir.parent / "delta_small.jsonl"
        lines = (config.data_dir.parent / "delta.jsonl").read_text().splitlines()
        delta_small.write_text("\n".join(lines[:100]) + "\n")
        first = run_daily(delta_small, config)
        digest_before = tree_digest(config.data_dir, skip=("runs", "store", "loop"))
        pointer_before = current_snapshot_dir(config.data_dir)

        def boom(record, lexicon):
            raise RuntimeError("injected entity failure")

        monkeypatch.setattr(pipeline_mod, "annotate_record", boom)
        with pytest.raises(StageFailure) as exc:
            run_daily(config.data_dir.parent / "delta.jsonl", config)
        assert exc.value.stage == "entities"
        assert current_snapshot_dir(config.data_dir) == pointer_before
        assert tree_digest(config.data_dir, skip=("runs", "store", "loop")) == digest_before
        # failure report persisted
        reports = list((config.data_dir / "runs").glob("*.jsonl"))
        assert any("failed:entities" in p.read_text() for p in reports)

    def test_failed_run_backlog_recovered_next_run(self, hub_env, tmp_path, monkeypatch):
        config = fresh_env(hub_env, tmp_path)
        delta = config.data_dir.parent / "delta.jsonl"

        def boom(record, lexicon):
            raise RuntimeError("injected")

        monkeypatch.setattr(pipeline_mod, "annotate_record", boom)
        with pytest.raises(StageFailure):
            run_daily(delta, config)
        monkeypatch.undo()
        run = run_daily(delta, config)  # same delta; records already in store
        assert run.status == "succeeded"
        snapshot = load_current_snapshot(config.data_dir)
        assert len(snapshot.records) > 0

    def test_rejected_lines_mark_partial(self, hub_env, tmp_path):
        config = fresh_env(hub_env, tmp_path)
        delta = config.data_dir.parent / "delta_bad.jsonl"
        good = (config.data_dir.parent / "delta.jsonl").read_text().splitlines()[:50]
        delta.write_text("\n".join(good + ["not json at all"]) + "\n")
        run = run_daily(delta, config)
        assert run.status == "partial"
        assert next(s for s in run.stages if s.name == "ingest").n_err == 1


@pytest.fixture(scope="module")
def published(hub_env, tmp_path_factory):
    root = tmp_path_factory.mktemp("pub")
    shutil.copytree(hub_env, root / "hub")
    config = HubConfig.from_file(root / "hub" / "config.json")
    run_daily(root / "hub" / "delta.jsonl", config)
    return load_current_snapshot(config.data_dir)


class TestSnapshotContents:

    def test_only_relevant_records_in_collection(self, published, corpus_truth):
        for pmid in published.records:
            assert published.processed[pmid]["relevant"]

    def test_processed_covers_all_input(self, published, corpus_truth):
        assert len(published.processed) == 1000

    def test_annotations_fold_in_longcovid_membership(self, published):
        annotations = published.annotations()
        for pmid, row in published.longcovid_rows.items():
            if row["member"]:
                assert "Long COVID" in annotations[pmid].topics

    def test_drug_rows_restricted_to_collection(self, published):
        for pmid, _concept in published.drug_rows:
            assert pmid in published.records

    def test_stats_match_live_recount(self, published):
        from lithub.stats import growth

        series = growth(published.records.values(), "month")
        assert published.stats["growth_month"] == [
            [r.period, r.new, r.cumulative] for r in series.rows
        ]
