"""Daily-update orchestration and snapshot management.

Stage order: ingest -> triage -> topics -> entities -> longcovid signals ->
index assembly -> stats refresh. Only triage-relevant records continue
downstream. All stage outputs are staged into a new snapshot directory and
the CURRENT pointer swaps atomically at the very end, so a failed run (or a
crash at any stage boundary) leaves the previous snapshot serving.

A snapshot is self-contained: it carries the collection's records, the
annotation tables, the review-loop membership view and refreshed stats, plus
a `processed` map (pmid -> content hash + relevance) used to compute the
next run's work set. Re-running a delta whose records are all processed is
a no-op: nothing is written and the CURRENT pointer does not move.
"""

from __future__ import annotations

import json
import logging
import os
import shutil
import time
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable

from .entities import EntityMention, Lexicon, annotate_record
from .errors import StageFailure
from .loop import LongCovidLoop, LoopResources, load_decision_log, load_seed_labels
from .search import DocAnnotations, SearchIndex
from .stats import cooccurrence, growth
from .store import CitationRecord, CorpusStore, parse_record, serialize_record
from .topics import MultiLabelModel, TopicAnnotation, annotate_topics, topic_distribution
from .triage import DEFAULT_KEYWORDS, LinearModel, TriageDecision, triage

logger = logging.getLogger(__name__)

STAGES = ("ingest", "triage", "topics", "entities", "longcovid", "index", "stats")


@dataclass
class HubConfig:
    data_dir: Path
    triage_model: Path | None = None
    topics_model: Path | None = None
    lexicon: Path | None = None
    synonyms: Path | None = None
    symptoms: Path | None = None
    drug_mentions: Path | None = None
    baseline: Path | None = None
    trending: Path | None = None
    seed_labels: Path | None = None
    keywords: tuple[str, ...] = DEFAULT_KEYWORDS
    auto_include: float = 0.9

    @classmethod
    def from_file(cls, path: str | Path) -> "HubConfig":
        path = Path(path)
        obj = json.loads(path.read_text(encoding="utf-8"))
        base = path.parent

        def resolve(key: str) -> Path | None:
            value = obj.get(key)
            return (base / value) if value else None

        return cls(
            data_dir=base / obj.get("data_dir", "data"),
            triage_model=resolve("triage_model"),
            topics_model=resolve("topics_model"),
            lexicon=resolve("lexicon"),
            synonyms=resolve("synonyms"),
            symptoms=resolve("symptoms"),
            drug_mentions=resolve("drug_mentions"),
            baseline=resolve("baseline"),
            trending=resolve("trending"),
            seed_labels=resolve("seed_labels"),
            keywords=tuple(obj.get("keywords", DEFAULT_KEYWORDS)),
            auto_include=float(obj.get("auto_include", 0.9)),
        )

    @classmethod
    def for_data_dir(cls, data_dir: str | Path) -> "HubConfig":
        return cls(data_dir=Path(data_dir))


@dataclass
class StageReport:
    name: str
    n_in: int = 0
    n_out: int = 0
    n_err: int = 0
    seconds: float = 0.0

    def as_dict(self) -> dict:
        return {
            "stage": self.name,
            "in": self.n_in,
            "out": self.n_out,
            "errors": self.n_err,
            "seconds": round(self.seconds, 6),
        }


@dataclass
class PipelineRun:
    run_id: str
    started: str
    finished: str = ""
    stages: list[StageReport] = field(default_factory=list)
    status: str = "running"  # succeeded | partial | failed:<stage>
    error: str = ""
    snapshot_id: str = ""

    def as_lines(self) -> list[str]:
        lines = [json.dumps({"run": self.run_id, "started": self.started})]
        lines += [json.dumps(s.as_dict()) for s in self.stages]
        lines.append(
            json.dumps(
                {
                    "run": self.run_id,
                    "status": self.status,
                    "error": self.error,
                    "snapshot": self.snapshot_id,
                    "finished": self.finished,
                }
            )
        )
        return lines


# -- snapshots ---------------------------------------------------------------


def _read_tsv(path: Path) -> list[list[str]]:
    if not path.exists():
        return []
    rows = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if line.strip():
                rows.append(line.split("\t"))
    return rows


def _write_tsv(path: Path, rows: Iterable[Iterable]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write("\t".join(str(c) for c in row) + "\n")


@dataclass
class Snapshot:
    """One immutable published view of the curated collection."""

    snapshot_id: str
    path: Path
    processed: dict[int, dict]  # pmid -> {"hash": str, "relevant": bool}
    records: dict[int, CitationRecord]
    topic_rows: list[tuple[int, str, float]]
    mention_rows: list[EntityMention]
    longcovid_rows: dict[int, dict]  # pmid -> {p, status, member, provisional}
    drug_rows: list[tuple[int, str]]  # pmid, drug concept
    stats: dict

    @classmethod
    def load(cls, snap_dir: str | Path) -> "Snapshot":
        snap_dir = Path(snap_dir)
        meta = json.loads((snap_dir / "meta.json").read_text(encoding="utf-8"))
        records: dict[int, CitationRecord] = {}
        records_path = snap_dir / "records.jsonl"
        if records_path.exists():
            with open(records_path, encoding="utf-8") as fh:
                for line in fh:
                    if line.strip():
                        record = parse_record(line)
                        records[record.pmid] = record
        topic_rows = [
            (int(r[0]), r[1], float(r[2])) for r in _read_tsv(snap_dir / "topics.tsv")
        ]
        mention_rows = [
            EntityMention(
                pmid=int(r[0]),
                field=r[1],
                start=int(r[2]),
                end=int(r[3]),
                surface=r[4],
                entity_type=r[5],
                concept_id=r[6],
            )
            for r in _read_tsv(snap_dir / "mentions.tsv")
        ]
        longcovid_rows = {
            int(r[0]): {
                "p": float(r[1]),
                "status": r[2],
                "member": r[3] == "1",
                "provisional": r[4] == "1",
            }
            for r in _read_tsv(snap_dir / "longcovid.tsv")
        }
        drug_rows = [(int(r[0]), r[1]) for r in _read_tsv(snap_dir / "drugs.tsv")]
        stats_path = snap_dir / "stats.json"
        stats = json.loads(stats_path.read_text(encoding="utf-8")) if stats_path.exists() else {}
        return cls(
            snapshot_id=meta["snapshot_id"],
            path=snap_dir,
            processed={int(k): v for k, v in meta["processed"].items()},
            records=records,
            topic_rows=topic_rows,
            mention_rows=mention_rows,
            longcovid_rows=longcovid_rows,
            drug_rows=drug_rows,
            stats=stats,
        )

    def topics_by_pmid(self) -> dict[int, set[str]]:
        out: dict[int, set[str]] = {}
        for pmid, topic, _ in self.topic_rows:
            out.setdefault(pmid, set()).add(topic)
        return out

    def topic_scores_by_pmid(self) -> dict[int, dict[str, float]]:
        out: dict[int, dict[str, float]] = {}
        for pmid, topic, score in self.topic_rows:
            out.setdefault(pmid, {})[topic] = score
        return out

    def mentions_by_pmid(self) -> dict[int, list[EntityMention]]:
        out: dict[int, list[EntityMention]] = {}
        for mention in self.mention_rows:
            out.setdefault(mention.pmid, []).append(mention)
        return out

    def annotations(self) -> dict[int, DocAnnotations]:
        """Facet values per document, with loop membership folded into the
        Long COVID topic and the provisional flag."""
        topics = self.topics_by_pmid()
        strains: dict[int, set[str]] = {}
        vaccines: dict[int, set[str]] = {}
        for mention in self.mention_rows:
            target = strains if mention.entity_type == "strain" else (
                vaccines if mention.entity_type == "vaccine" else None
            )
            if target is not None:
                target.setdefault(mention.pmid, set()).add(mention.concept_id)
        drugs: dict[int, set[str]] = {}
        for pmid, concept in self.drug_rows:
            drugs.setdefault(pmid, set()).add(concept)
        out: dict[int, DocAnnotations] = {}
        for pmid in self.records:
            assigned = set(topics.get(pmid, set()))
            lc = self.longcovid_rows.get(pmid)
            provisional = False
            if lc and lc["member"]:
                assigned.add("Long COVID")
                provisional = lc["provisional"]
            out[pmid] = DocAnnotations(
                topics=frozenset(assigned),
                strains=frozenset(strains.get(pmid, set())),
                vaccines=frozenset(vaccines.get(pmid, set())),
                drugs=frozenset(drugs.get(pmid, set())),
                provisional_longcovid=provisional,
            )
        return out

    def build_index(self) -> SearchIndex:
        return SearchIndex.build(self.records.values(), self.annotations())


def current_snapshot_dir(data_dir: str | Path) -> Path | None:
    pointer = Path(data_dir) / "CURRENT"
    if not pointer.exists():
        return None
    name = pointer.read_text().strip()
    snap_dir = Path(data_dir) / "snapshots" / name
    return snap_dir if snap_dir.exists() else None


def load_current_snapshot(data_dir: str | Path) -> Snapshot | None:
    snap_dir = current_snapshot_dir(data_dir)
    return Snapshot.load(snap_dir) if snap_dir else None


def _next_snapshot_id(data_dir: Path) -> str:
    snap_root = data_dir / "snapshots"
    numbers = [0]
    if snap_root.exists():
        for entry in snap_root.iterdir():
            if entry.name.startswith("snap-"):
                try:
                    numbers.append(int(entry.name.split("-")[1]))
                except ValueError:
                    pass
    return f"snap-{max(numbers) + 1:06d}"


# -- loop integration ----------------------------------------------------------


def build_resources(config: HubConfig) -> LoopResources:
    synonyms = Lexicon.load(config.synonyms, allowed_types=("synonym",)) if config.synonyms else None
    symptoms = Lexicon.load(config.symptoms, allowed_types=("symptom",)) if config.symptoms else None
    triage_model = LinearModel.load(config.triage_model) if config.triage_model else None
    return LoopResources(synonyms=synonyms, symptoms=symptoms, triage_model=triage_model)


def open_loop(config: HubConfig, records: Iterable[CitationRecord]) -> LongCovidLoop:
    """Load the persistent review loop, creating it on first use."""
    loop_dir = config.data_dir / "loop"
    loop_dir.mkdir(parents=True, exist_ok=True)
    state_path = loop_dir / "state.json"
    log_path = loop_dir / "decisions.log"
    resources = build_resources(config)
    if state_path.exists():
        log = load_decision_log(log_path) if log_path.exists() else []
        return LongCovidLoop.load_state(
            state_path, records, resources=resources, log=log, log_path=log_path
        )
    seeds = load_seed_labels(config.seed_labels) if config.seed_labels else {}
    return LongCovidLoop(
        records,
        resources=resources,
        seed_labels=seeds,
        auto_include=config.auto_include,
        log_path=log_path,
    )


def save_loop(config: HubConfig, loop: LongCovidLoop) -> None:
    loop_dir = config.data_dir / "loop"
    loop_dir.mkdir(parents=True, exist_ok=True)
    loop.save_state(loop_dir / "state.json")


# -- the daily run -------------------------------------------------------------


class _StageTimer:
    def __init__(self, run: PipelineRun, name: str):
        self.report = StageReport(name)
        run.stages.append(self.report)

    def __enter__(self):
        self._t0 = time.perf_counter()
        return self.report

    def __exit__(self, exc_type, exc, tb):
        self.report.seconds = time.perf_counter() - self._t0
        return False


def run_daily(delta_path: str | Path, config: HubConfig) -> PipelineRun:
    """Execute one daily update; raises StageFailure after persisting the report."""
    run = PipelineRun(
        run_id=f"run-{datetime.now(timezone.utc):%Y%m%dT%H%M%S}-{uuid.uuid4().hex[:6]}",
        started=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )
    staging: Path | None = None
    current_stage = "ingest"
    try:
        config.data_dir.mkdir(parents=True, exist_ok=True)
        store = CorpusStore(config.data_dir / "store")
        previous = load_current_snapshot(config.data_dir)

        with _StageTimer(run, "ingest") as stage:
            lines = Path(delta_path).read_text(encoding="utf-8").splitlines()
            report = store.ingest_batch(lines)
            processed: dict[int, dict] = dict(previous.processed) if previous else {}
            # Work set: anything the current snapshot has not processed at
            # this content hash — includes backlog from failed runs.
            work = [
                record
                for record in store
                if processed.get(record.pmid, {}).get("hash") != record.content_hash()
            ]
            stage.n_in = len(lines)
            stage.n_out = len(work)
            stage.n_err = report.n_rejected

        if not work:
            run.status = "partial" if report.n_rejected else "succeeded"
            run.snapshot_id = previous.snapshot_id if previous else ""
            for name in STAGES[1:]:
                run.stages.append(StageReport(name))
            return run

        current_stage = "triage"
        with _StageTimer(run, "triage") as stage:
            triage_model = LinearModel.load(config.triage_model)
            decisions: dict[int, TriageDecision] = {
                r.pmid: triage(r, triage_model, config.keywords) for r in work
            }
            relevant = [r for r in work if decisions[r.pmid].relevant]
            stage.n_in = len(work)
            stage.n_out = len(relevant)

        current_stage = "topics"
        with _StageTimer(run, "topics") as stage:
            topics_model = MultiLabelModel.load(config.topics_model)
            topic_annotations: dict[int, TopicAnnotation] = {
                r.pmid: annotate_topics(r, topics_model) for r in relevant
            }
            stage.n_in = stage.n_out = len(relevant)

        current_stage = "entities"
        with _StageTimer(run, "entities") as stage:
            lexicon = Lexicon.load(config.lexicon)
            mention_lists = {r.pmid: annotate_record(r, lexicon) for r in relevant}
            stage.n_in = stage.n_out = len(relevant)

        current_stage = "longcovid"
        with _StageTimer(run, "longcovid") as stage:
            collection_records = _collection_records(store, processed, work, decisions)
            loop = open_loop(config, collection_records.values())
            loop.add_records([r for r in relevant])
            save_loop(config, loop)
            membership = loop.collection_membership()
            stage.n_in = stage.n_out = len(relevant)

        current_stage = "index"
        with _StageTimer(run, "index") as stage:
            snapshot_id = _next_snapshot_id(config.data_dir)
            staging = config.data_dir / "snapshots" / f".staging-{run.run_id}"
            staging.mkdir(parents=True)
            new_processed = _assemble_snapshot(
                staging,
                snapshot_id,
                store,
                previous,
                processed,
                work,
                decisions,
                topic_annotations,
                mention_lists,
                loop,
                membership,
                config,
            )
            snapshot = Snapshot.load(staging)
            snapshot.build_index()  # validates record/annotation agreement
            stage.n_in = len(relevant)
            stage.n_out = len(snapshot.records)

        current_stage = "stats"
        with _StageTimer(run, "stats") as stage:
            _write_stats(staging, snapshot)
            stage.n_in = stage.n_out = len(snapshot.records)

        # Atomic publish: rename the staging directory, then swap CURRENT.
        final_dir = config.data_dir / "snapshots" / snapshot_id
        os.replace(staging, final_dir)
        staging = None
        tmp_pointer = config.data_dir / "CURRENT.tmp"
        tmp_pointer.write_text(snapshot_id)
        os.replace(tmp_pointer, config.data_dir / "CURRENT")
        run.snapshot_id = snapshot_id
        run.status = "partial" if report.n_rejected else "succeeded"
        return run
    except Exception as exc:
        run.status = f"failed:{current_stage}"
        run.error = str(exc)
        if staging and staging.exists():
            shutil.rmtree(staging, ignore_errors=True)
        raise StageFailure(current_stage, exc) from exc
    finally:
        run.finished = datetime.now(timezone.utc).isoformat(timespec="seconds")
        _persist_run(config.data_dir, run)


def _collection_records(
    store: CorpusStore,
    processed: dict[int, dict],
    work: list[CitationRecord],
    decisions: dict[int, TriageDecision],
) -> dict[int, CitationRecord]:
    """Relevant records after this run's triage decisions are applied."""
    out: dict[int, CitationRecord] = {}
    work_pmids = {r.pmid for r in work}
    for record in store:
        if record.pmid in work_pmids:
            if decisions[record.pmid].relevant:
                out[record.pmid] = record
        elif processed.get(record.pmid, {}).get("relevant"):
            out[record.pmid] = record
    return out


def _assemble_snapshot(
    staging: Path,
    snapshot_id: str,
    store: CorpusStore,
    previous: Snapshot | None,
    processed: dict[int, dict],
    work: list[CitationRecord],
    decisions: dict[int, TriageDecision],
    topic_annotations: dict[int, TopicAnnotation],
    mention_lists: dict[int, list[EntityMention]],
    loop: LongCovidLoop,
    membership,
    config: HubConfig,
) -> dict[int, dict]:
    store_pmids = set(store.pmids())
    reprocessed = {r.pmid for r in work}

    new_processed = {
        pmid: meta for pmid, meta in processed.items() if pmid in store_pmids
    }
    for record in work:
        new_processed[record.pmid] = {
            "hash": record.content_hash(),
            "relevant": decisions[record.pmid].relevant,
        }

    collection = {
        pmid for pmid, meta in new_processed.items() if meta["relevant"]
    }

    records = {pmid: store.get(pmid) for pmid in sorted(collection)}
    with open(staging / "records.jsonl", "w", encoding="utf-8") as fh:
        for pmid in sorted(records):
            fh.write(serialize_record(records[pmid]) + "\n")

    topic_rows: list[tuple[int, str, float]] = []
    if previous:
        topic_rows += [
            row
            for row in previous.topic_rows
            if row[0] in collection and row[0] not in reprocessed
        ]
    for pmid in sorted(topic_annotations):
        if pmid not in collection:
            continue
        ann = topic_annotations[pmid]
        for topic in sorted(ann.assigned):
            topic_rows.append((pmid, topic, round(ann.scores[topic], 6)))
    topic_rows.sort(key=lambda r: (r[0], r[1]))
    _write_tsv(staging / "topics.tsv", topic_rows)

    mention_rows: list[EntityMention] = []
    if previous:
        mention_rows += [
            m
            for m in previous.mention_rows
            if m.pmid in collection and m.pmid not in reprocessed
        ]
    for pmid in sorted(mention_lists):
        if pmid in collection:
            mention_rows += mention_lists[pmid]
    mention_rows.sort(key=lambda m: (m.pmid, m.field or "", m.start))
    _write_tsv(
        staging / "mentions.tsv",
        (
            (m.pmid, m.field, m.start, m.end, m.surface, m.entity_type, m.concept_id)
            for m in mention_rows
        ),
    )

    lc_rows = []
    for pmid in sorted(collection):
        item = loop.items.get(pmid)
        if item is None:
            continue
        lc_rows.append(
            (
                pmid,
                f"{item.p:.6f}",
                item.status,
                "1" if pmid in membership.members else "0",
                "1" if pmid in membership.provisional else "0",
            )
        )
    _write_tsv(staging / "longcovid.tsv", lc_rows)

    drug_rows: list[tuple[int, str]] = []
    if config.drug_mentions and Path(config.drug_mentions).exists():
        for cols in _read_tsv(Path(config.drug_mentions)):
            pmid = int(cols[0])
            if pmid in collection:
                drug_rows.append((pmid, cols[6] if len(cols) > 6 else cols[1]))
    drug_rows = sorted(set(drug_rows))
    _write_tsv(staging / "drugs.tsv", drug_rows)

    meta = {
        "snapshot_id": snapshot_id,
        "created": datetime.now(timezone.utc).isoformat(timespec="seconds"),
        "processed": {str(pmid): m for pmid, m in sorted(new_processed.items())},
        "counts": {"collection": len(collection), "processed": len(new_processed)},
    }
    (staging / "meta.json").write_text(json.dumps(meta), encoding="utf-8")
    return new_processed


def _write_stats(staging: Path, snapshot: Snapshot) -> None:
    records = snapshot.records
    annotations = snapshot.annotations()
    assigned_sets = [a.topics for a in annotations.values()]
    topics_in_use = sorted({t for s in assigned_sets for t in s})
    series = growth(records.values(), "month")
    matrix = cooccurrence(assigned_sets)
    stats = {
        "overview": {
            "publications": len(records),
            "journals": len({r.journal for r in records.values() if r.journal}),
            "topics": len(topics_in_use),
        },
        "growth_month": [[r.period, r.new, r.cumulative] for r in series.rows],
        "cooccurrence": {
            "topics": list(matrix.topics),
            "matrix": matrix.matrix.tolist(),
        },
        "distribution": {
            str(k): v
            for k, v in topic_distribution(
                assigned_sets, n_topics=len(matrix.topics)
            ).items()
        },
    }
    (staging / "stats.json").write_text(json.dumps(stats), encoding="utf-8")


def _persist_run(data_dir: Path, run: PipelineRun) -> None:
    runs_dir = data_dir / "runs"
    runs_dir.mkdir(parents=True, exist_ok=True)
    (runs_dir / f"{run.run_id}.jsonl").write_text(
        "\n".join(run.as_lines()) + "\n", encoding="utf-8"
    )
