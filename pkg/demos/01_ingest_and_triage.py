#!/usr/bin/env python3
"""Walkthrough: parsing citation records, batch ingestion, and relevance triage.

Run from the repo root: python3 demos/01_ingest_and_triage.py
"""

import json
import tempfile
from pathlib import Path

from lithub import CorpusStore, parse_record, train_triage, triage

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

# --- parsing one wire-format line -------------------------------------------

line = json.dumps(
    {
        "pmid": 42,
        "title": "A study of covid-19 ventilation outcomes.",
        "abstract": "We report hospitalization and pneumonia rates.",
        "journal": "J Synth Med 01",
        "pub_date": "2021-02",  # day missing -> normalized to the 1st
        "authors": ["Chen R", "Lopez D"],
    }
)
record = parse_record(line)
print("parsed:", record.pmid, "|", record.title)
print("pub_date normalized:", record.pub_date)

# --- batch ingestion with dedup and update semantics -------------------------

with tempfile.TemporaryDirectory() as tmp:
    store = CorpusStore(Path(tmp) / "store")
    report = store.ingest_batch([line])
    print("\nfirst batch:  ", report.summary())
    report = store.ingest_batch([line])  # identical content -> duplicate
    print("second batch: ", report.summary())
    revised = json.loads(line)
    revised["title"] = "A revised study of covid-19 ventilation outcomes."
    report = store.ingest_batch([json.dumps(revised)])  # same pmid, new hash
    print("revised batch:", report.summary())
    print("store now holds", len(store), "record(s)")

# --- triage: keyword gate + model score + exclusion categories ----------------

labeled = []
with open(FIXTURES / "triage_train.jsonl") as fh:
    for raw in fh:
        if raw.strip():
            labeled.append((parse_record(raw), bool(json.loads(raw)["relevant"])))
model = train_triage(labeled, min_df=2)
print(f"\ntrained relevance model on {len(labeled)} labeled records")

with open(FIXTURES / "triage_archetypes.jsonl") as fh:
    archetypes = [parse_record(raw) for raw in fh if raw.strip()]

for record in archetypes:
    decision = triage(record, model)
    print(f"\npmid {record.pmid}: {record.title[:60]}")
    print(f"  relevant={decision.relevant} score={decision.score:.3f} "
          f"category={decision.exclusion_category}")
    print(f"  {decision.rationale}")
