#!/usr/bin/env python3
"""Walkthrough: the daily pipeline end to end, then the HTTP API over the
published snapshot (as the browser frontend consumes it).

Run from the repo root: python3 demos/05_pipeline_and_api.py
"""

import json
import tempfile
from pathlib import Path

from fastapi.testclient import TestClient

from lithub import HubConfig, parse_record, run_daily, train_topics, train_triage
from lithub.logistic import Hyper
from lithub.service import create_app

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    (root / "models").mkdir()

    # Train the two models the pipeline needs.
    records = [parse_record(l) for l in open(FIXTURES / "corpus_1000.jsonl") if l.strip()]
    truth = {int(k): v for k, v in json.load(open(FIXTURES / "corpus_1000_truth.json")).items()}
    triage_labeled = [
        (parse_record(l), bool(json.loads(l)["relevant"]))
        for l in open(FIXTURES / "triage_train.jsonl") if l.strip()
    ]
    triage_labeled += [(r, truth[r.pmid]["relevant"]) for r in records[:200]]
    train_triage(triage_labeled, min_df=2).save(root / "models" / "triage.json")
    relevant = [r for r in records if truth[r.pmid]["relevant"]]
    train_topics(
        [(r, set(truth[r.pmid]["topics"])) for r in relevant[:800]],
        hyper=Hyper(epochs=250), min_df=2,
    ).save(root / "models" / "topics.json")

    config_obj = {
        "data_dir": "data",
        "triage_model": "models/triage.json",
        "topics_model": "models/topics.json",
        "lexicon": str(FIXTURES / "lexicon.tsv"),
        "synonyms": str(FIXTURES / "longcovid_synonyms.tsv"),
        "symptoms": str(FIXTURES / "symptoms.tsv"),
        "drug_mentions": str(FIXTURES / "drug_mentions.tsv"),
        "trending": str(FIXTURES / "trending.tsv"),
        "seed_labels": str(FIXTURES / "loop_seed.tsv"),
    }
    (root / "config.json").write_text(json.dumps(config_obj))
    config = HubConfig.from_file(root / "config.json")

    run = run_daily(FIXTURES / "corpus_1000.jsonl", config)
    print(f"pipeline run {run.run_id}: {run.status}")
    for stage in run.stages:
        print(f"  {stage.name:10s} in={stage.n_in:5d} out={stage.n_out:5d} "
              f"errors={stage.n_err} ({stage.seconds:.2f}s)")

    client = TestClient(create_app(config))

    overview = client.get("/api/stats/overview").json()
    print(f"\noverview widget: {overview}")

    search = client.get(
        "/api/search",
        params=[("variant", "STRAIN:Omicron"), ("vaccine", "VAX:BNT162b2")],
    ).json()
    print(f"co-mention search total: {search['total']}")
    if search["hits"]:
        pmid = search["hits"][0]["pmid"]
        cite = client.get(f"/api/doc/{pmid}/cite", params={"style": "text"}).text
        print(f"cite (text): {cite}")

    queue = client.get("/api/review/queue", params={"k": 3}).json()
    print(f"\nreview queue (top {len(queue['items'])}):")
    for item in queue["items"]:
        print(f"  {item['pmid']}  priority={item['priority']:.3f}  {item['title'][:50]}")
    if queue["items"]:
        pmid = queue["items"][0]["pmid"]
        decided = client.post(
            f"/api/review/{pmid}", json={"label": "accept", "curator": "demo"}
        )
        print(f"decision on {pmid}: HTTP {decided.status_code} -> {decided.json()['status']}")
        again = client.post(
            f"/api/review/{pmid}", json={"label": "reject", "curator": "demo"}
        )
        print(f"second decision on {pmid}: HTTP {again.status_code} (conflict expected)")

    trending = client.get("/api/stats/trending").json()
    print(f"\ntrending widget: {len(trending['items'])} items")
    print("snapshot id header:", client.get("/api/stats/overview").headers["X-Snapshot-Id"])
