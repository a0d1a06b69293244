#!/usr/bin/env python3
"""Record API payloads from a real fixture server into tests/fixtures/.

The contract tests replay these recordings against the UI's view-model
builders, so every number the UI shows is checked field-for-field against
what the backend actually serves. Re-run after changing API payload shapes:

    python3 record_fixtures.py
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).parent.parent
sys.path.insert(0, str(REPO / "src"))

from fastapi.testclient import TestClient  # noqa: E402

from lithub import HubConfig, parse_record, run_daily, train_topics, train_triage  # noqa: E402
from lithub.logistic import Hyper  # noqa: E402
from lithub.service import create_app  # noqa: E402

FIXTURES = REPO / "tests" / "fixtures"
OUT = Path(__file__).parent / "tests" / "fixtures"


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        root = Path(tmp)
        (root / "models").mkdir()
        records = [parse_record(l) for l in open(FIXTURES / "corpus_1000.jsonl") if l.strip()]
        truth = {
            int(k): v
            for k, v in json.load(open(FIXTURES / "corpus_1000_truth.json")).items()
        }
        triage_labeled = [
            (parse_record(l), bool(json.loads(l)["relevant"]))
            for l in open(FIXTURES / "triage_train.jsonl")
            if l.strip()
        ]
        triage_labeled += [(r, truth[r.pmid]["relevant"]) for r in records[:200]]
        train_triage(triage_labeled, min_df=2).save(root / "models" / "triage.json")
        relevant = [r for r in records if truth[r.pmid]["relevant"]]
        train_topics(
            [(r, set(truth[r.pmid]["topics"])) for r in relevant[:800]],
            hyper=Hyper(epochs=250),
            min_df=2,
        ).save(root / "models" / "topics.json")
        (root / "config.json").write_text(
            json.dumps(
                {
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
            )
        )
        config = HubConfig.from_file(root / "config.json")
        run_daily(FIXTURES / "corpus_1000.jsonl", config)
        client = TestClient(create_app(config))

        recordings: dict[str, str] = {
            "search_default.json": "/api/search?size=20",
            "search_filtered.json": "/api/search?topic=Treatment&variant=STRAIN:Omicron&size=20",
            "search_comention.json": "/api/search?variant=STRAIN:Omicron&vaccine=VAX:BNT162b2&size=50",
            "queue.json": "/api/review/queue?k=10",
            "overview.json": "/api/stats/overview",
            "growth_month.json": "/api/stats/growth?granularity=month",
            "cooccurrence.json": "/api/stats/cooccurrence",
            "trending.json": "/api/stats/trending",
        }
        for name, path in recordings.items():
            response = client.get(path)
            response.raise_for_status()
            (OUT / name).write_text(json.dumps(response.json(), indent=1))
            print(f"recorded {name} <- {path}")
        snapshot = client.get("/api/stats/overview").headers["X-Snapshot-Id"]
        (OUT / "meta.json").write_text(json.dumps({"snapshot_id": snapshot}))
        print(f"snapshot: {snapshot}")


if __name__ == "__main__":
    main()
