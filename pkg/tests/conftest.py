from __future__ import annotations

import json
from pathlib import Path

import pytest

from lithub.store import CitationRecord, parse_record

FIXTURES = Path(__file__).parent / "fixtures"


def read_corpus(name: str) -> list[CitationRecord]:
    records = []
    with open(FIXTURES / name, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                records.append(parse_record(line))
    return records


def read_labeled(name: str, key: str) -> list[tuple[CitationRecord, bool]]:
    """Records plus a boolean ground-truth key carried on the JSON line."""
    pairs = []
    with open(FIXTURES / name, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                pairs.append((parse_record(line), bool(json.loads(line)[key])))
    return pairs


def make_record(pmid=1, title="A study.", abstract="", **kwargs) -> CitationRecord:
    kwargs.setdefault("pub_date", "2021-06-01")
    return CitationRecord(pmid=pmid, title=title, abstract=abstract, **kwargs)


@pytest.fixture(scope="session")
def corpus_1000():
    return read_corpus("corpus_1000.jsonl")


@pytest.fixture(scope="session")
def corpus_truth():
    with open(FIXTURES / "corpus_1000_truth.json", encoding="utf-8") as fh:
        return {int(k): v for k, v in json.load(fh).items()}


@pytest.fixture(scope="session")
def entity_lexicon():
    from lithub.entities import Lexicon

    return Lexicon.load(FIXTURES / "lexicon.tsv")


@pytest.fixture(scope="session")
def hub_env(tmp_path_factory, corpus_1000, corpus_truth):
    """A ready-to-run hub home: trained models, config, and the delta file."""
    from lithub.logistic import Hyper
    from lithub.topics import train_topics
    from lithub.triage import train_triage

    root = tmp_path_factory.mktemp("hub")
    models = root / "models"
    models.mkdir()

    triage_labeled = read_labeled("triage_train.jsonl", "relevant")
    triage_labeled += [(r, corpus_truth[r.pmid]["relevant"]) for r in corpus_1000[:200]]
    train_triage(triage_labeled, min_df=2).save(models / "triage.json")

    relevant = [r for r in corpus_1000 if corpus_truth[r.pmid]["relevant"]]
    topic_labeled = [(r, set(corpus_truth[r.pmid]["topics"])) for r in relevant[:800]]
    train_topics(topic_labeled, hyper=Hyper(epochs=250), min_df=2).save(
        models / "topics.json"
    )

    config = {
        "data_dir": "data",
        "triage_model": "models/triage.json",
        "topics_model": "models/topics.json",
        "lexicon": str(FIXTURES / "lexicon.tsv"),
        "synonyms": str(FIXTURES / "longcovid_synonyms.tsv"),
        "symptoms": str(FIXTURES / "symptoms.tsv"),
        "drug_mentions": str(FIXTURES / "drug_mentions.tsv"),
        "baseline": str(FIXTURES / "baseline_month.tsv"),
        "trending": str(FIXTURES / "trending.tsv"),
        "seed_labels": str(FIXTURES / "loop_seed.tsv"),
        "auto_include": 0.9,
    }
    (root / "config.json").write_text(json.dumps(config))
    delta = root / "delta.jsonl"
    delta.write_text((FIXTURES / "corpus_1000.jsonl").read_text())
    return root
