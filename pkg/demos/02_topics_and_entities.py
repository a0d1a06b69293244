#!/usr/bin/env python3
"""Walkthrough: multi-label topic annotation and lexicon-driven entity
recognition with normalization and funder linking.

Run from the repo root: python3 demos/02_topics_and_entities.py
"""

import json
from pathlib import Path

from lithub import (
    Lexicon,
    annotate_record,
    annotate_topics,
    link_funder,
    parse_record,
    recognize,
    topic_distribution,
    train_topics,
)
from lithub.logistic import Hyper

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

records = [parse_record(l) for l in open(FIXTURES / "corpus_1000.jsonl") if l.strip()]
truth = {int(k): v for k, v in json.load(open(FIXTURES / "corpus_1000_truth.json")).items()}
relevant = [r for r in records if truth[r.pmid]["relevant"]]

# --- joint multi-label training: one run, all eight heads ---------------------

labeled = [(r, set(truth[r.pmid]["topics"])) for r in relevant[:800]]
model = train_topics(labeled, hyper=Hyper(epochs=250), min_df=2)
print(f"trained {len(model.topics)} topic heads over a "
      f"{len(model.vocab)}-term shared vocabulary")

sample = relevant[-5:]
for record in sample:
    ann = annotate_topics(record, model)
    assigned = ", ".join(sorted(ann.assigned)) or "(none)"
    print(f"\npmid {record.pmid}: {record.title[:60]}")
    print(f"  assigned: {assigned}")
    print(f"  gold:     {', '.join(truth[record.pmid]['topics']) or '(none)'}")

hist = topic_distribution(
    [frozenset(truth[r.pmid]["topics"]) for r in relevant], n_topics=8
)
one_or_two = (hist[1] + hist[2]) / sum(hist.values())
print(f"\ntopics-per-article histogram: { {k: v for k, v in hist.items() if v} }")
print(f"fraction with one or two topics: {one_or_two:.2f}")

# --- entity recognition: longest match, ambiguity gating, funder links --------

lexicon = Lexicon.load(FIXTURES / "lexicon.tsv")
for text in (
    "The Beta variant reduced BNT162b2 neutralization titers.",
    "We fit a beta distribution to the cost data.",  # no cue -> no mention
    "Omicron BA.4.5 detections rose after the variant wave.",
):
    mentions = recognize(text, lexicon)
    print(f"\n{text}")
    for m in mentions:
        print(f"  [{m.start}:{m.end}] {m.surface!r} -> {m.entity_type} {m.concept_id}")
    if not mentions:
        print("  (no mentions; ambiguous surface without a context cue)")

vaccine_doc = parse_record(json.dumps({
    "pmid": 7,
    "title": "Effectiveness of mRNA-1273 boosters.",
    "abstract": "Two doses of mRNA-1273 were compared with ChAdOx1.",
    "pub_date": "2022-01-01",
}))
for mention in annotate_record(vaccine_doc, lexicon):
    funder = link_funder(mention.concept_id, lexicon) if mention.entity_type == "vaccine" else None
    suffix = f" (funder: {funder})" if funder else ""
    print(f"pmid {mention.pmid} {mention.field}: {mention.surface} -> {mention.concept_id}{suffix}")
