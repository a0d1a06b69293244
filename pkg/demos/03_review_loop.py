#!/usr/bin/env python3
"""Walkthrough: the human-in-the-loop review queue for the emerging-topic
collection — signals, uncertainty-ordered review, retraining, membership.

Run from the repo root: python3 demos/03_review_loop.py
"""

import json
from pathlib import Path

from lithub import Lexicon, LongCovidLoop, LoopResources
from lithub.loop import load_seed_labels

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

from lithub import parse_record

corpus = [parse_record(l) for l in open(FIXTURES / "loop_corpus.jsonl") if l.strip()]
truth = {int(k): v for k, v in json.load(open(FIXTURES / "loop_truth.json")).items()}

resources = LoopResources(
    synonyms=Lexicon.load(FIXTURES / "longcovid_synonyms.tsv", allowed_types=("synonym",)),
    symptoms=Lexicon.load(FIXTURES / "symptoms.tsv", allowed_types=("symptom",)),
)
loop = LongCovidLoop(
    corpus,
    resources=resources,
    seed_labels=load_seed_labels(FIXTURES / "loop_seed.tsv"),
    min_df=2,
)
print(f"queue initialized: {len(loop.pending())} pending candidates, "
      f"{len(loop.items) - len(loop.pending())} seed labels")

batch = loop.next_review_batch(3)
print("\nmost uncertain items (reviewed first):")
for item in batch:
    s = item.signals
    print(f"  pmid {item.pmid}  p={item.p:.3f}  priority={item.priority:.3f}")
    print(f"    synonyms={s.s1:.0f} title={s.s2:.0f} symptoms/100tok={s.s6:.1f} "
          f"cues={s.s7:.0f} journal-prior={s.s8:.2f}")

# A scripted oracle curator stands in for a human here.
for iteration in range(3):
    for item in loop.next_review_batch(25):
        label = "accept" if truth[item.pmid]["positive"] else "reject"
        loop.record_decision(item.pmid, label, curator="oracle")
    loop.run_iteration()
    decided = sum(1 for it in loop.items.values() if it.status != "pending")
    print(f"\niteration {loop.iteration}: {len(loop.log)} decisions logged, "
          f"{decided} items decided")
    weights = ", ".join(f"{w:+.2f}" for w in loop.meta.weights)
    print(f"  meta-model weights over scaled signals: [{weights}]")

membership = loop.collection_membership()
print(f"\ncollection membership at auto-include 0.9:")
print(f"  curator-accepted: {len(membership.accepted)}")
print(f"  provisional (machine, p >= 0.9): {len(membership.provisional)}")

name_free = [p for p, t in truth.items() if t["positive"] and t["name_free"]]
caught = [
    p for p in name_free
    if loop.items[p].status == "accepted" or loop.items[p].p >= 0.5
]
print(f"\npositives that never name the topic: {len(name_free)}; "
      f"recovered by the loop: {len(caught)}")
