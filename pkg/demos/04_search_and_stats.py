#!/usr/bin/env python3
"""Walkthrough: faceted search with BM25 ranking and the collection analytics
behind the dashboard (growth, share ratio, co-occurrence, trending).

Run from the repo root: python3 demos/04_search_and_stats.py
"""

import json
from pathlib import Path

from lithub import (
    DocAnnotations,
    FacetQuery,
    SearchIndex,
    cooccurrence,
    growth,
    parse_query,
    parse_record,
    share_ratio,
    trending,
)
from lithub.stats import load_baseline, load_trending

FIXTURES = Path(__file__).parent.parent / "tests" / "fixtures"

records = [parse_record(l) for l in open(FIXTURES / "corpus_1000.jsonl") if l.strip()]
truth = {int(k): v for k, v in json.load(open(FIXTURES / "corpus_1000_truth.json")).items()}
annotations = {
    pmid: DocAnnotations(
        topics=frozenset(t["topics"]),
        strains=frozenset(t["strains"]),
        vaccines=frozenset(t["vaccines"]),
        drugs=frozenset(t["drugs"]),
    )
    for pmid, t in truth.items()
}
index = SearchIndex.build(records, annotations)
print(f"indexed {len(index)} documents")

# --- the co-mention query from the curator workflow ---------------------------

query = parse_query("variant:STRAIN:Omicron vaccine:VAX:BNT162b2", page_size=5)
result = index.search(query)
print(f"\nOmicron + BNT162b2 co-mentions: {result.total} documents")
for hit in result.hits:
    print(f"  {hit.pmid}  {hit.pub_date}")

# --- BM25 relevance vs date ordering ------------------------------------------

for sort in ("relevance", "date_desc"):
    result = index.search(FacetQuery(text="remdesivir therapy", sort=sort, page_size=3))
    print(f"\ntop 3 for 'remdesivir therapy' sorted by {sort}:")
    for hit in result.hits:
        print(f"  {hit.pmid}  score={hit.score:.3f}  {hit.pub_date}")

# --- facet counts drive the filter sidebar ------------------------------------

counts = index.search(FacetQuery(filters={"topic": frozenset(["Long COVID"])})).facet_counts
top_variants = sorted(counts["variant"].items(), key=lambda kv: -kv[1])[:3]
print("\nvariant counts under the Long COVID filter:", top_variants)

# --- dashboard numbers ---------------------------------------------------------

series = growth(records, "month")
print(f"\nmonthly growth: {len(series.rows)} periods, "
      f"final cumulative = {series.total}")
print("  first three rows:", [(r.period, r.new, r.cumulative) for r in series.rows[:3]])

baseline = load_baseline(FIXTURES / "baseline_month.tsv")
ratios = share_ratio(series, baseline)
period, ratio = ratios[len(ratios) // 2]
print(f"  share of the whole corpus in {period}: {ratio:.1%}")

matrix = cooccurrence([frozenset(t["topics"]) for t in truth.values()])
lc_dx = matrix.entry("Long COVID", "Diagnosis")
print(f"\nLong COVID co-occurs with Diagnosis in {lc_dx} articles")

external = load_trending(FIXTURES / "trending.tsv")
print("\ntrending in the collection (top 6 by external score):")
for pmid, score in trending({r.pmid for r in records}, external):
    print(f"  {pmid}  score={score:.3f}")
