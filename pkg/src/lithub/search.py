"""Inverted-index search with conjunctive faceted filtering and BM25 ranking.

Semantics, pinned so an independent linear scan can verify them exactly:

  - free text matches a document when ALL query tokens occur in its
    title+abstract (title and abstract share one field);
  - filters are ANDed across facets; multiple values within one facet OR;
  - relevance = BM25 with k1=1.2, b=0.75, title tokens double-weighted
    (a title occurrence counts as two, and document length counts it twice);
  - relevance ties break by pmid descending; date sort is pub_date
    descending, tie by pmid descending.
"""

from __future__ import annotations

import math
import shlex
from collections import Counter
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import AnnotationMismatch, BadFacet, BadPage
from .store import CitationRecord
from .text import surfaces

FACETS = ("topic", "variant", "vaccine", "drug", "journal")

BM25_K1 = 1.2
BM25_B = 0.75
MAX_PAGE_SIZE = 500


@dataclass(frozen=True)
class DocAnnotations:
    topics: frozenset[str] = frozenset()
    strains: frozenset[str] = frozenset()
    vaccines: frozenset[str] = frozenset()
    drugs: frozenset[str] = frozenset()
    provisional_longcovid: bool = False


@dataclass(frozen=True)
class FacetQuery:
    text: str = ""
    filters: Mapping[str, frozenset[str]] = field(default_factory=dict)
    date_from: str | None = None
    date_to: str | None = None
    page: int = 1
    page_size: int = 50
    sort: str = "date_desc"  # relevance | date_desc


@dataclass(frozen=True)
class SearchHit:
    pmid: int
    score: float
    pub_date: str
    provisional_longcovid: bool = False


@dataclass(frozen=True)
class SearchResult:
    total: int
    hits: tuple[SearchHit, ...]
    facet_counts: dict[str, dict[str, int]]


@dataclass(frozen=True)
class IndexedDocument:
    pmid: int
    journal: str
    pub_date: str
    term_freq: Mapping[str, int]  # abstract tf + 2x title tf
    length: int  # sum of weighted term frequencies
    annotations: DocAnnotations

    def facet_values(self, facet: str) -> frozenset[str]:
        ann = self.annotations
        if facet == "topic":
            return ann.topics
        if facet == "variant":
            return ann.strains
        if facet == "vaccine":
            return ann.vaccines
        if facet == "drug":
            return ann.drugs
        if facet == "journal":
            return frozenset((self.journal,)) if self.journal else frozenset()
        raise BadFacet(facet)


def _index_document(record: CitationRecord, ann: DocAnnotations) -> IndexedDocument:
    tf: Counter[str] = Counter()
    for token in surfaces(record.title):
        tf[token] += 2
    for token in surfaces(record.abstract):
        tf[token] += 1
    return IndexedDocument(
        pmid=record.pmid,
        journal=record.journal,
        pub_date=record.pub_date,
        term_freq=dict(tf),
        length=sum(tf.values()),
        annotations=ann,
    )


class SearchIndex:
    """Immutable snapshot; build a successor via update() and swap."""

    def __init__(self, docs: dict[int, IndexedDocument]):
        self.docs = docs
        self._postings: dict[str, set[int]] = {}
        for pmid, doc in docs.items():
            for term in doc.term_freq:
                self._postings.setdefault(term, set()).add(pmid)
        n = len(docs)
        self._avgdl = (sum(d.length for d in docs.values()) / n) if n else 0.0

    @classmethod
    def build(
        cls,
        records: Iterable[CitationRecord],
        annotations: Mapping[int, DocAnnotations] | None = None,
    ) -> "SearchIndex":
        records = {r.pmid: r for r in records}
        annotations = dict(annotations or {})
        for pmid in annotations:
            if pmid not in records:
                raise AnnotationMismatch(f"annotation for unknown pmid {pmid}")
        docs = {
            pmid: _index_document(rec, annotations.get(pmid, DocAnnotations()))
            for pmid, rec in records.items()
        }
        return cls(docs)

    def update(
        self,
        records: Iterable[CitationRecord],
        annotations: Mapping[int, DocAnnotations] | None = None,
    ) -> "SearchIndex":
        """A new index equal to rebuilding over the union (delta overrides)."""
        records = {r.pmid: r for r in records}
        annotations = dict(annotations or {})
        for pmid in annotations:
            if pmid not in records and pmid not in self.docs:
                raise AnnotationMismatch(f"annotation for unknown pmid {pmid}")
        docs = dict(self.docs)
        for pmid, rec in records.items():
            prior = docs.get(pmid)
            ann = annotations.get(
                pmid, prior.annotations if prior else DocAnnotations()
            )
            docs[pmid] = _index_document(rec, ann)
        for pmid, ann in annotations.items():
            if pmid not in records:
                docs[pmid] = replace(docs[pmid], annotations=ann)
        return SearchIndex(docs)

    def __len__(self) -> int:
        return len(self.docs)

    # -- matching -----------------------------------------------------------

    def _text_matches(self, text: str) -> set[int]:
        tokens = surfaces(text)
        if not tokens:
            return set(self.docs)
        hit: set[int] | None = None
        for token in set(tokens):
            postings = self._postings.get(token, set())
            hit = postings.copy() if hit is None else hit & postings
            if not hit:
                return set()
        return hit or set()

    def _passes_filters(self, doc: IndexedDocument, query: FacetQuery) -> bool:
        if query.date_from and doc.pub_date < query.date_from:
            return False
        if query.date_to and doc.pub_date > query.date_to:
            return False
        for facet, values in query.filters.items():
            if not values:
                continue
            if not (doc.facet_values(facet) & values):
                return False
        return True

    def _hit_set(self, query: FacetQuery) -> set[int]:
        candidates = self._text_matches(query.text)
        return {
            pmid
            for pmid in candidates
            if self._passes_filters(self.docs[pmid], query)
        }

    def _bm25(self, pmid: int, query_tokens: list[str]) -> float:
        doc = self.docs[pmid]
        n = len(self.docs)
        score = 0.0
        for token in query_tokens:
            tf = doc.term_freq.get(token, 0)
            if tf == 0:
                continue
            df = len(self._postings.get(token, ()))
            idf = math.log(1.0 + (n - df + 0.5) / (df + 0.5))
            denom = tf + BM25_K1 * (
                1.0 - BM25_B + BM25_B * doc.length / self._avgdl
            )
            score += idf * tf * (BM25_K1 + 1.0) / denom
        return score

    def _order(self, pmids: set[int], query: FacetQuery) -> list[tuple[int, float]]:
        if query.sort == "relevance":
            tokens = surfaces(query.text)
            scored = [(pmid, self._bm25(pmid, tokens)) for pmid in pmids]
            scored.sort(key=lambda t: (-t[1], -t[0]))
            return scored
        if query.sort == "date_desc":
            ordered = sorted(
                pmids, key=lambda p: (self.docs[p].pub_date, p), reverse=True
            )
            return [(pmid, 0.0) for pmid in ordered]
        raise ValueError(f"unknown sort: {query.sort}")

    def ordered_hits(self, query: FacetQuery) -> list[tuple[int, float]]:
        """Full (pmid, score) hit list in query order, unpaginated."""
        for facet in query.filters:
            if facet not in FACETS:
                raise BadFacet(facet)
        return self._order(self._hit_set(query), query)

    def search(self, query: FacetQuery) -> SearchResult:
        if query.page < 1:
            raise BadPage(f"page must be >= 1, got {query.page}")
        if not 1 <= query.page_size <= MAX_PAGE_SIZE:
            raise BadPage(
                f"page_size must be in [1, {MAX_PAGE_SIZE}], got {query.page_size}"
            )
        ordered = self.ordered_hits(query)
        hit_set = {pmid for pmid, _ in ordered}
        lo = (query.page - 1) * query.page_size
        page = ordered[lo : lo + query.page_size]
        hits = tuple(
            SearchHit(
                pmid=pmid,
                score=score,
                pub_date=self.docs[pmid].pub_date,
                provisional_longcovid=self.docs[pmid].annotations.provisional_longcovid,
            )
            for pmid, score in page
        )
        return SearchResult(
            total=len(hit_set),
            hits=hits,
            facet_counts=self.facet_counts(query),
        )

    def facet_counts(self, query: FacetQuery) -> dict[str, dict[str, int]]:
        """Multi-select faceting: each facet's counts ignore its own filter."""
        counts: dict[str, dict[str, int]] = {}
        for facet in FACETS:
            remaining = {f: v for f, v in query.filters.items() if f != facet}
            sub_query = replace(query, filters=remaining)
            hit_set = self._hit_set(sub_query)
            tally: dict[str, int] = {}
            for pmid in hit_set:
                for value in self.docs[pmid].facet_values(facet):
                    tally[value] = tally.get(value, 0) + 1
            counts[facet] = dict(sorted(tally.items()))
        return counts


def parse_query(raw: str, page: int = 1, page_size: int = 50, sort: str = "date_desc") -> FacetQuery:
    """CLI/API grammar: free text, repeated facet:value pairs, from:/to: dates.

    Values containing spaces can be quoted, e.g. journal:"J Synth Med".
    """
    text_parts: list[str] = []
    filters: dict[str, set[str]] = {}
    date_from = date_to = None
    for token in shlex.split(raw):
        head, sep, value = token.partition(":")
        if not sep:
            text_parts.append(token)
            continue
        if head == "from":
            date_from = value
        elif head == "to":
            date_to = value
        elif head in FACETS:
            filters.setdefault(head, set()).add(value)
        else:
            text_parts.append(token)
    return FacetQuery(
        text=" ".join(text_parts),
        filters={f: frozenset(v) for f, v in filters.items()},
        date_from=date_from,
        date_to=date_to,
        page=page,
        page_size=page_size,
        sort=sort,
    )
