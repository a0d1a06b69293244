"""Collection analytics: growth series, corpus-share ratios, topic
co-occurrence, topics-per-article distribution, and trending publications."""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import PeriodMismatch
from .store import CitationRecord
from .topics import DEFAULT_TOPICS, topic_distribution

GRANULARITIES = ("day", "month", "quarter")


@dataclass(frozen=True)
class GrowthRow:
    period: str
    new: int
    cumulative: int


@dataclass(frozen=True)
class GrowthSeries:
    granularity: str
    rows: tuple[GrowthRow, ...]

    @property
    def total(self) -> int:
        return self.rows[-1].cumulative if self.rows else 0


def _period_of(pub_date: str, granularity: str) -> str:
    d = date.fromisoformat(pub_date)
    if granularity == "day":
        return d.isoformat()
    if granularity == "month":
        return f"{d.year:04d}-{d.month:02d}"
    if granularity == "quarter":
        return f"{d.year:04d}-Q{(d.month - 1) // 3 + 1}"
    raise ValueError(f"unknown granularity: {granularity}")


def _next_period(period: str, granularity: str) -> str:
    if granularity == "day":
        return (date.fromisoformat(period) + timedelta(days=1)).isoformat()
    if granularity == "month":
        year, month = int(period[:4]), int(period[5:7])
        month += 1
        if month > 12:
            year, month = year + 1, 1
        return f"{year:04d}-{month:02d}"
    year, quarter = int(period[:4]), int(period[6])
    quarter += 1
    if quarter > 4:
        year, quarter = year + 1, 1
    return f"{year:04d}-Q{quarter}"


def growth(records: Iterable[CitationRecord], granularity: str = "month") -> GrowthSeries:
    """New and cumulative counts per period, bucketed by pub_date.

    Empty periods between the first and last are emitted with zero new
    counts, so the series plots without gaps.
    """
    if granularity not in GRANULARITIES:
        raise ValueError(f"granularity must be one of {GRANULARITIES}")
    counts: dict[str, int] = {}
    for record in records:
        period = _period_of(record.pub_date, granularity)
        counts[period] = counts.get(period, 0) + 1
    if not counts:
        return GrowthSeries(granularity, ())
    rows: list[GrowthRow] = []
    period = min(counts)
    last = max(counts)
    cumulative = 0
    while True:
        new = counts.get(period, 0)
        cumulative += new
        rows.append(GrowthRow(period, new, cumulative))
        if period == last:
            break
        period = _next_period(period, granularity)
    return GrowthSeries(granularity, tuple(rows))


def share_ratio(
    series: GrowthSeries, baseline: Mapping[str, int]
) -> list[tuple[str, float | None]]:
    """Per-period collection/baseline ratio; a zero baseline yields None.

    The baseline must cover every period in the series, else PeriodMismatch.
    """
    out: list[tuple[str, float | None]] = []
    for row in series.rows:
        if row.period not in baseline:
            raise PeriodMismatch(f"baseline lacks period {row.period}")
        denom = baseline[row.period]
        out.append((row.period, row.new / denom if denom else None))
    return out


@dataclass(frozen=True)
class CooccurrenceMatrix:
    topics: tuple[str, ...]
    matrix: np.ndarray  # (K, K); diagonal = per-topic article counts

    def entry(self, a: str, b: str) -> int:
        i, j = self.topics.index(a), self.topics.index(b)
        return int(self.matrix[i, j])


def cooccurrence(
    assigned_sets: Iterable[frozenset[str] | set[str]],
    topics: Sequence[str] = DEFAULT_TOPICS,
) -> CooccurrenceMatrix:
    """(i, j) = number of articles annotated with both topics."""
    topics = tuple(topics)
    index = {t: i for i, t in enumerate(topics)}
    matrix = np.zeros((len(topics), len(topics)), dtype=int)
    for assigned in assigned_sets:
        present = sorted(index[t] for t in assigned if t in index)
        for a in present:
            for b in present:
                matrix[a, b] += 1
    return CooccurrenceMatrix(topics, matrix)


# Topics-per-article histogram; the topic annotator owns the implementation.
per_article_distribution = topic_distribution


def trending(
    members: Iterable[int],
    external: Iterable[tuple[int, float]],
    top_n: int = 6,
) -> list[tuple[int, float]]:
    """Externally trending pmids filtered to collection members, score-ranked."""
    members = set(members)
    kept = [(pmid, score) for pmid, score in external if pmid in members]
    kept.sort(key=lambda t: (-t[1], -t[0]))
    return kept[:top_n]


def load_baseline(path: str | Path) -> dict[str, int]:
    """period<TAB>count rows."""
    out: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            period, count = line.split("\t")
            out[period] = int(count)
    return out


def load_trending(path: str | Path) -> list[tuple[int, float]]:
    """pmid<TAB>score rows."""
    out: list[tuple[int, float]] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            pmid, score = line.split("\t")
            out.append((int(pmid), float(score)))
    return out


def growth_csv(series: GrowthSeries) -> str:
    lines = ["period,new,cumulative"]
    lines += [f"{r.period},{r.new},{r.cumulative}" for r in series.rows]
    return "\n".join(lines) + "\n"
