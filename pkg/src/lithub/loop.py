"""Iterative human-in-the-loop collection building for an emerging topic.

Each candidate article gets an 8-component signal vector:

  s1  synonym-mention count (topic synonym lexicon, longest match)
  s2  title-mention flag (0/1)
  s3  relevance probability from the triage model
  s4  probability from a unigram logistic model
  s5  probability from a bigram logistic model
  s6  symptom-term density (symptom lexicon hits per 100 tokens)
  s7  temporal-persistence cue count ("months after", "persistent", ...)
  s8  smoothed journal prior (historical positive rate, Laplace-smoothed)

A logistic meta-model aggregates the scaled signals into a probability p;
review priority is 1 - |2p - 1| (uncertainty sampling), so the most
ambiguous articles reach curators first. Curator decisions append to a log
and drive retraining of the sub-models and the meta-model each iteration;
a logged decision is never overridden by retraining.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    AlreadyDecided,
    NoNewLabels,
    NonFiniteSignal,
    NotFound,
)
from .logistic import Hyper, features_to_matrix, sigmoid, train_logistic
from .entities import Lexicon, recognize
from .store import CitationRecord
from .text import (
    Vocabulary,
    bigrams,
    build_vocabulary_from_tokens,
    featurize_tokens,
    record_text,
    surfaces,
)
from .triage import LinearModel

N_SIGNALS = 8
# indices of the unbounded count signals that get min-max scaled
_SCALED = (0, 5, 6)

DEFAULT_PERSISTENCE_CUES = (
    "months after",
    "weeks after",
    "persistent",
    "persisting",
    "prolonged",
    "lingering",
    "sequelae",
    "post-acute",
    "ongoing symptoms",
    "long-term",
)

DEFAULT_AUTO_INCLUDE = 0.9


@dataclass(frozen=True)
class SignalVector:
    s1: float  # synonym-mention count
    s2: float  # title-mention flag
    s3: float  # triage probability
    s4: float  # unigram model probability
    s5: float  # bigram model probability
    s6: float  # symptom density per 100 tokens
    s7: float  # persistence cue count
    s8: float  # journal prior

    def as_array(self) -> np.ndarray:
        return np.array(
            [self.s1, self.s2, self.s3, self.s4, self.s5, self.s6, self.s7, self.s8]
        )

    @classmethod
    def from_array(cls, arr: Sequence[float]) -> "SignalVector":
        return cls(*(float(x) for x in arr))


@dataclass
class NgramModel:
    """Logistic model over a unigram or bigram alphabet."""

    vocab: Vocabulary
    weights: np.ndarray
    bias: float
    order: int  # 1 or 2

    def terms(self, record: CitationRecord) -> list[str]:
        tokens = surfaces(record_text(record))
        return tokens if self.order == 1 else bigrams(tokens)

    def score(self, record: CitationRecord) -> float:
        fv = featurize_tokens(self.terms(record), self.vocab)
        z = self.bias + sum(self.weights[i] * w for i, w in fv.items())
        return sigmoid(z)

    def as_dict(self) -> dict:
        return {
            "order": self.order,
            "bias": self.bias,
            "weights": self.weights.tolist(),
            "vocab": {
                "n_docs": self.vocab.n_docs,
                "terms": list(self.vocab.terms),
                "df": list(self.vocab.df),
            },
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "NgramModel":
        vocab = Vocabulary(
            dict(zip(obj["vocab"]["terms"], obj["vocab"]["df"])),
            obj["vocab"]["n_docs"],
        )
        return cls(
            vocab=vocab,
            weights=np.asarray(obj["weights"], dtype=float),
            bias=float(obj["bias"]),
            order=int(obj["order"]),
        )


@dataclass
class JournalPrior:
    per_journal: dict[str, tuple[int, int]] = field(default_factory=dict)  # (pos, n)
    global_pos: int = 0
    global_n: int = 0

    def prior(self, journal: str) -> float:
        counts = self.per_journal.get(journal)
        if counts is not None and counts[1] > 0:
            pos, n = counts
            return (pos + 1) / (n + 2)
        return self.base_rate()

    def base_rate(self) -> float:
        if self.global_n == 0:
            return 0.5
        return (self.global_pos + 1) / (self.global_n + 2)

    @classmethod
    def from_labels(
        cls, records: Iterable[CitationRecord], labels: Mapping[int, bool]
    ) -> "JournalPrior":
        jp = cls()
        for record in records:
            label = labels.get(record.pmid)
            if label is None:
                continue
            pos, n = jp.per_journal.get(record.journal, (0, 0))
            jp.per_journal[record.journal] = (pos + int(label), n + 1)
            jp.global_pos += int(label)
            jp.global_n += 1
        return jp


@dataclass
class LoopResources:
    """Pluggable signal providers; any absent resource yields its default."""

    synonyms: Lexicon | None = None
    symptoms: Lexicon | None = None
    cues: Lexicon | None = None
    triage_model: LinearModel | None = None

    def __post_init__(self):
        if self.cues is None:
            self.cues = Lexicon.from_phrases(
                DEFAULT_PERSISTENCE_CUES, "cue", "CUE"
            )


@dataclass
class MetaModel:
    weights: np.ndarray
    bias: float
    scale_max: np.ndarray  # divisor for the count signals; 1.0 elsewhere

    @classmethod
    def default(cls) -> "MetaModel":
        return cls(
            weights=np.full(N_SIGNALS, 1.0 / N_SIGNALS),
            bias=0.0,
            scale_max=np.ones(N_SIGNALS),
        )

    def scale(self, raw: np.ndarray) -> np.ndarray:
        scaled = raw.astype(float).copy()
        for i in _SCALED:
            scaled[i] = raw[i] / self.scale_max[i]
        return scaled

    def as_dict(self) -> dict:
        return {
            "weights": self.weights.tolist(),
            "bias": self.bias,
            "scale_max": self.scale_max.tolist(),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "MetaModel":
        return cls(
            weights=np.asarray(obj["weights"], dtype=float),
            bias=float(obj["bias"]),
            scale_max=np.asarray(obj["scale_max"], dtype=float),
        )


def aggregate(signals: SignalVector, meta: MetaModel | None = None) -> tuple[float, float]:
    """(p, priority) from a signal vector; priority peaks at p = 0.5."""
    meta = meta or MetaModel.default()
    raw = signals.as_array()
    if not np.all(np.isfinite(raw)):
        raise NonFiniteSignal(f"non-finite signal in {signals}")
    p = sigmoid(float(meta.weights @ meta.scale(raw) + meta.bias))
    priority = 1.0 - abs(2.0 * p - 1.0)
    return p, priority


@dataclass
class ReviewItem:
    pmid: int
    signals: SignalVector
    p: float
    priority: float
    status: str = "pending"  # pending | accepted | rejected
    decided_by: str | None = None
    decided_at: str | None = None
    iteration: int = 0


@dataclass(frozen=True)
class LoopDecision:
    pmid: int
    label: str  # accepted | rejected
    curator: str
    timestamp: str
    iteration: int

    def to_line(self) -> str:
        return f"{self.pmid}\t{self.label}\t{self.curator}\t{self.timestamp}\t{self.iteration}"

    @classmethod
    def from_line(cls, line: str) -> "LoopDecision":
        pmid, label, curator, timestamp, iteration = line.rstrip("\n").split("\t")
        return cls(int(pmid), label, curator, timestamp, int(iteration))


@dataclass(frozen=True)
class Membership:
    accepted: frozenset[int]
    provisional: frozenset[int]

    @property
    def members(self) -> frozenset[int]:
        return self.accepted | self.provisional


def _count_hits(lexicon: Lexicon | None, *texts: str) -> int:
    if lexicon is None:
        return 0
    return sum(len(recognize(t, lexicon)) for t in texts)


class LongCovidLoop:
    """Review queue plus per-iteration retraining over a fixed candidate corpus."""

    def __init__(
        self,
        records: Iterable[CitationRecord],
        resources: LoopResources | None = None,
        seed_labels: Mapping[int, bool] | None = None,
        auto_include: float = DEFAULT_AUTO_INCLUDE,
        hyper: Hyper | None = None,
        min_df: int = 1,
        log_path: str | Path | None = None,
    ):
        self.resources = resources or LoopResources()
        self.auto_include = auto_include
        self.hyper = hyper or Hyper()
        self.min_df = min_df
        self.log_path = Path(log_path) if log_path else None
        self.records: dict[int, CitationRecord] = {r.pmid: r for r in records}
        self.unigram_model: NgramModel | None = None
        self.bigram_model: NgramModel | None = None
        self.journal_prior = JournalPrior()
        self.meta = MetaModel.default()
        self.iteration = 0
        self.log: list[LoopDecision] = []
        self._trained_log_len = 0
        self.items: dict[int, ReviewItem] = {}
        seed_labels = dict(seed_labels or {})
        for pmid in sorted(self.records):
            label = seed_labels.get(pmid)
            item = self._make_item(self.records[pmid])
            if label is not None:
                item.status = "accepted" if label else "rejected"
                item.decided_by = "seed"
                item.decided_at = "seed"
            self.items[pmid] = item
        self._rescale()
        self._rescore_all()

    # -- signals ------------------------------------------------------------

    def compute_signals(self, record: CitationRecord) -> SignalVector:
        res = self.resources
        title, abstract = record.title, record.abstract
        s1 = float(_count_hits(res.synonyms, title, abstract))
        s2 = 1.0 if _count_hits(res.synonyms, title) else 0.0
        s3 = res.triage_model.score(record) if res.triage_model else 0.5
        s4 = self.unigram_model.score(record) if self.unigram_model else 0.5
        s5 = self.bigram_model.score(record) if self.bigram_model else 0.5
        n_tokens = len(surfaces(record_text(record)))
        hits = _count_hits(res.symptoms, title, abstract)
        s6 = 100.0 * hits / n_tokens if n_tokens else 0.0
        s7 = float(_count_hits(res.cues, title, abstract))
        s8 = self.journal_prior.prior(record.journal)
        return SignalVector(s1, s2, s3, s4, s5, s6, s7, s8)

    def predict(self, record: CitationRecord) -> float:
        """p for any record under the current models (held-out scoring)."""
        p, _ = aggregate(self.compute_signals(record), self.meta)
        return p

    def _make_item(self, record: CitationRecord) -> ReviewItem:
        signals = self.compute_signals(record)
        return ReviewItem(
            pmid=record.pmid, signals=signals, p=0.5, priority=1.0,
            iteration=self.iteration,
        )

    def _rescale(self) -> None:
        """Min-max divisor from the corpus-wide observed max of each count signal."""
        if not self.items:
            return
        raw = np.array([it.signals.as_array() for it in self.items.values()])
        for i in _SCALED:
            observed = float(raw[:, i].max())
            self.meta.scale_max[i] = observed if observed > 0 else 1.0

    def _rescore_all(self) -> None:
        for item in self.items.values():
            item.p, item.priority = aggregate(item.signals, self.meta)
            item.iteration = self.iteration

    # -- queue --------------------------------------------------------------

    def add_records(self, records: Iterable[CitationRecord]) -> int:
        """Queue new candidates as pending items; existing pmids are left alone."""
        added = 0
        for record in records:
            if record.pmid in self.items:
                continue
            self.records[record.pmid] = record
            item = self._make_item(record)
            item.p, item.priority = aggregate(item.signals, self.meta)
            self.items[record.pmid] = item
            added += 1
        return added

    def pending(self) -> list[ReviewItem]:
        return [it for it in self.items.values() if it.status == "pending"]

    def next_review_batch(self, k: int) -> list[ReviewItem]:
        """Top-k pending items: priority desc, then most recent pub_date, then pmid."""
        if k < 1:
            raise ValueError("k must be >= 1")

        def sort_key(item: ReviewItem):
            pub = self.records[item.pmid].pub_date
            ordinal = date.fromisoformat(pub).toordinal() if pub else 0
            return (-item.priority, -ordinal, item.pmid)

        return sorted(self.pending(), key=sort_key)[:k]

    def record_decision(
        self,
        pmid: int,
        label: str,
        curator: str,
        timestamp: str | None = None,
    ) -> ReviewItem:
        """Append a curator decision; double decisions are rejected."""
        label = {"accept": "accepted", "reject": "rejected"}.get(label, label)
        if label not in ("accepted", "rejected"):
            raise ValueError(f"label must be accepted or rejected, got {label!r}")
        item = self.items.get(pmid)
        if item is None:
            raise NotFound(f"pmid {pmid} is not in the review queue")
        if item.status != "pending":
            raise AlreadyDecided(f"pmid {pmid} already {item.status}")
        timestamp = timestamp or datetime.now(timezone.utc).isoformat(timespec="seconds")
        item.status = label
        item.decided_by = curator
        item.decided_at = timestamp
        decision = LoopDecision(pmid, label, curator, timestamp, self.iteration)
        self.log.append(decision)
        if self.log_path:
            with open(self.log_path, "a", encoding="utf-8") as fh:
                fh.write(decision.to_line() + "\n")
        return item

    # -- retraining ---------------------------------------------------------

    def _labels(self) -> dict[int, bool]:
        """Seed labels plus logged decisions (curator truth only)."""
        return {
            pmid: item.status == "accepted"
            for pmid, item in self.items.items()
            if item.status != "pending"
        }

    def _train_ngram(self, labels: dict[int, bool], order: int) -> NgramModel:
        corpus_tokens = []
        for pmid in sorted(self.records):
            tokens = surfaces(record_text(self.records[pmid]))
            corpus_tokens.append(tokens if order == 1 else bigrams(tokens))
        vocab = build_vocabulary_from_tokens(corpus_tokens, min_df=self.min_df)
        pmids = sorted(labels)
        vectors = []
        for pmid in pmids:
            tokens = surfaces(record_text(self.records[pmid]))
            terms = tokens if order == 1 else bigrams(tokens)
            vectors.append(featurize_tokens(terms, vocab))
        X = features_to_matrix(vectors, len(vocab))
        y = np.array([1.0 if labels[p] else 0.0 for p in pmids])
        result = train_logistic(X, y, self.hyper)
        return NgramModel(vocab=vocab, weights=result.weights, bias=result.bias, order=order)

    def run_iteration(self) -> None:
        """Retrain sub-models and meta-model from seed labels + logged decisions,
        then rescore every item. Requires at least one new decision."""
        if len(self.log) == self._trained_log_len:
            raise NoNewLabels("no curator decisions since the last iteration")
        labels = self._labels()
        self.unigram_model = self._train_ngram(labels, order=1)
        self.bigram_model = self._train_ngram(labels, order=2)
        self.journal_prior = JournalPrior.from_labels(
            (self.records[p] for p in sorted(labels)), labels
        )
        for item in self.items.values():
            item.signals = self.compute_signals(self.records[item.pmid])
        self._rescale()
        pmids = sorted(labels)
        X = np.array([self.meta.scale(self.items[p].signals.as_array()) for p in pmids])
        y = np.array([1.0 if labels[p] else 0.0 for p in pmids])
        result = train_logistic(X, y, self.hyper)
        self.meta = MetaModel(
            weights=result.weights, bias=result.bias, scale_max=self.meta.scale_max
        )
        self.iteration += 1
        self._rescore_all()
        self._trained_log_len = len(self.log)

    def collection_membership(self, threshold: float | None = None) -> Membership:
        """Accepted items plus high-confidence pending items (provisional)."""
        threshold = self.auto_include if threshold is None else threshold
        accepted = frozenset(
            p for p, it in self.items.items() if it.status == "accepted"
        )
        provisional = frozenset(
            p
            for p, it in self.items.items()
            if it.status == "pending" and it.p >= threshold
        )
        return Membership(accepted=accepted, provisional=provisional)

    # -- replay / persistence ------------------------------------------------

    @classmethod
    def replay(
        cls,
        records: Iterable[CitationRecord],
        log: Sequence[LoopDecision],
        resources: LoopResources | None = None,
        seed_labels: Mapping[int, bool] | None = None,
        final_iteration: int | None = None,
        **kwargs,
    ) -> "LongCovidLoop":
        """Rebuild a loop by replaying a decision log from scratch.

        Deterministic training makes the result's model weights bit-identical
        to the original loop's.
        """
        loop = cls(records, resources=resources, seed_labels=seed_labels, **kwargs)
        for decision in log:
            while loop.iteration < decision.iteration:
                loop.run_iteration()
            loop.record_decision(
                decision.pmid, decision.label, decision.curator, decision.timestamp
            )
        if final_iteration is None:
            final_iteration = (log[-1].iteration + 1) if log else 0
        while loop.iteration < final_iteration:
            loop.run_iteration()
        return loop

    def save_state(self, path: str | Path) -> None:
        obj = {
            "format": "lithub-loop-v1",
            "iteration": self.iteration,
            "auto_include": self.auto_include,
            "trained_log_len": self._trained_log_len,
            "meta": self.meta.as_dict(),
            "unigram": self.unigram_model.as_dict() if self.unigram_model else None,
            "bigram": self.bigram_model.as_dict() if self.bigram_model else None,
            "journal_prior": {
                "per_journal": {j: list(c) for j, c in self.journal_prior.per_journal.items()},
                "global_pos": self.journal_prior.global_pos,
                "global_n": self.journal_prior.global_n,
            },
            "items": [
                {
                    "pmid": it.pmid,
                    "signals": it.signals.as_array().tolist(),
                    "p": it.p,
                    "priority": it.priority,
                    "status": it.status,
                    "decided_by": it.decided_by,
                    "decided_at": it.decided_at,
                    "iteration": it.iteration,
                }
                for _, it in sorted(self.items.items())
            ],
        }
        Path(path).write_text(json.dumps(obj), encoding="utf-8")

    @classmethod
    def load_state(
        cls,
        path: str | Path,
        records: Iterable[CitationRecord],
        resources: LoopResources | None = None,
        log: Sequence[LoopDecision] = (),
        log_path: str | Path | None = None,
        hyper: Hyper | None = None,
        min_df: int = 1,
    ) -> "LongCovidLoop":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        loop = cls.__new__(cls)
        loop.resources = resources or LoopResources()
        loop.auto_include = obj["auto_include"]
        loop.hyper = hyper or Hyper()
        loop.min_df = min_df
        loop.log_path = Path(log_path) if log_path else None
        loop.records = {r.pmid: r for r in records}
        loop.iteration = obj["iteration"]
        loop._trained_log_len = obj["trained_log_len"]
        loop.meta = MetaModel.from_dict(obj["meta"])
        loop.unigram_model = NgramModel.from_dict(obj["unigram"]) if obj["unigram"] else None
        loop.bigram_model = NgramModel.from_dict(obj["bigram"]) if obj["bigram"] else None
        jp = JournalPrior()
        jp.per_journal = {
            j: tuple(c) for j, c in obj["journal_prior"]["per_journal"].items()
        }
        jp.global_pos = obj["journal_prior"]["global_pos"]
        jp.global_n = obj["journal_prior"]["global_n"]
        loop.journal_prior = jp
        loop.log = list(log)
        loop.items = {}
        for row in obj["items"]:
            if row["pmid"] not in loop.records:
                continue  # record left the collection; item drops with it
            loop.items[row["pmid"]] = ReviewItem(
                pmid=row["pmid"],
                signals=SignalVector.from_array(row["signals"]),
                p=row["p"],
                priority=row["priority"],
                status=row["status"],
                decided_by=row["decided_by"],
                decided_at=row["decided_at"],
                iteration=row["iteration"],
            )
        return loop


def load_decision_log(path: str | Path) -> list[LoopDecision]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                out.append(LoopDecision.from_line(line))
    return out


def load_seed_labels(path: str | Path) -> dict[int, bool]:
    """pmid<TAB>label where label is accepted/rejected (or 1/0)."""
    labels: dict[int, bool] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            pmid_text, label = line.split("\t")
            labels[int(pmid_text)] = label.strip().lower() in ("accepted", "accept", "1", "true", "positive")
    return labels
