"""Relevance triage: keyword gate, logistic scoring, exclusion categories.

An article that never mentions the target keywords is out with score 0. A
mentioning article is scored by a logistic model over TF-IDF features; a
below-threshold article is assigned one of three exclusion categories:

  1  results or findings unrelated to the target topic (the default)
  2  keywords confined to a single abstract sentence carrying a background
     cue word (the article only introduces the topic as context)
  3  keywords confined to the funding statement
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import ModelMissing
from .logistic import (
    Hyper,
    features_to_matrix,
    predict_proba,
    sigmoid,
    train_logistic,
)
from .store import CitationRecord
from .text import Vocabulary, build_vocabulary, featurize, record_text, surfaces

DEFAULT_KEYWORDS = ("covid-19", "sars-cov-2", "coronavirus", "2019-ncov", "ncov")

BACKGROUND_CUES = frozenset(
    ("pandemic", "since", "during", "after", "amid", "background")
)

_SENTENCE_BOUNDARY = re.compile(r"(?<=[.?!])\s+")

PREFILTER_FIELDS = ("title", "abstract", "keywords", "mesh_terms", "funding_text")


def split_sentences(text: str) -> list[str]:
    """Split on '.', '?' or '!' followed by whitespace."""
    return [s for s in _SENTENCE_BOUNDARY.split(text) if s.strip()]


def _contains_any(token_surfaces: Sequence[str], needles: list[tuple[str, ...]]) -> bool:
    for needle in needles:
        length = len(needle)
        for i in range(len(token_surfaces) - length + 1):
            if tuple(token_surfaces[i : i + length]) == needle:
                return True
    return False


@dataclass(frozen=True)
class PrefilterResult:
    fields_hit: tuple[str, ...]

    @property
    def mentioned(self) -> bool:
        return bool(self.fields_hit)


def keyword_prefilter(
    record: CitationRecord, keywords: Sequence[str] = DEFAULT_KEYWORDS
) -> PrefilterResult:
    """Which record fields mention any keyword (token-boundary, case-insensitive)."""
    if not keywords:
        raise ValueError("keyword list must be non-empty")
    needles = [tuple(surfaces(k)) for k in keywords]
    hit: list[str] = []
    sources = {
        "title": record.title,
        "abstract": record.abstract,
        "keywords": "\n".join(record.keywords),
        "mesh_terms": "\n".join(record.mesh_terms),
        "funding_text": record.funding_text,
    }
    for name in PREFILTER_FIELDS:
        if _contains_any(surfaces(sources[name]), needles):
            hit.append(name)
    return PrefilterResult(tuple(hit))


@dataclass
class LinearModel:
    """Logistic model over a vocabulary, self-contained for inference."""

    vocab: Vocabulary
    weights: np.ndarray
    bias: float
    threshold: float = 0.5
    trained_on: str = ""
    hyper: dict = field(default_factory=dict)

    def score_features(self, fv: dict[int, float]) -> float:
        z = self.bias + sum(self.weights[i] * w for i, w in fv.items())
        return sigmoid(z)

    def score(self, record: CitationRecord) -> float:
        return self.score_features(featurize(record_text(record), self.vocab))

    def save(self, path: str | Path) -> None:
        obj = {
            "format": "lithub-linear-v1",
            "vocab_fingerprint": self.vocab.fingerprint(),
            "threshold": self.threshold,
            "hyper": self.hyper,
            "trained_on": self.trained_on,
            "bias": self.bias,
            "weights": self.weights.tolist(),
            "vocab": {
                "n_docs": self.vocab.n_docs,
                "terms": list(self.vocab.terms),
                "df": list(self.vocab.df),
            },
        }
        Path(path).write_text(json.dumps(obj), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ModelMissing(f"no model file at {path}") from None
        if obj.get("format") != "lithub-linear-v1":
            raise ModelMissing(f"unrecognized model format in {path}")
        vocab = Vocabulary(
            dict(zip(obj["vocab"]["terms"], obj["vocab"]["df"])),
            obj["vocab"]["n_docs"],
        )
        return cls(
            vocab=vocab,
            weights=np.asarray(obj["weights"], dtype=float),
            bias=float(obj["bias"]),
            threshold=float(obj["threshold"]),
            trained_on=obj.get("trained_on", ""),
            hyper=obj.get("hyper", {}),
        )


def train_triage(
    labeled: Iterable[tuple[CitationRecord, bool]],
    hyper: Hyper | None = None,
    threshold: float = 0.5,
    min_df: int = 1,
) -> LinearModel:
    """Fit the relevance model on (record, relevant) pairs.

    Full-batch gradient descent from zero weights, so a given dataset always
    yields the same model.
    """
    if not 0 < threshold < 1:
        raise ValueError("threshold must lie in (0, 1)")
    pairs = list(labeled)
    records = [r for r, _ in pairs]
    y = np.array([1.0 if label else 0.0 for _, label in pairs])
    vocab = build_vocabulary(records, min_df=min_df)
    X = features_to_matrix(
        [featurize(record_text(r), vocab) for r in records], len(vocab)
    )
    hyper = hyper or Hyper()
    result = train_logistic(X, y, hyper)
    fingerprint = f"n={len(pairs)},pos={int(y.sum())},vocab={vocab.fingerprint()[:12]}"
    return LinearModel(
        vocab=vocab,
        weights=result.weights,
        bias=result.bias,
        threshold=threshold,
        trained_on=fingerprint,
        hyper=hyper.as_dict(),
    )


@dataclass(frozen=True)
class TriageDecision:
    pmid: int
    relevant: bool
    score: float
    exclusion_category: int | None  # None for relevant decisions
    rationale: str


def _exclusion_category(
    record: CitationRecord,
    fields_hit: tuple[str, ...],
    keywords: Sequence[str],
) -> tuple[int, str]:
    if fields_hit == ("funding_text",):
        return 3, "keywords appear only in the funding statement"
    if set(fields_hit) == {"abstract"}:
        needles = [tuple(surfaces(k)) for k in keywords]
        hit_sentences = [
            s
            for s in split_sentences(record.abstract)
            if _contains_any(surfaces(s), needles)
        ]
        if len(hit_sentences) == 1:
            sentence_tokens = set(surfaces(hit_sentences[0]))
            if sentence_tokens & BACKGROUND_CUES:
                return 2, "keywords confined to one background-cue sentence"
    return 1, "results or findings not related to the target topic"


def triage(
    record: CitationRecord,
    model: LinearModel | None,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
) -> TriageDecision:
    """Relevance decision for one record."""
    if model is None:
        raise ModelMissing("triage requires a trained model")
    prefilter = keyword_prefilter(record, keywords)
    if not prefilter.mentioned:
        return TriageDecision(
            pmid=record.pmid,
            relevant=False,
            score=0.0,
            exclusion_category=1,
            rationale="no keyword mention in any field",
        )
    score = model.score(record)
    if score >= model.threshold:
        return TriageDecision(
            pmid=record.pmid,
            relevant=True,
            score=score,
            exclusion_category=None,
            rationale=f"score {score:.3f} >= threshold {model.threshold:g}",
        )
    category, why = _exclusion_category(record, prefilter.fields_hit, keywords)
    return TriageDecision(
        pmid=record.pmid,
        relevant=False,
        score=score,
        exclusion_category=category,
        rationale=f"score {score:.3f} < threshold {model.threshold:g}; {why}",
    )


def triage_batch(
    records: Iterable[CitationRecord],
    model: LinearModel,
    keywords: Sequence[str] = DEFAULT_KEYWORDS,
) -> list[TriageDecision]:
    return [triage(r, model, keywords) for r in records]


# Inference over a prebuilt matrix, used by evaluation scripts.
def score_matrix(model: LinearModel, X: np.ndarray) -> np.ndarray:
    return predict_proba(X, model.weights, model.bias)
