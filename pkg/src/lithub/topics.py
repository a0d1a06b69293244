"""Multi-label topic annotation with jointly trained per-topic heads.

One featurization per record feeds every head, so all topic scores come out
of a single pass and co-assigned topics are first-class.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import DegenerateTopic, ModelMissing
from .logistic import Hyper, features_to_matrix, sigmoid, train_logistic
from .store import CitationRecord
from .text import Vocabulary, build_vocabulary, featurize, record_text

DEFAULT_TOPICS = (
    "Treatment",
    "Prevention",
    "Diagnosis",
    "Mechanism",
    "Transmission",
    "Case Report",
    "Epidemic Forecasting",
    "Long COVID",
)


@dataclass
class MultiLabelModel:
    """K logistic heads over one shared vocabulary and feature space."""

    topics: tuple[str, ...]
    vocab: Vocabulary
    weights: np.ndarray  # (K, V)
    biases: np.ndarray  # (K,)
    thresholds: np.ndarray  # (K,)
    trained_on: str = ""
    hyper: dict | None = None

    def scores_from_features(self, fv: dict[int, float]) -> np.ndarray:
        z = self.biases.copy()
        for idx, weight in fv.items():
            z += self.weights[:, idx] * weight
        return sigmoid(z)

    def save(self, path: str | Path) -> None:
        obj = {
            "format": "lithub-multilabel-v1",
            "topics": list(self.topics),
            "thresholds": self.thresholds.tolist(),
            "trained_on": self.trained_on,
            "hyper": self.hyper or {},
            "biases": self.biases.tolist(),
            "weights": self.weights.tolist(),
            "vocab": {
                "n_docs": self.vocab.n_docs,
                "terms": list(self.vocab.terms),
                "df": list(self.vocab.df),
            },
        }
        Path(path).write_text(json.dumps(obj), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "MultiLabelModel":
        try:
            obj = json.loads(Path(path).read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ModelMissing(f"no model file at {path}") from None
        if obj.get("format") != "lithub-multilabel-v1":
            raise ModelMissing(f"unrecognized model format in {path}")
        vocab = Vocabulary(
            dict(zip(obj["vocab"]["terms"], obj["vocab"]["df"])),
            obj["vocab"]["n_docs"],
        )
        return cls(
            topics=tuple(obj["topics"]),
            vocab=vocab,
            weights=np.asarray(obj["weights"], dtype=float),
            biases=np.asarray(obj["biases"], dtype=float),
            thresholds=np.asarray(obj["thresholds"], dtype=float),
            trained_on=obj.get("trained_on", ""),
            hyper=obj.get("hyper"),
        )


@dataclass(frozen=True)
class TopicAnnotation:
    pmid: int
    scores: dict[str, float]  # every topic, single pass
    assigned: frozenset[str]


def train_topics(
    labeled: Iterable[tuple[CitationRecord, set[str]]],
    topics: Sequence[str] = DEFAULT_TOPICS,
    hyper: Hyper | None = None,
    thresholds: float | Sequence[float] = 0.5,
    min_df: int = 1,
) -> MultiLabelModel:
    """One training run fits all heads over shared TF-IDF features.

    The joint objective is the sum of per-topic log losses; with shared,
    fixed features the heads do not interact, so each head's numbers equal
    an independently trained single-topic model.
    """
    pairs = list(labeled)
    records = [r for r, _ in pairs]
    label_sets = [labels for _, labels in pairs]
    topics = tuple(topics)
    for labels in label_sets:
        unknown = labels - set(topics)
        if unknown:
            raise ValueError(f"labels outside the topic set: {sorted(unknown)}")
    vocab = build_vocabulary(records, min_df=min_df)
    X = features_to_matrix(
        [featurize(record_text(r), vocab) for r in records], len(vocab)
    )
    hyper = hyper or Hyper()
    Y = np.array(
        [[1.0 if t in labels else 0.0 for t in topics] for labels in label_sets]
    )
    for k, topic in enumerate(topics):
        if len(np.unique(Y[:, k])) < 2:
            raise DegenerateTopic(topic)
    weights = np.zeros((len(topics), len(vocab)))
    biases = np.zeros(len(topics))
    for k in range(len(topics)):
        result = train_logistic(X, Y[:, k], hyper)
        weights[k] = result.weights
        biases[k] = result.bias
    if np.isscalar(thresholds):
        thresholds = np.full(len(topics), float(thresholds))
    else:
        thresholds = np.asarray(thresholds, dtype=float)
        if thresholds.shape != (len(topics),):
            raise ValueError("one threshold per topic required")
    fingerprint = f"n={len(pairs)},topics={len(topics)},vocab={vocab.fingerprint()[:12]}"
    return MultiLabelModel(
        topics=topics,
        vocab=vocab,
        weights=weights,
        biases=biases,
        thresholds=thresholds,
        trained_on=fingerprint,
        hyper=hyper.as_dict(),
    )


def annotate_topics(record: CitationRecord, model: MultiLabelModel | None) -> TopicAnnotation:
    """Score every topic from one featurization; empty assignment is legal."""
    if model is None:
        raise ModelMissing("topic annotation requires a trained model")
    fv = featurize(record_text(record), model.vocab)
    scores = model.scores_from_features(fv)
    assigned = frozenset(
        t for t, s, thr in zip(model.topics, scores, model.thresholds) if s >= thr
    )
    return TopicAnnotation(
        pmid=record.pmid,
        scores={t: float(s) for t, s in zip(model.topics, scores)},
        assigned=assigned,
    )


def topic_distribution(
    annotations: Iterable[TopicAnnotation | frozenset | set],
    n_topics: int | None = None,
) -> dict[int, int]:
    """Histogram of topics-per-article over bins 0..K (zero bins included)."""
    sizes = []
    inferred = 0
    for ann in annotations:
        assigned = ann.assigned if isinstance(ann, TopicAnnotation) else ann
        if isinstance(ann, TopicAnnotation):
            inferred = max(inferred, len(ann.scores))
        sizes.append(len(assigned))
    if n_topics is None:
        n_topics = inferred if inferred else (max(sizes) if sizes else len(DEFAULT_TOPICS))
    hist = {b: 0 for b in range(n_topics + 1)}
    for size in sizes:
        hist[size] += 1
    return hist


def tune_thresholds(
    model: MultiLabelModel,
    validation: Iterable[tuple[CitationRecord, set[str]]],
    grid: Sequence[float] | None = None,
) -> np.ndarray:
    """Per-topic thresholds maximizing per-topic F1 on a validation split.

    Grid defaults to 0.05..0.95 in steps of 0.05; ties resolve to the lowest
    threshold so recall is preferred at equal F1.
    """
    if grid is None:
        grid = [round(0.05 * i, 2) for i in range(1, 20)]
    pairs = list(validation)
    score_rows = np.array(
        [
            model.scores_from_features(featurize(record_text(r), model.vocab))
            for r, _ in pairs
        ]
    )
    truth = np.array(
        [[1.0 if t in labels else 0.0 for t in model.topics] for _, labels in pairs]
    )
    best = np.empty(len(model.topics))
    for k in range(len(model.topics)):
        best_f1, best_thr = -1.0, 0.5
        for thr in grid:
            pred = score_rows[:, k] >= thr
            tp = float(np.sum(pred * truth[:, k]))
            fp = float(np.sum(pred * (1 - truth[:, k])))
            fn = float(np.sum(~pred * truth[:, k]))
            p = tp / (tp + fp) if tp + fp else 1.0
            r = tp / (tp + fn) if tp + fn else 1.0
            f1 = 2 * p * r / (p + r) if p + r else 0.0
            if f1 > best_f1:
                best_f1, best_thr = f1, thr
        best[k] = best_thr
    return best


def parse_label_file(path: str | Path) -> dict[int, set[str]]:
    """pmid<TAB>comma-separated topic names."""
    labels: dict[int, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            pmid_text, _, names = line.partition("\t")
            topics = {n.strip() for n in names.split(",") if n.strip()}
            labels[int(pmid_text)] = topics
    return labels


def load_annotations_tsv(path: str | Path) -> dict[int, set[str]]:
    """Assigned-topic rows (pmid<TAB>topic<TAB>score) grouped per article."""
    assigned: dict[int, set[str]] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            pmid_text, topic, _score = line.split("\t")
            assigned.setdefault(int(pmid_text), set()).add(topic)
    return assigned


def annotations_by_pmid(
    annotations: Iterable[TopicAnnotation],
) -> Mapping[int, frozenset[str]]:
    return {a.pmid: a.assigned for a in annotations}
