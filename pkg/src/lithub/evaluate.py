"""Evaluation machinery: precision/recall/F1, exact-match agreement,
deterministic splits, and collection-coverage comparison."""

from __future__ import annotations

import random
from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

from .errors import SizeMismatch


@dataclass(frozen=True)
class PRF:
    tp: int
    fp: int
    fn: int
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, tp: int, fp: int, fn: int) -> "PRF":
        # Empty-denominator convention: perfect silence is not penalized.
        precision = tp / (tp + fp) if tp + fp else 1.0
        recall = tp / (tp + fn) if tp + fn else 1.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        return cls(tp, fp, fn, precision, recall, f1)


def prf(gold: Iterable[Hashable], pred: Iterable[Hashable]) -> PRF:
    """Set-intersection PRF; micro-averaged when items are pooled."""
    gold, pred = set(gold), set(pred)
    tp = len(gold & pred)
    return PRF.from_counts(tp, len(pred) - tp, len(gold) - tp)


def macro_prf(parts: Sequence[PRF]) -> PRF:
    """Unweighted mean of per-group metrics; counts are summed for reference."""
    if not parts:
        return PRF.from_counts(0, 0, 0)
    n = len(parts)
    return PRF(
        tp=sum(p.tp for p in parts),
        fp=sum(p.fp for p in parts),
        fn=sum(p.fn for p in parts),
        precision=sum(p.precision for p in parts) / n,
        recall=sum(p.recall for p in parts) / n,
        f1=sum(p.f1 for p in parts) / n,
    )


@dataclass(frozen=True)
class IaaResult:
    """Exact-match agreement between two annotators.

    An exact match requires identical span, entity type, and concept. The
    headline ratio uses the union of both annotators' mentions as the
    denominator (the conservative reading); the per-annotator ratios are
    reported alongside for transparency.
    """

    matches: int
    total_a: int
    total_b: int
    union: int
    ratio_union: float
    ratio_a: float
    ratio_b: float

    @property
    def ratio(self) -> float:
        return self.ratio_union


def iaa_exact(ann_a: Iterable[Hashable], ann_b: Iterable[Hashable]) -> IaaResult:
    a, b = set(ann_a), set(ann_b)
    matches = len(a & b)
    union = len(a | b)
    return IaaResult(
        matches=matches,
        total_a=len(a),
        total_b=len(b),
        union=union,
        ratio_union=matches / union if union else 1.0,
        ratio_a=matches / len(a) if a else 1.0,
        ratio_b=matches / len(b) if b else 1.0,
    )


def split(
    ids: Iterable[Hashable], n_train: int, n_test: int, seed: int
) -> tuple[list, list]:
    """Deterministic shuffle split; train and test partition the ids exactly."""
    pool = sorted(ids)
    if n_train + n_test != len(pool):
        raise SizeMismatch(
            f"n_train + n_test = {n_train + n_test} but got {len(pool)} ids"
        )
    random.Random(seed).shuffle(pool)
    return pool[:n_train], pool[n_train:]


@dataclass(frozen=True)
class CoverageReport:
    size_a: int
    size_b: int
    intersection: int
    b_covered_by_a: float  # |A∩B| / |B|
    a_covered_by_b: float  # |A∩B| / |A|


def compare_collections(a: Iterable[Hashable], b: Iterable[Hashable]) -> CoverageReport:
    a, b = set(a), set(b)
    inter = len(a & b)
    return CoverageReport(
        size_a=len(a),
        size_b=len(b),
        intersection=inter,
        b_covered_by_a=inter / len(b) if b else 1.0,
        a_covered_by_b=inter / len(a) if a else 1.0,
    )
