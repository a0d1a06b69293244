"""Deterministic tokenization, vocabularies, and sparse TF / TF-IDF features.

Every downstream consumer (classifiers, entity matcher, search index) runs on
the same tokenizer so character offsets and index positions always agree.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Mapping, NamedTuple

from .errors import EmptyCorpus

# Characters that may join a token internally but never start or end one.
# Keeps "covid-19", "b.1.351" and "mrna-1273" as single tokens.
_CONNECTORS = frozenset("-.")


class Token(NamedTuple):
    surface: str  # lowercased slice of the source text
    start: int
    end: int


def tokenize(text: str) -> list[Token]:
    """Split text into maximal alphanumeric runs with internal '-'/'.' kept.

    Connectors are stripped from token edges, so a sentence-final period is
    never part of the token. Empty text yields an empty stream.
    """
    tokens: list[Token] = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if not (ch.isalnum() or ch in _CONNECTORS):
            i += 1
            continue
        j = i
        while j < n and (text[j].isalnum() or text[j] in _CONNECTORS):
            j += 1
        start, end = i, j
        while start < end and text[start] in _CONNECTORS:
            start += 1
        while end > start and text[end - 1] in _CONNECTORS:
            end -= 1
        if start < end:
            tokens.append(Token(text[start:end].lower(), start, end))
        i = j
    return tokens


def surfaces(text: str) -> list[str]:
    """Token surfaces only, for callers that do not need offsets."""
    return [t.surface for t in tokenize(text)]


def bigrams(token_surfaces: list[str]) -> list[str]:
    """Adjacent token pairs joined by a space (the bigram feature alphabet)."""
    return [f"{a} {b}" for a, b in zip(token_surfaces, token_surfaces[1:])]


def record_text(record) -> str:
    """The text a record contributes to vocabularies and classifiers."""
    return f"{record.title}\n{record.abstract}"


class Vocabulary:
    """Immutable term table: term -> (dense index, document frequency).

    Indices are assigned in lexicographic term order, 0..V-1.
    """

    def __init__(self, df: Mapping[str, int], n_docs: int):
        self.terms: tuple[str, ...] = tuple(sorted(df))
        self.df: tuple[int, ...] = tuple(df[t] for t in self.terms)
        self.index: dict[str, int] = {t: i for i, t in enumerate(self.terms)}
        self.n_docs = n_docs

    def __len__(self) -> int:
        return len(self.terms)

    def __contains__(self, term: str) -> bool:
        return term in self.index

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Vocabulary):
            return NotImplemented
        return (
            self.terms == other.terms
            and self.df == other.df
            and self.n_docs == other.n_docs
        )

    def idf(self, term: str) -> float:
        """ln((1 + n_docs) / (1 + df)); +1 smoothing avoids division by zero."""
        return math.log((1 + self.n_docs) / (1 + self.df[self.index[term]]))

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(f"#n_docs={self.n_docs}\n".encode())
        for term, df in zip(self.terms, self.df):
            h.update(f"{term}\t{df}\n".encode())
        return h.hexdigest()

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(f"#n_docs={self.n_docs}\n")
            for term, df in zip(self.terms, self.df):
                fh.write(f"{term}\t{df}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Vocabulary":
        with open(path, encoding="utf-8") as fh:
            header = fh.readline().strip()
            if not header.startswith("#n_docs="):
                raise ValueError(f"not a vocabulary file: {path}")
            n_docs = int(header.split("=", 1)[1])
            df: dict[str, int] = {}
            for line in fh:
                line = line.rstrip("\n")
                if not line:
                    continue
                term, count = line.split("\t")
                df[term] = int(count)
        return cls(df, n_docs)


def _doc_token_lists(docs: Iterable) -> Iterator[list[str]]:
    for doc in docs:
        if isinstance(doc, str):
            yield surfaces(doc)
        else:
            yield surfaces(record_text(doc))


def build_vocabulary_from_tokens(
    token_lists: Iterable[list[str]], min_df: int = 1
) -> Vocabulary:
    """Vocabulary over arbitrary token lists (used for n-gram alphabets too)."""
    if min_df < 1:
        raise ValueError("min_df must be >= 1")
    df: dict[str, int] = {}
    n_docs = 0
    for tokens in token_lists:
        n_docs += 1
        for term in set(tokens):
            df[term] = df.get(term, 0) + 1
    if n_docs == 0:
        raise EmptyCorpus("no documents")
    kept = {t: c for t, c in df.items() if c >= min_df}
    return Vocabulary(kept, n_docs)


def build_vocabulary(docs: Iterable, min_df: int = 1) -> Vocabulary:
    """Vocabulary over title+abstract of records (or over plain strings)."""
    return build_vocabulary_from_tokens(_doc_token_lists(docs), min_df)


FeatureVector = dict[int, float]


def featurize_tokens(
    token_surfaces: Iterable[str], vocab: Vocabulary, scheme: str = "tfidf"
) -> FeatureVector:
    """Sparse feature vector; out-of-vocabulary tokens are ignored.

    tf     raw term count
    tfidf  tf * ln((1 + n_docs) / (1 + df))
    """
    if scheme not in ("tf", "tfidf"):
        raise ValueError(f"unknown scheme: {scheme}")
    counts: dict[int, int] = {}
    for surface in token_surfaces:
        idx = vocab.index.get(surface)
        if idx is not None:
            counts[idx] = counts.get(idx, 0) + 1
    if scheme == "tf":
        return {i: float(c) for i, c in counts.items()}
    n, dfs = vocab.n_docs, vocab.df
    return {i: c * math.log((1 + n) / (1 + dfs[i])) for i, c in counts.items()}


def featurize(text: str, vocab: Vocabulary, scheme: str = "tfidf") -> FeatureVector:
    return featurize_tokens(surfaces(text), vocab, scheme)
