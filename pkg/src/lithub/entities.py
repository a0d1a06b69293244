"""Dictionary-driven entity recognition, normalization, and funder linking.

Recognition scans the shared token stream left to right, taking the longest
lexicon match at each position; matches never overlap. Entries flagged
ambiguous (Greek-letter strain names colliding with everyday words) only
fire when a context cue token occurs within eight tokens of the match.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from pathlib import Path
from typing import Iterable

from .errors import BadLink, DanglingConcept, DuplicateSurface, NotAVaccine
from .store import CitationRecord
from .text import Token, surfaces, tokenize

ENTITY_TYPES = ("strain", "vaccine", "funder")

CUE_TOKENS = frozenset(
    (
        "variant",
        "variants",
        "strain",
        "strains",
        "lineage",
        "sars-cov-2",
        "covid-19",
        "vaccine",
        "vaccinated",
        "booster",
    )
)

CUE_WINDOW = 8


@dataclass(frozen=True)
class LexiconEntry:
    surface: tuple[str, ...]  # lowercased token sequence
    entity_type: str
    concept_id: str
    ambiguous: bool = False


@dataclass(frozen=True)
class Concept:
    concept_id: str
    entity_type: str
    canonical: str


@dataclass(frozen=True)
class EntityMention:
    start: int
    end: int
    surface: str  # source slice, original case
    entity_type: str
    concept_id: str
    pmid: int | None = None
    field: str | None = None

    def key(self) -> tuple:
        """Exact-match identity: span + type + concept (+ document/field)."""
        return (self.pmid, self.field, self.start, self.end, self.entity_type, self.concept_id)


class Lexicon:
    """Surface-form table with concepts, ambiguity flags and vaccine->funder links."""

    def __init__(
        self,
        entries: Iterable[LexiconEntry],
        concepts: Iterable[Concept],
        links: dict[str, str] | None = None,
        allowed_types: tuple[str, ...] = ENTITY_TYPES,
    ):
        self.concepts: dict[str, Concept] = {}
        for concept in concepts:
            if concept.entity_type not in allowed_types:
                raise DanglingConcept(
                    f"concept {concept.concept_id} has unknown type {concept.entity_type}"
                )
            self.concepts[concept.concept_id] = concept

        self.entries: list[LexiconEntry] = []
        seen: set[tuple[tuple[str, ...], str]] = set()
        for entry in entries:
            if not entry.surface or any(not t for t in entry.surface):
                raise DuplicateSurface(f"empty surface form in entry {entry}")
            key = (entry.surface, entry.entity_type)
            if key in seen:
                raise DuplicateSurface(
                    f"duplicate surface+type: {' '.join(entry.surface)} / {entry.entity_type}"
                )
            seen.add(key)
            concept = self.concepts.get(entry.concept_id)
            if concept is None or concept.entity_type != entry.entity_type:
                raise DanglingConcept(
                    f"entry {' '.join(entry.surface)} references missing or "
                    f"mismatched concept {entry.concept_id}"
                )
            self.entries.append(entry)

        self.links: dict[str, str] = {}
        for vaccine_id, funder_id in (links or {}).items():
            vaccine = self.concepts.get(vaccine_id)
            funder = self.concepts.get(funder_id)
            if vaccine is None or vaccine.entity_type != "vaccine":
                raise BadLink(f"link source {vaccine_id} is not a vaccine concept")
            if funder is None or funder.entity_type != "funder":
                raise BadLink(f"link target {funder_id} is not a funder concept")
            self.links[vaccine_id] = funder_id

        # first token -> candidate entries, longest first (deterministic ties)
        self._by_first: dict[str, list[LexiconEntry]] = {}
        for entry in self.entries:
            self._by_first.setdefault(entry.surface[0], []).append(entry)
        for candidates in self._by_first.values():
            candidates.sort(key=lambda e: (-len(e.surface), e.entity_type, e.concept_id))

    # -- construction --------------------------------------------------------

    @classmethod
    def load(
        cls, path: str | Path, allowed_types: tuple[str, ...] = ENTITY_TYPES
    ) -> "Lexicon":
        """Read the three-section TSV: #entries, #concepts, #links."""
        entries: list[LexiconEntry] = []
        concepts: list[Concept] = []
        links: dict[str, str] = {}
        section = None
        with open(path, encoding="utf-8") as fh:
            for raw in fh:
                line = raw.rstrip("\n")
                if not line.strip():
                    continue
                if line.startswith("#"):
                    section = line.strip().lstrip("#").strip()
                    continue
                cols = line.split("\t")
                if section == "entries":
                    surface, etype, concept_id, ambiguous = cols
                    entries.append(
                        LexiconEntry(
                            surface=tuple(surfaces(surface)),
                            entity_type=etype,
                            concept_id=concept_id,
                            ambiguous=ambiguous == "1",
                        )
                    )
                elif section == "concepts":
                    concept_id, etype, canonical = cols
                    concepts.append(Concept(concept_id, etype, canonical))
                elif section == "links":
                    vaccine_id, funder_id = cols
                    if vaccine_id in links:
                        raise BadLink(f"duplicate link source {vaccine_id}")
                    links[vaccine_id] = funder_id
                else:
                    raise ValueError(f"line outside any section: {line!r}")
        return cls(entries, concepts, links, allowed_types=allowed_types)

    @classmethod
    def from_phrases(
        cls, phrases: Iterable[str], entity_type: str, concept_prefix: str
    ) -> "Lexicon":
        """In-memory lexicon over bare phrases (one concept per phrase)."""
        entries, concepts = [], []
        for i, phrase in enumerate(sorted(set(phrases))):
            concept_id = f"{concept_prefix}:{i:04d}"
            entries.append(
                LexiconEntry(tuple(surfaces(phrase)), entity_type, concept_id)
            )
            concepts.append(Concept(concept_id, entity_type, phrase))
        return cls(entries, concepts, {}, allowed_types=(entity_type,))


def _cue_near(tokens: list[Token], first: int, last: int) -> bool:
    before = tokens[max(0, first - CUE_WINDOW) : first]
    after = tokens[last + 1 : last + 1 + CUE_WINDOW]
    return any(t.surface in CUE_TOKENS for t in before + after)


def recognize(text: str, lexicon: Lexicon) -> list[EntityMention]:
    """Longest-match, non-overlapping lexicon scan with ambiguity gating."""
    tokens = tokenize(text)
    mentions: list[EntityMention] = []
    i = 0
    n = len(tokens)
    while i < n:
        matched = None
        for entry in lexicon._by_first.get(tokens[i].surface, ()):
            length = len(entry.surface)
            if i + length > n:
                continue
            if any(
                tokens[i + k].surface != entry.surface[k] for k in range(1, length)
            ):
                continue
            if entry.ambiguous and not _cue_near(tokens, i, i + length - 1):
                continue
            matched = (entry, length)
            break
        if matched is None:
            i += 1
            continue
        entry, length = matched
        start = tokens[i].start
        end = tokens[i + length - 1].end
        mentions.append(
            EntityMention(
                start=start,
                end=end,
                surface=text[start:end],
                entity_type=entry.entity_type,
                concept_id=entry.concept_id,
            )
        )
        i += length
    return mentions


def normalize(mention: EntityMention, lexicon: Lexicon) -> str:
    """Concept id for a recognized mention; total because recognition always
    attaches the entry's concept."""
    concept = lexicon.concepts.get(mention.concept_id)
    if concept is None:
        raise DanglingConcept(f"mention concept {mention.concept_id} not in lexicon")
    return concept.concept_id


def link_funder(vaccine_concept_id: str, lexicon: Lexicon) -> str | None:
    """Funder concept a vaccine links to, or None when unlinked."""
    concept = lexicon.concepts.get(vaccine_concept_id)
    if concept is None or concept.entity_type != "vaccine":
        raise NotAVaccine(f"{vaccine_concept_id} is not a vaccine concept")
    return lexicon.links.get(vaccine_concept_id)


def annotate_record(record: CitationRecord, lexicon: Lexicon) -> list[EntityMention]:
    """Recognize over title and abstract, stamping pmid and field."""
    out: list[EntityMention] = []
    for field_name, source in (("title", record.title), ("abstract", record.abstract)):
        for mention in recognize(source, lexicon):
            out.append(replace(mention, pmid=record.pmid, field=field_name))
    return out
