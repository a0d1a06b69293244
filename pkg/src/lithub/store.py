"""Citation record parsing and the append-only corpus store.

Wire format: UTF-8, one JSON object per line with keys pmid (integer), title,
abstract, journal, pub_date, authors (list), keywords (list), mesh_terms
(list), funding_text, country. pmid, title and pub_date are required; the
rest default to empty values.

On disk the store is a single append-only log (records.jsonl) plus a tiny
`committed` file holding the committed byte length. A batch is appended
first and the committed length swapped in atomically afterwards, so readers
never observe a half-applied batch. The pmid index is rebuilt by replaying
the log at open time; later lines win, and tombstone lines drop a pmid.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
from dataclasses import dataclass, field, replace
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Iterable, Iterator

from .errors import BadDate, MalformedLine, MissingField, NotFound, StoreUnavailable

logger = logging.getLogger(__name__)

_WIRE_KEYS = (
    "pmid",
    "title",
    "abstract",
    "journal",
    "pub_date",
    "authors",
    "keywords",
    "mesh_terms",
    "funding_text",
    "country",
)
_LIST_KEYS = ("authors", "keywords", "mesh_terms")
_TEXT_KEYS = ("abstract", "journal", "funding_text", "country")


@dataclass(frozen=True)
class CitationRecord:
    pmid: int
    title: str
    abstract: str = ""
    journal: str = ""
    pub_date: str = ""  # normalized YYYY-MM-DD
    authors: tuple[str, ...] = ()
    keywords: tuple[str, ...] = ()
    mesh_terms: tuple[str, ...] = ()
    funding_text: str = ""
    country: str = ""
    ingested_at: str | None = field(default=None, compare=False)

    def content_hash(self) -> str:
        """Identity for duplicate detection: title, abstract, journal, pub_date."""
        payload = json.dumps(
            [self.title, self.abstract, self.journal, self.pub_date],
            ensure_ascii=False,
        )
        return hashlib.sha256(payload.encode("utf-8")).hexdigest()


def normalize_pub_date(raw: str) -> str:
    """Validate YYYY-MM-DD or YYYY-MM (day defaults to 01)."""
    raw = raw.strip()
    parts = raw.split("-")
    if len(parts) == 2:
        parts.append("01")
    if len(parts) != 3:
        raise BadDate(f"bad pub_date: {raw!r}")
    try:
        year, month, day = (int(p) for p in parts)
        value = date(year, month, day)
    except ValueError as exc:
        raise BadDate(f"bad pub_date: {raw!r}") from exc
    return value.isoformat()


def parse_record(line: str) -> CitationRecord:
    """Parse one wire-format line; unknown keys are ignored.

    Raises MalformedLine for non-JSON lines or wrongly typed values,
    MissingField for absent/blank pmid, title or pub_date, and BadDate for
    unparseable dates.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise MalformedLine(f"not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise MalformedLine("line is not a JSON object")

    if "pmid" not in obj or obj["pmid"] in ("", None):
        raise MissingField("pmid")
    pmid = obj["pmid"]
    if isinstance(pmid, bool) or not isinstance(pmid, int) or pmid <= 0:
        raise MalformedLine(f"pmid must be a positive integer, got {pmid!r}")

    title = obj.get("title")
    if title is None or not isinstance(title, str) or not title.strip():
        raise MissingField("title")

    raw_date = obj.get("pub_date")
    if raw_date is None or (isinstance(raw_date, str) and not raw_date.strip()):
        raise MissingField("pub_date")
    if not isinstance(raw_date, str):
        raise MalformedLine(f"pub_date must be a string, got {raw_date!r}")
    pub_date = normalize_pub_date(raw_date)

    fields: dict = {"pmid": pmid, "title": title, "pub_date": pub_date}
    for key in _TEXT_KEYS:
        value = obj.get(key, "")
        if not isinstance(value, str):
            raise MalformedLine(f"{key} must be a string, got {value!r}")
        fields[key] = value
    for key in _LIST_KEYS:
        value = obj.get(key, [])
        if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
            raise MalformedLine(f"{key} must be a list of strings")
        fields[key] = tuple(value)
    return CitationRecord(**fields)


def serialize_record(record: CitationRecord) -> str:
    """One wire-format line (no trailing newline); ingested_at is store-side."""
    obj = {
        "pmid": record.pmid,
        "title": record.title,
        "abstract": record.abstract,
        "journal": record.journal,
        "pub_date": record.pub_date,
        "authors": list(record.authors),
        "keywords": list(record.keywords),
        "mesh_terms": list(record.mesh_terms),
        "funding_text": record.funding_text,
        "country": record.country,
    }
    return json.dumps(obj, ensure_ascii=False)


@dataclass
class IngestReport:
    n_new: int = 0
    n_duplicate: int = 0
    n_updated: int = 0
    n_rejected: int = 0
    rejects: list[tuple[int, str]] = field(default_factory=list)
    changed: list[int] = field(default_factory=list)  # new + updated pmids

    def summary(self) -> str:
        return (
            f"new={self.n_new} duplicate={self.n_duplicate} "
            f"updated={self.n_updated} rejected={self.n_rejected}"
        )


class CorpusStore:
    """Single-writer, append-friendly record store with atomic batch commit."""

    def __init__(self, root: str | Path, create: bool = True):
        self.root = Path(root)
        self._log_path = self.root / "records.jsonl"
        self._committed_path = self.root / "committed"
        if not self.root.exists():
            if not create:
                raise StoreUnavailable(f"store root does not exist: {self.root}")
            self.root.mkdir(parents=True)
        if not self._log_path.exists():
            self._log_path.touch()
            self._write_committed(0)
        self._records: dict[int, CitationRecord] = {}
        self._hashes: dict[int, str] = {}
        self._replay()

    # -- persistence -------------------------------------------------------

    def _write_committed(self, n_bytes: int) -> None:
        tmp = self._committed_path.with_suffix(".tmp")
        tmp.write_text(str(n_bytes))
        os.replace(tmp, self._committed_path)

    def _committed_bytes(self) -> int:
        if not self._committed_path.exists():
            return self._log_path.stat().st_size
        return int(self._committed_path.read_text().strip() or 0)

    def _replay(self) -> None:
        committed = self._committed_bytes()
        self._records.clear()
        self._hashes.clear()
        with open(self._log_path, "rb") as fh:
            data = fh.read(committed)
        for raw in data.decode("utf-8").splitlines():
            if not raw.strip():
                continue
            obj = json.loads(raw)
            if "_tombstone" in obj:
                self._records.pop(obj["_tombstone"], None)
                self._hashes.pop(obj["_tombstone"], None)
                continue
            record = parse_record(raw)
            record = replace(record, ingested_at=obj.get("_ingested_at"))
            self._records[record.pmid] = record
            self._hashes[record.pmid] = record.content_hash()

    def _append_commit(self, lines: list[str]) -> None:
        committed = self._committed_bytes()
        with open(self._log_path, "r+b") as fh:
            fh.truncate(committed)  # drop any uncommitted tail from a crash
            fh.seek(committed)
            payload = "".join(line + "\n" for line in lines).encode("utf-8")
            fh.write(payload)
            fh.flush()
            os.fsync(fh.fileno())
            new_committed = committed + len(payload)
        self._write_committed(new_committed)

    # -- operations ---------------------------------------------------------

    def ingest_batch(self, lines: Iterable[str], dry_run: bool = False) -> IngestReport:
        """Create-or-update a batch; parse failures collect into rejects.

        Identical content (same pmid + content hash) counts as a duplicate;
        same pmid with different content replaces the record and counts as
        updated. Blank lines are not records and are skipped, so the report
        totals account for every non-blank input line. The batch is
        committed atomically at the end.
        """
        report = IngestReport()
        now = datetime.now(timezone.utc).isoformat(timespec="seconds")
        today = now[:10]
        staged: list[str] = []
        batch_records: dict[int, CitationRecord] = {}
        batch_hashes = dict(self._hashes)
        for line_no, line in enumerate(lines, start=1):
            if not line.strip():
                continue
            try:
                record = parse_record(line)
            except Exception as exc:  # parse errors never abort the batch
                report.n_rejected += 1
                report.rejects.append((line_no, str(exc)))
                continue
            if record.pub_date > today:
                logger.warning(
                    "pmid %d has a future pub_date %s; accepted",
                    record.pmid,
                    record.pub_date,
                )
            content = record.content_hash()
            known = batch_hashes.get(record.pmid)
            if known == content:
                report.n_duplicate += 1
                continue
            if known is None:
                report.n_new += 1
            else:
                report.n_updated += 1
            record = replace(record, ingested_at=now)
            batch_hashes[record.pmid] = content
            batch_records[record.pmid] = record
            obj = json.loads(serialize_record(record))
            obj["_ingested_at"] = now
            staged.append(json.dumps(obj, ensure_ascii=False))
            report.changed.append(record.pmid)
        report.changed = list(dict.fromkeys(report.changed))
        if not dry_run and staged:
            self._append_commit(staged)
            self._records.update(batch_records)
            self._hashes.update(
                {pmid: batch_records[pmid].content_hash() for pmid in batch_records}
            )
        return report

    def get(self, pmid: int) -> CitationRecord:
        try:
            return self._records[pmid]
        except KeyError:
            raise NotFound(f"pmid {pmid} not in store") from None

    def __contains__(self, pmid: int) -> bool:
        return pmid in self._records

    def __len__(self) -> int:
        return len(self._records)

    def __iter__(self) -> Iterator[CitationRecord]:
        """Records in pmid order (deterministic)."""
        for pmid in sorted(self._records):
            yield self._records[pmid]

    def pmids(self) -> list[int]:
        return sorted(self._records)

    def content_hash(self, pmid: int) -> str:
        try:
            return self._hashes[pmid]
        except KeyError:
            raise NotFound(f"pmid {pmid} not in store") from None

    def list_records(
        self,
        date_from: str | None = None,
        date_to: str | None = None,
        page: int = 1,
        page_size: int = 100,
    ) -> list[CitationRecord]:
        """Page of records in (pub_date, pmid) order, date range inclusive."""
        if page < 1 or page_size < 1:
            raise ValueError("page and page_size must be >= 1")
        selected = [
            r
            for r in self._records.values()
            if (date_from is None or r.pub_date >= date_from)
            and (date_to is None or r.pub_date <= date_to)
        ]
        selected.sort(key=lambda r: (r.pub_date, r.pmid))
        lo = (page - 1) * page_size
        return selected[lo : lo + page_size]

    def delete(self, pmid: int) -> None:
        """Tombstone a record (plumbing for retractions; no automatic policy)."""
        if pmid not in self._records:
            raise NotFound(f"pmid {pmid} not in store")
        self._append_commit([json.dumps({"_tombstone": pmid})])
        del self._records[pmid]
        del self._hashes[pmid]
