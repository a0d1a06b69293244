"""HTTP API over the current snapshot: search, documents, stats, trending,
review queue, export, and citation formatting.

Every response carries an X-Snapshot-Id header; requests are served from the
last published snapshot, re-read lazily so a pipeline publish shows up on
the next request. Review decisions are the only mutating endpoint and go
through the persistent loop writer. Errors share one envelope:
{"status": int, "code": str, "message": str}.
"""

from __future__ import annotations

import csv
import io
import json
import threading
from typing import Iterator

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, StreamingResponse
from starlette.exceptions import HTTPException as StarletteHTTPException

from . import stats as stats_mod
from .entities import recognize
from .errors import AlreadyDecided, BadFacet, BadPage, NotFound
from .loop import LongCovidLoop
from .pipeline import HubConfig, Snapshot, current_snapshot_dir, open_loop, save_loop
from .search import FACETS, FacetQuery, SearchIndex
from .store import CitationRecord, serialize_record

EXPORT_CSV_HEADER = ("pmid", "title", "journal", "pub_date", "topics", "variants", "vaccines")


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class HubService:
    """Lazily refreshed view of the published snapshot plus the loop writer."""

    def __init__(self, config: HubConfig):
        self.config = config
        self.snapshot: Snapshot | None = None
        self.index: SearchIndex | None = None
        self.loop: LongCovidLoop | None = None
        self.trending_scores: list[tuple[int, float]] = []
        self._loaded_dir: str | None = None
        self._lock = threading.Lock()
        self.refresh()

    def refresh(self) -> None:
        snap_dir = current_snapshot_dir(self.config.data_dir)
        key = str(snap_dir) if snap_dir else None
        if key == self._loaded_dir:
            return
        with self._lock:
            if key == self._loaded_dir:
                return
            if snap_dir is None:
                self.snapshot = self.index = self.loop = None
                self._loaded_dir = None
                return
            snapshot = Snapshot.load(snap_dir)
            self.index = snapshot.build_index()
            self.loop = open_loop(self.config, snapshot.records.values())
            if self.config.trending and self.config.trending.exists():
                self.trending_scores = stats_mod.load_trending(self.config.trending)
            self.snapshot = snapshot
            self._loaded_dir = key

    @property
    def snapshot_id(self) -> str:
        return self.snapshot.snapshot_id if self.snapshot else "none"

    def require_snapshot(self) -> Snapshot:
        if self.snapshot is None:
            raise ApiError(503, "no_snapshot", "no snapshot has been published yet")
        return self.snapshot

    def decide(self, pmid: int, label: str, curator: str) -> dict:
        self.require_snapshot()
        assert self.loop is not None
        with self._lock:
            item = self.loop.record_decision(pmid, label, curator)
            save_loop(self.config, self.loop)
        return {
            "pmid": item.pmid,
            "status": item.status,
            "decided_by": item.decided_by,
            "decided_at": item.decided_at,
        }


def _int_param(params, name: str, default: int) -> int:
    raw = params.get(name)
    if raw is None or raw == "":
        return default
    try:
        return int(raw)
    except ValueError:
        raise ApiError(400, "bad_parameter", f"parameter '{name}' must be an integer")


def _facet_query(params) -> FacetQuery:
    filters: dict[str, frozenset[str]] = {}
    for facet in FACETS:
        values = [v for k, v in params.multi_items() if k == facet and v]
        if values:
            filters[facet] = frozenset(values)
    sort = params.get("sort", "date_desc")
    if sort == "date":
        sort = "date_desc"
    if sort not in ("relevance", "date_desc"):
        raise ApiError(400, "bad_parameter", "parameter 'sort' must be relevance or date")
    return FacetQuery(
        text=params.get("q", ""),
        filters=filters,
        date_from=params.get("from") or None,
        date_to=params.get("to") or None,
        page=_int_param(params, "page", 1),
        page_size=_int_param(params, "size", 50),
        sort=sort,
    )


def _doc_summary(service: HubService, pmid: int, score: float) -> dict:
    snapshot = service.snapshot
    record = snapshot.records[pmid]
    ann = service.index.docs[pmid].annotations
    return {
        "pmid": pmid,
        "score": round(score, 6),
        "title": record.title,
        "journal": record.journal,
        "pub_date": record.pub_date,
        "topics": sorted(ann.topics),
        "variants": sorted(ann.strains),
        "vaccines": sorted(ann.vaccines),
        "drugs": sorted(ann.drugs),
        "provisional_longcovid": ann.provisional_longcovid,
    }


def _citation_text(record: CitationRecord) -> str:
    authors = ", ".join(record.authors)
    year = record.pub_date[:4]
    parts = [p for p in (authors, record.title, record.journal, year) if p]
    return f"{'. '.join(parts)}. PMID: {record.pmid}."


def _citation_ris(record: CitationRecord) -> str:
    lines = ["TY  - JOUR", f"TI  - {record.title}"]
    lines += [f"AU  - {a}" for a in record.authors]
    if record.journal:
        lines.append(f"JO  - {record.journal}")
    lines.append(f"PY  - {record.pub_date[:4]}")
    lines.append(f"ID  - {record.pmid}")
    lines.append("ER  - ")
    return "\n".join(lines) + "\n"


def _queue_item(service: HubService, item) -> dict:
    record = service.snapshot.records[item.pmid]
    synonyms = service.loop.resources.synonyms
    highlights = []
    if synonyms:
        for field_name, source in (("title", record.title), ("abstract", record.abstract)):
            for m in recognize(source, synonyms):
                highlights.append(
                    {"field": field_name, "start": m.start, "end": m.end, "surface": m.surface}
                )
    signals = item.signals
    return {
        "pmid": item.pmid,
        "title": record.title,
        "abstract": record.abstract,
        "journal": record.journal,
        "pub_date": record.pub_date,
        "p": round(item.p, 6),
        "priority": round(item.priority, 6),
        "signals": {f"s{i}": getattr(signals, f"s{i}") for i in range(1, 9)},
        "synonym_mentions": highlights,
    }


def create_app(config: HubConfig) -> FastAPI:
    app = FastAPI(title="lithub", docs_url=None, redoc_url=None)
    service = HubService(config)
    app.state.service = service

    # -- envelope + snapshot header ------------------------------------------

    @app.middleware("http")
    async def stamp_snapshot(request: Request, call_next):
        service.refresh()
        response = await call_next(request)
        response.headers["X-Snapshot-Id"] = service.snapshot_id
        return response

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status,
            content={"status": exc.status, "code": exc.code, "message": exc.message},
        )

    @app.exception_handler(StarletteHTTPException)
    async def on_http_error(request: Request, exc: StarletteHTTPException):
        code = "route_not_found" if exc.status_code == 404 else "http_error"
        return JSONResponse(
            status_code=exc.status_code,
            content={"status": exc.status_code, "code": code, "message": str(exc.detail)},
        )

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"status": 400, "code": "bad_parameter", "message": str(exc.errors())},
        )

    # -- stats -----------------------------------------------------------------

    @app.get("/api/stats/overview")
    def stats_overview():
        snapshot = service.require_snapshot()
        annotations = snapshot.annotations()
        topics_in_use = {t for a in annotations.values() for t in a.topics}
        return {
            "publications": len(snapshot.records),
            "journals": len({r.journal for r in snapshot.records.values() if r.journal}),
            "topics": len(topics_in_use),
        }

    @app.get("/api/stats/growth")
    def stats_growth(granularity: str = "month"):
        snapshot = service.require_snapshot()
        if granularity not in stats_mod.GRANULARITIES:
            raise ApiError(400, "bad_parameter", "parameter 'granularity' must be day, month or quarter")
        series = stats_mod.growth(snapshot.records.values(), granularity)
        return {
            "granularity": granularity,
            "rows": [
                {"period": r.period, "new": r.new, "cumulative": r.cumulative}
                for r in series.rows
            ],
        }

    @app.get("/api/stats/cooccurrence")
    def stats_cooccurrence():
        snapshot = service.require_snapshot()
        matrix = stats_mod.cooccurrence(
            [a.topics for a in snapshot.annotations().values()]
        )
        return {"topics": list(matrix.topics), "matrix": matrix.matrix.tolist()}

    @app.get("/api/stats/trending")
    def stats_trending(n: int = 6):
        snapshot = service.require_snapshot()
        ranked = stats_mod.trending(
            snapshot.records.keys(), service.trending_scores, top_n=n
        )
        return {
            "items": [
                {
                    "pmid": pmid,
                    "trend_score": score,
                    "title": snapshot.records[pmid].title,
                    "journal": snapshot.records[pmid].journal,
                    "pub_date": snapshot.records[pmid].pub_date,
                }
                for pmid, score in ranked
            ]
        }

    # -- search / documents ------------------------------------------------------

    @app.get("/api/search")
    def search(request: Request):
        service.require_snapshot()
        query = _facet_query(request.query_params)
        try:
            result = service.index.search(query)
        except BadPage as exc:
            raise ApiError(400, "bad_page", str(exc))
        except BadFacet as exc:
            raise ApiError(400, "bad_facet", str(exc))
        return {
            "total": result.total,
            "page": query.page,
            "page_size": query.page_size,
            "sort": query.sort,
            "hits": [_doc_summary(service, h.pmid, h.score) for h in result.hits],
            "facet_counts": result.facet_counts,
        }

    @app.get("/api/doc/{pmid}")
    def get_doc(pmid: int):
        snapshot = service.require_snapshot()
        record = snapshot.records.get(pmid)
        if record is None:
            raise ApiError(404, "doc_not_found", f"pmid {pmid} is not in the collection")
        scores = snapshot.topic_scores_by_pmid().get(pmid, {})
        mentions = [
            {
                "field": m.field,
                "start": m.start,
                "end": m.end,
                "surface": m.surface,
                "type": m.entity_type,
                "concept_id": m.concept_id,
            }
            for m in snapshot.mentions_by_pmid().get(pmid, [])
        ]
        payload = {
            "record": json.loads(serialize_record(record)),
            "topics": sorted(snapshot.topics_by_pmid().get(pmid, set())),
            "topic_scores": scores,
            "mentions": mentions,
            "longcovid": snapshot.longcovid_rows.get(pmid),
        }
        if service.loop and pmid in service.loop.items:
            payload["signals"] = {
                f"s{i}": getattr(service.loop.items[pmid].signals, f"s{i}")
                for i in range(1, 9)
            }
        return payload

    @app.get("/api/doc/{pmid}/cite")
    def cite(pmid: int, style: str = "text"):
        snapshot = service.require_snapshot()
        record = snapshot.records.get(pmid)
        if record is None:
            raise ApiError(404, "doc_not_found", f"pmid {pmid} is not in the collection")
        if style == "text":
            return PlainTextResponse(_citation_text(record))
        if style == "ris":
            return PlainTextResponse(_citation_ris(record), media_type="application/x-research-info-systems")
        raise ApiError(400, "bad_parameter", "parameter 'style' must be text or ris")

    # -- review queue --------------------------------------------------------------

    @app.get("/api/review/queue")
    def review_queue(k: int = 10):
        service.require_snapshot()
        if k < 1:
            raise ApiError(400, "bad_parameter", "parameter 'k' must be >= 1")
        items = service.loop.next_review_batch(k) if service.loop.pending() else []
        return {"iteration": service.loop.iteration, "items": [_queue_item(service, it) for it in items]}

    @app.post("/api/review/{pmid}")
    async def review_decide(pmid: int, request: Request):
        service.require_snapshot()
        try:
            body = await request.json()
        except Exception:
            raise ApiError(400, "bad_parameter", "request body must be JSON")
        label = body.get("label", "")
        curator = body.get("curator", "")
        if label not in ("accept", "reject", "accepted", "rejected"):
            raise ApiError(400, "bad_parameter", "parameter 'label' must be accept or reject")
        if not curator:
            raise ApiError(400, "bad_parameter", "parameter 'curator' is required")
        try:
            return service.decide(pmid, label, curator)
        except NotFound as exc:
            raise ApiError(404, "doc_not_found", str(exc))
        except AlreadyDecided as exc:
            raise ApiError(409, "already_decided", str(exc))

    # -- export ---------------------------------------------------------------------

    @app.get("/api/export")
    def export(request: Request):
        snapshot = service.require_snapshot()
        params = request.query_params
        fmt = params.get("format", "jsonl")
        if fmt not in ("jsonl", "csv"):
            raise ApiError(400, "bad_parameter", "parameter 'format' must be jsonl or csv")
        query = _facet_query(params)
        query = FacetQuery(
            text=query.text,
            filters=query.filters,
            date_from=query.date_from,
            date_to=query.date_to,
            page=1,
            page_size=1,
            sort="date_desc",
        )
        try:
            ordered = service.index.ordered_hits(query)
        except BadFacet as exc:
            raise ApiError(400, "bad_facet", str(exc))

        def stream() -> Iterator[str]:
            if fmt == "csv":
                buffer = io.StringIO()
                writer = csv.writer(buffer)
                writer.writerow(EXPORT_CSV_HEADER)
                yield buffer.getvalue()
            for pmid, _score in ordered:
                record = snapshot.records[pmid]
                ann = service.index.docs[pmid].annotations
                if fmt == "jsonl":
                    obj = json.loads(serialize_record(record))
                    obj["topics"] = sorted(ann.topics)
                    obj["variants"] = sorted(ann.strains)
                    obj["vaccines"] = sorted(ann.vaccines)
                    yield json.dumps(obj, ensure_ascii=False) + "\n"
                else:
                    buffer = io.StringIO()
                    writer = csv.writer(buffer)
                    writer.writerow(
                        [
                            record.pmid,
                            record.title,
                            record.journal,
                            record.pub_date,
                            ";".join(sorted(ann.topics)),
                            ";".join(sorted(ann.strains)),
                            ";".join(sorted(ann.vaccines)),
                        ]
                    )
                    yield buffer.getvalue()

        media = "application/jsonl" if fmt == "jsonl" else "text/csv"
        return StreamingResponse(stream(), media_type=media)

    return app
