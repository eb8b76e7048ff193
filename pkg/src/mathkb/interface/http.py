"""HTTP service over an atomically swappable index snapshot.

Handlers read one reference to the current snapshot and work only on
that immutable object, so a concurrent reload never disturbs in-flight
requests; identical queries against the same snapshot produce
byte-identical bodies.
"""

from __future__ import annotations

import threading
from dataclasses import dataclass

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response

from ..annotator import DEFAULT_PATTERNS, load_patterns
from ..document.model import SegmentRelationKind, SegmentType
from ..errors import (
    DuplicateDocId,
    EncodingError,
    FormatError,
    IntegrityError,
    InvalidBase,
    MathKbError,
    MissingTitle,
    StaleHit,
    StructureError,
    UnknownConcept,
    UnknownDocument,
    UnresolvedLabel,
)
from ..formula import ParseError, parse_pattern
from ..ontology import Ontology, load_ontology
from ..rdf import document_to_triples, serialize_ntriples, serialize_turtle
from ..recommender import DEFAULT_PROFILES, Profile, load_profiles, recommend
from ..search import (
    Hit,
    Index,
    aggregate,
    search_formula_semantic,
    search_formula_syntactic,
    search_segments,
)
from .config import ServiceConfig
from .ingest import IngestReport, ingest_corpus

__all__ = ["ApiError", "Snapshot", "create_app"]

_ERROR_MAP: tuple[tuple[type, int, str], ...] = (
    (ParseError, 400, "PATTERN_PARSE_ERROR"),
    (UnknownConcept, 404, "UNKNOWN_CONCEPT"),
    (UnknownDocument, 404, "UNKNOWN_DOCUMENT"),
    (UnresolvedLabel, 400, "UNRESOLVED_LABEL"),
    (StaleHit, 409, "STALE_HIT"),
    (DuplicateDocId, 409, "DUPLICATE_DOC_ID"),
    (MissingTitle, 422, "MISSING_TITLE"),
    (EncodingError, 422, "ENCODING_ERROR"),
    (StructureError, 422, "STRUCTURE_ERROR"),
    (FormatError, 400, "FORMAT_ERROR"),
    (InvalidBase, 500, "INVALID_BASE"),
    (IntegrityError, 500, "INTEGRITY_ERROR"),
)


@dataclass(frozen=True)
class ApiError(Exception):
    status: int
    code: str
    message: str


def _classify(exc: Exception) -> ApiError:
    if isinstance(exc, ApiError):
        return exc
    for err_type, status, code in _ERROR_MAP:
        if isinstance(exc, err_type):
            return ApiError(status=status, code=code, message=str(exc))
    return ApiError(status=500, code="INTERNAL_ERROR", message=str(exc))


@dataclass(frozen=True)
class Snapshot:
    """Everything one request generation reads: swap it whole or not at all."""

    index: Index
    profiles: dict[str, Profile]
    report: IngestReport
    base_iri: str


def _build_snapshot(config: ServiceConfig) -> Snapshot:
    o = load_ontology(config.ontology_path.read_bytes())
    patterns = (
        load_patterns(config.patterns_path)
        if config.patterns_path is not None
        else DEFAULT_PATTERNS
    )
    index, report = ingest_corpus(config.corpus_dir, o, patterns)
    profiles = (
        load_profiles(config.profiles_path)
        if config.profiles_path is not None
        else dict(DEFAULT_PROFILES)
    )
    return Snapshot(
        index=index, profiles=profiles, report=report, base_iri=config.base_iri
    )


def _hit_json(hit: Hit) -> dict:
    body = {
        "docId": hit.doc_id,
        "segmentId": hit.segment_id,
        "score": hit.score,
        "highlights": [list(h) for h in hit.highlights],
        "explain": list(hit.explain),
    }
    if hit.formula_id is not None:
        body["formulaId"] = hit.formula_id
    if hit.mathml is not None:
        body["mathml"] = hit.mathml
    return body


def _segment_type(value: str) -> SegmentType:
    try:
        return SegmentType(value)
    except ValueError:
        raise FormatError(
            f"unknown segment type: {value!r}", field="type"
        ) from None


def _relation_kind(value: str) -> SegmentRelationKind:
    try:
        return SegmentRelationKind(value)
    except ValueError:
        raise FormatError(f"unknown relation kind: {value!r}", field="via") from None


def _bool_param(value: str, field: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes"):
        return True
    if lowered in ("false", "0", "no"):
        return False
    raise FormatError(f"expected true or false, got {value!r}", field=field)


def _int_param(value: str, field: str) -> int:
    try:
        return int(value)
    except ValueError:
        raise FormatError(f"expected an integer, got {value!r}", field=field) from None


def _suggest(o: Ontology, q: str, lang: str | None, limit: int) -> list[dict]:
    """Case-folded prefix match over every concept label."""
    needle = q.casefold()
    rows = []
    for cid in sorted(o.concepts):
        c = o.concepts[cid]
        for label_lang, values in c.labels:
            if lang is not None and label_lang != lang:
                continue
            for value in values:
                if value.casefold().startswith(needle):
                    rows.append(
                        {
                            "id": cid,
                            "label": value,
                            "lang": label_lang,
                            "kind": c.kind.value,
                        }
                    )
    rows.sort(key=lambda r: (r["label"].casefold(), r["id"], r["lang"]))
    return rows[:limit]


def _document_json(snap: Snapshot, doc_id: str) -> dict:
    doc = snap.index.docs.get(doc_id)
    if doc is None:
        raise UnknownDocument(f"unknown document: {doc_id}")
    meta = doc.metadata
    body = {
        "id": doc.id,
        "title": meta.title,
        "authors": list(meta.authors),
        "language": meta.language,
        "keywords": list(meta.keywords),
        "segments": [
            {
                "id": seg.id,
                "type": seg.type.value,
                "text": seg.text,
                "span": list(seg.span),
                "formulas": [
                    {
                        "id": rec.id,
                        "source": rec.source,
                        "unparsed": rec.unparsed,
                    }
                    for rec in seg.formulas
                ],
            }
            for seg in doc.segments
        ],
        "relations": [
            {"src": rel.src, "kind": rel.kind.value, "dst": rel.dst}
            for rel in doc.relations
        ],
    }
    if meta.abstract is not None:
        body["abstract"] = meta.abstract
    return body


def create_app(config: ServiceConfig) -> FastAPI:
    """Ingest once, then serve queries over the immutable snapshot."""
    app = FastAPI(title="mathkb", docs_url=None, redoc_url=None, openapi_url=None)
    app.state.config = config
    app.state.snapshot = _build_snapshot(config)
    app.state.reload_lock = threading.Lock()

    def error_response(exc: Exception) -> JSONResponse:
        api = _classify(exc)
        return JSONResponse(
            status_code=api.status,
            content={"error": {"code": api.code, "message": api.message}},
        )

    @app.exception_handler(MathKbError)
    async def _mathkb_error(request: Request, exc: MathKbError):
        return error_response(exc)

    @app.exception_handler(ParseError)
    async def _parse_error(request: Request, exc: ParseError):
        return error_response(exc)

    @app.exception_handler(ApiError)
    async def _api_error(request: Request, exc: ApiError):
        return error_response(exc)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request: Request, exc: RequestValidationError):
        return JSONResponse(
            status_code=400,
            content={"error": {"code": "VALIDATION_ERROR", "message": str(exc)}},
        )

    def params(request: Request, *allowed: str) -> dict[str, str]:
        given = dict(request.query_params)
        unknown = set(given) - set(allowed)
        if unknown:
            raise ApiError(
                status=400,
                code="UNKNOWN_PARAMETER",
                message=f"unknown query parameter(s): {', '.join(sorted(unknown))}",
            )
        return given

    def snapshot(request: Request) -> Snapshot:
        return request.app.state.snapshot

    @app.get("/healthz")
    def healthz(request: Request):
        params(request)
        snap = snapshot(request)
        return {
            "status": "ok",
            "buildStamp": snap.index.build_stamp,
            "documents": len(snap.index.docs),
        }

    @app.get("/search/formula")
    def search_formula(request: Request):
        given = params(request, "mode", "pattern", "concepts", "scope", "expand")
        snap = snapshot(request)
        mode = given.get("mode", "syntactic")
        if mode == "syntactic":
            pattern_text = given.get("pattern", "")
            if not pattern_text:
                raise FormatError("pattern is required", field="pattern")
            hits = search_formula_syntactic(snap.index, parse_pattern(pattern_text))
        elif mode == "semantic":
            raw = given.get("concepts", "")
            concepts = [c for c in (part.strip() for part in raw.split(",")) if c]
            if not concepts:
                raise FormatError("concepts is required", field="concepts")
            scope = (
                _segment_type(given["scope"]) if "scope" in given else None
            )
            expand = (
                _bool_param(given["expand"], "expand") if "expand" in given else True
            )
            hits = search_formula_semantic(
                snap.index, concepts, scope=scope, expand=expand
            )
        else:
            raise FormatError(f"unknown mode: {mode!r}", field="mode")
        return {
            "buildStamp": snap.index.build_stamp,
            "hits": [_hit_json(h) for h in hits],
        }

    @app.get("/search/segments")
    def search_segments_endpoint(request: Request):
        given = params(request, "type", "via", "target")
        snap = snapshot(request)
        for field in ("type", "via", "target"):
            if not given.get(field):
                raise FormatError(f"{field} is required", field=field)
        hits = search_segments(
            snap.index,
            _segment_type(given["type"]),
            _relation_kind(given["via"]),
            given["target"],
        )
        return {
            "buildStamp": snap.index.build_stamp,
            "hits": [_hit_json(h) for h in hits],
        }

    @app.get("/aggregate")
    def aggregate_endpoint(request: Request):
        given = params(request, "type", "area", "object")
        snap = snapshot(request)
        hits = aggregate(
            snap.index,
            segment_type=_segment_type(given["type"]) if "type" in given else None,
            area=given.get("area"),
            object_concept=given.get("object"),
        )
        return {
            "buildStamp": snap.index.build_stamp,
            "hits": [_hit_json(h) for h in hits],
        }

    @app.get("/recommend/{doc_id}")
    def recommend_endpoint(doc_id: str, request: Request):
        given = params(request, "profile", "k")
        snap = snapshot(request)
        profile_name = given.get("profile", "referee")
        profile = snap.profiles.get(profile_name)
        if profile is None:
            raise ApiError(
                status=404,
                code="UNKNOWN_PROFILE",
                message=f"unknown profile: {profile_name}",
            )
        k = _int_param(given["k"], "k") if "k" in given else 5
        results = recommend(snap.index, doc_id, profile, k)
        return {
            "buildStamp": snap.index.build_stamp,
            "profile": profile_name,
            "recommendations": [
                {"docId": other, "score": score} for other, score in results
            ],
        }

    @app.get("/ontology/suggest")
    def suggest_endpoint(request: Request):
        given = params(request, "q", "lang", "limit")
        snap = snapshot(request)
        q = given.get("q", "").strip()
        if not q:
            raise FormatError("q is required", field="q")
        lang = given.get("lang")
        limit = _int_param(given["limit"], "limit") if "limit" in given else 10
        if not (1 <= limit <= 100):
            raise FormatError("limit must lie in [1, 100]", field="limit")
        return {
            "buildStamp": snap.index.build_stamp,
            "suggestions": _suggest(snap.index.ontology, q, lang, limit),
        }

    @app.get("/documents/{doc_id}")
    def document_endpoint(doc_id: str, request: Request):
        params(request)
        snap = snapshot(request)
        body = _document_json(snap, doc_id)
        body["buildStamp"] = snap.index.build_stamp
        return body

    @app.get("/documents/{doc_id}/rdf")
    def document_rdf_endpoint(doc_id: str, request: Request):
        given = params(request, "format")
        snap = snapshot(request)
        fmt = given.get("format", "nt")
        if fmt not in ("nt", "ttl"):
            raise FormatError(f"format must be nt or ttl, got {fmt!r}", field="format")
        doc = snap.index.docs.get(doc_id)
        if doc is None:
            raise UnknownDocument(f"unknown document: {doc_id}")
        triples = document_to_triples(
            doc,
            snap.index.annotations.get(doc_id, ()),
            snap.index.bindings.get(doc_id, ()),
            snap.index.ontology,
            snap.base_iri,
        )
        if fmt == "nt":
            payload, media = serialize_ntriples(triples), "text/plain; charset=utf-8"
        else:
            payload, media = serialize_turtle(triples), "text/turtle; charset=utf-8"
        return Response(
            content=payload,
            media_type=media,
            headers={"X-Build-Stamp": snap.index.build_stamp},
        )

    @app.post("/admin/reload")
    def reload_endpoint(request: Request):
        params(request)
        with request.app.state.reload_lock:
            snap = _build_snapshot(request.app.state.config)
            request.app.state.snapshot = snap
        return {
            "buildStamp": snap.index.build_stamp,
            "documents": len(snap.index.docs),
            "failures": [list(f) for f in snap.report.failures],
        }

    return app
