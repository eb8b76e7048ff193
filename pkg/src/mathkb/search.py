"""Immutable corpus index and the four query families over it.

Formula postings are keyed by the renaming-invariant canonical key of
every subterm, so wildcard-free lookups need no unification at query
time; wildcard patterns fall back to a full matcher scan. An Index is a
snapshot: queries never mutate it, and rebuilds swap whole objects.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field

from .annotator import Annotation, VariableBinding
from .document.model import MathDocument, SegmentRelationKind, SegmentType
from .errors import (
    DuplicateDocId,
    FormatError,
    StaleHit,
    UnknownConcept,
    UnresolvedLabel,
)
from .formula import (
    FormulaPattern,
    Identifier,
    Path,
    Wildcard,
    canonical_key,
    match_pattern,
    skeleton_key,
    subterms,
    to_mathml,
    walk,
)
from .ontology import Ontology, descendants, find_by_label

__all__ = [
    "ConceptPosting",
    "FormulaPosting",
    "Hit",
    "Index",
    "Snippet",
    "aggregate",
    "build_index",
    "highlight",
    "search_formula_semantic",
    "search_formula_syntactic",
    "search_segments",
]


@dataclass(frozen=True)
class FormulaPosting:
    doc_id: str
    segment_id: str
    formula_id: str
    path: Path


@dataclass(frozen=True)
class ConceptPosting:
    doc_id: str
    segment_id: str
    formula_id: str | None  # set for bindings, None for annotations
    via: str  # "annotation" | "binding"
    symbol: str | None = None
    span: tuple[int, int] | None = None


@dataclass(frozen=True)
class Hit:
    doc_id: str
    segment_id: str
    formula_id: str | None
    score: float
    highlights: tuple[tuple[int, ...], ...]  # node paths or (start, end) spans
    explain: tuple[str, ...]
    mathml: str | None = None


@dataclass(frozen=True)
class Snippet:
    doc_id: str
    segment_id: str
    formula_id: str | None
    text: str | None
    mathml: str | None
    marks: tuple[tuple[int, ...], ...]


@dataclass(frozen=True)
class Index:
    docs: dict[str, MathDocument]
    formula_postings: dict[str, tuple[FormulaPosting, ...]]
    concept_postings: dict[str, tuple[ConceptPosting, ...]]
    segment_postings: dict[SegmentType, tuple[tuple[str, str], ...]]
    ontology: Ontology
    build_stamp: str
    annotations: dict[str, tuple[Annotation, ...]] = field(default_factory=dict)
    bindings: dict[str, tuple[VariableBinding, ...]] = field(default_factory=dict)


def _segment_order(segment_id: str) -> int:
    return int(segment_id.rsplit("#s", 1)[1])


def _formula_order(formula_id: str | None) -> int:
    if formula_id is None:
        return -1
    return int(formula_id.rsplit("#f", 1)[1])


def _posting_key(doc_id: str, segment_id: str, formula_id: str | None = None):
    return (doc_id, _segment_order(segment_id), _formula_order(formula_id))


def build_index(
    corpus: list[tuple[MathDocument, tuple[Annotation, ...], tuple[VariableBinding, ...]]],
    o: Ontology,
) -> Index:
    """Index an annotated corpus; deterministic for identical input."""
    docs: dict[str, MathDocument] = {}
    annotations: dict[str, tuple[Annotation, ...]] = {}
    bindings: dict[str, tuple[VariableBinding, ...]] = {}
    formula_postings: dict[str, list[FormulaPosting]] = {}
    concept_postings: dict[str, list[ConceptPosting]] = {}
    segment_postings: dict[SegmentType, list[tuple[str, str]]] = {}

    stamp = hashlib.sha256()
    for doc, doc_annotations, doc_bindings in sorted(corpus, key=lambda item: item[0].id):
        if doc.id in docs:
            raise DuplicateDocId(f"duplicate document id: {doc.id}")
        docs[doc.id] = doc
        annotations[doc.id] = tuple(doc_annotations)
        bindings[doc.id] = tuple(doc_bindings)
        stamp.update(doc.id.encode())
        for segment in doc.segments:
            stamp.update(segment.id.encode())
            stamp.update(segment.text.encode())
            segment_postings.setdefault(segment.type, []).append((doc.id, segment.id))
            for record in segment.formulas:
                stamp.update(record.source.encode())
                if record.ast is None:
                    continue
                for path, node in subterms(record.ast):
                    formula_postings.setdefault(canonical_key(node), []).append(
                        FormulaPosting(doc.id, segment.id, record.id, path)
                    )
        for ann in doc_annotations:
            stamp.update(repr((ann.segment_id, ann.span, ann.concept_id)).encode())
            concept_postings.setdefault(ann.concept_id, []).append(
                ConceptPosting(
                    doc_id=doc.id,
                    segment_id=ann.segment_id,
                    formula_id=None,
                    via="annotation",
                    span=ann.span,
                )
            )
        for binding in doc_bindings:
            stamp.update(
                repr((binding.formula_id, binding.symbol, binding.concept_id)).encode()
            )
            concept_postings.setdefault(binding.concept_id, []).append(
                ConceptPosting(
                    doc_id=doc.id,
                    segment_id=binding.segment_id,
                    formula_id=binding.formula_id,
                    via="binding",
                    symbol=binding.symbol,
                )
            )

    def freeze(posting_map, key):
        return {
            k: tuple(sorted(v, key=key)) for k, v in sorted(posting_map.items())
        }

    return Index(
        docs=docs,
        formula_postings=freeze(
            formula_postings,
            lambda p: (_posting_key(p.doc_id, p.segment_id, p.formula_id), p.path),
        ),
        concept_postings=freeze(
            concept_postings,
            lambda p: (_posting_key(p.doc_id, p.segment_id, p.formula_id), p.via),
        ),
        segment_postings={
            k: tuple(sorted(v, key=lambda s: _posting_key(*s)))
            for k, v in sorted(segment_postings.items(), key=lambda kv: kv[0].value)
        },
        ontology=o,
        build_stamp=stamp.hexdigest(),
        annotations=annotations,
        bindings=bindings,
    )


def _rank(hits: list[Hit]) -> list[Hit]:
    return sorted(
        hits,
        key=lambda h: (
            -h.score,
            h.doc_id,
            _segment_order(h.segment_id),
            _formula_order(h.formula_id),
        ),
    )


def _has_wildcards(pattern: FormulaPattern) -> bool:
    return any(isinstance(node, Wildcard) for _, node in walk(pattern.root))


def _iter_formulas(ix: Index):
    for doc_id in sorted(ix.docs):
        doc = ix.docs[doc_id]
        for segment in doc.segments:
            for record in segment.formulas:
                yield doc, segment, record


def search_formula_syntactic(ix: Index, pattern: FormulaPattern) -> list[Hit]:
    """All subterm matches of the pattern, ranked by per-document count.

    Wildcard-free patterns resolve through the canonical-key postings;
    patterns with wildcards run the matcher over every stored formula.
    """
    found: dict[tuple[str, str, str], list[tuple[Path, str]]] = {}
    if not _has_wildcards(pattern):
        for posting in ix.formula_postings.get(canonical_key(pattern.root), ()):
            found.setdefault(
                (posting.doc_id, posting.segment_id, posting.formula_id), []
            ).append((posting.path, ""))
    else:
        for doc, segment, record in _iter_formulas(ix):
            if record.ast is None:
                continue
            for m in match_pattern(pattern, record.ast):
                detail = ", ".join(
                    f"?{tag} -> {skeleton_key(node)}"
                    for tag, node in sorted(m.bindings.items())
                )
                found.setdefault((doc.id, segment.id, record.id), []).append(
                    (m.location, detail)
                )

    per_doc: dict[str, int] = {}
    for (doc_id, _, _), matches in found.items():
        per_doc[doc_id] = per_doc.get(doc_id, 0) + len(matches)

    hits = []
    for (doc_id, segment_id, formula_id), matches in found.items():
        record = next(
            r
            for r in ix.docs[doc_id].segment(segment_id).formulas
            if r.id == formula_id
        )
        explain = tuple(sorted({d for _, d in matches if d}))
        hits.append(
            Hit(
                doc_id=doc_id,
                segment_id=segment_id,
                formula_id=formula_id,
                score=float(per_doc[doc_id]),
                highlights=tuple(path for path, _ in sorted(matches)),
                explain=explain or (f"{len(matches)} match(es)",),
                mathml=to_mathml(record.ast) if record.ast is not None else None,
            )
        )
    return _rank(hits)


def _expansion(o: Ontology, concept_id: str, expand: bool) -> frozenset[str]:
    if concept_id not in o:
        raise UnknownConcept(f"unknown concept: {concept_id}")
    if not expand:
        return frozenset({concept_id})
    return frozenset(descendants(o, concept_id))


def search_formula_semantic(
    ix: Index,
    concepts,
    scope: SegmentType | None = None,
    expand: bool = True,
) -> list[Hit]:
    """Formulas whose segment evidence covers every query concept.

    Query entries are concept ids or unique labels. Evidence per concept:
    a variable binding on the formula (weight 1.0) or an annotation on
    the enclosing segment (weight 0.5). With expand, a query concept is
    satisfied by any of its IsA descendants.
    """
    if not set(concepts):
        raise FormatError("at least one concept required")
    # labels resolve exactly like every other query surface
    query = sorted({_resolve_target(ix.ontology, c) for c in set(concepts)})
    expansions = {c: _expansion(ix.ontology, c, expand) for c in query}

    bound: dict[str, dict[str, set[str]]] = {}  # formula -> concept -> symbols
    annotated: dict[str, set[str]] = {}  # segment -> concepts
    for concept_id, postings in ix.concept_postings.items():
        for p in postings:
            if p.via == "binding":
                bound.setdefault(p.formula_id, {}).setdefault(concept_id, set()).add(
                    p.symbol
                )
            else:
                annotated.setdefault(p.segment_id, set()).add(concept_id)

    hits = []
    for doc, segment, record in _iter_formulas(ix):
        if scope is not None and segment.type != scope:
            continue
        score = 0.0
        explain: list[str] = []
        highlights: list[Path] = []
        qualified = True
        for query_concept in query:
            members = expansions[query_concept]
            symbols = set()
            for member in members & set(bound.get(record.id, {})):
                symbols |= bound[record.id][member]
            if symbols:
                score += 1.0
                for symbol in sorted(symbols):
                    explain.append(f"{query_concept} via binding {symbol}")
                    if record.ast is not None:
                        highlights.extend(
                            path
                            for path, node in walk(record.ast.root)
                            if isinstance(node, Identifier) and node.name == symbol
                        )
            elif members & annotated.get(segment.id, set()):
                score += 0.5
                explain.append(f"{query_concept} via annotation")
            else:
                qualified = False
                break
        if not qualified:
            continue
        hits.append(
            Hit(
                doc_id=doc.id,
                segment_id=segment.id,
                formula_id=record.id,
                score=score,
                highlights=tuple(highlights) or ((),),
                explain=tuple(explain),
                mathml=to_mathml(record.ast) if record.ast is not None else None,
            )
        )
    return _rank(hits)


def _resolve_target(o: Ontology, target: str) -> str:
    if target in o:
        return target
    matches = find_by_label(o, target)
    if len(matches) == 1:
        return next(iter(matches))
    if not matches:
        raise UnknownConcept(f"unknown concept or label: {target}")
    raise UnresolvedLabel(f"label {target!r} matches several concepts: {sorted(matches)}")


def search_segments(
    ix: Index,
    type: SegmentType,
    via: SegmentRelationKind,
    target: str,
) -> list[Hit]:
    """Segments of a type reached through a relation from target evidence.

    For proves, returns segments S with some P proves S where P carries
    the target concept (annotated directly, or refersTo a segment that
    is). For any other kind, S itself must have an edge of that kind to
    a segment annotated with the target.
    """
    concept_id = _resolve_target(ix.ontology, target)
    annotated: dict[str, list[tuple[int, int]]] = {}
    for p in ix.concept_postings.get(concept_id, ()):
        if p.via == "annotation":
            annotated.setdefault(p.segment_id, []).append(p.span)

    def segment_matches(doc: MathDocument, segment_id: str) -> list[tuple[int, int]]:
        spans = list(annotated.get(segment_id, []))
        for rel in doc.relations:
            if rel.src == segment_id and rel.kind == SegmentRelationKind.REFERS_TO:
                spans.extend(annotated.get(rel.dst, []))
        return spans

    hits = []
    for doc_id in sorted(ix.docs):
        doc = ix.docs[doc_id]
        evidence: dict[str, list[tuple[str, list[tuple[int, int]]]]] = {}
        for rel in doc.relations:
            if via == SegmentRelationKind.PROVES:
                if rel.kind != SegmentRelationKind.PROVES:
                    continue
                subject, prover = rel.dst, rel.src
                spans = segment_matches(doc, prover)
                if spans and doc.segment(subject).type == type:
                    evidence.setdefault(subject, []).append((prover, spans))
            else:
                if rel.kind != via:
                    continue
                spans = annotated.get(rel.dst, [])
                if spans and doc.segment(rel.src).type == type:
                    evidence.setdefault(rel.src, []).append((rel.dst, spans))
        for segment_id, sources in sorted(evidence.items()):
            all_spans: list[tuple[int, int]] = []
            explain = []
            for other_id, spans in sources:
                all_spans.extend(spans)
                explain.append(f"{via.value} evidence in {other_id}")
            hits.append(
                Hit(
                    doc_id=doc_id,
                    segment_id=segment_id,
                    formula_id=None,
                    score=float(len(sources)),
                    highlights=tuple(sorted(set(all_spans))),
                    explain=tuple(explain),
                )
            )
    return _rank(hits)


def aggregate(
    ix: Index,
    segment_type: SegmentType | None = None,
    area: str | None = None,
    object_concept: str | None = None,
) -> list[Hit]:
    """Intersection of segment-type, document-area, and object criteria."""
    if segment_type is None and area is None and object_concept is None:
        raise FormatError("at least one aggregation criterion required")

    area_docs: set[str] | None = None
    if area is not None:
        wanted = _expansion(ix.ontology, area, expand=True)
        area_docs = set()
        for concept_id in wanted:
            for p in ix.concept_postings.get(concept_id, ()):
                area_docs.add(p.doc_id)

    object_segments: dict[str, list[ConceptPosting]] | None = None
    if object_concept is not None:
        if object_concept not in ix.ontology:
            raise UnknownConcept(f"unknown concept: {object_concept}")
        object_segments = {}
        for p in ix.concept_postings.get(object_concept, ()):
            object_segments.setdefault(p.segment_id, []).append(p)

    hits = []
    for doc_id in sorted(ix.docs):
        if area_docs is not None and doc_id not in area_docs:
            continue
        doc = ix.docs[doc_id]
        for segment in doc.segments:
            if segment_type is not None and segment.type != segment_type:
                continue
            explain = []
            spans: list[tuple[int, int]] = []
            if object_segments is not None:
                postings = object_segments.get(segment.id)
                if not postings:
                    continue
                for p in postings:
                    if p.via == "binding":
                        explain.append(f"{object_concept} bound to {p.symbol} in {p.formula_id}")
                    else:
                        explain.append(f"{object_concept} via annotation")
                        if p.span is not None:
                            spans.append(p.span)
            if segment_type is not None:
                explain.append(f"type {segment_type.value}")
            if area is not None:
                explain.append(f"area {area}")
            hits.append(
                Hit(
                    doc_id=doc_id,
                    segment_id=segment.id,
                    formula_id=None,
                    score=1.0,
                    highlights=tuple(sorted(set(spans))),
                    explain=tuple(explain),
                )
            )
    return _rank(hits)


def highlight(hit: Hit, ix: Index) -> Snippet:
    """Render one hit: MathML plus node paths, or a ±80-char text window.

    Raises StaleHit when the hit references entities this index does not
    hold (e.g. after a reload).
    """
    doc = ix.docs.get(hit.doc_id)
    if doc is None:
        raise StaleHit(f"unknown document: {hit.doc_id}")
    try:
        segment = doc.segment(hit.segment_id)
    except KeyError:
        raise StaleHit(f"unknown segment: {hit.segment_id}") from None

    if hit.formula_id is not None:
        record = next((r for r in segment.formulas if r.id == hit.formula_id), None)
        if record is None:
            raise StaleHit(f"unknown formula: {hit.formula_id}")
        return Snippet(
            doc_id=hit.doc_id,
            segment_id=hit.segment_id,
            formula_id=hit.formula_id,
            text=record.source,
            mathml=to_mathml(record.ast) if record.ast is not None else None,
            marks=hit.highlights,
        )

    text = segment.text
    spans = [s for s in hit.highlights if len(s) == 2 and s[0] <= s[1] <= len(text)]
    if spans:
        lo = max(0, min(s[0] for s in spans) - 80)
        hi = min(len(text), max(s[1] for s in spans) + 80)
    else:
        lo, hi = 0, min(len(text), 160)
    window = text[lo:hi]
    marks = tuple(
        (s[0] - lo, s[1] - lo) for s in spans if s[0] >= lo and s[1] <= hi
    )
    return Snippet(
        doc_id=hit.doc_id,
        segment_id=hit.segment_id,
        formula_id=None,
        text=window,
        mathml=None,
        marks=marks,
    )
