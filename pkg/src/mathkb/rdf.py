"""RDF emission of annotated documents, with N-Triples and Turtle output.

All vocabulary IRIs live in this one header. Emission follows a fixed
table, so the triple count is an exact function of document shape; output
is deduplicated and sorted for byte-stable golden files. No blank nodes:
variable bindings get minted IRIs.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from urllib.parse import quote, urlsplit

from .annotator import Annotation, VariableBinding
from .document.model import FormulaRecord, MathDocument, Segment, SegmentRelationKind
from .errors import FormatError, InvalidBase
from .formula import to_mathml
from .ontology import Concept, Ontology

RDF_NS = "http://www.w3.org/1999/02/22-rdf-syntax-ns#"
DCTERMS_NS = "http://purl.org/dc/terms/"
OWL_NS = "http://www.w3.org/2002/07/owl#"
MOCASSIN_NS = "http://cll.niimm.ksu.ru/ontologies/mocassin#"
ONTOMATHPRO_NS = "http://ontomathpro.org/ontology#"

RDF_TYPE = RDF_NS + "type"
DC_TITLE = DCTERMS_NS + "title"
DC_CREATOR = DCTERMS_NS + "creator"
DC_LANGUAGE = DCTERMS_NS + "language"
DC_ABSTRACT = DCTERMS_NS + "abstract"
OWL_SAME_AS = OWL_NS + "sameAs"

MOCASSIN_FORMULA = MOCASSIN_NS + "Formula"
MOCASSIN_HAS_MATHML = MOCASSIN_NS + "hasMathML"
OMP_MENTIONS_CONCEPT = ONTOMATHPRO_NS + "mentionsConcept"
OMP_VARIABLE_BINDING = ONTOMATHPRO_NS + "VariableBinding"
OMP_BINDS_SYMBOL = ONTOMATHPRO_NS + "bindsSymbol"
OMP_DENOTES_CONCEPT = ONTOMATHPRO_NS + "denotesConcept"

DEFAULT_NAMESPACES: tuple[tuple[str, str], ...] = (
    ("dcterms", DCTERMS_NS),
    ("mocassin", MOCASSIN_NS),
    ("ontomathpro", ONTOMATHPRO_NS),
    ("owl", OWL_NS),
    ("rdf", RDF_NS),
)

_IRI_SCHEME_RE = re.compile(r"^[A-Za-z][A-Za-z0-9+.-]*:")
_IRI_FORBIDDEN = set(' <>"{}|^`\\') | {chr(c) for c in range(0x21)}

_LANGUAGE_TAGS = ("en", "ru")


def _check_iri(iri: str, role: str) -> None:
    if not _IRI_SCHEME_RE.match(iri):
        raise FormatError(f"{role} must be an absolute IRI: {iri!r}")
    bad = set(iri) & _IRI_FORBIDDEN
    if bad:
        raise FormatError(f"{role} contains forbidden characters {sorted(bad)}: {iri!r}")


@dataclass(frozen=True, order=True)
class Literal:
    lexical: str
    lang: str | None = None

    def __post_init__(self):
        if self.lang is not None and self.lang not in _LANGUAGE_TAGS:
            raise FormatError(f"unsupported language tag: {self.lang!r}")


@dataclass(frozen=True)
class Triple:
    subject: str
    predicate: str
    object: str | Literal

    def __post_init__(self):
        _check_iri(self.subject, "subject")
        _check_iri(self.predicate, "predicate")
        if isinstance(self.object, str):
            _check_iri(self.object, "object")


def _sort_key(t: Triple):
    if isinstance(t.object, Literal):
        obj = (1, t.object.lexical, t.object.lang or "")
    else:
        obj = (0, t.object, "")
    return (t.subject, t.predicate, obj)


@dataclass(frozen=True)
class TripleSet:
    triples: tuple[Triple, ...]
    namespaces: tuple[tuple[str, str], ...] = DEFAULT_NAMESPACES

    def __len__(self) -> int:
        return len(self.triples)

    def __iter__(self):
        return iter(self.triples)


def triple_set(
    triples, namespaces: tuple[tuple[str, str], ...] = DEFAULT_NAMESPACES
) -> TripleSet:
    """Deduplicated, (subject, predicate, object)-sorted TripleSet."""
    unique = sorted(set(triples), key=_sort_key)
    return TripleSet(triples=tuple(unique), namespaces=namespaces)


def _check_base(base: str) -> str:
    if not isinstance(base, str) or not base:
        raise InvalidBase("base IRI must be a non-empty string")
    if any(ch.isspace() for ch in base):
        raise InvalidBase(f"base IRI contains whitespace: {base!r}")
    parts = urlsplit(base)
    if not parts.scheme:
        raise InvalidBase(f"base IRI must be absolute: {base!r}")
    if parts.fragment or base.endswith("#"):
        raise InvalidBase(f"base IRI must not carry a fragment: {base!r}")
    return base.rstrip("/")


def validate_base(base: str) -> str:
    """The normalized base IRI, or InvalidBase when it cannot mint IRIs."""
    return _check_base(base)


def _doc_iri(base: str, doc_id: str) -> str:
    return f"{_check_base(base)}/doc/{quote(doc_id, safe='')}"


def _concept_iri(base: str, concept_id: str) -> str:
    return f"{_check_base(base)}/concept/{quote(concept_id, safe='')}"


def _fragment_iri(base: str, element_id: str) -> str:
    doc_id, _, fragment = element_id.rpartition("#")
    return f"{_doc_iri(base, doc_id)}#{quote(fragment, safe='')}"


def mint_iri(entity, base: str) -> str:
    """Deterministic IRI for a document, segment, formula, or concept.

    Identifier parts are percent-encoded; the base must be an absolute
    IRI without a fragment (InvalidBase otherwise).
    """
    if isinstance(entity, MathDocument):
        return _doc_iri(base, entity.id)
    if isinstance(entity, (Segment, FormulaRecord)):
        return _fragment_iri(base, entity.id)
    if isinstance(entity, Concept):
        return _concept_iri(base, entity.id)
    raise TypeError(f"cannot mint an IRI for {type(entity).__name__}")


def _binding_iri(base: str, doc_id: str, n: int) -> str:
    return f"{_doc_iri(base, doc_id)}#b{n}"


def _formula_literal(record: FormulaRecord) -> Literal:
    if record.ast is not None:
        return Literal(to_mathml(record.ast))
    escaped = (
        record.source.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
    )
    return Literal(f"<math><merror><mtext>{escaped}</mtext></merror></math>")


def document_to_triples(
    doc: MathDocument,
    annotations,
    bindings,
    o: Ontology,
    base: str,
) -> TripleSet:
    """Emit the LOD form of one annotated document.

    Emission table (exhaustive): document type/title/creator*/language/
    abstract?; per segment a type triple; one triple per document
    relation; per formula a type triple and a MathML literal; one
    mentionsConcept triple per annotated (segment, concept) pair; three
    triples per variable binding; one sameAs triple per external link of
    each referenced concept.
    """
    base = _check_base(base)
    doc_iri = _doc_iri(base, doc.id)
    meta = doc.metadata
    out: list[Triple] = [
        Triple(doc_iri, RDF_TYPE, MOCASSIN_NS + "Document"),
        Triple(doc_iri, DC_TITLE, Literal(meta.title, meta.language)),
        Triple(doc_iri, DC_LANGUAGE, Literal(meta.language)),
    ]
    for author in meta.authors:
        out.append(Triple(doc_iri, DC_CREATOR, Literal(author)))
    if meta.abstract is not None:
        out.append(Triple(doc_iri, DC_ABSTRACT, Literal(meta.abstract, meta.language)))

    for segment in doc.segments:
        segment_iri = _fragment_iri(base, segment.id)
        out.append(Triple(segment_iri, RDF_TYPE, MOCASSIN_NS + segment.type.value))
        for record in segment.formulas:
            formula_iri = _fragment_iri(base, record.id)
            out.append(Triple(formula_iri, RDF_TYPE, MOCASSIN_FORMULA))
            out.append(Triple(formula_iri, MOCASSIN_HAS_MATHML, _formula_literal(record)))

    for relation in doc.relations:
        out.append(
            Triple(
                _fragment_iri(base, relation.src),
                MOCASSIN_NS + relation.kind.value,
                _fragment_iri(base, relation.dst),
            )
        )

    referenced: set[str] = set()
    for ann in annotations:
        referenced.add(ann.concept_id)
        out.append(
            Triple(
                _fragment_iri(base, ann.segment_id),
                OMP_MENTIONS_CONCEPT,
                _concept_iri(base, ann.concept_id),
            )
        )

    for n, binding in enumerate(bindings, start=1):
        referenced.add(binding.concept_id)
        node = _binding_iri(base, doc.id, n)
        out.append(Triple(node, RDF_TYPE, OMP_VARIABLE_BINDING))
        out.append(Triple(node, OMP_BINDS_SYMBOL, Literal(binding.symbol)))
        out.append(Triple(node, OMP_DENOTES_CONCEPT, _concept_iri(base, binding.concept_id)))

    for concept_id in sorted(referenced):
        item = o.concepts.get(concept_id)
        if item is None:
            continue
        for link in item.external_links:
            out.append(Triple(_concept_iri(base, concept_id), OWL_SAME_AS, link))

    return triple_set(out)


def _escape_literal(text: str) -> str:
    out = []
    for ch in text:
        if ch == "\\":
            out.append("\\\\")
        elif ch == '"':
            out.append('\\"')
        elif ch == "\n":
            out.append("\\n")
        elif ch == "\r":
            out.append("\\r")
        elif ch == "\t":
            out.append("\\t")
        elif ord(ch) < 0x20:
            out.append(f"\\u{ord(ch):04X}")
        else:
            out.append(ch)
    return "".join(out)


def _term_nt(obj: str | Literal) -> str:
    if isinstance(obj, Literal):
        tag = f"@{obj.lang}" if obj.lang else ""
        return f'"{_escape_literal(obj.lexical)}"{tag}'
    return f"<{obj}>"


def serialize_ntriples(ts: TripleSet) -> bytes:
    """One sorted triple per line; empty set gives empty output."""
    lines = [
        f"<{t.subject}> <{t.predicate}> {_term_nt(t.object)} .\n" for t in ts.triples
    ]
    return "".join(lines).encode("utf-8")


_LOCAL_RE = re.compile(r"^[A-Za-z][A-Za-z0-9_]*$")


def _term_ttl(term: str | Literal, namespaces) -> str:
    if isinstance(term, Literal):
        return _term_nt(term)
    for prefix, ns in namespaces:
        if term.startswith(ns) and _LOCAL_RE.match(term[len(ns):]):
            return f"{prefix}:{term[len(ns):]}"
    return f"<{term}>"


def serialize_turtle(ts: TripleSet) -> bytes:
    """Grammar-valid Turtle: @prefix block, subjects grouped with ';'."""
    if not ts.triples:
        return b""
    namespaces = tuple(sorted(ts.namespaces))
    lines = [f"@prefix {prefix}: <{ns}> ." for prefix, ns in namespaces]
    lines.append("")
    current: str | None = None
    for n, t in enumerate(ts.triples):
        predicate = (
            "a" if t.predicate == RDF_TYPE else _term_ttl(t.predicate, namespaces)
        )
        obj = _term_ttl(t.object, namespaces)
        last = n + 1 == len(ts.triples) or ts.triples[n + 1].subject != t.subject
        ending = " ." if last else " ;"
        if t.subject != current:
            lines.append(f"<{t.subject}> {predicate} {obj}{ending}")
            current = t.subject
        else:
            lines.append(f"    {predicate} {obj}{ending}")
    return ("\n".join(lines) + "\n").encode("utf-8")
