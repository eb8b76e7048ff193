"""Concept graph of mathematical knowledge: two taxonomies plus relations.

Concepts split into areas of mathematics and mathematical objects, each
carrying bilingual (en/ru) labels. Five relation kinds connect them; isA
restricted to one kind must form a DAG. Loading is strict about
referential integrity, while ``validate`` reports every structural
violation so broken graphs can still be inspected.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable
from urllib.parse import urlsplit

from .errors import FormatError, IntegrityError, UnknownConcept

LANGUAGES = ("en", "ru")


class ConceptKind(str, Enum):
    AREA = "area"
    OBJECT = "object"


class RelationKind(str, Enum):
    IS_A = "isA"
    DEFINED_BY = "definedBy"
    SEE_ALSO = "seeAlso"
    BELONGS_TO = "belongsTo"
    SOLVED_BY = "solvedBy"


@dataclass(frozen=True)
class Concept:
    id: str
    kind: ConceptKind
    labels: tuple[tuple[str, tuple[str, ...]], ...] = ()
    definitions: tuple[tuple[str, str], ...] = ()
    external_links: tuple[str, ...] = ()

    def labels_for(self, lang: str) -> tuple[str, ...]:
        for key, values in self.labels:
            if key == lang:
                return values
        return ()

    def definition_for(self, lang: str) -> str | None:
        for key, value in self.definitions:
            if key == lang:
                return value
        return None


@dataclass(frozen=True)
class RelationEdge:
    src: str
    kind: RelationKind
    dst: str


@dataclass
class ValidationReport:
    errors: list[str] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.errors


def concept(
    id: str,
    kind: ConceptKind | str,
    labels: dict[str, Iterable[str]] | None = None,
    definitions: dict[str, str] | None = None,
    external_links: Iterable[str] = (),
) -> Concept:
    """Convenience constructor taking plain dicts."""
    return Concept(
        id=id,
        kind=ConceptKind(kind),
        labels=tuple((lang, tuple(values)) for lang, values in (labels or {}).items()),
        definitions=tuple((definitions or {}).items()),
        external_links=tuple(external_links),
    )


class Ontology:
    """Indexed, immutable-after-construction concept graph.

    Construction is permissive: duplicate ids are recorded (last one wins
    in the map) and edges may dangle, so ``validate`` can report on broken
    inputs. ``load_ontology`` applies the strict checks.
    """

    def __init__(self, concepts: Iterable[Concept], edges: Iterable[RelationEdge]):
        self.concepts: dict[str, Concept] = {}
        self.duplicate_ids: tuple[str, ...] = ()
        duplicates = []
        for item in concepts:
            if item.id in self.concepts:
                duplicates.append(item.id)
            self.concepts[item.id] = item
        self.duplicate_ids = tuple(duplicates)
        self.edges: tuple[RelationEdge, ...] = tuple(edges)

        self.label_index: dict[tuple[str, str], set[str]] = {}
        for cid, item in self.concepts.items():
            for lang, values in item.labels:
                for value in values:
                    self.label_index.setdefault((lang, value.casefold()), set()).add(cid)

        self._isa_children: dict[str, list[str]] = {}
        self._isa_parents: dict[str, list[str]] = {}
        self._by_src: dict[tuple[str, RelationKind], set[str]] = {}
        for edge in self.edges:
            self._by_src.setdefault((edge.src, edge.kind), set()).add(edge.dst)
            if edge.kind == RelationKind.IS_A:
                self._isa_children.setdefault(edge.dst, []).append(edge.src)
                self._isa_parents.setdefault(edge.src, []).append(edge.dst)

    def __contains__(self, concept_id: str) -> bool:
        return concept_id in self.concepts

    def __len__(self) -> int:
        return len(self.concepts)


def _closure(o: Ontology, start: str, adjacency: dict[str, list[str]]) -> set[str]:
    if start not in o.concepts:
        raise UnknownConcept(f"unknown concept: {start}")
    kind = o.concepts[start].kind
    out = {start}
    stack = [start]
    while stack:
        for nxt in adjacency.get(stack.pop(), ()):
            if nxt in out or nxt not in o.concepts:
                continue
            if o.concepts[nxt].kind != kind:
                continue  # cross-kind isA is a violation; never traverse it
            out.add(nxt)
            stack.append(nxt)
    return out


def descendants(o: Ontology, concept_id: str) -> set[str]:
    """The concept and everything below it along isA, within its kind."""
    return _closure(o, concept_id, o._isa_children)


def ancestors(o: Ontology, concept_id: str) -> set[str]:
    """The concept and everything above it along isA, within its kind."""
    return _closure(o, concept_id, o._isa_parents)


def find_by_label(o: Ontology, text: str, lang: str | None = None) -> set[str]:
    """Concept ids whose label equals ``text`` case-folded; any language by default."""
    folded = text.casefold()
    langs = LANGUAGES if lang in (None, "any") else (lang,)
    found: set[str] = set()
    for key in langs:
        found |= o.label_index.get((key, folded), set())
    return found


def relations_of(o: Ontology, concept_id: str, kind: RelationKind | str | None = None) -> set[str]:
    """All dst ids with an edge (concept_id, kind, dst); every kind when omitted."""
    if concept_id not in o.concepts:
        raise UnknownConcept(f"unknown concept: {concept_id}")
    if kind is None:
        out: set[str] = set()
        for each in RelationKind:
            out |= o._by_src.get((concept_id, each), set())
        return out
    return set(o._by_src.get((concept_id, RelationKind(kind)), set()))


def _strongly_connected(nodes: list[str], edges: dict[str, list[str]]) -> list[list[str]]:
    """Iterative Tarjan; returns components in discovery order."""
    index_of: dict[str, int] = {}
    low: dict[str, int] = {}
    on_stack: set[str] = set()
    stack: list[str] = []
    components: list[list[str]] = []
    counter = 0

    for root in nodes:
        if root in index_of:
            continue
        work: list[tuple[str, int]] = [(root, 0)]
        while work:
            node, child_i = work[-1]
            if child_i == 0:
                index_of[node] = low[node] = counter
                counter += 1
                stack.append(node)
                on_stack.add(node)
            advanced = False
            neighbors = edges.get(node, [])
            while child_i < len(neighbors):
                nxt = neighbors[child_i]
                child_i += 1
                if nxt not in index_of:
                    work[-1] = (node, child_i)
                    work.append((nxt, 0))
                    advanced = True
                    break
                if nxt in on_stack:
                    low[node] = min(low[node], index_of[nxt])
            if advanced:
                continue
            work.pop()
            if low[node] == index_of[node]:
                component = []
                while True:
                    member = stack.pop()
                    on_stack.discard(member)
                    component.append(member)
                    if member == node:
                        break
                components.append(component)
            if work:
                parent = work[-1][0]
                low[parent] = min(low[parent], low[node])
    return components


def validate(o: Ontology) -> ValidationReport:
    """Report every structural violation; never raises."""
    report = ValidationReport()

    for dup in sorted(set(o.duplicate_ids)):
        report.errors.append(f"duplicate concept id: {dup}")

    for edge in o.edges:
        for endpoint, role in ((edge.src, "src"), (edge.dst, "dst")):
            if endpoint not in o.concepts:
                report.errors.append(
                    f"unknown concept in edge {role}: {endpoint} ({edge.src} {edge.kind.value} {edge.dst})"
                )

    def kind_of(concept_id: str) -> ConceptKind | None:
        item = o.concepts.get(concept_id)
        return item.kind if item else None

    for edge in o.edges:
        src_kind, dst_kind = kind_of(edge.src), kind_of(edge.dst)
        if src_kind is None or dst_kind is None:
            continue  # dangling endpoints already reported
        if edge.kind == RelationKind.IS_A and src_kind != dst_kind:
            report.errors.append(
                f"IsA must connect same-kind concepts: {edge.src} ({src_kind.value}) isA {edge.dst} ({dst_kind.value})"
            )
        elif edge.kind == RelationKind.BELONGS_TO:
            if dst_kind != ConceptKind.AREA:
                report.errors.append(f"BelongsTo must target an Area: {edge.src} belongsTo {edge.dst}")
            if src_kind != ConceptKind.OBJECT:
                report.errors.append(f"BelongsTo must start from an Object: {edge.src} belongsTo {edge.dst}")
        elif edge.kind in (RelationKind.DEFINED_BY, RelationKind.SEE_ALSO, RelationKind.SOLVED_BY):
            if src_kind != ConceptKind.OBJECT or dst_kind != ConceptKind.OBJECT:
                report.errors.append(
                    f"{edge.kind.value} must connect objects: {edge.src} {edge.kind.value} {edge.dst}"
                )

    for kind in ConceptKind:
        nodes = sorted(cid for cid, item in o.concepts.items() if item.kind == kind)
        selfloops = set()
        adjacency: dict[str, list[str]] = {}
        for edge in o.edges:
            if edge.kind != RelationKind.IS_A:
                continue
            if kind_of(edge.src) != kind or kind_of(edge.dst) != kind:
                continue
            if edge.src == edge.dst:
                selfloops.add(edge.src)
                continue
            adjacency.setdefault(edge.src, []).append(edge.dst)
        for component in _strongly_connected(nodes, adjacency):
            if len(component) > 1:
                report.errors.append("IsA cycle: " + ",".join(sorted(component)))
        for node in sorted(selfloops):
            report.errors.append(f"IsA cycle: {node}")

    for cid in sorted(o.concepts):
        item = o.concepts[cid]
        for lang in LANGUAGES:
            if not item.labels_for(lang):
                report.warnings.append(f"concept {cid} has no {lang} label")
        for link in item.external_links:
            split = urlsplit(link)
            if not split.scheme or any(ch.isspace() for ch in link):
                report.errors.append(f"invalid external link on {cid}: {link}")

    return report


def parse_ontology(text: str | bytes) -> Ontology:
    """Parse the JSON ontology format without integrity checks."""
    try:
        data = json.loads(text)
    except json.JSONDecodeError as err:
        raise FormatError(f"not valid JSON: {err}") from err
    if not isinstance(data, dict):
        raise FormatError("top level must be an object")
    for key in ("concepts", "relations"):
        if key not in data:
            raise FormatError("missing key", field=key)
        if not isinstance(data[key], list):
            raise FormatError("must be a list", field=key)

    concepts = []
    for i, raw in enumerate(data["concepts"]):
        concepts.append(_parse_concept(raw, f"concepts[{i}]"))
    edges = []
    for i, raw in enumerate(data["relations"]):
        edges.append(_parse_edge(raw, f"relations[{i}]"))
    return Ontology(concepts, edges)


def _parse_concept(raw: object, where: str) -> Concept:
    if not isinstance(raw, dict):
        raise FormatError("concept must be an object", field=where)
    if "id" not in raw or not isinstance(raw["id"], str) or not raw["id"]:
        raise FormatError("id must be a non-empty string", field=where)
    try:
        kind = ConceptKind(raw.get("kind"))
    except ValueError:
        raise FormatError("kind must be 'area' or 'object'", field=f"{where}.kind") from None

    labels_raw = raw.get("labels", {})
    if not isinstance(labels_raw, dict):
        raise FormatError("labels must be an object", field=f"{where}.labels")
    labels = []
    for lang, values in labels_raw.items():
        if lang not in LANGUAGES:
            raise FormatError("label language must be 'en' or 'ru'", field=f"{where}.labels.{lang}")
        if not isinstance(values, list) or not all(isinstance(v, str) for v in values):
            raise FormatError("labels must be lists of strings", field=f"{where}.labels.{lang}")
        labels.append((lang, tuple(values)))

    definitions_raw = raw.get("definitions", {})
    if not isinstance(definitions_raw, dict) or not all(
        isinstance(k, str) and isinstance(v, str) for k, v in definitions_raw.items()
    ):
        raise FormatError("definitions must map language to string", field=f"{where}.definitions")

    links_raw = raw.get("links", [])
    if not isinstance(links_raw, list) or not all(isinstance(v, str) for v in links_raw):
        raise FormatError("links must be a list of strings", field=f"{where}.links")

    return Concept(
        id=raw["id"],
        kind=kind,
        labels=tuple(labels),
        definitions=tuple(definitions_raw.items()),
        external_links=tuple(links_raw),
    )


def _parse_edge(raw: object, where: str) -> RelationEdge:
    if not isinstance(raw, dict):
        raise FormatError("relation must be an object", field=where)
    for key in ("src", "dst"):
        if not isinstance(raw.get(key), str) or not raw[key]:
            raise FormatError(f"{key} must be a non-empty string", field=where)
    try:
        kind = RelationKind(raw.get("kind"))
    except ValueError:
        raise FormatError(
            "kind must be one of isA, definedBy, seeAlso, belongsTo, solvedBy",
            field=f"{where}.kind",
        ) from None
    return RelationEdge(src=raw["src"], kind=kind, dst=raw["dst"])


def load_ontology(source: str | bytes) -> Ontology:
    """Parse and enforce referential integrity; fails without partial state."""
    o = parse_ontology(source)
    problems = []
    for dup in sorted(set(o.duplicate_ids)):
        problems.append(f"duplicate concept id: {dup}")
    for edge in o.edges:
        for endpoint in (edge.src, edge.dst):
            if endpoint not in o.concepts:
                problems.append(
                    f"edge references unknown concept: {endpoint} ({edge.src} {edge.kind.value} {edge.dst})"
                )
    if problems:
        raise IntegrityError("; ".join(problems))
    return o


def serialize_ontology(o: Ontology) -> str:
    """Deterministic JSON in the load format; load∘serialize is identity."""
    concepts = []
    for cid in sorted(o.concepts):
        item = o.concepts[cid]
        entry: dict[str, object] = {
            "id": item.id,
            "kind": item.kind.value,
            "labels": {lang: list(values) for lang, values in sorted(item.labels)},
        }
        if item.definitions:
            entry["definitions"] = dict(sorted(item.definitions))
        if item.external_links:
            entry["links"] = list(item.external_links)
        concepts.append(entry)
    relations = [
        {"src": e.src, "kind": e.kind.value, "dst": e.dst}
        for e in sorted(o.edges, key=lambda e: (e.src, e.kind.value, e.dst))
    ]
    return json.dumps({"concepts": concepts, "relations": relations}, ensure_ascii=False, indent=2)
