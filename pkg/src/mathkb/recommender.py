"""Related-document ranking from hierarchy-propagated concept vectors.

A document becomes a sparse concept vector: each confidently linked
occurrence contributes its kind weight, and a decayed share of that
weight flows to every IsA ancestor. Ranking is cosine similarity with
an optional breadth bonus rewarding documents that span many areas.
All operations are pure over the immutable index.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Mapping

from .annotator import Annotation, VariableBinding
from .document.model import MathDocument
from .errors import FormatError, UnknownDocument
from .ontology import ConceptKind, Ontology, RelationKind, find_by_label, relations_of
from .search import Index

__all__ = [
    "ConceptVector",
    "DEFAULT_PROFILES",
    "Profile",
    "doc_concept_vector",
    "load_profiles",
    "parse_profiles",
    "recommend",
    "similarity",
]


@dataclass(frozen=True)
class Profile:
    """Named weighting scheme altering recommendation ranking."""

    name: str
    kind_weights: Mapping[ConceptKind, float]
    hierarchy_decay: float  # gamma in [0, 1)
    breadth_bonus: float = 0.0  # beta >= 0

    def __post_init__(self):
        if not self.name:
            raise FormatError("profile name must be non-empty", field="name")
        if not self.kind_weights:
            raise FormatError(
                "profile needs at least one kind weight", field="kind_weights"
            )
        for kind, weight in self.kind_weights.items():
            if not isinstance(kind, ConceptKind):
                raise FormatError(f"unknown concept kind: {kind!r}", field="kind_weights")
            if not (isinstance(weight, (int, float)) and weight > 0):
                raise FormatError(
                    f"kind weight for {kind.value} must be positive",
                    field="kind_weights",
                )
        if not (0.0 <= self.hierarchy_decay < 1.0):
            raise FormatError(
                "hierarchy_decay must lie in [0, 1)", field="hierarchy_decay"
            )
        if not (self.breadth_bonus >= 0.0 and math.isfinite(self.breadth_bonus)):
            raise FormatError(
                "breadth_bonus must be non-negative", field="breadth_bonus"
            )


@dataclass(frozen=True)
class ConceptVector:
    """Sparse non-negative weights over concept ids."""

    weights: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        for concept_id, weight in self.weights.items():
            if not (weight >= 0.0 and math.isfinite(weight)):
                raise FormatError(
                    f"weight for {concept_id} must be non-negative", field="weights"
                )

    def get(self, concept_id: str) -> float:
        return self.weights.get(concept_id, 0.0)


DEFAULT_PROFILES: dict[str, Profile] = {
    "referee": Profile(
        name="referee",
        kind_weights={ConceptKind.AREA: 2.0, ConceptKind.OBJECT: 1.0},
        hierarchy_decay=0.5,
        breadth_bonus=0.0,
    ),
    "novice": Profile(
        name="novice",
        kind_weights={ConceptKind.AREA: 1.0, ConceptKind.OBJECT: 1.0},
        hierarchy_decay=0.5,
        breadth_bonus=0.25,
    ),
}


def _occurrences(
    doc: MathDocument,
    annotations: Iterable[Annotation],
    bindings: Iterable[VariableBinding],
    o: Ontology,
) -> Counter:
    """Confident concept occurrences: unambiguous annotations, bindings,
    and keywords that match exactly one ontology label."""
    counts: Counter = Counter()
    for ann in annotations:
        if not ann.ambiguous and ann.concept_id in o:
            counts[ann.concept_id] += 1
    for binding in bindings:
        if binding.concept_id in o:
            counts[binding.concept_id] += 1
    for keyword in doc.metadata.keywords:
        matches = find_by_label(o, keyword)
        if len(matches) == 1:
            counts[next(iter(matches))] += 1
    return counts


def _ancestor_distances(o: Ontology, concept_id: str) -> dict[str, int]:
    """Shortest IsA distance to each strict ancestor within the kind."""
    kind = o.concepts[concept_id].kind
    distances: dict[str, int] = {}
    seen = {concept_id}
    frontier = [concept_id]
    depth = 0
    while frontier:
        depth += 1
        step = []
        for current in frontier:
            for parent in sorted(relations_of(o, current, RelationKind.IS_A)):
                if parent in seen or parent not in o.concepts:
                    continue
                if o.concepts[parent].kind != kind:
                    continue
                seen.add(parent)
                distances[parent] = depth
                step.append(parent)
        frontier = step
    return distances


def doc_concept_vector(
    doc: MathDocument,
    annotations: Iterable[Annotation],
    bindings: Iterable[VariableBinding],
    o: Ontology,
    p: Profile,
) -> ConceptVector:
    """Kind-weighted occurrence counts with decayed ancestor propagation."""
    weights: dict[str, float] = {}
    decay = p.hierarchy_decay
    for concept_id, count in _occurrences(doc, annotations, bindings, o).items():
        base = count * p.kind_weights.get(o.concepts[concept_id].kind, 0.0)
        if base <= 0.0:
            continue
        weights[concept_id] = weights.get(concept_id, 0.0) + base
        if decay == 0.0:
            continue
        for ancestor, distance in _ancestor_distances(o, concept_id).items():
            weights[ancestor] = weights.get(ancestor, 0.0) + base * decay**distance
    return ConceptVector({cid: w for cid, w in sorted(weights.items()) if w > 0.0})


def similarity(a: ConceptVector, b: ConceptVector) -> float:
    """Cosine similarity in [0, 1]; 0 when either vector is empty."""
    # summing over sorted shared keys keeps the result exactly symmetric
    common = sorted(a.weights.keys() & b.weights.keys())
    dot = sum(a.weights[cid] * b.weights[cid] for cid in common)
    norm_a = math.sqrt(sum(w * w for w in a.weights.values()))
    norm_b = math.sqrt(sum(w * w for w in b.weights.values()))
    if norm_a == 0.0 or norm_b == 0.0:
        return 0.0
    return min(1.0, dot / (norm_a * norm_b))


def _area_concepts(counts: Counter, o: Ontology) -> frozenset[str]:
    return frozenset(
        cid for cid in counts if o.concepts[cid].kind == ConceptKind.AREA
    )


def recommend(
    ix: Index, doc_id: str, p: Profile, k: int
) -> list[tuple[str, float]]:
    """Top-k other documents by cosine times the breadth bonus.

    score = similarity * (1 + beta * |candidate areas| / |corpus areas|),
    the breadth factor counting distinct area-kind concepts among each
    side's confident occurrences. Ties break by document id.
    """
    if doc_id not in ix.docs:
        raise UnknownDocument(f"unknown document: {doc_id}")
    if k < 1:
        raise FormatError("k must be a positive integer", field="k")

    occurrence_sets = {
        d: _occurrences(
            ix.docs[d], ix.annotations.get(d, ()), ix.bindings.get(d, ()), ix.ontology
        )
        for d in ix.docs
    }
    vectors = {
        d: doc_concept_vector(
            ix.docs[d],
            ix.annotations.get(d, ()),
            ix.bindings.get(d, ()),
            ix.ontology,
            p,
        )
        for d in ix.docs
    }
    corpus_areas = set()
    for counts in occurrence_sets.values():
        corpus_areas |= _area_concepts(counts, ix.ontology)

    query_vector = vectors[doc_id]
    scored = []
    for candidate in sorted(ix.docs):
        if candidate == doc_id:
            continue
        breadth = (
            len(_area_concepts(occurrence_sets[candidate], ix.ontology))
            / len(corpus_areas)
            if corpus_areas
            else 0.0
        )
        score = similarity(query_vector, vectors[candidate]) * (
            1.0 + p.breadth_bonus * breadth
        )
        scored.append((candidate, score))
    scored.sort(key=lambda item: (-item[1], item[0]))
    return scored[:k]


def parse_profiles(text: str) -> dict[str, Profile]:
    """Profiles from a JSON array of {name, kind_weights, ...} objects."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"profile file is not valid JSON: {exc}") from exc
    if not isinstance(raw, list):
        raise FormatError("profile file must hold a JSON array")
    profiles: dict[str, Profile] = {}
    for entry in raw:
        if not isinstance(entry, dict):
            raise FormatError("each profile must be a JSON object")
        try:
            name = entry["name"]
            raw_weights = entry["kind_weights"]
        except KeyError as exc:
            raise FormatError(f"profile is missing {exc.args[0]}") from exc
        if not isinstance(raw_weights, dict):
            raise FormatError("kind_weights must be an object", field="kind_weights")
        try:
            kind_weights = {
                ConceptKind(kind): weight for kind, weight in raw_weights.items()
            }
        except ValueError as exc:
            raise FormatError(str(exc), field="kind_weights") from exc
        profile = Profile(
            name=name,
            kind_weights=kind_weights,
            hierarchy_decay=entry.get("hierarchy_decay", 0.5),
            breadth_bonus=entry.get("breadth_bonus", 0.0),
        )
        if profile.name in profiles:
            raise FormatError(f"duplicate profile name: {profile.name}", field="name")
        profiles[profile.name] = profile
    return profiles


def load_profiles(path) -> dict[str, Profile]:
    with open(path, encoding="utf-8") as handle:
        return parse_profiles(handle.read())
