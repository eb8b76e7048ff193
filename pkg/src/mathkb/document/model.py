"""Document model: typed logical segments, their relations, metadata.

A parsed article is a tree of typed segments (theorem, proof, equation,
narrative text, ...) under one Document root, plus cross-segment relations
such as proves and refersTo.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..formula.nodes import FormulaAst


class SegmentType(str, Enum):
    DOCUMENT = "Document"
    DOCUMENT_SEGMENT = "DocumentSegment"
    CLAIM = "Claim"
    DEFINITION = "Definition"
    PROPOSITION = "Proposition"
    EXAMPLE = "Example"
    AXIOM = "Axiom"
    THEOREM = "Theorem"
    LEMMA = "Lemma"
    PROOF = "Proof"
    EQUATION = "Equation"
    COROLLARY = "Corollary"
    REMARK = "Remark"
    CONJECTURE = "Conjecture"
    NOTATION = "Notation"


PROVABLE_TYPES = frozenset(
    {
        SegmentType.THEOREM,
        SegmentType.LEMMA,
        SegmentType.PROPOSITION,
        SegmentType.COROLLARY,
        SegmentType.CLAIM,
    }
)


class SegmentRelationKind(str, Enum):
    DEPENDS_ON = "dependsOn"
    EXEMPLIFIES = "exemplifies"
    HAS_CONSEQUENCE = "hasConsequence"
    HAS_SEGMENT = "hasSegment"
    PROVES = "proves"
    REFERS_TO = "refersTo"


@dataclass(frozen=True)
class FormulaRecord:
    """One math fragment; ast is None when the source fell outside the grammar."""

    id: str
    source: str
    ast: FormulaAst | None
    unparsed: bool = False


@dataclass(frozen=True)
class Segment:
    id: str
    type: SegmentType
    text: str
    title: str | None = None
    label: str | None = None
    formulas: tuple[FormulaRecord, ...] = ()
    span: tuple[int, int] = (0, 0)


@dataclass(frozen=True)
class SegmentRelation:
    src: str
    kind: SegmentRelationKind
    dst: str


@dataclass(frozen=True)
class Metadata:
    title: str
    authors: tuple[str, ...] = ()
    abstract: str | None = None
    keywords: tuple[str, ...] = ()
    language: str = "en"
    source_path: str = ""


@dataclass(frozen=True)
class MathDocument:
    id: str
    metadata: Metadata
    segments: tuple[Segment, ...] = ()
    relations: tuple[SegmentRelation, ...] = ()

    def segment(self, segment_id: str) -> Segment:
        for seg in self.segments:
            if seg.id == segment_id:
                return seg
        raise KeyError(segment_id)

    @property
    def root(self) -> Segment:
        for seg in self.segments:
            if seg.type == SegmentType.DOCUMENT:
                return seg
        raise ValueError(f"document {self.id} has no root segment")

    def formulas(self) -> tuple[FormulaRecord, ...]:
        out: list[FormulaRecord] = []
        for seg in self.segments:
            out.extend(seg.formulas)
        return tuple(out)


def segment_graph(doc: MathDocument) -> dict[str, tuple[SegmentRelation, ...]]:
    """Outgoing relations per segment id; total over all segments."""
    adjacency: dict[str, list[SegmentRelation]] = {seg.id: [] for seg in doc.segments}
    for rel in doc.relations:
        adjacency.setdefault(rel.src, []).append(rel)
    return {sid: tuple(rels) for sid, rels in adjacency.items()}
