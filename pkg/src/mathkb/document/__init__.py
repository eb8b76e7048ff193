"""Structured document model and LaTeX article parsing."""

from .latex import extract_metadata, parse_document
from .model import (
    PROVABLE_TYPES,
    FormulaRecord,
    MathDocument,
    Metadata,
    Segment,
    SegmentRelation,
    SegmentRelationKind,
    SegmentType,
    segment_graph,
)

__all__ = [
    "PROVABLE_TYPES",
    "FormulaRecord",
    "MathDocument",
    "Metadata",
    "Segment",
    "SegmentRelation",
    "SegmentRelationKind",
    "SegmentType",
    "extract_metadata",
    "parse_document",
    "segment_graph",
]
