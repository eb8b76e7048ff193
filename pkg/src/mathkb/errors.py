"""Exception types shared across the package.

Kept in one module so the service layer can map them to API errors
uniformly.
"""

from __future__ import annotations


class MathKbError(Exception):
    """Base class for all package-specific failures."""


class FormatError(MathKbError):
    """Input file violates its documented format."""

    def __init__(self, message: str, field: str | None = None):
        self.field = field
        super().__init__(message if field is None else f"{field}: {message}")


class IntegrityError(MathKbError):
    """Referential problem: dangling reference or duplicate identifier."""


class UnknownConcept(MathKbError, KeyError):
    """Concept id not present in the ontology."""

    def __str__(self) -> str:  # KeyError quotes its arg; keep it readable
        return Exception.__str__(self)


class StructureError(MathKbError):
    """Document source cannot be segmented (unbalanced environments etc.)."""


class EncodingError(MathKbError):
    """Document source is not valid UTF-8."""


class MissingTitle(MathKbError):
    """Document metadata lacks the mandatory title."""


class InvalidBase(MathKbError):
    """IRI base is unusable (bad scheme, trailing slash issues etc.)."""


class DuplicateDocId(MathKbError):
    """Two documents with the same id offered to one index."""


class UnresolvedLabel(MathKbError):
    """A label used as a query target matches several concepts."""


class StaleHit(MathKbError):
    """A hit is replayed against an index snapshot it did not come from."""


class UnknownDocument(MathKbError, KeyError):
    """Document id not present in the index."""

    def __str__(self) -> str:
        return Exception.__str__(self)
