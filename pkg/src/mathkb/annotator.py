"""Concept annotation of segment text and variable-to-concept binding.

Rule-based throughout: a label gazetteer links text spans to ontology
concepts, and defining-phrase templates bind formula identifiers to the
concepts their surrounding prose names. Pure functions over immutable
inputs, safe to run per segment in parallel.
"""

from __future__ import annotations

import re
import weakref
from dataclasses import dataclass, replace
from pathlib import Path

from .document.model import Segment
from .errors import FormatError
from .formula import Identifier, identifier_names
from .ontology import LANGUAGES, Ontology, RelationKind, relations_of

__all__ = [
    "DEFAULT_PATTERNS",
    "Annotation",
    "VariableBinding",
    "annotate_document",
    "bind_variables",
    "extract_terms",
    "link_concepts",
    "load_patterns",
]


@dataclass(frozen=True)
class Annotation:
    """One ontology-label occurrence in a segment's text."""

    segment_id: str
    span: tuple[int, int]  # character offsets into the segment text
    surface: str
    concept_id: str
    lang: str
    ambiguous: bool = False


@dataclass(frozen=True)
class VariableBinding:
    """A formula identifier bound to the concept its prose definition names."""

    segment_id: str
    formula_id: str
    symbol: str
    concept_id: str
    evidence: tuple[int, int]  # character offsets of the defining phrase


# surface text folded for matching -> ((lang, concept_id), ...)
_Gazetteer = dict[str, tuple[tuple[str, str], ...]]
_GAZETTEERS: "weakref.WeakKeyDictionary[Ontology, _Gazetteer]" = weakref.WeakKeyDictionary()


def _fold(text: str) -> str:
    folded = text.casefold()
    # spans must line up with the original text
    return folded if len(folded) == len(text) else text.lower()


def _gazetteer(o: Ontology) -> _Gazetteer:
    cached = _GAZETTEERS.get(o)
    if cached is not None:
        return cached
    table: dict[str, list[tuple[str, str]]] = {}
    for concept in o.concepts.values():
        for lang in LANGUAGES:
            for label in concept.labels_for(lang):
                folded = _fold(label)
                if folded:
                    table.setdefault(folded, []).append((lang, concept.id))
    built = {label: tuple(sorted(set(entries))) for label, entries in table.items()}
    _GAZETTEERS[o] = built
    return built


def _is_word_char(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def extract_terms(segment: Segment, o: Ontology) -> list[Annotation]:
    """Ontology-label matches in the segment text, both languages.

    Case-folded, longest-match, left-to-right greedy; matched spans never
    overlap. A label carried by several concepts yields one annotation per
    concept at the same span.
    """
    text = segment.text
    if not text:
        return []
    folded = _fold(text)
    table = _gazetteer(o)
    by_first: dict[str, list[str]] = {}
    for label in table:
        by_first.setdefault(label[0], []).append(label)
    for labels in by_first.values():
        labels.sort(key=len, reverse=True)

    out: list[Annotation] = []
    i, n = 0, len(folded)
    while i < n:
        if _is_word_char(folded[i]) and (i == 0 or not _is_word_char(folded[i - 1])):
            for label in by_first.get(folded[i], ()):
                j = i + len(label)
                if folded.startswith(label, i) and (j >= n or not _is_word_char(folded[j])):
                    for lang, concept_id in table[label]:
                        out.append(
                            Annotation(
                                segment_id=segment.id,
                                span=(i, j),
                                surface=text[i:j],
                                concept_id=concept_id,
                                lang=lang,
                            )
                        )
                    i = j
                    break
            else:
                i += 1
        else:
            i += 1
    return out


def _areas(o: Ontology, concept_id: str) -> frozenset[str]:
    return frozenset(relations_of(o, concept_id, RelationKind.BELONGS_TO))


def link_concepts(annotations: list[Annotation], o: Ontology) -> list[Annotation]:
    """Resolve label ambiguity against the document's majority area.

    Spans carrying a single concept vote for their BelongsTo areas; an
    ambiguous span keeps the one candidate sharing the majority area, or
    keeps every candidate flagged ambiguous when the vote settles nothing.
    """
    groups: dict[tuple[str, tuple[int, int]], list[Annotation]] = {}
    for ann in annotations:
        groups.setdefault((ann.segment_id, ann.span), []).append(ann)

    votes: dict[str, int] = {}
    for group in groups.values():
        if len(group) == 1:
            for area in _areas(o, group[0].concept_id):
                votes[area] = votes.get(area, 0) + 1
    majority = min(
        (area for area, count in votes.items() if count == max(votes.values())),
        default=None,
    ) if votes else None

    resolved: list[Annotation] = []
    for key in sorted(groups, key=lambda k: (k[0], k[1])):
        group = sorted(groups[key], key=lambda a: (a.concept_id, a.lang))
        if len(group) == 1:
            resolved.append(replace(group[0], ambiguous=False))
            continue
        sharing = (
            [a for a in group if majority in _areas(o, a.concept_id)]
            if majority is not None
            else []
        )
        if len(sharing) == 1:
            resolved.append(replace(sharing[0], ambiguous=False))
        else:
            kept = sharing if sharing else group
            resolved.extend(replace(a, ambiguous=True) for a in kept)
    return resolved


DEFAULT_PATTERNS: tuple[str, ...] = (
    "<SYM> is the <TERM>",
    "<SYM> is a <TERM>",
    "<SYM> is an <TERM>",
    "<SYM> denotes the <TERM>",
    "<SYM> denotes a <TERM>",
    "<SYM> denotes <TERM>",
    "where <SYM> is the <TERM>",
    "let <SYM> be a <TERM>",
    "let <SYM> be the <TERM>",
    "<SYM> — the <TERM>",
    "где <SYM> — <TERM>",
    "пусть <SYM> — <TERM>",
)

_PLACEHOLDER_RE = re.compile(r"⟨f(\d+)⟩")
_SYM_RE = r"(?P<sym>⟨f\d+⟩|[^\W\d_])"


def _compile_pattern(template: str) -> re.Pattern:
    tokens = template.split()
    if "<SYM>" not in tokens or tokens.count("<TERM>") != 1:
        raise FormatError(
            f"pattern must contain <SYM> and exactly one <TERM>: {template!r}"
        )
    if tokens[-1] != "<TERM>":
        raise FormatError(f"pattern must end with <TERM>: {template!r}")
    parts = []
    for token in tokens[:-1]:
        parts.append(_SYM_RE if token == "<SYM>" else re.escape(token))
    return re.compile(r"(?<!\w)" + r"\s+".join(parts) + r"\s+", re.IGNORECASE)


def load_patterns(path: str | Path) -> tuple[str, ...]:
    """Defining-phrase templates from a UTF-8 file, one per line.

    Blank lines and lines starting with # are skipped; every template is
    validated by compilation.
    """
    templates = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        _compile_pattern(line)
        templates.append(line)
    return tuple(templates)


def _symbol_of(segment: Segment, matched: str) -> str | None:
    placeholder = _PLACEHOLDER_RE.fullmatch(matched)
    if placeholder is None:
        return matched  # a bare single-letter symbol
    suffix = f"#f{placeholder.group(1)}"
    for record in segment.formulas:
        if (
            record.id.endswith(suffix)
            and record.ast is not None
            and isinstance(record.ast.root, Identifier)
        ):
            return record.ast.root.name
    return None


def bind_variables(
    segment: Segment,
    annotations: list[Annotation],
    patterns: tuple[str, ...] = DEFAULT_PATTERNS,
) -> list[VariableBinding]:
    """Bindings from defining phrases: symbol, then concept-naming term.

    The symbol slot accepts a formula placeholder wrapping a lone
    identifier or a bare single letter; the term slot must coincide with
    an unambiguous annotation. A later definition of the same symbol
    shadows the earlier one; a binding applies to every formula of the
    segment containing the symbol.
    """
    by_start: dict[int, list[Annotation]] = {}
    for ann in annotations:
        if ann.segment_id == segment.id:
            by_start.setdefault(ann.span[0], []).append(ann)

    matches: list[tuple[int, str, str, tuple[int, int]]] = []
    for template in patterns:
        regex = _compile_pattern(template)
        for m in regex.finditer(segment.text):
            candidates = by_start.get(m.end(), [])
            if len(candidates) != 1 or candidates[0].ambiguous:
                continue
            symbol = _symbol_of(segment, m.group("sym"))
            if symbol is None:
                continue
            term = candidates[0]
            matches.append((m.start(), symbol, term.concept_id, (m.start(), term.span[1])))

    matches.sort(key=lambda item: item[0])
    defined: dict[str, tuple[str, tuple[int, int]]] = {}
    for _, symbol, concept_id, evidence in matches:
        defined[symbol] = (concept_id, evidence)

    out: list[VariableBinding] = []
    for symbol, (concept_id, evidence) in defined.items():
        for record in segment.formulas:
            if record.ast is not None and symbol in identifier_names(record.ast.root):
                out.append(
                    VariableBinding(
                        segment_id=segment.id,
                        formula_id=record.id,
                        symbol=symbol,
                        concept_id=concept_id,
                        evidence=evidence,
                    )
                )
    return out


def annotate_document(doc, o: Ontology, patterns: tuple[str, ...] = DEFAULT_PATTERNS):
    """Annotate every segment and bind variables document-wide.

    Returns (annotations, bindings), both in segment order. Ambiguity is
    resolved against the whole document's majority area.
    """
    raw: list[Annotation] = []
    for segment in doc.segments:
        raw.extend(extract_terms(segment, o))
    linked = link_concepts(raw, o)
    order = {segment.id: n for n, segment in enumerate(doc.segments)}
    linked.sort(key=lambda a: (order[a.segment_id], a.span, a.concept_id))
    bindings: list[VariableBinding] = []
    for segment in doc.segments:
        current = [a for a in linked if a.segment_id == segment.id]
        bindings.extend(bind_variables(segment, current, patterns))
    return tuple(linked), tuple(bindings)
