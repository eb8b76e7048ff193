"""Corpus ingestion pipeline and index snapshot persistence."""

from __future__ import annotations

import pickle
from dataclasses import dataclass
from pathlib import Path

from ..annotator import DEFAULT_PATTERNS, annotate_document
from ..document import parse_document
from ..errors import FormatError, MathKbError
from ..ontology import Ontology
from ..search import Index, build_index

__all__ = ["IngestReport", "ingest_corpus", "load_index", "save_index"]

_SNAPSHOT_MAGIC = "mathkb-index/1"


@dataclass(frozen=True)
class IngestReport:
    indexed: tuple[str, ...]  # document ids, sorted
    failures: tuple[tuple[str, str], ...]  # (file path, reason)

    @property
    def ok(self) -> bool:
        return len(self.indexed) >= 1


def ingest_corpus(
    corpus_dir,
    o: Ontology,
    patterns: tuple[str, ...] = DEFAULT_PATTERNS,
) -> tuple[Index, IngestReport]:
    """Parse, annotate, and index every .tex file under ``corpus_dir``.

    Per-file failures are collected in the report and never abort the
    rest of the corpus. Document ids are file stems; a repeated stem is
    reported as a failure for the later file.
    """
    corpus_dir = Path(corpus_dir)
    entries = []
    failures = []
    seen_ids = set()
    for path in sorted(corpus_dir.rglob("*.tex")):
        doc_id = path.stem
        if doc_id in seen_ids:
            failures.append((str(path), f"duplicate document id: {doc_id}"))
            continue
        try:
            doc = parse_document(path.read_bytes(), doc_id, source_path=str(path))
            annotations, bindings = annotate_document(doc, o, patterns)
        except MathKbError as exc:
            failures.append((str(path), str(exc)))
            continue
        seen_ids.add(doc_id)
        entries.append((doc, annotations, bindings))
    index = build_index(entries, o)
    report = IngestReport(
        indexed=tuple(sorted(ix_id for ix_id in index.docs)),
        failures=tuple(failures),
    )
    return index, report


def save_index(index: Index, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        pickle.dump((_SNAPSHOT_MAGIC, index), handle)


def load_index(path) -> Index:
    with open(path, "rb") as handle:
        try:
            payload = pickle.load(handle)
        except Exception as exc:
            raise FormatError(f"not an index snapshot: {path}") from exc
    if not (isinstance(payload, tuple) and len(payload) == 2 and payload[0] == _SNAPSHOT_MAGIC):
        raise FormatError(f"not an index snapshot: {path}")
    return payload[1]
