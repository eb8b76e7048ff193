"""Command-line interface: ingestion, export, queries, validation, serving."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from ..annotator import DEFAULT_PATTERNS, load_patterns
from ..document.model import SegmentRelationKind, SegmentType
from ..errors import MathKbError, UnknownDocument
from ..formula import ParseError, parse_pattern
from ..ontology import load_ontology, parse_ontology, validate
from ..rdf import document_to_triples, serialize_ntriples, serialize_turtle
from ..recommender import DEFAULT_PROFILES, load_profiles, recommend
from ..search import (
    aggregate,
    search_formula_semantic,
    search_formula_syntactic,
    search_segments,
)
from .config import DEFAULT_BASE_IRI, load_config
from .ingest import ingest_corpus, load_index, save_index

DEFAULT_INDEX = "mathkb.index"


def _fail(message: str, code: int = 1):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_index_or_fail(path: str):
    try:
        return load_index(path)
    except FileNotFoundError:
        _fail(f"no index snapshot at {path}; run `mathkb ingest` first")
    except MathKbError as exc:
        _fail(str(exc))


def _print_hits(index, hits):
    body = {
        "buildStamp": index.build_stamp,
        "hits": [
            {
                "docId": h.doc_id,
                "segmentId": h.segment_id,
                **({"formulaId": h.formula_id} if h.formula_id is not None else {}),
                "score": h.score,
                "highlights": [list(x) for x in h.highlights],
                "explain": list(h.explain),
                **({"mathml": h.mathml} if h.mathml is not None else {}),
            }
            for h in hits
        ],
    }
    click.echo(json.dumps(body, ensure_ascii=False, indent=2))


def _segment_type(value: str) -> SegmentType:
    try:
        return SegmentType(value)
    except ValueError:
        _fail(f"unknown segment type: {value}")


@click.group()
def main():
    """Semantic knowledge base for collections of mathematical articles."""


@main.command()
@click.argument("corpus_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--ontology", "ontology_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--patterns", "patterns_path", default=None,
              type=click.Path(exists=True, dir_okay=False),
              help="Definition-phrase template file.")
@click.option("--index-out", default=DEFAULT_INDEX, show_default=True,
              help="Where to write the index snapshot.")
def ingest(corpus_dir, ontology_path, patterns_path, index_out):
    """Parse, annotate, and index every .tex file in CORPUS_DIR."""
    try:
        o = load_ontology(Path(ontology_path).read_bytes())
        patterns = (
            load_patterns(patterns_path) if patterns_path else DEFAULT_PATTERNS
        )
        index, report = ingest_corpus(corpus_dir, o, patterns)
    except MathKbError as exc:
        _fail(str(exc))
    for path, reason in report.failures:
        click.echo(f"failed {path}: {reason}", err=True)
    if not report.ok:
        _fail("no documents indexed")
    save_index(index, index_out)
    click.echo(f"indexed {len(report.indexed)} document(s) -> {index_out}")


@main.command("export-rdf")
@click.option("--doc", "doc_id", default=None, help="Single document id.")
@click.option("--all", "export_all", is_flag=True, help="Every indexed document.")
@click.option("--format", "fmt", type=click.Choice(["nt", "ttl"]), required=True)
@click.option("--index", "index_path", default=DEFAULT_INDEX, show_default=True)
@click.option("--out-dir", default=".", show_default=True,
              type=click.Path(file_okay=False))
@click.option("--base", default=DEFAULT_BASE_IRI, show_default=True,
              help="Base IRI for minted resources.")
def export_rdf(doc_id, export_all, fmt, index_path, out_dir, base):
    """Write one RDF file per document."""
    if bool(doc_id) == export_all:
        _fail("pass exactly one of --doc ID or --all")
    index = _load_index_or_fail(index_path)
    if export_all:
        doc_ids = sorted(index.docs)
    elif doc_id not in index.docs:
        _fail(f"unknown document: {doc_id}", code=2)
    else:
        doc_ids = [doc_id]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    serialize = serialize_ntriples if fmt == "nt" else serialize_turtle
    for one in doc_ids:
        triples = document_to_triples(
            index.docs[one],
            index.annotations.get(one, ()),
            index.bindings.get(one, ()),
            index.ontology,
            base,
        )
        target = out / f"{one}.{fmt}"
        target.write_bytes(serialize(triples))
        click.echo(str(target))


@main.group()
def search():
    """Query the index."""


@search.command("formula")
@click.option("--pattern", default=None, help="TeX pattern, ?tag wildcards allowed.")
@click.option("--concepts", default=None, help="Comma-separated concept ids.")
@click.option("--scope", default=None, help="Restrict to one segment type.")
@click.option("--no-expand", is_flag=True, help="Skip IsA descendant expansion.")
@click.option("--index", "index_path", default=DEFAULT_INDEX, show_default=True)
def search_formula_cmd(pattern, concepts, scope, no_expand, index_path):
    """Syntactic (--pattern) or semantic (--concepts) formula search."""
    if bool(pattern) == bool(concepts):
        _fail("pass exactly one of --pattern or --concepts")
    index = _load_index_or_fail(index_path)
    try:
        if pattern:
            hits = search_formula_syntactic(index, parse_pattern(pattern))
        else:
            ids = [c for c in (part.strip() for part in concepts.split(",")) if c]
            hits = search_formula_semantic(
                index,
                ids,
                scope=_segment_type(scope) if scope else None,
                expand=not no_expand,
            )
    except (MathKbError, ParseError) as exc:
        _fail(str(exc))
    _print_hits(index, hits)


@search.command("segments")
@click.option("--type", "segment_type", required=True)
@click.option("--via", required=True)
@click.option("--target", required=True, help="Concept id or unique label.")
@click.option("--index", "index_path", default=DEFAULT_INDEX, show_default=True)
def search_segments_cmd(segment_type, via, target, index_path):
    """Segments of a type related to a concept through a relation."""
    index = _load_index_or_fail(index_path)
    try:
        kind = SegmentRelationKind(via)
    except ValueError:
        _fail(f"unknown relation kind: {via}")
    try:
        hits = search_segments(index, _segment_type(segment_type), kind, target)
    except MathKbError as exc:
        _fail(str(exc))
    _print_hits(index, hits)


@main.command("aggregate")
@click.option("--type", "segment_type", default=None)
@click.option("--area", default=None)
@click.option("--object", "object_concept", default=None)
@click.option("--index", "index_path", default=DEFAULT_INDEX, show_default=True)
def aggregate_cmd(segment_type, area, object_concept, index_path):
    """Intersect segment-type, area, and object criteria."""
    index = _load_index_or_fail(index_path)
    try:
        hits = aggregate(
            index,
            segment_type=_segment_type(segment_type) if segment_type else None,
            area=area,
            object_concept=object_concept,
        )
    except MathKbError as exc:
        _fail(str(exc))
    _print_hits(index, hits)


@main.command("recommend")
@click.argument("doc_id")
@click.option("--profile", "profile_name", default="referee", show_default=True)
@click.option("-k", default=5, show_default=True, type=int)
@click.option("--profiles", "profiles_path", default=None,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--index", "index_path", default=DEFAULT_INDEX, show_default=True)
def recommend_cmd(doc_id, profile_name, k, profiles_path, index_path):
    """Related documents for DOC_ID under a scenario profile."""
    index = _load_index_or_fail(index_path)
    try:
        profiles = (
            load_profiles(profiles_path) if profiles_path else DEFAULT_PROFILES
        )
    except MathKbError as exc:
        _fail(str(exc))
    profile = profiles.get(profile_name)
    if profile is None:
        _fail(f"unknown profile: {profile_name}")
    try:
        results = recommend(index, doc_id, profile, k)
    except UnknownDocument as exc:
        _fail(str(exc), code=2)
    except MathKbError as exc:
        _fail(str(exc))
    click.echo(
        json.dumps(
            {
                "buildStamp": index.build_stamp,
                "profile": profile_name,
                "recommendations": [
                    {"docId": d, "score": s} for d, s in results
                ],
            },
            ensure_ascii=False,
            indent=2,
        )
    )


@main.group()
def ontology():
    """Ontology file utilities."""


@ontology.command("validate")
@click.argument("path", type=click.Path(exists=True, dir_okay=False))
def ontology_validate(path):
    """Report every structural violation in an ontology file."""
    try:
        o = parse_ontology(Path(path).read_bytes())
    except MathKbError as exc:
        _fail(str(exc))
    report = validate(o)
    for line in report.errors:
        click.echo(f"error: {line}")
    for line in report.warnings:
        click.echo(f"warning: {line}")
    if not report.ok:
        sys.exit(1)
    click.echo("ok")


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
def serve(config_path):
    """Run the HTTP service until interrupted."""
    import uvicorn

    from .http import create_app

    try:
        config = load_config(config_path)
        app = create_app(config)
    except MathKbError as exc:
        _fail(str(exc))
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
