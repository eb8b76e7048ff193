"""Tests for the corpus index and its query operations."""

import dataclasses

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mathkb.annotator import Annotation, VariableBinding
from mathkb.document import SegmentRelationKind, SegmentType, parse_document
from mathkb.errors import (
    DuplicateDocId,
    FormatError,
    StaleHit,
    UnknownConcept,
    UnresolvedLabel,
)
from mathkb.formula import (
    FormulaPattern,
    identifier_names,
    match_pattern,
    parse_pattern,
    rename_identifiers,
)
from mathkb.ontology import Ontology, RelationEdge, RelationKind, concept
from mathkb.search import (
    aggregate,
    build_index,
    highlight,
    search_formula_semantic,
    search_formula_syntactic,
    search_segments,
)
from strategies import seeded_tex


def _edge(src, kind, dst):
    return RelationEdge(src=src, kind=RelationKind(kind), dst=dst)


@pytest.fixture()
def ontology():
    concepts = [
        concept("Polygon", "object", {"en": ["polygon"]}),
        concept("Triangle", "object", {"en": ["triangle"]}),
        concept("Parallelogram", "object", {"en": ["parallelogram"]}),
        concept("Trapezium", "object", {"en": ["trapezium"]}),
        concept("Hexagon", "object", {"en": ["hexagon"]}),
        concept("Circle", "object", {"en": ["circle"]}),
        concept("Curvature", "object", {"en": ["curvature"]}),
        concept("FermatTheorem", "object", {"en": ["fermat's last theorem"]}),
        concept("CellGeometry", "object", {"en": ["cell"]}),
        concept("CellLogic", "object", {"en": ["cell"]}),
        concept("Geometry", "area", {"en": ["geometry"]}),
        concept("MetricGeometry", "area", {"en": ["metric geometry"]}),
        concept("Logic", "area", {"en": ["logic"]}),
    ]
    edges = [
        _edge("Triangle", "isA", "Polygon"),
        _edge("Parallelogram", "isA", "Polygon"),
        _edge("Trapezium", "isA", "Polygon"),
        _edge("Hexagon", "isA", "Polygon"),
        _edge("MetricGeometry", "isA", "Geometry"),
        _edge("Triangle", "belongsTo", "Geometry"),
        _edge("Curvature", "belongsTo", "Geometry"),
    ]
    return Ontology(concepts, edges)


def _doc(body, doc_id, title="Sample"):
    source = (
        "\\title{" + title + "}\n"
        "\\begin{document}\n" + body + "\n\\end{document}\n"
    )
    return parse_document(source, doc_id)


def _math_doc(doc_id, formula_sources):
    body = "\n".join("Consider $" + s + "$ now." for s in formula_sources)
    return _doc(body, doc_id)


def _ann(doc, segment_id, surface, concept_id, lang="en"):
    text = doc.segment(segment_id).text
    start = text.index(surface)
    return Annotation(
        segment_id=segment_id,
        span=(start, start + len(surface)),
        surface=surface,
        concept_id=concept_id,
        lang=lang,
    )


def _bind(segment_id, formula_id, symbol, concept_id, evidence="evidence"):
    return VariableBinding(
        segment_id=segment_id,
        formula_id=formula_id,
        symbol=symbol,
        concept_id=concept_id,
        evidence=evidence,
    )


def _hit_ids(hits):
    return {(h.doc_id, h.segment_id, h.formula_id) for h in hits}


GEO_BODY = (
    "\\begin{theorem}\\label{kt} Let $K = r$ be the curvature. \\end{theorem}\n"
    "\\begin{proof} The curvature $K$ is positive. \\end{proof}"
)


@pytest.fixture()
def geo_index(ontology):
    doc = _doc(GEO_BODY, "geo")
    annotations = (
        _ann(doc, "geo#s1", "curvature", "Curvature"),
        _ann(doc, "geo#s2", "curvature", "Curvature"),
    )
    bindings = (_bind("geo#s1", "geo#f1", "K", "Curvature"),)
    return build_index([(doc, annotations, bindings)], ontology)


class TestBuildIndex:
    def test_empty_corpus(self, ontology):
        ix = build_index([], ontology)
        assert ix.docs == {}
        assert ix.formula_postings == {}
        assert search_formula_syntactic(ix, parse_pattern("x + y")) == []

    def test_every_subterm_is_indexed(self, ontology):
        ix = build_index([(_math_doc("d", ["a + b"]), (), ())], ontology)
        # root, both identifiers (same canonical key): 2 keys, 3 postings
        assert len(ix.formula_postings) == 2
        assert sum(len(v) for v in ix.formula_postings.values()) == 3

    def test_duplicate_doc_id_rejected(self, ontology):
        entry = (_math_doc("d", ["a"]), (), ())
        with pytest.raises(DuplicateDocId):
            build_index([entry, entry], ontology)

    def test_binding_becomes_concept_posting(self, geo_index):
        postings = geo_index.concept_postings["Curvature"]
        via = {p.via for p in postings}
        assert via == {"annotation", "binding"}
        bound = [p for p in postings if p.via == "binding"]
        assert len(bound) == 1
        assert bound[0].formula_id == "geo#f1"
        assert bound[0].symbol == "K"

    def test_segment_postings_by_type(self, geo_index):
        refs = geo_index.segment_postings[SegmentType.THEOREM]
        assert refs == (("geo", "geo#s1"),)

    def test_stamp_ignores_corpus_order(self, ontology):
        a = (_math_doc("a", ["x + y"]), (), ())
        b = (_math_doc("b", ["x - y"]), (), ())
        assert (
            build_index([a, b], ontology).build_stamp
            == build_index([b, a], ontology).build_stamp
        )

    def test_rebuild_is_deterministic(self, ontology):
        entries = [(_math_doc("d", ["a + b", "c"]), (), ())]
        first = build_index(entries, ontology)
        second = build_index(entries, ontology)
        assert first.build_stamp == second.build_stamp
        assert first.formula_postings == second.formula_postings


class TestSyntacticSearch:
    def test_wildcard_pattern_finds_instance(self, ontology):
        ix = build_index(
            [(_math_doc("pyth", ["x^2 + y^2 = z^2"]), (), ())], ontology
        )
        hits = search_formula_syntactic(ix, parse_pattern("?a^2 + ?b^2 = ?c^2"))
        assert len(hits) == 1
        hit = hits[0]
        assert hit.doc_id == "pyth"
        assert hit.formula_id == "pyth#f1"
        assert hit.highlights == ((),)
        assert hit.score == 1.0
        assert hit.mathml is not None

    def test_lookup_is_renaming_invariant(self, ontology):
        ix = build_index([(_math_doc("d", ["a + b"]), (), ())], ontology)
        hits = search_formula_syntactic(ix, parse_pattern("x + y"))
        assert _hit_ids(hits) == {("d", "d#s1", "d#f1")}

    def test_no_match_is_empty(self, ontology):
        ix = build_index([(_math_doc("d", ["a + b"]), (), ())], ontology)
        assert search_formula_syntactic(ix, parse_pattern("a - b")) == []

    def test_subterm_match_has_inner_path(self, ontology):
        ix = build_index([(_math_doc("d", ["c = a + b"]), (), ())], ontology)
        hits = search_formula_syntactic(ix, parse_pattern("x + y"))
        assert len(hits) == 1
        assert hits[0].highlights == ((1,),)

    def test_repeated_identifier_requires_repetition(self, ontology):
        ix = build_index(
            [(_math_doc("d", ["a + a", "a + b"]), (), ())], ontology
        )
        same = search_formula_syntactic(ix, parse_pattern("x + x"))
        assert [h.formula_id for h in same] == ["d#f1"]
        distinct = search_formula_syntactic(ix, parse_pattern("x + y"))
        assert [h.formula_id for h in distinct] == ["d#f2"]

    def test_score_counts_matches_per_document(self, ontology):
        rich = _math_doc("rich", ["a + b", "p + q"])
        poor = _math_doc("poor", ["u + v"])
        ix = build_index([(rich, (), ()), (poor, (), ())], ontology)
        hits = search_formula_syntactic(ix, parse_pattern("x + y"))
        assert [(h.doc_id, h.score) for h in hits] == [
            ("rich", 2.0),
            ("rich", 2.0),
            ("poor", 1.0),
        ]

    @staticmethod
    def _scan_oracle(ix, pattern):
        found = {}
        for doc_id in sorted(ix.docs):
            doc = ix.docs[doc_id]
            for seg in doc.segments:
                for rec in seg.formulas:
                    if rec.ast is None:
                        continue
                    locations = sorted(
                        m.location for m in match_pattern(pattern, rec.ast)
                    )
                    if locations:
                        found[(doc_id, seg.id, rec.id)] = tuple(locations)
        return found

    @given(st.randoms(use_true_random=False))
    @settings(max_examples=40, deadline=None)
    def test_posting_route_equals_scan_route(self, rng):
        o = Ontology([], [])
        entries = []
        sources = []
        for i in range(rng.randint(1, 3)):
            doc_sources = [seeded_tex(rng, depth=2) for _ in range(rng.randint(1, 4))]
            sources.extend(doc_sources)
            entries.append((_math_doc(f"doc{i}", doc_sources), (), ()))
        ix = build_index(entries, o)
        pattern_source = rng.choice(sources + [seeded_tex(rng, depth=2)])
        pattern = parse_pattern(pattern_source)
        hits = search_formula_syntactic(ix, pattern)
        oracle = self._scan_oracle(ix, pattern)
        assert {
            (h.doc_id, h.segment_id, h.formula_id): h.highlights for h in hits
        } == oracle
        for h in hits:
            expected = sum(
                len(paths) for (d, _, _), paths in oracle.items() if d == h.doc_id
            )
            assert h.score == float(expected)

    @given(st.randoms(use_true_random=False))
    @settings(max_examples=40, deadline=None)
    def test_query_renaming_preserves_hits(self, rng):
        o = Ontology([], [])
        doc_sources = [seeded_tex(rng, depth=2) for _ in range(rng.randint(1, 5))]
        ix = build_index([(_math_doc("d", doc_sources), (), ())], o)
        pattern = parse_pattern(rng.choice(doc_sources))
        names = sorted(identifier_names(pattern.root))
        fresh = [c for c in "QRSTUVWXYZ" if c not in names]
        mapping = dict(zip(names, fresh))
        renamed = FormulaPattern(
            root=rename_identifiers(pattern.root, mapping), source="renamed"
        )
        assert _hit_ids(search_formula_syntactic(ix, pattern)) == _hit_ids(
            search_formula_syntactic(ix, renamed)
        )


class TestSemanticSearch:
    def test_binding_scores_full_weight(self, geo_index):
        hits = search_formula_semantic(geo_index, ["Curvature"])
        assert [(h.formula_id, h.score) for h in hits] == [
            ("geo#f1", 1.0),
            ("geo#f2", 0.5),
        ]

    def test_binding_highlights_symbol_occurrences(self, geo_index):
        hits = search_formula_semantic(geo_index, ["Curvature"])
        assert hits[0].highlights == ((0,),)  # K on the left of K = r
        assert "binding K" in " ".join(hits[0].explain)

    def test_annotation_only_scores_half(self, geo_index):
        proof_hit = search_formula_semantic(geo_index, ["Curvature"])[1]
        assert proof_hit.segment_id == "geo#s2"
        assert proof_hit.explain == ("Curvature via annotation",)

    def test_scope_filters_segment_type(self, geo_index):
        hits = search_formula_semantic(
            geo_index, ["Curvature"], scope=SegmentType.THEOREM
        )
        assert [h.formula_id for h in hits] == ["geo#f1"]

    def test_scope_is_monotone(self, geo_index):
        everything = _hit_ids(search_formula_semantic(geo_index, ["Curvature"]))
        for scope in (SegmentType.THEOREM, SegmentType.PROOF):
            scoped = _hit_ids(
                search_formula_semantic(geo_index, ["Curvature"], scope=scope)
            )
            assert scoped <= everything

    @pytest.fixture()
    def polygon_index(self, ontology):
        body = (
            "\\begin{theorem} A triangle has area $A = b h$. \\end{theorem}\n"
            "\\begin{theorem} A hexagon has $n = 6$ sides. \\end{theorem}\n"
            "\\begin{theorem} Any polygon has $n = 3$ or more sides. \\end{theorem}\n"
            "\\begin{theorem} A circle has $C = 2 r$. \\end{theorem}"
        )
        doc = _doc(body, "poly")
        annotations = (
            _ann(doc, "poly#s1", "triangle", "Triangle"),
            _ann(doc, "poly#s2", "hexagon", "Hexagon"),
            _ann(doc, "poly#s3", "polygon", "Polygon"),
            _ann(doc, "poly#s4", "circle", "Circle"),
        )
        return build_index([(doc, annotations, ())], ontology)

    def test_expansion_covers_descendants(self, polygon_index):
        hits = search_formula_semantic(polygon_index, ["Polygon"])
        assert {h.formula_id for h in hits} == {"poly#f1", "poly#f2", "poly#f3"}

    def test_expansion_equals_union_of_members(self, polygon_index, ontology):
        from mathkb.ontology import descendants

        expanded = _hit_ids(search_formula_semantic(polygon_index, ["Polygon"]))
        union = set()
        for member in descendants(ontology, "Polygon"):
            union |= _hit_ids(
                search_formula_semantic(polygon_index, [member], expand=False)
            )
        assert expanded == union

    def test_exact_mode_skips_descendants(self, polygon_index):
        hits = search_formula_semantic(polygon_index, ["Polygon"], expand=False)
        assert [h.formula_id for h in hits] == ["poly#f3"]

    def test_conjunction_requires_all_concepts(self, ontology):
        body = (
            "\\begin{theorem} The curvature along a triangle edge is $k = 0$. "
            "\\end{theorem}\n"
            "\\begin{theorem} A lone triangle gives $t = 1$. \\end{theorem}"
        )
        doc = _doc(body, "mix")
        annotations = (
            _ann(doc, "mix#s1", "curvature", "Curvature"),
            _ann(doc, "mix#s1", "triangle", "Triangle"),
            _ann(doc, "mix#s2", "triangle", "Triangle"),
        )
        ix = build_index([(doc, annotations, ())], ontology)
        hits = search_formula_semantic(ix, ["Curvature", "Triangle"])
        assert [(h.formula_id, h.score) for h in hits] == [("mix#f1", 1.0)]

    def test_unknown_concept_raises(self, geo_index):
        with pytest.raises(UnknownConcept):
            search_formula_semantic(geo_index, ["NoSuchConcept"])

    def test_empty_query_rejected(self, geo_index):
        with pytest.raises(FormatError):
            search_formula_semantic(geo_index, [])


FERMAT_BODY = (
    "\\begin{theorem}\\label{flt} There is no solution to $x^n + y^n = z^n$. "
    "\\end{theorem}\n"
    "\\begin{proof}[Proof of Theorem \\ref{flt}] "
    "Apply Fermat's last theorem directly. \\end{proof}"
)


@pytest.fixture()
def fermat_index(ontology):
    doc = _doc(FERMAT_BODY, "fermat")
    annotations = (
        _ann(doc, "fermat#s2", "Fermat's last theorem", "FermatTheorem"),
    )
    return build_index([(doc, annotations, ())], ontology)


class TestSearchSegments:
    def test_proved_via_annotated_proof(self, fermat_index):
        hits = search_segments(
            fermat_index,
            SegmentType.THEOREM,
            SegmentRelationKind.PROVES,
            "FermatTheorem",
        )
        assert len(hits) == 1
        hit = hits[0]
        assert hit.segment_id == "fermat#s1"
        assert hit.score == 1.0
        assert hit.explain == ("proves evidence in fermat#s2",)
        assert hit.highlights  # annotation spans carried as evidence

    def test_target_may_be_a_label(self, fermat_index):
        by_id = search_segments(
            fermat_index,
            SegmentType.THEOREM,
            SegmentRelationKind.PROVES,
            "FermatTheorem",
        )
        by_label = search_segments(
            fermat_index,
            SegmentType.THEOREM,
            SegmentRelationKind.PROVES,
            "Fermat's Last Theorem",
        )
        assert _hit_ids(by_id) == _hit_ids(by_label)

    def test_ambiguous_label_raises(self, fermat_index):
        with pytest.raises(UnresolvedLabel):
            search_segments(
                fermat_index,
                SegmentType.THEOREM,
                SegmentRelationKind.PROVES,
                "cell",
            )

    def test_unknown_target_raises(self, fermat_index):
        with pytest.raises(UnknownConcept):
            search_segments(
                fermat_index,
                SegmentType.THEOREM,
                SegmentRelationKind.PROVES,
                "no such label",
            )

    def test_proof_reference_carries_evidence(self, ontology):
        body = (
            "\\begin{lemma}\\label{aux} The bound $b = 1$ holds for curvature. "
            "\\end{lemma}\n"
            "\\begin{theorem}\\label{main} The series $s = 2$ converges. "
            "\\end{theorem}\n"
            "\\begin{proof}[Proof of Theorem \\ref{main}] "
            "Using \\ref{aux} we conclude. \\end{proof}"
        )
        doc = _doc(body, "chain")
        annotations = (_ann(doc, "chain#s1", "curvature", "Curvature"),)
        ix = build_index([(doc, annotations, ())], ontology)
        hits = search_segments(
            ix, SegmentType.THEOREM, SegmentRelationKind.PROVES, "Curvature"
        )
        assert [h.segment_id for h in hits] == ["chain#s2"]

    def test_direct_relation_kinds(self, ontology):
        body = (
            "\\begin{theorem}\\label{t} A triangle obeys $e = 1$. \\end{theorem}\n"
            "\\begin{example} For example \\ref{t} covers the plane case $p = 2$. "
            "\\end{example}"
        )
        doc = _doc(body, "ex")
        annotations = (_ann(doc, "ex#s1", "triangle", "Triangle"),)
        ix = build_index([(doc, annotations, ())], ontology)
        hits = search_segments(
            ix, SegmentType.EXAMPLE, SegmentRelationKind.EXEMPLIFIES, "Triangle"
        )
        assert [h.segment_id for h in hits] == ["ex#s2"]

    def test_no_evidence_is_empty(self, fermat_index):
        assert (
            search_segments(
                fermat_index,
                SegmentType.THEOREM,
                SegmentRelationKind.PROVES,
                "Triangle",
            )
            == []
        )


class TestAggregate:
    @pytest.fixture()
    def corpus_index(self, ontology):
        geo = _doc(GEO_BODY, "geo")
        survey_body = (
            "\\begin{theorem} In metric geometry the curvature $k = 1$ is constant. "
            "\\end{theorem}"
        )
        survey = _doc(survey_body, "survey")
        return build_index(
            [
                (
                    geo,
                    (
                        _ann(geo, "geo#s1", "curvature", "Curvature"),
                        _ann(geo, "geo#s2", "curvature", "Curvature"),
                    ),
                    (_bind("geo#s1", "geo#f1", "K", "Curvature"),),
                ),
                (
                    survey,
                    (
                        _ann(survey, "survey#s1", "metric geometry", "MetricGeometry"),
                        _ann(survey, "survey#s1", "curvature", "Curvature"),
                    ),
                    (),
                ),
            ],
            ontology,
        )

    def test_type_and_object_intersection(self, corpus_index):
        hits = aggregate(
            corpus_index,
            segment_type=SegmentType.THEOREM,
            object_concept="Curvature",
        )
        assert [h.segment_id for h in hits] == ["geo#s1", "survey#s1"]
        assert all(h.formula_id is None for h in hits)

    def test_object_criterion_sees_bindings(self, corpus_index):
        hits = aggregate(corpus_index, object_concept="Curvature")
        geo_theorem = next(h for h in hits if h.segment_id == "geo#s1")
        assert any("bound to K" in e for e in geo_theorem.explain)

    def test_area_expands_along_isa(self, corpus_index):
        hits = aggregate(corpus_index, segment_type=SegmentType.THEOREM, area="Geometry")
        assert {h.doc_id for h in hits} == {"survey"}

    def test_no_criteria_rejected(self, corpus_index):
        with pytest.raises(FormatError):
            aggregate(corpus_index)

    def test_unknown_object_rejected(self, corpus_index):
        with pytest.raises(UnknownConcept):
            aggregate(corpus_index, object_concept="Nope")

    def test_unknown_area_rejected(self, corpus_index):
        with pytest.raises(UnknownConcept):
            aggregate(corpus_index, area="Nope")


class TestHighlight:
    def test_formula_hit_renders_mathml(self, geo_index):
        hit = search_formula_semantic(geo_index, ["Curvature"])[0]
        snippet = highlight(hit, geo_index)
        assert snippet.formula_id == "geo#f1"
        assert snippet.text == "K = r"
        assert snippet.mathml is not None and snippet.mathml.startswith("<math")
        assert snippet.marks == hit.highlights

    def test_segment_hit_gets_text_window(self, fermat_index):
        hit = search_segments(
            fermat_index,
            SegmentType.THEOREM,
            SegmentRelationKind.PROVES,
            "FermatTheorem",
        )[0]
        snippet = highlight(hit, fermat_index)
        assert snippet.mathml is None
        assert snippet.text
        for start, end in snippet.marks:
            assert snippet.text[start:end]

    def test_window_is_clipped_around_marks(self, ontology):
        filler = "The boundary term vanishes in the limit. " * 10
        body = "\\begin{theorem} " + filler + "A triangle closes it: $t = 3$. \\end{theorem}"
        doc = _doc(body, "long")
        ann = _ann(doc, "long#s1", "triangle", "Triangle")
        ix = build_index([(doc, (ann,), ())], ontology)
        hits = aggregate(ix, object_concept="Triangle")
        snippet = highlight(hits[0], ix)
        assert len(snippet.text) <= len(ann.surface) + 160
        (mark,) = snippet.marks
        assert snippet.text[mark[0] : mark[1]] == "triangle"

    def test_stale_document(self, geo_index, fermat_index):
        hit = search_formula_semantic(geo_index, ["Curvature"])[0]
        with pytest.raises(StaleHit):
            highlight(hit, fermat_index)

    def test_stale_segment_and_formula(self, geo_index):
        base = search_formula_semantic(geo_index, ["Curvature"])[0]
        with pytest.raises(StaleHit):
            highlight(dataclasses.replace(base, segment_id="geo#s99"), geo_index)
        with pytest.raises(StaleHit):
            highlight(dataclasses.replace(base, formula_id="geo#f99"), geo_index)


class TestDeterminism:
    def test_same_corpus_same_results(self, ontology):
        doc = _doc(GEO_BODY, "geo")
        entries = [
            (doc, (_ann(doc, "geo#s1", "curvature", "Curvature"),), ())
        ]
        first = build_index(entries, ontology)
        second = build_index(entries, ontology)
        assert first.build_stamp == second.build_stamp
        assert search_formula_semantic(first, ["Curvature"]) == search_formula_semantic(
            second, ["Curvature"]
        )
