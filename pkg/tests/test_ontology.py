"""Concept graph: loading, validation, closures against a networkx oracle."""

import json
from collections import Counter

import networkx as nx
import pytest
from hypothesis import given, settings
import hypothesis.strategies as st

from mathkb.errors import FormatError, IntegrityError, UnknownConcept
from mathkb.ontology import (
    Concept,
    ConceptKind,
    Ontology,
    RelationEdge,
    RelationKind,
    ancestors,
    concept,
    descendants,
    find_by_label,
    load_ontology,
    parse_ontology,
    relations_of,
    serialize_ontology,
    validate,
)


def doc(concepts, relations) -> str:
    return json.dumps({"concepts": concepts, "relations": relations})


def bilingual(cid, kind, en, ru, **extra):
    return {"id": cid, "kind": kind, "labels": {"en": [en], "ru": [ru]}, **extra}


MATRIX_DOC = doc(
    [
        bilingual("Matrix", "object", "matrix", "матрица"),
        bilingual("LambdaMatrix", "object", "lambda matrix", "лямбда-матрица"),
    ],
    [{"src": "LambdaMatrix", "kind": "isA", "dst": "Matrix"}],
)


class TestLoading:
    def test_two_concepts_one_edge(self):
        o = load_ontology(MATRIX_DOC)
        assert len(o) == 2
        assert o.edges == (RelationEdge("LambdaMatrix", RelationKind.IS_A, "Matrix"),)

    def test_empty_ontology_is_valid(self):
        o = load_ontology(doc([], []))
        assert len(o) == 0
        assert validate(o).ok

    def test_dangling_edge_is_rejected(self):
        source = doc(
            [bilingual("A", "object", "a", "а")],
            [{"src": "A", "kind": "isA", "dst": "X"}],
        )
        with pytest.raises(IntegrityError, match="unknown concept"):
            load_ontology(source)

    def test_duplicate_id_is_rejected(self):
        source = doc(
            [bilingual("A", "object", "a", "а"), bilingual("A", "object", "a2", "а2")],
            [],
        )
        with pytest.raises(IntegrityError, match="duplicate concept id: A"):
            load_ontology(source)

    def test_bytes_input_accepted(self):
        assert len(load_ontology(MATRIX_DOC.encode())) == 2


class TestFormatErrors:
    def test_invalid_json(self):
        with pytest.raises(FormatError, match="not valid JSON"):
            parse_ontology("{nope")

    def test_top_level_must_be_object(self):
        with pytest.raises(FormatError):
            parse_ontology("[]")

    def test_missing_relations_key(self):
        with pytest.raises(FormatError) as err:
            parse_ontology('{"concepts": []}')
        assert err.value.field == "relations"

    def test_bad_concept_kind(self):
        with pytest.raises(FormatError) as err:
            parse_ontology(doc([{"id": "A", "kind": "widget", "labels": {}}], []))
        assert "kind" in err.value.field

    def test_bad_relation_kind(self):
        source = doc(
            [bilingual("A", "object", "a", "а"), bilingual("B", "object", "b", "б")],
            [{"src": "A", "kind": "partOf", "dst": "B"}],
        )
        with pytest.raises(FormatError, match="isA, definedBy, seeAlso, belongsTo, solvedBy"):
            parse_ontology(source)

    def test_unknown_label_language(self):
        with pytest.raises(FormatError, match="en.*ru|'en' or 'ru'"):
            parse_ontology(doc([{"id": "A", "kind": "object", "labels": {"de": ["x"]}}], []))

    def test_field_path_points_at_offender(self):
        bad = doc([bilingual("A", "object", "a", "а"), {"id": "", "kind": "object"}], [])
        with pytest.raises(FormatError) as err:
            parse_ontology(bad)
        assert err.value.field == "concepts[1]"


class TestValidation:
    def test_two_cycle_reported_with_id_sequence(self):
        o = parse_ontology(
            doc(
                [bilingual("A", "object", "a", "а"), bilingual("B", "object", "b", "б")],
                [
                    {"src": "A", "kind": "isA", "dst": "B"},
                    {"src": "B", "kind": "isA", "dst": "A"},
                ],
            )
        )
        report = validate(o)
        assert "IsA cycle: A,B" in report.errors

    def test_self_loop_reported(self):
        o = parse_ontology(
            doc([bilingual("A", "object", "a", "а")], [{"src": "A", "kind": "isA", "dst": "A"}])
        )
        assert "IsA cycle: A" in validate(o).errors

    def test_belongs_to_must_target_area(self):
        o = parse_ontology(
            doc(
                [bilingual("A", "object", "a", "а"), bilingual("B", "object", "b", "б")],
                [{"src": "A", "kind": "belongsTo", "dst": "B"}],
            )
        )
        assert any("BelongsTo must target an Area" in e for e in validate(o).errors)

    def test_isa_must_stay_within_kind(self):
        o = parse_ontology(
            doc(
                [bilingual("A", "object", "a", "а"), bilingual("G", "area", "g", "г")],
                [{"src": "A", "kind": "isA", "dst": "G"}],
            )
        )
        assert any("same-kind" in e for e in validate(o).errors)

    def test_missing_russian_label_is_warning(self):
        o = parse_ontology(doc([{"id": "A", "kind": "object", "labels": {"en": ["a"]}}], []))
        report = validate(o)
        assert report.ok
        assert any("no ru label" in w for w in report.warnings)

    def test_dangling_edge_reported_by_validate(self):
        o = Ontology(
            [concept("A", "object", {"en": ["a"], "ru": ["а"]})],
            [RelationEdge("A", RelationKind.SEE_ALSO, "Ghost")],
        )
        assert any("unknown concept" in e for e in validate(o).errors)

    def test_duplicate_id_reported_by_validate(self):
        o = Ontology(
            [
                concept("A", "object", {"en": ["a"], "ru": ["а"]}),
                concept("A", "object", {"en": ["a2"], "ru": ["а2"]}),
            ],
            [],
        )
        assert "duplicate concept id: A" in validate(o).errors

    def test_invalid_external_link(self):
        o = Ontology(
            [concept("A", "object", {"en": ["a"], "ru": ["а"]}, external_links=["not an iri"])],
            [],
        )
        assert any("invalid external link" in e for e in validate(o).errors)

    def test_matrix_fixture_is_clean(self):
        assert validate(load_ontology(MATRIX_DOC)).ok


def polygon_ontology() -> Ontology:
    children = ["Triangle", "Parallelogram", "Trapezium", "Hexagon"]
    concepts = [bilingual("Polygon", "object", "polygon", "многоугольник")] + [
        bilingual(c, "object", c.lower(), c) for c in children
    ]
    relations = [{"src": c, "kind": "isA", "dst": "Polygon"} for c in children]
    return load_ontology(doc(concepts, relations))


class TestClosures:
    def test_polygon_descendants(self):
        o = polygon_ontology()
        assert descendants(o, "Polygon") == {
            "Polygon",
            "Triangle",
            "Parallelogram",
            "Trapezium",
            "Hexagon",
        }

    def test_leaf_descends_to_itself(self):
        assert descendants(polygon_ontology(), "Triangle") == {"Triangle"}

    def test_chain_closure(self):
        o = load_ontology(
            doc(
                [bilingual(x, "object", x, x) for x in "abc"],
                [
                    {"src": "b", "kind": "isA", "dst": "a"},
                    {"src": "c", "kind": "isA", "dst": "b"},
                ],
            )
        )
        assert descendants(o, "a") == {"a", "b", "c"}

    def test_diamond_ancestors(self):
        o = load_ontology(
            doc(
                [bilingual(x, "object", x, x) for x in "abcd"],
                [
                    {"src": "b", "kind": "isA", "dst": "a"},
                    {"src": "c", "kind": "isA", "dst": "a"},
                    {"src": "d", "kind": "isA", "dst": "b"},
                    {"src": "d", "kind": "isA", "dst": "c"},
                ],
            )
        )
        assert ancestors(o, "d") == {"d", "b", "c", "a"}

    def test_root_ancestors_is_itself(self):
        assert ancestors(polygon_ontology(), "Polygon") == {"Polygon"}

    def test_unknown_concept(self):
        with pytest.raises(UnknownConcept):
            descendants(polygon_ontology(), "Circle")
        with pytest.raises(UnknownConcept):
            ancestors(polygon_ontology(), "Circle")


class TestLabelSearch:
    def test_exact_match(self):
        o = load_ontology(MATRIX_DOC)
        assert find_by_label(o, "lambda matrix", "en") == {"LambdaMatrix"}

    def test_case_folded(self):
        o = load_ontology(MATRIX_DOC)
        assert find_by_label(o, "LAMBDA Matrix", "en") == {"LambdaMatrix"}

    def test_russian_labels_searchable(self):
        o = load_ontology(MATRIX_DOC)
        assert find_by_label(o, "МАТРИЦА", "ru") == {"Matrix"}

    def test_any_language_by_default(self):
        o = load_ontology(MATRIX_DOC)
        assert find_by_label(o, "матрица") == {"Matrix"}

    def test_miss_returns_empty_set(self):
        assert find_by_label(load_ontology(MATRIX_DOC), "nosuchterm") == set()


class TestRelationsOf:
    def setup_method(self):
        self.o = load_ontology(
            doc(
                [
                    bilingual("ChristoffelSymbol", "object", "christoffel symbol", "символ Кристоффеля"),
                    bilingual("Connectedness", "object", "connectedness", "связность"),
                    bilingual("SystemOfLinearEquations", "object", "system of linear equations", "СЛАУ"),
                    bilingual("GaussianEliminationMethod", "object", "gaussian elimination method", "метод Гаусса"),
                ],
                [
                    {"src": "ChristoffelSymbol", "kind": "definedBy", "dst": "Connectedness"},
                    {"src": "SystemOfLinearEquations", "kind": "solvedBy", "dst": "GaussianEliminationMethod"},
                ],
            )
        )

    def test_defined_by(self):
        assert relations_of(self.o, "ChristoffelSymbol", RelationKind.DEFINED_BY) == {"Connectedness"}

    def test_solved_by(self):
        assert relations_of(self.o, "SystemOfLinearEquations", "solvedBy") == {
            "GaussianEliminationMethod"
        }

    def test_no_edges_gives_empty_set(self):
        assert relations_of(self.o, "Connectedness", RelationKind.SEE_ALSO) == set()

    def test_unknown_concept(self):
        with pytest.raises(UnknownConcept):
            relations_of(self.o, "Ghost", RelationKind.SEE_ALSO)


@st.composite
def dag_ontologies(draw):
    """Valid ontology: object DAG + areas + cross-kind relations."""
    n_objects = draw(st.integers(min_value=1, max_value=12))
    n_areas = draw(st.integers(min_value=1, max_value=3))
    object_ids = [f"o{i}" for i in range(n_objects)]
    area_ids = [f"a{i}" for i in range(n_areas)]
    concepts = [
        concept(cid, kind, {"en": [cid], "ru": [cid]})
        for ids, kind in ((object_ids, "object"), (area_ids, "area"))
        for cid in ids
    ]
    edges = []
    # Edges only point from higher to lower index, so acyclic by construction.
    for j in range(1, n_objects):
        for i in range(j):
            if draw(st.booleans()):
                edges.append(RelationEdge(object_ids[j], RelationKind.IS_A, object_ids[i]))
    for j in range(1, n_areas):
        if draw(st.booleans()):
            edges.append(RelationEdge(area_ids[j], RelationKind.IS_A, area_ids[0]))
    for oid in object_ids:
        if draw(st.booleans()):
            edges.append(RelationEdge(oid, RelationKind.BELONGS_TO, draw(st.sampled_from(area_ids))))
    if n_objects >= 2 and draw(st.booleans()):
        src, dst = draw(st.sampled_from(object_ids)), draw(st.sampled_from(object_ids))
        kind = draw(st.sampled_from([RelationKind.SEE_ALSO, RelationKind.DEFINED_BY, RelationKind.SOLVED_BY]))
        edges.append(RelationEdge(src, kind, dst))
    return Ontology(concepts, edges)


@given(dag_ontologies())
@settings(max_examples=60)
def test_closures_match_networkx(o):
    graph = nx.DiGraph()
    graph.add_nodes_from(o.concepts)
    for edge in o.edges:
        if edge.kind == RelationKind.IS_A:
            graph.add_edge(edge.dst, edge.src)  # parent → child
    for cid in o.concepts:
        assert descendants(o, cid) == {cid} | nx.descendants(graph, cid)
        assert ancestors(o, cid) == {cid} | nx.ancestors(graph, cid)


@given(dag_ontologies())
@settings(max_examples=40)
def test_descendants_transitive_and_dual(o):
    ids = list(o.concepts)
    closure = {cid: descendants(o, cid) for cid in ids}
    for z in ids:
        for y in closure[z]:
            assert closure[y] <= closure[z]
    for a in ids:
        for b in closure[a]:
            assert a in ancestors(o, b)


@given(dag_ontologies())
@settings(max_examples=40)
def test_generated_ontologies_validate_clean(o):
    report = validate(o)
    assert report.errors == []
    assert report.warnings == []


@given(dag_ontologies(), st.integers(min_value=0, max_value=5))
@settings(max_examples=60)
def test_injected_violations_are_flagged(o, which):
    concepts = list(o.concepts.values())
    edges = list(o.edges)
    objects = [c.id for c in concepts if c.kind == ConceptKind.OBJECT]
    areas = [c.id for c in concepts if c.kind == ConceptKind.AREA]
    if which == 0:  # IsA cycle
        edges.append(RelationEdge(objects[0], RelationKind.IS_A, objects[0]))
    elif which == 1:  # dangling endpoint
        edges.append(RelationEdge(objects[0], RelationKind.SEE_ALSO, "ghost"))
    elif which == 2:  # belongsTo into an object
        edges.append(RelationEdge(objects[0], RelationKind.BELONGS_TO, objects[0]))
    elif which == 3:  # cross-kind isA
        edges.append(RelationEdge(objects[0], RelationKind.IS_A, areas[0]))
    elif which == 4:  # duplicate id
        concepts.append(concepts[0])
    else:  # missing label
        stripped = Concept(id="bare", kind=ConceptKind.OBJECT)
        concepts.append(stripped)
    report = validate(Ontology(concepts, edges))
    if which == 5:
        assert report.warnings
    else:
        assert report.errors


@given(dag_ontologies())
@settings(max_examples=40)
def test_serialize_round_trip(o):
    text = serialize_ontology(o)
    again = parse_ontology(text)
    assert set(again.concepts) == set(o.concepts)
    for cid, item in o.concepts.items():
        twin = again.concepts[cid]
        assert twin.kind == item.kind
        assert dict(twin.labels) == dict(item.labels)
        assert dict(twin.definitions) == dict(item.definitions)
        assert twin.external_links == item.external_links
    assert Counter(again.edges) == Counter(o.edges)
    assert serialize_ontology(again) == text
