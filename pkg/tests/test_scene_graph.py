from __future__ import annotations

import json

import pytest
from hypothesis import given, strategies as st

from sceneforge.errors import ParseError, SchemaError, UnknownIdError
from sceneforge.scene_graph import (
    ObjectNode,
    SceneGraph,
    count_by_label,
    dump_scene_graph,
    exists,
    graph_from_dict,
    graph_to_dict,
    load_scene_graph,
    normalize_label,
    pluralize_label,
    relations_of,
    serialize_scene_graph,
    singularize,
)

from .conftest import FIXTURES, build_random_scene


class TestLoad:
    def test_fixture_counts(self, bedroom):
        assert len(bedroom.nodes) == 5
        assert len(bedroom.relations) == 3
        assert bedroom.room_type == "bedroom"

    def test_dangling_relation_endpoint(self, tmp_path):
        data = json.loads((FIXTURES / "bedroom_4chairs.json").read_text())
        data["relations"].append({"subject": 1, "predicate": "near", "object": 99})
        bad = tmp_path / "bad.json"
        bad.write_text(json.dumps(data))
        with pytest.raises(SchemaError):
            load_scene_graph(bad)

    def test_empty_nodes(self, tmp_path):
        bad = tmp_path / "empty.json"
        bad.write_text(json.dumps({"scene_id": "x", "nodes": [], "relations": []}))
        with pytest.raises(SchemaError):
            load_scene_graph(bad)

    def test_malformed_json(self, tmp_path):
        bad = tmp_path / "broken.json"
        bad.write_text("{not json")
        with pytest.raises(ParseError):
            load_scene_graph(bad)

    def test_duplicate_id(self):
        with pytest.raises(SchemaError):
            SceneGraph("dup", (ObjectNode(1, "chair"), ObjectNode(1, "table")))

    def test_uppercase_label_rejected(self):
        with pytest.raises(SchemaError):
            SceneGraph("case", (ObjectNode(1, "Chair"),))

    def test_missing_field(self):
        with pytest.raises(SchemaError):
            graph_from_dict({"scene_id": "x", "nodes": [{"id": 1}]})

    def test_round_trip_file(self, bedroom, tmp_path):
        out = tmp_path / "again.json"
        dump_scene_graph(bedroom, out)
        again = load_scene_graph(out)
        assert again.equals(bedroom)

    def test_reserialization_is_stable(self, bedroom):
        once = serialize_scene_graph(bedroom)
        again = serialize_scene_graph(graph_from_dict(json.loads(once)))
        assert once == again

    def test_lossless_dict_round_trip(self, bedroom):
        raw = json.loads((FIXTURES / "bedroom_4chairs.json").read_text())
        assert graph_to_dict(graph_from_dict(raw)) == raw


class TestQueries:
    def test_count_chairs(self, bedroom):
        assert count_by_label(bedroom, "chair") == 4

    def test_count_absent(self, bedroom):
        assert count_by_label(bedroom, "mirror") == 0

    def test_count_plural_query(self, bedroom):
        # Independent oracle: brute-force scan with the same normalization.
        expected = sum(
            1 for n in bedroom.nodes if normalize_label(n.label) == normalize_label("chairs")
        )
        assert expected == 4
        assert count_by_label(bedroom, "chairs") == expected

    def test_exists(self, bedroom):
        assert exists(bedroom, "table")
        assert not exists(bedroom, "ironing board")
        assert exists(bedroom, "CHAIR")

    def test_exists_iff_count_positive(self, bedroom):
        for label in ["chair", "table", "mirror", "chairs", "tables"]:
            assert exists(bedroom, label) == (count_by_label(bedroom, label) > 0)

    def test_relations_of_sorted(self, bedroom):
        rels = relations_of(bedroom, 3)
        assert len(rels) == 2
        keys = [(r.subject_id, r.predicate, r.object_id) for r in rels]
        assert keys == sorted(keys)

    def test_relations_of_isolated(self, bedroom):
        assert relations_of(bedroom, 2) == []

    def test_relations_of_unknown_id(self, bedroom):
        with pytest.raises(UnknownIdError):
            relations_of(bedroom, 99)


class TestNormalization:
    @pytest.mark.parametrize(
        "plural,singular",
        [
            ("chairs", "chair"),
            ("shelves", "shelf"),
            ("knives", "knife"),
            ("boxes", "box"),
            ("benches", "bench"),
            ("glasses", "glass"),
            ("cubbies", "cubby"),
            ("washing machines", "washing machine"),
        ],
    )
    def test_singularization(self, plural, singular):
        assert normalize_label(plural) == normalize_label(singular)

    def test_singular_passthrough(self):
        assert singularize("glass") == "glass"
        assert normalize_label("Dining Table") == "dining table"

    @pytest.mark.parametrize("label", ["chair", "shelf", "box", "dining table", "bus"])
    def test_pluralize_round_trip(self, label):
        assert normalize_label(pluralize_label(label)) == normalize_label(label)


class TestProperties:
    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=30))
    def test_count_matches_brute_force(self, seed, n):
        graph = build_random_scene(seed, n)
        for label in {node.label for node in graph.nodes}:
            brute = sum(
                1 for node in graph.nodes
                if normalize_label(node.label) == normalize_label(label)
            )
            assert count_by_label(graph, label) == brute
            assert exists(graph, label) == (brute > 0)

    @given(st.integers(min_value=0, max_value=10_000), st.integers(min_value=2, max_value=30))
    def test_serialization_round_trip(self, seed, n):
        graph = build_random_scene(seed, n)
        again = graph_from_dict(json.loads(serialize_scene_graph(graph)))
        assert again.equals(graph)
