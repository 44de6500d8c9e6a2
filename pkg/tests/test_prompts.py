from __future__ import annotations

import re

import pytest
from hypothesis import given, settings, strategies as st

from sceneforge.errors import InsufficientDemosError, UnsupportedTaskError
from sceneforge.prompts import (
    DemoLibrary,
    TaskKind,
    build_prompt,
    instruction_for,
    instruction_pool,
    parse_serialized_graph,
    serialize_graph,
)
from sceneforge.scene_graph import ObjectNode, Relation, SceneGraph

from .conftest import FIXTURES, build_random_scene


class TestSerializeGraph:
    def test_single_node_line(self):
        graph = SceneGraph("one", (ObjectNode(3, "chair", ("wooden", "brown")),))
        assert serialize_graph(graph) == "chair-3: wooden, brown"

    def test_relation_line(self):
        graph = SceneGraph(
            "rel",
            (ObjectNode(3, "chair", ("wooden",)), ObjectNode(7, "table", ("round",))),
            (Relation(3, "close to", 7),),
        )
        assert serialize_graph(graph).splitlines()[-1] == "chair-3 close to table-7"

    def test_bare_node_without_attributes(self):
        graph = SceneGraph("bare", (ObjectNode(7, "dining table"),))
        assert serialize_graph(graph) == "dining table-7"

    def test_golden_file(self, bedroom):
        golden = (FIXTURES / "bedroom_4chairs.prompt.txt").read_text(encoding="utf-8")
        assert serialize_graph(bedroom) + "\n" == golden

    def test_distinct_fixtures_distinct_strings(self, bedroom):
        others = [build_random_scene(s, 8) for s in range(6)]
        texts = {serialize_graph(g) for g in [bedroom, *others]}
        assert len(texts) == 7

    @settings(max_examples=50)
    @given(seed=st.integers(min_value=0, max_value=5_000), n=st.integers(min_value=1, max_value=25))
    def test_every_mentioned_id_exists(self, seed, n):
        graph = build_random_scene(seed, n)
        ids = {node.id for node in graph.nodes}
        for match in re.finditer(r"-(\d+)\b", serialize_graph(graph)):
            assert int(match.group(1)) in ids

    @settings(max_examples=50)
    @given(seed=st.integers(min_value=0, max_value=5_000), n=st.integers(min_value=1, max_value=25))
    def test_parse_inverts_serialize(self, seed, n):
        graph = build_random_scene(seed, n)
        again = parse_serialized_graph(serialize_graph(graph), scene_id=graph.scene_id)
        assert set(again.nodes) == set(graph.nodes)
        assert set(again.relations) == set(graph.relations)


class TestBuildPrompt:
    def test_qa_prompt_mandates_thoughts(self, bedroom):
        bundle = build_prompt(TaskKind.QA, bedroom, DemoLibrary.load(), n_demos=2, seed=1)
        assert "Thoughts:" in bundle.system_text
        assert bundle.query_content == serialize_graph(bedroom)
        assert len(bundle.demonstrations) == 2

    def test_dialogue_prompt_mandates_context(self, bedroom):
        bundle = build_prompt(TaskKind.DIALOGUE, bedroom, DemoLibrary.load(), n_demos=1, seed=1)
        assert "Thoughts:" in bundle.system_text
        assert "Context:" in bundle.system_text

    def test_zero_demos_rejected(self, bedroom):
        with pytest.raises(InsufficientDemosError):
            build_prompt(TaskKind.SCENE_CAPTION, bedroom, DemoLibrary.load(), n_demos=0, seed=1)

    def test_too_many_demos_rejected(self, bedroom):
        with pytest.raises(InsufficientDemosError):
            build_prompt(TaskKind.QA, bedroom, DemoLibrary.load(), n_demos=50, seed=1)

    def test_deterministic(self, bedroom):
        lib = DemoLibrary.load()
        a = build_prompt(TaskKind.QA, bedroom, lib, n_demos=2, seed=9)
        b = build_prompt(TaskKind.QA, bedroom, lib, n_demos=2, seed=9)
        assert a == b

    def test_object_caption_appends_target(self, bedroom):
        bundle = build_prompt(TaskKind.OBJECT_CAPTION, bedroom, DemoLibrary.load(), n_demos=1, seed=2)
        target_line = bundle.query_content.splitlines()[-1]
        assert target_line.startswith("Target: ")

    def test_demo_contents_parse_back(self):
        # The shipped demonstrations must themselves follow the grammar.
        lib = DemoLibrary.load()
        for task in TaskKind:
            for demo in lib.for_task(task):
                parse_serialized_graph(demo.content)


class TestInstructionPools:
    def test_scene_caption_first_entry(self):
        pool = instruction_pool(TaskKind.SCENE_CAPTION)
        assert pool[0] == "Describe this scene."
        seed = next(s for s in range(500) if instruction_for(TaskKind.SCENE_CAPTION, s) == pool[0])
        assert instruction_for(TaskKind.SCENE_CAPTION, seed) == "Describe this scene."

    def test_planning_first_entry(self):
        pool = instruction_pool(TaskKind.PLANNING)
        assert pool[0] == "Plan for the task"
        seed = next(s for s in range(500) if instruction_for(TaskKind.PLANNING, s) == pool[0])
        assert instruction_for(TaskKind.PLANNING, seed) == "Plan for the task"

    def test_qa_has_no_pool(self):
        with pytest.raises(UnsupportedTaskError):
            instruction_for(TaskKind.QA, 0)
        with pytest.raises(UnsupportedTaskError):
            instruction_for(TaskKind.DIALOGUE, 0)

    def test_pool_sizes(self):
        assert len(instruction_pool(TaskKind.OBJECT_CAPTION)) == 17
        assert len(instruction_pool(TaskKind.SCENE_CAPTION)) == 17
        assert len(instruction_pool(TaskKind.PLANNING)) == 17

    def test_pool_override(self, tmp_path):
        override = tmp_path / "pools.json"
        override.write_text('{"scene_caption": ["Only one."], "object_caption": ["x"], "planning": ["y"]}')
        assert instruction_for(TaskKind.SCENE_CAPTION, 0, path=override) == "Only one."
