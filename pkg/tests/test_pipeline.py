from __future__ import annotations

import pytest

from sceneforge import pipeline
from sceneforge.errors import SchemaError
from sceneforge.gateway import MockBackend, MockConfig
from sceneforge.prompts import TaskKind
from sceneforge.scene_graph import dump_scene_graph

from .conftest import build_scene_pool


@pytest.fixture
def graphs():
    return build_scene_pool(8, seed=15)


class TestGenerateRows:
    def test_jobs_pool_matches_serial_order(self, graphs):
        backend = MockBackend(MockConfig(seed=3))
        serial = pipeline.generate_rows(graphs, TaskKind.QA, backend, seed=1, jobs=1)
        pooled = pipeline.generate_rows(graphs, TaskKind.QA, backend, seed=1, jobs=4)
        assert serial == pooled

    def test_rows_carry_prompt_hash_and_seed(self, graphs):
        rows = pipeline.generate_rows(graphs, TaskKind.QA, MockBackend(), seed=5)
        assert all(row["seed"] == 5 and row["prompt_hash"] for row in rows)


class TestSceneCollection:
    def test_duplicate_scene_ids_rejected(self, tmp_path, graphs):
        scene = next(iter(graphs.values()))
        dump_scene_graph(scene, tmp_path / "a.json")
        dump_scene_graph(scene, tmp_path / "b.json")
        with pytest.raises(SchemaError):
            pipeline.load_scene_collection(tmp_path)

    def test_empty_dir_rejected(self, tmp_path):
        with pytest.raises(SchemaError):
            pipeline.load_scene_collection(tmp_path)

    def test_reserved_names_skipped(self, tmp_path, graphs):
        scene = next(iter(graphs.values()))
        dump_scene_graph(scene, tmp_path / "a.json")
        (tmp_path / "index.json").write_text("{}")
        (tmp_path / "manifest.json").write_text("{}")
        loaded = pipeline.load_scene_collection(tmp_path)
        assert len(loaded) == 1


class TestRowIo:
    def test_write_read_round_trip(self, tmp_path, graphs):
        rows = pipeline.generate_rows(graphs, TaskKind.QA, MockBackend(), seed=2)
        path = tmp_path / "rows.jsonl"
        pipeline.write_rows(rows, path)
        assert pipeline.read_rows(path) == rows
