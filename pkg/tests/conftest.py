from __future__ import annotations

from pathlib import Path
from typing import Dict

import pytest

from sceneforge.rng import SplitMix64, derive_seed
from sceneforge.scene_graph import ObjectNode, Relation, SceneGraph, load_scene_graph

FIXTURES = Path(__file__).parent / "fixtures"

LABELS = [
    "chair", "table", "lamp", "bed", "sofa", "shelf", "pillow", "desk",
    "monitor", "plant", "sink", "mirror", "towel", "cabinet", "stool",
    "rug", "curtain", "heater", "wardrobe", "bench",
]
ATTRIBUTES = [
    "wooden", "metal", "white", "black", "red", "blue",
    "round", "square", "small", "large", "soft", "clean",
]
PREDICATES = [
    "close to", "standing on", "to the left of", "to the right of",
    "behind", "in front of", "attached to", "lying on",
]
ROOMS = ["bedroom", "kitchen", "living room", "bathroom"]


def build_random_scene(seed: int, n_nodes: int, scene_id: str | None = None) -> SceneGraph:
    """Seeded synthetic scene with duplicate labels and valid relations."""
    rng = SplitMix64(derive_seed(seed, "scene", n_nodes))
    nodes = []
    for i in range(1, n_nodes + 1):
        label = LABELS[rng.below(len(LABELS))]
        attrs = tuple(
            ATTRIBUTES[rng.below(len(ATTRIBUTES))] for _ in range(1 + rng.below(2))
        )
        nodes.append(ObjectNode(i, label, attrs))
    relations = []
    seen = set()
    for _ in range(n_nodes):
        a = 1 + rng.below(n_nodes)
        b = 1 + rng.below(n_nodes)
        if a == b:
            continue
        pred = PREDICATES[rng.below(len(PREDICATES))]
        key = (a, pred, b)
        if key in seen:
            continue
        seen.add(key)
        relations.append(Relation(a, pred, b))
    return SceneGraph(
        scene_id=scene_id or f"synthetic_{seed}_{n_nodes}",
        nodes=tuple(nodes),
        relations=tuple(relations),
        room_type=ROOMS[rng.below(len(ROOMS))],
    )


def build_scene_pool(count: int, seed: int = 0, min_nodes: int = 6, max_nodes: int = 14) -> Dict[str, SceneGraph]:
    rng = SplitMix64(derive_seed(seed, "pool"))
    graphs: Dict[str, SceneGraph] = {}
    for i in range(count):
        n = min_nodes + rng.below(max_nodes - min_nodes + 1)
        g = build_random_scene(seed * 1000 + i, n, scene_id=f"scene_{i:03d}")
        graphs[g.scene_id] = g
    return graphs


@pytest.fixture
def bedroom() -> SceneGraph:
    return load_scene_graph(FIXTURES / "bedroom_4chairs.json")


@pytest.fixture
def fixtures_dir() -> Path:
    return FIXTURES
