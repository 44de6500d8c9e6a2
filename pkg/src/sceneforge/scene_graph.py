"""Scene-graph data model and ingestion.

A scene is a set of labeled, attributed object nodes plus phrasal pairwise
relations ("standing on", "to the left of", ...). Graphs are immutable after
load and act as the ground-truth oracle for generation, refinement, and
assessment.

Canonical JSON schema (UTF-8, one scene per file)::

    {
      "scene_id": str,
      "room_type": str | null,
      "nodes": [{"id": int, "label": str, "attributes": [str]}],
      "relations": [{"subject": int, "predicate": str, "object": int}]
    }
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from .errors import ParseError, SchemaError, UnknownIdError

# Plural forms the trailing-s heuristics get wrong.
_IRREGULAR_PLURALS = {
    "shelves": "shelf",
    "knives": "knife",
    "leaves": "leaf",
    "loaves": "loaf",
    "scarves": "scarf",
    "people": "person",
    "children": "child",
    "feet": "foot",
}

_ES_STEM_ENDINGS = ("s", "x", "z", "ch", "sh")
_IRREGULAR_SINGULARS = {v: k for k, v in _IRREGULAR_PLURALS.items()}
_VOWELS = "aeiou"


def pluralize(word: str) -> str:
    """Naive English plural of one word; inverse of singularize on our labels."""
    if word in _IRREGULAR_SINGULARS:
        return _IRREGULAR_SINGULARS[word]
    if word.endswith(_ES_STEM_ENDINGS):
        return word + "es"
    if word.endswith("y") and len(word) > 1 and word[-2] not in _VOWELS:
        return word[:-1] + "ies"
    return word + "s"


def pluralize_label(label: str) -> str:
    words = label.split()
    if not words:
        return label
    words[-1] = pluralize(words[-1])
    return " ".join(words)


def singularize(word: str) -> str:
    """Naive English singular of one word; unknown shapes pass through."""
    if word in _IRREGULAR_PLURALS:
        return _IRREGULAR_PLURALS[word]
    if word.endswith("ies") and len(word) > 4:
        return word[:-3] + "y"
    if word.endswith("es") and word[:-2].endswith(_ES_STEM_ENDINGS):
        return word[:-2]
    if word.endswith("s") and not word.endswith("ss") and len(word) > 1:
        return word[:-1]
    return word


def normalize_label(label: str) -> str:
    """Lowercase, trim, and singularize the head (final) word of a label.

    "Washing Machines" and "washing machine" normalize to the same key, so
    counting questions phrased with plurals match singular node labels.
    Singularization iterates to a fixpoint so the key of a plural always
    equals the key of its singular, even for awkward shapes like "buses".
    """
    words = label.strip().lower().split()
    if not words:
        return ""
    head = words[-1]
    for _ in range(3):
        reduced = singularize(head)
        if reduced == head:
            break
        head = reduced
    words[-1] = head
    return " ".join(words)


@dataclass(frozen=True)
class ObjectNode:
    id: int
    label: str
    attributes: Tuple[str, ...] = ()


@dataclass(frozen=True)
class Relation:
    subject_id: int
    predicate: str
    object_id: int


@dataclass(frozen=True)
class SceneGraph:
    scene_id: str
    nodes: Tuple[ObjectNode, ...]
    relations: Tuple[Relation, ...] = ()
    room_type: Optional[str] = None
    _by_id: Dict[int, ObjectNode] = field(
        init=False, repr=False, compare=False, hash=False, default_factory=dict
    )

    def __post_init__(self):
        validate(self)
        object.__setattr__(self, "_by_id", {n.id: n for n in self.nodes})

    def node(self, node_id: int) -> ObjectNode:
        try:
            return self._by_id[node_id]
        except KeyError:
            raise UnknownIdError(
                f"scene {self.scene_id!r} has no object with id {node_id}"
            ) from None

    def equals(self, other: "SceneGraph") -> bool:
        """Set equality on nodes and relations, ignoring stored order."""
        return (
            self.scene_id == other.scene_id
            and self.room_type == other.room_type
            and set(self.nodes) == set(other.nodes)
            and set(self.relations) == set(other.relations)
        )


def validate(graph: SceneGraph) -> None:
    if not graph.nodes:
        raise SchemaError(f"scene {graph.scene_id!r} has no nodes")
    seen = set()
    for node in graph.nodes:
        if not isinstance(node.id, int) or node.id <= 0:
            raise SchemaError(f"node id must be a positive integer, got {node.id!r}")
        if node.id in seen:
            raise SchemaError(f"duplicate node id {node.id} in scene {graph.scene_id!r}")
        seen.add(node.id)
        if not node.label or node.label != node.label.lower():
            raise SchemaError(
                f"node {node.id} label must be non-empty lowercase, got {node.label!r}"
            )
    for rel in graph.relations:
        for endpoint in (rel.subject_id, rel.object_id):
            if endpoint not in seen:
                raise SchemaError(
                    f"relation ({rel.subject_id}, {rel.predicate!r}, {rel.object_id}) "
                    f"references missing node {endpoint}"
                )
        if rel.subject_id == rel.object_id:
            raise SchemaError(f"relation on node {rel.subject_id} is self-referential")
        if not rel.predicate:
            raise SchemaError("relation predicate must be non-empty")


def graph_from_dict(data: dict) -> SceneGraph:
    try:
        nodes = tuple(
            ObjectNode(
                id=raw["id"],
                label=raw["label"],
                attributes=tuple(raw.get("attributes", [])),
            )
            for raw in data["nodes"]
        )
        relations = tuple(
            Relation(
                subject_id=raw["subject"],
                predicate=raw["predicate"],
                object_id=raw["object"],
            )
            for raw in data.get("relations", [])
        )
        return SceneGraph(
            scene_id=data["scene_id"],
            nodes=nodes,
            relations=relations,
            room_type=data.get("room_type"),
        )
    except (KeyError, TypeError) as exc:
        raise SchemaError(f"missing or malformed field: {exc}") from exc


def graph_to_dict(graph: SceneGraph) -> dict:
    """Inverse of graph_from_dict; preserves stored node/relation order."""
    return {
        "scene_id": graph.scene_id,
        "room_type": graph.room_type,
        "nodes": [
            {"id": n.id, "label": n.label, "attributes": list(n.attributes)}
            for n in graph.nodes
        ],
        "relations": [
            {"subject": r.subject_id, "predicate": r.predicate, "object": r.object_id}
            for r in graph.relations
        ],
    }


def load_scene_graph(path: str | Path, format: str = "canonical_json") -> SceneGraph:
    """Load one canonical-JSON scene file, enforcing every invariant."""
    if format != "canonical_json":
        raise ValueError(f"unsupported scene-graph format {format!r}")
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ParseError(f"cannot read {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise SchemaError(f"{path} must contain a JSON object at top level")
    return graph_from_dict(data)


def dump_scene_graph(graph: SceneGraph, path: str | Path) -> None:
    Path(path).write_text(serialize_scene_graph(graph), encoding="utf-8")


def serialize_scene_graph(graph: SceneGraph) -> str:
    """Canonical text form: fixed key order, two-space indent, trailing \\n."""
    return json.dumps(graph_to_dict(graph), indent=2, ensure_ascii=False) + "\n"


def count_by_label(graph: SceneGraph, label: str) -> int:
    """Exact number of nodes matching the label after normalization."""
    key = normalize_label(label)
    return sum(1 for n in graph.nodes if normalize_label(n.label) == key)


def exists(graph: SceneGraph, label: str) -> bool:
    return count_by_label(graph, label) > 0


def labels_of(graph: SceneGraph) -> List[str]:
    """Distinct normalized labels, sorted."""
    return sorted({normalize_label(n.label) for n in graph.nodes})


def relations_of(graph: SceneGraph, node_id: int) -> List[Relation]:
    """Relations touching the node, sorted by (subject, predicate, object)."""
    graph.node(node_id)
    rels = [
        r for r in graph.relations if node_id in (r.subject_id, r.object_id)
    ]
    rels.sort(key=lambda r: (r.subject_id, r.predicate, r.object_id))
    return rels
