"""Scene serialization and few-shot prompt assembly.

The phrasal context grammar is the contract between this module, the
response parser, and the ID detector, so it is fixed here and pinned by
golden files:

* one line per node, sorted by id::

      <label>-<id>: <attr>, <attr>, ...     (bare "<label>-<id>" if no attributes)

* one line per relation, sorted by (subject id, predicate, object id)::

      <label>-<sid> <predicate> <label>-<oid>

Prompts are few-shot: a task-specific system text, then (content, response)
demonstrations drawn from a demonstration library, then the serialized query
scene.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from importlib import resources as _importlib_resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import InsufficientDemosError, ParseError, UnsupportedTaskError
from .rng import SplitMix64, derive_seed
from .scene_graph import ObjectNode, Relation, SceneGraph


class TaskKind(str, Enum):
    SCENE_CAPTION = "scene_caption"
    OBJECT_CAPTION = "object_caption"
    QA = "qa"
    DIALOGUE = "dialogue"
    PLANNING = "planning"


def resource_path(name: str) -> Path:
    return Path(str(_importlib_resources.files("sceneforge").joinpath("resources", name)))


def _load_json_resource(name: str, override: Optional[str | Path] = None):
    path = Path(override) if override is not None else resource_path(name)
    return json.loads(path.read_text(encoding="utf-8"))


def node_token(node: ObjectNode) -> str:
    return f"{node.label}-{node.id}"


def serialize_graph(graph: SceneGraph) -> str:
    """Deterministic phrasal text form of a scene graph."""
    lines = []
    for node in sorted(graph.nodes, key=lambda n: n.id):
        if node.attributes:
            lines.append(f"{node_token(node)}: {', '.join(node.attributes)}")
        else:
            lines.append(node_token(node))
    rels = sorted(graph.relations, key=lambda r: (r.subject_id, r.predicate, r.object_id))
    for rel in rels:
        subj = graph.node(rel.subject_id)
        obj = graph.node(rel.object_id)
        lines.append(f"{node_token(subj)} {rel.predicate} {node_token(obj)}")
    return "\n".join(lines)


_NODE_LINE = re.compile(r"^(?P<label>[a-z][a-z ]*)-(?P<id>\d+)(?::\s*(?P<attrs>.*))?$")


def _match_relation(line: str, known: Dict[int, str]) -> Optional[Relation]:
    # Anchor subject/object against already-declared node tokens; predicates
    # may themselves contain spaces, so a free regex would be ambiguous.
    subject = obj = None
    for nid, label in known.items():
        token = f"{label}-{nid}"
        if line.startswith(token + " ") and (subject is None or len(token) > len(subject[1])):
            subject = (nid, token)
        if line.endswith(" " + token) and (obj is None or len(token) > len(obj[1])):
            obj = (nid, token)
    if subject is None or obj is None:
        return None
    predicate = line[len(subject[1]) : len(line) - len(obj[1])].strip()
    if not predicate:
        return None
    return Relation(subject[0], predicate, obj[0])


def parse_serialized_graph(text: str, scene_id: str = "parsed") -> SceneGraph:
    """Inverse of serialize_graph.

    Used by the scripted mock backend to recover the query scene from the
    prompt, and by tests to close the serialize/parse loop. "Target:" lines
    appended for object captions are skipped.
    """
    nodes: List[ObjectNode] = []
    relations: List[Relation] = []
    known: Dict[int, str] = {}
    for raw_line in text.splitlines():
        line = raw_line.strip()
        if not line or line.startswith("Target:"):
            continue
        m = _NODE_LINE.match(line)
        if m:
            attrs_text = m.group("attrs") or ""
            attrs = tuple(a.strip() for a in attrs_text.split(",") if a.strip())
            nodes.append(ObjectNode(int(m.group("id")), m.group("label"), attrs))
            known[int(m.group("id"))] = m.group("label")
            continue
        rel = _match_relation(line, known)
        if rel is not None:
            relations.append(rel)
            continue
        raise ParseError(f"unrecognized scene line: {raw_line!r}")
    return SceneGraph(scene_id=scene_id, nodes=tuple(nodes), relations=tuple(relations))


@dataclass(frozen=True)
class Demonstration:
    task: TaskKind
    content: str
    response: str


@dataclass(frozen=True)
class PromptBundle:
    system_text: str
    demonstrations: Tuple[Tuple[str, str], ...]
    query_content: str
    task: TaskKind

    def __post_init__(self):
        if not self.demonstrations:
            raise InsufficientDemosError("a prompt bundle needs at least one demonstration")
        if not self.query_content:
            raise ValueError("query_content must be non-empty")


_SCENE_PREAMBLE = (
    "You will be given a 3D scene described as a list of objects and pairwise "
    "spatial relations. Each object appears as label-ID followed by its attributes."
)

_OCOT_QA = (
    "Format each pair exactly as:\n"
    "Question: <the question>\n"
    "Thoughts: <the label-ID of every involved object candidate, comma separated; "
    "leave empty if none>\n"
    "Answer: <the answer>\n"
    "Separate pairs with one blank line. The Thoughts: field must list the object "
    "candidates before you answer; it is scaffolding and will be removed later."
)

_OCOT_DIALOGUE = (
    "Format the response exactly as:\n"
    "Context: <one sentence of dialogue context setting up the conversation>\n"
    "USER: <question>\n"
    "Thoughts: <the label-ID of every involved object candidate, comma separated; "
    "leave empty if none>\n"
    "ASSISTANT: <answer>\n"
    "Repeat USER/Thoughts/ASSISTANT for every round. The Context: block and each "
    "Thoughts: field are scaffolding and will be removed later."
)

SYSTEM_TEXTS: Dict[TaskKind, str] = {
    TaskKind.SCENE_CAPTION: (
        f"{_SCENE_PREAMBLE} Write one fluent paragraph describing the scene: the key "
        "objects with their attributes, their spatial relations, and the feel or "
        "function of the room. Never mention the numeric object IDs."
    ),
    TaskKind.OBJECT_CAPTION: (
        f"{_SCENE_PREAMBLE} The final line marks a target object. Describe the target "
        "object: its attributes and its spatial relations to nearby objects. Never "
        "mention the numeric object IDs."
    ),
    TaskKind.QA: (
        f"{_SCENE_PREAMBLE} Generate diverse question-answer pairs about the scene: "
        "object attributes, object counting, object existence, spatial relations, "
        "room type, and affordances. " + _OCOT_QA
    ),
    TaskKind.DIALOGUE: (
        f"{_SCENE_PREAMBLE} Write a natural multi-round conversation between a USER "
        "and an ASSISTANT about the scene, covering object attributes, spatial "
        "relations, and commonsense topics. " + _OCOT_DIALOGUE
    ),
    TaskKind.PLANNING: (
        f"{_SCENE_PREAMBLE} Propose one high-level household task that fits the scene, "
        "then a numbered plan of 5-10 action steps grounded in the listed objects. "
        "Format:\nTask: <the task>\nPlan:\n1. <step>\n2. <step>"
    ),
}


class DemoLibrary:
    """Editable few-shot exemplar store, keyed by task."""

    def __init__(self, demos: Sequence[Demonstration]):
        self._by_task: Dict[TaskKind, List[Demonstration]] = {}
        for demo in demos:
            self._by_task.setdefault(demo.task, []).append(demo)

    @classmethod
    def load(cls, path: Optional[str | Path] = None) -> "DemoLibrary":
        raw = _load_json_resource("demo_library.json", path)
        return cls(
            [
                Demonstration(TaskKind(d["task"]), d["content"], d["response"])
                for d in raw
            ]
        )

    def for_task(self, task: TaskKind) -> List[Demonstration]:
        return list(self._by_task.get(task, []))


def build_prompt(
    task: TaskKind,
    graph: SceneGraph,
    demo_set: DemoLibrary,
    n_demos: int,
    seed: int,
) -> PromptBundle:
    """Assemble the few-shot bundle for one query scene.

    Demonstrations are a seeded draw without replacement, so reruns with the
    same seed are byte-identical. For object captions a seeded target node is
    appended to the query content.
    """
    pool = demo_set.for_task(task)
    if n_demos < 1 or len(pool) < n_demos:
        raise InsufficientDemosError(
            f"task {task.value!r} needs {n_demos} demonstrations, library has {len(pool)}"
        )
    rng = SplitMix64(derive_seed(seed, task.value, graph.scene_id))
    chosen = rng.sample(pool, n_demos)
    query = serialize_graph(graph)
    if task is TaskKind.OBJECT_CAPTION:
        target = sorted(graph.nodes, key=lambda n: n.id)[rng.below(len(graph.nodes))]
        query = f"{query}\nTarget: {node_token(target)}"
    return PromptBundle(
        system_text=SYSTEM_TEXTS[task],
        demonstrations=tuple((d.content, d.response) for d in chosen),
        query_content=query,
        task=task,
    )


_POOL_KEYS = {
    TaskKind.SCENE_CAPTION: "scene_caption",
    TaskKind.OBJECT_CAPTION: "object_caption",
    TaskKind.PLANNING: "planning",
}

_pool_cache: Dict[str, List[str]] = {}


def instruction_pool(task: TaskKind, path: Optional[str | Path] = None) -> List[str]:
    if task not in _POOL_KEYS:
        raise UnsupportedTaskError(
            f"{task.value} has no instruction pool; the question or dialogue history "
            "serves as the instruction"
        )
    cache_key = f"{task.value}:{path}"
    if cache_key not in _pool_cache:
        pools = _load_json_resource("instruction_pools.json", path)
        _pool_cache[cache_key] = list(pools[_POOL_KEYS[task]])
    return _pool_cache[cache_key]


def instruction_for(task: TaskKind, seed: int, path: Optional[str | Path] = None) -> str:
    """Uniform seeded draw from the embedded instruction pool for the task."""
    pool = instruction_pool(task, path)
    return pool[SplitMix64(seed).below(len(pool))]
