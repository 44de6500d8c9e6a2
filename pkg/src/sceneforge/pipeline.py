"""Stage plumbing: generate -> refine -> emit, file-friendly row dicts.

Stages communicate through JSONL rows so every intermediate artifact is
auditable. Three row kinds flow through the pipeline:

* qa_pair  -- one question/answer with its thoughts
* dialogue -- ordered turns, each with question/answer/thoughts
* text     -- caption or plan body

Generation fans out over scenes (optionally with a thread pool); outputs are
always assembled in input order so runs are reproducible byte for byte.
"""

from __future__ import annotations

import concurrent.futures
import json
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from . import emit as emit_mod
from . import gateway, refine as refine_mod
from .errors import SchemaError
from .parsing import parse
from .prompts import DemoLibrary, TaskKind, build_prompt, instruction_for
from .rng import derive_seed
from .scene_graph import SceneGraph, load_scene_graph


RESERVED_JSON_NAMES = {"index.json", "manifest.json"}


def scene_files(path: str | Path) -> List[Path]:
    """Scene JSON files under a path; metadata files are reserved names."""
    p = Path(path)
    if not p.is_dir():
        return [p]
    return [f for f in sorted(p.glob("*.json")) if f.name not in RESERVED_JSON_NAMES]


def load_scene_collection(path: str | Path) -> Dict[str, SceneGraph]:
    """Scene map from a directory of canonical JSON files (or one file)."""
    p = Path(path)
    files = scene_files(p)
    if not files:
        raise SchemaError(f"no scene files found under {p}")
    graphs: Dict[str, SceneGraph] = {}
    for file in files:
        graph = load_scene_graph(file)
        if graph.scene_id in graphs:
            raise SchemaError(f"duplicate scene_id {graph.scene_id!r} in {file}")
        graphs[graph.scene_id] = graph
    return graphs


def _rows_from_parsed(parsed, scene_id: str, task: TaskKind, prompt_hash: str, seed: int) -> List[dict]:
    base = {"task": task.value, "scene_id": scene_id, "prompt_hash": prompt_hash, "seed": seed}
    if task is TaskKind.DIALOGUE:
        return [
            {
                "kind": "dialogue",
                **base,
                "context": parsed.context,
                "turns": [
                    {
                        "question": t.question,
                        "answer": t.answer,
                        "thoughts": [[label, num] for label, num in t.thoughts],
                    }
                    for t in parsed.body
                ],
            }
        ]
    if task is TaskKind.QA and isinstance(parsed.body, tuple):
        return [
            {
                "kind": "qa_pair",
                **base,
                "index": i,
                "question": t.question,
                "answer": t.answer,
                "thoughts": [[label, num] for label, num in t.thoughts],
            }
            for i, t in enumerate(parsed.body)
        ]
    return [
        {
            "kind": "text",
            **base,
            "body": parsed.body if isinstance(parsed.body, str) else "",
            "thoughts": [[label, num] for label, num in parsed.thoughts],
        }
    ]


def generate_rows(
    graphs: Mapping[str, SceneGraph],
    task: TaskKind,
    backend: gateway.Backend,
    demos: Optional[DemoLibrary] = None,
    n_demos: int = 2,
    seed: int = 0,
    temperature: float = 0.7,
    max_tokens: int = 1024,
    jobs: int = 1,
) -> List[dict]:
    """Prompt + complete + parse for every scene, in scene order."""
    demos = demos or DemoLibrary.load()
    scene_ids = list(graphs)

    def one(scene_id: str) -> List[dict]:
        graph = graphs[scene_id]
        bundle = build_prompt(task, graph, demos, n_demos, seed)
        request = gateway.request_from_bundle(bundle, temperature, max_tokens)
        response = backend.complete(request)
        parsed = parse(response.text, task)
        return _rows_from_parsed(parsed, scene_id, task, gateway.request_hash(request), seed)

    if jobs <= 1:
        nested = [one(sid) for sid in scene_ids]
    else:
        with concurrent.futures.ThreadPoolExecutor(max_workers=jobs) as pool:
            nested = list(pool.map(one, scene_ids))
    return [row for rows in nested for row in rows]


def _graph_for(graphs: Mapping[str, SceneGraph], row: dict) -> SceneGraph:
    try:
        return graphs[row["scene_id"]]
    except KeyError:
        raise SchemaError(
            f"row references scene {row['scene_id']!r} which is not in the scene set"
        ) from None


def refine_rows(
    rows: Sequence[dict],
    graphs: Mapping[str, SceneGraph],
    rewriter: Optional[gateway.Backend] = None,
    lexicons: Optional[refine_mod.Lexicons] = None,
    rewrite_rounds: int = refine_mod.REWRITE_ROUNDS,
) -> Tuple[List[dict], List[dict]]:
    """Apply refinement to every row; returns (surviving rows, verdict log).

    Verdict log entries carry sequential ids referenced from row provenance.
    """
    refined: List[dict] = []
    verdict_log: List[dict] = []

    def log(verdict, scene_id) -> str:
        vid = f"v{len(verdict_log):06d}"
        entry = {"verdict_id": vid, "scene_id": scene_id}
        entry.update(refine_mod.verdict_to_dict(verdict))
        verdict_log.append(entry)
        return vid

    for row in rows:
        graph = _graph_for(graphs, row)
        if row["kind"] == "qa_pair":
            verdict = refine_mod.refine(
                row["question"], row["answer"], graph, rewriter,
                style=refine_mod.AnswerStyle.QA, lexicons=lexicons,
                rewrite_rounds=rewrite_rounds,
            )
            vid = log(verdict, row["scene_id"])
            text = verdict.final_text()
            if text is None:
                continue
            refined.append(
                {
                    **{k: row[k] for k in ("kind", "task", "scene_id", "prompt_hash", "seed", "index")},
                    "question": row["question"],
                    "answer": text,
                    "verdict_ids": [vid],
                }
            )
        elif row["kind"] == "dialogue":
            turns = [(t["question"], t["answer"]) for t in row["turns"]]
            verdicts = refine_mod.refine_dialogue(
                turns, graph, rewriter, lexicons=lexicons, rewrite_rounds=rewrite_rounds
            )
            vids = [log(v, row["scene_id"]) for v in verdicts]
            kept = refine_mod.surviving_turns(turns, verdicts)
            if not kept:
                continue
            refined.append(
                {
                    **{k: row[k] for k in ("kind", "task", "scene_id", "prompt_hash", "seed")},
                    "context": row.get("context"),
                    "turns": [{"question": q, "answer": a} for q, a in kept],
                    "verdict_ids": vids,
                }
            )
        else:
            verdict = refine_mod.refine(
                "", row["body"], graph, rewriter,
                style=refine_mod.AnswerStyle.DIALOGUE, lexicons=lexicons,
                rewrite_rounds=rewrite_rounds,
            )
            vid = log(verdict, row["scene_id"])
            text = verdict.final_text()
            if text is None:
                continue
            refined.append(
                {
                    **{k: row[k] for k in ("kind", "task", "scene_id", "prompt_hash", "seed")},
                    "body": text,
                    "verdict_ids": [vid],
                }
            )
    return refined, verdict_log


def _planning_parts(body: str) -> Tuple[Optional[str], str]:
    lines = body.splitlines()
    if lines and lines[0].strip().lower().startswith("task:"):
        goal = lines[0].split(":", 1)[1].strip()
        rest = "\n".join(lines[1:]).strip()
        if rest.lower().startswith("plan:"):
            rest = rest[len("plan:"):].strip()
        return goal, rest or body
    return None, body


def rows_to_records(
    rows: Sequence[dict],
    graphs: Mapping[str, SceneGraph],
    seed: int = 0,
) -> List[emit_mod.GenRecord]:
    """Assemble refined rows into validated instruction-tuning records."""
    records: List[emit_mod.GenRecord] = []
    for row in rows:
        graph = _graph_for(graphs, row)
        meta_base = {
            "object_tokens": len(graph.nodes),
            "prompt_hash": row.get("prompt_hash"),
            "verdict_ids": row.get("verdict_ids", []),
            "seeds": {"generate": row.get("seed", seed)},
        }
        if row["kind"] == "qa_pair":
            records.append(
                emit_mod.make_record(
                    "qa", row["scene_id"], row["question"], row["answer"], meta_base
                )
            )
        elif row["kind"] == "dialogue":
            for i, turn in enumerate(row["turns"]):
                meta = dict(meta_base)
                meta["dialogue_turn"] = i
                records.append(
                    emit_mod.make_record(
                        "dialogue", row["scene_id"], turn["question"], turn["answer"], meta
                    )
                )
        else:
            task = row["task"]
            if task in ("qa", "dialogue"):
                continue  # a bare text body has no question to frame
            draw_seed = derive_seed(seed, "instruction", task, row["scene_id"])
            if task == "planning":
                goal, plan = _planning_parts(row["body"])
                instruction = instruction_for(TaskKind.PLANNING, draw_seed)
                if goal:
                    instruction = f"{instruction}: {goal}"
                records.append(
                    emit_mod.make_record("planning", row["scene_id"], instruction, plan, meta_base)
                )
            else:
                instruction = instruction_for(TaskKind(task), draw_seed)
                records.append(
                    emit_mod.make_record(task, row["scene_id"], instruction, row["body"], meta_base)
                )
    return records


def assessment_pairs(rows: Sequence[dict]) -> List[Tuple[str, str, str]]:
    """(question, answer, scene_id) triples from qa and dialogue rows."""
    pairs: List[Tuple[str, str, str]] = []
    for row in rows:
        if row["kind"] == "qa_pair":
            pairs.append((row["question"], row["answer"], row["scene_id"]))
        elif row["kind"] == "dialogue":
            for turn in row["turns"]:
                pairs.append((turn["question"], turn["answer"], row["scene_id"]))
    return pairs


def write_rows(rows: Sequence[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False) + "\n")


def read_rows(path: str | Path) -> List[dict]:
    rows = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            rows.append(json.loads(line))
    return rows
