"""Instruction-tuning record assembly and dataset files.

A record is one training example laid out as: system message, visual-slot
placeholders (image tokens then object tokens), a "USER: ... ASSISTANT:"
instruction, and the response. Records are validated on construction and on
read: exactly one USER: marker, nonempty response, and no object-ID or
thought scaffolding in the response.

Datasets are JSONL shards plus a manifest carrying per-task record counts
and approximate token statistics (whitespace tokens; model-tokenizer counts
are out of scope).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Mapping, Optional, Sequence

from .errors import ValidationError
from .parsing import detect_ids

ROLE_PROMPT = (
    "You are an AI visual assistant situated in a 3D scene. You can perceive "
    "(1) an ego-view image (accessible when necessary) and (2) the objects "
    "(including yourself) in the scene (always accessible). You should properly "
    "respond to the USER's instructions according to the given visual information."
)

SITUATION_PROMPT = "You are at a selected location in the 3D scene."

# Tasks whose records carry the situation prompt (agent location matters).
EMBODIED_TASKS = frozenset({"navigation", "object_caption"})

KNOWN_TASKS = frozenset(
    {
        "scene_caption",
        "object_caption",
        "qa",
        "dialogue",
        "planning",
        "navigation",
        "manipulation",
    }
)


def nav_instruction(goal: str, past_actions: str) -> str:
    return (
        f"The task is navigation. Your goal is to find {goal} by moving around "
        f"in the scene. Past actions: {past_actions}."
    )


def manip_instruction(goal: str, past_actions: str) -> str:
    return f"The task is manipulation. Your goal is to {goal}. Past actions: {past_actions}."


def frame_instruction(content: str) -> str:
    return f"USER: {content} ASSISTANT:"


def instruction_content(instruction: str) -> str:
    """Strip the USER/ASSISTANT framing back off a stored instruction."""
    text = instruction
    if text.startswith("USER:"):
        text = text[len("USER:"):]
    if text.rstrip().endswith("ASSISTANT:"):
        text = text.rstrip()[: -len("ASSISTANT:")]
    return text.strip()


@dataclass(frozen=True)
class GenRecord:
    task: str
    scene_id: str
    system: str
    visual_slots: tuple
    instruction: str
    response: str
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        validate_record(self)


def validate_record(record: GenRecord) -> None:
    if record.task not in KNOWN_TASKS:
        raise ValidationError(f"unknown task kind {record.task!r}")
    if record.instruction.count("USER:") != 1 or not record.instruction.endswith("ASSISTANT:"):
        raise ValidationError(
            "instruction must contain exactly one USER: and end with ASSISTANT:"
        )
    if not record.response:
        raise ValidationError("response must be nonempty for kept records")
    leaks = detect_ids(record.response)
    if leaks:
        raise ValidationError(f"response carries object IDs: {leaks[:3]}")
    if "Thoughts:" in record.response or "Context:" in record.response:
        raise ValidationError("response carries generation scaffolding")
    if len(record.visual_slots) != 2:
        raise ValidationError("visual_slots must hold the image and object placeholders")


def make_record(
    task: str,
    scene_id: str,
    instruction: str,
    response: str,
    meta: Optional[Mapping] = None,
) -> GenRecord:
    """Assemble and validate one record.

    ``instruction`` is the bare content; framing is added here. meta may
    carry image_tokens / object_tokens counts and provenance fields
    (prompt_hash, verdict_ids, seeds).
    """
    meta = dict(meta or {})
    image_tokens = int(meta.pop("image_tokens", 1 if task in ("navigation", "manipulation") else 0))
    object_tokens = int(meta.pop("object_tokens", 0))
    system = ROLE_PROMPT
    if task in EMBODIED_TASKS:
        system = f"{ROLE_PROMPT} {SITUATION_PROMPT}"
    provenance = {
        "prompt_hash": meta.pop("prompt_hash", None),
        "verdict_ids": list(meta.pop("verdict_ids", [])),
        "seeds": meta.pop("seeds", {}),
    }
    provenance.update(meta)
    return GenRecord(
        task=task,
        scene_id=scene_id,
        system=system,
        visual_slots=(f"<IMG x {image_tokens}>", f"<OBJ x {object_tokens}>"),
        instruction=frame_instruction(instruction),
        response=response,
        provenance=provenance,
    )


def record_to_dict(record: GenRecord) -> dict:
    return {
        "task": record.task,
        "scene_id": record.scene_id,
        "system": record.system,
        "visual_slots": list(record.visual_slots),
        "instruction": record.instruction,
        "response": record.response,
        "provenance": record.provenance,
    }


def record_from_dict(data: dict) -> GenRecord:
    return GenRecord(
        task=data["task"],
        scene_id=data["scene_id"],
        system=data["system"],
        visual_slots=tuple(data["visual_slots"]),
        instruction=data["instruction"],
        response=data["response"],
        provenance=data.get("provenance", {}),
    )


def _approx_tokens(text: str) -> int:
    return len(text.split())


def write_dataset(
    records: Sequence[GenRecord], path: str | Path, shard_size: int = 1000
) -> dict:
    """Write JSONL shards plus manifest.json; returns the manifest dict."""
    if shard_size <= 0:
        raise ValueError("shard_size must be positive")
    out_dir = Path(path)
    out_dir.mkdir(parents=True, exist_ok=True)
    shards = []
    for start in range(0, len(records), shard_size):
        chunk = records[start : start + shard_size]
        name = f"shard-{start // shard_size:05d}.jsonl"
        with (out_dir / name).open("w", encoding="utf-8") as fh:
            for record in chunk:
                fh.write(json.dumps(record_to_dict(record), sort_keys=True, ensure_ascii=False))
                fh.write("\n")
        shards.append({"path": name, "records": len(chunk)})
    tasks: Dict[str, Dict[str, int]] = {}
    for record in records:
        stats = tasks.setdefault(
            record.task,
            {"records": 0, "approx_tokens_response": 0, "approx_tokens_total": 0},
        )
        stats["records"] += 1
        stats["approx_tokens_response"] += _approx_tokens(record.response)
        stats["approx_tokens_total"] += (
            _approx_tokens(record.system)
            + _approx_tokens(record.instruction)
            + _approx_tokens(record.response)
        )
    manifest = {
        "total_records": len(records),
        "shard_size": shard_size,
        "shards": shards,
        "tasks": {k: tasks[k] for k in sorted(tasks)},
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )
    return manifest


def read_dataset(path: str | Path) -> List[GenRecord]:
    """Load every record from a dataset directory (or a single JSONL file)."""
    p = Path(path)
    files: Iterable[Path]
    if p.is_dir():
        manifest = json.loads((p / "manifest.json").read_text(encoding="utf-8"))
        files = [p / shard["path"] for shard in manifest["shards"]]
    else:
        files = [p]
    records: List[GenRecord] = []
    for file in files:
        for line in file.read_text(encoding="utf-8").splitlines():
            if line.strip():
                records.append(record_from_dict(json.loads(line)))
    return records
