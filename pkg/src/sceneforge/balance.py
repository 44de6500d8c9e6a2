"""Negative-sample augmentation and the Yes/No-1/No-2 existence eval split.

Generated existence QA skews heavily toward "yes" answers, which teaches
models to hallucinate objects. Augmentation appends negatives of the form
"Is there a/an X in the room?" -> "No, there is no X in the room." where X
is drawn from labels provably absent from the record's scene, until the
"no" fraction reaches the target ratio.

The evaluation split stresses the same failure mode three ways: queried
objects present in the scene (Yes), present only in other scenes (No-1), or
absent from every scene (No-2).
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, List, Mapping, Optional, Sequence, Tuple

from .emit import GenRecord, instruction_content, make_record
from .errors import EmptyVocabularyError, InsufficientLabelsError
from .prompts import resource_path
from .refine import answer_polarity, existence_noun
from .rng import SplitMix64, derive_seed
from .scene_graph import SceneGraph, labels_of, normalize_label

RATIO_TOLERANCE = 0.02


@dataclass(frozen=True)
class Vocabulary:
    global_labels: frozenset
    per_scene: Dict[str, frozenset]

    def absent_from(self, scene_id: str) -> List[str]:
        return sorted(self.global_labels - self.per_scene[scene_id])


def build_vocabulary(graphs: Mapping[str, SceneGraph]) -> Vocabulary:
    per_scene = {sid: frozenset(labels_of(g)) for sid, g in graphs.items()}
    global_labels = frozenset().union(*per_scene.values()) if per_scene else frozenset()
    return Vocabulary(global_labels=global_labels, per_scene=per_scene)


def _article(noun: str) -> str:
    return "an" if noun[:1] in "aeiou" else "a"


def existence_question(label: str) -> str:
    return f"Is there {_article(label)} {label} in the room?"


def negative_answer(label: str) -> str:
    return f"No, there is no {label} in the room."


def is_no_record(record: GenRecord) -> bool:
    return answer_polarity(record.response) is False


def no_fraction(records: Sequence[GenRecord]) -> float:
    if not records:
        return 0.0
    return sum(is_no_record(r) for r in records) / len(records)


def augment_negatives(
    records: Sequence[GenRecord],
    graphs: Mapping[str, SceneGraph],
    ratio: float,
    seed: int = 0,
) -> List[GenRecord]:
    """Append negative existence records until "no" answers hit the ratio.

    The queried label of every appended record is absent from that record's
    scene (a No-1 style negative). Appending stops when the corpus "no"
    fraction is within 2% of the target or every (scene, label) candidate is
    used up; EmptyVocabularyError means there was no candidate at all.
    """
    if not (0.0 <= ratio < 1.0):
        raise ValueError(f"ratio must be in [0, 1), got {ratio}")
    out = list(records)
    if ratio == 0.0 or not records:
        return out
    vocab = build_vocabulary(graphs)
    scene_ids = sorted({r.scene_id for r in records})
    rng = SplitMix64(derive_seed(seed, "augment"))
    candidates: List[Tuple[str, str]] = [
        (scene_id, label)
        for scene_id in scene_ids
        for label in vocab.absent_from(scene_id)
    ]
    n_no = sum(is_no_record(r) for r in out)
    if n_no / len(out) >= ratio:
        return out
    if not candidates:
        raise EmptyVocabularyError(
            "no label is absent from any record's scene; cannot build negatives"
        )
    rng.shuffle(candidates)
    i = 0
    while i < len(candidates):
        if n_no / len(out) >= ratio:
            break
        scene_id, label = candidates[i]
        i += 1
        out.append(
            make_record(
                task="qa",
                scene_id=scene_id,
                instruction=existence_question(label),
                response=negative_answer(label),
                meta={"seeds": {"augment": seed}, "augmented": True, "label": label},
            )
        )
        n_no += 1
    return out


def load_distractors(path: Optional[str | Path] = None) -> List[str]:
    src = Path(path) if path is not None else resource_path("distractor_labels.json")
    return [normalize_label(d) for d in json.loads(src.read_text(encoding="utf-8"))]


@dataclass(frozen=True)
class ExistenceEvalItem:
    subset: str  # "Yes", "No-1", "No-2"
    scene_id: str
    label: str
    question: str
    answer: str  # "yes" / "no"

    def to_dict(self) -> dict:
        return {
            "subset": self.subset,
            "scene_id": self.scene_id,
            "label": self.label,
            "question": self.question,
            "answer": self.answer,
        }


def build_existence_eval(
    graphs: Mapping[str, SceneGraph],
    n_per_subset: int,
    seed: int = 0,
    distractors: Optional[Sequence[str]] = None,
) -> List[ExistenceEvalItem]:
    """Yes / No-1 / No-2 subsets, n questions each, disjoint (scene, label)s."""
    if n_per_subset <= 0:
        raise ValueError("n_per_subset must be positive")
    vocab = build_vocabulary(graphs)
    rng = SplitMix64(derive_seed(seed, "existence-eval"))
    scene_ids = sorted(graphs)

    yes_pool = [
        (sid, label) for sid in scene_ids for label in sorted(vocab.per_scene[sid])
    ]
    no1_pool = [
        (sid, label) for sid in scene_ids for label in vocab.absent_from(sid)
    ]
    distractor_labels = [
        normalize_label(d)
        for d in (distractors if distractors is not None else load_distractors())
    ]
    clean_distractors = [d for d in distractor_labels if d not in vocab.global_labels]
    no2_pool = [(sid, label) for sid in scene_ids for label in clean_distractors]

    for name, pool in (("Yes", yes_pool), ("No-1", no1_pool), ("No-2", no2_pool)):
        if len(pool) < n_per_subset:
            raise InsufficientLabelsError(
                f"subset {name} has only {len(pool)} candidate questions, need {n_per_subset}"
            )

    items: List[ExistenceEvalItem] = []
    for name, pool, answer in (
        ("Yes", yes_pool, "yes"),
        ("No-1", no1_pool, "no"),
        ("No-2", no2_pool, "no"),
    ):
        for sid, label in rng.sample(pool, n_per_subset):
            items.append(
                ExistenceEvalItem(
                    subset=name,
                    scene_id=sid,
                    label=label,
                    question=existence_question(label),
                    answer=answer,
                )
            )
    return items


def queried_label(record: GenRecord) -> Optional[str]:
    """The noun an existence record asks about, None if out of shape."""
    noun = existence_noun(instruction_content(record.instruction))
    return normalize_label(noun) if noun else None
