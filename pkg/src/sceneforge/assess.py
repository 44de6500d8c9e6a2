"""Quality assessment of generated QA pairs and corpus statistics.

Assessment covers the object questions the pipeline emits: questions
starting "How many" / "Is there" and ending "in the room/bedroom/kitchen/
living room/bathroom". Each pair is scored against the scene graph: count
match for counting, polarity match for existence and non-existence.

Corpus statistics stay dependency-free: question types keyed by (first
word, second-or-third word) and leading bigrams of instructions and
responses, in place of a full dependency parse.
"""

from __future__ import annotations

from enum import Enum
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple

from .refine import (
    answer_polarity,
    counting_noun,
    existence_noun,
    is_counting_question,
    parse_count,
)
from .scene_graph import SceneGraph, count_by_label, exists


class QuestionCategory(str, Enum):
    COUNTING = "counting"
    EXISTENCE = "existence"
    NON_EXISTENCE = "non_existence"
    OTHER = "other"


def categorize_question(question: str, graph: SceneGraph) -> QuestionCategory:
    """Counting / existence / non-existence per the question and the graph."""
    if is_counting_question(question):
        return (
            QuestionCategory.COUNTING
            if counting_noun(question) is not None
            else QuestionCategory.OTHER
        )
    noun = existence_noun(question)
    if noun is not None:
        return (
            QuestionCategory.EXISTENCE
            if exists(graph, noun)
            else QuestionCategory.NON_EXISTENCE
        )
    return QuestionCategory.OTHER


def _pair_consistent(question: str, answer: str, graph: SceneGraph, category: QuestionCategory) -> bool:
    if category is QuestionCategory.COUNTING:
        noun = counting_noun(question)
        return noun is not None and parse_count(answer) == count_by_label(graph, noun)
    if category is QuestionCategory.EXISTENCE:
        return answer_polarity(answer) is True
    if category is QuestionCategory.NON_EXISTENCE:
        return answer_polarity(answer) is False
    return True


def accuracy_report(
    pairs: Iterable[Tuple[str, str, str]],
    graphs: Mapping[str, SceneGraph],
) -> dict:
    """Per-category consistency of (question, answer, scene_id) pairs.

    Categories with no pairs report accuracy None (rendered N/A) and count 0.
    """
    totals: Dict[QuestionCategory, int] = {c: 0 for c in QuestionCategory}
    hits: Dict[QuestionCategory, int] = {c: 0 for c in QuestionCategory}
    for question, answer, scene_id in pairs:
        graph = graphs[scene_id]
        category = categorize_question(question, graph)
        if category is QuestionCategory.OTHER:
            continue
        totals[category] += 1
        if _pair_consistent(question, answer, graph, category):
            hits[category] += 1
    categories = {}
    for cat in (QuestionCategory.COUNTING, QuestionCategory.EXISTENCE, QuestionCategory.NON_EXISTENCE):
        n = totals[cat]
        categories[cat.value] = {
            "count": n,
            "accuracy": (hits[cat] / n) if n else None,
        }
    scored = sum(totals[c] for c in totals if c is not QuestionCategory.OTHER)
    correct = sum(hits[c] for c in hits if c is not QuestionCategory.OTHER)
    return {
        "categories": categories,
        "overall": {
            "count": scored,
            "accuracy": (correct / scored) if scored else None,
        },
    }


_SKIP_SECOND = {"is", "are", "the", "a", "an"}


def question_type_key(question: str) -> Optional[str]:
    """(first word, second-or-third content word) signature of a question."""
    words = question.strip().rstrip("?").split()
    if not words:
        return None
    first = words[0]
    second = next(
        (w for w in words[1:3] if w.lower() not in _SKIP_SECOND),
        next((w for w in words[3:] if w.lower() not in _SKIP_SECOND), None),
    )
    if second is None and len(words) > 1:
        second = words[1]
    return f"{first} {second}" if second else first


def _bigram(text: str) -> Optional[str]:
    words = text.strip().split()
    if not words:
        return None
    return " ".join(words[:2])


def _distribution(keys: List[str]) -> Dict[str, float]:
    counts: Dict[str, int] = {}
    for key in keys:
        counts[key] = counts.get(key, 0) + 1
    total = len(keys)
    return {k: counts[k] / total for k in sorted(counts)}


def corpus_stats(records: Sequence) -> dict:
    """Question-type and leading-bigram distributions over emitted records.

    Each distribution sums to 1 over a nonempty corpus; an empty corpus
    yields an empty report.
    """
    from .emit import instruction_content

    questions: List[str] = []
    instructions: List[str] = []
    responses: List[str] = []
    for record in records:
        content = instruction_content(record.instruction)
        instructions.append(content)
        responses.append(record.response)
        if content.endswith("?") or content.lower().startswith(("how", "is there", "what", "where", "which", "who", "why", "can", "does", "do ")):
            questions.append(content)
    q_keys = [k for k in (question_type_key(q) for q in questions) if k]
    i_keys = [k for k in (_bigram(i) for i in instructions) if k]
    r_keys = [k for k in (_bigram(r) for r in responses) if k]
    return {
        "n_records": len(records),
        "question_types": _distribution(q_keys),
        "instruction_bigrams": _distribution(i_keys),
        "response_bigrams": _distribution(r_keys),
    }
