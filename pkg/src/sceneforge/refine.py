"""Rule-based response refinement against scene-graph ground truth.

Raw answers fall into five categories, each with its own procedure:

* counting           -- recompute the count from the graph and substitute it
* existence          -- the answer asserts presence; flip it if the graph
                        disagrees
* non_existence      -- the answer asserts absence; flip it if the graph
                        disagrees
* negative_response  -- refusals ("unknown", "no mention of ...") are dropped
* response_with_id   -- leaked object IDs are rewritten by the chat backend,
                        with a bounded number of retries before dropping

Everything except the ID rewrite is deterministic template work, so the
whole path runs offline. Answer style is a per-task flag: QA answers use
bare yes/no and English number words up to ten; dialogue answers use
sentence templates and digits.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

from . import gateway
from .errors import RewriterUnavailableError, SceneForgeError
from .parsing import detect_ids, has_ids
from .prompts import resource_path
from .scene_graph import SceneGraph, count_by_label, exists, normalize_label


class RefinementCategory(str, Enum):
    COUNTING = "counting"
    EXISTENCE = "existence"
    NON_EXISTENCE = "non_existence"
    NEGATIVE_RESPONSE = "negative_response"
    RESPONSE_WITH_ID = "response_with_id"
    CLEAN = "clean"


class RefinementAction(str, Enum):
    KEEP = "keep"
    FIXED = "fixed"
    REWRITTEN = "rewritten"
    DROPPED = "dropped"


class AnswerStyle(str, Enum):
    QA = "qa"
    DIALOGUE = "dialogue"


@dataclass(frozen=True)
class RefinementVerdict:
    category: RefinementCategory
    action: RefinementAction
    original: str
    revised: Optional[str] = None
    evidence: Dict[str, object] = None  # type: ignore[assignment]

    def __post_init__(self):
        if self.evidence is None:
            object.__setattr__(self, "evidence", {})
        if self.action is RefinementAction.DROPPED and self.revised is not None:
            raise ValueError("dropped verdicts carry no revision")
        if self.action is RefinementAction.FIXED and (
            self.revised is None or self.revised == self.original
        ):
            raise ValueError("fixed verdicts must carry a changed revision")

    def final_text(self) -> Optional[str]:
        """The surviving answer text, or None for dropped pairs."""
        if self.action is RefinementAction.DROPPED:
            return None
        return self.revised if self.revised is not None else self.original


class Lexicons:
    """Compiled affirmative / negative / refusal pattern lists."""

    def __init__(self, affirmative: Sequence[str], negative: Sequence[str], refusal: Sequence[str]):
        self.affirmative = [re.compile(p, re.I) for p in affirmative]
        self.negative = [re.compile(p, re.I) for p in negative]
        self.refusal = [re.compile(p, re.I) for p in refusal]

    @classmethod
    def load(cls, path: Optional[str | Path] = None) -> "Lexicons":
        src = Path(path) if path is not None else resource_path("lexicons.json")
        data = json.loads(src.read_text(encoding="utf-8"))
        return cls(data["affirmative"], data["negative"], data["refusal"])


_default_lexicons: Optional[Lexicons] = None


def default_lexicons() -> Lexicons:
    global _default_lexicons
    if _default_lexicons is None:
        _default_lexicons = Lexicons.load()
    return _default_lexicons


def is_refusal(answer: str, lexicons: Optional[Lexicons] = None) -> bool:
    lex = lexicons or default_lexicons()
    return any(p.search(answer) for p in lex.refusal)


def answer_polarity(answer: str, lexicons: Optional[Lexicons] = None) -> Optional[bool]:
    """True if the answer asserts presence, False absence, None neither."""
    lex = lexicons or default_lexicons()
    if any(p.search(answer) for p in lex.negative):
        return False
    if any(p.search(answer) for p in lex.affirmative):
        return True
    return None


# -- question-shape parsing (the §-shaped questions the pipeline emits) -----

_LOCATION = r"(?:room|bedroom|kitchen|living room|bathroom)"
_COUNT_Q = re.compile(
    rf"^\s*how many\s+(.+?)(?:\s+(?:are|is)(?:\s+there)?)?\s+in the\s+{_LOCATION}\s*\??\s*$",
    re.I,
)
_EXIST_Q = re.compile(
    rf"^\s*is there\s+(?:an?\s+)?(.+?)\s+in the\s+{_LOCATION}\s*\??\s*$",
    re.I,
)


def counting_noun(question: str) -> Optional[str]:
    m = _COUNT_Q.match(question)
    return m.group(1).strip() if m else None


def existence_noun(question: str) -> Optional[str]:
    m = _EXIST_Q.match(question)
    return m.group(1).strip() if m else None


def is_counting_question(question: str) -> bool:
    return question.strip().lower().startswith("how many")


def is_existence_question(question: str) -> bool:
    return question.strip().lower().startswith("is there")


# -- number parsing and rendering -------------------------------------------

_NUMBER_WORDS = (
    "zero one two three four five six seven eight nine ten eleven twelve "
    "thirteen fourteen fifteen sixteen seventeen eighteen nineteen twenty"
).split()
_WORD_TO_NUM = {w: i for i, w in enumerate(_NUMBER_WORDS)}
_NUMBER_TOKEN = re.compile(
    r"\b(\d+|" + "|".join(_NUMBER_WORDS) + r")\b",
    re.I,
)


def parse_count(text: str) -> Optional[int]:
    """First numeric token (digits or number word) in the text, if any."""
    m = _NUMBER_TOKEN.search(text)
    if not m:
        return None
    token = m.group(1).lower()
    return int(token) if token.isdigit() else _WORD_TO_NUM[token]


def render_count(n: int, style: AnswerStyle) -> str:
    if style is AnswerStyle.QA and 0 <= n <= 10:
        return _NUMBER_WORDS[n]
    return str(n)


def substitute_count(answer: str, n: int, style: AnswerStyle) -> str:
    """Replace the first numeric token with the true count.

    An answer with no numeric token at all is replaced by the bare rendered
    count.
    """
    rendered = render_count(n, style)
    m = _NUMBER_TOKEN.search(answer)
    if not m:
        return rendered
    return answer[: m.start(1)] + rendered + answer[m.end(1):]


def _article(noun: str) -> str:
    return "an" if noun[:1].lower() in "aeiou" else "a"


def render_polarity(present: bool, noun: str, style: AnswerStyle) -> str:
    if style is AnswerStyle.QA:
        return "yes" if present else "no"
    if present:
        return f"Yes, there is {_article(noun)} {noun} in the room."
    return f"No, there is no {noun} in the room."


# -- classification and refinement -------------------------------------------

def classify(
    question: str,
    answer: str,
    graph: SceneGraph,
    lexicons: Optional[Lexicons] = None,
) -> RefinementCategory:
    """Assign the response to one refinement category.

    Precedence: response_with_id > negative_response > counting >
    existence / non_existence > clean.
    """
    del graph  # classification is question/answer-shaped; the graph drives refine()
    lex = lexicons or default_lexicons()
    if has_ids(answer):
        return RefinementCategory.RESPONSE_WITH_ID
    if is_refusal(answer, lex):
        return RefinementCategory.NEGATIVE_RESPONSE
    if is_counting_question(question):
        return RefinementCategory.COUNTING
    if is_existence_question(question):
        polarity = answer_polarity(answer, lex)
        if polarity is True:
            return RefinementCategory.EXISTENCE
        if polarity is False:
            return RefinementCategory.NON_EXISTENCE
    return RefinementCategory.CLEAN


REWRITE_ROUNDS = 3

_REWRITE_INSTRUCTION = (
    "Rewrite the following answer so it reads naturally and contains no "
    "numeric object IDs (no label-number tokens). Keep the meaning and every "
    "object mention.\n\n"
)


def _rewrite_without_ids(
    answer: str, rewriter: Optional[gateway.Backend], rounds: int
) -> Tuple[Optional[str], int]:
    if rewriter is None:
        raise RewriterUnavailableError("response-with-ID refinement needs a rewrite backend")
    text = answer
    for attempt in range(1, rounds + 1):
        request = gateway.ChatRequest(
            system=gateway.REWRITE_SYSTEM,
            turns=(("user", _REWRITE_INSTRUCTION + text),),
            temperature=0.0,
        )
        try:
            text = rewriter.complete(request).text.strip()
        except SceneForgeError as exc:
            raise RewriterUnavailableError(f"rewrite backend failed: {exc}") from exc
        if not has_ids(text):
            return text, attempt
    return None, rounds


def refine(
    question: str,
    answer: str,
    graph: SceneGraph,
    rewriter: Optional[gateway.Backend] = None,
    style: AnswerStyle = AnswerStyle.QA,
    lexicons: Optional[Lexicons] = None,
    rewrite_rounds: int = REWRITE_ROUNDS,
) -> RefinementVerdict:
    """Apply the category-specific procedure and report what happened."""
    lex = lexicons or default_lexicons()
    category = classify(question, answer, graph, lex)

    if category is RefinementCategory.RESPONSE_WITH_ID:
        ids = [(m.label, m.id) for m in detect_ids(answer)]
        revised, rounds = _rewrite_without_ids(answer, rewriter, rewrite_rounds)
        if revised is None:
            return RefinementVerdict(
                category, RefinementAction.DROPPED, answer,
                evidence={"ids": ids, "rewrite_rounds": rounds},
            )
        return RefinementVerdict(
            category, RefinementAction.REWRITTEN, answer, revised,
            evidence={"ids": ids, "rewrite_rounds": rounds},
        )

    if category is RefinementCategory.NEGATIVE_RESPONSE:
        return RefinementVerdict(
            category, RefinementAction.DROPPED, answer,
            evidence={"refusal": True},
        )

    if category is RefinementCategory.COUNTING:
        noun = counting_noun(question)
        if noun is None:
            return RefinementVerdict(
                category, RefinementAction.KEEP, answer,
                evidence={"noun": None, "reason": "question shape not recognized"},
            )
        true_count = count_by_label(graph, noun)
        revised = substitute_count(answer, true_count, style)
        evidence = {"noun": normalize_label(noun), "count": true_count}
        if revised == answer:
            return RefinementVerdict(category, RefinementAction.KEEP, answer, evidence=evidence)
        return RefinementVerdict(category, RefinementAction.FIXED, answer, revised, evidence)

    if category in (RefinementCategory.EXISTENCE, RefinementCategory.NON_EXISTENCE):
        noun = existence_noun(question)
        if noun is None:
            return RefinementVerdict(
                category, RefinementAction.KEEP, answer,
                evidence={"noun": None, "reason": "question shape not recognized"},
            )
        truth = exists(graph, noun)
        claimed = category is RefinementCategory.EXISTENCE
        evidence = {"noun": normalize_label(noun), "exists": truth}
        if claimed == truth:
            return RefinementVerdict(category, RefinementAction.KEEP, answer, evidence=evidence)
        revised = render_polarity(truth, noun, style)
        if revised == answer:
            return RefinementVerdict(category, RefinementAction.KEEP, answer, evidence=evidence)
        return RefinementVerdict(category, RefinementAction.FIXED, answer, revised, evidence)

    return RefinementVerdict(RefinementCategory.CLEAN, RefinementAction.KEEP, answer)


def refine_dialogue(
    turns: Sequence[Tuple[str, str]],
    graph: SceneGraph,
    rewriter: Optional[gateway.Backend] = None,
    lexicons: Optional[Lexicons] = None,
    rewrite_rounds: int = REWRITE_ROUNDS,
) -> List[RefinementVerdict]:
    """Per-turn verdicts for a (question, answer) sequence.

    A dropped turn removes that QA pair from the emitted dialogue; later
    turns are refined and retained independently.
    """
    if not turns:
        raise ValueError("refine_dialogue needs at least one turn")
    return [
        refine(
            question, answer, graph, rewriter,
            style=AnswerStyle.DIALOGUE, lexicons=lexicons, rewrite_rounds=rewrite_rounds,
        )
        for question, answer in turns
    ]


def surviving_turns(
    turns: Sequence[Tuple[str, str]], verdicts: Sequence[RefinementVerdict]
) -> List[Tuple[str, str]]:
    """The dialogue that remains after refinement, with revisions applied."""
    kept = []
    for (question, _), verdict in zip(turns, verdicts):
        text = verdict.final_text()
        if text is not None:
            kept.append((question, text))
    return kept


def verdict_to_dict(verdict: RefinementVerdict) -> dict:
    return {
        "category": verdict.category.value,
        "action": verdict.action.value,
        "original": verdict.original,
        "revised": verdict.revised,
        "evidence": verdict.evidence,
    }
