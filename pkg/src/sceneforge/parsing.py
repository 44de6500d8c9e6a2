"""Raw response parsing: structured fields, thoughts, and ID hygiene.

The response grammar is the one the prompt instructions mandate:

* QA blocks::

      Question: <question>          (optional for a single bare answer)
      Thoughts: <label-id>, ...     (optional)
      Answer: <answer>

  separated by blank lines.

* Dialogue::

      Context: <context sentence(s)>            (optional)
      USER: <question>
      Thoughts: <label-id>, ...                 (optional)
      ASSISTANT: <answer>
      ...

* Captions and plans are free text with optional Thoughts: lines.

Thoughts and Context are generation-time scaffolding; strip_scaffolding
removes them and refuses (IdLeakError) to pass through text that still
carries ``label-id`` tokens.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import List, NamedTuple, Optional, Tuple, Union

from .errors import GrammarError, IdLeakError
from .prompts import TaskKind

Thought = Tuple[str, int]


class IdMatch(NamedTuple):
    label: str
    id: int
    start: int
    end: int


# A single alphabetic word glued to a numeric id, guarded so hyphenated
# English ("well-known") and bare numbers ("3 chairs") never match.
_ID_PATTERN = re.compile(r"(?<![A-Za-z0-9-])([A-Za-z]+)-([0-9]+)(?![A-Za-z0-9-])")


def detect_ids(text: str) -> List[IdMatch]:
    """All object-ID tokens in the text, non-overlapping, left to right."""
    return [
        IdMatch(m.group(1), int(m.group(2)), m.start(), m.end())
        for m in _ID_PATTERN.finditer(text)
    ]


def has_ids(text: str) -> bool:
    return _ID_PATTERN.search(text) is not None


def strip_id_suffixes(text: str) -> str:
    """Drop the ``-<digits>`` part of every object-ID token, keep the label."""
    return _ID_PATTERN.sub(r"\1", text)


@dataclass(frozen=True)
class Turn:
    question: str
    answer: str
    thoughts: Tuple[Thought, ...] = ()


@dataclass(frozen=True)
class ParsedResponse:
    task: TaskKind
    body: Union[str, Tuple[Turn, ...]]
    thoughts: Tuple[Thought, ...] = ()
    context: Optional[str] = None
    raw: str = field(default="", compare=False)


def _parse_thought_items(text: str) -> Tuple[Thought, ...]:
    out = []
    for item in text.split(","):
        item = item.strip().rstrip(".")
        if not item or "-" not in item:
            continue
        label, _, num = item.rpartition("-")
        if label and num.isdigit():
            out.append((label.strip(), int(num)))
    return tuple(out)


def _marker_value(line: str, marker: str) -> Optional[str]:
    if line.startswith(marker):
        return line[len(marker):].strip()
    return None


def _parse_qa(raw: str) -> Tuple[Union[str, Tuple[Turn, ...]], Tuple[Thought, ...]]:
    lines = raw.splitlines()
    if not any(line.strip().startswith("Question:") for line in lines):
        return _parse_single(raw)
    turns: List[Turn] = []
    question: Optional[str] = None
    thoughts: Tuple[Thought, ...] = ()
    answer: Optional[List[str]] = None
    for line in lines:
        stripped = line.strip()
        if not stripped:
            continue
        q = _marker_value(stripped, "Question:")
        if q is not None:
            if question is not None and answer is None:
                raise GrammarError(f"question {question!r} has no Answer: line")
            if question is not None:
                turns.append(Turn(question, " ".join(answer or []), thoughts))
            question, thoughts, answer = q, (), None
            continue
        t = _marker_value(stripped, "Thoughts:")
        if t is not None:
            thoughts = _parse_thought_items(t)
            continue
        a = _marker_value(stripped, "Answer:")
        if a is not None:
            if question is None:
                raise GrammarError("Answer: before any Question:")
            answer = [a] if a else []
            continue
        if answer is not None:
            answer.append(stripped)
    if question is not None:
        if answer is None:
            raise GrammarError(f"question {question!r} has no Answer: line")
        turns.append(Turn(question, " ".join(answer), thoughts))
    merged = tuple(th for turn in turns for th in turn.thoughts)
    return tuple(turns), merged


def _parse_single(raw: str) -> Tuple[str, Tuple[Thought, ...]]:
    thoughts: List[Thought] = []
    body_lines: List[str] = []
    answer: Optional[str] = None
    for line in raw.splitlines():
        stripped = line.strip()
        t = _marker_value(stripped, "Thoughts:")
        if t is not None:
            thoughts.extend(_parse_thought_items(t))
            continue
        a = _marker_value(stripped, "Answer:")
        if a is not None:
            answer = a
            continue
        body_lines.append(line)
    if answer is not None:
        body = answer
    else:
        body = "\n".join(body_lines).strip()
    return body, tuple(thoughts)


def _parse_dialogue(raw: str) -> Tuple[Tuple[Turn, ...], Tuple[Thought, ...], Optional[str]]:
    context_lines: List[str] = []
    turns: List[Turn] = []
    question: Optional[List[str]] = None
    thoughts: Tuple[Thought, ...] = ()
    answer: Optional[List[str]] = None
    in_context = False
    for line in raw.splitlines():
        stripped = line.strip()
        if not stripped:
            continue
        c = _marker_value(stripped, "Context:")
        if c is not None:
            if turns or question is not None:
                raise GrammarError("Context: must precede the first USER: turn")
            in_context = True
            if c:
                context_lines.append(c)
            continue
        u = _marker_value(stripped, "USER:")
        if u is not None:
            if question is not None and answer is None:
                raise GrammarError("USER: turn opened before the previous one was answered")
            if question is not None:
                turns.append(Turn(" ".join(question), " ".join(answer or []), thoughts))
            question, thoughts, answer = [u], (), None
            in_context = False
            continue
        t = _marker_value(stripped, "Thoughts:")
        if t is not None:
            if question is None:
                raise GrammarError("Thoughts: outside a dialogue turn")
            thoughts = _parse_thought_items(t)
            continue
        a = _marker_value(stripped, "ASSISTANT:")
        if a is not None:
            if question is None:
                raise GrammarError("ASSISTANT: without a preceding USER: turn")
            answer = [a] if a else []
            continue
        if in_context:
            context_lines.append(stripped)
        elif answer is not None:
            answer.append(stripped)
        elif question is not None:
            question.append(stripped)
        else:
            raise GrammarError(f"stray text outside any dialogue turn: {stripped!r}")
    if question is not None:
        if answer is None:
            raise GrammarError("dialogue ends with an unanswered USER: turn")
        turns.append(Turn(" ".join(question), " ".join(answer), thoughts))
    if not turns:
        raise GrammarError("dialogue response contains no USER/ASSISTANT turns")
    merged = tuple(th for turn in turns for th in turn.thoughts)
    context = " ".join(context_lines) if context_lines else None
    return tuple(turns), merged, context


def parse(raw: str, task: TaskKind) -> ParsedResponse:
    """Split a raw response into body, thoughts, and context per the grammar."""
    if task is TaskKind.DIALOGUE:
        turns, thoughts, context = _parse_dialogue(raw)
        return ParsedResponse(task=task, body=turns, thoughts=thoughts, context=context, raw=raw)
    if task is TaskKind.QA:
        body, thoughts = _parse_qa(raw)
        return ParsedResponse(task=task, body=body, thoughts=thoughts, raw=raw)
    body, thoughts = _parse_single(raw)
    return ParsedResponse(task=task, body=body, thoughts=thoughts, raw=raw)


def _render_thoughts(thoughts: Tuple[Thought, ...]) -> str:
    return ", ".join(f"{label}-{num}" for label, num in thoughts)


def render(parsed: ParsedResponse) -> str:
    """Inverse of parse: re-emit the response in the grammar."""
    if parsed.task is TaskKind.DIALOGUE:
        assert isinstance(parsed.body, tuple)
        lines = []
        if parsed.context:
            lines.append(f"Context: {parsed.context}")
        for turn in parsed.body:
            lines.append(f"USER: {turn.question}")
            if turn.thoughts:
                lines.append(f"Thoughts: {_render_thoughts(turn.thoughts)}")
            lines.append(f"ASSISTANT: {turn.answer}")
        return "\n".join(lines)
    if isinstance(parsed.body, tuple):
        blocks = []
        for turn in parsed.body:
            block = [f"Question: {turn.question}"]
            if turn.thoughts:
                block.append(f"Thoughts: {_render_thoughts(turn.thoughts)}")
            block.append(f"Answer: {turn.answer}")
            blocks.append("\n".join(block))
        return "\n\n".join(blocks)
    lines = []
    if parsed.thoughts:
        lines.append(f"Thoughts: {_render_thoughts(parsed.thoughts)}")
    if parsed.task is TaskKind.QA:
        lines.append(f"Answer: {parsed.body}")
    else:
        lines.append(parsed.body)
    return "\n".join(lines)


def strip_scaffolding(parsed: ParsedResponse) -> Union[str, List[Tuple[str, str]]]:
    """Body only, with Thoughts and Context gone; IdLeakError if IDs remain.

    Returns the body string, or (question, answer) pairs for turn-structured
    bodies. Idempotent: stripping an already-clean response is the identity.
    """
    if isinstance(parsed.body, tuple):
        pairs = [(t.question, t.answer) for t in parsed.body]
        leaked = [m for q, a in pairs for m in detect_ids(q) + detect_ids(a)]
        if leaked:
            raise IdLeakError(f"object IDs remain after stripping: {leaked[:5]}")
        return pairs
    if has_ids(parsed.body):
        raise IdLeakError(f"object IDs remain after stripping: {detect_ids(parsed.body)[:5]}")
    return parsed.body
