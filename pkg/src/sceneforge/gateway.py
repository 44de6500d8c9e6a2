"""Chat-completion backends behind one tiny interface.

Three interchangeable backends:

* HttpBackend    -- OpenAI-compatible chat-completions endpoint, with retry,
                    exponential backoff, and rate limiting. Endpoint and key
                    come from LLM_BASE_URL / LLM_API_KEY.
* ReplayBackend  -- read-only JSONL store keyed by a canonical request hash;
                    the whole test suite runs on this with zero network.
* MockBackend    -- scripted generator that answers from the scene graph it
                    finds inside the prompt, with configurable error
                    injection, so refinement has known-wrong inputs to fix.

Recording stores are append-only JSONL lines of
``{"request_hash": ..., "request": ..., "response": ...}``.
"""

from __future__ import annotations

import hashlib
import json
import re
import threading
import time
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Dict, Iterable, List, Optional, Tuple

from .errors import (
    AuthError,
    BackendRefusalError,
    RateLimitedError,
    TransportError,
)
from .parsing import strip_id_suffixes
from .prompts import SYSTEM_TEXTS, TaskKind, parse_serialized_graph
from .rng import SplitMix64, derive_seed
from .scene_graph import (
    SceneGraph,
    count_by_label,
    exists,
    normalize_label,
    pluralize_label,
)

REWRITE_SYSTEM = (
    "You rewrite answers. Return only the rewritten answer text, nothing else."
)


@dataclass(frozen=True)
class ChatRequest:
    system: str
    turns: Tuple[Tuple[str, str], ...]
    temperature: float = 0.7
    max_tokens: int = 1024

    def __post_init__(self):
        if not self.turns:
            raise ValueError("a chat request needs at least one turn")
        for role, _ in self.turns:
            if role not in ("user", "assistant"):
                raise ValueError(f"invalid turn role {role!r}")
        if self.turns[-1][0] != "user":
            raise ValueError("the last turn must come from the user")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


@dataclass(frozen=True)
class ChatResponse:
    text: str
    backend_id: str
    latency_ms: int = 0


def request_from_bundle(bundle, temperature: float = 0.7, max_tokens: int = 1024) -> ChatRequest:
    """Flatten a PromptBundle into alternating few-shot chat turns."""
    turns: List[Tuple[str, str]] = []
    for content, response in bundle.demonstrations:
        turns.append(("user", content))
        turns.append(("assistant", response))
    turns.append(("user", bundle.query_content))
    return ChatRequest(
        system=bundle.system_text,
        turns=tuple(turns),
        temperature=temperature,
        max_tokens=max_tokens,
    )


_WS = re.compile(r"\s+")


def _squash_ws(text: str) -> str:
    return _WS.sub(" ", text).strip()


def canonical_request_json(request: ChatRequest) -> str:
    """Stable serialization for hashing: sorted keys, squashed whitespace."""
    payload = {
        "max_tokens": request.max_tokens,
        "system": _squash_ws(request.system),
        "temperature": round(request.temperature, 6),
        "turns": [[role, _squash_ws(text)] for role, text in request.turns],
    }
    return json.dumps(payload, sort_keys=True, ensure_ascii=False, separators=(",", ":"))


def request_hash(request: ChatRequest) -> str:
    return hashlib.sha256(canonical_request_json(request).encode("utf-8")).hexdigest()


def request_to_dict(request: ChatRequest) -> dict:
    return {
        "system": request.system,
        "turns": [[role, text] for role, text in request.turns],
        "temperature": request.temperature,
        "max_tokens": request.max_tokens,
    }


def request_from_dict(data: dict) -> ChatRequest:
    return ChatRequest(
        system=data["system"],
        turns=tuple((role, text) for role, text in data["turns"]),
        temperature=data.get("temperature", 0.7),
        max_tokens=data.get("max_tokens", 1024),
    )


class RateLimiter:
    """In-flight cap plus a sliding one-minute request budget."""

    def __init__(
        self,
        max_in_flight: int = 8,
        per_minute: Optional[int] = None,
        clock: Callable[[], float] = time.monotonic,
        sleep: Callable[[float], None] = time.sleep,
    ):
        self._slots = threading.Semaphore(max_in_flight)
        self._per_minute = per_minute
        self._clock = clock
        self._sleep = sleep
        self._lock = threading.Lock()
        self._recent: List[float] = []

    def __enter__(self):
        self._slots.acquire()
        if self._per_minute is not None:
            while True:
                with self._lock:
                    now = self._clock()
                    self._recent = [t for t in self._recent if now - t < 60.0]
                    if len(self._recent) < self._per_minute:
                        self._recent.append(now)
                        return self
                    wait = 60.0 - (now - self._recent[0])
                self._sleep(max(wait, 0.01))
        return self

    def __exit__(self, *exc):
        self._slots.release()
        return False


class Backend:
    """Base chat backend; thread-safe complete() with shared rate limiting."""

    backend_id = "base"

    def __init__(self, limiter: Optional[RateLimiter] = None):
        self._limiter = limiter

    def complete(self, request: ChatRequest) -> ChatResponse:
        if self._limiter is None:
            return self._complete(request)
        with self._limiter:
            return self._complete(request)

    def _complete(self, request: ChatRequest) -> ChatResponse:
        raise NotImplementedError


class HttpBackend(Backend):
    """OpenAI-compatible chat-completions client."""

    def __init__(
        self,
        base_url: Optional[str] = None,
        api_key: Optional[str] = None,
        model: str = "gpt-3.5-turbo",
        max_retries: int = 3,
        backoff_base: float = 1.0,
        timeout: float = 60.0,
        transport=None,
        sleep: Callable[[float], None] = time.sleep,
        limiter: Optional[RateLimiter] = None,
    ):
        super().__init__(limiter)
        import os

        self.base_url = (base_url or os.environ.get("LLM_BASE_URL", "")).rstrip("/")
        self.api_key = api_key or os.environ.get("LLM_API_KEY", "")
        self.model = model
        self.max_retries = max_retries
        self.backoff_base = backoff_base
        self.timeout = timeout
        self._sleep = sleep
        if transport is None:
            import requests

            transport = requests.Session()
        self._transport = transport
        self.backend_id = f"http:{model}"
        if not self.base_url:
            raise TransportError("no endpoint configured; set LLM_BASE_URL")

    def _post_once(self, request: ChatRequest):
        messages = [{"role": "system", "content": request.system}]
        messages += [{"role": role, "content": text} for role, text in request.turns]
        return self._transport.post(
            f"{self.base_url}/chat/completions",
            json={
                "model": self.model,
                "messages": messages,
                "temperature": request.temperature,
                "max_tokens": request.max_tokens,
            },
            headers={"Authorization": f"Bearer {self.api_key}"},
            timeout=self.timeout,
        )

    def _complete(self, request: ChatRequest) -> ChatResponse:
        import requests

        last_error: Optional[Exception] = None
        started = time.monotonic()
        for attempt in range(self.max_retries + 1):
            if attempt:
                self._sleep(self.backoff_base * (2 ** (attempt - 1)))
            try:
                resp = self._post_once(request)
            except requests.RequestException as exc:
                last_error = exc
                continue
            if resp.status_code in (401, 403):
                raise AuthError(f"backend rejected credentials (HTTP {resp.status_code})")
            if resp.status_code == 429:
                last_error = RateLimitedError("backend rate limit (HTTP 429)")
                continue
            if resp.status_code >= 500:
                last_error = TransportError(f"backend failure (HTTP {resp.status_code})")
                continue
            if resp.status_code != 200:
                raise TransportError(f"unexpected HTTP status {resp.status_code}")
            data = resp.json()
            choice = data["choices"][0]
            text = (choice.get("message") or {}).get("content") or ""
            if choice.get("finish_reason") == "content_filter" or not text.strip():
                raise BackendRefusalError("backend declined to produce content")
            latency = int((time.monotonic() - started) * 1000)
            return ChatResponse(text=text, backend_id=self.backend_id, latency_ms=latency)
        if isinstance(last_error, RateLimitedError):
            raise last_error
        raise TransportError(f"retries exhausted: {last_error}")


class ReplayBackend(Backend):
    """Deterministic playback of a recorded session, keyed by request hash."""

    backend_id = "replay"

    def __init__(self, store: str | Path, limiter: Optional[RateLimiter] = None):
        super().__init__(limiter)
        self.store = Path(store)
        self._by_hash: Dict[str, dict] = {}
        if self.store.exists():
            for line in self.store.read_text(encoding="utf-8").splitlines():
                if line.strip():
                    entry = json.loads(line)
                    self._by_hash[entry["request_hash"]] = entry["response"]

    def _complete(self, request: ChatRequest) -> ChatResponse:
        key = request_hash(request)
        entry = self._by_hash.get(key)
        if entry is None:
            raise TransportError(f"no recording for request {key[:12]} in {self.store}")
        return ChatResponse(
            text=entry["text"],
            backend_id=self.backend_id,
            latency_ms=entry.get("latency_ms", 0),
        )


class RecordingBackend(Backend):
    """Pass-through wrapper that appends every exchange to a JSONL store."""

    def __init__(self, inner: Backend, store: str | Path):
        super().__init__(None)
        self.inner = inner
        self.store = Path(store)
        self.backend_id = inner.backend_id
        self.store.parent.mkdir(parents=True, exist_ok=True)
        self.store.touch()

    def _complete(self, request: ChatRequest) -> ChatResponse:
        response = self.inner.complete(request)
        entry = {
            "request_hash": request_hash(request),
            "request": request_to_dict(request),
            "response": {
                "text": response.text,
                "backend_id": response.backend_id,
                "latency_ms": response.latency_ms,
            },
        }
        with self.store.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(entry, sort_keys=True, ensure_ascii=False) + "\n")
        return response


def record_session(
    requests_stream: Iterable[ChatRequest], backend: Backend, store: str | Path
) -> Path:
    """Run the requests through the backend, appending each exchange.

    Replaying the store reproduces the session exactly. Raises OSError when
    the store is unwritable.
    """
    store = Path(store)
    with store.open("a", encoding="utf-8"):
        pass
    recorder = RecordingBackend(backend, store)
    for request in requests_stream:
        recorder.complete(request)
    return store


def _default_distractors() -> List[str]:
    from .prompts import resource_path

    return json.loads(resource_path("distractor_labels.json").read_text(encoding="utf-8"))


@dataclass
class MockConfig:
    """Error-injection knobs for the scripted backend."""

    seed: int = 0
    questions_per_scene: int = 6
    dialogue_rounds: int = 3
    counting_error_rate: float = 0.0
    existence_error_rate: float = 0.0
    id_leak_rate: float = 0.0
    refusal_rate: float = 0.0
    distractors: Tuple[str, ...] = ()


class MockBackend(Backend):
    """Rule-based generator grounded in the scene graph found in the prompt.

    The mock recognizes the task from the system text, parses the serialized
    query scene back into a graph, and emits grammar-conformant responses
    whose answers are computed from the graph -- except where the configured
    error rates inject a wrong count, a flipped polarity, a leaked object ID,
    or a refusal. Deterministic given (config.seed, request).
    """

    backend_id = "mock"

    def __init__(self, config: Optional[MockConfig] = None, limiter: Optional[RateLimiter] = None):
        super().__init__(limiter)
        self.config = config or MockConfig()
        if not self.config.distractors:
            self.config = replace(self.config, distractors=tuple(_default_distractors()))
        self._task_by_system = {text: task for task, text in SYSTEM_TEXTS.items()}

    def _complete(self, request: ChatRequest) -> ChatResponse:
        if request.system == REWRITE_SYSTEM:
            return ChatResponse(
                text=strip_id_suffixes(request.turns[-1][1]),
                backend_id=self.backend_id,
            )
        task = self._task_by_system.get(request.system)
        if task is None:
            raise TransportError("mock backend does not understand this request")
        graph = parse_serialized_graph(request.turns[-1][1])
        rng = SplitMix64(derive_seed(self.config.seed, request_hash(request)))
        if task is TaskKind.QA:
            text = self._gen_qa(graph, rng)
        elif task is TaskKind.DIALOGUE:
            text = self._gen_dialogue(graph, rng)
        elif task is TaskKind.PLANNING:
            text = self._gen_planning(graph)
        else:
            text = self._gen_caption(graph)
        return ChatResponse(text=text, backend_id=self.backend_id)

    # -- question material -------------------------------------------------

    def _label_groups(self, graph: SceneGraph) -> List[Tuple[str, List[str]]]:
        groups: Dict[str, List[str]] = {}
        order: List[str] = []
        for node in graph.nodes:
            key = normalize_label(node.label)
            if key not in groups:
                groups[key] = []
                order.append(key)
            groups[key].append(f"{node.label}-{node.id}")
        return [(key, groups[key]) for key in order]

    def _absent_label(self, graph: SceneGraph, rng: SplitMix64) -> Optional[str]:
        pool = [d for d in self.config.distractors if not exists(graph, d)]
        if not pool:
            return None
        return pool[rng.below(len(pool))]

    @staticmethod
    def _article(noun: str) -> str:
        return "an" if noun[:1] in "aeiou" else "a"

    def _counting_pair(self, graph, groups, rng) -> Tuple[str, str, str]:
        key, tokens = groups[rng.below(len(groups))]
        true_count = count_by_label(graph, key)
        answered = true_count + 1 if rng.uniform() < self.config.counting_error_rate else true_count
        question = f"How many {pluralize_label(key)} are in the room?"
        return question, ", ".join(tokens), str(answered)

    def _existence_pair(self, graph, groups, rng, present: bool) -> Optional[Tuple[str, str, str]]:
        if present:
            key, tokens = groups[rng.below(len(groups))]
            thoughts = ", ".join(tokens)
            truth = "yes"
        else:
            key = self._absent_label(graph, rng)
            if key is None:
                return None
            thoughts = ""
            truth = "no"
        answer = truth
        if rng.uniform() < self.config.existence_error_rate:
            answer = "no" if truth == "yes" else "yes"
        question = f"Is there {self._article(key)} {key} in the room?"
        return question, thoughts, answer

    def _location_pair(self, graph, rng) -> Tuple[str, str, str]:
        nodes = sorted(graph.nodes, key=lambda n: n.id)
        node = nodes[rng.below(len(nodes))]
        question = f"Where is the {node.label}?"
        rel = next((r for r in graph.relations if r.subject_id == node.id), None)
        if rng.uniform() < self.config.refusal_rate:
            return question, "", "unknown"
        if rel is None:
            return question, f"{node.label}-{node.id}", "in the room"
        other = graph.node(rel.object_id)
        if rng.uniform() < self.config.id_leak_rate:
            answer = f"{rel.predicate} the {other.label}-{other.id}"
        else:
            answer = f"{rel.predicate} the {other.label}"
        return question, f"{node.label}-{node.id}, {other.label}-{other.id}", answer

    def _pairs(self, graph: SceneGraph, rng: SplitMix64, count: int) -> List[Tuple[str, str, str]]:
        groups = self._label_groups(graph)
        kinds = ("counting", "existence_yes", "existence_no", "location")
        out: List[Tuple[str, str, str]] = []
        i = 0
        while len(out) < count:
            kind = kinds[i % len(kinds)]
            i += 1
            if kind == "counting":
                out.append(self._counting_pair(graph, groups, rng))
            elif kind == "existence_yes":
                out.append(self._existence_pair(graph, groups, rng, present=True))
            elif kind == "existence_no":
                pair = self._existence_pair(graph, groups, rng, present=False)
                if pair is not None:
                    out.append(pair)
            else:
                out.append(self._location_pair(graph, rng))
        return out

    # -- task renderers ----------------------------------------------------

    def _gen_qa(self, graph: SceneGraph, rng: SplitMix64) -> str:
        blocks = []
        for question, thoughts, answer in self._pairs(graph, rng, self.config.questions_per_scene):
            blocks.append(f"Question: {question}\nThoughts: {thoughts}\nAnswer: {answer}")
        return "\n\n".join(blocks)

    def _gen_dialogue(self, graph: SceneGraph, rng: SplitMix64) -> str:
        room = graph.room_type or "room"
        lines = [f"Context: The user is asking the assistant about the {room}."]
        for question, thoughts, answer in self._pairs(graph, rng, self.config.dialogue_rounds):
            lines.append(f"USER: {question}")
            lines.append(f"Thoughts: {thoughts}")
            lines.append(f"ASSISTANT: {self._sentence_answer(question, answer)}")
        return "\n".join(lines)

    def _sentence_answer(self, question: str, answer: str) -> str:
        if answer.isdigit():
            noun = question[len("How many ") : question.find(" are in the")]
            return f"There are {answer} {noun} in the room."
        if answer == "yes":
            noun = question[question.find("there ") + 6 : question.find(" in the")]
            return f"Yes, there is {noun} in the room."
        if answer == "no":
            noun = question[question.find("there ") + 6 : question.find(" in the")]
            return f"No, there is no {noun.split(' ', 1)[1]} in the room."
        return answer

    def _gen_caption(self, graph: SceneGraph) -> str:
        bits = []
        for node in sorted(graph.nodes, key=lambda n: n.id)[:6]:
            if node.attributes:
                bits.append(f"{self._article(node.attributes[0])} {node.attributes[0]} {node.label}")
            else:
                bits.append(f"{self._article(node.label)} {node.label}")
        room = graph.room_type or "room"
        return (
            f"In this scene, the {room} contains {', '.join(bits)}. "
            "The arrangement gives the room a lived-in, practical feel."
        )

    def _gen_planning(self, graph: SceneGraph) -> str:
        labels = [n.label for n in sorted(graph.nodes, key=lambda n: n.id)][:5]
        steps = [f"{i + 1}. Tidy the {label} and its surroundings." for i, label in enumerate(labels)]
        room = graph.room_type or "room"
        return f"Task: Tidy up the {room}.\nPlan:\n" + "\n".join(steps)

