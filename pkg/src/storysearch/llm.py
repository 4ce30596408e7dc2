"""Uniform access to chat-completion backends.

Two providers share one interface: ``HttpProvider`` speaks to any
OpenAI-compatible endpoint, and ``MockProvider`` is a seeded, fully
deterministic stand-in used by all offline tests and desk-scale runs.

The mock embeds a hidden quality value in every event it generates, drawn
from a seeded hash of (ancestor texts, sibling index), and its scorer reads
those values back. That gives search code a ground-truth objective with no
network: the same (path, index) always yields the same event and the same
quality, so an ephemeral rollout previews exactly what a later committed
expansion would produce.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import threading
import time
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import httpx

from .errors import (
    EmptyResponseError,
    InvalidInputError,
    ParseError,
    SchemaError,
    UpstreamError,
)

# Request-content markers the mock uses to tell prompt kinds apart.
GENERATION_MARKER = "[STORY CONTEXT]"
BACKWARD_MARKER = "plausibly CAUSED"
SCORING_MARKER = "Only output **one integer**"
JUDGE_MARKER = "### Categories to Rate ###"
GRAPH_MARKER = "JSON-formatted graph"

QUALITY_TAG = re.compile(r"\[q=(\d+(?:\.\d+)?)\]")
_FIRST_INTEGER = re.compile(r"-?\d+")
_FENCE = re.compile(r"^```[a-zA-Z]*\n(.*?)\n?```$", re.DOTALL)


@dataclass(frozen=True)
class CompletionRequest:
    system_text: str
    user_text: str
    temperature: float
    model_id: str
    max_output_tokens: int = 512

    def __post_init__(self):
        if not self.system_text.strip() or not self.user_text.strip():
            raise InvalidInputError("request texts must be nonempty")
        if not 0.0 <= self.temperature <= 2.0:
            raise InvalidInputError(f"temperature {self.temperature} outside [0, 2]")
        if self.max_output_tokens < 1:
            raise InvalidInputError("max_output_tokens must be positive")


@dataclass
class ProviderConfig:
    base_url: str
    api_key_env: str = "OPENAI_API_KEY"
    generator_model: str = "gpt-4o-mini"
    judge_model: str = "o1"
    request_timeout: float = 60.0
    max_retries: int = 2
    max_concurrent_requests: int = 4


class Provider(Protocol):
    generator_model: str
    judge_model: str

    def complete(self, request: CompletionRequest) -> str: ...


class HttpProvider:
    """Live client for any OpenAI-style /chat/completions endpoint.

    The API key is read only from the environment variable named in the
    config, at request time. Retries use exponential backoff.
    """

    def __init__(
        self,
        config: ProviderConfig,
        transport: httpx.BaseTransport | None = None,
        backoff_base: float = 0.5,
    ):
        self.config = config
        self.generator_model = config.generator_model
        self.judge_model = config.judge_model
        self._backoff_base = backoff_base
        self._semaphore = threading.Semaphore(config.max_concurrent_requests)
        self._client = httpx.Client(
            base_url=config.base_url.rstrip("/"),
            timeout=config.request_timeout,
            transport=transport,
        )

    def close(self) -> None:
        self._client.close()

    def complete(self, request: CompletionRequest) -> str:
        payload = {
            "model": request.model_id,
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
            "messages": [
                {"role": "system", "content": request.system_text},
                {"role": "user", "content": request.user_text},
            ],
        }
        api_key = os.environ.get(self.config.api_key_env, "")
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        attempts = self.config.max_retries + 1
        last_error: UpstreamError | None = None
        with self._semaphore:
            for attempt in range(attempts):
                try:
                    response = self._client.post("/chat/completions", json=payload, headers=headers)
                except httpx.HTTPError as exc:
                    last_error = UpstreamError(f"request failed: {exc}", attempts=attempt + 1)
                else:
                    if 200 <= response.status_code < 300:
                        return self._extract_text(response)
                    last_error = UpstreamError(
                        f"completion endpoint returned status {response.status_code}",
                        status=response.status_code,
                        attempts=attempt + 1,
                    )
                if attempt + 1 < attempts and self._backoff_base > 0:
                    time.sleep(self._backoff_base * (2**attempt))
        assert last_error is not None
        raise last_error

    @staticmethod
    def _extract_text(response: httpx.Response) -> str:
        try:
            body = response.json()
            text = body["choices"][0]["message"]["content"]
        except (ValueError, LookupError, TypeError) as exc:
            raise UpstreamError(f"malformed completion body: {exc}") from exc
        if not text or not text.strip():
            raise EmptyResponseError("completion contained no text")
        return text


class MockProvider:
    """Seeded deterministic provider keyed on request content only.

    Identical seed and request always produce identical output, regardless
    of call order or concurrency, so transcripts are reproducible bit-exactly.
    """

    generator_model = "mock-generator"
    judge_model = "mock-judge"

    _SUBJECTS = (
        "the wanderer", "the lantern keeper", "the river", "the old dog",
        "the market crowd", "the mayor", "a distant bell", "the orchard",
    )
    _TURNS = (
        "uncovers a hidden letter", "breaks an old promise", "returns at dusk",
        "warns of the coming frost", "demands an answer", "vanishes without a trace",
        "offers an uneasy bargain", "stirs a forgotten memory",
    )

    def __init__(self, seed: int, delay_seconds: float = 0.0):
        self.seed = int(seed)
        self.delay_seconds = delay_seconds  # simulates backend latency in demos/tests
        self.transcript: list[CompletionRequest] = []
        self._lock = threading.Lock()
        self._quality_cache: dict[tuple, float] = {}

    # -- hidden-quality oracle -------------------------------------------------

    def hidden_quality(self, ancestor_texts: Sequence[str], sibling_index: int) -> float:
        """Quality in [1, 10] for the event generated under this path and index.

        Quality is heritable: half comes from the parent event's own quality
        (read back from its embedded tag), half from a fresh seeded draw.
        Strong branches therefore tend to stay strong, the way a good setup
        begets good continuations.
        """
        key = (tuple(ancestor_texts), sibling_index)
        if key not in self._quality_cache:
            digest = self._digest("quality", *ancestor_texts, str(sibling_index))
            draw = 1.0 + 9.0 * (digest % (2**40)) / float(2**40 - 1)
            parent = self.quality_of_text(ancestor_texts[-1]) if ancestor_texts else None
            quality = draw if parent is None else 0.5 * parent + 0.5 * draw
            self._quality_cache[key] = min(10.0, max(1.0, quality))
        return self._quality_cache[key]

    @staticmethod
    def quality_of_text(text: str) -> float | None:
        match = QUALITY_TAG.search(text)
        return float(match.group(1)) if match else None

    @classmethod
    def mean_hidden_quality(cls, texts: Sequence[str]) -> float:
        """Mean of the quality tags embedded in the given event texts."""
        values = [q for q in (cls.quality_of_text(t) for t in texts) if q is not None]
        if not values:
            raise InvalidInputError("no quality tags found in texts")
        return sum(values) / len(values)

    # -- completion ---------------------------------------------------------------

    def complete(self, request: CompletionRequest) -> str:
        with self._lock:
            self.transcript.append(request)
        if self.delay_seconds > 0:
            time.sleep(self.delay_seconds)
        user = request.user_text
        if SCORING_MARKER in user:
            return self._score_reply(user)
        if JUDGE_MARKER in user:
            return self._judge_reply(user)
        if GRAPH_MARKER in user:
            return self._graph_reply(user)
        if GENERATION_MARKER in user:
            return self._event_reply(user)
        return f"mock reply {self._digest('generic', user) % 100000}"

    def _digest(self, *parts: str) -> int:
        h = hashlib.sha256()
        h.update(str(self.seed).encode())
        for part in parts:
            h.update(b"\x1f")
            h.update(part.encode())
        return int.from_bytes(h.digest()[:8], "big")

    @staticmethod
    def _context_texts(user: str) -> list[str]:
        section = user.split(GENERATION_MARKER, 1)[1].split("--- INSTRUCTIONS ---", 1)[0]
        texts = []
        for line in section.splitlines():
            match = re.match(r"^\d+\. (.*)$", line.strip())
            if match:
                texts.append(match.group(1))
        return texts

    def _event_reply(self, user: str) -> str:
        texts = self._context_texts(user)
        backward = BACKWARD_MARKER in user
        if backward:
            index = 0
            digest = self._digest("cause", *texts, str(index))
            quality = self.hidden_quality([*texts, "cause"], index)
        else:
            avoid = user.split("Avoid repeating these prior candidate events:", 1)
            index = 0
            if len(avoid) == 2:
                index = sum(
                    1 for line in avoid[1].splitlines() if line.strip().startswith("- ")
                )
            digest = self._digest("event", *texts, str(index))
            quality = self.hidden_quality(texts, index)
        subject = self._SUBJECTS[digest % len(self._SUBJECTS)]
        turn = self._TURNS[(digest // 7) % len(self._TURNS)]
        joiner = "But" if digest % 2 else "Therefore"
        prefix = " before all this" if backward else ""
        return (
            f"{joiner}{prefix} {subject} {turn}, and branch {digest % 9973} "
            f"shifts the stakes. [q={quality:.2f}]"
        )

    def _score_reply(self, user: str) -> str:
        narrative = user.split("NARRATIVE EVENT:", 1)[-1]
        tags = [float(m.group(1)) for m in QUALITY_TAG.finditer(narrative)]
        if tags:
            score = int(round(sum(tags) / len(tags)))
        else:
            score = 1 + self._digest("score", narrative) % 10
        return str(max(1, min(10, score)))

    def _judge_reply(self, user: str) -> str:
        narrative = user.split("NARRATIVE:", 1)[-1]
        keys = (
            "overall_quality",
            "identifying_major_flaws",
            "character_behavior",
            "common_sense",
            "consistency",
            "relatedness",
            "causal_temporal_relationship",
        )
        judgement = {k: 3 + self._digest("judge", k, narrative) % 8 for k in keys}
        doc = {
            "judgement": judgement,
            "narrative_comments": f"Deterministic mock critique {self._digest('comment', narrative) % 10000}.",
        }
        return json.dumps(doc, sort_keys=True)

    def _graph_reply(self, user: str) -> str:
        def allowed(label: str) -> list[str]:
            for line in user.splitlines():
                if line.startswith(label):
                    return [t.strip() for t in line.split(":", 1)[1].split(",") if t.strip()]
            return []

        entity_types = allowed("Allowed entity types:")
        relationship_types = allowed("Allowed relationship types:")
        entities = []
        for etype in entity_types:
            for k in (1, 2):
                entities.append(
                    {"id": f"{etype}_{k}", "label": f"{etype.replace('_', ' ').title()} {k}", "type": etype}
                )
        relationships = []
        for i, source in enumerate(entities):
            target = entities[(i + 1) % len(entities)]
            if source["id"] == target["id"] or not relationship_types:
                continue
            relationships.append(
                {
                    "source": source["id"],
                    "target": target["id"],
                    "type": relationship_types[i % len(relationship_types)],
                }
            )
        return json.dumps({"entities": entities, "relationships": relationships})


class ScriptedProvider:
    """Replays a fixed response sequence; exceptions in the script are raised."""

    generator_model = "scripted-generator"
    judge_model = "scripted-judge"

    def __init__(self, responses: Sequence[str | Exception]):
        self._responses = list(responses)
        self._cursor = 0
        self.transcript: list[CompletionRequest] = []

    def complete(self, request: CompletionRequest) -> str:
        self.transcript.append(request)
        if self._cursor >= len(self._responses):
            raise RuntimeError("scripted provider ran out of responses")
        item = self._responses[self._cursor]
        self._cursor += 1
        if isinstance(item, Exception):
            raise item
        return item


@dataclass(frozen=True)
class IntegerReply:
    value: int
    fallback: bool
    attempts_used: int


def parse_first_integer(text: str) -> int | None:
    match = _FIRST_INTEGER.search(text)
    return int(match.group(0)) if match else None


def complete_integer(
    provider: Provider,
    request: CompletionRequest,
    low: int,
    high: int,
    attempts: int = 3,
) -> IntegerReply:
    """Ask until the first integer token of the reply lands in [low, high].

    Exhausting the attempt budget returns the pessimal ``low`` with
    ``fallback=True`` rather than inventing a midpoint.
    """
    if low > high:
        raise InvalidInputError("low must be <= high")
    if attempts < 1:
        raise InvalidInputError("attempts must be >= 1")
    used = 0
    for _ in range(attempts):
        used += 1
        value = parse_first_integer(provider.complete(request))
        if value is not None and low <= value <= high:
            return IntegerReply(value=value, fallback=False, attempts_used=used)
    return IntegerReply(value=low, fallback=True, attempts_used=used)


def strip_code_fences(text: str) -> str:
    """Drop one surrounding triple-backtick fence, if present."""
    stripped = text.strip()
    match = _FENCE.match(stripped)
    return match.group(1) if match else stripped


def complete_structured(
    provider: Provider,
    request: CompletionRequest,
    required_keys: Sequence[str],
    integer_ranges: dict[str, tuple[int, int]] | None = None,
) -> dict:
    """Parse the reply as a JSON document with all required keys present.

    Keys are searched recursively, so nesting is tolerated. Keys listed in
    ``integer_ranges`` must additionally hold integers in the given bounds.
    One re-ask is allowed; the second failure raises with the offending text.
    """
    if not required_keys:
        raise InvalidInputError("required_keys must be nonempty")
    integer_ranges = integer_ranges or {}
    last_text = ""
    parse_failure = False
    problems: list[str] = []
    for _ in range(2):
        last_text = provider.complete(request)
        try:
            doc = json.loads(strip_code_fences(last_text))
        except json.JSONDecodeError as exc:
            parse_failure = True
            problems = [f"{exc.msg} at position {exc.pos}"]
            continue
        parse_failure = False
        problems = _schema_problems(doc, required_keys, integer_ranges)
        if not problems:
            return doc
    if parse_failure:
        raise ParseError(f"response was not valid JSON: {problems[0]}")
    raise SchemaError("; ".join(problems), document_text=last_text)


def _schema_problems(
    doc: object,
    required_keys: Sequence[str],
    integer_ranges: dict[str, tuple[int, int]],
) -> list[str]:
    if not isinstance(doc, (dict, list)):
        return ["document is not a JSON object"]
    problems = []
    for key in required_keys:
        found, value = _find_key(doc, key)
        if not found:
            problems.append(f"missing required key {key!r}")
            continue
        if key in integer_ranges:
            low, high = integer_ranges[key]
            if isinstance(value, bool) or not isinstance(value, int):
                problems.append(f"key {key!r} must be an integer")
            elif not low <= value <= high:
                problems.append(f"key {key!r} value {value} outside [{low}, {high}]")
    return problems


def _find_key(obj: object, key: str) -> tuple[bool, object]:
    if isinstance(obj, dict):
        if key in obj:
            return True, obj[key]
        for value in obj.values():
            found, inner = _find_key(value, key)
            if found:
                return True, inner
    elif isinstance(obj, list):
        for item in obj:
            found, inner = _find_key(item, key)
            if found:
                return True, inner
    return False, None
