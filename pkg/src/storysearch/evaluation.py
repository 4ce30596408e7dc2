"""Narrative judging on seven 1-10 dimensions, plus distinct-n diversity."""

from __future__ import annotations

import statistics
import string
from dataclasses import dataclass

from .errors import InvalidInputError, SchemaError
from .llm import CompletionRequest, Provider, complete_structured
from .prompts import load_template, render

JUDGE_SCORE_KEYS = (
    "overall_quality",
    "identifying_major_flaws",
    "character_behavior",
    "common_sense",
    "consistency",
    "relatedness",
    "causal_temporal_relationship",
)
JUDGE_TEMPERATURE = 0.0
JUDGE_MAX_TOKENS = 1200


@dataclass(frozen=True)
class JudgeReport:
    overall_quality: int
    identifying_major_flaws: int
    character_behavior: int
    common_sense: int
    consistency: int
    relatedness: int
    causal_temporal_relationship: int
    narrative_comments: str

    def __post_init__(self):
        for key in JUDGE_SCORE_KEYS:
            value = getattr(self, key)
            if not isinstance(value, int) or isinstance(value, bool) or not 1 <= value <= 10:
                raise InvalidInputError(f"{key} must be an integer in [1, 10], got {value!r}")

    def scores(self) -> dict[str, int]:
        return {key: getattr(self, key) for key in JUDGE_SCORE_KEYS}

    def to_document(self) -> dict:
        return {"judgement": self.scores(), "narrative_comments": self.narrative_comments}

    @classmethod
    def from_document(cls, doc: dict) -> "JudgeReport":
        judgement = doc.get("judgement")
        if not isinstance(judgement, dict):
            raise SchemaError("document missing 'judgement' object")
        comments = doc.get("narrative_comments")
        if not isinstance(comments, str):
            raise SchemaError("document missing 'narrative_comments' text")
        try:
            return cls(**{k: judgement[k] for k in JUDGE_SCORE_KEYS}, narrative_comments=comments)
        except KeyError as exc:
            raise SchemaError(f"judgement missing key {exc.args[0]!r}") from None


def judge_narrative(text: str, provider: Provider) -> JudgeReport:
    """Score one narrative with the judge model; structured output only."""
    if not text or not text.strip():
        raise InvalidInputError("narrative text must be nonempty")
    template = load_template("judge")
    request = CompletionRequest(
        system_text=template.system_text,
        user_text=render(template.user_text, {"narrative_text": text}),
        temperature=JUDGE_TEMPERATURE,
        model_id=provider.judge_model,
        max_output_tokens=JUDGE_MAX_TOKENS,
    )
    doc = complete_structured(
        provider,
        request,
        required_keys=(*JUDGE_SCORE_KEYS, "narrative_comments"),
        integer_ranges={key: (1, 10) for key in JUDGE_SCORE_KEYS},
    )
    return JudgeReport.from_document(doc)


def tokenize(text: str) -> list[str]:
    """Lowercase, split on whitespace, strip edge punctuation, drop empties."""
    tokens = []
    for raw in text.lower().split():
        token = raw.strip(string.punctuation)
        if token:
            tokens.append(token)
    return tokens


def distinct_n(text: str, n: int) -> float:
    """Unique n-grams over total n-grams; degenerate short text counts as 1.0."""
    if n < 1:
        raise InvalidInputError("n must be >= 1")
    tokens = tokenize(text)
    total = len(tokens) - n + 1
    if total <= 0:
        return 1.0
    grams = {tuple(tokens[i : i + n]) for i in range(total)}
    return len(grams) / total


@dataclass(frozen=True)
class DiversityReport:
    distinct: dict[int, float]
    token_count: int


def diversity_report(text: str, orders: tuple[int, ...] = (1, 2, 3, 4)) -> DiversityReport:
    return DiversityReport(
        distinct={n: distinct_n(text, n) for n in orders},
        token_count=len(tokenize(text)),
    )


@dataclass(frozen=True)
class DimensionAggregate:
    means: dict[str, float]
    stddevs: dict[str, float]
    count: int


def aggregate_reports(reports: list[JudgeReport]) -> DimensionAggregate:
    """Arithmetic mean and sample standard deviation per dimension."""
    if not reports:
        raise InvalidInputError("at least one report is required")
    means = {}
    stddevs = {}
    for key in JUDGE_SCORE_KEYS:
        values = [getattr(r, key) for r in reports]
        means[key] = statistics.fmean(values)
        stddevs[key] = statistics.stdev(values) if len(values) > 1 else 0.0
    return DimensionAggregate(means=means, stddevs=stddevs, count=len(reports))
