import json
import random

import pytest

from storysearch.errors import InvalidInputError, SchemaError
from storysearch.evaluation import (
    JUDGE_SCORE_KEYS,
    JudgeReport,
    aggregate_reports,
    distinct_n,
    diversity_report,
    judge_narrative,
    tokenize,
)
from storysearch.llm import MockProvider, ScriptedProvider

EXAMPLE_SCORES = (8, 7, 9, 8, 9, 7, 8)


def judge_doc(scores=EXAMPLE_SCORES, comments="A summary of your key observations"):
    return json.dumps(
        {
            "judgement": dict(zip(JUDGE_SCORE_KEYS, scores)),
            "narrative_comments": comments,
        }
    )


def report_with(value: int) -> JudgeReport:
    return JudgeReport(**dict(zip(JUDGE_SCORE_KEYS, [value] * 7)), narrative_comments="c")


class TestJudgeNarrative:
    def test_example_document_scores(self):
        provider = ScriptedProvider([judge_doc()])
        report = judge_narrative("A tale of two events.", provider)
        assert tuple(report.scores().values()) == EXAMPLE_SCORES
        assert report.narrative_comments == "A summary of your key observations"

    def test_out_of_range_rejected_after_one_reask(self):
        bad = judge_doc(scores=(11, 7, 9, 8, 9, 7, 8))
        provider = ScriptedProvider([bad, bad])
        with pytest.raises(SchemaError, match="overall_quality"):
            judge_narrative("A tale.", provider)
        assert len(provider.transcript) == 2

    def test_missing_key_rejected_after_one_reask(self):
        broken = json.loads(judge_doc())
        del broken["judgement"]["relatedness"]
        text = json.dumps(broken)
        provider = ScriptedProvider([text, text])
        with pytest.raises(SchemaError, match="relatedness"):
            judge_narrative("A tale.", provider)
        assert len(provider.transcript) == 2

    def test_empty_narrative_rejected_before_any_call(self):
        provider = ScriptedProvider([])
        with pytest.raises(InvalidInputError):
            judge_narrative("   ", provider)
        assert provider.transcript == []

    def test_uses_judge_model(self):
        provider = ScriptedProvider([judge_doc()])
        judge_narrative("A tale.", provider)
        assert provider.transcript[0].model_id == "scripted-judge"

    def test_mock_provider_returns_valid_report(self):
        report = judge_narrative("Some long narrative text here.", MockProvider(seed=9))
        for value in report.scores().values():
            assert 1 <= value <= 10

    def test_document_round_trip_keys(self):
        report = report_with(5)
        doc = report.to_document()
        assert set(doc) == {"judgement", "narrative_comments"}
        assert tuple(doc["judgement"]) == JUDGE_SCORE_KEYS
        assert JudgeReport.from_document(doc) == report


def brute_force_distinct(text: str, n: int) -> float:
    tokens = tokenize(text)
    grams = [tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1)]
    if not grams:
        return 1.0
    return len(set(grams)) / len(grams)


class TestDistinctN:
    def test_single_token(self):
        assert distinct_n("Hello", 1) == 1.0

    def test_abab(self):
        assert distinct_n("a b a b", 1) == 0.5
        assert distinct_n("a b a b", 2) == pytest.approx(2 / 3)

    def test_degenerate_short_text(self):
        assert distinct_n("one two", 3) == 1.0
        assert distinct_n("", 1) == 1.0

    def test_tokenizer_strips_punctuation_and_lowercases(self):
        assert tokenize("Hello, WORLD! (again)") == ["hello", "world", "again"]

    def test_matches_brute_force_on_random_texts(self):
        rng = random.Random(6)
        vocabulary = [f"w{i}" for i in range(30)] + ["the", "a", "fox.", "Ran,"]
        for _ in range(100):
            text = " ".join(rng.choice(vocabulary) for _ in range(rng.randint(0, 200)))
            for n in (1, 2, 3, 4):
                assert distinct_n(text, n) == brute_force_distinct(text, n)

    def test_duplication_never_increases_distinct_one(self):
        rng = random.Random(12)
        base = " ".join(rng.choice("abcdefg") for _ in range(40))
        value = distinct_n(base, 1)
        for k in (2, 3, 5):
            assert distinct_n(" ".join([base] * k), 1) <= value

    def test_invalid_n(self):
        with pytest.raises(InvalidInputError):
            distinct_n("text", 0)

    def test_report_shape(self):
        report = diversity_report("the quick brown fox jumps over the lazy dog")
        assert set(report.distinct) == {1, 2, 3, 4}
        assert report.token_count == 9
        for value in report.distinct.values():
            assert 0.0 <= value <= 1.0


class TestAggregateReports:
    def test_single_report_identity(self):
        report = report_with(6)
        aggregate = aggregate_reports([report])
        assert all(v == 6.0 for v in aggregate.means.values())
        assert all(v == 0.0 for v in aggregate.stddevs.values())

    def test_two_reports_mean(self):
        aggregate = aggregate_reports([report_with(5), report_with(7)])
        assert all(v == pytest.approx(6.0) for v in aggregate.means.values())

    def test_matches_brute_force_on_random_reports(self):
        rng = random.Random(8)
        reports = [
            JudgeReport(
                **{k: rng.randint(1, 10) for k in JUDGE_SCORE_KEYS}, narrative_comments="c"
            )
            for _ in range(20)
        ]
        aggregate = aggregate_reports(reports)
        for key in JUDGE_SCORE_KEYS:
            values = [getattr(r, key) for r in reports]
            mean = sum(values) / len(values)
            variance = sum((v - mean) ** 2 for v in values) / (len(values) - 1)
            assert aggregate.means[key] == pytest.approx(mean)
            assert aggregate.stddevs[key] == pytest.approx(variance**0.5)

    def test_permutation_invariant(self):
        rng = random.Random(15)
        reports = [
            JudgeReport(
                **{k: rng.randint(1, 10) for k in JUDGE_SCORE_KEYS}, narrative_comments="c"
            )
            for _ in range(9)
        ]
        shuffled = reports[:]
        rng.shuffle(shuffled)
        assert aggregate_reports(reports) == aggregate_reports(shuffled)

    def test_empty_list_rejected(self):
        with pytest.raises(InvalidInputError):
            aggregate_reports([])
