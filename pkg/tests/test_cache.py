from __future__ import annotations

import threading
from concurrent.futures import ThreadPoolExecutor

import pytest

from slidefeedback.cache import PregenCache, answer_digest, normalize_answer
from slidefeedback.errors import GenerationFailed, SchemaError
from slidefeedback.feedback import Band, StructuredFeedback
from slidefeedback.models import Question, QuestionKind


def mcq(option_count: int = 4, question_id: str = "q-mcq") -> Question:
    return Question(
        question_id=question_id,
        kind=QuestionKind.MCQ,
        stem_text="Pick one.",
        options=[(f"opt-{i}", f"Option {i}") for i in range(option_count)],
        correct_option_id="opt-0",
    ).validate()


def oeq(question_id: str = "q-oeq") -> Question:
    return Question(
        question_id=question_id,
        kind=QuestionKind.OEQ,
        stem_text="Explain.",
        rubric_keywords=["heart"],
    ).validate()


def valid_feedback(kind: QuestionKind, score: int = 1) -> StructuredFeedback:
    from slidefeedback.feedback import band_score

    return StructuredFeedback(
        score=score,
        band=band_score(kind, score),
        statement="Statement.",
        explanation="Explanation.",
        advice="Advice.",
    )


class CountingGenerator:
    def __init__(self, delay_s: float = 0.0, fail_times: int = 0):
        self.calls = 0
        self.delay_s = delay_s
        self.fail_times = fail_times
        self._lock = threading.Lock()

    def __call__(self, question: Question, answer: str) -> StructuredFeedback:
        import time

        if self.delay_s:
            time.sleep(self.delay_s)
        with self._lock:
            self.calls += 1
            if self.fail_times > 0:
                self.fail_times -= 1
                raise GenerationFailed("injected", attempts=3)
        return valid_feedback(question.kind, 1)


class TestNormalization:
    def test_trim_collapse_casefold(self):
        assert normalize_answer("  The   Heart \n") == "the heart"

    def test_digest_equivalence(self):
        assert answer_digest("The Heart") == answer_digest(" the   heart ")
        assert answer_digest("heart") != answer_digest("liver")


class TestPregenerate:
    def test_one_entry_per_option(self):
        cache = PregenCache(CountingGenerator())
        assert cache.pregenerate(mcq(4)) == 4
        assert len(cache) == 4

    def test_idempotent_rerun(self):
        cache = PregenCache(CountingGenerator())
        cache.pregenerate(mcq(4))
        assert cache.pregenerate(mcq(4)) == 4
        assert len(cache) == 4

    def test_fixture_of_8_mcqs_26_options(self):
        from .conftest import load_question_fixture

        cache = PregenCache(CountingGenerator())
        total_options = 0
        for i, question_def in enumerate(load_question_fixture()["mcqs"]):
            question = Question.from_json(question_def).validate()
            total_options += len(question.options)
            cache.pregenerate(question)
        assert total_options == 26
        assert len(cache) == 26

    def test_failed_option_left_uncached(self):
        generator = CountingGenerator(fail_times=1)
        cache = PregenCache(generator)
        assert cache.pregenerate(mcq(4)) == 3
        assert len(cache) == 3

    def test_rejects_oeq(self):
        with pytest.raises(ValueError):
            PregenCache(CountingGenerator()).pregenerate(oeq())


class TestGetOrGenerate:
    def test_pregenerated_option_is_hit_without_generation(self):
        generator = CountingGenerator()
        cache = PregenCache(generator)
        cache.pregenerate(mcq(3))
        before = generator.calls
        feedback, hit = cache.get_or_generate(mcq(3), "opt-1")
        assert hit is True
        assert generator.calls == before
        assert feedback.band is Band.CORRECT

    def test_every_option_hits_after_pregenerate(self):
        cache = PregenCache(CountingGenerator())
        question = mcq(5)
        cache.pregenerate(question)
        assert all(
            cache.get_or_generate(question, oid)[1] for oid, _ in question.options
        )

    def test_oeq_normalized_resubmission_hits(self):
        generator = CountingGenerator()
        cache = PregenCache(generator)
        _, first_hit = cache.get_or_generate(oeq(), "The Heart")
        _, second_hit = cache.get_or_generate(oeq(), " the   heart ")
        assert (first_hit, second_hit) == (False, True)
        assert generator.calls == 1

    def test_generation_failure_propagates_and_caches_nothing(self):
        generator = CountingGenerator(fail_times=1)
        cache = PregenCache(generator)
        with pytest.raises(GenerationFailed):
            cache.get_or_generate(oeq(), "anything")
        assert len(cache) == 0
        # next call retries fresh
        _, hit = cache.get_or_generate(oeq(), "anything")
        assert hit is False

    def test_invalid_feedback_rejected_at_insert(self):
        def bad_generator(question, answer):
            return StructuredFeedback(
                score=1, band=Band.PARTIAL, statement="", explanation="x", advice="y"
            )

        cache = PregenCache(bad_generator)
        with pytest.raises(SchemaError):
            cache.get_or_generate(oeq(), "whatever")
        assert len(cache) == 0


class TestSingleFlight:
    def test_concurrent_identical_keys_generate_once(self):
        generator = CountingGenerator(delay_s=0.05)
        cache = PregenCache(generator)
        question = oeq()
        with ThreadPoolExecutor(max_workers=16) as pool:
            results = list(pool.map(
                lambda _: cache.get_or_generate(question, "the heart"), range(16)
            ))
        assert generator.calls == 1
        values = {id(feedback) for feedback, _ in results}
        assert len(values) == 1  # all callers receive the same value

    def test_concurrent_distinct_keys_generate_each(self):
        generator = CountingGenerator(delay_s=0.01)
        cache = PregenCache(generator)
        question = oeq()
        with ThreadPoolExecutor(max_workers=16) as pool:
            list(pool.map(
                lambda i: cache.get_or_generate(question, f"answer {i}"), range(16)
            ))
        assert generator.calls == 16

    def test_failure_wakes_all_waiters(self):
        generator = CountingGenerator(delay_s=0.05, fail_times=1)
        cache = PregenCache(generator)
        question = oeq()
        errors = []

        def submit(_):
            try:
                cache.get_or_generate(question, "same answer")
            except GenerationFailed:
                errors.append(1)

        with ThreadPoolExecutor(max_workers=8) as pool:
            list(pool.map(submit, range(8)))
        assert len(errors) == 8
        assert generator.calls == 1


class TestSnapshot:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "cache.jsonl"
        cache = PregenCache(CountingGenerator(), snapshot_path=path)
        cache.pregenerate(mcq(3))
        cache.get_or_generate(oeq(), "the heart")
        fresh = PregenCache(CountingGenerator(), snapshot_path=path)
        assert fresh.load_snapshot() == 4
        feedback, hit = fresh.get_or_generate(mcq(3), "opt-2")
        assert hit is True
