"""The service boundary: submissions, feedback delivery, narration, events.

Wires the store, vector index, feedback engine, pre-generation cache, and
narration manager behind the operations the HTTP gateway exposes. All latency
is measured against an injected monotonic clock.
"""

from __future__ import annotations

import logging
import threading
import time
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterator

from .cache import PregenCache
from .config import ServiceConfig
from .errors import (
    EmptyIndexError,
    GenerationFailed,
    NoSlideError,
    NotFoundError,
    ValidationError,
)
from .events import Action, EventLog, EventRecord
from .feedback import FeedbackEngine, StructuredFeedback
from .ingest import ingest_deck, ingest_question
from .models import Question, QuestionKind, SlideDeck
from .narration import AudioChunk, NarrationManager, NarrationSession, build_script
from .providers import LiveProvider, MockProvider
from .store import CorpusStore
from .vindex import RankedPage

logger = logging.getLogger(__name__)

FALLBACK_MESSAGE = (
    "We could not generate feedback for this submission right now. "
    "Please review the lecture slides and try submitting again."
)
DEFAULT_BASELINE_MESSAGE = (
    "Thanks for your submission. Compare your answer against the lecture "
    "slides linked below and revise if needed."
)

RETRIEVAL_K = 3  # top-3 descriptors go to the model; rank-1 is shown


class SystemClock:
    def monotonic(self) -> float:
        return time.perf_counter()

    def wall(self) -> datetime:
        return datetime.now(timezone.utc)


@dataclass
class Submission:
    submission_id: str
    learner_id: str
    question_id: str
    attempt_number: int
    answer: str
    submitted_at: str
    feedback: StructuredFeedback | None
    rank1_descriptor: str | None


@dataclass
class FeedbackResponse:
    submission_id: str
    attempt_number: int
    feedback: StructuredFeedback | None  # None on fallback/baseline paths
    message: str | None  # set when feedback is None
    slide: tuple[str, str, str] | None  # (page_id, image_url, deck source_uri)
    narration_available: bool
    cache_hit: bool
    deck_links: list[str]
    degraded: bool = False  # True only on the GenerationFailed fallback

    def to_json(self) -> dict:
        if self.feedback is not None:
            feedback_json: dict = self.feedback.to_json()
        else:
            feedback_json = {"message": self.message, "degraded": self.degraded}
        slide_json = None
        if self.slide is not None:
            page_id, image_url, source_uri = self.slide
            slide_json = {
                "page_id": page_id,
                "image_url": image_url,
                "deck_source_uri": source_uri,
            }
        return {
            "submission_id": self.submission_id,
            "attempt_number": self.attempt_number,
            "feedback": feedback_json,
            "slide": slide_json,
            "narration_available": self.narration_available,
            "cache_hit": self.cache_hit,
            "deck_links": self.deck_links,
        }


def build_provider(config: ServiceConfig):
    if config.provider == "mock":
        return MockProvider(dims=config.mock_dims, seed=config.mock_seed)
    return LiveProvider(
        endpoint=config.live_endpoint,
        api_key_env=config.live_api_key_env,
        generation_model=config.live_generation_model,
        embedding_model=config.live_embedding_model,
        vision_model=config.live_vision_model,
        speech_model=config.live_speech_model,
        passthrough=config.passthrough,
    )


class FeedbackService:
    def __init__(self, config: ServiceConfig, provider=None, clock: SystemClock | None = None):
        self.config = config
        self.clock = clock or SystemClock()
        self.provider = provider if provider is not None else build_provider(config)
        self.store = CorpusStore(config.store_dir)
        self.index = self.store.build_index()
        self.engine = FeedbackEngine(
            provider=self.provider,
            prompt_templates=config.prompt_templates(),
            page_resolver=self._resolve_page,
            retry_budget=config.retry_budget,
            default_template_id=config.default_template_id,
            passthrough_config=config.passthrough,
        )
        self.cache = PregenCache(
            generator=self._generate_for,
            snapshot_path=Path(config.store_dir) / "cache.jsonl",
            now=lambda: self.clock.wall().timestamp(),
        )
        self.cache.load_snapshot()
        self.narration = NarrationManager(
            provider=self.provider,
            chunk_delay_s=config.narration_chunk_delay_ms / 1000.0,
            chars_per_chunk=config.narration_chars_per_chunk,
        )
        self.events = EventLog(wall=self.clock.wall)
        self.baseline_texts = config.baseline_feedback()
        self._conditions: dict[str, str] = {}
        self._attempts: dict[tuple[str, str], int] = {}
        self._submissions: dict[str, Submission] = {}
        self._lock = threading.Lock()

    # -- wiring helpers --------------------------------------------------------

    def _resolve_page(self, page_id: str) -> tuple[str, str]:
        page = self.store.get_page(page_id)
        deck = self.store.get_deck(page.deck_id)
        return page.descriptor_text, deck.source_uri

    def _retrieve(self, question: Question) -> list[RankedPage]:
        if question.embedding is None:
            raise ValidationError(f"question {question.question_id} has no embedding")
        try:
            return self.index.top_k(question.embedding, RETRIEVAL_K)
        except EmptyIndexError:
            logger.warning("retrieval degraded: index is empty")
            return []

    def _generate_for(self, question: Question, answer: str) -> StructuredFeedback:
        ranked = self._retrieve(question)
        request = self.engine.assemble_context(question, answer, ranked)
        return self.engine.generate_feedback(request, question.kind)

    # -- enrollment / ingestion -------------------------------------------------

    def enroll_learner(self, learner_id: str, condition: str) -> None:
        with self._lock:
            self._conditions[learner_id] = condition

    def condition_of(self, learner_id: str) -> str:
        with self._lock:
            return self._conditions.get(learner_id, self.config.default_condition)

    def ingest_deck_source(self, source: str | Path, deck_id: str | None = None) -> SlideDeck:
        try:
            deck = ingest_deck(self.store, self.provider, source, deck_id)
        finally:
            # partial ingests still persisted their good pages
            self.index = self.store.build_index()
        return deck

    def ingest_question_def(self, question_def: dict) -> Question:
        return ingest_question(
            self.store, self.provider, question_def, pregenerate=self.cache.pregenerate
        )

    # -- submission handling -----------------------------------------------------

    def _validate_answer(self, question: Question, answer: str) -> str:
        answer = str(answer)
        if question.kind is QuestionKind.MCQ:
            if answer not in {oid for oid, _ in question.options}:
                raise ValidationError(
                    f"answer {answer!r} is not an option of {question.question_id}"
                )
        elif not answer.strip():
            raise ValidationError("open-ended answer must be non-empty")
        return answer

    def _next_attempt(self, learner_id: str, question_id: str) -> int:
        with self._lock:
            key = (learner_id, question_id)
            self._attempts[key] = self._attempts.get(key, 0) + 1
            return self._attempts[key]

    def handle_submit(self, learner_id: str, question_id: str, answer: str) -> FeedbackResponse:
        """Grade one submission: cache lookup or generation, retrieval, logging."""
        t0 = self.clock.monotonic()
        question = self.store.get_question(question_id)
        answer = self._validate_answer(question, answer)
        condition = self.condition_of(learner_id)
        attempt = self._next_attempt(learner_id, question_id)

        feedback: StructuredFeedback | None = None
        message: str | None = None
        cache_hit = False
        degraded = False
        if condition == self.config.baseline_condition:
            message = self.baseline_texts.get(
                question_id, self.baseline_texts.get("default", DEFAULT_BASELINE_MESSAGE)
            )
            cache_hit = True
        else:
            try:
                feedback, cache_hit = self.cache.get_or_generate(question, answer)
            except GenerationFailed as exc:
                logger.error("generation failed for %s: %s", question_id, exc)
                message = FALLBACK_MESSAGE
                degraded = True

        slide = None
        rank1_descriptor = None
        if feedback is not None and feedback.best_slide is not None:
            page_id, source_uri = feedback.best_slide
            slide = (page_id, f"/api/slides/{page_id}", source_uri)
            rank1_descriptor = self.store.get_page(page_id).descriptor_text

        submission = Submission(
            submission_id=uuid.uuid4().hex,
            learner_id=learner_id,
            question_id=question_id,
            attempt_number=attempt,
            answer=answer,
            submitted_at=self.clock.wall().isoformat(timespec="milliseconds"),
            feedback=feedback,
            rank1_descriptor=rank1_descriptor,
        )
        with self._lock:
            self._submissions[submission.submission_id] = submission

        latency_ms = (self.clock.monotonic() - t0) * 1000.0
        self.events.record(
            learner_id=learner_id,
            condition=condition,
            question_id=question_id,
            question_kind=question.kind,
            action=Action.SUBMIT if attempt == 1 else Action.RESUBMIT,
            attempt_number=attempt,
            latency_ms=latency_ms,
            cache_hit=cache_hit,
        )
        deck_links = sorted({d.source_uri for d in self.store.decks.values()})
        return FeedbackResponse(
            submission_id=submission.submission_id,
            attempt_number=attempt,
            feedback=feedback,
            message=message,
            slide=slide,
            narration_available=slide is not None,
            cache_hit=cache_hit,
            deck_links=deck_links,
            degraded=degraded,
        )

    def get_submission(self, submission_id: str) -> Submission:
        with self._lock:
            submission = self._submissions.get(submission_id)
        if submission is None:
            raise NotFoundError(f"submission {submission_id!r} not found")
        return submission

    # -- narration ---------------------------------------------------------------

    def start_narration(self, submission_id: str) -> NarrationSession:
        submission = self.get_submission(submission_id)
        feedback = submission.feedback
        if feedback is None or feedback.best_slide is None or submission.rank1_descriptor is None:
            raise NoSlideError(f"submission {submission_id} has no slide reference")
        question = self.store.get_question(submission.question_id)
        answer_text = submission.answer
        if question.kind is QuestionKind.MCQ:
            answer_text = question.option_text(submission.answer)
        script = build_script(
            question_stem=question.stem_text,
            answer=answer_text,
            statement=feedback.statement,
            explanation=feedback.explanation,
            slide_descriptor=submission.rank1_descriptor,
        )
        return self.narration.start_session(submission_id, script)

    def narration_chunks(self, session: NarrationSession) -> Iterator[AudioChunk]:
        """Relay chunks as the provider yields them; logs NARRATION_START once."""
        submission = self.get_submission(session.submission_id)
        question = self.store.get_question(submission.question_id)
        started = False
        try:
            while True:
                chunk = self.narration.next_chunk(session)
                if chunk is None:
                    return
                if not started:
                    started = True
                    self.events.record(
                        learner_id=submission.learner_id,
                        condition=self.condition_of(submission.learner_id),
                        question_id=question.question_id,
                        question_kind=question.kind,
                        action=Action.NARRATION_START,
                        attempt_number=submission.attempt_number,
                    )
                yield chunk
        except GeneratorExit:
            # client went away mid-stream
            self.cancel_narration(session.session_id)
            raise

    def handle_narration_stream(self, submission_id: str) -> Iterator[AudioChunk]:
        session = self.start_narration(submission_id)
        return self.narration_chunks(session)

    def cancel_narration(self, session_id: str) -> bool:
        session = self.narration.get_session(session_id)
        if session is None:
            raise NotFoundError(f"narration session {session_id!r} not found")
        cancelled = self.narration.cancel(session)
        if cancelled:
            submission = self.get_submission(session.submission_id)
            question = self.store.get_question(submission.question_id)
            self.events.record(
                learner_id=submission.learner_id,
                condition=self.condition_of(submission.learner_id),
                question_id=question.question_id,
                question_kind=question.kind,
                action=Action.NARRATION_CANCEL,
                attempt_number=submission.attempt_number,
            )
        return cancelled

    # -- misc --------------------------------------------------------------------

    def slide_image(self, page_id: str) -> tuple[bytes, str]:
        page = self.store.get_page(page_id)
        data = self.store.get_blob(page.image_ref)
        media = "image/png" if page.image_ref.endswith(".png") else "image/jpeg"
        return data, media

    def export_events(self, **filters) -> Iterator[str]:
        return self.events.export_jsonl(**filters)

    def event_snapshot(self) -> list[EventRecord]:
        return self.events.snapshot()
