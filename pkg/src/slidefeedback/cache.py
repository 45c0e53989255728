"""Pre-generated and on-demand feedback cache with single-flight dedup.

MCQ feedback is generated per option at upload time so a submission is a pure
lookup. OEQ answers are cached by normalized digest; concurrent identical
cold keys share exactly one generation.
"""

from __future__ import annotations

import hashlib
import json
import logging
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable

from .feedback import StructuredFeedback
from .models import Question, QuestionKind

logger = logging.getLogger(__name__)

_WHITESPACE_RE = re.compile(r"\s+")


def normalize_answer(text: str) -> str:
    """Trim, collapse internal whitespace, casefold."""
    return _WHITESPACE_RE.sub(" ", text.strip()).casefold()


def answer_digest(text: str) -> str:
    return hashlib.sha256(normalize_answer(text).encode("utf-8")).hexdigest()


@dataclass(frozen=True)
class CacheKey:
    question_id: str
    variant: str  # option_id for MCQ, normalized answer digest for OEQ


class CacheSource(str, Enum):
    PREGEN = "PREGEN"
    ON_DEMAND = "ON_DEMAND"


@dataclass
class CacheEntry:
    key: CacheKey
    kind: QuestionKind
    feedback: StructuredFeedback
    created_at: float
    source: CacheSource


@dataclass
class _Flight:
    event: threading.Event = field(default_factory=threading.Event)
    result: StructuredFeedback | None = None
    error: Exception | None = None


class PregenCache:
    """Unbounded in-memory cache with a JSONL persistence snapshot."""

    def __init__(
        self,
        generator: Callable[[Question, str], StructuredFeedback],
        snapshot_path: str | Path | None = None,
        now: Callable[[], float] = time.time,
    ):
        self._generator = generator
        self._now = now
        self.snapshot_path = Path(snapshot_path) if snapshot_path else None
        self._lock = threading.Lock()
        self._entries: dict[CacheKey, CacheEntry] = {}
        self._flights: dict[CacheKey, _Flight] = {}

    def __len__(self) -> int:
        with self._lock:
            return len(self._entries)

    @staticmethod
    def key_for(question: Question, answer: str) -> CacheKey:
        if question.kind is QuestionKind.MCQ:
            return CacheKey(question.question_id, str(answer))
        return CacheKey(question.question_id, answer_digest(str(answer)))

    def peek(self, question: Question, answer: str) -> CacheEntry | None:
        with self._lock:
            return self._entries.get(self.key_for(question, answer))

    def _insert(
        self,
        key: CacheKey,
        question: Question,
        feedback: StructuredFeedback,
        source: CacheSource,
    ) -> CacheEntry:
        feedback.validate(question.kind)
        entry = CacheEntry(key, question.kind, feedback, self._now(), source)
        with self._lock:
            self._entries[key] = entry
        return entry

    def pregenerate(self, question: Question) -> int:
        """Generate one PREGEN entry per MCQ option; returns entries created.

        Idempotent: re-running overwrites existing entries. An option whose
        generation fails is left uncached and falls back to on-demand.
        """
        if question.kind is not QuestionKind.MCQ:
            raise ValueError("pregenerate is defined for MCQ questions only")
        created = 0
        for option_id, _text in question.options:
            try:
                feedback = self._generator(question, option_id)
                self._insert(CacheKey(question.question_id, option_id), question,
                             feedback, CacheSource.PREGEN)
                created += 1
            except Exception as exc:
                logger.warning(
                    "pregeneration failed for %s option %s: %s",
                    question.question_id, option_id, exc,
                )
        if self.snapshot_path:
            self.save_snapshot()
        return created

    def get_or_generate(
        self, question: Question, answer: str
    ) -> tuple[StructuredFeedback, bool]:
        """Cached feedback (hit=True, zero provider calls) or one generation.

        Concurrent callers on the same cold key coalesce onto a single
        generation and all receive the same value with hit=False.
        """
        key = self.key_for(question, answer)
        while True:
            with self._lock:
                entry = self._entries.get(key)
                if entry is not None:
                    return entry.feedback, True
                flight = self._flights.get(key)
                if flight is None:
                    flight = _Flight()
                    self._flights[key] = flight
                    leader = True
                else:
                    leader = False
            if leader:
                break
            flight.event.wait()
            if flight.error is not None:
                raise flight.error
            if flight.result is not None:
                return flight.result, False
            # leader vanished without result (shouldn't happen); retry

        try:
            feedback = self._generator(question, answer)
            self._insert(key, question, feedback, CacheSource.ON_DEMAND)
            flight.result = feedback
        except Exception as exc:
            flight.error = exc
            raise
        finally:
            with self._lock:
                self._flights.pop(key, None)
            flight.event.set()
        if self.snapshot_path:
            self.save_snapshot()
        return feedback, False

    # -- persistence snapshot --------------------------------------------------

    def save_snapshot(self) -> None:
        if self.snapshot_path is None:
            return
        with self._lock:
            entries = sorted(
                self._entries.values(), key=lambda e: (e.key.question_id, e.key.variant)
            )
            lines = [
                json.dumps(
                    {
                        "question_id": e.key.question_id,
                        "variant": e.key.variant,
                        "kind": e.kind.value,
                        "feedback": e.feedback.to_json(),
                        "created_at": e.created_at,
                        "source": e.source.value,
                    }
                )
                for e in entries
            ]
        self.snapshot_path.write_text(
            "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8"
        )

    def load_snapshot(self) -> int:
        if self.snapshot_path is None or not self.snapshot_path.exists():
            return 0
        loaded = 0
        for line in self.snapshot_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            kind = QuestionKind(record["kind"])
            feedback = StructuredFeedback.from_json(record["feedback"])
            feedback.validate(kind)
            entry = CacheEntry(
                key=CacheKey(record["question_id"], record["variant"]),
                kind=kind,
                feedback=feedback,
                created_at=float(record["created_at"]),
                source=CacheSource(record["source"]),
            )
            with self._lock:
                self._entries[entry.key] = entry
            loaded += 1
        return loaded
