"""Learner-action event log with filterable JSONL export."""

from __future__ import annotations

import json
import threading
import uuid
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Callable, Iterator

from .models import QuestionKind


class Action(str, Enum):
    SUBMIT = "SUBMIT"
    RESUBMIT = "RESUBMIT"
    NARRATION_START = "NARRATION_START"
    NARRATION_CANCEL = "NARRATION_CANCEL"


FEEDBACK_ACTIONS = (Action.SUBMIT, Action.RESUBMIT)


@dataclass(frozen=True)
class EventRecord:
    event_id: str
    learner_id: str
    condition: str
    question_id: str
    question_kind: QuestionKind
    action: Action
    occurred_at: str  # ISO-8601 UTC
    attempt_number: int | None = None
    latency_ms: float | None = None  # feedback events only
    cache_hit: bool | None = None  # feedback events only

    def to_json(self) -> dict:
        data = {
            "event_id": self.event_id,
            "learner_id": self.learner_id,
            "condition": self.condition,
            "question_id": self.question_id,
            "question_kind": self.question_kind.value,
            "action": self.action.value,
            "occurred_at": self.occurred_at,
        }
        if self.attempt_number is not None:
            data["attempt_number"] = self.attempt_number
        if self.action in FEEDBACK_ACTIONS:
            data["latency_ms"] = self.latency_ms
            data["cache_hit"] = self.cache_hit
        return data

    @classmethod
    def from_json(cls, data: dict) -> "EventRecord":
        return cls(
            event_id=data["event_id"],
            learner_id=data["learner_id"],
            condition=data["condition"],
            question_id=data["question_id"],
            question_kind=QuestionKind(data["question_kind"]),
            action=Action(data["action"]),
            occurred_at=data["occurred_at"],
            attempt_number=data.get("attempt_number"),
            latency_ms=data.get("latency_ms"),
            cache_hit=data.get("cache_hit"),
        )


def _default_wall() -> datetime:
    return datetime.now(timezone.utc)


class EventLog:
    """Thread-safe append-only log; occurred_at is globally non-decreasing."""

    def __init__(self, wall: Callable[[], datetime] = _default_wall):
        self._wall = wall
        self._lock = threading.Lock()
        self._events: list[EventRecord] = []
        self._last_ts: datetime | None = None

    def record(
        self,
        learner_id: str,
        condition: str,
        question_id: str,
        question_kind: QuestionKind,
        action: Action,
        attempt_number: int | None = None,
        latency_ms: float | None = None,
        cache_hit: bool | None = None,
    ) -> EventRecord:
        if action in FEEDBACK_ACTIONS:
            if latency_ms is None or cache_hit is None:
                raise ValueError("feedback events must carry latency_ms and cache_hit")
        else:
            latency_ms = None
            cache_hit = None
        with self._lock:
            now = self._wall()
            if self._last_ts is not None and now < self._last_ts:
                now = self._last_ts
            self._last_ts = now
            event = EventRecord(
                event_id=uuid.uuid4().hex,
                learner_id=learner_id,
                condition=condition,
                question_id=question_id,
                question_kind=question_kind,
                action=action,
                occurred_at=now.isoformat(timespec="milliseconds"),
                attempt_number=attempt_number,
                latency_ms=latency_ms,
                cache_hit=cache_hit,
            )
            self._events.append(event)
            return event

    def snapshot(self) -> list[EventRecord]:
        with self._lock:
            return list(self._events)

    def export_jsonl(
        self,
        learner_id: str | None = None,
        condition: str | None = None,
        since: str | None = None,
        until: str | None = None,
        question_kind: QuestionKind | None = None,
    ) -> Iterator[str]:
        """One EventRecord per line, stable field order, optionally filtered."""
        for event in self.snapshot():
            if learner_id is not None and event.learner_id != learner_id:
                continue
            if condition is not None and event.condition != condition:
                continue
            if since is not None and event.occurred_at < since:
                continue
            if until is not None and event.occurred_at > until:
                continue
            if question_kind is not None and event.question_kind is not question_kind:
                continue
            yield json.dumps(event.to_json())
