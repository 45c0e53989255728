"""Event-log analytics: action counts, latency summaries, scores, word ratio."""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

from ..errors import DegenerateDataError, ValidationError
from ..events import FEEDBACK_ACTIONS, Action, EventRecord
from ..models import QuestionKind
from .stats import MannWhitneyResult, mann_whitney

SCORES_HEADER = ["learner_id", "condition", "pre_raw", "post_raw", "max_points"]


@dataclass(frozen=True)
class ScoreRecord:
    learner_id: str
    condition: str
    pre_raw: float
    post_raw: float
    max_points: float

    @property
    def pre_pct(self) -> float:
        return 100.0 * self.pre_raw / self.max_points

    @property
    def post_pct(self) -> float:
        return 100.0 * self.post_raw / self.max_points


@dataclass(frozen=True)
class ActionCounts:
    learner_id: str
    condition: str
    overall: int
    mcq: int
    oeq: int


@dataclass(frozen=True)
class LatencySummary:
    median: float
    mean: float
    sd: float  # sample sd (n-1); 0.0 when n == 1
    n: int


@dataclass(frozen=True)
class ActionComparisonRow:
    label: str  # "overall" | "mcq" | "oeq"
    mean_sd_by_condition: dict[str, tuple[float, float]]
    test: MannWhitneyResult


def load_events(path: str | Path) -> list[EventRecord]:
    events = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            events.append(EventRecord.from_json(json.loads(line)))
    return events


def load_scores(path: str | Path) -> list[ScoreRecord]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames != SCORES_HEADER:
            raise ValidationError(
                f"scores CSV must have header {','.join(SCORES_HEADER)}"
            )
        records = []
        for row in reader:
            record = ScoreRecord(
                learner_id=row["learner_id"],
                condition=row["condition"],
                pre_raw=float(row["pre_raw"]),
                post_raw=float(row["post_raw"]),
                max_points=float(row["max_points"]),
            )
            if record.max_points <= 0:
                raise ValidationError(f"{record.learner_id}: max_points must be positive")
            if not (0 <= record.pre_raw <= record.max_points
                    and 0 <= record.post_raw <= record.max_points):
                raise ValidationError(f"{record.learner_id}: raw score out of range")
            records.append(record)
    return records


def load_ratings(path: str | Path) -> tuple[list[str], list[str]]:
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle)
        if reader.fieldnames is None or not {"rater_a", "rater_b"} <= set(reader.fieldnames):
            raise ValidationError("ratings CSV must have columns rater_a,rater_b")
        r1, r2 = [], []
        for row in reader:
            r1.append(row["rater_a"])
            r2.append(row["rater_b"])
    return r1, r2


def action_counts(events: Iterable[EventRecord]) -> list[ActionCounts]:
    """Submit/resubmit counts per learner, overall and split by question kind."""
    per_learner: dict[str, dict] = {}
    for event in events:
        if event.action not in FEEDBACK_ACTIONS:
            continue
        slot = per_learner.setdefault(
            event.learner_id,
            {"condition": event.condition, "overall": 0, "mcq": 0, "oeq": 0},
        )
        slot["overall"] += 1
        if event.question_kind is QuestionKind.MCQ:
            slot["mcq"] += 1
        else:
            slot["oeq"] += 1
    return [
        ActionCounts(learner_id=lid, condition=slot["condition"],
                     overall=slot["overall"], mcq=slot["mcq"], oeq=slot["oeq"])
        for lid, slot in sorted(per_learner.items())
    ]


def _mean_sd(values: Sequence[float]) -> tuple[float, float]:
    n = len(values)
    mean = math.fsum(values) / n
    if n < 2:
        return mean, 0.0
    var = math.fsum((v - mean) ** 2 for v in values) / (n - 1)
    return mean, math.sqrt(var)


def action_comparison(events: Iterable[EventRecord]) -> list[ActionComparisonRow]:
    """Per-row Mann-Whitney comparison of action counts between two conditions."""
    counts = action_counts(events)
    conditions = sorted({c.condition for c in counts})
    if len(conditions) != 2:
        raise DegenerateDataError(
            f"action comparison needs exactly 2 conditions, got {len(conditions)}"
        )
    rows = []
    for label in ("overall", "mcq", "oeq"):
        by_condition = {
            cond: [float(getattr(c, label)) for c in counts if c.condition == cond]
            for cond in conditions
        }
        test = mann_whitney(by_condition[conditions[0]], by_condition[conditions[1]])
        rows.append(
            ActionComparisonRow(
                label=label,
                mean_sd_by_condition={
                    cond: _mean_sd(values) for cond, values in by_condition.items()
                },
                test=test,
            )
        )
    return rows


def _median(values: Sequence[float]) -> float:
    ordered = sorted(values)
    n = len(ordered)
    mid = n // 2
    if n % 2 == 1:
        return ordered[mid]
    return (ordered[mid - 1] + ordered[mid]) / 2.0


def latency_summary(events: Iterable[EventRecord]) -> dict[str, LatencySummary]:
    """Median/mean/sample-sd of feedback latency per question kind."""
    buckets: dict[str, list[float]] = {}
    for event in events:
        if event.action in FEEDBACK_ACTIONS and event.latency_ms is not None:
            buckets.setdefault(event.question_kind.value, []).append(event.latency_ms)
    summaries = {}
    for kind, values in sorted(buckets.items()):
        mean, sd = _mean_sd(values)
        summaries[kind] = LatencySummary(
            median=_median(values), mean=mean, sd=sd, n=len(values)
        )
    return summaries


def word_count(path: str | Path) -> int:
    """Maximal whitespace-delimited tokens."""
    return len(Path(path).read_text(encoding="utf-8").split())


def word_ratio(corpus_files: Sequence[str | Path], prompt_file: str | Path) -> float:
    """Total corpus words divided by prompt words."""
    prompt_words = word_count(prompt_file)
    if prompt_words == 0:
        raise DegenerateDataError("prompt file contains no words")
    corpus_words = sum(word_count(f) for f in corpus_files)
    return corpus_words / prompt_words
