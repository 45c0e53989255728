from __future__ import annotations

import csv
import json

import pytest

from slidefeedback.analysis import cli
from slidefeedback.analysis.logs import (
    action_comparison,
    action_counts,
    latency_summary,
    load_events,
    load_scores,
    word_ratio,
)
from slidefeedback.analysis.stats import mann_whitney
from slidefeedback.errors import DegenerateDataError, ValidationError
from slidefeedback.events import Action, EventLog
from slidefeedback.models import QuestionKind

from .conftest import FIXTURES

WORD_RATIO_DIR = FIXTURES / "word_ratio"


def build_event_log() -> EventLog:
    log = EventLog()
    plan = [
        ("l1", "ai", "mcq-01", QuestionKind.MCQ, Action.SUBMIT, 1, 3.0, True),
        ("l1", "ai", "mcq-01", QuestionKind.MCQ, Action.RESUBMIT, 2, 4.0, True),
        ("l1", "ai", "oeq-01", QuestionKind.OEQ, Action.SUBMIT, 1, 120.0, False),
        ("l2", "baseline", "mcq-01", QuestionKind.MCQ, Action.SUBMIT, 1, 2.0, True),
        ("l2", "baseline", "oeq-01", QuestionKind.OEQ, Action.SUBMIT, 1, 95.0, False),
        ("l2", "baseline", "oeq-01", QuestionKind.OEQ, Action.RESUBMIT, 2, 88.0, False),
        ("l3", "ai", "mcq-02", QuestionKind.MCQ, Action.SUBMIT, 1, 5.0, True),
        ("l4", "baseline", "mcq-02", QuestionKind.MCQ, Action.SUBMIT, 1, 6.0, True),
    ]
    for learner, condition, qid, kind, action, attempt, latency, hit in plan:
        log.record(
            learner_id=learner, condition=condition, question_id=qid,
            question_kind=kind, action=action, attempt_number=attempt,
            latency_ms=latency, cache_hit=hit,
        )
    log.record(
        learner_id="l1", condition="ai", question_id="mcq-01",
        question_kind=QuestionKind.MCQ, action=Action.NARRATION_START, attempt_number=2,
    )
    return log


@pytest.fixture
def events_file(tmp_path):
    log = build_event_log()
    path = tmp_path / "events.jsonl"
    path.write_text("".join(line + "\n" for line in log.export_jsonl()))
    return path


@pytest.fixture
def scores_file(tmp_path):
    path = tmp_path / "scores.csv"
    rows = [
        ("l1", "ai", 6, 14, 18),
        ("l2", "ai", 8, 12, 18),
        ("l3", "ai", 5, 11, 18),
        ("l4", "ai", 9, 15, 18),
        ("l5", "baseline", 7, 12, 18),
        ("l6", "baseline", 6, 10, 18),
        ("l7", "baseline", 10, 13, 18),
        ("l8", "baseline", 4, 9, 18),
    ]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["learner_id", "condition", "pre_raw", "post_raw", "max_points"])
        writer.writerows(rows)
    return path


class TestActionCounts:
    def test_counts_split_by_kind(self):
        counts = {c.learner_id: c for c in action_counts(build_event_log().snapshot())}
        assert counts["l1"].overall == 3
        assert counts["l1"].mcq == 2
        assert counts["l1"].oeq == 1
        # narration events are not active-learning actions
        assert counts["l1"].overall == counts["l1"].mcq + counts["l1"].oeq

    def test_empty_log(self):
        assert action_counts([]) == []

    def test_comparison_rows_match_direct_mann_whitney(self):
        events = build_event_log().snapshot()
        rows = action_comparison(events)
        counts = action_counts(events)
        for row in rows:
            ai = [float(getattr(c, row.label)) for c in counts if c.condition == "ai"]
            base = [float(getattr(c, row.label)) for c in counts if c.condition == "baseline"]
            direct = mann_whitney(ai, base)
            assert row.test.U == direct.U
            assert row.test.p == direct.p

    def test_single_condition_degenerate(self):
        events = [e for e in build_event_log().snapshot() if e.condition == "ai"]
        with pytest.raises(DegenerateDataError):
            action_comparison(events)


class TestLatencySummary:
    def test_even_count_median_midpoint(self):
        log = EventLog()
        for latency in [1.0, 2.0, 3.0, 4.0]:
            log.record("l", "ai", "q", QuestionKind.MCQ, Action.SUBMIT,
                       attempt_number=1, latency_ms=latency, cache_hit=True)
        summary = latency_summary(log.snapshot())["MCQ"]
        assert summary.median == 2.5
        assert summary.mean == 2.5
        assert abs(summary.sd - 1.2909944487358056) < 1e-12

    def test_single_event_flagged(self):
        log = EventLog()
        log.record("l", "ai", "q", QuestionKind.OEQ, Action.SUBMIT,
                   attempt_number=1, latency_ms=42.0, cache_hit=False)
        summary = latency_summary(log.snapshot())["OEQ"]
        assert summary.median == 42.0 and summary.mean == 42.0
        assert summary.sd == 0.0
        assert summary.n == 1

    def test_split_per_kind(self):
        summaries = latency_summary(build_event_log().snapshot())
        assert set(summaries) == {"MCQ", "OEQ"}
        assert summaries["MCQ"].n == 5
        assert summaries["OEQ"].n == 3


class TestWordRatio:
    def test_fixture_reproduces_paper_ratio(self):
        ratio = word_ratio([WORD_RATIO_DIR / "corpus.txt"], WORD_RATIO_DIR / "prompt.txt")
        assert abs(ratio - 2.767) <= 0.001

    def test_identical_files_ratio_one(self):
        path = WORD_RATIO_DIR / "prompt.txt"
        assert word_ratio([path], path) == 1.0

    def test_empty_prompt_is_error(self, tmp_path):
        empty = tmp_path / "empty.txt"
        empty.write_text("   \n")
        with pytest.raises(DegenerateDataError):
            word_ratio([WORD_RATIO_DIR / "corpus.txt"], empty)


class TestScoresLoading:
    def test_loads_and_standardizes(self, scores_file):
        records = load_scores(scores_file)
        assert len(records) == 8
        assert records[0].pre_pct == pytest.approx(100 * 6 / 18)

    def test_header_enforced(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text("a,b\n1,2\n")
        with pytest.raises(ValidationError):
            load_scores(bad)

    def test_range_enforced(self, tmp_path):
        bad = tmp_path / "bad.csv"
        bad.write_text(
            "learner_id,condition,pre_raw,post_raw,max_points\nl1,ai,19,5,18\n"
        )
        with pytest.raises(ValidationError):
            load_scores(bad)


class TestCliVerbs:
    def test_word_ratio_text_output(self, capsys):
        code = cli.main([
            "word-ratio", "--corpus", str(WORD_RATIO_DIR / "corpus.txt"),
            "--prompt", str(WORD_RATIO_DIR / "prompt.txt"),
        ])
        out = capsys.readouterr().out
        assert code == 0
        assert "word_ratio: 2.767" in out
        assert "corpus_words=985" in out
        assert "prompt_words=356" in out

    def test_word_ratio_empty_prompt_exits_nonzero(self, tmp_path, capsys):
        empty = tmp_path / "empty.txt"
        empty.write_text("")
        code = cli.main([
            "word-ratio", "--corpus", str(WORD_RATIO_DIR / "corpus.txt"),
            "--prompt", str(empty),
        ])
        assert code == 2
        assert "no words" in capsys.readouterr().err

    def test_actions_json_matches_module(self, events_file, capsys):
        code = cli.main(["actions", "--events", str(events_file), "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        rows = action_comparison(load_events(events_file))
        assert [r["label"] for r in payload["rows"]] == ["overall", "mcq", "oeq"]
        for row_json, row in zip(payload["rows"], rows):
            assert row_json["U"] == row.test.U
            assert row_json["p"] == row.test.p

    def test_latency_json_matches_module(self, events_file, capsys):
        code = cli.main(["latency", "--events", str(events_file), "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        module = latency_summary(load_events(events_file))
        assert payload["MCQ"]["median"] == module["MCQ"].median
        assert payload["OEQ"]["n"] == module["OEQ"].n

    def test_gains_text_output(self, scores_file, capsys):
        code = cli.main(["gains", "--scores", str(scores_file)])
        out = capsys.readouterr().out
        assert code == 0
        assert "ANCOVA" in out
        assert "ai" in out and "baseline" in out

    def test_kappa_verb(self, tmp_path, capsys):
        ratings = tmp_path / "ratings.csv"
        ratings.write_text("rater_a,rater_b\n1,1\n1,0\n0,0\n0,0\n")
        code = cli.main(["kappa", "--ratings", str(ratings), "--json"])
        assert code == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["kappa"] == 0.5

    def test_report_renders_all_sections(self, events_file, scores_file, tmp_path, capsys):
        json_out = tmp_path / "report.json"
        code = cli.main([
            "report", "--events", str(events_file), "--scores", str(scores_file),
            "--corpus", str(WORD_RATIO_DIR / "corpus.txt"),
            "--prompt", str(WORD_RATIO_DIR / "prompt.txt"),
            "--json-out", str(json_out),
        ])
        out = capsys.readouterr().out
        assert code == 0
        for section in ("Learning gains", "Active-learning actions", "Feedback latency",
                        "word_ratio"):
            assert section in out
        payload = json.loads(json_out.read_text())
        assert set(payload) == {"gains", "actions", "latency", "word_ratio"}

    def test_report_without_inputs_fails(self, capsys):
        assert cli.main(["report"]) == 2

    def test_gains_degenerate_exits_nonzero(self, tmp_path, capsys):
        path = tmp_path / "scores.csv"
        path.write_text(
            "learner_id,condition,pre_raw,post_raw,max_points\n"
            "l1,ai,5,5,18\nl2,ai,5,5,18\n"
        )
        assert cli.main(["gains", "--scores", str(path)]) == 0  # identical -> t=0,p=1
        path.write_text(
            "learner_id,condition,pre_raw,post_raw,max_points\n"
            "l1,ai,5,7,18\nl2,ai,5,7,18\n"
        )
        assert cli.main(["gains", "--scores", str(path)]) == 2
