"""Command-line analytics over exported event logs and score files.

Verbs: ``analyze gains | actions | latency | kappa | word-ratio | report``.
Each renders an aligned plain-text table by default or machine-readable JSON
with ``--json``. Degenerate data exits nonzero.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import asdict

from ..errors import SlideFeedbackError
from .logs import (
    action_comparison,
    latency_summary,
    load_events,
    load_ratings,
    load_scores,
    word_count,
    word_ratio,
)
from .stats import ancova, cohens_kappa, independent_t, paired_t


def _gains_result(scores_path: str) -> dict:
    records = load_scores(scores_path)
    if not records:
        raise SlideFeedbackError("scores file is empty")
    conditions = sorted({r.condition for r in records})
    result: dict = {"conditions": {}, "pre_comparison": None, "ancova": None}
    for condition in conditions:
        group = [r for r in records if r.condition == condition]
        pre = [r.pre_pct for r in group]
        post = [r.post_pct for r in group]
        test = paired_t(pre, post)
        result["conditions"][condition] = {
            "n": len(group),
            "pre_mean": sum(pre) / len(pre),
            "post_mean": sum(post) / len(post),
            "t": test.t,
            "df": test.df,
            "p": test.p,
            "d": test.d,
        }
    if len(conditions) == 2:
        first = [r.pre_pct for r in records if r.condition == conditions[0]]
        second = [r.pre_pct for r in records if r.condition == conditions[1]]
        pre_test = independent_t(first, second)
        result["pre_comparison"] = {
            "t": pre_test.t, "df": pre_test.df, "p": pre_test.p, "d": pre_test.d,
        }
        model = ancova(
            [r.post_pct for r in records],
            [r.pre_pct for r in records],
            [r.condition for r in records],
        )
        result["ancova"] = asdict(model)
    return result


def _render_gains(result: dict) -> str:
    lines = ["Learning gains (scores standardized to 0-100%)"]
    header = f"{'condition':<20}{'n':>5}{'pre':>9}{'post':>9}{'t':>10}{'df':>6}{'p':>10}{'d':>9}"
    lines.append(header)
    for condition, row in result["conditions"].items():
        lines.append(
            f"{condition:<20}{row['n']:>5}{row['pre_mean']:>9.2f}{row['post_mean']:>9.2f}"
            f"{row['t']:>10.4f}{row['df']:>6.0f}{row['p']:>10.4f}{row['d']:>9.4f}"
        )
    if result["pre_comparison"] is not None:
        p = result["pre_comparison"]
        lines.append(
            f"Pre-test comparability: t={p['t']:.4f} df={p['df']:.0f} "
            f"p={p['p']:.4f} d={p['d']:.4f}"
        )
    if result["ancova"] is not None:
        a = result["ancova"]
        lines.append(
            f"ANCOVA (post ~ pre + condition): F={a['F']:.4f} p={a['p']:.4f} "
            f"partial_eta_sq={a['partial_eta_sq']:.4f} slopes_p={a['slopes_p']:.4f}"
        )
    else:
        lines.append("Between-group tests need exactly two conditions; skipped.")
    return "\n".join(lines)


def _actions_result(events_path: str) -> dict:
    rows = action_comparison(load_events(events_path))
    return {
        "rows": [
            {
                "label": row.label,
                "groups": {
                    cond: {"mean": mean, "sd": sd}
                    for cond, (mean, sd) in row.mean_sd_by_condition.items()
                },
                "U": row.test.U,
                "p": row.test.p,
                "method": row.test.method.value,
            }
            for row in rows
        ]
    }


def _render_actions(result: dict) -> str:
    lines = ["Active-learning actions by condition (submit/resubmit counts)"]
    rows = result["rows"]
    conditions = list(rows[0]["groups"]) if rows else []
    header = f"{'question type':<16}" + "".join(f"{c + ' mean (SD)':>26}" for c in conditions)
    header += f"{'U':>10}{'p':>10}  method"
    lines.append(header)
    for row in rows:
        cells = "".join(
            f"{row['groups'][c]['mean']:>18.2f} ({row['groups'][c]['sd']:.2f})"
            for c in conditions
        )
        lines.append(
            f"{row['label']:<16}{cells}{row['U']:>10.1f}{row['p']:>10.4f}  {row['method']}"
        )
    return "\n".join(lines)


def _latency_result(events_path: str) -> dict:
    summaries = latency_summary(load_events(events_path))
    return {kind: asdict(summary) for kind, summary in summaries.items()}


def _render_latency(result: dict) -> str:
    lines = ["Feedback latency (ms) per question kind"]
    lines.append(f"{'kind':<6}{'n':>6}{'median':>12}{'mean':>12}{'sd':>12}")
    for kind, row in result.items():
        lines.append(
            f"{kind:<6}{row['n']:>6}{row['median']:>12.3f}{row['mean']:>12.3f}{row['sd']:>12.3f}"
        )
    if not result:
        lines.append("(no feedback events)")
    return "\n".join(lines)


def _kappa_result(ratings_path: str) -> dict:
    r1, r2 = load_ratings(ratings_path)
    return asdict(cohens_kappa(r1, r2))


def _render_kappa(result: dict) -> str:
    return (
        "Inter-rater agreement\n"
        f"kappa={result['kappa']:.4f} observed={result['observed_agreement']:.4f} "
        f"expected={result['expected_agreement']:.4f}"
    )


def _word_ratio_result(corpus: list[str], prompt: str) -> dict:
    return {
        "ratio": word_ratio(corpus, prompt),
        "corpus_words": sum(word_count(f) for f in corpus),
        "prompt_words": word_count(prompt),
    }


def _render_word_ratio(result: dict) -> str:
    return (
        f"word_ratio: {result['ratio']:.3f} "
        f"(corpus_words={result['corpus_words']}, prompt_words={result['prompt_words']})"
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="analyze", description="Statistics over feedback-service logs and scores"
    )
    sub = parser.add_subparsers(dest="verb", required=True)

    gains = sub.add_parser("gains", help="pre/post learning gains, t-tests, ANCOVA")
    gains.add_argument("--scores", required=True, help="scores CSV")
    gains.add_argument("--json", action="store_true")

    actions = sub.add_parser("actions", help="per-learner action counts, Mann-Whitney U")
    actions.add_argument("--events", required=True, help="events JSONL")
    actions.add_argument("--json", action="store_true")

    latency = sub.add_parser("latency", help="latency median/mean/sd per question kind")
    latency.add_argument("--events", required=True, help="events JSONL")
    latency.add_argument("--json", action="store_true")

    kappa = sub.add_parser("kappa", help="inter-rater Cohen's kappa")
    kappa.add_argument("--ratings", required=True, help="CSV with rater_a,rater_b columns")
    kappa.add_argument("--json", action="store_true")

    ratio = sub.add_parser("word-ratio", help="corpus words / prompt words")
    ratio.add_argument("--corpus", required=True, nargs="+", help="corpus text file(s)")
    ratio.add_argument("--prompt", required=True, help="prompt text file")
    ratio.add_argument("--json", action="store_true")

    report = sub.add_parser("report", help="all tables for the provided inputs")
    report.add_argument("--events", help="events JSONL")
    report.add_argument("--scores", help="scores CSV")
    report.add_argument("--ratings", help="ratings CSV")
    report.add_argument("--corpus", nargs="+", help="corpus text file(s)")
    report.add_argument("--prompt", help="prompt text file")
    report.add_argument("--json", action="store_true")
    report.add_argument("--json-out", help="also write the JSON report to this path")
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.verb == "gains":
            result = _gains_result(args.scores)
            text = _render_gains(result)
        elif args.verb == "actions":
            result = _actions_result(args.events)
            text = _render_actions(result)
        elif args.verb == "latency":
            result = _latency_result(args.events)
            text = _render_latency(result)
        elif args.verb == "kappa":
            result = _kappa_result(args.ratings)
            text = _render_kappa(result)
        elif args.verb == "word-ratio":
            result = _word_ratio_result(args.corpus, args.prompt)
            text = _render_word_ratio(result)
        else:  # report
            result = {}
            sections = []
            if args.scores:
                result["gains"] = _gains_result(args.scores)
                sections.append(_render_gains(result["gains"]))
            if args.events:
                result["actions"] = _actions_result(args.events)
                sections.append(_render_actions(result["actions"]))
                result["latency"] = _latency_result(args.events)
                sections.append(_render_latency(result["latency"]))
            if args.ratings:
                result["kappa"] = _kappa_result(args.ratings)
                sections.append(_render_kappa(result["kappa"]))
            if args.corpus and args.prompt:
                result["word_ratio"] = _word_ratio_result(args.corpus, args.prompt)
                sections.append(_render_word_ratio(result["word_ratio"]))
            if not result:
                print("report: no inputs given", file=sys.stderr)
                return 2
            text = "\n\n".join(sections)
            if args.json_out:
                with open(args.json_out, "w", encoding="utf-8") as handle:
                    json.dump(result, handle, indent=2)
    except (SlideFeedbackError, OSError) as exc:
        print(f"analyze {args.verb}: {exc}", file=sys.stderr)
        return 2
    print(json.dumps(result, indent=2) if args.json else text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
