"""Structured feedback: context assembly, schema parsing, and generation.

The provider returns a JSON body ``{"score": ..., "structured_feedback":
"<statement>...</statement> <explanation>...</explanation><advice>...</advice>"}``
with optional inline ``<term explanation='...'>...</term>`` spans. This module
turns that wire shape into a validated value and back.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

from .errors import (
    ConfigurationError,
    ContractViolation,
    DomainError,
    FeedbackError,
    GenerationFailed,
    ParseError,
    ProviderError,
    SchemaError,
)
from .models import Question, QuestionKind
from .vindex import RankedPage

logger = logging.getLogger(__name__)

SEGMENTS = ("statement", "explanation", "advice")

# 3 attempts total: the paper's system prioritizes timeliness over retries.
DEFAULT_RETRY_BUDGET = 2

_TERM_RE = re.compile(
    r"<term\s+explanation\s*=\s*(?:'([^']*)'|\"([^\"]*)\")\s*>(.*?)</term>",
    re.DOTALL,
)
_TAG_RE = re.compile(r"</?[A-Za-z][^<>]*>")


class Band(str, Enum):
    INCORRECT = "INCORRECT"
    PARTIAL = "PARTIAL"
    CORRECT = "CORRECT"


_BAND_TABLE = {
    (QuestionKind.MCQ, 0): Band.INCORRECT,
    (QuestionKind.MCQ, 1): Band.CORRECT,
    (QuestionKind.OEQ, 0): Band.INCORRECT,
    (QuestionKind.OEQ, 1): Band.PARTIAL,
    (QuestionKind.OEQ, 2): Band.CORRECT,
}


def band_score(kind: QuestionKind, score: int) -> Band:
    """Map a numeric score to its correctness band for the question kind."""
    try:
        return _BAND_TABLE[(kind, score)]
    except KeyError:
        raise ContractViolation(f"score {score} out of domain for {kind.value}")


def score_domain(kind: QuestionKind) -> tuple[int, ...]:
    return (0, 1) if kind is QuestionKind.MCQ else (0, 1, 2)


@dataclass(frozen=True)
class TermSpan:
    """An inline highlighted concept with its on-demand tooltip."""

    surface_text: str
    tooltip_text: str
    segment: str = "explanation"


@dataclass
class GenerationRequest:
    """Everything the provider needs to grade one answer, fully resolved."""

    question_id: str
    kind: QuestionKind
    stem_text: str
    options: tuple[tuple[str, str], ...]
    correct_option_id: str | None
    rubric_keywords: list[str]
    learner_answer: str
    context_slides: tuple[tuple[str, str], ...]  # (page_id, descriptor), rank order
    prompt_template_id: str
    prompt_text: str
    best_slide: tuple[str, str] | None = None  # (page_id, deck source_uri)
    passthrough_config: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "question_id": self.question_id,
            "kind": self.kind.value,
            "stem_text": self.stem_text,
            "options": [[oid, text] for oid, text in self.options],
            "correct_option_id": self.correct_option_id,
            "rubric_keywords": list(self.rubric_keywords),
            "learner_answer": self.learner_answer,
            "context_slides": [[pid, desc] for pid, desc in self.context_slides],
            "prompt_template_id": self.prompt_template_id,
            "prompt_text": self.prompt_text,
            "passthrough_config": dict(sorted(self.passthrough_config.items())),
        }

    def serialized(self) -> str:
        return json.dumps(self.to_json(), ensure_ascii=False, separators=(",", ":"))


@dataclass
class StructuredFeedback:
    """Validated generation result: score, band, segments, terms, slide ref."""

    score: int
    band: Band
    statement: str
    explanation: str
    advice: str
    terms: list[TermSpan] = field(default_factory=list)
    best_slide: tuple[str, str] | None = None  # (page_id, deck source_uri)
    model_meta: dict = field(default_factory=dict)

    def segment_text(self, segment: str) -> str:
        if segment not in SEGMENTS:
            raise ContractViolation(f"unknown segment {segment!r}")
        return getattr(self, segment)

    def validate(self, kind: QuestionKind) -> "StructuredFeedback":
        if self.score not in score_domain(kind):
            raise DomainError(f"score {self.score} invalid for {kind.value}")
        if self.band is not band_score(kind, self.score):
            raise DomainError(f"band {self.band} inconsistent with score {self.score}")
        for segment in SEGMENTS:
            if not self.segment_text(segment).strip():
                raise SchemaError(f"segment <{segment}> is empty")
        for span in self.terms:
            if not span.tooltip_text:
                raise SchemaError("term tooltip is empty")
            if span.surface_text not in self.segment_text(span.segment):
                raise SchemaError(
                    f"term surface {span.surface_text!r} not found in <{span.segment}>"
                )
        return self

    def to_json(self) -> dict:
        return {
            "score": self.score,
            "band": self.band.value,
            "statement": self.statement,
            "explanation": self.explanation,
            "advice": self.advice,
            "terms": [
                {
                    "surface_text": t.surface_text,
                    "tooltip_text": t.tooltip_text,
                    "segment": t.segment,
                }
                for t in self.terms
            ],
            "best_slide": list(self.best_slide) if self.best_slide else None,
            "model_meta": self.model_meta,
        }

    @classmethod
    def from_json(cls, data: dict) -> "StructuredFeedback":
        return cls(
            score=int(data["score"]),
            band=Band(data["band"]),
            statement=data["statement"],
            explanation=data["explanation"],
            advice=data["advice"],
            terms=[
                TermSpan(t["surface_text"], t["tooltip_text"], t.get("segment", "explanation"))
                for t in data.get("terms", [])
            ],
            best_slide=tuple(data["best_slide"]) if data.get("best_slide") else None,
            model_meta=dict(data.get("model_meta", {})),
        )


def _extract_segment(fragment: str, name: str) -> str:
    pattern = re.compile(rf"<{name}>(.*?)</{name}>", re.DOTALL)
    matches = pattern.findall(fragment)
    opens = len(re.findall(rf"<{name}>", fragment))
    closes = len(re.findall(rf"</{name}>", fragment))
    if opens == 0 and closes == 0:
        raise SchemaError(f"missing <{name}> segment")
    if len(matches) != 1 or opens != 1 or closes != 1:
        raise SchemaError(f"segment <{name}> must appear exactly once")
    return matches[0]


def _extract_terms(text: str, segment: str) -> tuple[str, list[TermSpan]]:
    """Replace term tags with their surface text, collecting spans in order."""
    spans: list[TermSpan] = []

    def replace(match: re.Match) -> str:
        tooltip = match.group(1) if match.group(1) is not None else match.group(2)
        surface = _TAG_RE.sub("", match.group(3))
        if not tooltip:
            raise SchemaError("term tooltip must be non-empty")
        if not surface:
            raise SchemaError("term surface must be non-empty")
        spans.append(TermSpan(surface, tooltip, segment))
        return match.group(3)

    return _TERM_RE.sub(replace, text), spans


def parse_structured(raw: str, kind: QuestionKind) -> StructuredFeedback:
    """Parse and validate a provider response body.

    Raises ParseError for malformed JSON, SchemaError for tag-schema
    violations, DomainError for out-of-domain scores. Unknown tags are
    stripped with their inner text retained.
    """
    try:
        body = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ParseError(f"response body is not valid JSON: {exc}") from exc
    if not isinstance(body, dict):
        raise ParseError("response body must be a JSON object")
    if "score" not in body or "structured_feedback" not in body:
        raise SchemaError("response must carry 'score' and 'structured_feedback'")
    score = body["score"]
    if isinstance(score, bool) or not isinstance(score, int):
        raise SchemaError(f"score must be an integer, got {type(score).__name__}")
    fragment = body["structured_feedback"]
    if not isinstance(fragment, str):
        raise SchemaError("structured_feedback must be a string")
    if score not in score_domain(kind):
        raise DomainError(f"score {score} outside {kind.value} domain")

    segments: dict[str, str] = {}
    terms: list[TermSpan] = []
    for name in SEGMENTS:
        inner, spans = _extract_terms(_extract_segment(fragment, name), name)
        cleaned = _TAG_RE.sub("", inner).strip()
        # strip the surfaces the same way so they stay verbatim substrings
        segments[name] = cleaned
        terms.extend(spans)

    feedback = StructuredFeedback(
        score=score,
        band=band_score(kind, score),
        statement=segments["statement"],
        explanation=segments["explanation"],
        advice=segments["advice"],
        terms=terms,
    )
    return feedback.validate(kind)


def _inject_terms(text: str, spans: list[TermSpan]) -> str:
    out: list[str] = []
    cursor = 0
    for span in spans:
        pos = text.find(span.surface_text, cursor)
        if pos < 0:
            pos = text.find(span.surface_text)
        if pos < 0:
            raise ContractViolation(
                f"surface {span.surface_text!r} not present in its segment"
            )
        if "'" not in span.tooltip_text:
            attr = f"'{span.tooltip_text}'"
        elif '"' not in span.tooltip_text:
            attr = f'"{span.tooltip_text}"'
        else:
            raise ContractViolation("tooltip mixes both quote styles; cannot render")
        out.append(text[cursor:pos])
        out.append(f"<term explanation={attr}>{span.surface_text}</term>")
        cursor = pos + len(span.surface_text)
    out.append(text[cursor:])
    return "".join(out)


def render_structured(feedback: StructuredFeedback) -> str:
    """Serialize feedback back to the provider wire shape (inverse of parse)."""
    parts = []
    for name in SEGMENTS:
        spans = [t for t in feedback.terms if t.segment == name]
        parts.append(f"<{name}>{_inject_terms(feedback.segment_text(name), spans)}</{name}>")
    fragment = f"{parts[0]} {parts[1]}{parts[2]}"
    return json.dumps({"score": feedback.score, "structured_feedback": fragment})


class FeedbackEngine:
    """Assembles generation context, invokes the provider, validates output."""

    def __init__(
        self,
        provider,
        prompt_templates: dict[str, str],
        page_resolver: Callable[[str], tuple[str, str]],
        retry_budget: int = DEFAULT_RETRY_BUDGET,
        default_template_id: str = "default-v1",
        passthrough_config: dict | None = None,
    ):
        self.provider = provider
        self.prompt_templates = dict(prompt_templates)
        self.page_resolver = page_resolver  # page_id -> (descriptor_text, deck source_uri)
        self.retry_budget = retry_budget
        self.default_template_id = default_template_id
        self.passthrough_config = dict(passthrough_config or {})

    def assemble_context(
        self,
        question: Question,
        answer: str,
        ranked_pages: list[RankedPage],
        prompt_template_id: str | None = None,
    ) -> GenerationRequest:
        """Build a deterministic request from the question, answer, and retrieval."""
        template_id = prompt_template_id or self.default_template_id
        if template_id not in self.prompt_templates:
            raise ConfigurationError(f"unknown prompt template {template_id!r}")
        slides: list[tuple[str, str]] = []
        best_slide: tuple[str, str] | None = None
        for rank, page in enumerate(ranked_pages[:3]):
            descriptor, source_uri = self.page_resolver(page.page_id)
            slides.append((page.page_id, descriptor))
            if rank == 0:
                best_slide = (page.page_id, source_uri)
        return GenerationRequest(
            question_id=question.question_id,
            kind=question.kind,
            stem_text=question.stem_text,
            options=tuple(question.options),
            correct_option_id=question.correct_option_id,
            rubric_keywords=list(question.rubric_keywords),
            learner_answer=str(answer),
            context_slides=tuple(slides),
            prompt_template_id=template_id,
            prompt_text=self.prompt_templates[template_id],
            best_slide=best_slide,
            passthrough_config=dict(self.passthrough_config),
        )

    def generate_feedback(
        self, request: GenerationRequest, kind: QuestionKind
    ) -> StructuredFeedback:
        """First parse-valid response wins; up to retry_budget retries."""
        attempts = 0
        last_error: Exception | None = None
        while attempts <= self.retry_budget:
            attempts += 1
            try:
                raw = self.provider.generate(request, kind)
                feedback = parse_structured(raw, kind)
            except (FeedbackError, ProviderError) as exc:
                last_error = exc
                logger.warning(
                    "generation attempt %d for %s failed: %s",
                    attempts,
                    request.question_id,
                    exc,
                )
                continue
            feedback.best_slide = request.best_slide
            feedback.model_meta = {
                "provider": getattr(self.provider, "name", "unknown"),
                "template": request.prompt_template_id,
                "attempts": attempts,
            }
            return feedback
        raise GenerationFailed(
            f"no valid response after {attempts} attempts: {last_error}", attempts
        )
