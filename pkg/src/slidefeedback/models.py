"""Core domain records: embeddings, slide decks, and practice questions."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Sequence

from .errors import ContractViolation, ValidationError

# Tolerance for the cached-norm consistency invariant.
NORM_TOLERANCE = 1e-9


class QuestionKind(str, Enum):
    MCQ = "MCQ"
    OEQ = "OEQ"


MAX_SCORE = {QuestionKind.MCQ: 1, QuestionKind.OEQ: 2}


@dataclass(frozen=True)
class EmbeddingVector:
    """A dense embedding with its Euclidean norm cached at construction."""

    dims: int
    values: tuple[float, ...]
    norm: float

    def __post_init__(self):
        if self.dims != len(self.values):
            raise ValidationError(
                f"dims={self.dims} but {len(self.values)} values given"
            )
        if not all(math.isfinite(v) for v in self.values):
            raise ValidationError("embedding contains non-finite values")
        true_norm = math.sqrt(math.fsum(v * v for v in self.values))
        if abs(self.norm - true_norm) > NORM_TOLERANCE:
            raise ValidationError(
                f"cached norm {self.norm} disagrees with actual {true_norm}"
            )

    @classmethod
    def of(cls, values: Sequence[float]) -> "EmbeddingVector":
        vals = tuple(float(v) for v in values)
        norm = math.sqrt(math.fsum(v * v for v in vals))
        return cls(dims=len(vals), values=vals, norm=norm)

    def require_nonzero(self) -> "EmbeddingVector":
        if self.norm <= 0.0:
            raise ContractViolation("embedding has zero norm")
        return self

    def to_json(self) -> dict:
        return {"dims": self.dims, "values": list(self.values), "norm": self.norm}

    @classmethod
    def from_json(cls, data: dict) -> "EmbeddingVector":
        return cls(
            dims=int(data["dims"]),
            values=tuple(float(v) for v in data["values"]),
            norm=float(data["norm"]),
        )


@dataclass
class SlidePage:
    """One deck page: image blob reference, vision descriptor, embedding."""

    page_id: str
    deck_id: str
    page_index: int
    image_ref: str
    descriptor_text: str
    embedding: EmbeddingVector

    def validate(self) -> "SlidePage":
        if self.page_index < 0:
            raise ValidationError("page_index must be nonnegative")
        if not self.descriptor_text:
            raise ValidationError("descriptor_text must be non-empty after ingestion")
        self.embedding.require_nonzero()
        return self

    def to_json(self) -> dict:
        return {
            "page_id": self.page_id,
            "deck_id": self.deck_id,
            "page_index": self.page_index,
            "image_ref": self.image_ref,
            "descriptor_text": self.descriptor_text,
            "embedding": self.embedding.to_json(),
        }

    @classmethod
    def from_json(cls, data: dict) -> "SlidePage":
        return cls(
            page_id=data["page_id"],
            deck_id=data["deck_id"],
            page_index=int(data["page_index"]),
            image_ref=data["image_ref"],
            descriptor_text=data["descriptor_text"],
            embedding=EmbeddingVector.from_json(data["embedding"]),
        )


@dataclass
class SlideDeck:
    """An ingested slide deck with its learner-facing source link."""

    deck_id: str
    title: str
    source_uri: str
    pages: list[SlidePage] = field(default_factory=list)
    status: str = "complete"  # "complete" | "partial"

    def validate(self) -> "SlideDeck":
        indices = [p.page_index for p in self.pages]
        if indices != list(range(len(self.pages))):
            raise ValidationError(f"page indices not gapless 0..n-1: {indices}")
        return self

    def to_json(self) -> dict:
        return {
            "deck_id": self.deck_id,
            "title": self.title,
            "source_uri": self.source_uri,
            "page_count": len(self.pages),
            "status": self.status,
        }


@dataclass
class Question:
    """An MCQ or OEQ practice item with its precomputed embedding."""

    question_id: str
    kind: QuestionKind
    stem_text: str
    image_refs: list[str] = field(default_factory=list)
    options: list[tuple[str, str]] = field(default_factory=list)
    correct_option_id: str | None = None
    rubric_keywords: list[str] = field(default_factory=list)
    embedding: EmbeddingVector | None = None

    @property
    def max_score(self) -> int:
        return MAX_SCORE[self.kind]

    def validate(self) -> "Question":
        if not self.stem_text:
            raise ValidationError("stem_text must be non-empty")
        if self.kind is QuestionKind.MCQ:
            if len(self.options) < 2:
                raise ValidationError("MCQ must have at least 2 options")
            option_ids = [oid for oid, _ in self.options]
            if len(set(option_ids)) != len(option_ids):
                raise ValidationError("duplicate option ids")
            if self.correct_option_id not in option_ids:
                raise ValidationError(
                    f"correct_option_id {self.correct_option_id!r} not among options"
                )
            if self.rubric_keywords:
                raise ValidationError("MCQ must not carry rubric keywords")
        else:
            if self.options:
                raise ValidationError("OEQ must have no options")
            if self.correct_option_id is not None:
                raise ValidationError("OEQ must not have a correct option")
            if not self.rubric_keywords:
                raise ValidationError("OEQ needs at least one rubric keyword")
        if self.embedding is not None:
            self.embedding.require_nonzero()
        return self

    def option_text(self, option_id: str) -> str:
        for oid, text in self.options:
            if oid == option_id:
                return text
        raise ValidationError(f"unknown option id {option_id!r}")

    def embedding_input(self) -> str:
        """Text the question embedding is computed from (stem + MCQ options)."""
        parts = [self.stem_text]
        if self.kind is QuestionKind.MCQ:
            parts.extend(text for _, text in self.options)
        return "\n".join(parts)

    def to_json(self) -> dict:
        data: dict = {
            "question_id": self.question_id,
            "kind": self.kind.value,
            "stem_text": self.stem_text,
            "image_refs": list(self.image_refs),
            "options": [[oid, text] for oid, text in self.options],
            "correct_option_id": self.correct_option_id,
            "rubric_keywords": list(self.rubric_keywords),
            "max_score": self.max_score,
        }
        if self.embedding is not None:
            data["embedding"] = self.embedding.to_json()
        return data

    @classmethod
    def from_json(cls, data: dict) -> "Question":
        kind = QuestionKind(data["kind"])
        embedding = None
        if data.get("embedding") is not None:
            embedding = EmbeddingVector.from_json(data["embedding"])
        q = cls(
            question_id=data["question_id"],
            kind=kind,
            stem_text=data["stem_text"],
            image_refs=list(data.get("image_refs", [])),
            options=[(o[0], o[1]) for o in data.get("options", [])],
            correct_option_id=data.get("correct_option_id"),
            rubric_keywords=list(data.get("rubric_keywords", [])),
            embedding=embedding,
        )
        declared = data.get("max_score")
        if declared is not None and int(declared) != q.max_score:
            raise ValidationError(
                f"max_score {declared} inconsistent with kind {kind.value}"
            )
        return q
