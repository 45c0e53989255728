"""Exact cosine-similarity index over slide-page embeddings.

Per-course decks are tens of pages, so queries are an exhaustive scan:
deterministic, exactly equal to brute force, and trivially snapshot-consistent
(readers hold a reference to an immutable entry list).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ContractViolation, EmptyIndexError, ValidationError
from .models import EmbeddingVector


@dataclass(frozen=True)
class IndexEntry:
    page_id: str
    deck_id: str
    page_index: int
    embedding: EmbeddingVector


@dataclass(frozen=True)
class RankedPage:
    page_id: str
    score: float


def cosine(u: EmbeddingVector, v: EmbeddingVector) -> float:
    """Cosine similarity, clamped to [-1, 1] against rounding overshoot."""
    if u.dims != v.dims:
        raise ContractViolation(f"dims mismatch: {u.dims} vs {v.dims}")
    u.require_nonzero()
    v.require_nonzero()
    dot = math.fsum(a * b for a, b in zip(u.values, v.values))
    return max(-1.0, min(1.0, dot / (u.norm * v.norm)))


class VectorIndex:
    """Immutable-snapshot index: build once per ingestion, query concurrently."""

    def __init__(self, entries: list[IndexEntry] | None = None):
        self._entries: list[IndexEntry] = []
        self._dims: int | None = None
        self._keys: set[tuple[str, int]] = set()
        for entry in entries or []:
            self.add(entry)

    def add(self, entry: IndexEntry) -> None:
        entry.embedding.require_nonzero()
        if self._dims is None:
            self._dims = entry.embedding.dims
        elif entry.embedding.dims != self._dims:
            raise ValidationError(
                f"index dims {self._dims}, entry has {entry.embedding.dims}"
            )
        key = (entry.deck_id, entry.page_index)
        if key in self._keys:
            raise ValidationError(f"duplicate index entry for {key}")
        self._keys.add(key)
        self._entries.append(entry)

    def __len__(self) -> int:
        return len(self._entries)

    @property
    def dims(self) -> int | None:
        return self._dims

    def entries(self) -> tuple[IndexEntry, ...]:
        return tuple(self._entries)

    def count_for_deck(self, deck_id: str) -> int:
        return sum(1 for e in self._entries if e.deck_id == deck_id)

    def top_k(self, query: EmbeddingVector, k: int) -> list[RankedPage]:
        """Top-k pages by cosine score, exact ties by ascending (deck_id, page_index)."""
        if k <= 0:
            raise ContractViolation("k must be positive")
        if not self._entries:
            raise EmptyIndexError("similarity query against an empty index")
        if query.dims != self._dims:
            raise ContractViolation(
                f"query dims {query.dims} does not match index dims {self._dims}"
            )
        scored = [
            (-cosine(query, e.embedding), e.deck_id, e.page_index, e.page_id)
            for e in self._entries
        ]
        scored.sort()
        return [
            RankedPage(page_id=page_id, score=-neg)
            for neg, _deck, _idx, page_id in scored[:k]
        ]
