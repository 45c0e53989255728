"""Single-file JSONL corpus store plus a content-addressed blob directory.

Records are rewritten in sorted order on every save, so ingesting identical
content twice leaves the store byte-identical. Ingestion holds the write
lock; readers only ever see the dict snapshot before or after a batch.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from pathlib import Path

from .errors import ConflictError, NotFoundError, ValidationError
from .models import Question, SlideDeck, SlidePage
from .vindex import IndexEntry, VectorIndex


class CorpusStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.blob_dir = self.root / "blobs"
        self.blob_dir.mkdir(exist_ok=True)
        self.store_path = self.root / "store.jsonl"
        self._lock = threading.RLock()
        self.decks: dict[str, SlideDeck] = {}
        self.pages: dict[str, SlidePage] = {}
        self.questions: dict[str, Question] = {}
        if self.store_path.exists():
            self._load()

    # -- blobs ---------------------------------------------------------------

    def put_blob(self, data: bytes, ext: str) -> str:
        """Store bytes under their digest; returns the blob reference."""
        if not ext.startswith("."):
            ext = "." + ext
        ref = hashlib.sha256(data).hexdigest() + ext.lower()
        path = self.blob_dir / ref
        if not path.exists():
            tmp = path.with_suffix(path.suffix + ".tmp")
            tmp.write_bytes(data)
            os.replace(tmp, path)
        return ref

    def get_blob(self, ref: str) -> bytes:
        path = self.blob_dir / ref
        if not path.exists():
            raise NotFoundError(f"blob {ref!r} not found")
        return path.read_bytes()

    # -- records -------------------------------------------------------------

    def embedding_dims(self) -> int | None:
        for page in self.pages.values():
            return page.embedding.dims
        for question in self.questions.values():
            if question.embedding is not None:
                return question.embedding.dims
        return None

    def _check_dims(self, dims: int) -> None:
        existing = self.embedding_dims()
        if existing is not None and dims != existing:
            raise ValidationError(
                f"embedding dims {dims} differ from store dims {existing}"
            )

    def upsert_deck(self, deck: SlideDeck) -> None:
        with self._lock:
            for page in deck.pages:
                self._check_dims(page.embedding.dims)
            # replace any previous pages of this deck
            self.pages = {
                pid: p for pid, p in self.pages.items() if p.deck_id != deck.deck_id
            }
            for page in deck.pages:
                self.pages[page.page_id] = page
            self.decks[deck.deck_id] = deck
            self.save()

    def insert_question(self, question: Question) -> None:
        with self._lock:
            if question.question_id in self.questions:
                raise ConflictError(f"question {question.question_id!r} already exists")
            if question.embedding is not None:
                self._check_dims(question.embedding.dims)
            self.questions[question.question_id] = question
            self.save()

    def get_deck(self, deck_id: str) -> SlideDeck:
        try:
            return self.decks[deck_id]
        except KeyError:
            raise NotFoundError(f"deck {deck_id!r} not found")

    def get_page(self, page_id: str) -> SlidePage:
        try:
            return self.pages[page_id]
        except KeyError:
            raise NotFoundError(f"page {page_id!r} not found")

    def get_question(self, question_id: str) -> Question:
        try:
            return self.questions[question_id]
        except KeyError:
            raise NotFoundError(f"question {question_id!r} not found")

    def build_index(self) -> VectorIndex:
        """Fresh index snapshot over all persisted pages."""
        entries = [
            IndexEntry(
                page_id=p.page_id,
                deck_id=p.deck_id,
                page_index=p.page_index,
                embedding=p.embedding,
            )
            for p in sorted(self.pages.values(), key=lambda p: (p.deck_id, p.page_index))
        ]
        return VectorIndex(entries)

    # -- persistence ---------------------------------------------------------

    def save(self) -> None:
        with self._lock:
            lines = []
            for deck_id in sorted(self.decks):
                deck = self.decks[deck_id]
                lines.append(json.dumps({"kind": "deck", **deck.to_json()}))
            for page_id in sorted(self.pages):
                lines.append(json.dumps({"kind": "page", **self.pages[page_id].to_json()}))
            for qid in sorted(self.questions):
                lines.append(
                    json.dumps({"kind": "question", **self.questions[qid].to_json()})
                )
            tmp = self.store_path.with_suffix(".tmp")
            tmp.write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
            os.replace(tmp, self.store_path)

    def _load(self) -> None:
        decks: dict[str, SlideDeck] = {}
        for line in self.store_path.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            record = json.loads(line)
            kind = record.pop("kind")
            if kind == "deck":
                record.pop("page_count", None)
                decks[record["deck_id"]] = SlideDeck(pages=[], **record)
            elif kind == "page":
                page = SlidePage.from_json(record)
                self.pages[page.page_id] = page
            elif kind == "question":
                q = Question.from_json(record)
                self.questions[q.question_id] = q
            else:
                raise ValidationError(f"unknown record kind {kind!r}")
        for page in sorted(self.pages.values(), key=lambda p: (p.deck_id, p.page_index)):
            if page.deck_id in decks:
                decks[page.deck_id].pages.append(page)
        self.decks = decks
