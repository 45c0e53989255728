"""Deck and question ingestion: all vision/embedding work happens here.

A deck source is a directory or zip of ``NNN.png``/``NNN.jpg`` page images
(ordered by numeric prefix) plus a ``deck.json`` manifest with ``title`` and
``source_uri``. Descriptors and embeddings are pregenerated at ingestion so
no provider vision/embedding call ever happens while a learner interacts.
"""

from __future__ import annotations

import io
import json
import logging
import re
import zipfile
from pathlib import Path
from typing import Callable

from PIL import Image

from .errors import (
    PageIngestError,
    PartialIngestError,
    ProviderError,
    ValidationError,
)
from .models import Question, QuestionKind, SlideDeck, SlidePage
from .store import CorpusStore

logger = logging.getLogger(__name__)

_IMAGE_NAME_RE = re.compile(r"^(\d+)\.(png|jpg|jpeg)$", re.IGNORECASE)


def _slug(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-") or "deck"


def read_deck_source(source: str | Path) -> tuple[dict, list[tuple[str, bytes]]]:
    """Load manifest and ordered page images from a directory or zip archive."""
    source = Path(source)
    files: dict[str, bytes] = {}
    if source.is_dir():
        for path in source.iterdir():
            if path.is_file():
                files[path.name] = path.read_bytes()
    elif zipfile.is_zipfile(source):
        with zipfile.ZipFile(source) as archive:
            for info in archive.infolist():
                if info.is_dir():
                    continue
                name = Path(info.filename).name
                if name in files:
                    raise ValidationError(f"duplicate archive entry name {name!r}")
                files[name] = archive.read(info)
    else:
        raise ValidationError(f"deck source {source} is neither a directory nor a zip")

    if "deck.json" not in files:
        raise ValidationError("deck source is missing deck.json manifest")
    manifest = json.loads(files.pop("deck.json").decode("utf-8"))
    for field in ("title", "source_uri"):
        if field not in manifest:
            raise ValidationError(f"deck.json is missing {field!r}")

    numbered: dict[int, tuple[str, bytes]] = {}
    for name, data in files.items():
        match = _IMAGE_NAME_RE.match(name)
        if not match:
            continue
        number = int(match.group(1))
        if number in numbered:
            raise ValidationError(
                f"ambiguous page number {number}: {numbered[number][0]} and {name}"
            )
        numbered[number] = (name, data)
    if not numbered:
        raise ValidationError("deck source contains no page images")
    pages = [numbered[n] for n in sorted(numbered)]
    return manifest, pages


def raw_deck_bytes(source: str | Path) -> bytes:
    """Zip a directory source in deterministic order (for HTTP upload)."""
    source = Path(source)
    if not source.is_dir():
        return source.read_bytes()
    buffer = io.BytesIO()
    with zipfile.ZipFile(buffer, "w", zipfile.ZIP_STORED) as archive:
        for path in sorted(source.iterdir()):
            if path.is_file():
                info = zipfile.ZipInfo(path.name)  # fixed date -> deterministic zip
                archive.writestr(info, path.read_bytes())
    return buffer.getvalue()


def _decode_check(data: bytes) -> str:
    """Verify the image decodes; returns the canonical extension."""
    with Image.open(io.BytesIO(data)) as img:
        img.verify()
    with Image.open(io.BytesIO(data)) as img:
        img.load()
        return ".png" if (img.format or "PNG").upper() == "PNG" else ".jpg"


def ingest_deck(
    store: CorpusStore,
    provider,
    source: str | Path,
    deck_id: str | None = None,
) -> SlideDeck:
    """Ingest a deck source end to end; persists pages and updates the store.

    Pages that fail (undecodable image, provider failure) are skipped and the
    deck is persisted as partially ingested; a PartialIngestError naming the
    failed page indices is raised after the good pages are saved.
    """
    manifest, image_files = read_deck_source(source)
    deck_id = deck_id or manifest.get("deck_id") or _slug(manifest["title"])
    pages: list[SlidePage] = []
    failures: list[PageIngestError] = []
    for page_index, (name, data) in enumerate(image_files):
        try:
            ext = _decode_check(data)
        except Exception as exc:
            failures.append(PageIngestError(page_index, f"undecodable image {name!r}: {exc}"))
            continue
        try:
            descriptor = provider.describe_image(data)
            embedding = provider.embed(descriptor)
        except ProviderError as exc:
            failures.append(PageIngestError(page_index, f"provider failure: {exc}"))
            continue
        image_ref = store.put_blob(data, ext)
        page = SlidePage(
            page_id=f"{deck_id}/p{page_index}",
            deck_id=deck_id,
            page_index=page_index,
            image_ref=image_ref,
            descriptor_text=descriptor,
            embedding=embedding,
        ).validate()
        pages.append(page)

    deck = SlideDeck(
        deck_id=deck_id,
        title=manifest["title"],
        source_uri=manifest["source_uri"],
        pages=pages,
        status="partial" if failures else "complete",
    )
    if not failures:
        deck.validate()
    store.upsert_deck(deck)
    if failures:
        logger.warning("deck %s partially ingested: %d page(s) failed", deck_id, len(failures))
        raise PartialIngestError(deck_id, failures)
    return deck


def ingest_question(
    store: CorpusStore,
    provider,
    question_def: dict,
    pregenerate: Callable[[Question], int] | None = None,
) -> Question:
    """Validate, embed, persist a question; pregenerate MCQ feedback if wired."""
    question = Question.from_json(question_def).validate()
    question.embedding = provider.embed(question.embedding_input())
    question.embedding.require_nonzero()
    store.insert_question(question)
    if question.kind is QuestionKind.MCQ and pregenerate is not None:
        pregenerate(question)
    return question
