from __future__ import annotations

import io
import json
from pathlib import Path

import pytest
from PIL import Image

from slidefeedback.config import ServiceConfig
from slidefeedback.providers import MockProvider
from slidefeedback.service import FeedbackService

FIXTURES = Path(__file__).parent / "fixtures"


def make_png(seed: int, size: tuple[int, int] = (64, 48)) -> bytes:
    """A small deterministic PNG whose pixels vary with the seed."""
    img = Image.new("RGB", size, ((seed * 37) % 256, (seed * 101) % 256, (seed * 67) % 256))
    for x in range(0, size[0], 8):
        for y in range(0, size[1], 8):
            img.putpixel((x, y), ((seed + x) % 256, (seed + y) % 256, (seed * x + y) % 256))
    buffer = io.BytesIO()
    img.save(buffer, format="PNG")
    return buffer.getvalue()


def write_deck_dir(
    root: Path,
    page_count: int = 3,
    title: str = "Multimedia Principle Lecture",
    source_uri: str = "https://example.edu/decks/multimedia.pdf",
    corrupt_pages: tuple[int, ...] = (),
    seed: int = 0,
) -> Path:
    deck = root / "deck_src"
    deck.mkdir(parents=True, exist_ok=True)
    (deck / "deck.json").write_text(
        json.dumps({"title": title, "source_uri": source_uri})
    )
    for i in range(page_count):
        data = make_png(seed * 100 + i)
        if i in corrupt_pages:
            data = data[: len(data) // 3]  # truncated -> undecodable
        (deck / f"{i:03d}.png").write_bytes(data)
    return deck


def load_question_fixture() -> dict:
    return json.loads((FIXTURES / "questions.json").read_text())


@pytest.fixture
def provider() -> MockProvider:
    return MockProvider(dims=32, seed=7)


@pytest.fixture
def service(tmp_path) -> FeedbackService:
    config = ServiceConfig(store_dir=str(tmp_path / "store"))
    return FeedbackService(config, provider=MockProvider(dims=32, seed=7))


@pytest.fixture
def loaded_service(tmp_path) -> FeedbackService:
    """Service with the fixture deck and all fixture questions ingested."""
    config = ServiceConfig(store_dir=str(tmp_path / "store"))
    svc = FeedbackService(config, provider=MockProvider(dims=32, seed=7))
    deck = write_deck_dir(tmp_path, page_count=5, seed=3)
    svc.ingest_deck_source(deck, deck_id="lecture-1")
    fixture = load_question_fixture()
    for question_def in fixture["mcqs"] + fixture["oeqs"]:
        svc.ingest_question_def(question_def)
    return svc
