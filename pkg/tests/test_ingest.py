from __future__ import annotations

import json
import zipfile

import pytest

from slidefeedback.errors import (
    ConflictError,
    PartialIngestError,
    ValidationError,
)
from slidefeedback.ingest import ingest_deck, ingest_question, read_deck_source
from slidefeedback.models import QuestionKind
from slidefeedback.providers import MockProvider
from slidefeedback.store import CorpusStore

from .conftest import load_question_fixture, make_png, write_deck_dir


@pytest.fixture
def store(tmp_path) -> CorpusStore:
    return CorpusStore(tmp_path / "store")


@pytest.fixture
def provider() -> MockProvider:
    return MockProvider(dims=16, seed=1)


class TestDeckSource:
    def test_reads_directory_in_numeric_order(self, tmp_path):
        deck = write_deck_dir(tmp_path, page_count=4)
        manifest, pages = read_deck_source(deck)
        assert manifest["title"] == "Multimedia Principle Lecture"
        assert [name for name, _ in pages] == ["000.png", "001.png", "002.png", "003.png"]

    def test_reads_zip_archive(self, tmp_path):
        deck = write_deck_dir(tmp_path, page_count=2)
        archive = tmp_path / "deck.zip"
        with zipfile.ZipFile(archive, "w") as zf:
            for path in deck.iterdir():
                zf.write(path, path.name)
        manifest, pages = read_deck_source(archive)
        assert len(pages) == 2

    def test_missing_manifest(self, tmp_path):
        deck = tmp_path / "bare"
        deck.mkdir()
        (deck / "000.png").write_bytes(make_png(0))
        with pytest.raises(ValidationError, match="deck.json"):
            read_deck_source(deck)

    def test_no_images(self, tmp_path):
        deck = tmp_path / "empty"
        deck.mkdir()
        (deck / "deck.json").write_text(json.dumps({"title": "t", "source_uri": "u"}))
        with pytest.raises(ValidationError, match="no page images"):
            read_deck_source(deck)

    def test_ambiguous_numeric_prefix(self, tmp_path):
        deck = write_deck_dir(tmp_path, page_count=1)
        (deck / "000.jpg").write_bytes(make_png(9))
        with pytest.raises(ValidationError, match="ambiguous"):
            read_deck_source(deck)


class TestIngestDeck:
    def test_minimal_single_page_deck(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=1)
        deck = ingest_deck(store, provider, deck_dir, deck_id="mini")
        assert [p.page_index for p in deck.pages] == [0]
        page = deck.pages[0]
        assert page.descriptor_text
        assert page.embedding.norm > 0
        assert store.get_blob(page.image_ref)

    def test_twenty_page_deck_fully_indexed(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=20)
        deck = ingest_deck(store, provider, deck_dir, deck_id="big")
        assert len(deck.pages) == 20
        index = store.build_index()
        assert index.count_for_deck("big") == 20

    def test_corrupt_page_reported_others_ingested(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=3, corrupt_pages=(1,))
        with pytest.raises(PartialIngestError) as info:
            ingest_deck(store, provider, deck_dir, deck_id="damaged")
        assert [f.page_index for f in info.value.failures] == [1]
        deck = store.get_deck("damaged")
        assert deck.status == "partial"
        assert sorted(p.page_index for p in deck.pages) == [0, 2]

    def test_provider_failure_marks_partial(self, store, tmp_path):
        from slidefeedback.providers import FaultInjectingProvider

        flaky = FaultInjectingProvider(
            MockProvider(dims=16, seed=1), describe_plan=["ok", "drop", "ok"]
        )
        deck_dir = write_deck_dir(tmp_path, page_count=3)
        with pytest.raises(PartialIngestError) as info:
            ingest_deck(store, flaky, deck_dir, deck_id="flaky")
        assert [f.page_index for f in info.value.failures] == [1]
        assert store.get_deck("flaky").status == "partial"

    def test_reingest_is_byte_identical(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=3)
        ingest_deck(store, provider, deck_dir, deck_id="same")
        first = store.store_path.read_bytes()
        blobs_first = sorted(p.name for p in store.blob_dir.iterdir())
        ingest_deck(store, provider, deck_dir, deck_id="same")
        assert store.store_path.read_bytes() == first
        assert sorted(p.name for p in store.blob_dir.iterdir()) == blobs_first

    def test_deck_id_from_manifest_title_slug(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=1, title="My Great Deck!")
        deck = ingest_deck(store, provider, deck_dir)
        assert deck.deck_id == "my-great-deck"

    def test_store_survives_reload(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=2)
        ingest_deck(store, provider, deck_dir, deck_id="persist")
        reloaded = CorpusStore(store.root)
        assert len(reloaded.get_deck("persist").pages) == 2
        assert len(reloaded.build_index()) == 2


class TestIngestQuestion:
    def test_mcq_triggers_pregeneration(self, store, provider):
        fixture = load_question_fixture()
        calls = []
        question = ingest_question(
            store, provider, fixture["mcqs"][0], pregenerate=calls.append
        )
        assert question.embedding is not None
        assert calls == [question]

    def test_oeq_does_not_pregenerate(self, store, provider):
        fixture = load_question_fixture()
        calls = []
        ingest_question(store, provider, fixture["oeqs"][0], pregenerate=calls.append)
        assert calls == []

    def test_embedding_covers_option_text(self, store, provider):
        fixture = load_question_fixture()
        q = ingest_question(store, provider, fixture["mcqs"][0])
        expected = provider.embed(q.embedding_input())
        assert q.embedding.values == expected.values

    def test_duplicate_question_id_conflicts(self, store, provider):
        fixture = load_question_fixture()
        ingest_question(store, provider, fixture["mcqs"][0])
        with pytest.raises(ConflictError):
            ingest_question(store, provider, fixture["mcqs"][0])

    def test_mcq_with_single_option_rejected(self, store, provider):
        bad = {
            "question_id": "bad-1",
            "kind": "MCQ",
            "stem_text": "?",
            "options": [["opt-a", "only"]],
            "correct_option_id": "opt-a",
        }
        with pytest.raises(ValidationError):
            ingest_question(store, provider, bad)

    def test_mixed_dims_rejected(self, store, provider, tmp_path):
        deck_dir = write_deck_dir(tmp_path, page_count=1)
        ingest_deck(store, provider, deck_dir, deck_id="d16")
        other = MockProvider(dims=8, seed=1)
        fixture = load_question_fixture()
        with pytest.raises(ValidationError, match="dims"):
            ingest_question(store, other, fixture["oeqs"][0])

    def test_kind_determines_max_score(self, store, provider):
        fixture = load_question_fixture()
        mcq = ingest_question(store, provider, fixture["mcqs"][1])
        oeq = ingest_question(store, provider, fixture["oeqs"][1])
        assert mcq.max_score == 1
        assert oeq.max_score == 2
        assert mcq.kind is QuestionKind.MCQ
