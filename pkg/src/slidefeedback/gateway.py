"""HTTP surface of the feedback service, embeddable behind an iframe host.

Narration streams in two framings: the default ``audio/pcm`` body carries a
one-line header (``X-Chunk-Seq``/``X-Chunk-Last``/``X-Chunk-Length``) before
each payload; ``?framing=events`` emits a text/event-stream of base64 frames.
"""

from __future__ import annotations

import base64
import json
import tempfile
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse, StreamingResponse

from .errors import (
    ConflictError,
    EmptyIndexError,
    NarrationStreamError,
    NoSlideError,
    NotFoundError,
    PartialIngestError,
    SlideFeedbackError,
    ValidationError,
)
from .models import QuestionKind
from .service import FeedbackService


def frame_chunk(seq: int, is_last: bool, payload: bytes) -> bytes:
    header = (
        f"X-Chunk-Seq: {seq}; X-Chunk-Last: {1 if is_last else 0}; "
        f"X-Chunk-Length: {len(payload)}\r\n"
    )
    return header.encode("ascii") + payload


def parse_frames(body: bytes) -> list[tuple[int, bool, bytes]]:
    """Inverse of frame_chunk, for clients and tests."""
    frames = []
    pos = 0
    while pos < len(body):
        end = body.index(b"\r\n", pos)
        header = body[pos:end].decode("ascii")
        fields = dict(
            part.strip().split(": ", 1) for part in header.split(";") if part.strip()
        )
        length = int(fields["X-Chunk-Length"])
        start = end + 2
        frames.append(
            (
                int(fields["X-Chunk-Seq"]),
                fields["X-Chunk-Last"] == "1",
                body[start : start + length],
            )
        )
        pos = start + length
    return frames


def create_app(service: FeedbackService) -> FastAPI:
    app = FastAPI(title="slidefeedback", version="0.1.0")
    app.state.service = service
    app.add_middleware(
        CORSMiddleware,
        allow_origins=service.config.cors_origins,
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(SlideFeedbackError)
    async def _domain_error(request: Request, exc: SlideFeedbackError):
        status = 500
        if isinstance(exc, NotFoundError):
            status = 404
        elif isinstance(exc, ConflictError):
            status = 409
        elif isinstance(exc, NoSlideError):
            status = 409
        elif isinstance(exc, (ValidationError, EmptyIndexError)):
            status = 422
        return JSONResponse(
            status_code=status,
            content={"error": type(exc).__name__, "detail": str(exc)},
        )

    @app.get("/api/health")
    def health():
        return {
            "status": "ok",
            "provider": getattr(service.provider, "name", "unknown"),
            "pages": len(service.index),
            "questions": len(service.store.questions),
        }

    @app.post("/api/learners")
    def enroll(body: dict = Body(...)):
        learner_id = body.get("learner_id")
        condition = body.get("condition")
        if not learner_id or not condition:
            raise ValidationError("enrollment needs learner_id and condition")
        service.enroll_learner(str(learner_id), str(condition))
        return {"learner_id": learner_id, "condition": condition}

    @app.post("/api/decks")
    async def ingest_deck_endpoint(request: Request, deck_id: str | None = Query(None)):
        payload = await request.body()
        if not payload:
            raise ValidationError("request body must be a deck zip archive")
        with tempfile.NamedTemporaryFile(suffix=".zip") as handle:
            handle.write(payload)
            handle.flush()
            try:
                deck = service.ingest_deck_source(Path(handle.name), deck_id)
            except PartialIngestError as exc:
                return JSONResponse(
                    status_code=422,
                    content={
                        "error": "PartialIngestError",
                        "deck_id": exc.deck_id,
                        "failed_pages": [f.page_index for f in exc.failures],
                        "detail": str(exc),
                    },
                )
        return deck.to_json()

    @app.post("/api/questions")
    def ingest_question_endpoint(body: dict = Body(...)):
        question = service.ingest_question_def(body)
        return question.to_json()

    @app.get("/api/questions/{question_id}")
    def question_view(question_id: str):
        """Learner-facing view: never leaks the answer key or rubric."""
        question = service.store.get_question(question_id)
        return {
            "question_id": question.question_id,
            "kind": question.kind.value,
            "stem_text": question.stem_text,
            "image_refs": list(question.image_refs),
            "options": [[oid, text] for oid, text in question.options],
            "max_score": question.max_score,
        }

    @app.post("/api/submissions")
    def submit(body: dict = Body(...)):
        for field in ("learner_id", "question_id", "answer"):
            if field not in body:
                raise ValidationError(f"submission body needs {field!r}")
        response = service.handle_submit(
            str(body["learner_id"]), str(body["question_id"]), str(body["answer"])
        )
        return response.to_json()

    @app.get("/api/slides/{page_id:path}")
    def slide_image(page_id: str):
        data, media = service.slide_image(page_id)
        return Response(
            content=data,
            media_type=media,
            headers={"Cache-Control": "public, max-age=31536000, immutable"},
        )

    @app.post("/api/narration")
    def open_narration(body: dict = Body(...)):
        submission_id = body.get("submission_id")
        if not submission_id:
            raise ValidationError("narration body needs submission_id")
        session = service.start_narration(str(submission_id))
        return {"session_id": session.session_id, "state": session.state.value}

    @app.get("/api/narration/{session_id}")
    def narration_stream(session_id: str, framing: str = Query("binary")):
        session = service.narration.get_session(session_id)
        if session is None:
            raise NotFoundError(f"narration session {session_id!r} not found")
        if framing not in ("binary", "events"):
            raise ValidationError(f"unknown framing {framing!r}")

        if framing == "binary":
            def binary_frames():
                try:
                    for chunk in service.narration_chunks(session):
                        yield frame_chunk(chunk.seq, chunk.is_last, chunk.payload)
                except NarrationStreamError:
                    yield b"X-Chunk-Error: 1\r\n"

            return StreamingResponse(binary_frames(), media_type="audio/pcm")

        def event_frames():
            try:
                for chunk in service.narration_chunks(session):
                    data = json.dumps(
                        {
                            "seq": chunk.seq,
                            "last": chunk.is_last,
                            "payload_b64": base64.b64encode(chunk.payload).decode("ascii"),
                        }
                    )
                    yield f"event: chunk\ndata: {data}\n\n"
                yield "event: end\ndata: {}\n\n"
            except NarrationStreamError as exc:
                yield f"event: error\ndata: {json.dumps({'detail': str(exc)})}\n\n"

        return StreamingResponse(event_frames(), media_type="text/event-stream")

    @app.delete("/api/narration/{session_id}")
    def cancel_narration(session_id: str):
        return {"cancelled": service.cancel_narration(session_id)}

    @app.get("/api/events")
    def export_events(
        learner_id: str | None = Query(None),
        condition: str | None = Query(None),
        since: str | None = Query(None),
        until: str | None = Query(None),
        question_kind: str | None = Query(None),
    ):
        kind = QuestionKind(question_kind) if question_kind else None
        lines = service.export_events(
            learner_id=learner_id,
            condition=condition,
            since=since,
            until=until,
            question_kind=kind,
        )
        body = "".join(line + "\n" for line in lines)
        return Response(content=body, media_type="application/x-ndjson")

    return app
