"""Streaming audio narration of the best-matching slide page.

Chunks are produced by a background thread pulling the provider stream into a
small bounded queue, so the first chunk is deliverable while later ones are
still being generated and per-session buffering never exceeds the queue
capacity. Audio is 16-bit mono PCM at 16 kHz in 0.5 s frames.
"""

from __future__ import annotations

import logging
import queue
import struct
import threading
import uuid
from dataclasses import dataclass
from enum import Enum

from .errors import NarrationStreamError
from .providers import DEFAULT_CHARS_PER_CHUNK, PCM_SAMPLE_RATE

logger = logging.getLogger(__name__)

QUEUE_CAPACITY = 2  # peak buffered chunks per session


class SessionState(str, Enum):
    OPEN = "OPEN"
    STREAMING = "STREAMING"
    DONE = "DONE"
    CANCELLED = "CANCELLED"
    FAILED = "FAILED"


@dataclass(frozen=True)
class AudioChunk:
    seq: int
    payload: bytes
    is_last: bool


def build_script(
    question_stem: str,
    answer: str,
    statement: str,
    explanation: str,
    slide_descriptor: str,
) -> str:
    """Narration script connecting question, answer, feedback, and slide.

    Deliberately framed as spoken guidance so it complements rather than
    duplicates the written explanation (never byte-equal to it).
    """
    return (
        f"Let's look at the slide together. {slide_descriptor} "
        f"The question asked: {question_stem} "
        f"You answered: {answer}. {statement} "
        f"Here is the idea in other words: {explanation} "
        "Take a moment to find each of these elements on the slide before you revise."
    )


def wav_header(payload_bytes: int) -> bytes:
    """Standard 44-byte RIFF/WAVE header for the session's PCM format."""
    byte_rate = PCM_SAMPLE_RATE * 2
    return struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + payload_bytes,
        b"WAVE",
        b"fmt ",
        16,
        1,  # PCM
        1,  # mono
        PCM_SAMPLE_RATE,
        byte_rate,
        2,  # block align
        16,  # bits per sample
        b"data",
        payload_bytes,
    )


class NarrationSession:
    """One narration stream; produced by one thread, consumed by one client."""

    def __init__(self, session_id: str, submission_id: str, script: str):
        self.session_id = session_id
        self.submission_id = submission_id
        self.script = script
        self.state = SessionState.OPEN
        self.chunks_emitted = 0
        self.peak_buffered = 0
        self.error: Exception | None = None
        self._queue: queue.Queue = queue.Queue(maxsize=QUEUE_CAPACITY)
        self._cancel = threading.Event()
        self._thread: threading.Thread | None = None
        self._lock = threading.Lock()

    @property
    def cancelled(self) -> bool:
        return self._cancel.is_set()


class NarrationManager:
    def __init__(
        self,
        provider,
        chunk_delay_s: float = 0.0,
        chars_per_chunk: int = DEFAULT_CHARS_PER_CHUNK,
    ):
        self.provider = provider
        self.chunk_delay_s = chunk_delay_s
        self.chars_per_chunk = chars_per_chunk
        self._sessions: dict[str, NarrationSession] = {}
        self._lock = threading.Lock()

    def start_session(self, submission_id: str, script: str) -> NarrationSession:
        """Open a session; the provider stream starts lazily on first pull."""
        session = NarrationSession(uuid.uuid4().hex, submission_id, script)
        with self._lock:
            self._sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> NarrationSession | None:
        with self._lock:
            return self._sessions.get(session_id)

    # -- producer ------------------------------------------------------------

    def _produce(self, session: NarrationSession) -> None:
        stream = self.provider.narrate_stream(
            session.script,
            chunk_delay_s=self.chunk_delay_s,
            chars_per_chunk=self.chars_per_chunk,
        )
        seq = 0
        pending: bytes | None = None
        try:
            for payload in stream:
                if session.cancelled:
                    return
                if pending is not None:
                    if not self._enqueue(session, AudioChunk(seq, pending, False)):
                        return
                    seq += 1
                pending = payload
            if session.cancelled:
                return
            if pending is not None:
                if not self._enqueue(session, AudioChunk(seq, pending, True)):
                    return
            session._queue.put(("end", None))
        except Exception as exc:
            logger.warning("narration stream for %s failed: %s", session.session_id, exc)
            try:
                session._queue.put_nowait(("error", exc))
            except queue.Full:
                session.error = exc
        finally:
            close = getattr(stream, "close", None)
            if close:
                close()

    def _enqueue(self, session: NarrationSession, chunk: AudioChunk) -> bool:
        while not session.cancelled:
            try:
                session._queue.put(("chunk", chunk), timeout=0.05)
                session.peak_buffered = max(session.peak_buffered, session._queue.qsize())
                return True
            except queue.Full:
                continue
        return False

    # -- consumer ------------------------------------------------------------

    def next_chunk(self, session: NarrationSession) -> AudioChunk | None:
        """Next sequential chunk, or None at end of stream / after cancellation."""
        if session.state in (SessionState.DONE, SessionState.FAILED):
            return None
        if session.cancelled:
            return None
        with session._lock:
            if session._thread is None:
                session.state = SessionState.STREAMING
                session._thread = threading.Thread(
                    target=self._produce, args=(session,), daemon=True
                )
                session._thread.start()
        while True:
            if session.cancelled:
                return None
            if session.error is not None:
                session.state = SessionState.FAILED
                raise NarrationStreamError(str(session.error))
            try:
                item, value = session._queue.get(timeout=0.05)
            except queue.Empty:
                continue
            if item == "chunk":
                session.chunks_emitted += 1
                return value
            if item == "end":
                session.state = SessionState.DONE
                return None
            session.state = SessionState.FAILED
            raise NarrationStreamError(str(value))

    def cancel(self, session: NarrationSession) -> bool:
        """Abort the stream; no further chunk is ever emitted. DONE is a no-op."""
        if session.state in (SessionState.DONE, SessionState.FAILED):
            return False
        session._cancel.set()
        # discard anything already buffered so it can never reach the client
        while True:
            try:
                session._queue.get_nowait()
            except queue.Empty:
                break
        session.state = SessionState.CANCELLED
        return True

def assemble_wav(payloads: list[bytes]) -> bytes:
    """A completed session's chunks joined under a standard RIFF/WAVE header."""
    data = b"".join(payloads)
    return wav_header(len(data)) + data
