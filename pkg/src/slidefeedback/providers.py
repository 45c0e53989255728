"""Model-provider boundary: deterministic mock, call counting, fault injection.

Every capability the service needs from a model backend goes through one of
four methods: ``describe_image``, ``embed``, ``generate``, ``narrate_stream``.
The mock implementation is referentially transparent so the whole test suite
runs without network access; the live adapter is an optional thin HTTP client.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
import threading
import time
from typing import TYPE_CHECKING, Iterator

from .errors import ConfigurationError, DegenerateInputError, ProviderError
from .models import EmbeddingVector, QuestionKind

if TYPE_CHECKING:
    from .feedback import GenerationRequest

_MASK64 = (1 << 64) - 1
_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3

# 0.5 s of 16-bit mono PCM at 16 kHz.
PCM_SAMPLE_RATE = 16000
PCM_FRAME_BYTES = PCM_SAMPLE_RATE  # 0.5 s * 16000 Hz * 2 bytes
SILENCE_FRAME = bytes(PCM_FRAME_BYTES)

DEFAULT_CHARS_PER_CHUNK = 200

CAPABILITIES = ("describe_image", "embed", "generate", "narrate_stream")


def fnv1a64(data: bytes) -> int:
    """64-bit FNV-1a digest."""
    h = _FNV_OFFSET
    for b in data:
        h = ((h ^ b) * _FNV_PRIME) & _MASK64
    return h


def _splitmix64(state: int) -> tuple[int, int]:
    """One SplitMix64 step: returns (next_state, output)."""
    state = (state + 0x9E3779B97F4A7C15) & _MASK64
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return state, z ^ (z >> 31)


class ProviderCallCounter:
    """Atomic per-capability invocation counts; resettable in test harnesses."""

    def __init__(self):
        self._lock = threading.Lock()
        self._counts = {cap: 0 for cap in CAPABILITIES}

    def record(self, capability: str) -> None:
        with self._lock:
            self._counts[capability] += 1

    def get(self, capability: str) -> int:
        with self._lock:
            return self._counts[capability]

    def snapshot(self) -> dict[str, int]:
        with self._lock:
            return dict(self._counts)

    def reset(self) -> None:
        with self._lock:
            for cap in self._counts:
                self._counts[cap] = 0


def mock_embed(text: str, dims: int = 64, seed: int = 0) -> EmbeddingVector:
    """Deterministic unit-norm pseudo-embedding of ``text``.

    A 64-bit stream seed is derived by folding ``seed`` into the FNV-1a
    digest of the text bytes, then ``dims`` values in [-1, 1] are drawn from
    the SplitMix64 sequence and normalized. Bit-identical across platforms.
    """
    if dims < 2:
        raise DegenerateInputError("embedding dims must be >= 2")
    if not text:
        raise DegenerateInputError("cannot embed empty text")
    digest = fnv1a64(text.encode("utf-8"))
    state = fnv1a64(digest.to_bytes(8, "little") + (seed & _MASK64).to_bytes(8, "little"))
    values = []
    while True:
        values.clear()
        for _ in range(dims):
            state, z = _splitmix64(state)
            # 53 significant bits -> u in [0, 1) -> v in [-1, 1)
            values.append(2.0 * ((z >> 11) * (2.0 ** -53)) - 1.0)
        norm = math.sqrt(math.fsum(v * v for v in values))
        if norm > 0.0:
            break
    return EmbeddingVector.of(v / norm for v in values)


def mock_describe_image(image_bytes: bytes) -> str:
    """Deterministic stand-in for a vision model's page summary."""
    digest = hashlib.sha256(image_bytes).hexdigest()[:12]
    return (
        f"Slide visual {digest}: diagram and caption content, "
        f"{len(image_bytes)} bytes of figure data."
    )


def _oeq_score(rubric_keywords: list[str], answer: str) -> tuple[int, list[str]]:
    folded = answer.casefold()
    found = [kw for kw in rubric_keywords if kw.casefold() in folded]
    if len(found) == len(rubric_keywords):
        return 2, found
    if len(found) * 2 >= len(rubric_keywords):
        return 1, found
    return 0, found


def _term_tag(keyword: str) -> str:
    tooltip = f"Key concept from the rubric: {keyword}".replace("'", "’")
    return f"<term explanation='{tooltip}'>{keyword}</term>"


def mock_generate(request: "GenerationRequest", kind: QuestionKind) -> str:
    """Deterministic structured grading of a generation request.

    MCQ: score 1 iff the chosen option is the keyed one. OEQ: score 2 when
    every rubric keyword appears in the answer (casefolded substring), 1 when
    at least half do, else 0. Output follows the provider wire schema:
    a JSON object with ``score`` and a tagged ``structured_feedback`` string.
    """
    answer = str(request.learner_answer)
    slide_note = (
        f"The most relevant slide says: {request.context_slides[0][1]}"
        if request.context_slides
        else "No slide context was available for this question."
    )
    if kind is QuestionKind.MCQ:
        chosen = dict(request.options).get(answer, answer)
        correct_text = dict(request.options).get(request.correct_option_id or "", "")
        if answer == request.correct_option_id:
            score = 1
            statement = f"Great work: “{chosen}” is the correct choice."
            explanation = (
                f"The question asks: {request.stem_text} "
                f"Your selection matches the keyed answer. {slide_note}"
            )
            advice = (
                "To consolidate this, restate in your own words why the other "
                "options fall short. What property do they each lack?"
            )
        else:
            score = 0
            statement = f"Not quite: “{chosen}” is not the keyed choice."
            explanation = (
                f"The question asks: {request.stem_text} "
                f"The keyed answer is “{correct_text}”. {slide_note}"
            )
            advice = (
                "Compare your option against the keyed one on the referenced "
                "slide. Which criterion separates them?"
            )
    else:
        score, found = _oeq_score(request.rubric_keywords, answer)
        if found:
            mentions = ", ".join(_term_tag(kw) for kw in found)
            coverage = f"Your answer mentions {mentions}."
        else:
            coverage = "Your answer does not yet mention the rubric's key ideas."
        statement = {
            2: "Excellent: your answer covers all the key ideas.",
            1: "You are partway there; some key ideas are present.",
            0: "This attempt misses the key ideas the rubric looks for.",
        }[score]
        explanation = (
            f"The question asks: {request.stem_text} {coverage} {slide_note}"
        )
        missing = [kw for kw in request.rubric_keywords if kw not in found]
        if missing:
            advice = (
                f"Revise your answer to address: {', '.join(missing)}. "
                "How does each relate to the scenario in the question?"
            )
        else:
            advice = (
                "Strengthen your answer by adding one concrete example. "
                "Where have you seen this principle applied well?"
            )
    fragment = (
        f"<statement>{statement}</statement> "
        f"<explanation>{explanation}</explanation>"
        f"<advice>{advice}</advice>"
    )
    return json.dumps({"score": score, "structured_feedback": fragment})


def mock_narrate_stream(
    script: str,
    chunk_delay_s: float = 0.0,
    chars_per_chunk: int = DEFAULT_CHARS_PER_CHUNK,
) -> Iterator[bytes]:
    """Silence-frame narration: ceil(len(script)/chars_per_chunk) PCM chunks.

    Each chunk is emitted after ``chunk_delay_s``, modelling generation time,
    so consumers can observe streaming-before-complete behaviour.
    """
    if not script:
        raise DegenerateInputError("cannot narrate an empty script")
    count = math.ceil(len(script) / chars_per_chunk)
    for _ in range(count):
        if chunk_delay_s > 0:
            time.sleep(chunk_delay_s)
        yield SILENCE_FRAME


class MockProvider:
    """Deterministic provider used by every test; stateless except the counter."""

    name = "mock"

    def __init__(self, dims: int = 64, seed: int = 0):
        self.dims = dims
        self.seed = seed
        self.calls = ProviderCallCounter()

    def describe_image(self, image_bytes: bytes) -> str:
        self.calls.record("describe_image")
        return mock_describe_image(image_bytes)

    def embed(self, text: str) -> EmbeddingVector:
        self.calls.record("embed")
        return mock_embed(text, dims=self.dims, seed=self.seed)

    def generate(self, request: "GenerationRequest", kind: QuestionKind) -> str:
        self.calls.record("generate")
        return mock_generate(request, kind)

    def narrate_stream(
        self,
        script: str,
        chunk_delay_s: float = 0.0,
        chars_per_chunk: int = DEFAULT_CHARS_PER_CHUNK,
    ) -> Iterator[bytes]:
        self.calls.record("narrate_stream")
        return mock_narrate_stream(script, chunk_delay_s, chars_per_chunk)


class FaultInjectingProvider:
    """Wraps a provider with a scripted fault plan per capability.

    Each plan is a sequence of actions consumed call by call: ``"ok"`` passes
    through, ``"drop"`` raises a retryable ProviderError, ``"garble"`` corrupts
    the result deterministically, ``"delay:MS"`` sleeps first. Once a plan is
    exhausted, calls pass through. ``narrate_fail_after`` breaks the narration
    stream after N chunks.
    """

    name = "fault-injecting"

    def __init__(
        self,
        inner,
        generate_plan: list[str] | None = None,
        embed_plan: list[str] | None = None,
        describe_plan: list[str] | None = None,
        narrate_fail_after: int | None = None,
        seed: int = 0,
    ):
        self.inner = inner
        self.calls = inner.calls
        self._plans = {
            "generate": list(generate_plan or []),
            "embed": list(embed_plan or []),
            "describe_image": list(describe_plan or []),
        }
        self.narrate_fail_after = narrate_fail_after
        self._seed = seed
        self._garbles = 0
        self._lock = threading.Lock()

    def _next_action(self, capability: str) -> str:
        with self._lock:
            plan = self._plans[capability]
            return plan.pop(0) if plan else "ok"

    def _apply(self, capability: str, call):
        action = self._next_action(capability)
        if action.startswith("delay:"):
            time.sleep(float(action.split(":", 1)[1]) / 1000.0)
            action = "ok"
        if action == "drop":
            # the inner call never happens, but the attempt is still counted
            self.calls.record(capability)
            raise ProviderError(f"injected {capability} failure", retryable=True)
        result = call()
        if action == "garble":
            result = self._garble(result)
        return result

    def _garble(self, text: str) -> str:
        import random

        with self._lock:
            rng = random.Random((self._seed << 16) ^ self._garbles)
            self._garbles += 1
        chars = list(text)
        for _ in range(max(1, len(chars) // 8)):
            pos = rng.randrange(len(chars))
            chars[pos] = chr(rng.randrange(32, 127))
        return "".join(chars)

    def describe_image(self, image_bytes: bytes) -> str:
        return self._apply("describe_image", lambda: self.inner.describe_image(image_bytes))

    def embed(self, text: str) -> EmbeddingVector:
        return self._apply("embed", lambda: self.inner.embed(text))

    def generate(self, request, kind) -> str:
        return self._apply("generate", lambda: self.inner.generate(request, kind))

    def narrate_stream(self, script: str, chunk_delay_s: float = 0.0, **kwargs) -> Iterator[bytes]:
        stream = self.inner.narrate_stream(script, chunk_delay_s, **kwargs)
        if self.narrate_fail_after is None:
            return stream

        def failing():
            for i, chunk in enumerate(stream):
                if i >= self.narrate_fail_after:
                    raise ProviderError("injected narration stream failure")
                yield chunk
            raise ProviderError("injected narration stream failure")

        return failing()


class LiveProvider:
    """Optional HTTP adapter for real backends; not exercised by acceptance.

    Model identifiers and passthrough generation settings (verbosity,
    reasoning-effort and similar knobs) are forwarded verbatim; the response
    contract is the same wire schema the mock emits.
    """

    name = "live"

    def __init__(
        self,
        endpoint: str,
        api_key_env: str,
        generation_model: str,
        embedding_model: str,
        vision_model: str,
        speech_model: str,
        passthrough: dict | None = None,
        timeout_s: float = 30.0,
    ):
        if not endpoint:
            raise ConfigurationError("live provider needs an endpoint URL")
        self.endpoint = endpoint.rstrip("/")
        self.api_key_env = api_key_env
        self.generation_model = generation_model
        self.embedding_model = embedding_model
        self.vision_model = vision_model
        self.speech_model = speech_model
        self.passthrough = dict(passthrough or {})
        self.timeout_s = timeout_s
        self.calls = ProviderCallCounter()

    def _client(self):
        import httpx

        key = os.environ.get(self.api_key_env, "")
        if not key:
            raise ConfigurationError(
                f"environment variable {self.api_key_env!r} is not set"
            )
        return httpx.Client(
            base_url=self.endpoint,
            headers={"Authorization": f"Bearer {key}"},
            timeout=self.timeout_s,
        )

    def describe_image(self, image_bytes: bytes) -> str:
        self.calls.record("describe_image")
        import base64

        with self._client() as client:
            resp = client.post(
                "/vision/describe",
                json={
                    "model": self.vision_model,
                    "image_b64": base64.b64encode(image_bytes).decode("ascii"),
                },
            )
            resp.raise_for_status()
            return resp.json()["description"]

    def embed(self, text: str) -> EmbeddingVector:
        if not text:
            raise DegenerateInputError("cannot embed empty text")
        self.calls.record("embed")
        with self._client() as client:
            resp = client.post(
                "/embeddings", json={"model": self.embedding_model, "input": text}
            )
            resp.raise_for_status()
            return EmbeddingVector.of(resp.json()["data"][0]["embedding"])

    def generate(self, request, kind) -> str:
        self.calls.record("generate")
        with self._client() as client:
            resp = client.post(
                "/generate",
                json={
                    "model": self.generation_model,
                    "prompt": request.prompt_text,
                    "input": request.to_json(),
                    **self.passthrough,
                },
            )
            resp.raise_for_status()
            return resp.text

    def narrate_stream(self, script: str, chunk_delay_s: float = 0.0, **kwargs) -> Iterator[bytes]:
        self.calls.record("narrate_stream")

        def stream():
            with self._client() as client, client.stream(
                "POST",
                "/speech/stream",
                json={"model": self.speech_model, "script": script},
            ) as resp:
                resp.raise_for_status()
                yield from resp.iter_bytes(chunk_size=PCM_FRAME_BYTES)

        return stream()
