"""Service configuration: a single JSON file plus environment overrides."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

from .errors import ConfigurationError

ENV_PREFIX = "SLIDEFEEDBACK_"

DEFAULT_TEMPLATE_ID = "default-v1"


def default_prompt_template() -> str:
    return (
        resources.files("slidefeedback")
        .joinpath("templates/feedback_prompt.txt")
        .read_text(encoding="utf-8")
    )


@dataclass
class ServiceConfig:
    store_dir: str = "./data"
    provider: str = "mock"  # "mock" | "live"
    mock_dims: int = 64
    mock_seed: int = 0
    retry_budget: int = 2
    default_template_id: str = DEFAULT_TEMPLATE_ID
    prompt_template_files: dict[str, str] = field(default_factory=dict)
    # opaque generation knobs forwarded verbatim to the backend
    passthrough: dict = field(default_factory=lambda: {
        "verbosity": "low",
        "reasoning_effort": "low",
    })
    narration_chunk_delay_ms: float = 0.0
    narration_chars_per_chunk: int = 200
    cors_origins: list[str] = field(default_factory=lambda: ["*"])
    default_condition: str = "ai-multimodal"
    baseline_condition: str = "baseline"
    baseline_feedback_file: str | None = None
    live_endpoint: str = ""
    live_api_key_env: str = "SLIDEFEEDBACK_API_KEY"
    live_generation_model: str = ""
    live_embedding_model: str = ""
    live_vision_model: str = ""
    live_speech_model: str = ""

    def prompt_templates(self) -> dict[str, str]:
        templates = {DEFAULT_TEMPLATE_ID: default_prompt_template()}
        for template_id, path in self.prompt_template_files.items():
            templates[template_id] = Path(path).read_text(encoding="utf-8")
        return templates

    def baseline_feedback(self) -> dict[str, str]:
        if not self.baseline_feedback_file:
            return {}
        return json.loads(Path(self.baseline_feedback_file).read_text(encoding="utf-8"))


_ENV_FIELDS = {
    "STORE_DIR": ("store_dir", str),
    "PROVIDER": ("provider", str),
    "MOCK_DIMS": ("mock_dims", int),
    "MOCK_SEED": ("mock_seed", int),
    "RETRY_BUDGET": ("retry_budget", int),
    "CHUNK_DELAY_MS": ("narration_chunk_delay_ms", float),
    "CHARS_PER_CHUNK": ("narration_chars_per_chunk", int),
    "CORS_ORIGINS": ("cors_origins", lambda v: [o.strip() for o in v.split(",") if o.strip()]),
    "DEFAULT_CONDITION": ("default_condition", str),
    "BASELINE_FEEDBACK_FILE": ("baseline_feedback_file", str),
    "LIVE_ENDPOINT": ("live_endpoint", str),
    "LIVE_API_KEY_ENV": ("live_api_key_env", str),
}


def load_config(path: str | Path | None = None, env: dict | None = None) -> ServiceConfig:
    """Config file values, overridden by SLIDEFEEDBACK_* environment variables."""
    data: dict = {}
    if path is not None:
        raw = Path(path).read_text(encoding="utf-8")
        try:
            data = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ConfigurationError(f"config file {path} is not valid JSON: {exc}")
        if not isinstance(data, dict):
            raise ConfigurationError("config file must hold a JSON object")
    config = ServiceConfig()
    valid = set(config.__dataclass_fields__)
    for key, value in data.items():
        if key not in valid:
            raise ConfigurationError(f"unknown config key {key!r}")
        setattr(config, key, value)
    env = os.environ if env is None else env
    for suffix, (attr, cast) in _ENV_FIELDS.items():
        raw_value = env.get(ENV_PREFIX + suffix)
        if raw_value is not None:
            try:
                setattr(config, attr, cast(raw_value))
            except ValueError as exc:
                raise ConfigurationError(f"bad env override {ENV_PREFIX + suffix}: {exc}")
    if config.provider not in ("mock", "live"):
        raise ConfigurationError(f"provider must be 'mock' or 'live', got {config.provider!r}")
    return config
