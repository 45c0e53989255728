"""Real-time slide-grounded feedback service with analytics tooling."""

from .config import ServiceConfig, load_config
from .feedback import (
    Band,
    GenerationRequest,
    StructuredFeedback,
    TermSpan,
    band_score,
    parse_structured,
    render_structured,
)
from .models import EmbeddingVector, Question, QuestionKind, SlideDeck, SlidePage
from .service import FeedbackService
from .vindex import RankedPage, VectorIndex, cosine

__version__ = "0.1.0"

__all__ = [
    "Band",
    "EmbeddingVector",
    "FeedbackService",
    "GenerationRequest",
    "Question",
    "QuestionKind",
    "RankedPage",
    "ServiceConfig",
    "SlideDeck",
    "SlidePage",
    "StructuredFeedback",
    "TermSpan",
    "VectorIndex",
    "band_score",
    "cosine",
    "load_config",
    "parse_structured",
    "render_structured",
]
