"""Statistics and log analytics for evaluating the feedback service."""

from .logs import (
    ActionCounts,
    LatencySummary,
    ScoreRecord,
    action_comparison,
    action_counts,
    latency_summary,
    load_events,
    load_scores,
    word_ratio,
)
from .special import betainc_reg, f_sf, normal_cdf, student_t_cdf, t_two_sided_p
from .stats import (
    AncovaResult,
    KappaResult,
    MannWhitneyMethod,
    MannWhitneyResult,
    TTestResult,
    TTestVariant,
    ancova,
    cohens_kappa,
    independent_t,
    mann_whitney,
    paired_t,
    standardize,
)

__all__ = [
    "ActionCounts",
    "AncovaResult",
    "KappaResult",
    "LatencySummary",
    "MannWhitneyMethod",
    "MannWhitneyResult",
    "ScoreRecord",
    "TTestResult",
    "TTestVariant",
    "action_comparison",
    "action_counts",
    "ancova",
    "betainc_reg",
    "cohens_kappa",
    "f_sf",
    "independent_t",
    "latency_summary",
    "load_events",
    "load_scores",
    "mann_whitney",
    "normal_cdf",
    "paired_t",
    "standardize",
    "student_t_cdf",
    "t_two_sided_p",
    "word_ratio",
]
