"""The statistical tests behind the evaluation pipeline.

Pure-Python implementations (no numerical libraries) so results are
deterministic and auditable: paired/independent t with Cohen's d, ANCOVA with
a homogeneity-of-slopes check, Mann-Whitney U with exact enumeration for
small samples, and Cohen's kappa. All p-values are two-sided.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from enum import Enum
from typing import Hashable, Sequence

from ..errors import ContractViolation, DegenerateDataError, DesignError
from .special import f_sf, normal_two_sided_p, t_two_sided_p

# Exact Mann-Whitney enumeration cap: choose(n_a + n_b, n_a) labelings.
EXACT_ENUMERATION_LIMIT = 200_000


class TTestVariant(str, Enum):
    PAIRED = "PAIRED"
    INDEPENDENT = "INDEPENDENT"


class MannWhitneyMethod(str, Enum):
    EXACT = "EXACT"
    NORMAL_APPROX = "NORMAL_APPROX"


@dataclass(frozen=True)
class TTestResult:
    t: float
    df: float
    p: float
    d: float  # Cohen's d; sign follows t (first argument minus second)
    variant: TTestVariant


@dataclass(frozen=True)
class AncovaResult:
    F: float
    p: float
    partial_eta_sq: float
    slopes_p: float  # homogeneity-of-slopes interaction test


@dataclass(frozen=True)
class MannWhitneyResult:
    U: float  # U statistic of the first sample
    p: float
    method: MannWhitneyMethod


@dataclass(frozen=True)
class KappaResult:
    kappa: float
    observed_agreement: float
    expected_agreement: float


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _sample_var(values: Sequence[float]) -> float:
    m = _mean(values)
    return math.fsum((v - m) ** 2 for v in values) / (len(values) - 1)


def standardize(raw: float, max_points: float) -> float:
    """Raw score on a 0-100 percentage scale."""
    if max_points <= 0:
        raise ContractViolation("max_points must be positive")
    if not 0 <= raw <= max_points:
        raise ContractViolation(f"raw score {raw} outside [0, {max_points}]")
    return 100.0 * raw / max_points


def paired_t(pre: Sequence[float], post: Sequence[float]) -> TTestResult:
    """Paired-samples t on differences (post - pre); d = mean(diff)/sd(diff)."""
    if len(pre) != len(post):
        raise ContractViolation("paired samples must have equal length")
    n = len(pre)
    if n < 2:
        raise DegenerateDataError("paired t needs at least 2 pairs")
    diffs = [b - a for a, b in zip(pre, post)]
    var = _sample_var(diffs)
    if var == 0.0:
        if _mean(diffs) == 0.0:
            # identical samples: no effect, maximally non-significant
            return TTestResult(0.0, n - 1, 1.0, 0.0, TTestVariant.PAIRED)
        raise DegenerateDataError("differences have zero variance")
    sd = math.sqrt(var)
    t = _mean(diffs) / (sd / math.sqrt(n))
    return TTestResult(
        t=t,
        df=n - 1,
        p=t_two_sided_p(t, n - 1),
        d=_mean(diffs) / sd,
        variant=TTestVariant.PAIRED,
    )


def independent_t(a: Sequence[float], b: Sequence[float]) -> TTestResult:
    """Pooled-variance two-sample t; d = (mean_a - mean_b) / pooled_sd."""
    na, nb = len(a), len(b)
    if na < 2 or nb < 2:
        raise DegenerateDataError("independent t needs >= 2 per group")
    df = na + nb - 2
    pooled_var = ((na - 1) * _sample_var(a) + (nb - 1) * _sample_var(b)) / df
    if pooled_var == 0.0:
        if _mean(a) == _mean(b):
            return TTestResult(0.0, df, 1.0, 0.0, TTestVariant.INDEPENDENT)
        raise DegenerateDataError("both groups have zero variance")
    sp = math.sqrt(pooled_var)
    t = (_mean(a) - _mean(b)) / (sp * math.sqrt(1.0 / na + 1.0 / nb))
    return TTestResult(
        t=t,
        df=df,
        p=t_two_sided_p(t, df),
        d=(_mean(a) - _mean(b)) / sp,
        variant=TTestVariant.INDEPENDENT,
    )


def _solve(matrix: list[list[float]], rhs: list[float]) -> list[float]:
    """Gaussian elimination with partial pivoting on a small dense system."""
    n = len(matrix)
    aug = [row[:] + [rhs[i]] for i, row in enumerate(matrix)]
    scale = max((abs(v) for row in matrix for v in row), default=0.0)
    tolerance = 1e-12 * max(scale, 1.0)
    for col in range(n):
        pivot = max(range(col, n), key=lambda r: abs(aug[r][col]))
        if abs(aug[pivot][col]) < tolerance:
            raise DesignError("design matrix is singular")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        for row in range(col + 1, n):
            factor = aug[row][col] / aug[col][col]
            for k in range(col, n + 1):
                aug[row][k] -= factor * aug[col][k]
    solution = [0.0] * n
    for row in range(n - 1, -1, -1):
        acc = aug[row][n] - math.fsum(aug[row][k] * solution[k] for k in range(row + 1, n))
        solution[row] = acc / aug[row][row]
    return solution


def _ss_residual(columns: list[list[float]], y: Sequence[float]) -> float:
    """Residual sum of squares of least-squares fit y ~ columns."""
    p = len(columns)
    xtx = [[math.fsum(columns[i][r] * columns[j][r] for r in range(len(y)))
            for j in range(p)] for i in range(p)]
    xty = [math.fsum(columns[i][r] * y[r] for r in range(len(y))) for i in range(p)]
    beta = _solve(xtx, xty)
    residuals = [
        y[r] - math.fsum(beta[i] * columns[i][r] for i in range(p))
        for r in range(len(y))
    ]
    return math.fsum(e * e for e in residuals)


def ancova(
    post: Sequence[float],
    pre: Sequence[float],
    condition: Sequence[Hashable],
) -> AncovaResult:
    """Post ~ 1 + pre + condition, F-testing the condition term.

    partial_eta_sq = SS_condition / (SS_condition + SS_residual). slopes_p is
    the interaction F-test from post ~ 1 + pre + condition + pre*condition.
    """
    n = len(post)
    if not (len(pre) == len(condition) == n):
        raise ContractViolation("post, pre, condition must have equal length")
    if n < 5:
        raise DegenerateDataError("ancova needs at least 5 observations")
    levels = sorted(set(condition), key=str)
    if len(levels) != 2:
        raise DesignError(f"condition must have exactly 2 levels, got {len(levels)}")
    group = [float(c == levels[1]) for c in condition]
    if _sample_var(pre) == 0.0:
        raise DegenerateDataError("covariate has zero variance")

    ones = [1.0] * n
    pre_f = [float(v) for v in pre]
    post_f = [float(v) for v in post]
    interaction = [p * g for p, g in zip(pre_f, group)]

    ss_reduced = _ss_residual([ones, pre_f], post_f)
    ss_full = _ss_residual([ones, pre_f, group], post_f)
    ss_inter = _ss_residual([ones, pre_f, group, interaction], post_f)

    ss_condition = max(0.0, ss_reduced - ss_full)
    df_res = n - 3
    if ss_full <= 0.0:
        raise DegenerateDataError("full model has zero residual variance")
    f_stat = (ss_condition / 1.0) / (ss_full / df_res)
    partial_eta = ss_condition / (ss_condition + ss_full)

    ss_slope = max(0.0, ss_full - ss_inter)
    df_inter = n - 4
    if ss_inter <= 0.0 or df_inter <= 0:
        raise DegenerateDataError("interaction model has zero residual variance")
    slopes_f = (ss_slope / 1.0) / (ss_inter / df_inter)

    return AncovaResult(
        F=f_stat,
        p=f_sf(f_stat, 1, df_res),
        partial_eta_sq=partial_eta,
        slopes_p=f_sf(slopes_f, 1, df_inter),
    )


def _midranks(values: Sequence[float]) -> list[float]:
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        midrank = (i + j) / 2.0 + 1.0
        for k in range(i, j + 1):
            ranks[order[k]] = midrank
        i = j + 1
    return ranks


def mann_whitney(a: Sequence[float], b: Sequence[float]) -> MannWhitneyResult:
    """Rank-sum U with midranks for ties; exact two-sided p by enumeration of
    all labelings when choose(n_a+n_b, n_a) <= 200,000, else tie-corrected
    normal approximation with continuity correction."""
    na, nb = len(a), len(b)
    if na == 0 or nb == 0:
        raise DegenerateDataError("both groups must be non-empty")
    combined = list(a) + list(b)
    n = na + nb
    ranks = _midranks(combined)
    rank_sum_a = math.fsum(ranks[:na])
    u_a = rank_sum_a - na * (na + 1) / 2.0

    total = math.comb(n, na)
    if total <= EXACT_ENUMERATION_LIMIT:
        # doubled ranks are integers even with midranks, so this is exact
        ranks2 = [round(2 * r) for r in ranks]
        u2_obs = round(2 * rank_sum_a) - na * (na + 1)
        dev_obs = abs(u2_obs - na * nb)
        hits = 0
        for subset in itertools.combinations(range(n), na):
            u2 = sum(ranks2[i] for i in subset) - na * (na + 1)
            if abs(u2 - na * nb) >= dev_obs:
                hits += 1
        return MannWhitneyResult(U=u_a, p=hits / total, method=MannWhitneyMethod.EXACT)

    mu = na * nb / 2.0
    tie_term = 0.0
    seen: dict[float, int] = {}
    for v in combined:
        seen[v] = seen.get(v, 0) + 1
    for count in seen.values():
        tie_term += count**3 - count
    sigma_sq = (na * nb / 12.0) * ((n + 1) - tie_term / (n * (n - 1)))
    if sigma_sq <= 0.0:
        return MannWhitneyResult(U=u_a, p=1.0, method=MannWhitneyMethod.NORMAL_APPROX)
    z = max(0.0, abs(u_a - mu) - 0.5) / math.sqrt(sigma_sq)
    return MannWhitneyResult(
        U=u_a, p=normal_two_sided_p(z), method=MannWhitneyMethod.NORMAL_APPROX
    )


def cohens_kappa(r1: Sequence[Hashable], r2: Sequence[Hashable]) -> KappaResult:
    """Chance-corrected agreement between two raters."""
    if len(r1) != len(r2):
        raise ContractViolation("rating lists must have equal length")
    n = len(r1)
    if n < 1:
        raise DegenerateDataError("kappa needs at least one rated item")
    p_o = sum(1 for x, y in zip(r1, r2) if x == y) / n
    labels = set(r1) | set(r2)
    p_e = math.fsum(
        (sum(1 for x in r1 if x == k) / n) * (sum(1 for y in r2 if y == k) / n)
        for k in labels
    )
    if p_e >= 1.0:
        raise DegenerateDataError("expected agreement is 1; kappa undefined")
    return KappaResult(
        kappa=(p_o - p_e) / (1.0 - p_e),
        observed_agreement=p_o,
        expected_agreement=p_e,
    )
