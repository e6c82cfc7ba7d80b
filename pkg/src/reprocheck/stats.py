"""Nonparametric tests used by the corpus analytics.

Mann-Whitney U switches between exact enumeration (small samples, no ties)
and a tie-corrected normal approximation with continuity correction;
Kruskal-Wallis uses the tie-corrected H statistic against a chi-square tail.
The chosen method is recorded in the result so p-values stay auditable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from scipy.stats import chi2, norm

#: Largest pooled sample for which the exact Mann-Whitney null distribution
#: is enumerated (ties force the normal approximation regardless).
EXACT_LIMIT = 12


class TooFewGroupsError(ValueError):
    pass


@dataclass(frozen=True)
class TestResult:
    statistic: float
    p_value: float
    method: str  # "mann_whitney_two_sided" or "kruskal_wallis"
    approach: str = ""  # how the p-value was obtained, for the audit trail
    effect: float | None = None  # CLES where the caller supplies it
    degenerate: bool = False  # all pooled values identical; p = 1 by convention


def midranks(values: Sequence[float]) -> list[float]:
    """Ranks 1..n with ties sharing the average of their positions."""
    order = sorted(range(len(values)), key=lambda i: values[i])
    ranks = [0.0] * len(values)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and values[order[j + 1]] == values[order[i]]:
            j += 1
        avg = (i + j) / 2 + 1
        for k in range(i, j + 1):
            ranks[order[k]] = avg
        i = j + 1
    return ranks


def _tie_term(values: Sequence[float]) -> float:
    """Sum of t^3 - t over tie groups of the pooled sample."""
    counts: dict[float, int] = {}
    for v in values:
        counts[v] = counts.get(v, 0) + 1
    return sum(t**3 - t for t in counts.values())


def _exact_mwu_p(u_min: float, m: int, n: int) -> float:
    """Two-sided exact p: 2 * P(U <= u_min) under the null, capped at 1.

    Counts, for every way of choosing which m of the pooled ranks belong to
    the first sample, how many give a rank sum at or below the observed one.
    """
    total = m + n
    # count[s] = number of m-subsets of {1..total} with rank sum s
    max_sum = total * (total + 1) // 2
    count = [[0] * (max_sum + 1) for _ in range(m + 1)]
    count[0][0] = 1
    for rank in range(1, total + 1):
        for k in range(min(m, rank), 0, -1):
            row_k, row_prev = count[k], count[k - 1]
            for s in range(max_sum, rank - 1, -1):
                if row_prev[s - rank]:
                    row_k[s] += row_prev[s - rank]
    n_subsets = math.comb(total, m)
    threshold = u_min + m * (m + 1) / 2  # rank-sum equivalent of U <= u_min
    at_or_below = sum(c for s, c in enumerate(count[m]) if s <= threshold)
    return min(1.0, 2.0 * at_or_below / n_subsets)


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided Mann-Whitney U test; statistic is U of the first sample."""
    m, n = len(a), len(b)
    if m < 1 or n < 1:
        raise ValueError("both samples must be non-empty")

    pooled = list(a) + list(b)
    ranks = midranks(pooled)
    r_a = sum(ranks[:m])
    u_a = r_a - m * (m + 1) / 2
    u_b = m * n - u_a

    if len(set(pooled)) == 1:
        return TestResult(
            statistic=u_a, p_value=1.0, method="mann_whitney_two_sided",
            approach="degenerate", degenerate=True,
        )

    has_ties = len(set(pooled)) < len(pooled)
    if m + n <= EXACT_LIMIT and not has_ties:
        p = _exact_mwu_p(min(u_a, u_b), m, n)
        return TestResult(
            statistic=u_a, p_value=p, method="mann_whitney_two_sided",
            approach="exact_enumeration",
        )

    mu = m * n / 2
    total = m + n
    tie = _tie_term(pooled)
    var = m * n / 12 * ((total + 1) - tie / (total * (total - 1)))
    if var <= 0:
        return TestResult(
            statistic=u_a, p_value=1.0, method="mann_whitney_two_sided",
            approach="degenerate", degenerate=True,
        )
    # continuity correction pulls |U - mu| toward the mean by 0.5
    z = (abs(u_a - mu) - 0.5) / math.sqrt(var)
    p = min(1.0, 2.0 * float(norm.sf(max(z, 0.0))))
    return TestResult(
        statistic=u_a, p_value=p, method="mann_whitney_two_sided",
        approach="normal_approximation",
    )


def cles(a: Sequence[float], b: Sequence[float]) -> float:
    """Common-language effect size: P(x_b > x_a) + 0.5 * P(x_b = x_a)."""
    if not a or not b:
        raise ValueError("both samples must be non-empty")
    wins = 0.0
    for x in a:
        for y in b:
            if y > x:
                wins += 1.0
            elif y == x:
                wins += 0.5
    return wins / (len(a) * len(b))


def kruskal_wallis(groups: Sequence[Sequence[float]]) -> TestResult:
    """Kruskal-Wallis H with tie correction; p from the chi-square upper tail."""
    if len(groups) < 2:
        raise TooFewGroupsError("need at least 2 groups")
    if any(len(g) == 0 for g in groups):
        raise TooFewGroupsError("groups must be non-empty")

    pooled = [v for g in groups for v in g]
    total = len(pooled)
    ranks = midranks(pooled)

    h = 0.0
    offset = 0
    for g in groups:
        r_sum = sum(ranks[offset : offset + len(g)])
        h += r_sum * r_sum / len(g)
        offset += len(g)
    h = 12 / (total * (total + 1)) * h - 3 * (total + 1)

    correction = 1 - _tie_term(pooled) / (total**3 - total)
    if correction <= 0:  # every pooled value identical
        return TestResult(
            statistic=0.0, p_value=1.0, method="kruskal_wallis",
            approach="degenerate", degenerate=True,
        )
    h /= correction
    h = max(h, 0.0)  # guard tiny negative float residue

    df = len(groups) - 1
    p = float(chi2.sf(h, df))
    return TestResult(statistic=h, p_value=p, method="kruskal_wallis", approach="chi_square_tail")
