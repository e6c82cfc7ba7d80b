"""Agreement statistics between two raters and corpus-level analytics.

Everything here is pure computation over validated assessments; the writers
at the bottom emit one delimiter-separated table per figure-backing dataset
so any plotting tool can consume them.
"""

from __future__ import annotations

import csv
import logging
import statistics
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

from .checklist import (
    TERNARY,
    Assessment,
    ChecklistItem,
    ChecklistSchema,
)
from .stats import TestResult, TooFewGroupsError, cles, kruskal_wallis, mann_whitney_u

log = logging.getLogger(__name__)

#: Artifact modality vocabulary shared with the harness-side classifier.
MODALITIES = ("pdf_only", "code_only", "data_only", "code_and_data", "unspecified", "none")

_CODE_ITEMS = ("algorithm_source_code", "data_processing_code", "analysis_code")
_DATA_ITEMS = ("raw_objective_values", "raw_solution_data", "raw_execution_times")


class EmptyMatrixError(ValueError):
    pass


class NoComparableItemsError(ValueError):
    pass


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts indexed by (first rater value, second rater value)."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]

    @property
    def n(self) -> int:
        return sum(sum(row) for row in self.counts)

    def cell(self, a_value: str, b_value: str) -> int:
        return self.counts[self.labels.index(a_value)][self.labels.index(b_value)]


@dataclass(frozen=True)
class KappaResult:
    p_o: float
    p_e: float
    kappa: float | None  # None = undefined (p_e == 1 with imperfect agreement)


def pair_assessments(
    human: Iterable[Assessment], auto: Iterable[Assessment]
) -> tuple[list[tuple[Assessment, Assessment]], list[str], list[str]]:
    """Match assessments by paper id; unmatched ids are returned, not dropped silently."""
    by_id_h = {a.paper_id: a for a in human}
    by_id_a = {a.paper_id: a for a in auto}
    shared = sorted(set(by_id_h) & set(by_id_a))
    pairs = [(by_id_h[pid], by_id_a[pid]) for pid in shared]
    only_h = sorted(set(by_id_h) - set(by_id_a))
    only_a = sorted(set(by_id_a) - set(by_id_h))
    if only_h or only_a:
        log.info("unmatched papers: %d human-only, %d automated-only", len(only_h), len(only_a))
    return pairs, only_h, only_a


def _comparable(
    schema: ChecklistSchema,
    h: Assessment,
    a: Assessment,
    item_filter: Callable[[ChecklistItem], bool] | None = None,
):
    """Yield (item, human value, auto value) where both answers are in-domain ternary."""
    for item in schema.items:
        if not item.is_ternary:
            continue
        if item_filter is not None and not item_filter(item):
            continue
        hv, av = h.answer_value(item.id), a.answer_value(item.id)
        if hv in TERNARY and av in TERNARY:
            yield item, hv, av


def confusion(
    human: Iterable[Assessment],
    auto: Iterable[Assessment],
    schema: ChecklistSchema,
    item_filter: Callable[[ChecklistItem], bool] | None = None,
) -> ConfusionMatrix:
    """3x3 Y/N/NA confusion counts over all comparable items of all matched papers."""
    pairs, _, _ = pair_assessments(human, auto)
    grid = [[0] * 3 for _ in range(3)]
    idx = {v: i for i, v in enumerate(TERNARY)}
    for h, a in pairs:
        for _, hv, av in _comparable(schema, h, a, item_filter):
            grid[idx[hv]][idx[av]] += 1
    cm = ConfusionMatrix(labels=TERNARY, counts=tuple(tuple(r) for r in grid))
    if cm.n == 0:
        raise NoComparableItemsError("no comparable items between the two raters")
    return cm


def accuracy(cm: ConfusionMatrix) -> float:
    if cm.n == 0:
        raise EmptyMatrixError("confusion matrix is empty")
    trace = sum(cm.counts[i][i] for i in range(len(cm.labels)))
    return trace / cm.n


def cohen_kappa(cm: ConfusionMatrix) -> KappaResult:
    """Chance-corrected agreement: kappa = (p_o - p_e) / (1 - p_e)."""
    n = cm.n
    if n == 0:
        raise EmptyMatrixError("confusion matrix is empty")
    k = len(cm.labels)
    p_o = sum(cm.counts[i][i] for i in range(k)) / n
    row = [sum(cm.counts[i]) / n for i in range(k)]
    col = [sum(cm.counts[i][j] for i in range(k)) / n for j in range(k)]
    p_e = sum(row[c] * col[c] for c in range(k))
    if p_e >= 1.0:
        # both raters constant on the same class; perfect agreement or undefined
        return KappaResult(p_o=p_o, p_e=p_e, kappa=1.0 if p_o == 1.0 else None)
    return KappaResult(p_o=p_o, p_e=p_e, kappa=(p_o - p_e) / (1 - p_e))


def merge_n_na(cm: ConfusionMatrix) -> ConfusionMatrix:
    """Collapse N and NA into a single class (2x2 matrix)."""
    if cm.labels != TERNARY:
        raise ValueError("merge expects a Y/N/NA matrix")
    c = cm.counts
    merged = (
        (c[0][0], c[0][1] + c[0][2]),
        (c[1][0] + c[2][0], c[1][1] + c[1][2] + c[2][1] + c[2][2]),
    )
    return ConfusionMatrix(labels=("Y", "N_or_NA"), counts=merged)


def kappa_merged(cm: ConfusionMatrix) -> KappaResult:
    return cohen_kappa(merge_n_na(cm))


def per_paper_accuracy(
    human: Iterable[Assessment], auto: Iterable[Assessment], schema: ChecklistSchema
) -> dict[str, float]:
    """Accuracy over each paper's own comparable items; papers with none are omitted."""
    pairs, _, _ = pair_assessments(human, auto)
    out: dict[str, float] = {}
    for h, a in pairs:
        match = total = 0
        for _, hv, av in _comparable(schema, h, a):
            total += 1
            if hv == av:
                match += 1
        if total > 0:
            out[h.paper_id] = match / total
    return out


@dataclass(frozen=True)
class FieldAgreement:
    item_id: str
    dimension: str
    title: str
    domain_kind: str  # "ternary" or "categorical"
    n: int
    accuracy: float | None
    kappa: float | None


@dataclass(frozen=True)
class DimensionAgreement:
    dimension: str
    n: int
    accuracy: float | None
    kappa: float | None
    merged_kappa: float | None


@dataclass(frozen=True)
class AgreementReport:
    n_comparable: int
    overall_accuracy: float
    overall: KappaResult
    merged: KappaResult
    confusion: ConfusionMatrix
    merged_confusion: ConfusionMatrix
    per_field: tuple[FieldAgreement, ...]
    per_dimension: tuple[DimensionAgreement, ...]
    per_paper_accuracy: dict[str, float]
    unscored_papers: tuple[str, ...]
    class_distribution: dict[str, Counter]
    unmatched_human: tuple[str, ...] = ()
    unmatched_auto: tuple[str, ...] = ()


def _field_agreement(
    pairs: list[tuple[Assessment, Assessment]], item: ChecklistItem
) -> FieldAgreement:
    if item.is_ternary:
        grid = [[0] * 3 for _ in range(3)]
        idx = {v: i for i, v in enumerate(TERNARY)}
        for h, a in pairs:
            hv, av = h.answer_value(item.id), a.answer_value(item.id)
            if hv in TERNARY and av in TERNARY:
                grid[idx[hv]][idx[av]] += 1
        cm = ConfusionMatrix(labels=TERNARY, counts=tuple(tuple(r) for r in grid))
        if cm.n == 0:
            return FieldAgreement(item.id, item.dimension, item.title, "ternary", 0, None, None)
        kres = cohen_kappa(cm)
        return FieldAgreement(
            item.id, item.dimension, item.title, "ternary", cm.n, accuracy(cm), kres.kappa
        )
    # categorical domains: exact string-match accuracy, never folded into kappa
    match = total = 0
    for h, a in pairs:
        hv, av = h.answer_value(item.id), a.answer_value(item.id)
        if hv in item.values and av in item.values:
            total += 1
            if hv == av:
                match += 1
    acc = match / total if total else None
    return FieldAgreement(item.id, item.dimension, item.title, "categorical", total, acc, None)


def build_agreement_report(
    human: Iterable[Assessment], auto: Iterable[Assessment], schema: ChecklistSchema
) -> AgreementReport:
    """Full two-rater comparison: overall, merged, per field, per dimension, per paper."""
    human = list(human)
    auto = list(auto)
    pairs, only_h, only_a = pair_assessments(human, auto)
    if not pairs:
        raise NoComparableItemsError("no paper ids shared between the two assessment sets")

    cm = confusion(human, auto, schema)
    merged_cm = merge_n_na(cm)

    dist: dict[str, Counter] = {"human": Counter(), "automated": Counter()}
    for h, a in pairs:
        for _, hv, av in _comparable(schema, h, a):
            dist["human"][hv] += 1
            dist["automated"][av] += 1

    per_field = tuple(_field_agreement(pairs, item) for item in schema.items)

    per_dim: list[DimensionAgreement] = []
    for dim in schema.dimensions:
        try:
            dim_cm = confusion(human, auto, schema, item_filter=lambda it: it.dimension == dim)
        except NoComparableItemsError:
            per_dim.append(DimensionAgreement(dim, 0, None, None, None))
            continue
        kres = cohen_kappa(dim_cm)
        mres = kappa_merged(dim_cm)
        per_dim.append(
            DimensionAgreement(dim, dim_cm.n, accuracy(dim_cm), kres.kappa, mres.kappa)
        )

    paper_acc = per_paper_accuracy(human, auto, schema)
    unscored = tuple(h.paper_id for h, _ in pairs if h.paper_id not in paper_acc)

    return AgreementReport(
        n_comparable=cm.n,
        overall_accuracy=accuracy(cm),
        overall=cohen_kappa(cm),
        merged=kappa_merged(cm),
        confusion=cm,
        merged_confusion=merged_cm,
        per_field=per_field,
        per_dimension=tuple(per_dim),
        per_paper_accuracy=paper_acc,
        unscored_papers=unscored,
        class_distribution=dist,
        unmatched_human=tuple(only_h),
        unmatched_auto=tuple(only_a),
    )


# --- corpus analytics --------------------------------------------------------


def modality_from_answers(assessment: Assessment) -> str:
    """Derive the artifact modality of a paper from its checklist answers."""
    has_artifact = assessment.answer_value("artifact_provided") == "Y"
    has_supp = assessment.answer_value("supplementary_material") == "Y"
    if not has_artifact:
        return "pdf_only" if has_supp else "none"
    has_code = any(assessment.answer_value(i) == "Y" for i in _CODE_ITEMS)
    has_data = any(assessment.answer_value(i) == "Y" for i in _DATA_ITEMS)
    if has_code and has_data:
        return "code_and_data"
    if has_code:
        return "code_only"
    if has_data:
        return "data_only"
    return "unspecified"


@dataclass(frozen=True)
class YearlyCompleteness:
    year: int
    n_papers: int
    n_scored: int
    mean: float | None
    median: float | None
    q1: float | None
    q3: float | None


@dataclass(frozen=True)
class ItemReportingRate:
    item_id: str
    dimension: str
    title: str
    rate: float | None
    n_yes: int
    n_no: int
    n_na: int
    n_other: int  # unanswered, sentinel, or out-of-domain


@dataclass(frozen=True)
class GroupComparison:
    name: str
    n_group: int
    n_rest: int
    mean_group: float | None
    median_group: float | None
    mean_rest: float | None
    median_rest: float | None
    test: TestResult | None
    cles_group_higher: float | None  # P(random group paper scores above a rest paper)


@dataclass(frozen=True)
class PaperRow:
    paper_id: str
    year: int
    completeness: float | None
    available: bool
    modality: str
    nominated: bool | None
    won: bool | None


@dataclass(frozen=True)
class CorpusAnalytics:
    alpha: float
    n_papers: int
    papers: tuple[PaperRow, ...]
    yearly: tuple[YearlyCompleteness, ...]
    completeness_across_years: TestResult | None
    completeness_across_years_note: str
    reporting: tuple[ItemReportingRate, ...]
    availability_overall: float
    availability_by_year: dict[int, float]
    modality_overall: Counter = field(default_factory=Counter)
    modality_by_year: dict[int, Counter] = field(default_factory=dict)
    broken_link_rate: float = 0.0
    persistent_code_data_count: int = 0
    best_paper: tuple[GroupComparison, ...] = ()


def _quartiles(values: Sequence[float]) -> tuple[float, float, float]:
    if len(values) == 1:
        return values[0], values[0], values[0]
    q1, q2, q3 = statistics.quantiles(sorted(values), n=4, method="inclusive")
    return q1, q2, q3


def _flag(assessment: Assessment, item_id: str) -> bool | None:
    value = assessment.answer_value(item_id)
    if value == "Y":
        return True
    if value == "N":
        return False
    return None


def _compare_groups(
    name: str, group: list[float], rest: list[float]
) -> GroupComparison:
    test = effect = None
    if group and rest:
        test = mann_whitney_u(group, rest)
        effect = cles(rest, group)
    return GroupComparison(
        name=name,
        n_group=len(group),
        n_rest=len(rest),
        mean_group=statistics.fmean(group) if group else None,
        median_group=statistics.median(group) if group else None,
        mean_rest=statistics.fmean(rest) if rest else None,
        median_rest=statistics.median(rest) if rest else None,
        test=test,
        cles_group_higher=effect,
    )


def corpus_report(
    assessments: Iterable[Assessment],
    records,
    schema: ChecklistSchema,
    alpha: float = 0.05,
) -> CorpusAnalytics:
    """Corpus-level analytics: completeness trends, reporting rates, artifacts, awards.

    ``records`` supplies publication years (objects with ``paper_id`` and
    ``year``); assessments without a matching record are skipped with a log note.
    """
    from .checklist import completeness as _completeness

    years = {r.paper_id: r.year for r in records}
    rows: list[PaperRow] = []
    by_item_counts: dict[str, Counter] = {it.id: Counter() for it in schema.items}

    kept: list[Assessment] = []
    for a in sorted(assessments, key=lambda x: x.paper_id):
        if a.paper_id not in years:
            log.info("assessment %s has no corpus record; skipped", a.paper_id)
            continue
        kept.append(a)
        score = _completeness(schema, a).value
        available = (
            a.answer_value("artifact_provided") == "Y"
            or a.answer_value("supplementary_material") == "Y"
        )
        rows.append(
            PaperRow(
                paper_id=a.paper_id,
                year=years[a.paper_id],
                completeness=score,
                available=available,
                modality=modality_from_answers(a),
                nominated=_flag(a, "best_paper_nomination"),
                won=_flag(a, "best_paper_award"),
            )
        )
        for item in schema.items:
            value = a.answer_value(item.id)
            by_item_counts[item.id][value if value in item.values else "_other"] += 1

    n = len(rows)
    yearly: list[YearlyCompleteness] = []
    groups_by_year: dict[int, list[float]] = {}
    for row in rows:
        groups_by_year.setdefault(row.year, [])
        if row.completeness is not None:
            groups_by_year[row.year].append(row.completeness)
    for year in sorted(groups_by_year):
        scored = groups_by_year[year]
        n_papers = sum(1 for r in rows if r.year == year)
        if scored:
            q1, q2, q3 = _quartiles(scored)
            yearly.append(
                YearlyCompleteness(
                    year, n_papers, len(scored), statistics.fmean(scored), q2, q1, q3
                )
            )
        else:
            yearly.append(YearlyCompleteness(year, n_papers, 0, None, None, None, None))

    kw = None
    kw_note = ""
    kw_groups = [g for g in groups_by_year.values() if g]
    if len(kw_groups) >= 2:
        try:
            kw = kruskal_wallis(kw_groups)
        except TooFewGroupsError as exc:
            kw_note = f"not applicable: {exc}"
    else:
        kw_note = "not applicable: fewer than 2 year groups with scores"

    reporting: list[ItemReportingRate] = []
    for item in schema.items:
        if not item.is_ternary:
            continue
        counts = by_item_counts[item.id]
        n_yes, n_no, n_na = counts["Y"], counts["N"], counts["NA"]
        n_other = n - n_yes - n_no - n_na
        rate = n_yes / (n_yes + n_no) if (n_yes + n_no) else None
        reporting.append(
            ItemReportingRate(item.id, item.dimension, item.title, rate, n_yes, n_no, n_na, n_other)
        )

    availability_by_year = {
        year: sum(1 for r in rows if r.year == year and r.available)
        / sum(1 for r in rows if r.year == year)
        for year in sorted(groups_by_year)
    }
    modality_by_year: dict[int, Counter] = {}
    for row in rows:
        modality_by_year.setdefault(row.year, Counter())[row.modality] += 1

    kept_by_id = {a.paper_id: a for a in kept}
    broken = sum(
        1 for a in kept if a.answer_value("artifact_link_accessible") == "N"
    )
    persistent = sum(
        1
        for row in rows
        if row.modality in ("code_only", "data_only", "code_and_data")
        and kept_by_id[row.paper_id].answer_value("persistent_artifact_link") == "Y"
    )

    nominated = [r.completeness for r in rows if r.nominated is True and r.completeness is not None]
    not_nominated = [
        r.completeness for r in rows if r.nominated is False and r.completeness is not None
    ]
    winners = [r.completeness for r in rows if r.won is True and r.completeness is not None]
    comparisons = []
    if nominated or not_nominated:
        comparisons.append(_compare_groups("nominated_vs_not_nominated", nominated, not_nominated))
    if winners or not_nominated:
        comparisons.append(_compare_groups("winners_vs_not_nominated", winners, not_nominated))

    return CorpusAnalytics(
        alpha=alpha,
        n_papers=n,
        papers=tuple(rows),
        yearly=tuple(yearly),
        completeness_across_years=kw,
        completeness_across_years_note=kw_note,
        reporting=tuple(reporting),
        availability_overall=(sum(1 for r in rows if r.available) / n) if n else 0.0,
        availability_by_year=availability_by_year,
        modality_overall=Counter(r.modality for r in rows),
        modality_by_year=modality_by_year,
        broken_link_rate=(broken / n) if n else 0.0,
        persistent_code_data_count=persistent,
        best_paper=tuple(comparisons),
    )


# --- table emission ----------------------------------------------------------


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.10g}"
    return str(value)


def _write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_agreement_tables(report: AgreementReport, out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name, header, rows):
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    emit(
        "agreement_overall.csv",
        ["metric", "value"],
        [
            ("n_comparable", report.n_comparable),
            ("accuracy", report.overall_accuracy),
            ("kappa", report.overall.kappa),
            ("p_o", report.overall.p_o),
            ("p_e", report.overall.p_e),
            ("merged_kappa", report.merged.kappa),
            ("merged_p_o", report.merged.p_o),
            ("merged_p_e", report.merged.p_e),
            ("mean_per_paper_accuracy", _mean_or_none(report.per_paper_accuracy.values())),
            ("median_per_paper_accuracy", _median_or_none(report.per_paper_accuracy.values())),
            ("n_papers_scored", len(report.per_paper_accuracy)),
            ("n_papers_unscored", len(report.unscored_papers)),
        ],
    )
    for name, cm in (
        ("confusion_matrix.csv", report.confusion),
        ("confusion_matrix_merged.csv", report.merged_confusion),
    ):
        emit(
            name,
            ["human \\ automated", *cm.labels],
            [(label, *cm.counts[i]) for i, label in enumerate(cm.labels)],
        )
    emit(
        "per_field_agreement.csv",
        ["item_id", "dimension", "title", "domain", "n", "accuracy", "kappa"],
        [
            (f.item_id, f.dimension, f.title, f.domain_kind, f.n, f.accuracy, f.kappa)
            for f in report.per_field
        ],
    )
    emit(
        "per_dimension_agreement.csv",
        ["dimension", "n", "accuracy", "kappa", "merged_kappa"],
        [(d.dimension, d.n, d.accuracy, d.kappa, d.merged_kappa) for d in report.per_dimension],
    )
    emit(
        "per_paper_accuracy.csv",
        ["paper_id", "accuracy"],
        [
            *sorted(report.per_paper_accuracy.items()),
            *((pid, None) for pid in report.unscored_papers),
        ],
    )
    emit(
        "class_distribution.csv",
        ["rater", *TERNARY],
        [
            (rater, *(report.class_distribution[rater].get(v, 0) for v in TERNARY))
            for rater in ("human", "automated")
        ],
    )
    return written


def _mean_or_none(values) -> float | None:
    values = list(values)
    return statistics.fmean(values) if values else None


def _median_or_none(values) -> float | None:
    values = list(values)
    return statistics.median(values) if values else None


def write_corpus_tables(analytics: CorpusAnalytics, out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []

    def emit(name, header, rows):
        path = out / name
        _write_csv(path, header, rows)
        written.append(path)

    emit(
        "per_paper_completeness.csv",
        ["paper_id", "year", "completeness", "available", "modality", "nominated", "won"],
        [
            (r.paper_id, r.year, r.completeness, r.available, r.modality, r.nominated, r.won)
            for r in analytics.papers
        ],
    )
    emit(
        "yearly_completeness.csv",
        ["year", "n_papers", "n_scored", "mean", "median", "q1", "q3"],
        [(y.year, y.n_papers, y.n_scored, y.mean, y.median, y.q1, y.q3) for y in analytics.yearly],
    )
    emit(
        "reporting_rates.csv",
        ["item_id", "dimension", "title", "reporting_rate", "n_yes", "n_no", "n_na", "n_other"],
        [
            (r.item_id, r.dimension, r.title, r.rate, r.n_yes, r.n_no, r.n_na, r.n_other)
            for r in analytics.reporting
        ],
    )
    emit(
        "availability.csv",
        ["year", "proportion_with_material"],
        [
            *sorted(analytics.availability_by_year.items()),
            ("overall", analytics.availability_overall),
        ],
    )
    years = sorted(analytics.modality_by_year)
    emit(
        "modality_counts.csv",
        ["year", *MODALITIES],
        [
            *((y, *(analytics.modality_by_year[y].get(m, 0) for m in MODALITIES)) for y in years),
            ("overall", *(analytics.modality_overall.get(m, 0) for m in MODALITIES)),
        ],
    )
    emit(
        "best_paper_comparison.csv",
        [
            "comparison",
            "n_group",
            "n_rest",
            "mean_group",
            "median_group",
            "mean_rest",
            "median_rest",
            "u_statistic",
            "p_value",
            "method",
            "cles_group_higher",
        ],
        [
            (
                c.name,
                c.n_group,
                c.n_rest,
                c.mean_group,
                c.median_group,
                c.mean_rest,
                c.median_rest,
                c.test.statistic if c.test else None,
                c.test.p_value if c.test else None,
                c.test.method if c.test else None,
                c.cles_group_higher,
            )
            for c in analytics.best_paper
        ],
    )
    kw = analytics.completeness_across_years
    emit(
        "statistical_tests.csv",
        ["test", "statistic", "p_value", "method", "approach", "alpha", "note"],
        [
            (
                "completeness_across_years_kruskal_wallis",
                kw.statistic if kw else None,
                kw.p_value if kw else None,
                kw.method if kw else None,
                kw.approach if kw else None,
                analytics.alpha,
                analytics.completeness_across_years_note,
            ),
            *(
                (
                    f"completeness_{c.name}_mann_whitney",
                    c.test.statistic if c.test else None,
                    c.test.p_value if c.test else None,
                    c.test.method if c.test else None,
                    c.test.approach if c.test else None,
                    analytics.alpha,
                    "",
                )
                for c in analytics.best_paper
            ),
        ],
    )
    scored = [r.completeness for r in analytics.papers if r.completeness is not None]
    emit(
        "summary.csv",
        ["metric", "value"],
        [
            ("n_papers", analytics.n_papers),
            ("n_scored", len(scored)),
            ("mean_completeness", _mean_or_none(scored)),
            ("median_completeness", _median_or_none(scored)),
            ("availability_proportion", analytics.availability_overall),
            ("broken_link_proportion", analytics.broken_link_rate),
            ("persistent_code_data_papers", analytics.persistent_code_data_count),
            ("alpha", analytics.alpha),
        ],
    )
    return written
