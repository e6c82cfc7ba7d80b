"""Figure rendering for the report and compare paths.

Each function draws one figure from the already-computed analytics and writes
a PNG next to the delimited tables; nothing here recomputes a statistic.
Figures with no underlying data are skipped rather than emitted empty.
"""

from __future__ import annotations

import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be pinned first)

from .analysis import MODALITIES, AgreementReport, CorpusAnalytics  # noqa: E402

log = logging.getLogger(__name__)

_DPI = 150


def _save(fig, path: Path) -> Path:
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def plot_yearly_completeness(analytics: CorpusAnalytics, path: Path) -> Path | None:
    scored = [y for y in analytics.yearly if y.n_scored > 0]
    if not scored:
        return None
    years = [y.year for y in scored]
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(years, [y.median for y in scored], marker="o", label="median")
    ax.fill_between(
        years,
        [y.q1 for y in scored],
        [y.q3 for y in scored],
        alpha=0.25,
        label="interquartile range",
    )
    ax.plot(years, [y.mean for y in scored], marker="s", linestyle="--", label="mean")
    ax.set_xlabel("year")
    ax.set_ylabel("completeness")
    ax.set_ylim(0, 1)
    ax.set_xticks(years)
    ax.legend()
    ax.set_title("Checklist completeness by year")
    return _save(fig, path)


def plot_reporting_rates(analytics: CorpusAnalytics, path: Path) -> Path | None:
    rated = [r for r in analytics.reporting if r.rate is not None]
    if not rated:
        return None
    rated.sort(key=lambda r: r.rate)
    fig, ax = plt.subplots(figsize=(7, max(3, 0.28 * len(rated))))
    ax.barh([r.item_id for r in rated], [r.rate for r in rated])
    ax.set_xlabel("reporting rate (Y / (Y + N))")
    ax.set_xlim(0, 1)
    ax.set_title("Per-item reporting rates")
    return _save(fig, path)


def plot_availability(analytics: CorpusAnalytics, path: Path) -> Path | None:
    if not analytics.availability_by_year:
        return None
    years = sorted(analytics.availability_by_year)
    fig, ax = plt.subplots(figsize=(7, 4))
    ax.plot(years, [analytics.availability_by_year[y] for y in years], marker="o")
    ax.axhline(analytics.availability_overall, linestyle=":", color="gray",
               label=f"overall {analytics.availability_overall:.1%}")
    ax.set_xlabel("year")
    ax.set_ylabel("papers with artifact or supplement")
    ax.set_ylim(0, 1)
    ax.set_xticks(years)
    ax.legend()
    ax.set_title("Artifact availability by year")
    return _save(fig, path)


def plot_modality_breakdown(analytics: CorpusAnalytics, path: Path) -> Path | None:
    if not analytics.modality_by_year:
        return None
    years = sorted(analytics.modality_by_year)
    fig, ax = plt.subplots(figsize=(7, 4))
    bottom = [0] * len(years)
    for modality in MODALITIES:
        counts = [analytics.modality_by_year[y].get(modality, 0) for y in years]
        if not any(counts):
            continue
        ax.bar([str(y) for y in years], counts, bottom=bottom, label=modality)
        bottom = [b + c for b, c in zip(bottom, counts)]
    ax.set_xlabel("year")
    ax.set_ylabel("papers")
    ax.legend(fontsize=8)
    ax.set_title("Artifact modality by year")
    return _save(fig, path)


def plot_best_paper_comparison(analytics: CorpusAnalytics, path: Path) -> Path | None:
    drawable = [c for c in analytics.best_paper if c.n_group and c.n_rest]
    if not drawable:
        return None
    fig, ax = plt.subplots(figsize=(7, 4))
    labels, means = [], []
    for comp in drawable:
        first, _, rest_label = comp.name.partition("_vs_")
        labels.extend([first, rest_label])
        means.extend([comp.mean_group, comp.mean_rest])
    ax.bar(range(len(means)), means)
    ax.set_xticks(range(len(labels)), labels, rotation=20, ha="right")
    ax.set_ylabel("mean completeness")
    ax.set_ylim(0, 1)
    ax.set_title("Completeness by award status")
    return _save(fig, path)


def render_corpus_figures(analytics: CorpusAnalytics, out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        plot_yearly_completeness(analytics, out / "yearly_completeness.png"),
        plot_reporting_rates(analytics, out / "reporting_rates.png"),
        plot_availability(analytics, out / "availability.png"),
        plot_modality_breakdown(analytics, out / "modality_breakdown.png"),
        plot_best_paper_comparison(analytics, out / "best_paper_comparison.png"),
    ]
    return [p for p in written if p is not None]


def plot_confusion_matrix(report: AgreementReport, path: Path) -> Path | None:
    cm = report.confusion
    if cm.n == 0:
        return None
    fig, ax = plt.subplots(figsize=(5, 4.5))
    grid = [[cm.counts[i][j] for j in range(len(cm.labels))] for i in range(len(cm.labels))]
    image = ax.imshow(grid, cmap="Blues")
    for i in range(len(cm.labels)):
        for j in range(len(cm.labels)):
            ax.text(j, i, str(grid[i][j]), ha="center", va="center",
                    color="white" if grid[i][j] > cm.n / 4 else "black")
    ax.set_xticks(range(len(cm.labels)), cm.labels)
    ax.set_yticks(range(len(cm.labels)), cm.labels)
    ax.set_xlabel("automated")
    ax.set_ylabel("human")
    fig.colorbar(image, ax=ax, shrink=0.8)
    ax.set_title(f"Answer agreement (n={cm.n})")
    return _save(fig, path)


def plot_per_field_accuracy(report: AgreementReport, path: Path) -> Path | None:
    fields = [f for f in report.per_field if f.accuracy is not None]
    if not fields:
        return None
    fields.sort(key=lambda f: f.accuracy)
    fig, ax = plt.subplots(figsize=(7, max(3, 0.28 * len(fields))))
    ax.barh([f.item_id for f in fields], [f.accuracy for f in fields])
    ax.set_xlabel("per-item accuracy vs human rater")
    ax.set_xlim(0, 1)
    ax.set_title("Agreement by checklist item")
    return _save(fig, path)


def render_agreement_figures(report: AgreementReport, out_dir: Path | str) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written = [
        plot_confusion_matrix(report, out / "confusion_matrix.png"),
        plot_per_field_accuracy(report, out / "per_field_accuracy.png"),
    ]
    return [p for p in written if p is not None]
