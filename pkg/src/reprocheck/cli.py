"""Command line entry points.

Exit codes: 0 when the requested work fully succeeded, 1 for configuration
and usage errors, 2 when the run went ahead but some papers failed or the
results are unusable.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import tempfile
import threading
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import asdict
from pathlib import Path

from . import __version__
from .analysis import (
    NoComparableItemsError,
    build_agreement_report,
    corpus_report,
    write_agreement_tables,
    write_corpus_tables,
)
from .checklist import (
    RUN_STATE_FILENAME,
    SchemaError,
    default_schema,
    load_assessment_dir,
    load_schema,
    now_iso,
    save_assessment,
)
from .config import ConfigError, RunConfig, load_config
from .evaluator import ArtifactExtras, EvaluatorError, assess_paper
from .harness import (
    FetchError,
    attempt_execution,
    check_link,
    classify_modality,
    fetch_artifact,
    find_entrypoint,
    snapshot_digest,
)
from .ingest import (
    IngestError,
    ManifestError,
    PaperRecord,
    extract_text,
    extract_urls,
    load_corpus,
)
from .pdftext import PdfError
from .providers import MissingApiKeyError, OpenAiCompatProvider, ProviderError, StubProvider

log = logging.getLogger(__name__)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on bad usage; here usage errors are exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="reprocheck",
        description="Assess reproducibility reporting of papers against a checklist.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument(
        "-v", "--verbose", action="count", default=0, help="increase log detail"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_assess = sub.add_parser("assess", help="run the checklist over a corpus of PDFs")
    p_assess.add_argument("--manifest", required=True, help="corpus CSV (paper_id,year,title,pdf_path)")
    p_assess.add_argument("--out", required=True, help="directory for <paper_id>.json assessments")
    p_assess.add_argument("--config", help="JSON run configuration")
    p_assess.add_argument("--cache", help="award metadata JSON keyed by paper id")
    p_assess.add_argument(
        "--stub",
        nargs="?",
        const="",
        default=None,
        metavar="ANSWERS_JSON",
        help="use the offline stub provider, optionally loading canned answers",
    )
    p_assess.add_argument("--force", action="store_true", help="redo papers with existing output")
    p_assess.add_argument("--workers", type=int, default=1, help="parallel papers (default 1)")
    p_assess.add_argument(
        "--no-artifacts", action="store_true", help="skip link checking, fetching, and execution"
    )
    p_assess.set_defaults(func=cmd_assess)

    p_compare = sub.add_parser("compare", help="agreement between two assessment sets")
    p_compare.add_argument("--human", required=True, help="directory of reference assessments")
    p_compare.add_argument("--auto", required=True, help="directory of assessments under test")
    p_compare.add_argument("--out", required=True, help="directory for tables and figures")
    p_compare.add_argument("--schema", help="checklist schema JSON (default: bundled)")
    p_compare.add_argument("--no-figures", action="store_true", help="tables only")
    p_compare.set_defaults(func=cmd_compare)

    p_report = sub.add_parser("report", help="corpus analytics over one assessment set")
    p_report.add_argument("--assessments", required=True, help="directory of assessments")
    p_report.add_argument("--manifest", required=True, help="corpus CSV supplying years")
    p_report.add_argument("--out", required=True, help="directory for tables and figures")
    p_report.add_argument("--config", help="JSON run configuration")
    p_report.add_argument("--schema", help="checklist schema JSON (default: bundled)")
    p_report.add_argument("--alpha", type=float, help="significance level (default from config)")
    p_report.add_argument("--no-figures", action="store_true", help="tables only")
    p_report.set_defaults(func=cmd_report)

    p_probe = sub.add_parser(
        "probe-artifact", help="fetch one artifact, inventory it, optionally run it"
    )
    p_probe.add_argument("url", help="artifact URL or local directory")
    p_probe.add_argument("--dest", help="where to materialize the artifact")
    p_probe.add_argument("--execute", action="store_true", help="attempt a sandboxed run")
    p_probe.add_argument("--config", help="JSON run configuration")
    p_probe.set_defaults(func=cmd_probe)

    return parser


def _load_run_config(args) -> RunConfig:
    return load_config(args.config) if getattr(args, "config", None) else RunConfig()


def _load_schema_arg(path: str | None):
    return load_schema(Path(path)) if path else default_schema()


def _make_provider(args, config: RunConfig):
    if args.stub is not None:
        answers: dict[tuple[str, str], object] = {}
        if args.stub:
            doc = json.loads(Path(args.stub).read_text())
            for paper_id, items in doc.items():
                for item_id, value in items.items():
                    answers[(paper_id, item_id)] = value
        return StubProvider(answers=answers)
    if not config.provider.base_url or not config.provider.model:
        raise ConfigError(
            "assess needs provider.base_url and provider.model in the config, "
            "or --stub for an offline run"
        )
    return OpenAiCompatProvider(
        base_url=config.provider.base_url,
        model=config.provider.model,
        api_key_env=config.provider.api_key_env,
        temperature=config.provider.temperature,
        timeout_s=config.provider.timeout_s,
        min_interval_s=config.provider.min_interval_s,
    )


def _write_execution_log(paper_dir: Path, outcome) -> None:
    paper_dir.mkdir(parents=True, exist_ok=True)
    lines = [
        f"verdict: {outcome.verdict}",
        f"entrypoint: {' '.join(outcome.entrypoint) if outcome.entrypoint else '(none)'}",
        f"returncode: {outcome.returncode}",
        f"wall_time_s: {outcome.wall_time_s:.2f}",
        "--- stdout tail ---",
        outcome.stdout_tail,
        "--- stderr tail ---",
        outcome.stderr_tail,
    ]
    (paper_dir / "execution.log").write_text("\n".join(lines) + "\n")


def _gather_artifact_extras(
    text: str, record: PaperRecord, config: RunConfig, work_dir: Path
) -> ArtifactExtras | None:
    links = extract_urls(text, config.persistent_hosts)
    if not links:
        return None
    # code hosting first, then archives, then whatever else the paper mentions
    ranked = sorted(
        links,
        key=lambda l: {"code_hosting": 0, "persistent_archive": 1, "other": 2}[l.category],
    )[: config.max_links_checked]
    notes: list[str] = []
    snapshot = None
    paper_dir = work_dir / ".artifacts" / record.paper_id
    for link in ranked:
        status = check_link(link.url, config.link_timeout_s)
        state = "reachable" if status.ok else f"unreachable ({status.reason})"
        notes.append(f"{link.url}: {state}")
        if snapshot is None and status.ok and link.category != "other":
            try:
                snapshot = fetch_artifact(
                    link.url, paper_dir, max_bytes=config.artifact_max_bytes,
                    timeout_s=config.link_timeout_s * 3,
                )
            except FetchError as exc:
                notes.append(f"fetch failed: {exc}")
    digest = ""
    execution = None
    if snapshot is not None:
        digest = snapshot_digest(
            snapshot,
            per_file_tokens=config.per_file_tokens,
            chars_per_token=config.chars_per_token,
        )
        if config.execute_artifacts:
            execution = attempt_execution(
                snapshot.root,
                limits=config.sandbox.limits(),
                backend=config.sandbox.backend,
                container_image=config.sandbox.container_image,
            )
            _write_execution_log(paper_dir, execution)
    return ArtifactExtras(digest=digest, link_report="\n".join(notes), execution=execution)


def cmd_assess(args) -> int:
    config = _load_run_config(args)
    schema = _load_schema_arg(config.schema_path or None)
    provider = _make_provider(args, config)
    records, skipped_rows = load_corpus(args.manifest, args.cache)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)

    offline = args.stub is not None
    fetch_allowed = config.fetch_artifacts and not args.no_artifacts and not offline
    # offline runs must be byte-identical across invocations, so no wall clock
    stamp = (lambda: "") if offline else now_iso

    todo: list[PaperRecord] = []
    already: list[str] = []
    for record in records:
        if (out / f"{record.paper_id}.json").exists() and not args.force:
            already.append(record.paper_id)
        else:
            todo.append(record)

    failures: list[dict] = [{"paper_id": s.paper_id, "reason": s.reason} for s in skipped_rows]
    per_paper: list[dict] = []
    state_lock = threading.Lock()
    started = stamp()

    def write_state(finished: bool) -> None:
        per_paper.sort(key=lambda d: d["paper_id"])
        failures.sort(key=lambda d: d["paper_id"])
        state = {
            "started": started,
            "finished": stamp() if finished else "",
            "provider": provider.describe(),
            "schema_version": schema.version,
            "n_manifest_rows": len(records) + len(skipped_rows),
            "n_already_present": len(already),
            "processed": sorted(already + [p["paper_id"] for p in per_paper]),
            "unprocessed": failures,
            "sentinel_counts": {
                p["paper_id"]: len(p["sentinel_items"]) for p in per_paper if p["sentinel_items"]
            },
            "papers": per_paper,
        }
        (out / RUN_STATE_FILENAME).write_text(json.dumps(state, indent=2) + "\n")

    def process(record: PaperRecord) -> dict:
        text = extract_text(record.pdf_path, min_chars=config.min_text_chars)
        extras = _gather_artifact_extras(text, record, config, out) if fetch_allowed else None
        assessment, stats = assess_paper(
            provider,
            schema,
            record,
            text,
            extras,
            max_attempts=config.max_attempts,
            context_window_tokens=config.context_window_tokens,
            chars_per_token=config.chars_per_token,
            produced_at="" if offline else None,
        )
        save_assessment(assessment, out)
        return {
            "paper_id": record.paper_id,
            "provider_calls": stats.provider_calls,
            "sentinel_items": stats.sentinel_items,
            "execution_answered": stats.execution_answered,
            "estimated_prompt_tokens": stats.estimated_prompt_tokens,
        }

    def record_result(record: PaperRecord, result: dict | None, exc: Exception | None) -> None:
        with state_lock:
            if result is not None:
                per_paper.append(result)
            if exc is not None:
                reason = f"{type(exc).__name__}: {exc}"
                failures.append({"paper_id": record.paper_id, "reason": reason})
                log.error("%s failed: %s", record.paper_id, reason)
            write_state(finished=False)

    handled = (PdfError, IngestError, FetchError, EvaluatorError, ProviderError)
    if args.workers > 1 and len(todo) > 1:
        with ThreadPoolExecutor(max_workers=args.workers) as pool:
            futures = {pool.submit(process, r): r for r in todo}
            for future in as_completed(futures):
                try:
                    record_result(futures[future], future.result(), None)
                except handled as exc:
                    record_result(futures[future], None, exc)
    else:
        for record in todo:
            try:
                record_result(record, process(record), None)
            except handled as exc:
                record_result(record, None, exc)

    write_state(finished=True)
    sentinel_total = sum(len(p["sentinel_items"]) for p in per_paper)
    print(
        f"assessed {len(per_paper)} paper(s), {len(already)} already present, "
        f"{len(failures)} failed or skipped"
    )
    if sentinel_total:
        print(f"warning: {sentinel_total} item(s) exhausted retries and carry the sentinel value")
    for entry in failures:
        print(f"  {entry['paper_id']}: {entry['reason']}", file=sys.stderr)
    return 2 if failures else 0


def cmd_compare(args) -> int:
    schema = _load_schema_arg(args.schema)
    human = load_assessment_dir(args.human)
    auto = load_assessment_dir(args.auto)
    if not human or not auto:
        empty = args.human if not human else args.auto
        print(f"no assessments found in {empty}", file=sys.stderr)
        return 2
    try:
        report = build_agreement_report(human, auto, schema)
    except NoComparableItemsError as exc:
        print(f"cannot compare {args.human} with {args.auto}: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out)
    written = write_agreement_tables(report, out)
    if not args.no_figures:
        from .figures import render_agreement_figures

        written += render_agreement_figures(report, out)

    kappa = report.overall.kappa
    merged = report.merged.kappa
    print(f"compared {len(report.per_paper_accuracy)} paper(s), {report.n_comparable} answer pairs")
    print(f"accuracy {report.overall_accuracy:.4f}")
    print(f"kappa {kappa:.4f}" if kappa is not None else "kappa undefined")
    print(f"merged kappa {merged:.4f}" if merged is not None else "merged kappa undefined")
    if report.unmatched_human or report.unmatched_auto:
        print(
            f"warning: {len(report.unmatched_human)} human-only and "
            f"{len(report.unmatched_auto)} automated-only paper id(s) were not compared",
            file=sys.stderr,
        )
    print(f"wrote {len(written)} file(s) to {out}")
    return 0


def cmd_report(args) -> int:
    config = _load_run_config(args)
    alpha = args.alpha if args.alpha is not None else config.alpha
    if not (0.0 < alpha < 1.0):
        raise ConfigError(f"alpha must be strictly between 0 and 1, got {alpha}")
    schema = _load_schema_arg(args.schema or config.schema_path or None)
    assessments = load_assessment_dir(args.assessments)
    if not assessments:
        print(f"no assessments found in {args.assessments}", file=sys.stderr)
        return 2
    records, _ = load_corpus(args.manifest)
    analytics = corpus_report(assessments, records, schema, alpha=alpha)
    if analytics.n_papers == 0:
        print(
            f"no assessment in {args.assessments} matches a manifest row in {args.manifest}",
            file=sys.stderr,
        )
        return 2
    out = Path(args.out)
    written = write_corpus_tables(analytics, out)
    if not args.no_figures:
        from .figures import render_corpus_figures

        written += render_corpus_figures(analytics, out)

    scored = [r.completeness for r in analytics.papers if r.completeness is not None]
    mean = sum(scored) / len(scored) if scored else float("nan")
    print(f"{analytics.n_papers} paper(s), mean completeness {mean:.4f}")
    print(f"material available for {analytics.availability_overall:.1%} of papers")
    kw = analytics.completeness_across_years
    if kw is not None:
        signif = "significant" if kw.p_value < alpha else "not significant"
        print(
            f"completeness across years: H={kw.statistic:.4f}, p={kw.p_value:.4f} "
            f"({signif} at alpha={alpha})"
        )
    else:
        print(f"completeness across years: {analytics.completeness_across_years_note}")
    print(f"wrote {len(written)} file(s) to {out}")
    return 0


def cmd_probe(args) -> int:
    config = _load_run_config(args)
    result: dict = {"url": args.url}
    if not Path(args.url).is_dir():
        status = check_link(args.url, config.link_timeout_s)
        result["link"] = {
            "ok": status.ok,
            "status_code": status.status_code,
            "final_url": status.final_url,
            "reason": status.reason,
        }
    dest = args.dest or tempfile.mkdtemp(prefix="reprocheck-artifact-")
    try:
        snapshot = fetch_artifact(args.url, dest, max_bytes=config.artifact_max_bytes)
    except FetchError as exc:
        result["error"] = str(exc)
        print(json.dumps(result, indent=2))
        return 2
    result["snapshot"] = {
        "root": str(snapshot.root),
        "method": snapshot.method,
        "n_files": snapshot.n_files,
        "total_bytes": snapshot.total_bytes,
        "partial": snapshot.partial,
        "modality": classify_modality(snapshot),
    }
    entry = find_entrypoint(snapshot.root)
    result["entrypoint"] = (
        {"source": entry.source, "steps": [list(s) for s in entry.steps]} if entry else None
    )
    if args.execute:
        outcome = attempt_execution(
            snapshot.root,
            limits=config.sandbox.limits(),
            backend=config.sandbox.backend,
            container_image=config.sandbox.container_image,
        )
        result["execution"] = asdict(outcome)
        result["execution"]["entrypoint"] = (
            list(outcome.entrypoint) if outcome.entrypoint else None
        )
    print(json.dumps(result, indent=2))
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose > 1 else
        logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigError, SchemaError, ManifestError, MissingApiKeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
