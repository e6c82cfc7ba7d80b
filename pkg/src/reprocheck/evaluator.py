"""Per-paper assessment pipeline: one provider question per checklist item.

Each item is asked in isolation against the paper's full text (no chunking;
papers whose text cannot fit the context window are rejected up front).
Artifact items additionally see the artifact bundle or an explicit no-artifact
marker, award items see the cached conference metadata, and the executable
item is answered from the sandbox verdict directly whenever one exists,
because a measured outcome beats a model's guess.
"""

from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field

from .checklist import (
    AUTOMATED,
    SENTINEL_UNPARSEABLE,
    Assessment,
    ChecklistItem,
    ChecklistSchema,
    FieldAnswer,
    now_iso,
)
from .harness import ExecutionResult, estimate_tokens
from .ingest import PaperRecord
from .providers import Provider, ProviderRequest

log = logging.getLogger(__name__)

DEFAULT_MAX_ATTEMPTS = 3
DEFAULT_CONTEXT_WINDOW_TOKENS = 128_000

_EXECUTION_VERDICT_ANSWERS = {
    "ran_to_completion": "Y",
    "failed": "N",
    "timeout": "N",
    "no_entrypoint": "N",
    # sandbox_unavailable falls through to the provider
}


class EvaluatorError(Exception):
    pass


class MissingExtrasError(EvaluatorError):
    """An artifact question was built with neither a bundle nor the no-artifact marker."""


class ContextOverflowError(EvaluatorError):
    def __init__(self, paper_id: str, estimated: int, window: int):
        super().__init__(
            f"{paper_id}: estimated {estimated} prompt tokens exceed the "
            f"{window}-token context window; paper text is sent whole, never chunked"
        )
        self.paper_id = paper_id
        self.estimated = estimated
        self.window = window


@dataclass(frozen=True)
class ArtifactExtras:
    """Evidence gathered once per paper and shared by all artifact questions.

    ``absent=True`` marks the explicit no-artifact variant used when a paper
    links to nothing fetchable; artifact questions are still asked, with that
    fact stated instead of a bundle.
    """

    digest: str = ""
    link_report: str = ""
    execution: ExecutionResult | None = None
    absent: bool = False


NO_ARTIFACT_EXTRAS = ArtifactExtras(
    link_report="No artifact could be fetched for this paper.", absent=True
)


@dataclass
class PaperRunStats:
    paper_id: str
    provider_calls: int = 0
    sentinel_items: list[str] = field(default_factory=list)
    execution_answered: int = 0
    estimated_prompt_tokens: int = 0


_PREAMBLE = (
    "You are auditing how a research paper reports its experimental work. "
    "Judge only from the material quoted below; do not assume practices the "
    "text does not state."
)

_NUDGE = (
    "Your previous reply could not be parsed. Respond with only the JSON "
    "object described above, nothing else."
)


def _response_contract(item: ChecklistItem) -> str:
    values = ", ".join(f'"{v}"' for v in item.values)
    meanings = ""
    if item.is_ternary:
        meanings = (
            " Y means the paper satisfies the item, N means it does not, "
            "NA means the item does not apply to this paper."
        )
    return (
        "Reply with a single JSON object of the form "
        '{"answer": <value>, "disambiguation": <short justification>} '
        f"where <value> is exactly one of: {values}.{meanings}"
    )


def _award_note(record: PaperRecord | None) -> str:
    if record is None:
        return "No cached award metadata is available for this paper."
    entry = {
        "nominated": record.nominated,
        "won": record.won,
        "supplementary": record.supplementary,
    }
    if all(v is None for v in entry.values()):
        return "No cached award metadata is available for this paper."
    return json.dumps(entry)


def build_field_prompt(
    item: ChecklistItem,
    paper_text: str,
    extras: ArtifactExtras | None = None,
    record: PaperRecord | None = None,
    nudge: bool = False,
) -> str:
    """Compose the single-item request: criteria, response contract, evidence.

    Standard items see the paper text alone; best_paper items additionally see
    the cached award record; artifact and executable items see the artifact
    bundle (or the explicit no-artifact marker) and any execution verdict.
    """
    parts = [_PREAMBLE]
    parts.append(f"Dimension: {item.dimension}")
    parts.append(f"Question: {item.title}")
    if item.criteria_text:
        parts.append(f"Criteria: {item.criteria_text}")
    parts.append(_response_contract(item))
    if nudge:
        parts.append(_NUDGE)
    if item.field_kind == "best_paper":
        parts.append("Cached award metadata: " + _award_note(record))
    if item.field_kind in ("artifact", "executable"):
        if extras is None:
            raise MissingExtrasError(
                f"{item.id}: artifact question needs a bundle or the no-artifact marker"
            )
        if extras.link_report:
            parts.append("Link check results:\n" + extras.link_report)
        if extras.digest:
            parts.append("Linked artifact contents:\n" + extras.digest)
        if extras.execution is not None:
            parts.append(
                "Sandbox execution verdict: "
                f"{extras.execution.verdict} (exit code {extras.execution.returncode})"
            )
    parts.append("Paper text:\n" + paper_text)
    return "\n\n".join(parts)


_FENCE_RE = re.compile(r"```[a-zA-Z0-9_-]*")
_ANSWER_LINE_RE = re.compile(r"(?im)^\s*(?:final\s+)?answer\s*[:\-]\s*(.+)$")
_TERNARY_SYNONYMS = {
    "YES": "Y",
    "NO": "N",
    "N/A": "NA",
    "NOT APPLICABLE": "NA",
    "NOT-APPLICABLE": "NA",
}


def _json_candidates(raw: str):
    """Yield each balanced {...} span in the reply, outermost first."""
    depth = 0
    start = -1
    for i, ch in enumerate(raw):
        if ch == "{":
            if depth == 0:
                start = i
            depth += 1
        elif ch == "}" and depth > 0:
            depth -= 1
            if depth == 0:
                yield raw[start : i + 1]


def _clean(raw: str) -> str:
    text = _FENCE_RE.sub(" ", raw)
    return text.strip().strip("\"'`*").strip().rstrip(".").strip()


def parse_field_response(raw: str, item: ChecklistItem) -> tuple[str, str] | None:
    """Extract (value, disambiguation) from a reply, or None when unusable.

    The expected body is a JSON object with "answer" and "disambiguation";
    surrounding prose and markdown fencing are tolerated. Bare values and
    Y/N/NA synonyms are accepted as a fallback since providers drift.
    """
    if not raw:
        return None
    by_upper = {v.upper(): v for v in item.values}
    if item.is_ternary:
        for synonym, canon in _TERNARY_SYNONYMS.items():
            by_upper.setdefault(synonym, canon)

    for span in _json_candidates(raw):
        try:
            doc = json.loads(span)
        except json.JSONDecodeError:
            continue
        if not isinstance(doc, dict):
            continue
        answer = doc.get("answer", doc.get("value"))
        if isinstance(answer, str) and answer.strip().upper() in by_upper:
            note = doc.get("disambiguation", "")
            return by_upper[answer.strip().upper()], note if isinstance(note, str) else ""

    candidates = [_clean(raw)]
    line = _ANSWER_LINE_RE.search(raw)
    if line:
        candidates.insert(0, _clean(line.group(1)))
    for candidate in candidates:
        if candidate.upper() in by_upper:
            return by_upper[candidate.upper()], ""

    hits: list[tuple[int, str]] = []
    scan = "\n".join(candidates)
    for token, canon in by_upper.items():
        pattern = r"(?<![A-Za-z])" + re.escape(token) + r"(?![A-Za-z])"
        match = re.search(pattern, scan, re.IGNORECASE)
        if match:
            hits.append((match.start(), canon))
    if hits:
        hits.sort()
        return hits[0][1], ""
    return None


def evaluate_field(
    provider: Provider,
    item: ChecklistItem,
    paper_text: str,
    paper_id: str,
    extras: ArtifactExtras | None = None,
    record: PaperRecord | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
) -> tuple[FieldAnswer, int]:
    """Ask one item, retrying unparseable replies; exhausted retries yield the
    sentinel so downstream metrics can exclude the item without guessing."""
    raw = ""
    for attempt in range(1, max_attempts + 1):
        prompt = build_field_prompt(item, paper_text, extras, record, nudge=attempt > 1)
        raw = provider.complete(
            ProviderRequest(prompt=prompt, paper_id=paper_id, item_id=item.id, attempt=attempt)
        )
        parsed = parse_field_response(raw, item)
        if parsed is not None:
            value, note = parsed
            return FieldAnswer(item_id=item.id, value=value, disambiguation=note), attempt
    log.warning("%s/%s: unparseable after %d attempts", paper_id, item.id, max_attempts)
    note = f"unparseable after {max_attempts} attempts; last reply: {raw[:120]!r}"
    return (
        FieldAnswer(item_id=item.id, value=SENTINEL_UNPARSEABLE, disambiguation=note),
        max_attempts,
    )


def preflight_tokens(
    schema: ChecklistSchema,
    paper_text: str,
    extras: ArtifactExtras,
    record: PaperRecord | None = None,
    chars_per_token: int = 4,
) -> int:
    """Estimated size of the largest single-item prompt for this paper."""
    largest = max(
        (build_field_prompt(item, paper_text, extras, record) for item in schema.items),
        key=len,
        default="",
    )
    return estimate_tokens(largest, chars_per_token)


def assess_paper(
    provider: Provider,
    schema: ChecklistSchema,
    record: PaperRecord,
    paper_text: str,
    extras: ArtifactExtras | None = None,
    max_attempts: int = DEFAULT_MAX_ATTEMPTS,
    context_window_tokens: int = DEFAULT_CONTEXT_WINDOW_TOKENS,
    chars_per_token: int = 4,
    produced_at: str | None = None,
) -> tuple[Assessment, PaperRunStats]:
    """Answer every checklist item for one paper.

    The artifact bundle is computed once by the caller and reused across all
    artifact questions; the executable item short-circuits to the sandbox
    verdict when execution was attempted. The total context size is checked
    before the first provider call. ``produced_at`` overrides the wall-clock
    stamp; offline runs pass "" so repeated runs emit identical bytes.
    """
    if extras is None:
        extras = NO_ARTIFACT_EXTRAS
    stats = PaperRunStats(paper_id=record.paper_id)
    stats.estimated_prompt_tokens = preflight_tokens(
        schema, paper_text, extras, record, chars_per_token
    )
    if stats.estimated_prompt_tokens > context_window_tokens:
        raise ContextOverflowError(
            record.paper_id, stats.estimated_prompt_tokens, context_window_tokens
        )

    answers: dict[str, FieldAnswer] = {}
    for item in schema.items:
        if (
            item.field_kind == "executable"
            and extras.execution is not None
            and extras.execution.verdict in _EXECUTION_VERDICT_ANSWERS
        ):
            answers[item.id] = FieldAnswer(
                item_id=item.id,
                value=_EXECUTION_VERDICT_ANSWERS[extras.execution.verdict],
                disambiguation=f"sandbox verdict: {extras.execution.verdict}",
            )
            stats.execution_answered += 1
            continue

        answer, attempts = evaluate_field(
            provider, item, paper_text, record.paper_id, extras, record, max_attempts
        )
        stats.provider_calls += attempts
        if answer.value == SENTINEL_UNPARSEABLE:
            stats.sentinel_items.append(item.id)
        answers[item.id] = answer

    assessment = Assessment(
        paper_id=record.paper_id,
        rater=AUTOMATED,
        answers=answers,
        produced_at=now_iso() if produced_at is None else produced_at,
        provider_info={"provider": provider.describe(), "schema_version": schema.version},
    )
    return assessment, stats
