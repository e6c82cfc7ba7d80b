"""Checklist schema, assessment records, and the paper/item level metrics.

The checklist is data, not code: the bundled ``data/checklist.json`` defines
dimensions and items, and alternative schema files can be loaded the same way.
An assessment holds one rater's answers for one paper and is serialized as
``<paper_id>.json``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from typing import IO, Iterable, Mapping

TERNARY = ("Y", "N", "NA")

#: Marker recorded when a provider never produced a parseable in-domain answer.
#: Excluded from every metric denominator; surfaced in run reports instead.
SENTINEL_UNPARSEABLE = "UNPARSEABLE"

HUMAN = "human"
AUTOMATED = "automated"

FIELD_KINDS = ("standard", "best_paper", "artifact", "executable")


class SchemaError(ValueError):
    """Base class for schema document problems."""


class MalformedSchemaError(SchemaError):
    pass


class DuplicateItemIdError(SchemaError):
    pass


class EmptyDomainError(SchemaError):
    pass


class UnknownItemError(KeyError):
    pass


class NonTernaryItemError(ValueError):
    pass


@dataclass(frozen=True)
class ChecklistItem:
    id: str
    dimension: str
    title: str
    criteria_text: str
    values: tuple[str, ...]
    field_kind: str = "standard"
    descriptive: bool = False
    counts_toward_completeness: bool = True

    @property
    def is_ternary(self) -> bool:
        return set(self.values) == set(TERNARY)


@dataclass(frozen=True)
class ChecklistSchema:
    version: str
    dimensions: tuple[str, ...]
    items: tuple[ChecklistItem, ...]
    _by_id: dict[str, ChecklistItem] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_by_id", {it.id: it for it in self.items})

    def item(self, item_id: str) -> ChecklistItem:
        try:
            return self._by_id[item_id]
        except KeyError:
            raise UnknownItemError(item_id) from None

    def __contains__(self, item_id: str) -> bool:
        return item_id in self._by_id

    def ternary_items(self) -> list[ChecklistItem]:
        return [it for it in self.items if it.is_ternary]

    def counting_items(self) -> list[ChecklistItem]:
        return [it for it in self.items if it.counts_toward_completeness]


@dataclass(frozen=True)
class FieldAnswer:
    item_id: str
    value: str
    disambiguation: str = ""


@dataclass(frozen=True)
class Assessment:
    paper_id: str
    rater: str  # HUMAN or AUTOMATED
    answers: Mapping[str, FieldAnswer]
    produced_at: str = ""
    provider_info: Mapping[str, str] | None = None

    def answer_value(self, item_id: str) -> str | None:
        ans = self.answers.get(item_id)
        return ans.value if ans is not None else None


@dataclass(frozen=True)
class ValidationReport:
    """Schema-conformance findings for one assessment.

    Sentinel answers are listed separately: they are expected output of an
    exhausted retry loop, not schema violations, but callers may want to know.
    """

    unknown_items: tuple[str, ...] = ()
    out_of_domain: tuple[tuple[str, str], ...] = ()
    missing_items: tuple[str, ...] = ()
    sentinel_items: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not (self.unknown_items or self.out_of_domain or self.missing_items)


@dataclass(frozen=True)
class CompletenessScore:
    """Fraction of applicable counting items answered Y.

    ``value`` is None (UNDEFINED) when no counting item is applicable; such
    scores serialize as null and are excluded from aggregates.
    """

    yes_count: int
    applicable_count: int

    @property
    def value(self) -> float | None:
        if self.applicable_count == 0:
            return None
        return self.yes_count / self.applicable_count


def _read_bytes(source) -> bytes:
    if isinstance(source, bytes):
        return source
    if isinstance(source, str):
        return source.encode("utf-8")
    if isinstance(source, Path):
        return source.read_bytes()
    if hasattr(source, "read"):
        data = source.read()
        return data.encode("utf-8") if isinstance(data, str) else data
    raise TypeError(f"unsupported schema source: {type(source)!r}")


def load_schema(source: bytes | str | Path | IO) -> ChecklistSchema:
    """Parse and validate a checklist schema document.

    Raises MalformedSchemaError on parse/shape failures, DuplicateItemIdError
    or EmptyDomainError naming the offending item.
    """
    try:
        doc = json.loads(_read_bytes(source).decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedSchemaError(f"schema is not valid JSON: {exc}") from exc

    if not isinstance(doc, dict):
        raise MalformedSchemaError("schema root must be an object")
    for key in ("version", "dimensions", "items"):
        if key not in doc:
            raise MalformedSchemaError(f"schema missing required key {key!r}")

    dimensions = tuple(str(d) for d in doc["dimensions"])
    if len(set(dimensions)) != len(dimensions) or not dimensions:
        raise MalformedSchemaError("dimensions must be a non-empty list of unique names")

    items: list[ChecklistItem] = []
    seen: set[str] = set()
    for raw in doc["items"]:
        try:
            item = ChecklistItem(
                id=str(raw["id"]),
                dimension=str(raw["dimension"]),
                title=str(raw["title"]),
                criteria_text=str(raw.get("criteria", "")),
                values=tuple(str(v) for v in raw["values"]),
                field_kind=str(raw.get("kind", "standard")),
                descriptive=bool(raw.get("descriptive", False)),
                counts_toward_completeness=bool(raw.get("counts_toward_completeness", True)),
            )
        except (KeyError, TypeError) as exc:
            raise MalformedSchemaError(f"malformed item entry: {raw!r} ({exc})") from exc

        if not item.id:
            raise MalformedSchemaError("item with empty id")
        if item.id in seen:
            raise DuplicateItemIdError(item.id)
        seen.add(item.id)
        if len(set(item.values)) < 2:
            raise EmptyDomainError(f"{item.id}: domain needs at least 2 distinct options")
        if item.dimension not in dimensions:
            raise MalformedSchemaError(f"{item.id}: unknown dimension {item.dimension!r}")
        if item.field_kind not in FIELD_KINDS:
            raise MalformedSchemaError(f"{item.id}: unknown field kind {item.field_kind!r}")
        if item.descriptive and item.counts_toward_completeness:
            raise MalformedSchemaError(f"{item.id}: descriptive items cannot count toward completeness")
        if item.counts_toward_completeness and not item.is_ternary:
            raise MalformedSchemaError(f"{item.id}: only Y/N/NA items can count toward completeness")
        items.append(item)

    executable_items = [it for it in items if it.field_kind == "executable"]
    if len(executable_items) > 1:
        raise MalformedSchemaError("at most one item may carry the executable field kind")

    return ChecklistSchema(version=str(doc["version"]), dimensions=dimensions, items=tuple(items))


def default_schema() -> ChecklistSchema:
    """Load the checklist bundled with the package."""
    data = resources.files("reprocheck.data").joinpath("checklist.json").read_bytes()
    return load_schema(data)


def validate_assessment(schema: ChecklistSchema, assessment: Assessment) -> ValidationReport:
    """Check an assessment against a schema; failures are report entries, not faults."""
    unknown: list[str] = []
    out_of_domain: list[tuple[str, str]] = []
    sentinels: list[str] = []
    for item_id, answer in assessment.answers.items():
        if item_id not in schema:
            unknown.append(item_id)
            continue
        if answer.value == SENTINEL_UNPARSEABLE:
            sentinels.append(item_id)
        elif answer.value not in schema.item(item_id).values:
            out_of_domain.append((item_id, answer.value))
    missing = [it.id for it in schema.items if it.id not in assessment.answers]
    return ValidationReport(
        unknown_items=tuple(unknown),
        out_of_domain=tuple(out_of_domain),
        missing_items=tuple(missing),
        sentinel_items=tuple(sentinels),
    )


def completeness(schema: ChecklistSchema, assessment: Assessment) -> CompletenessScore:
    """Per-paper completeness over counting items: Y / (Y + N).

    NA answers, unanswered items, sentinels, and descriptive/categorical items
    stay out of the denominator.
    """
    yes = 0
    applicable = 0
    for item in schema.items:
        if not item.counts_toward_completeness:
            continue
        value = assessment.answer_value(item.id)
        if value == "Y":
            yes += 1
            applicable += 1
        elif value == "N":
            applicable += 1
    return CompletenessScore(yes_count=yes, applicable_count=applicable)


def reporting_rate(
    schema: ChecklistSchema, corpus: Iterable[Assessment], item_id: str
) -> float | None:
    """Per-item fraction of applicable papers answering Y; None when no paper applies."""
    item = schema.item(item_id)  # raises UnknownItemError
    if not item.is_ternary:
        raise NonTernaryItemError(item_id)
    yes = applicable = 0
    for assessment in corpus:
        value = assessment.answer_value(item_id)
        if value == "Y":
            yes += 1
            applicable += 1
        elif value == "N":
            applicable += 1
    if applicable == 0:
        return None
    return yes / applicable


# --- serialization -----------------------------------------------------------


def assessment_to_dict(assessment: Assessment) -> dict:
    return {
        "paper_id": assessment.paper_id,
        "rater": assessment.rater,
        "produced_at": assessment.produced_at,
        "provider_info": dict(assessment.provider_info) if assessment.provider_info else None,
        "answers": {
            item_id: {"value": ans.value, "disambiguation": ans.disambiguation}
            for item_id, ans in assessment.answers.items()
        },
    }


def assessment_from_dict(doc: Mapping) -> Assessment:
    answers = {
        item_id: FieldAnswer(
            item_id=item_id,
            value=str(raw["value"]),
            disambiguation=str(raw.get("disambiguation", "")),
        )
        for item_id, raw in doc.get("answers", {}).items()
    }
    return Assessment(
        paper_id=str(doc["paper_id"]),
        rater=str(doc.get("rater", HUMAN)),
        answers=answers,
        produced_at=str(doc.get("produced_at", "")),
        provider_info=doc.get("provider_info"),
    )


def save_assessment(assessment: Assessment, directory: Path | str) -> Path:
    """Write the assessment as ``<paper_id>.json`` and return the path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    path = directory / f"{assessment.paper_id}.json"
    path.write_text(json.dumps(assessment_to_dict(assessment), indent=2, sort_keys=True) + "\n")
    return path


def load_assessment(path: Path | str) -> Assessment:
    path = Path(path)
    try:
        return assessment_from_dict(json.loads(path.read_text()))
    except (json.JSONDecodeError, KeyError) as exc:
        raise ValueError(f"{path}: not a valid assessment file ({exc})") from exc


RUN_STATE_FILENAME = "run_report.json"  # the batch runner's state, kept beside assessments


def load_assessment_dir(directory: Path | str) -> list[Assessment]:
    """Load every ``*.json`` assessment in a directory, sorted by paper id.

    The batch runner's own state file is skipped; anything else malformed
    still raises, since silently dropping assessments would skew metrics.
    """
    paths = [
        p
        for p in sorted(Path(directory).glob("*.json"))
        if p.name != RUN_STATE_FILENAME and not p.name.startswith(".")
    ]
    out = [load_assessment(p) for p in paths]
    return sorted(out, key=lambda a: a.paper_id)


def now_iso() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")
