"""Checklist-based assessment of reproducibility reporting in papers and artifacts."""

__version__ = "0.1.0"

from .checklist import (  # noqa: F401
    AUTOMATED,
    HUMAN,
    SENTINEL_UNPARSEABLE,
    TERNARY,
    Assessment,
    ChecklistItem,
    ChecklistSchema,
    CompletenessScore,
    FieldAnswer,
    completeness,
    default_schema,
    load_assessment,
    load_assessment_dir,
    load_schema,
    reporting_rate,
    save_assessment,
    validate_assessment,
)
