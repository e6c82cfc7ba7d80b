"""Corpus loading: the paper manifest, award metadata, PDF text, and link mining."""

from __future__ import annotations

import csv
import json
import logging
import re
from dataclasses import dataclass
from pathlib import Path

from .pdftext import extract_pdf_text

log = logging.getLogger(__name__)

MANIFEST_FIELDS = ("paper_id", "year", "title", "pdf_path")

#: hosts whose links are treated as durable archival locations
PERSISTENT_HOSTS = (
    "doi.org",
    "zenodo.org",
    "figshare.com",
    "osf.io",
    "dataverse.org",
    "archive.org",
    "softwareheritage.org",
    "dryad.org",
)

#: general-purpose code hosting, mutable by nature
CODE_HOSTS = (
    "github.com",
    "gitlab.com",
    "bitbucket.org",
    "sourceforge.net",
    "codeberg.org",
)

_URL_RE = re.compile(r"(?:https?://|www\.)[^\s<>\[\]{}\"']+", re.IGNORECASE)
_TRAILING_PUNCT = ".,;:!?'\")"


class IngestError(Exception):
    pass


class ManifestError(IngestError):
    pass


class CacheError(IngestError):
    pass


class TextTooShortError(IngestError):
    """Extraction technically succeeded but produced too little text to assess."""


@dataclass(frozen=True)
class PaperRecord:
    paper_id: str
    year: int
    title: str
    pdf_path: Path
    # conference metadata, set from the award cache when available
    nominated: bool | None = None
    won: bool | None = None
    supplementary: bool | None = None


@dataclass(frozen=True)
class SkippedPaper:
    paper_id: str
    reason: str


@dataclass(frozen=True)
class ArtifactLink:
    url: str
    host: str
    category: str  # "code_hosting" | "persistent_archive" | "other"
    offset: int = 0  # character position of the match in the source text


def extract_text(pdf_path: Path | str, min_chars: int = 200) -> str:
    """Full running text of a paper; short output means scanned or image-only pages."""
    result = extract_pdf_text(pdf_path)
    for note in result.warnings:
        log.debug("%s: %s", pdf_path, note)
    if len(result.text) < min_chars:
        raise TextTooShortError(
            f"{pdf_path}: extracted {len(result.text)} characters "
            f"(minimum {min_chars}); likely scanned or image-only"
        )
    return result.text


def _host_of(url: str) -> str:
    rest = url.split("://", 1)[-1]
    host = rest.split("/", 1)[0].split(":", 1)[0].lower()
    return host[4:] if host.startswith("www.") else host


def classify_host(url: str, extra_persistent: tuple[str, ...] = ()) -> str:
    host = _host_of(url)
    persistent = PERSISTENT_HOSTS + tuple(extra_persistent)
    if any(host == h or host.endswith("." + h) for h in persistent):
        return "persistent_archive"
    if any(host == h or host.endswith("." + h) for h in CODE_HOSTS):
        return "code_hosting"
    return "other"


def is_persistent_host(url: str, extra_hosts: tuple[str, ...] = ()) -> bool:
    """True for hosts on the archival allowlist; the list is extendable from config."""
    return classify_host(url, extra_persistent=tuple(extra_hosts)) == "persistent_archive"


def _clean_url(raw: str) -> str:
    url = raw
    while url and url[-1] in _TRAILING_PUNCT:
        # keep a closing paren that balances one inside the URL
        if url[-1] == ")" and url.count("(") > url.count(")") - 1:
            break
        url = url[:-1]
    if url.lower().startswith("www."):
        url = "https://" + url
    return url


def extract_urls(text: str, extra_persistent: tuple[str, ...] = ()) -> list[ArtifactLink]:
    """All distinct http(s) links in reading order, with a host category each."""
    seen: dict[str, ArtifactLink] = {}
    for match in _URL_RE.finditer(text):
        url = _clean_url(match.group(0))
        if not url or url in seen:
            continue
        seen[url] = ArtifactLink(
            url=url,
            host=_host_of(url),
            category=classify_host(url, extra_persistent),
            offset=match.start(),
        )
    return list(seen.values())


def load_best_paper_cache(path: Path | str) -> dict[str, dict]:
    """Award metadata keyed by paper id; values hold optional booleans
    ``nominated``, ``won``, and ``supplementary``."""
    path = Path(path)
    if not path.is_file():
        raise CacheError(f"award cache not found: {path}")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise CacheError(f"award cache is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise CacheError("award cache must be a JSON object keyed by paper id")
    for pid, entry in data.items():
        if not isinstance(entry, dict):
            raise CacheError(f"award cache entry for {pid!r} must be an object")
        for key in ("nominated", "won", "supplementary"):
            if key in entry and not isinstance(entry[key], bool):
                raise CacheError(f"award cache entry for {pid!r}: {key} must be a boolean")
    return data


def load_corpus(
    manifest_path: Path | str, cache_path: Path | str | None = None
) -> tuple[list[PaperRecord], list[SkippedPaper]]:
    """Read the corpus manifest, returning usable records and per-row skip reasons.

    Rows are skipped (never silently dropped) for missing fields, non-integer
    years, duplicate ids, or missing PDF files. Relative pdf paths resolve
    against the manifest's directory.
    """
    manifest_path = Path(manifest_path)
    if not manifest_path.is_file():
        raise ManifestError(f"manifest not found: {manifest_path}")
    cache = load_best_paper_cache(cache_path) if cache_path else {}

    records: list[PaperRecord] = []
    skipped: list[SkippedPaper] = []
    seen_ids: set[str] = set()
    with manifest_path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [f for f in MANIFEST_FIELDS if f not in header]
        if missing:
            raise ManifestError(
                f"manifest header must contain {','.join(MANIFEST_FIELDS)}; "
                f"missing {', '.join(missing)}"
            )
        extra = [f for f in header if f not in MANIFEST_FIELDS]
        if extra:
            log.info("manifest has extra columns, ignored: %s", ", ".join(extra))

        for line_no, row in enumerate(reader, start=2):
            pid = (row.get("paper_id") or "").strip()
            label = pid or f"row {line_no}"
            if not pid:
                skipped.append(SkippedPaper(label, "empty paper_id"))
                continue
            if pid in seen_ids:
                skipped.append(SkippedPaper(pid, "duplicate paper_id"))
                continue
            try:
                year = int((row.get("year") or "").strip())
            except ValueError:
                skipped.append(SkippedPaper(pid, f"year is not an integer: {row.get('year')!r}"))
                continue
            raw_path = (row.get("pdf_path") or "").strip()
            if not raw_path:
                skipped.append(SkippedPaper(pid, "empty pdf_path"))
                continue
            pdf_path = Path(raw_path)
            if not pdf_path.is_absolute():
                pdf_path = manifest_path.parent / pdf_path
            if not pdf_path.is_file():
                skipped.append(SkippedPaper(pid, f"pdf not found: {pdf_path}"))
                continue
            seen_ids.add(pid)
            flags = cache.get(pid, {})
            records.append(
                PaperRecord(
                    paper_id=pid,
                    year=year,
                    title=(row.get("title") or "").strip(),
                    pdf_path=pdf_path,
                    nominated=flags.get("nominated"),
                    won=flags.get("won"),
                    supplementary=flags.get("supplementary"),
                )
            )
    for entry in skipped:
        log.warning("skipping %s: %s", entry.paper_id, entry.reason)
    return records, skipped
