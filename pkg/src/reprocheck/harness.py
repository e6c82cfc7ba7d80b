"""Artifact handling: link probing, fetching, inventory, and sandboxed execution.

The execution side is deliberately conservative: artifacts are untrusted code,
so runs happen in a fresh session with rlimits, a scrubbed environment, and a
hard wall-clock deadline; the whole process group is killed on timeout. A
container backend can be selected when an engine is available.
"""

from __future__ import annotations

import logging
import os
import re
import resource
import shlex
import shutil
import signal
import subprocess
import tarfile
import tempfile
import time
import zipfile
from dataclasses import dataclass
from pathlib import Path

import requests

from .analysis import MODALITIES
from .checklist import now_iso
from .ingest import classify_host, is_persistent_host  # noqa: F401  (re-export)

log = logging.getLogger(__name__)

CODE_EXTENSIONS = {
    ".py", ".r", ".jl", ".c", ".h", ".cc", ".cpp", ".hpp", ".java", ".sh",
    ".m", ".rs", ".go", ".scala", ".f", ".f90", ".cs", ".rb", ".pl", ".lua", ".kt",
}
DATA_EXTENSIONS = {
    ".csv", ".tsv", ".json", ".jsonl", ".dat", ".arff", ".xlsx", ".xls",
    ".parquet", ".npz", ".npy", ".pkl", ".sqlite", ".db", ".hdf5", ".h5", ".mat",
}

VERDICTS = ("ran_to_completion", "failed", "timeout", "no_entrypoint", "sandbox_unavailable")

_EXTRA_WALL_SLACK_S = 5.0


class FetchError(Exception):
    pass


@dataclass(frozen=True)
class LinkStatus:
    url: str
    ok: bool
    status_code: int | None
    final_url: str | None
    reason: str
    checked_at: str = ""  # availability is a statement about one point in time


def check_link(url: str, timeout_s: float = 20.0, session=None) -> LinkStatus:
    """Reachability probe: HEAD first, falling back to GET when HEAD is refused."""
    http = session or requests
    stamp = now_iso()
    try:
        resp = http.head(url, timeout=timeout_s, allow_redirects=True)
        if resp.status_code in (403, 404, 405, 501):
            resp = http.get(url, timeout=timeout_s, allow_redirects=True, stream=True)
            resp.close()
        ok = 200 <= resp.status_code < 300
        return LinkStatus(
            url=url,
            ok=ok,
            status_code=resp.status_code,
            final_url=resp.url,
            reason="" if ok else f"http status {resp.status_code}",
            checked_at=stamp,
        )
    except requests.RequestException as exc:
        return LinkStatus(
            url=url, ok=False, status_code=None, final_url=None,
            reason=str(exc), checked_at=stamp,
        )


@dataclass(frozen=True)
class ArtifactSnapshot:
    origin_url: str
    root: Path
    files: tuple[str, ...]  # relative posix paths, .git internals excluded
    total_bytes: int
    partial: bool  # size ceiling reached; contents incomplete
    method: str  # "git_clone" | "archive_download" | "file_download" | "local_dir"

    @property
    def n_files(self) -> int:
        return len(self.files)


def _inventory(root: Path) -> tuple[tuple[str, ...], int]:
    files: list[str] = []
    total = 0
    for path in sorted(root.rglob("*")):
        rel = path.relative_to(root)
        if ".git" in rel.parts:
            continue
        if path.is_file() and not path.is_symlink():
            files.append(rel.as_posix())
            total += path.stat().st_size
    return tuple(files), total


def snapshot_from_dir(
    root: Path | str,
    origin_url: str = "",
    method: str = "local_dir",
    partial: bool = False,
) -> ArtifactSnapshot:
    root = Path(root)
    if not root.is_dir():
        raise FetchError(f"not a directory: {root}")
    files, total = _inventory(root)
    return ArtifactSnapshot(
        origin_url=origin_url, root=root, files=files, total_bytes=total,
        partial=partial, method=method,
    )


def _clone_url(url: str) -> str:
    """Normalize a repository page URL to something git can clone."""
    scheme, _, rest = url.partition("://")
    host, _, path = rest.partition("/")
    parts = [p for p in path.split("/") if p]
    if len(parts) >= 2:
        repo = parts[1]
        if repo.endswith(".git"):
            repo = repo[:-4]
        return f"{scheme}://{host}/{parts[0]}/{repo}.git"
    return url


def _safe_member(name: str) -> bool:
    parts = Path(name).parts
    return bool(parts) and not Path(name).is_absolute() and ".." not in parts


def _unpack_zip(archive: Path, dest: Path, max_bytes: int) -> bool:
    partial = False
    extracted = 0
    with zipfile.ZipFile(archive) as zf:
        for member in zf.infolist():
            if member.is_dir() or not _safe_member(member.filename):
                continue
            if extracted + member.file_size > max_bytes:
                partial = True
                break
            target = dest / member.filename
            target.parent.mkdir(parents=True, exist_ok=True)
            with zf.open(member) as src, target.open("wb") as out:
                shutil.copyfileobj(src, out)
            extracted += member.file_size
    return partial


def _unpack_tar(archive: Path, dest: Path, max_bytes: int) -> bool:
    partial = False
    extracted = 0
    with tarfile.open(archive) as tf:
        for member in tf:
            if not member.isfile() or not _safe_member(member.name):
                continue
            if extracted + member.size > max_bytes:
                partial = True
                break
            src = tf.extractfile(member)
            if src is None:
                continue
            target = dest / member.name
            target.parent.mkdir(parents=True, exist_ok=True)
            with target.open("wb") as out:
                shutil.copyfileobj(src, out)
            extracted += member.size
    return partial


def fetch_artifact(
    url: str,
    dest_dir: Path | str,
    max_bytes: int = 512 * 1024 * 1024,
    timeout_s: float = 60.0,
    git_timeout_s: float = 300.0,
) -> ArtifactSnapshot:
    """Materialize an artifact locally: git clone for code hosting, HTTP otherwise.

    Archives (zip, tar, tar.gz) are unpacked with path-traversal members
    rejected; downloads stop at ``max_bytes`` and the snapshot is flagged
    partial instead of failing.
    """
    dest = Path(dest_dir)
    dest.mkdir(parents=True, exist_ok=True)

    local = Path(url)
    if local.is_dir():
        return snapshot_from_dir(local, origin_url=url, method="local_dir")

    if classify_host(url) == "code_hosting":
        clone = _clone_url(url)
        target = dest / "repo"
        proc = subprocess.run(
            ["git", "clone", "--depth", "1", clone, str(target)],
            capture_output=True, text=True, timeout=git_timeout_s,
        )
        if proc.returncode != 0:
            raise FetchError(f"git clone of {clone} failed: {proc.stderr.strip()[:500]}")
        snap = snapshot_from_dir(target, origin_url=url, method="git_clone")
        if snap.total_bytes > max_bytes:
            return ArtifactSnapshot(
                origin_url=url, root=snap.root, files=snap.files,
                total_bytes=snap.total_bytes, partial=True, method="git_clone",
            )
        return snap

    try:
        resp = requests.get(url, timeout=timeout_s, stream=True, allow_redirects=True)
        resp.raise_for_status()
    except requests.RequestException as exc:
        raise FetchError(f"download of {url} failed: {exc}") from exc

    name = Path(url.split("?", 1)[0].rstrip("/")).name or "download"
    partial = False
    with tempfile.NamedTemporaryFile(dir=dest, delete=False) as tmp:
        written = 0
        for chunk in resp.iter_content(chunk_size=65536):
            if written + len(chunk) > max_bytes:
                tmp.write(chunk[: max_bytes - written])
                partial = True
                break
            tmp.write(chunk)
            written += len(chunk)
        tmp_path = Path(tmp.name)

    head = tmp_path.open("rb").read(4)
    unpack_root = dest / "contents"
    try:
        if head[:4] == b"PK\x03\x04" and not partial:
            unpack_root.mkdir(exist_ok=True)
            partial = _unpack_zip(tmp_path, unpack_root, max_bytes)
            tmp_path.unlink()
            return snapshot_from_dir(
                unpack_root, origin_url=url, method="archive_download", partial=partial
            )
        if head[:2] == b"\x1f\x8b" and not partial:
            unpack_root.mkdir(exist_ok=True)
            partial = _unpack_tar(tmp_path, unpack_root, max_bytes)
            tmp_path.unlink()
            return snapshot_from_dir(
                unpack_root, origin_url=url, method="archive_download", partial=partial
            )
    except (zipfile.BadZipFile, tarfile.TarError) as exc:
        raise FetchError(f"archive from {url} could not be unpacked: {exc}") from exc

    final = dest / name
    tmp_path.rename(final)
    return snapshot_from_dir(dest, origin_url=url, method="file_download", partial=partial)


def classify_modality(snapshot: ArtifactSnapshot | None, has_supplement: bool = False) -> str:
    """Artifact modality from a snapshot's file inventory (see MODALITIES)."""
    if snapshot is None:
        return "pdf_only" if has_supplement else "none"
    suffixes = {Path(f).suffix.lower() for f in snapshot.files}
    has_code = bool(suffixes & CODE_EXTENSIONS)
    has_data = bool(suffixes & DATA_EXTENSIONS)
    if has_code and has_data:
        return "code_and_data"
    if has_code:
        return "code_only"
    if has_data:
        return "data_only"
    return "unspecified"


# --- context budgeting -------------------------------------------------------


def estimate_tokens(text: str, chars_per_token: int = 4) -> int:
    """Size estimate under the fixed characters-per-token approximation."""
    if chars_per_token <= 0:
        raise ValueError("chars_per_token must be positive")
    return (len(text) + chars_per_token - 1) // chars_per_token


def truncate_for_context(
    text: str, max_tokens: int, chars_per_token: int = 4
) -> tuple[str, bool]:
    """Clip text to a token budget; returns (text, whether anything was cut)."""
    budget = max_tokens * chars_per_token
    if len(text) <= budget:
        return text, False
    return text[:budget], True


_ENTRY_NAMES = ("main.py", "run.py", "app.py", "main.sh", "run.sh")


@dataclass(frozen=True)
class BundleEntry:
    path: str
    size_bytes: int
    is_text: bool
    content: str  # truncated text; empty for binary files
    truncated: bool
    tokens: int


@dataclass(frozen=True)
class ContextBundle:
    entries: tuple[BundleEntry, ...]
    total_tokens: int


def build_context_bundle(
    snapshot: ArtifactSnapshot,
    per_file_tokens: int = 1000,
    chars_per_token: int = 4,
) -> ContextBundle:
    """Every text file's first token budget, in stable path order.

    Binary files appear by name and size only. The bundle reports its total
    estimated tokens so callers can pre-check the context window.
    """
    entries: list[BundleEntry] = []
    total = 0
    for rel in snapshot.files:  # inventory is already sorted
        path = snapshot.root / rel
        try:
            raw = path.read_bytes()
        except OSError:
            continue
        if b"\x00" in raw[:1024]:
            entries.append(BundleEntry(rel, len(raw), False, "", False, 0))
            continue
        text = raw.decode("utf-8", errors="replace")
        clipped, truncated = truncate_for_context(text, per_file_tokens, chars_per_token)
        tokens = estimate_tokens(clipped, chars_per_token)
        total += tokens
        entries.append(BundleEntry(rel, len(raw), True, clipped, truncated, tokens))
    return ContextBundle(entries=tuple(entries), total_tokens=total)


def snapshot_digest(
    snapshot: ArtifactSnapshot,
    per_file_tokens: int = 1000,
    chars_per_token: int = 4,
) -> str:
    """Render a snapshot as provider context: header plus the context bundle."""
    bundle = build_context_bundle(snapshot, per_file_tokens, chars_per_token)
    lines = [
        f"Artifact from {snapshot.origin_url or snapshot.root} "
        f"({snapshot.n_files} files, {snapshot.total_bytes} bytes"
        f"{', incomplete download' if snapshot.partial else ''}):",
    ]
    for entry in bundle.entries:
        if not entry.is_text:
            lines.append(f"\n--- {entry.path} (binary, {entry.size_bytes} bytes) ---")
            continue
        suffix = " (truncated)" if entry.truncated else ""
        lines.append(f"\n--- {entry.path}{suffix} ---")
        lines.append(entry.content)
    lines.append(f"\n[estimated bundle size: {bundle.total_tokens} tokens]")
    return "\n".join(lines)


# --- sandboxed execution -----------------------------------------------------


@dataclass(frozen=True)
class ExecutionLimits:
    time_limit_s: int = 300
    memory_mb: int = 2048
    max_output_bytes: int = 65536
    max_written_mb: int = 512


@dataclass(frozen=True)
class Entrypoint:
    steps: tuple[tuple[str, ...], ...]
    source: str  # "readme_command" | "entry_file" | "build_script"
    scan_for_binary: bool = False


@dataclass(frozen=True)
class ExecutionResult:
    verdict: str
    entrypoint: tuple[str, ...] | None
    returncode: int | None
    stdout_tail: str
    stderr_tail: str
    wall_time_s: float


_CMD_RE = re.compile(
    r"^\s*(?:\$\s+)?((?:python3?|bash|sh|make)\b[^\n]*|\./\S+[^\n]*)\s*$", re.MULTILINE
)


def _command_is_runnable(parts: list[str], root: Path) -> bool:
    head = parts[0]
    if head in ("python", "python3", "bash", "sh"):
        scripts = [p for p in parts[1:] if not p.startswith("-")]
        return bool(scripts) and (root / scripts[0]).is_file()
    if head == "make":
        return any((root / n).is_file() for n in ("Makefile", "makefile", "GNUmakefile"))
    if head.startswith("./"):
        target = root / head[2:]
        return target.is_file() and os.access(target, os.X_OK)
    return False


def find_entrypoint(root: Path | str) -> Entrypoint | None:
    """Best-effort run command: README instructions, then conventional entry
    files, then a build script whose product gets a chance to run."""
    root = Path(root)
    readmes = sorted(
        p for p in root.iterdir() if p.is_file() and p.name.lower().startswith("readme")
    )
    for readme in readmes:
        text = readme.read_text(errors="replace")
        for match in _CMD_RE.finditer(text):
            line = match.group(1).strip()
            if "install" in line or "pip" in line.split()[0]:
                continue
            try:
                parts = shlex.split(line)
            except ValueError:
                continue
            if parts and _command_is_runnable(parts, root):
                if parts[0] == "python":
                    parts[0] = "python3"
                return Entrypoint(steps=(tuple(parts),), source="readme_command")
    for name in _ENTRY_NAMES:
        if (root / name).is_file():
            runner = "python3" if name.endswith(".py") else "bash"
            return Entrypoint(steps=((runner, name),), source="entry_file")
    if (root / "build.sh").is_file():
        return Entrypoint(steps=(("bash", "build.sh"),), source="build_script", scan_for_binary=True)
    if any((root / n).is_file() for n in ("Makefile", "makefile", "GNUmakefile")):
        return Entrypoint(steps=(("make",),), source="build_script", scan_for_binary=True)
    return None


def _scrubbed_env(root: Path) -> dict[str, str]:
    return {
        "PATH": "/usr/local/bin:/usr/bin:/bin",
        "HOME": str(root),
        "LANG": "C.UTF-8",
        "LC_ALL": "C.UTF-8",
        "TMPDIR": str(root),
    }


def _rlimit_preexec(limits: ExecutionLimits):
    cpu = max(1, int(limits.time_limit_s))
    mem = limits.memory_mb * 1024 * 1024
    fsize = limits.max_written_mb * 1024 * 1024

    def apply() -> None:
        resource.setrlimit(resource.RLIMIT_CPU, (cpu, cpu + 5))
        resource.setrlimit(resource.RLIMIT_AS, (mem, mem))
        resource.setrlimit(resource.RLIMIT_FSIZE, (fsize, fsize))

    return apply


def _run_step(
    command: tuple[str, ...], root: Path, limits: ExecutionLimits, deadline: float
) -> tuple[str, int | None, str, str]:
    """Run one command in its own session; returns (verdict, rc, stdout, stderr)."""
    budget = deadline - time.monotonic()
    if budget <= 0:
        return "timeout", None, "", ""
    try:
        proc = subprocess.Popen(
            list(command),
            cwd=root,
            env=_scrubbed_env(root),
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            start_new_session=True,
            preexec_fn=_rlimit_preexec(limits),
        )
    except OSError as exc:
        return "failed", None, "", f"could not start {command[0]}: {exc}"
    try:
        out, err = proc.communicate(timeout=budget)
    except subprocess.TimeoutExpired:
        try:
            os.killpg(proc.pid, signal.SIGKILL)
        except ProcessLookupError:
            pass
        out, err = proc.communicate()
        return "timeout", None, _tail(out, limits), _tail(err, limits)
    verdict = "ran_to_completion" if proc.returncode == 0 else "failed"
    return verdict, proc.returncode, _tail(out, limits), _tail(err, limits)


def _tail(raw: bytes | None, limits: ExecutionLimits) -> str:
    if not raw:
        return ""
    return raw[-limits.max_output_bytes :].decode("utf-8", errors="replace")


def container_command(
    engine: str,
    image: str,
    root: Path | str,
    command: tuple[str, ...],
    limits: ExecutionLimits,
) -> list[str]:
    """Argument vector for running one step inside a container engine."""
    return [
        engine,
        "run",
        "--rm",
        "--network=none",
        f"--memory={limits.memory_mb}m",
        "--cpus=1",
        "--pids-limit=256",
        "-v",
        f"{Path(root).resolve()}:/workspace",
        "-w",
        "/workspace",
        image,
        *command,
    ]


def _find_container_engine() -> str | None:
    for engine in ("docker", "podman"):
        if shutil.which(engine):
            return engine
    return None


def attempt_execution(
    root: Path | str,
    limits: ExecutionLimits | None = None,
    backend: str = "subprocess",
    container_image: str = "artifact-sandbox:latest",
) -> ExecutionResult:
    """Try to run an artifact and report how far it got.

    The verdict reflects the last step attempted; a build script that succeeds
    gets its produced executable run as a follow-up step when one appears.
    """
    root = Path(root)
    limits = limits or ExecutionLimits()
    entry = find_entrypoint(root)
    if entry is None:
        return ExecutionResult("no_entrypoint", None, None, "", "", 0.0)

    engine = None
    if backend == "container":
        engine = _find_container_engine()
        if engine is None:
            return ExecutionResult(
                "sandbox_unavailable", entry.steps[0], None, "",
                "no container engine on PATH", 0.0,
            )
    elif backend != "subprocess":
        raise ValueError(f"unknown sandbox backend: {backend}")

    # the budget is exactly time_limit_s; _EXTRA_WALL_SLACK_S only absorbs
    # kill and teardown overhead so total wall time stays <= limit + slack
    start = time.monotonic()
    deadline = start + limits.time_limit_s
    before = {f for f in root.iterdir()} if entry.scan_for_binary else set()

    verdict, rc, out, err = "failed", None, "", ""
    last_cmd = entry.steps[0]
    for step in entry.steps:
        last_cmd = step
        if engine:
            verdict, rc, out, err = _run_container_step(
                engine, container_image, step, root, limits, deadline
            )
        else:
            verdict, rc, out, err = _run_step(step, root, limits, deadline)
        if verdict != "ran_to_completion":
            break

    if verdict == "ran_to_completion" and entry.scan_for_binary:
        produced = [
            p for p in root.iterdir()
            if p not in before and p.is_file() and os.access(p, os.X_OK)
        ]
        if produced:
            last_cmd = (f"./{produced[0].name}",)
            step = (str(produced[0]),)
            if engine:
                verdict, rc, out2, err2 = _run_container_step(
                    engine, container_image, (f"./{produced[0].name}",), root, limits, deadline
                )
            else:
                verdict, rc, out2, err2 = _run_step(step, root, limits, deadline)
            out, err = out + out2, err + err2

    return ExecutionResult(
        verdict=verdict,
        entrypoint=last_cmd,
        returncode=rc,
        stdout_tail=out,
        stderr_tail=err,
        wall_time_s=time.monotonic() - start,
    )


def _run_container_step(
    engine: str,
    image: str,
    command: tuple[str, ...],
    root: Path,
    limits: ExecutionLimits,
    deadline: float,
) -> tuple[str, int | None, str, str]:
    budget = deadline - time.monotonic()
    if budget <= 0:
        return "timeout", None, "", ""
    argv = container_command(engine, image, root, command, limits)
    try:
        proc = subprocess.run(argv, capture_output=True, timeout=budget)
    except subprocess.TimeoutExpired as exc:
        return (
            "timeout", None,
            _tail(exc.stdout, limits), _tail(exc.stderr, limits),
        )
    except OSError as exc:
        return "sandbox_unavailable", None, "", str(exc)
    verdict = "ran_to_completion" if proc.returncode == 0 else "failed"
    return verdict, proc.returncode, _tail(proc.stdout, limits), _tail(proc.stderr, limits)
