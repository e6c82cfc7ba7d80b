import io
import math
import os
import tarfile
import zipfile
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from helpers import init_git_repo
from reprocheck import harness
from reprocheck.harness import (
    ExecutionLimits,
    FetchError,
    attempt_execution,
    build_context_bundle,
    check_link,
    classify_modality,
    container_command,
    estimate_tokens,
    fetch_artifact,
    find_entrypoint,
    snapshot_digest,
    snapshot_from_dir,
    truncate_for_context,
)


class TestTokenBudget:
    def test_exact_multiples_and_remainders(self):
        assert estimate_tokens("") == 0
        assert estimate_tokens("abcd") == 1
        assert estimate_tokens("abcde") == 2
        assert estimate_tokens("abc", chars_per_token=1) == 3

    def test_rejects_nonpositive_ratio(self):
        with pytest.raises(ValueError):
            estimate_tokens("x", chars_per_token=0)

    @given(st.text(max_size=400), st.integers(min_value=1, max_value=8))
    def test_matches_ceiling_division(self, text, cpt):
        assert estimate_tokens(text, cpt) == math.ceil(len(text) / cpt)

    def test_truncation_keeps_exactly_the_budget(self):
        text = "x" * 6000  # 1500 tokens at 4 chars each
        clipped, truncated = truncate_for_context(text, 1000)
        assert truncated
        assert clipped == text[:4000]
        assert estimate_tokens(clipped) == 1000

    def test_short_text_untouched(self):
        clipped, truncated = truncate_for_context("short", 1000)
        assert (clipped, truncated) == ("short", False)

    @given(st.text(max_size=300), st.integers(min_value=1, max_value=50))
    def test_truncation_is_a_prefix_within_budget(self, text, max_tokens):
        clipped, truncated = truncate_for_context(text, max_tokens)
        assert clipped == text[: max_tokens * 4]
        assert truncated == (len(text) > max_tokens * 4)


class TestSnapshot:
    def test_inventory_sorted_and_git_excluded(self, tmp_path):
        (tmp_path / "src").mkdir()
        (tmp_path / "src" / "b.py").write_text("b")
        (tmp_path / "a.txt").write_text("aaaa")
        (tmp_path / ".git").mkdir()
        (tmp_path / ".git" / "config").write_text("internal")
        snap = snapshot_from_dir(tmp_path)
        assert snap.files == ("a.txt", "src/b.py")
        assert snap.total_bytes == 5
        assert snap.n_files == 2
        assert not snap.partial

    def test_symlinks_skipped(self, tmp_path):
        real = tmp_path / "real.txt"
        real.write_text("data")
        (tmp_path / "link.txt").symlink_to(real)
        snap = snapshot_from_dir(tmp_path)
        assert snap.files == ("real.txt",)
        assert snap.total_bytes == 4

    def test_missing_directory(self, tmp_path):
        with pytest.raises(FetchError, match="not a directory"):
            snapshot_from_dir(tmp_path / "ghost")


class TestModality:
    @pytest.mark.parametrize(
        ("names", "expected"),
        [
            (["run.py"], "code_only"),
            (["table.csv"], "data_only"),
            (["run.py", "table.csv"], "code_and_data"),
            (["README.md"], "unspecified"),
        ],
    )
    def test_from_file_inventory(self, tmp_path, names, expected):
        for name in names:
            (tmp_path / name).write_text("x")
        assert classify_modality(snapshot_from_dir(tmp_path)) == expected

    def test_without_snapshot(self):
        assert classify_modality(None, has_supplement=False) == "none"
        assert classify_modality(None, has_supplement=True) == "pdf_only"


class TestContextBundle:
    def test_all_text_files_binary_by_name_only(self, tmp_path):
        (tmp_path / "README.md").write_text("hello readme")
        (tmp_path / "blob.bin").write_bytes(b"\x00\x01\x02rest")
        (tmp_path / "long.txt").write_text("y" * 9000)
        snap = snapshot_from_dir(tmp_path)
        bundle = build_context_bundle(snap, per_file_tokens=1000)
        by_path = {e.path: e for e in bundle.entries}
        assert set(by_path) == {"README.md", "blob.bin", "long.txt"}
        assert by_path["README.md"].content == "hello readme"
        assert not by_path["README.md"].truncated
        assert by_path["blob.bin"].is_text is False
        assert by_path["blob.bin"].content == ""
        assert by_path["blob.bin"].tokens == 0
        assert by_path["long.txt"].truncated
        assert by_path["long.txt"].content == "y" * 4000
        assert bundle.total_tokens == 1000 + estimate_tokens("hello readme")

    def test_digest_sections(self, tmp_path):
        (tmp_path / "notes.txt").write_text("z" * 9000)
        (tmp_path / "model.bin").write_bytes(b"\x00" * 10)
        snap = snapshot_from_dir(tmp_path, origin_url="https://example.com/a.zip")
        digest = snapshot_digest(snap, per_file_tokens=100)
        assert digest.startswith("Artifact from https://example.com/a.zip (2 files, 9010 bytes)")
        assert "--- model.bin (binary, 10 bytes) ---" in digest
        assert "--- notes.txt (truncated) ---" in digest
        assert "[estimated bundle size: 100 tokens]" in digest

    def test_partial_snapshot_flagged_in_digest(self, tmp_path):
        (tmp_path / "a.txt").write_text("a")
        snap = snapshot_from_dir(tmp_path, partial=True)
        assert "incomplete download" in snapshot_digest(snap)


class TestCloneUrl:
    @pytest.mark.parametrize(
        ("url", "clone"),
        [
            ("https://github.com/org/repo", "https://github.com/org/repo.git"),
            ("https://github.com/org/repo.git", "https://github.com/org/repo.git"),
            ("https://github.com/org/repo/tree/main/sub", "https://github.com/org/repo.git"),
            ("https://github.com/org", "https://github.com/org"),
        ],
    )
    def test_normalization(self, url, clone):
        assert harness._clone_url(url) == clone


class TestCheckLink:
    def test_head_success(self, http_server):
        http_server.serve_bytes("/data", b"payload")
        status = check_link(http_server.url("/data"))
        assert status.ok
        assert status.status_code == 200
        assert status.reason == ""
        assert status.checked_at
        assert http_server.requests[0][0] == "HEAD"

    def test_four_oh_four(self, http_server):
        status = check_link(http_server.url("/absent"))
        assert not status.ok
        assert status.status_code == 404
        assert "404" in status.reason

    def test_head_refused_falls_back_to_get(self, http_server):
        def gated(handler):
            if handler.command == "HEAD":
                handler.send_response(403)
                handler.send_header("Content-Length", "0")
                handler.end_headers()
            else:
                handler.send_response(200)
                handler.send_header("Content-Length", "2")
                handler.end_headers()
                handler.wfile.write(b"ok")

        http_server.routes["/gated"] = gated
        status = check_link(http_server.url("/gated"))
        assert status.ok
        assert [method for method, _ in http_server.requests] == ["HEAD", "GET"]

    def test_redirect_followed(self, http_server):
        http_server.serve_bytes("/final", b"here")

        def hop(handler):
            handler.send_response(302)
            handler.send_header("Location", http_server.url("/final"))
            handler.send_header("Content-Length", "0")
            handler.end_headers()

        http_server.routes["/moved"] = hop
        status = check_link(http_server.url("/moved"))
        assert status.ok
        assert status.final_url.endswith("/final")

    def test_connection_refused(self):
        status = check_link("http://127.0.0.1:1/nothing", timeout_s=2)
        assert not status.ok
        assert status.status_code is None
        assert status.reason


class TestFetchArtifact:
    def test_local_directory_passthrough(self, tmp_path):
        src = tmp_path / "artifact"
        src.mkdir()
        (src / "run.py").write_text("print(1)")
        snap = fetch_artifact(str(src), tmp_path / "dest")
        assert snap.method == "local_dir"
        assert snap.root == src
        assert snap.files == ("run.py",)

    def test_git_clone_of_repository(self, tmp_path, monkeypatch):
        origin = init_git_repo(
            tmp_path / "origin", {"README.md": "# demo\n", "src/main.py": "print(1)\n"}
        )
        monkeypatch.setattr(harness, "classify_host", lambda url: "code_hosting")
        monkeypatch.setattr(harness, "_clone_url", lambda url: url)
        snap = fetch_artifact(f"file://{origin}", tmp_path / "dest")
        assert snap.method == "git_clone"
        assert snap.root == tmp_path / "dest" / "repo"
        assert set(snap.files) == {"README.md", "src/main.py"}

    def test_git_clone_failure(self, tmp_path, monkeypatch):
        monkeypatch.setattr(harness, "classify_host", lambda url: "code_hosting")
        monkeypatch.setattr(harness, "_clone_url", lambda url: url)
        with pytest.raises(FetchError, match="git clone"):
            fetch_artifact(f"file://{tmp_path}/void", tmp_path / "dest")

    def test_zip_download_unpacks_and_skips_traversal(self, tmp_path, http_server):
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w") as zf:
            zf.writestr("pkg/code.py", "print('hi')")
            zf.writestr("data.csv", "a,b\n1,2\n")
            zf.writestr("../evil.txt", "escape attempt")
        http_server.serve_bytes("/release.zip", buf.getvalue(), content_type="application/zip")
        dest = tmp_path / "dest"
        snap = fetch_artifact(http_server.url("/release.zip"), dest)
        assert snap.method == "archive_download"
        assert snap.root == dest / "contents"
        assert set(snap.files) == {"pkg/code.py", "data.csv"}
        assert not list(tmp_path.rglob("evil.txt"))

    def test_tarball_download(self, tmp_path, http_server):
        buf = io.BytesIO()
        with tarfile.open(fileobj=buf, mode="w:gz") as tf:
            payload = b"results = 42\n"
            info = tarfile.TarInfo("analysis/run.py")
            info.size = len(payload)
            tf.addfile(info, io.BytesIO(payload))
        http_server.serve_bytes("/release.tar.gz", buf.getvalue())
        snap = fetch_artifact(http_server.url("/release.tar.gz"), tmp_path / "dest")
        assert snap.method == "archive_download"
        assert snap.files == ("analysis/run.py",)

    def test_plain_file_download(self, tmp_path, http_server):
        http_server.serve_bytes("/weights.bin", b"plain payload bytes")
        dest = tmp_path / "dest"
        snap = fetch_artifact(http_server.url("/weights.bin"), dest)
        assert snap.method == "file_download"
        assert snap.files == ("weights.bin",)
        assert (dest / "weights.bin").read_bytes() == b"plain payload bytes"

    def test_download_stops_at_size_ceiling(self, tmp_path, http_server):
        http_server.serve_bytes("/big.bin", b"z" * 1000)
        snap = fetch_artifact(http_server.url("/big.bin"), tmp_path / "dest", max_bytes=100)
        assert snap.partial
        assert snap.total_bytes == 100

    def test_unpack_stops_at_size_ceiling(self, tmp_path, http_server):
        buf = io.BytesIO()
        with zipfile.ZipFile(buf, "w", compression=zipfile.ZIP_DEFLATED) as zf:
            zf.writestr("first.txt", "a" * 600)
            zf.writestr("second.txt", "b" * 600)
        http_server.serve_bytes("/caps.zip", buf.getvalue())
        snap = fetch_artifact(http_server.url("/caps.zip"), tmp_path / "dest", max_bytes=1000)
        assert snap.partial
        assert snap.files == ("first.txt",)

    def test_http_error(self, tmp_path, http_server):
        with pytest.raises(FetchError, match="download of"):
            fetch_artifact(http_server.url("/gone"), tmp_path / "dest")


class TestFindEntrypoint:
    def test_readme_command_wins(self, tmp_path):
        (tmp_path / "train.py").write_text("print('training')")
        (tmp_path / "main.py").write_text("print('fallback')")
        (tmp_path / "README.md").write_text(
            "# Demo\n\nInstall first:\n\n    pip install -r requirements.txt\n"
            "\nThen run:\n\n    $ python train.py --epochs 1\n"
        )
        entry = find_entrypoint(tmp_path)
        assert entry.source == "readme_command"
        assert entry.steps == (("python3", "train.py", "--epochs", "1"),)

    def test_install_lines_skipped(self, tmp_path):
        (tmp_path / "setup.py").write_text("")
        (tmp_path / "README.md").write_text("python setup.py install\n")
        assert find_entrypoint(tmp_path) is None

    def test_unrunnable_readme_command_falls_through(self, tmp_path):
        (tmp_path / "README.md").write_text("python3 missing.py\n")
        (tmp_path / "run.py").write_text("print(2)")
        entry = find_entrypoint(tmp_path)
        assert entry.source == "entry_file"
        assert entry.steps == (("python3", "run.py"),)

    def test_shell_entry_file(self, tmp_path):
        (tmp_path / "main.sh").write_text("echo hi")
        assert find_entrypoint(tmp_path).steps == (("bash", "main.sh"),)

    def test_build_script_requests_binary_scan(self, tmp_path):
        (tmp_path / "build.sh").write_text("gcc -o tool tool.c")
        entry = find_entrypoint(tmp_path)
        assert entry.source == "build_script"
        assert entry.scan_for_binary

    def test_makefile(self, tmp_path):
        (tmp_path / "Makefile").write_text("all:\n\ttrue\n")
        entry = find_entrypoint(tmp_path)
        assert entry.steps == (("make",),)
        assert entry.scan_for_binary

    def test_nothing_recognizable(self, tmp_path):
        (tmp_path / "data.txt").write_text("numbers")
        assert find_entrypoint(tmp_path) is None


class TestAttemptExecution:
    def test_clean_exit(self, tmp_path):
        (tmp_path / "main.py").write_text("print('finished ok')")
        result = attempt_execution(tmp_path, ExecutionLimits(time_limit_s=10))
        assert result.verdict == "ran_to_completion"
        assert result.returncode == 0
        assert "finished ok" in result.stdout_tail
        assert result.entrypoint == ("python3", "main.py")

    def test_nonzero_exit(self, tmp_path):
        (tmp_path / "main.py").write_text("import sys; sys.exit(3)")
        result = attempt_execution(tmp_path, ExecutionLimits(time_limit_s=10))
        assert result.verdict == "failed"
        assert result.returncode == 3

    def test_timeout_bounded_by_limit_plus_slack(self, tmp_path):
        (tmp_path / "main.py").write_text("import time; time.sleep(30)")
        limits = ExecutionLimits(time_limit_s=1)
        result = attempt_execution(tmp_path, limits)
        assert result.verdict == "timeout"
        assert result.returncode is None
        assert result.wall_time_s <= limits.time_limit_s + harness._EXTRA_WALL_SLACK_S

    def test_no_entrypoint(self, tmp_path):
        (tmp_path / "notes.txt").write_text("nothing runnable")
        result = attempt_execution(tmp_path)
        assert result.verdict == "no_entrypoint"
        assert result.entrypoint is None

    def test_build_then_run_produced_binary(self, tmp_path):
        (tmp_path / "build.sh").write_text(
            "printf '#!/bin/sh\\necho built-output\\n' > tool\nchmod +x tool\n"
        )
        result = attempt_execution(tmp_path, ExecutionLimits(time_limit_s=10))
        assert result.verdict == "ran_to_completion"
        assert result.entrypoint == ("./tool",)
        assert "built-output" in result.stdout_tail

    def test_home_is_redirected_into_the_sandbox(self, tmp_path):
        (tmp_path / "main.sh").write_text('echo scratch > "$HOME/marker.txt"\n')
        result = attempt_execution(tmp_path, ExecutionLimits(time_limit_s=10))
        assert result.verdict == "ran_to_completion"
        assert (tmp_path / "marker.txt").is_file()

    def test_output_tails_are_capped(self, tmp_path):
        (tmp_path / "main.py").write_text("print('x' * 5000 + 'END')")
        limits = ExecutionLimits(time_limit_s=10, max_output_bytes=100)
        result = attempt_execution(tmp_path, limits)
        assert len(result.stdout_tail) <= 100
        assert result.stdout_tail.endswith("END\n")

    def test_memory_limit_enforced(self, tmp_path):
        (tmp_path / "main.py").write_text("block = bytearray(512 * 1024 * 1024)")
        limits = ExecutionLimits(time_limit_s=10, memory_mb=128)
        result = attempt_execution(tmp_path, limits)
        assert result.verdict == "failed"

    def test_container_backend_without_engine(self, tmp_path, monkeypatch):
        (tmp_path / "main.py").write_text("print(1)")
        monkeypatch.setattr(harness, "_find_container_engine", lambda: None)
        result = attempt_execution(tmp_path, backend="container")
        assert result.verdict == "sandbox_unavailable"
        assert "no container engine" in result.stderr_tail

    def test_unknown_backend(self, tmp_path):
        (tmp_path / "main.py").write_text("print(1)")
        with pytest.raises(ValueError, match="unknown sandbox backend"):
            attempt_execution(tmp_path, backend="hypervisor")


class TestContainerCommand:
    def test_argv_shape(self, tmp_path):
        limits = ExecutionLimits(memory_mb=512)
        argv = container_command("docker", "img:1", tmp_path, ("python3", "main.py"), limits)
        assert argv == [
            "docker", "run", "--rm", "--network=none", "--memory=512m",
            "--cpus=1", "--pids-limit=256",
            "-v", f"{Path(tmp_path).resolve()}:/workspace",
            "-w", "/workspace",
            "img:1", "python3", "main.py",
        ]
