"""Plain helpers shared by the test modules; pytest fixtures live in conftest."""

from __future__ import annotations

import csv
import json
import random
import subprocess
from pathlib import Path
from types import SimpleNamespace

from reportlab.pdfgen import canvas

from reprocheck.checklist import Assessment, FieldAnswer


def build_assessment(paper_id, rater, values, produced_at=""):
    answers = {iid: FieldAnswer(item_id=iid, value=v) for iid, v in values.items()}
    return Assessment(paper_id=paper_id, rater=rater, answers=answers, produced_at=produced_at)


def random_answers(schema, rng):
    """One in-domain value per schema item."""
    return {item.id: rng.choice(list(item.values)) for item in schema.items}


def write_pdf(path, lines, encrypt=None, page_size=(612, 792)):
    path = Path(path)
    c = canvas.Canvas(str(path), pagesize=page_size, encrypt=encrypt)
    y = page_size[1] - 72
    for line in lines:
        if y < 72:
            c.showPage()
            y = page_size[1] - 72
        c.drawString(72, y, line)
        y -= 14
    c.save()
    return path


def write_manifest_rows(path, rows):
    """Corpus manifest CSV with the standard header."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["paper_id", "year", "title", "pdf_path"])
        writer.writerows(rows)
    return path


def make_corpus(root, schema, seed=11, years=(2021, 2022, 2023), extra_lines=None):
    """Three-paper corpus on disk: PDFs, manifest, canned answers, award cache."""
    root = Path(root)
    pdf_dir = root / "pdfs"
    pdf_dir.mkdir(parents=True)
    rng = random.Random(seed)
    paper_ids = ["alpha", "beta", "gamma"]
    rows = []
    for pid, year in zip(paper_ids, years):
        lines = [f"Paper {pid}: a study of solver behaviour on benchmark instances."]
        lines += [
            f"Section {k}: the experimental protocol is described in detail here."
            for k in range(1, 25)
        ]
        if extra_lines:
            lines += extra_lines.get(pid, [])
        write_pdf(pdf_dir / f"{pid}.pdf", lines)
        rows.append((pid, year, f"Paper {pid}", str(pdf_dir / f"{pid}.pdf")))

    manifest = root / "manifest.csv"
    with manifest.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["paper_id", "year", "title", "pdf_path"])
        writer.writerows(rows)

    answers = {
        pid: {it.id: rng.choice(list(it.values)) for it in schema.items} for pid in paper_ids
    }
    answers_path = root / "answers.json"
    answers_path.write_text(json.dumps(answers, indent=2))

    cache = {
        "alpha": {"nominated": True, "won": True, "supplementary": False},
        "beta": {"nominated": True, "won": False, "supplementary": True},
        "gamma": {"nominated": False, "won": False, "supplementary": False},
    }
    cache_path = root / "cache.json"
    cache_path.write_text(json.dumps(cache, indent=2))

    return SimpleNamespace(
        root=root,
        pdf_dir=pdf_dir,
        manifest=manifest,
        answers=answers,
        answers_path=answers_path,
        cache_path=cache_path,
        paper_ids=paper_ids,
    )


def init_git_repo(root, files):
    """A one-commit git repository holding the given {relative path: text} files."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    for name, content in files.items():
        p = root / name
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(content)
    env = {
        "PATH": "/usr/local/bin:/usr/bin:/bin",
        "HOME": str(root),
        "GIT_AUTHOR_NAME": "t",
        "GIT_AUTHOR_EMAIL": "t@example.org",
        "GIT_COMMITTER_NAME": "t",
        "GIT_COMMITTER_EMAIL": "t@example.org",
    }

    def git(*args):
        subprocess.run(["git", *args], cwd=root, check=True, capture_output=True, env=env)

    git("init", "-q")
    git("add", "-A")
    git("commit", "-qm", "init")
    return root
