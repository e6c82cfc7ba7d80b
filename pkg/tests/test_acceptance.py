"""Acceptance gate: one printed pass/fail line per shipping criterion.

Each test prints "[PASS] ..." or "[FAIL] ..." for its criterion; pytest's
report addopts surface those lines, so the gate reads as a checklist.
Stochastic criteria use seeds verified to sit well inside their bands.
"""

import contextlib
import hashlib
import json
import os
import random
import socket
import time
from itertools import combinations
from pathlib import Path

import pytest

from helpers import build_assessment, make_corpus
from reprocheck.analysis import (
    ConfusionMatrix,
    accuracy,
    build_agreement_report,
    cohen_kappa,
    corpus_report,
    kappa_merged,
)
from reprocheck.checklist import (
    TERNARY,
    completeness,
    default_schema,
    load_assessment_dir,
    reporting_rate,
    save_assessment,
)
from reprocheck.cli import main as cli_main
from reprocheck.evaluator import ArtifactExtras, assess_paper
from reprocheck.harness import (
    ExecutionLimits,
    attempt_execution,
    build_context_bundle,
    estimate_tokens,
    snapshot_from_dir,
)
from reprocheck.ingest import PaperRecord, load_corpus
from reprocheck.providers import StubProvider
from reprocheck.stats import kruskal_wallis, mann_whitney_u
from test_stats import enumerate_exact_p


@contextlib.contextmanager
def criterion(name):
    try:
        yield
    except BaseException:
        print(f"[FAIL] {name}")
        raise
    print(f"[PASS] {name}")


def matrix_from_pairs(pairs, labels=TERNARY):
    index = {label: k for k, label in enumerate(labels)}
    counts = [[0] * len(labels) for _ in labels]
    for h, a in pairs:
        counts[index[h]][index[a]] += 1
    return ConfusionMatrix(labels=tuple(labels), counts=tuple(tuple(r) for r in counts))


def kappa_from_pairs(pairs, labels):
    n = len(pairs)
    p_o = sum(h == a for h, a in pairs) / n
    p_e = sum(
        (sum(h == label for h, _ in pairs) / n) * (sum(a == label for _, a in pairs) / n)
        for label in labels
    )
    if p_e >= 1.0:
        return 1.0 if p_o == 1.0 else None
    return (p_o - p_e) / (1 - p_e)


def close(got, want, tol):
    if got is None or want is None:
        return got is None and want is None
    return abs(got - want) <= tol


def test_metric_oracle_suite():
    with criterion(
        "metric oracle: accuracy/kappa/merged-kappa match brute force on "
        "500 random rater pairs within 1e-12, under 5 s"
    ):
        start = time.perf_counter()
        rng = random.Random(7)
        for _ in range(500):
            n_items = rng.randint(1, 50)
            pairs = [(rng.choice(TERNARY), rng.choice(TERNARY)) for _ in range(n_items)]
            cm = matrix_from_pairs(pairs)
            assert close(accuracy(cm), sum(h == a for h, a in pairs) / n_items, 1e-12)
            assert close(cohen_kappa(cm).kappa, kappa_from_pairs(pairs, TERNARY), 1e-12)
            folded = [
                ("Y" if h == "Y" else "rest", "Y" if a == "Y" else "rest") for h, a in pairs
            ]
            assert close(
                kappa_merged(cm).kappa, kappa_from_pairs(folded, ("Y", "rest")), 1e-12
            )
        assert time.perf_counter() - start < 5.0


def test_worked_kappa_example():
    with criterion("worked example: kappa 0.6774 and merged kappa 0.6000, within 1e-4"):
        cm = ConfusionMatrix(TERNARY, ((4, 1, 0), (1, 2, 0), (0, 0, 2)))
        assert abs(cohen_kappa(cm).kappa - 0.6774) <= 1e-4
        assert abs(kappa_merged(cm).kappa - 0.6000) <= 1e-4


def test_echo_stub_end_to_end(tmp_path, monkeypatch, capsys):
    with criterion(
        "echo stub end to end: assess then compare on a 3-paper corpus gives "
        "accuracy 1.0 and kappa 1.0, offline, under 10 s"
    ):
        start = time.perf_counter()
        schema = default_schema()
        corpus = make_corpus(tmp_path / "corpus", schema)
        human_dir = tmp_path / "human"
        for pid, values in corpus.answers.items():
            save_assessment(build_assessment(pid, "human", values), human_dir)

        def no_network(*args, **kwargs):
            raise AssertionError("network use attempted during an offline run")

        monkeypatch.setattr(socket, "socket", no_network)
        monkeypatch.setattr(socket, "create_connection", no_network)

        auto_dir = tmp_path / "auto"
        code = cli_main([
            "assess", "--manifest", str(corpus.manifest), "--out", str(auto_dir),
            "--stub", str(corpus.answers_path),
        ])
        assert code == 0
        capsys.readouterr()
        code = cli_main([
            "compare", "--human", str(human_dir), "--auto", str(auto_dir),
            "--out", str(tmp_path / "cmp"), "--no-figures",
        ])
        assert code == 0
        stdout = capsys.readouterr().out
        assert "accuracy 1.0000" in stdout
        assert "kappa 1.0000" in stdout
        assert "merged kappa 1.0000" in stdout
        assert time.perf_counter() - start < 10.0


def test_random_rater_calibration():
    with criterion(
        "random-rater calibration: uniform answers against a fixed rater over "
        "10000 ternary items give accuracy 0.33 +- 0.02 and kappa 0 +- 0.03"
    ):
        rng = random.Random(0)
        fixed = [rng.choice(TERNARY) for _ in range(10_000)]
        uniform = [rng.choice(TERNARY) for _ in range(10_000)]
        cm = matrix_from_pairs(list(zip(fixed, uniform)))
        assert abs(accuracy(cm) - 0.33) <= 0.02
        assert abs(cohen_kappa(cm).kappa - 0.0) <= 0.03


def test_nonparametric_tests():
    with criterion(
        "nonparametric tests: exact Mann-Whitney p equals full enumeration for "
        "every split up to 10 values, Kruskal-Wallis H = 2.4 +- 1e-9, and both "
        "false-positive rates sit in [0.03, 0.07] at alpha 0.05, under 60 s"
    ):
        start = time.perf_counter()
        for total in range(2, 11):
            values = list(range(1, total + 1))
            for m in range(1, total):
                for combo in combinations(values, m):
                    a = list(combo)
                    b = [v for v in values if v not in combo]
                    result = mann_whitney_u(a, b)
                    assert result.approach == "exact_enumeration"
                    assert result.p_value == enumerate_exact_p(a, b)

        kw = kruskal_wallis([[1, 2], [3, 4]])
        assert abs(kw.statistic - 2.4) <= 1e-9

        rng = random.Random(0)
        mwu_hits = sum(
            mann_whitney_u(
                [rng.random() for _ in range(15)], [rng.random() for _ in range(15)]
            ).p_value < 0.05
            for _ in range(1000)
        )
        kw_hits = sum(
            kruskal_wallis([[rng.random() for _ in range(15)] for _ in range(3)]).p_value < 0.05
            for _ in range(1000)
        )
        assert 0.03 <= mwu_hits / 1000 <= 0.07
        assert 0.03 <= kw_hits / 1000 <= 0.07
        assert time.perf_counter() - start < 60.0


def test_completeness_and_reporting_rate_recount():
    with criterion(
        "completeness and reporting rates match an independent recount on 200 "
        "random assessments within 1e-12, and inserting NA answers never moves "
        "a defined completeness score"
    ):
        schema = default_schema()
        counting_ids = {item.id for item in schema.counting_items()}
        rng = random.Random(13)
        assessments = []
        for k in range(200):
            chosen = rng.sample(schema.items, rng.randint(0, len(schema.items)))
            values = {item.id: rng.choice(list(item.values)) for item in chosen}
            assessment = build_assessment(f"p{k}", "automated", values)
            assessments.append(assessment)

            yes = sum(1 for i, v in values.items() if i in counting_ids and v == "Y")
            no = sum(1 for i, v in values.items() if i in counting_ids and v == "N")
            score = completeness(schema, assessment)
            assert score.yes_count == yes and score.applicable_count == yes + no
            expected = None if yes + no == 0 else yes / (yes + no)
            assert close(score.value, expected, 1e-12)

            padded = dict(values)
            for item in schema.items:
                padded.setdefault(item.id, "NA")
            after = completeness(schema, build_assessment(f"p{k}", "automated", padded))
            assert close(after.value, score.value, 1e-12)

        for item in schema.ternary_items():
            yes = applicable = 0
            for assessment in assessments:
                value = assessment.answer_value(item.id)
                if value in ("Y", "N"):
                    applicable += 1
                    yes += value == "Y"
            expected = None if applicable == 0 else yes / applicable
            assert close(reporting_rate(schema, assessments, item.id), expected, 1e-12)


def test_sandbox_contract(tmp_path):
    with criterion(
        "sandbox contract: exit-0 fixture answers Y, a sleeper times out as N "
        "within limit + 5 s, and files outside the sandbox root keep their hash"
    ):
        schema = default_schema()
        record = PaperRecord(
            paper_id="sbx", year=2024, title="T", pdf_path=tmp_path / "unused.pdf"
        )
        echo = StubProvider.from_assessments(
            [build_assessment("sbx", "human", {i.id: list(i.values)[0] for i in schema.items})]
        )

        host_file = tmp_path / "host_data.txt"
        host_file.write_text("must not change")
        before = hashlib.sha256(host_file.read_bytes()).hexdigest()

        clean = tmp_path / "clean"
        clean.mkdir()
        (clean / "main.sh").write_text(
            'echo run > "$HOME/home_write.txt"\n'
            'echo run > "$TMPDIR/tmp_write.txt"\n'
            "echo run > local_write.txt\n"
        )
        limits = ExecutionLimits(time_limit_s=10)
        result = attempt_execution(clean, limits)
        assert result.verdict == "ran_to_completion"
        assessment, _ = assess_paper(
            echo, schema, record, "BODY",
            ArtifactExtras(digest="d", execution=result), produced_at="",
        )
        assert assessment.answers["artifact_executable"].value == "Y"

        sleeper = tmp_path / "sleeper"
        sleeper.mkdir()
        (sleeper / "main.py").write_text("import time; time.sleep(30)")
        result = attempt_execution(sleeper, limits)
        assert result.verdict == "timeout"
        assert result.wall_time_s <= limits.time_limit_s + 5.0
        assessment, _ = assess_paper(
            echo, schema, record, "BODY",
            ArtifactExtras(digest="d", execution=result), produced_at="",
        )
        assert assessment.answers["artifact_executable"].value == "N"

        assert hashlib.sha256(host_file.read_bytes()).hexdigest() == before
        assert (clean / "home_write.txt").is_file()
        assert (clean / "tmp_write.txt").is_file()
        assert (clean / "local_write.txt").is_file()


def test_truncation_contract(tmp_path):
    with criterion(
        "truncation contract: a 1500-token file enters the bundle as exactly "
        "its first 1000 tokens"
    ):
        text = "".join(rng_char for rng_char in ("abcdefgh"[k % 8] for k in range(6000)))
        assert estimate_tokens(text) == 1500
        (tmp_path / "big.txt").write_text(text)
        bundle = build_context_bundle(snapshot_from_dir(tmp_path))
        entry = bundle.entries[0]
        assert entry.truncated
        assert entry.content == text[:4000]
        assert entry.tokens == 1000


def test_replication_against_published_annotations():
    root = Path(os.environ.get("REPROCHECK_REPLICATION_DATA", "")) if os.environ.get(
        "REPROCHECK_REPLICATION_DATA"
    ) else Path(__file__).resolve().parent.parent / "replication_data"
    if not root.is_dir():
        print("[SKIP] replication dataset not present; criterion skipped, not failed")
        pytest.skip("replication dataset not present")
    with criterion(
        "replication: published annotations give kappa 0.67 +- 0.01, merged "
        "0.75 +- 0.01, mean completeness 0.62 +- 0.01, availability 36.9% +- 0.1pp"
    ):
        schema = default_schema()
        human = load_assessment_dir(root / "human")
        auto = load_assessment_dir(root / "auto")
        agreement = build_agreement_report(human, auto, schema)
        assert abs(agreement.overall.kappa - 0.67) <= 0.01
        assert abs(agreement.merged.kappa - 0.75) <= 0.01

        records, _ = load_corpus(root / "manifest.csv")
        analytics = corpus_report(human, records, schema)
        scored = [r.completeness for r in analytics.papers if r.completeness is not None]
        assert abs(sum(scored) / len(scored) - 0.62) <= 0.01
        assert abs(analytics.availability_overall - 0.369) <= 0.001
