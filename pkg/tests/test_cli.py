"""CLI subcommands end to end on a temp database."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from redink.cli import main
from redink.export import import_records
from redink.store import Store

RECORDS = "\n".join(
    [
        json.dumps(
            {
                "record": "rubric",
                "id": "r-rival",
                "short_name": "rivalry",
                "criterion": "Discuss the concept of rivalry.",
                "historic_feedback": ["Discuss the concepts of rivalry in the context of the news article."],
                "keyword_groups": [["rival"]],
            }
        ),
        json.dumps(
            {
                "record": "rubric",
                "id": "r-finite",
                "short_name": "finiteness",
                "criterion": "Identify the resource as finite.",
                "historic_feedback": [],
                "keyword_groups": [["finite"]],
            }
        ),
        json.dumps(
            {
                "record": "assignment",
                "id": "a1",
                "title": "Fishing",
                "prompt_text": "Analyze the article.",
                "rubric_ids": ["r-rival", "r-finite"],
                "few_shot_examples": [],
            }
        ),
        json.dumps(
            {
                "record": "essay",
                "id": "e1",
                "assignment_id": "a1",
                "author_alias": "anon",
                "text": "Tuna is rival. The stock is finite.",
            }
        ),
        json.dumps(
            {
                "record": "essay",
                "id": "e2",
                "assignment_id": "a1",
                "author_alias": "anon-2",
                "text": "Tuna is rival only.",
            }
        ),
    ]
) + "\n"


@pytest.fixture
def records_file(tmp_path) -> Path:
    path = tmp_path / "catalog.jsonl"
    path.write_text(RECORDS, encoding="utf-8")
    return path


def test_ingest_then_run_then_export(tmp_path, records_file, capsys):
    db = tmp_path / "cli.db"
    assert main(["ingest", "--records", str(records_file), "--db", str(db)]) == 0
    out = capsys.readouterr().out
    assert '"rubrics": 2' in out

    export_path = tmp_path / "run.jsonl"
    assert (
        main(
            [
                "run",
                "--db",
                str(db),
                "--assignment",
                "a1",
                "--provider",
                "mock",
                "--mode",
                "full_ai",
                "--out",
                str(export_path),
            ]
        )
        == 0
    )
    summary = json.loads(capsys.readouterr().out)
    assert summary["comments"] == 4
    assert summary["failures"] == 0
    assert summary["status"] == "complete"

    imported = import_records(export_path.read_text(encoding="utf-8"))
    assert sum(len(r.comments) for r in imported.essay_results) == 4

    run_id = summary["run_id"]
    out_path = tmp_path / "again.jsonl"
    assert main(["export", "--db", str(db), "--run", run_id, "--out", str(out_path)]) == 0
    assert out_path.read_text(encoding="utf-8") == export_path.read_text(encoding="utf-8")

    annotated = tmp_path / "e1.html"
    assert (
        main(
            [
                "export",
                "--db",
                str(db),
                "--run",
                run_id,
                "--essay",
                "e1",
                "--annotated",
                str(annotated),
            ]
        )
        == 0
    )
    assert "<mark" in annotated.read_text(encoding="utf-8")


def test_ingest_rejects_invalid_assignment(tmp_path, capsys):
    bad = (
        json.dumps(
            {
                "record": "assignment",
                "id": "a1",
                "title": "t",
                "prompt_text": "p",
                "rubric_ids": ["missing-rubric"],
            }
        )
        + "\n"
    )
    records = tmp_path / "bad.jsonl"
    records.write_text(bad, encoding="utf-8")
    db = tmp_path / "bad.db"
    assert main(["ingest", "--records", str(records), "--db", str(db)]) == 2
    assert "unknown rubric id" in capsys.readouterr().err


def test_lint_command_reports_warnings(tmp_path, capsys):
    records = tmp_path / "lint.jsonl"
    records.write_text(
        json.dumps(
            {
                "record": "rubric",
                "id": "r-vague",
                "short_name": "v",
                "criterion": "Explain the concept of artificially scarce goods conceptually.",
            }
        )
        + "\n",
        encoding="utf-8",
    )
    assert main(["lint", "--records", str(records)]) == 0
    out = capsys.readouterr().out
    assert "unspecified_depth" in out
    assert "r-vague" in out


def test_run_unknown_assignment(tmp_path, records_file, capsys):
    db = tmp_path / "cli.db"
    main(["ingest", "--records", str(records_file), "--db", str(db)])
    capsys.readouterr()
    assert main(["run", "--db", str(db), "--assignment", "a9"]) == 2
    assert "unknown assignment" in capsys.readouterr().err


def test_run_subset_of_essays(tmp_path, records_file, capsys):
    db = tmp_path / "cli.db"
    main(["ingest", "--records", str(records_file), "--db", str(db)])
    capsys.readouterr()
    assert main(["run", "--db", str(db), "--assignment", "a1", "--essay", "e2"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["essays"] == 1
    assert summary["comments"] == 2


def test_report_agreement_after_review(tmp_path, records_file, capsys):
    db = tmp_path / "cli.db"
    main(["ingest", "--records", str(records_file), "--db", str(db)])
    capsys.readouterr()
    main(["run", "--db", str(db), "--assignment", "a1"])
    run_summary = json.loads(capsys.readouterr().out)

    store = Store(db)
    comments = store.comments_for_run(run_summary["run_id"])
    for comment in comments:
        store.record_action(comment.id, "ta-1", "accept_ai")

    out_csv = tmp_path / "agreement.csv"
    assert (
        main(
            [
                "report",
                "--db",
                str(db),
                "--assignment",
                "a1",
                "--agreement",
                "AI",
                "ta-1",
                "--out",
                str(out_csv),
            ]
        )
        == 0
    )
    text = out_csv.read_text(encoding="utf-8")
    assert "kappa" in text
    assert "1.0" in text  # accepted everything -> perfect agreement

    assert main(["report", "--db", str(db), "--assignment", "a1", "--consistency", "ta-1"]) == 0
    out = capsys.readouterr().out
    assert "flip_rate" in out
