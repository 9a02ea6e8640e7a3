"""Batch CLI: ingest, lint, run, export, report, serve."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import AppConfig, load_config
from .export import export_annotated, export_records, render_page
from .gateway import AuditLog, MockProvider, RemoteProvider
from .lint import lint_rubric
from .model import validate_assignment
from .pipeline import PipelineConfig, PipelineMode, run_batch
from .records import RecordError, parse_records
from .reports import (
    NoData,
    agreement,
    agreement_csv,
    consistency_csv,
    consistency_report,
    verdict_maps_from_reviews,
)
from .store import Store


def _print_json(payload) -> None:
    print(json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False))


def cmd_ingest(args: argparse.Namespace) -> int:
    try:
        catalog = parse_records(Path(args.records).read_text(encoding="utf-8"))
    except RecordError as exc:
        print(f"ingest error: {exc}", file=sys.stderr)
        return 2
    store = Store(args.db)
    problems = 0
    for assignment in catalog.assignments.values():
        errors = validate_assignment(assignment, catalog.rubrics)
        for error in errors:
            print(f"assignment {assignment.id}: {error}", file=sys.stderr)
        problems += len(errors)
    if problems:
        return 2
    for rubric in catalog.rubrics.values():
        store.save_rubric(rubric)
        for warning in lint_rubric(rubric):
            print(f"lint {rubric.id}: {warning.dimension.value}: {warning.message}")
    for assignment in catalog.assignments.values():
        store.save_assignment(assignment)
    for essay in catalog.essays.values():
        store.save_essay(essay)
    _print_json(
        {
            "rubrics": len(catalog.rubrics),
            "assignments": len(catalog.assignments),
            "essays": len(catalog.essays),
        }
    )
    return 0


def cmd_lint(args: argparse.Namespace) -> int:
    try:
        catalog = parse_records(Path(args.records).read_text(encoding="utf-8"))
    except RecordError as exc:
        print(f"lint error: {exc}", file=sys.stderr)
        return 2
    rubrics = catalog.rubrics.values()
    if args.rubric:
        rubrics = [r for r in rubrics if r.id == args.rubric]
    total = 0
    for rubric in rubrics:
        for warning in lint_rubric(rubric):
            print(f"{rubric.id}: {warning.dimension.value}: {warning.message}")
            total += 1
    print(f"{total} warning(s)")
    return 0


def _provider(name: str):
    if name == "mock":
        return MockProvider()
    if name == "remote":
        return RemoteProvider()
    raise SystemExit(f"unknown provider {name!r}")


def cmd_run(args: argparse.Namespace) -> int:
    store = Store(args.db)
    assignment = store.get_assignment(args.assignment)
    if assignment is None:
        print(f"unknown assignment {args.assignment!r}", file=sys.stderr)
        return 2
    rubrics = {r.id: r for r in store.list_rubrics()}
    errors = validate_assignment(assignment, rubrics)
    if errors:
        for error in errors:
            print(f"assignment {assignment.id}: {error}", file=sys.stderr)
        return 2
    essays = store.list_essays(assignment.id)
    if args.essay:
        wanted = set(args.essay)
        essays = [e for e in essays if e.id in wanted]
        missing = wanted - {e.id for e in essays}
        if missing:
            print(f"unknown essay id(s): {', '.join(sorted(missing))}", file=sys.stderr)
            return 2
    if not essays:
        print("no essays to grade", file=sys.stderr)
        return 2

    config = PipelineConfig(
        mode=PipelineMode(args.mode),
        max_quotes_per_rubric=args.max_quotes,
        temperature=args.temperature,
        retries=args.retries,
    )
    audit_log = AuditLog(args.audit_log) if args.audit_log else None
    store_run = run_batch(assignment, essays, rubrics, config, _provider(args.provider), audit_log=audit_log)
    store.create_run(store_run.run_id, assignment.id, args.provider, args.mode)
    n_failures = sum(len(r.failures) for r in store_run.essay_results)
    n_comments = sum(len(r.comments) for r in store_run.essay_results)
    status = "complete" if n_failures == 0 else ("partial" if n_comments else "failed")
    store.save_run_result(store_run, status)
    if args.out:
        Path(args.out).write_text(export_records(store_run), encoding="utf-8")
    _print_json(
        {
            "run_id": store_run.run_id,
            "status": status,
            "comments": n_comments,
            "failures": n_failures,
            "essays": len(essays),
        }
    )
    return 0 if status != "failed" else 1


def cmd_export(args: argparse.Namespace) -> int:
    store = Store(args.db)
    result = store.load_run_result(args.run)
    if result is None:
        print(f"unknown or unfinished run {args.run!r}", file=sys.stderr)
        return 2
    if args.annotated:
        essay_id = args.essay
        if not essay_id:
            print("--annotated requires --essay", file=sys.stderr)
            return 2
        essay = store.get_essay(essay_id)
        if essay is None:
            print(f"unknown essay {essay_id!r}", file=sys.stderr)
            return 2
        comments = store.comments_for_essay(essay_id, args.run)
        actions = store.actions_for_comments([c.id for c in comments])
        rubrics = {r.id: r for r in store.list_rubrics()}
        doc = export_annotated(essay, comments, actions, rubrics)
        Path(args.annotated).write_text(render_page(doc, essay), encoding="utf-8")
        print(f"wrote {args.annotated}")
    if args.out:
        Path(args.out).write_text(export_records(result, normalize=args.normalize), encoding="utf-8")
        print(f"wrote {args.out}")
    if not args.out and not args.annotated:
        sys.stdout.write(export_records(result, normalize=args.normalize))
    return 0


def cmd_report(args: argparse.Namespace) -> int:
    store = Store(args.db)
    if store.get_assignment(args.assignment) is None:
        print(f"unknown assignment {args.assignment!r}", file=sys.stderr)
        return 2

    all_comments = store.comments_for_assignment(args.assignment)
    actions = store.actions_for_comments([c.id for c in all_comments])
    if args.consistency:
        try:
            report = consistency_report(args.consistency, args.assignment, all_comments, actions)
        except NoData as exc:
            print(str(exc), file=sys.stderr)
            return 2
        text = consistency_csv(report)
    else:
        rater_a, rater_b = args.agreement
        verdicts_a, verdicts_b = verdict_maps_from_reviews(all_comments, actions, rater_a, rater_b)
        report = agreement(verdicts_a, verdicts_b, rater_a=rater_a, rater_b=rater_b)
        text = agreement_csv(report)

    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
        print(f"wrote {args.out}")
    else:
        sys.stdout.write(text)
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import dataclasses
    import os

    import uvicorn

    from .gateway import MockProvider as Mock
    from .service import create_app

    config = load_config(args.config) if args.config else AppConfig(storage_path=args.db or "redink.db")
    if args.db:
        config = dataclasses.replace(config, storage_path=args.db)
    store = Store(config.storage_path)
    audit_log = AuditLog(config.audit_log) if config.audit_log else None

    def remote_provider():
        return RemoteProvider(
            url=os.environ.get(config.provider_url_env),
            api_key=os.environ.get(config.provider_key_env),
            timeout=config.provider_timeout_seconds,
        )

    app = create_app(
        store,
        pipeline_defaults=config.pipeline,
        providers={"mock": Mock, "remote": remote_provider},
        audit_log=audit_log,
        ui_dist=config.ui_dist,
    )
    uvicorn.run(app, host=args.host or config.host, port=args.port or config.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="redink", description="Rubric-based essay feedback engine")
    sub = parser.add_subparsers(dest="command", required=True)

    ingest = sub.add_parser("ingest", help="Load a records file into the database")
    ingest.add_argument("--records", required=True)
    ingest.add_argument("--db", required=True)
    ingest.set_defaults(func=cmd_ingest)

    lint = sub.add_parser("lint", help="Lint rubrics in a records file")
    lint.add_argument("--records", required=True)
    lint.add_argument("--rubric", default=None)
    lint.set_defaults(func=cmd_lint)

    run = sub.add_parser("run", help="Grade essays for one assignment")
    run.add_argument("--db", required=True)
    run.add_argument("--assignment", required=True)
    run.add_argument("--essay", action="append", default=None, help="Limit to specific essay ids")
    run.add_argument("--provider", choices=["mock", "remote"], default="mock")
    run.add_argument(
        "--mode", choices=[m.value for m in PipelineMode], default=PipelineMode.FULL_AI.value
    )
    run.add_argument("--temperature", type=float, default=PipelineConfig().temperature)
    run.add_argument("--retries", type=int, default=PipelineConfig().retries)
    run.add_argument("--max-quotes", type=int, default=PipelineConfig().max_quotes_per_rubric)
    run.add_argument("--audit-log", default=None)
    run.add_argument("--out", default=None, help="Also write the run's records file here")
    run.set_defaults(func=cmd_run)

    export = sub.add_parser("export", help="Export a stored run")
    export.add_argument("--db", required=True)
    export.add_argument("--run", required=True)
    export.add_argument("--out", default=None, help="Records file destination (stdout if omitted)")
    export.add_argument("--normalize", action="store_true", help="Blank fresh ids for diffing")
    export.add_argument("--essay", default=None)
    export.add_argument("--annotated", default=None, help="Write the annotated page for --essay here")
    export.set_defaults(func=cmd_export)

    report = sub.add_parser("report", help="Agreement / consistency reports as CSV")
    report.add_argument("--db", required=True)
    report.add_argument("--assignment", required=True)
    group = report.add_mutually_exclusive_group(required=True)
    group.add_argument("--agreement", nargs=2, metavar=("RATER_A", "RATER_B"))
    group.add_argument("--consistency", metavar="REVIEWER")
    report.add_argument("--out", default=None)
    report.set_defaults(func=cmd_report)

    serve = sub.add_parser("serve", help="Run the HTTP API")
    serve.add_argument("--config", default=None)
    serve.add_argument("--db", default=None)
    serve.add_argument("--host", default=None)
    serve.add_argument("--port", type=int, default=None)
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
