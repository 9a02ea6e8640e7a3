"""HTTP API over the store and pipeline: ingestion, runs, comments, review
actions, reports, and exports.

The API is stateless per request; all state lives in the store. A completed
run's comments are immutable here; only review actions change effective
state. Runs are asynchronous with polling, and at most one run per
(assignment, provider) executes at a time to bound provider spend.
"""

from __future__ import annotations

import threading
import time
import uuid
from collections import defaultdict
from typing import Callable, Literal

from fastapi import FastAPI, Header, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, PlainTextResponse, Response
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field

from .export import export_annotated, export_records, merge_regions, render_page
from .gateway import AuditLog, MockProvider, Provider, RemoteProvider
from .lint import lint_rubric
from .model import Assignment, Elaboration, Essay, ExampleFeedback, Polarity, Rubric, validate_assignment
from .pipeline import PipelineConfig, PipelineMode, run_batch
from .reports import (
    ItemMismatch,
    NoData,
    agreement,
    agreement_csv,
    consistency_csv,
    consistency_report,
    verdict_maps_from_reviews,
)
from .store import ActionType, InvalidAction, Store, UnknownComment, Verdict, effective_state


class ApiError(Exception):
    def __init__(self, status: int, code: str, message: str, field: str | None = None):
        self.status = status
        self.code = code
        self.message = message
        self.field = field
        super().__init__(message)


def _envelope(code: str, message: str, field: str | None = None) -> dict:
    return {"error": {"code": code, "message": message, "field": field}}


# -- request bodies ----------------------------------------------------------


class ElaborationIn(BaseModel):
    domain_definition: str | None = None
    acceptable_alternatives: list[str] = Field(default_factory=list)
    expected_depth: str | None = None
    polarity: Literal["expected_behavior", "prohibited_behavior"] = "expected_behavior"


class RubricIn(BaseModel):
    id: str
    short_name: str
    criterion: str
    elaboration: ElaborationIn | None = None
    historic_feedback: list[str] = Field(default_factory=list)
    keyword_groups: list[list[str]] = Field(default_factory=list)

    def to_domain(self) -> Rubric:
        elaboration = None
        if self.elaboration is not None:
            elaboration = Elaboration(
                domain_definition=self.elaboration.domain_definition,
                acceptable_alternatives=tuple(self.elaboration.acceptable_alternatives),
                expected_depth=self.elaboration.expected_depth,
                polarity=Polarity(self.elaboration.polarity),
            )
        return Rubric(
            id=self.id,
            short_name=self.short_name,
            criterion=self.criterion,
            elaboration=elaboration,
            historic_feedback=tuple(self.historic_feedback),
            keyword_groups=tuple(tuple(g) for g in self.keyword_groups),
        )


class ExampleIn(BaseModel):
    situation: str
    feedback_text: str


class AssignmentIn(BaseModel):
    id: str
    title: str
    prompt_text: str
    rubric_ids: list[str]
    few_shot_examples: list[ExampleIn] = Field(default_factory=list)

    def to_domain(self) -> Assignment:
        return Assignment(
            id=self.id,
            title=self.title,
            prompt_text=self.prompt_text,
            rubric_ids=tuple(self.rubric_ids),
            few_shot_examples=tuple(
                ExampleFeedback(e.situation, e.feedback_text) for e in self.few_shot_examples
            ),
        )


class EssayIn(BaseModel):
    id: str
    assignment_id: str
    author_alias: str
    text: str


class RunConfigIn(BaseModel):
    mode: Literal["full_ai", "judgment_plus_historic"] = "full_ai"
    max_quotes_per_rubric: int | None = None
    temperature: float | None = None
    retries: int | None = None
    few_shot_limit: int | None = None


class RunRequestIn(BaseModel):
    assignment_id: str
    essay_ids: list[str]
    provider: Literal["mock", "remote"] = "mock"
    config: RunConfigIn = Field(default_factory=RunConfigIn)


class ActionIn(BaseModel):
    comment_id: str
    action: Literal["accept_ai", "accept_historic", "edit", "flip_judgment", "dismiss"]
    final_text: str | None = None
    final_verdict: Literal["met", "missed"] | None = None


# -- run queue ---------------------------------------------------------------


class RunQueue:
    """Executes runs on worker threads, serializing runs that share an
    (assignment, provider) key. Queued runs wait for the key lock."""

    def __init__(self, store: Store, max_workers: int = 4):
        self._store = store
        self._locks: dict[tuple[str, str], threading.Lock] = defaultdict(threading.Lock)
        self._guard = threading.Lock()
        self._threads: list[threading.Thread] = []

    def _key_lock(self, key: tuple[str, str]) -> threading.Lock:
        with self._guard:
            return self._locks[key]

    def submit(self, run_id: str, key: tuple[str, str], job: Callable[[], None]) -> None:
        def worker() -> None:
            lock = self._key_lock(key)
            with lock:
                self._store.update_run_status(run_id, "running", started_at=time.time())
                job()

        thread = threading.Thread(target=worker, name=f"run-{run_id}", daemon=True)
        with self._guard:
            self._threads.append(thread)
        thread.start()

    def join(self, timeout: float = 30.0) -> None:
        deadline = time.time() + timeout
        with self._guard:
            threads = list(self._threads)
        for thread in threads:
            thread.join(max(0.0, deadline - time.time()))


DEFAULT_PROVIDERS: dict[str, Callable[[], Provider]] = {
    "mock": MockProvider,
    "remote": RemoteProvider,
}


def create_app(
    store: Store,
    *,
    pipeline_defaults: PipelineConfig | None = None,
    providers: dict[str, Callable[[], Provider]] | None = None,
    audit_log: AuditLog | None = None,
    ui_dist: str | None = None,
) -> FastAPI:
    """Build the API application. ``providers`` maps provider names to
    factories and is injectable for tests."""
    defaults = pipeline_defaults or PipelineConfig()
    provider_factories = providers or DEFAULT_PROVIDERS
    app = FastAPI(title="redink", version="0.1.0")
    queue = RunQueue(store)
    app.state.store = store
    app.state.queue = queue

    @app.exception_handler(ApiError)
    async def on_api_error(request: Request, exc: ApiError):
        return JSONResponse(status_code=exc.status, content=_envelope(exc.code, exc.message, exc.field))

    @app.exception_handler(RequestValidationError)
    async def on_validation_error(request: Request, exc: RequestValidationError):
        first = exc.errors()[0] if exc.errors() else {}
        field = ".".join(str(loc) for loc in first.get("loc", []) if loc != "body") or None
        return JSONResponse(
            status_code=422,
            content=_envelope("invalid_request", first.get("msg", "invalid request body"), field),
        )

    def get_assignment_or_404(assignment_id: str) -> Assignment:
        assignment = store.get_assignment(assignment_id)
        if assignment is None:
            raise ApiError(404, "unknown_assignment", f"unknown assignment {assignment_id!r}", "assignment_id")
        return assignment

    def rubric_payload(rubric: Rubric) -> dict:
        from .records import rubric_to_record

        payload = rubric_to_record(rubric)
        payload.pop("record")
        return payload

    def lint_payload(rubric: Rubric) -> list[dict]:
        return [
            {"rubric_id": w.rubric_id, "dimension": w.dimension.value, "message": w.message}
            for w in lint_rubric(rubric)
        ]

    # -- ingestion ----------------------------------------------------------

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    @app.post("/v1/rubrics", status_code=201)
    def create_rubric(body: RubricIn):
        try:
            rubric = body.to_domain()
        except ValueError as exc:
            raise ApiError(400, "invalid_request", str(exc), "criterion")
        store.save_rubric(rubric)
        return {"rubric": rubric_payload(rubric), "lint_warnings": lint_payload(rubric)}

    @app.get("/v1/rubrics")
    def list_rubrics():
        return {"rubrics": [rubric_payload(r) for r in store.list_rubrics()]}

    @app.post("/v1/assignments", status_code=201)
    def create_assignment(body: AssignmentIn):
        try:
            assignment = body.to_domain()
        except ValueError as exc:
            raise ApiError(400, "invalid_request", str(exc), "few_shot_examples")
        rubrics = {r.id: r for r in store.list_rubrics()}
        errors = validate_assignment(assignment, rubrics)
        if errors:
            raise ApiError(400, "invalid_assignment", "; ".join(errors), "rubric_ids")
        store.save_assignment(assignment)
        warnings = []
        for rid in assignment.rubric_ids:
            warnings.extend(lint_payload(rubrics[rid]))
        return {"assignment": body.model_dump(), "lint_warnings": warnings}

    @app.get("/v1/assignments")
    def list_assignments():
        return {
            "assignments": [
                {
                    "id": a.id,
                    "title": a.title,
                    "prompt_text": a.prompt_text,
                    "rubric_ids": list(a.rubric_ids),
                }
                for a in store.list_assignments()
            ]
        }

    @app.get("/v1/assignments/{assignment_id}")
    def get_assignment(assignment_id: str):
        assignment = get_assignment_or_404(assignment_id)
        rubrics = {r.id: r for r in store.list_rubrics()}
        return {
            "id": assignment.id,
            "title": assignment.title,
            "prompt_text": assignment.prompt_text,
            "rubric_ids": list(assignment.rubric_ids),
            "rubrics": [rubric_payload(rubrics[rid]) for rid in assignment.rubric_ids if rid in rubrics],
        }

    @app.post("/v1/essays", status_code=201)
    def create_essay(body: EssayIn):
        get_assignment_or_404(body.assignment_id)
        essay = Essay.from_text(body.id, body.assignment_id, body.author_alias, body.text)
        store.save_essay(essay)
        return {"id": essay.id, "assignment_id": essay.assignment_id, "sentences": len(essay.sentences)}

    @app.get("/v1/essays")
    def list_essays(assignment_id: str | None = None):
        return {
            "essays": [
                {"id": e.id, "assignment_id": e.assignment_id, "author_alias": e.author_alias}
                for e in store.list_essays(assignment_id)
            ]
        }

    @app.get("/v1/essays/{essay_id}")
    def get_essay(essay_id: str):
        essay = store.get_essay(essay_id)
        if essay is None:
            raise ApiError(404, "unknown_essay", f"unknown essay {essay_id!r}", "essay_id")
        return {
            "id": essay.id,
            "assignment_id": essay.assignment_id,
            "author_alias": essay.author_alias,
            "text": essay.text,
            "sentences": [
                {"index": s.index, "start": s.start, "end": s.end, "text": s.text}
                for s in essay.sentences
            ],
        }

    # -- runs -----------------------------------------------------------------

    @app.post("/v1/runs", status_code=202)
    def start_run(body: RunRequestIn):
        assignment = get_assignment_or_404(body.assignment_id)
        if not body.essay_ids:
            raise ApiError(400, "invalid_request", "essay_ids must not be empty", "essay_ids")
        essays = []
        for essay_id in body.essay_ids:
            essay = store.get_essay(essay_id)
            if essay is None or essay.assignment_id != assignment.id:
                raise ApiError(
                    400,
                    "unknown_essay",
                    f"essay {essay_id!r} does not belong to assignment {assignment.id!r}",
                    "essay_ids",
                )
            essays.append(essay)
        rubrics = {r.id: r for r in store.list_rubrics()}
        errors = validate_assignment(assignment, rubrics)
        if errors:
            raise ApiError(400, "invalid_assignment", "; ".join(errors), "assignment_id")
        if body.provider not in provider_factories:
            raise ApiError(400, "invalid_request", f"unknown provider {body.provider!r}", "provider")

        overrides = {k: v for k, v in body.config.model_dump().items() if v is not None}
        mode = PipelineMode(overrides.pop("mode", defaults.mode))
        config = PipelineConfig(
            mode=mode,
            max_quotes_per_rubric=overrides.get("max_quotes_per_rubric", defaults.max_quotes_per_rubric),
            temperature=overrides.get("temperature", defaults.temperature),
            retries=overrides.get("retries", defaults.retries),
            guideline_text=defaults.guideline_text,
            few_shot_limit=overrides.get("few_shot_limit", defaults.few_shot_limit),
            fuzzy_threshold=defaults.fuzzy_threshold,
            concurrency=defaults.concurrency,
        )

        run_id = "run-" + uuid.uuid4().hex[:12]
        store.create_run(run_id, assignment.id, body.provider, mode.value)

        def job() -> None:
            status = "failed"
            try:
                provider = provider_factories[body.provider]()
                result = run_batch(
                    assignment, essays, rubrics, config, provider, run_id=run_id, audit_log=audit_log
                )
                n_failures = sum(len(r.failures) for r in result.essay_results)
                n_comments = sum(len(r.comments) for r in result.essay_results)
                status = "complete" if n_failures == 0 else ("partial" if n_comments else "failed")
                store.save_run_result(result, status)
            finally:
                store.update_run_status(run_id, status, finished_at=time.time())

        queue.submit(run_id, (assignment.id, body.provider), job)
        return {"run_id": run_id, "status": "queued"}

    @app.get("/v1/runs")
    def list_runs(assignment_id: str | None = None):
        runs = store.list_runs(assignment_id)
        return {
            "runs": [
                {"run_id": r["id"], "status": r["status"], "provider": r["provider"], "mode": r["mode"]}
                for r in runs
            ]
        }

    @app.get("/v1/runs/{run_id}")
    def get_run(run_id: str):
        run = store.get_run(run_id)
        if run is None:
            raise ApiError(404, "unknown_run", f"unknown run {run_id!r}", "run_id")
        comments = store.comments_for_run(run_id)
        return {
            "run_id": run["id"],
            "assignment_id": run["assignment_id"],
            "provider": run["provider"],
            "mode": run["mode"],
            "status": run["status"],
            "created_at": run["created_at"],
            "started_at": run["started_at"],
            "finished_at": run["finished_at"],
            "comment_count": len(comments),
            "manifest": run["manifest"],
        }

    def comment_view(comment, actions) -> dict:
        state = effective_state(comment, actions)
        return {
            "id": comment.id,
            "essay_id": comment.essay_id,
            "rubric_id": comment.rubric_id,
            "anchor": {
                "start": comment.anchor.start,
                "end": comment.anchor.end,
                "quoted_text": comment.anchor.quoted_text,
                "match_quality": comment.anchor.match_quality.value,
                "score": comment.anchor.score,
            },
            "supporting_spans": [
                {
                    "start": s.start,
                    "end": s.end,
                    "quoted_text": s.quoted_text,
                    "match_quality": s.match_quality.value,
                    "score": s.score,
                }
                for s in comment.supporting_spans
            ],
            "verdict": comment.judgment.verdict.value,
            "rationale": comment.rationale,
            "ai_feedback": comment.ai_feedback,
            "historic_feedback": comment.historic_feedback,
            "pipeline_mode": comment.pipeline_mode.value,
            "provenance": [
                {
                    "parsed": r.parsed,
                    "raw_text": r.raw_text,
                    "provider_name": r.provider_name,
                    "attempt_count": r.attempt_count,
                }
                for r in comment.provenance
            ],
            "effective": {
                "verdict": state.verdict.value,
                "text": state.text,
                "status": state.status,
                "reviewer_id": state.reviewer_id,
            },
        }

    @app.get("/v1/runs/{run_id}/comments")
    def run_comments(run_id: str):
        if store.get_run(run_id) is None:
            raise ApiError(404, "unknown_run", f"unknown run {run_id!r}", "run_id")
        comments = store.comments_for_run(run_id)
        actions = store.actions_for_comments([c.id for c in comments])
        return {"comments": [comment_view(c, actions.get(c.id, [])) for c in comments]}

    @app.get("/v1/essays/{essay_id}/comments")
    def essay_comments(essay_id: str, run_id: str | None = None):
        if store.get_essay(essay_id) is None:
            raise ApiError(404, "unknown_essay", f"unknown essay {essay_id!r}", "essay_id")
        comments = store.comments_for_essay(essay_id, run_id)
        actions = store.actions_for_comments([c.id for c in comments])
        return {"comments": [comment_view(c, actions.get(c.id, [])) for c in comments]}

    @app.get("/v1/essays/{essay_id}/regions")
    def essay_regions(essay_id: str, run_id: str | None = None):
        if store.get_essay(essay_id) is None:
            raise ApiError(404, "unknown_essay", f"unknown essay {essay_id!r}", "essay_id")
        comments = store.comments_for_essay(essay_id, run_id)
        regions = merge_regions(comments)
        return {
            "regions": [
                {
                    "start": r.start,
                    "end": r.end,
                    "comment_ids": list(r.comment_ids),
                    "match_qualities": list(r.match_qualities),
                }
                for r in regions
            ]
        }

    # -- review actions --------------------------------------------------------

    @app.post("/v1/actions", status_code=201)
    def post_action(body: ActionIn, x_reviewer_id: str | None = Header(default=None)):
        if not x_reviewer_id:
            raise ApiError(400, "invalid_request", "X-Reviewer-Id header is required", "X-Reviewer-Id")
        try:
            action_id = store.record_action(
                body.comment_id,
                x_reviewer_id,
                ActionType(body.action),
                final_text=body.final_text,
                final_verdict=Verdict(body.final_verdict) if body.final_verdict else None,
            )
        except UnknownComment as exc:
            raise ApiError(404, "unknown_comment", str(exc), "comment_id")
        except InvalidAction as exc:
            raise ApiError(400, "invalid_action", str(exc), "action")
        return {"action_id": action_id}

    @app.get("/v1/comments/{comment_id}/actions")
    def comment_actions(comment_id: str):
        if store.get_comment(comment_id) is None:
            raise ApiError(404, "unknown_comment", f"unknown comment {comment_id!r}", "comment_id")
        return {
            "actions": [
                {
                    "id": a.id,
                    "comment_id": a.comment_id,
                    "reviewer_id": a.reviewer_id,
                    "action": a.action.value,
                    "final_text": a.final_text,
                    "final_verdict": a.final_verdict.value if a.final_verdict else None,
                    "created_at": a.created_at,
                }
                for a in store.actions_for_comment(comment_id)
            ]
        }

    # -- reports ----------------------------------------------------------------

    @app.get("/v1/reports/agreement")
    def agreement_report(assignment_id: str, rater_a: str = "AI", rater_b: str = "AI", format: str = "json"):
        get_assignment_or_404(assignment_id)
        comments = store.comments_for_assignment(assignment_id)
        actions = store.actions_for_comments([c.id for c in comments])
        verdicts_a, verdicts_b = verdict_maps_from_reviews(comments, actions, rater_a, rater_b)
        try:
            report = agreement(verdicts_a, verdicts_b, rater_a=rater_a, rater_b=rater_b)
        except ItemMismatch as exc:
            raise ApiError(400, "item_mismatch", str(exc), None)
        if format == "csv":
            return PlainTextResponse(agreement_csv(report), media_type="text/csv")
        return {
            "rater_a": report.rater_a,
            "rater_b": report.rater_b,
            "n_items": report.n_items,
            "observed_agreement": report.observed_agreement,
            "kappa": report.kappa,
            "per_rubric": {
                rid: {"n": n, "observed_agreement": obs} for rid, (n, obs) in report.per_rubric.items()
            },
        }

    @app.get("/v1/reports/consistency")
    def consistency(assignment_id: str, reviewer_id: str, format: str = "json"):
        get_assignment_or_404(assignment_id)
        all_comments = store.comments_for_assignment(assignment_id)
        actions = store.actions_for_comments([c.id for c in all_comments])
        try:
            report = consistency_report(reviewer_id, assignment_id, all_comments, actions)
        except NoData as exc:
            raise ApiError(404, "no_data", str(exc), "reviewer_id")
        if format == "csv":
            return PlainTextResponse(consistency_csv(report), media_type="text/csv")
        return {
            "reviewer_id": report.reviewer_id,
            "assignment_id": report.assignment_id,
            "rows": [
                {
                    "rubric_id": r.rubric_id,
                    "n_reviewed": r.n_reviewed,
                    "flip_rate": r.flip_rate,
                    "edit_rate": r.edit_rate,
                    "ai_agreement": r.ai_agreement,
                }
                for r in report.rows
            ],
        }

    # -- exports ------------------------------------------------------------------

    @app.get("/v1/essays/{essay_id}/annotated")
    def annotated(essay_id: str, run_id: str | None = None):
        essay = store.get_essay(essay_id)
        if essay is None:
            raise ApiError(404, "unknown_essay", f"unknown essay {essay_id!r}", "essay_id")
        comments = store.comments_for_essay(essay_id, run_id)
        actions = store.actions_for_comments([c.id for c in comments])
        rubrics = {r.id: r for r in store.list_rubrics()}
        doc = export_annotated(essay, comments, actions, rubrics)
        return Response(render_page(doc, essay), media_type="text/html")

    @app.get("/v1/runs/{run_id}/export")
    def run_export(run_id: str, normalize: bool = False):
        result = store.load_run_result(run_id)
        if result is None:
            raise ApiError(404, "unknown_run", f"unknown run {run_id!r} (or not finished)", "run_id")
        return PlainTextResponse(
            export_records(result, normalize=normalize), media_type="application/jsonl"
        )

    if ui_dist:
        app.mount("/ui", StaticFiles(directory=ui_dist, html=True), name="ui")

    return app
