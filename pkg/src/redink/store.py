"""Event-sourced persistence: assignments, essays, runs, comments, and the
append-only review-action log.

No stored action is ever mutated or deleted; a comment's effective state is
a pure fold over its action log, so replaying the log always reconstructs
the same state. That audit trail (what the AI said vs. what the reviewer
did) is a first-class product, not an implementation detail.
"""

from __future__ import annotations

import json
import sqlite3
from dataclasses import dataclass
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Iterable, Sequence

from .model import Assignment, Essay, Rubric
from .pipeline import (
    CompletionResult,
    EssayRunResult,
    FailedComment,
    FeedbackComment,
    Judgment,
    PipelineMode,
    RunManifest,
    RunResult,
    StepTiming,
    Verdict,
)
from .records import (
    assignment_from_record,
    assignment_to_record,
    essay_from_record,
    essay_to_record,
    rubric_from_record,
    rubric_to_record,
)
from .textspan import EvidenceSpan, MatchQuality


class StoreError(Exception):
    pass


class UnknownComment(StoreError):
    pass


class InvalidAction(StoreError):
    pass


class ActionType(str, Enum):
    ACCEPT_AI = "accept_ai"
    ACCEPT_HISTORIC = "accept_historic"
    EDIT = "edit"
    FLIP_JUDGMENT = "flip_judgment"
    DISMISS = "dismiss"


@dataclass(frozen=True)
class ReviewAction:
    """A reviewer's disposition of one comment. Later actions supersede
    earlier ones per (comment, reviewer); the log itself is append-only."""

    id: int
    comment_id: str
    reviewer_id: str
    action: ActionType
    final_text: str | None
    final_verdict: Verdict | None
    created_at: str


@dataclass(frozen=True)
class EffectiveState:
    """The comment as the course now stands behind it: post-review verdict,
    chosen feedback text, and how the reviewer got there."""

    verdict: Verdict
    text: str
    status: str  # unreviewed | accepted_ai | accepted_historic | edited | flipped | dismissed
    reviewer_id: str | None = None


_STATUS_BY_ACTION = {
    ActionType.ACCEPT_AI: "accepted_ai",
    ActionType.ACCEPT_HISTORIC: "accepted_historic",
    ActionType.EDIT: "edited",
    ActionType.FLIP_JUDGMENT: "flipped",
    ActionType.DISMISS: "dismissed",
}


def default_text(comment: FeedbackComment) -> str:
    return comment.ai_feedback or comment.historic_feedback or ""


def effective_state(comment: FeedbackComment, actions: Sequence[ReviewAction]) -> EffectiveState:
    """Pure fold of the action log: the latest action wins outright."""
    if not actions:
        return EffectiveState(comment.judgment.verdict, default_text(comment), "unreviewed")
    last = max(actions, key=lambda a: a.id)
    verdict = comment.judgment.verdict
    text = default_text(comment)
    if last.action is ActionType.ACCEPT_AI:
        text = comment.ai_feedback
    elif last.action is ActionType.ACCEPT_HISTORIC:
        text = comment.historic_feedback or ""
    elif last.action is ActionType.EDIT:
        text = last.final_text or ""
    elif last.action is ActionType.FLIP_JUDGMENT:
        verdict = last.final_verdict or verdict
    return EffectiveState(verdict, text, _STATUS_BY_ACTION[last.action], last.reviewer_id)


def validate_action(
    comment: FeedbackComment,
    action: ActionType,
    final_text: str | None,
    final_verdict: Verdict | None,
) -> None:
    """Raise InvalidAction for structurally invalid dispositions."""
    if action is ActionType.EDIT and not (final_text and final_text.strip()):
        raise InvalidAction("edit requires final_text")
    if action is ActionType.FLIP_JUDGMENT:
        if final_verdict is None:
            raise InvalidAction("flip_judgment requires final_verdict")
        if final_verdict == comment.judgment.verdict:
            raise InvalidAction(
                f"flip_judgment must change the verdict (already {final_verdict.value})"
            )
    if action is ActionType.ACCEPT_HISTORIC and not comment.historic_feedback:
        raise InvalidAction("accept_historic requires the comment to carry historic feedback")


# ---------------------------------------------------------------------------
# Serialization helpers between domain objects and stored JSON payloads.


def span_to_dict(span: EvidenceSpan) -> dict:
    return {
        "rubric_id": span.rubric_id,
        "start": span.start,
        "end": span.end,
        "quoted_text": span.quoted_text,
        "match_quality": span.match_quality.value,
        "score": span.score,
    }


def span_from_dict(obj: dict) -> EvidenceSpan:
    return EvidenceSpan(
        rubric_id=obj["rubric_id"],
        start=obj["start"],
        end=obj["end"],
        quoted_text=obj["quoted_text"],
        match_quality=MatchQuality(obj["match_quality"]),
        score=obj.get("score"),
    )


def completion_to_dict(result: CompletionResult) -> dict:
    return {
        "parsed": result.parsed,
        "raw_text": result.raw_text,
        "provider_name": result.provider_name,
        "attempt_count": result.attempt_count,
    }


def completion_from_dict(obj: dict) -> CompletionResult:
    return CompletionResult(
        parsed=obj["parsed"],
        raw_text=obj["raw_text"],
        provider_name=obj["provider_name"],
        attempt_count=obj["attempt_count"],
    )


def comment_to_dict(comment: FeedbackComment) -> dict:
    return {
        "id": comment.id,
        "essay_id": comment.essay_id,
        "rubric_id": comment.rubric_id,
        "anchor": span_to_dict(comment.anchor),
        "supporting_spans": [span_to_dict(s) for s in comment.supporting_spans],
        "judgment": {
            "rubric_id": comment.judgment.rubric_id,
            "verdict": comment.judgment.verdict.value,
            "rationale": comment.judgment.rationale,
        },
        "ai_feedback": comment.ai_feedback,
        "historic_feedback": comment.historic_feedback,
        "rationale": comment.rationale,
        "pipeline_mode": comment.pipeline_mode.value,
        "provenance": [completion_to_dict(r) for r in comment.provenance],
    }


def comment_from_dict(obj: dict) -> FeedbackComment:
    judgment = Judgment(
        obj["judgment"]["rubric_id"],
        Verdict(obj["judgment"]["verdict"]),
        obj["judgment"]["rationale"],
    )
    return FeedbackComment(
        id=obj["id"],
        essay_id=obj["essay_id"],
        rubric_id=obj["rubric_id"],
        anchor=span_from_dict(obj["anchor"]),
        supporting_spans=tuple(span_from_dict(s) for s in obj["supporting_spans"]),
        judgment=judgment,
        ai_feedback=obj["ai_feedback"],
        historic_feedback=obj["historic_feedback"],
        rationale=obj["rationale"],
        pipeline_mode=PipelineMode(obj["pipeline_mode"]),
        provenance=tuple(completion_from_dict(r) for r in obj["provenance"]),
    )


def manifest_to_dict(manifest: RunManifest) -> dict:
    return {
        "run_id": manifest.run_id,
        "assignment_id": manifest.assignment_id,
        "essay_ids": list(manifest.essay_ids),
        "provider_name": manifest.provider_name,
        "config": manifest.config,
        "created_at": manifest.created_at,
        "judgment_inputs": manifest.judgment_inputs,
        "timings": [
            {"essay_id": t.essay_id, "rubric_id": t.rubric_id, "step": t.step, "seconds": t.seconds}
            for t in manifest.timings
        ],
    }


def manifest_from_dict(obj: dict) -> RunManifest:
    return RunManifest(
        run_id=obj["run_id"],
        assignment_id=obj["assignment_id"],
        essay_ids=tuple(obj["essay_ids"]),
        provider_name=obj["provider_name"],
        config=obj["config"],
        created_at=obj["created_at"],
        judgment_inputs=obj["judgment_inputs"],
        timings=tuple(
            StepTiming(t["essay_id"], t["rubric_id"], t["step"], t["seconds"])
            for t in obj["timings"]
        ),
    )


_SCHEMA = """
CREATE TABLE IF NOT EXISTS rubrics (id TEXT PRIMARY KEY, payload TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS assignments (id TEXT PRIMARY KEY, payload TEXT NOT NULL);
CREATE TABLE IF NOT EXISTS essays (
    id TEXT PRIMARY KEY,
    assignment_id TEXT NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS runs (
    id TEXT PRIMARY KEY,
    assignment_id TEXT NOT NULL,
    provider TEXT NOT NULL,
    mode TEXT NOT NULL,
    status TEXT NOT NULL,
    manifest TEXT,
    created_at TEXT NOT NULL,
    started_at REAL,
    finished_at REAL
);
CREATE TABLE IF NOT EXISTS comments (
    id TEXT PRIMARY KEY,
    run_id TEXT NOT NULL,
    essay_id TEXT NOT NULL,
    rubric_id TEXT NOT NULL,
    seq INTEGER NOT NULL,
    payload TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS failures (
    run_id TEXT NOT NULL,
    essay_id TEXT NOT NULL,
    rubric_id TEXT NOT NULL,
    step TEXT NOT NULL,
    error TEXT NOT NULL
);
CREATE TABLE IF NOT EXISTS actions (
    id INTEGER PRIMARY KEY AUTOINCREMENT,
    comment_id TEXT NOT NULL,
    reviewer_id TEXT NOT NULL,
    action TEXT NOT NULL,
    final_text TEXT,
    final_verdict TEXT,
    created_at TEXT NOT NULL
);
"""


class Store:
    """Single-file embedded database. Connections are opened per call, so
    one Store may be shared across threads; sqlite serializes writers."""

    def __init__(self, path: str | Path):
        self.path = str(path)
        with self._connect() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.path, timeout=30.0)
        conn.row_factory = sqlite3.Row
        return conn

    # -- catalog -----------------------------------------------------------

    def save_rubric(self, rubric: Rubric) -> None:
        payload = json.dumps(rubric_to_record(rubric), sort_keys=True, ensure_ascii=False)
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO rubrics (id, payload) VALUES (?, ?)", (rubric.id, payload)
            )

    def get_rubric(self, rubric_id: str) -> Rubric | None:
        with self._connect() as conn:
            row = conn.execute("SELECT payload FROM rubrics WHERE id = ?", (rubric_id,)).fetchone()
        return rubric_from_record(json.loads(row["payload"])) if row else None

    def list_rubrics(self) -> list[Rubric]:
        with self._connect() as conn:
            rows = conn.execute("SELECT payload FROM rubrics ORDER BY rowid").fetchall()
        return [rubric_from_record(json.loads(r["payload"])) for r in rows]

    def save_assignment(self, assignment: Assignment) -> None:
        payload = json.dumps(assignment_to_record(assignment), sort_keys=True, ensure_ascii=False)
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO assignments (id, payload) VALUES (?, ?)",
                (assignment.id, payload),
            )

    def get_assignment(self, assignment_id: str) -> Assignment | None:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT payload FROM assignments WHERE id = ?", (assignment_id,)
            ).fetchone()
        return assignment_from_record(json.loads(row["payload"])) if row else None

    def list_assignments(self) -> list[Assignment]:
        with self._connect() as conn:
            rows = conn.execute("SELECT payload FROM assignments ORDER BY rowid").fetchall()
        return [assignment_from_record(json.loads(r["payload"])) for r in rows]

    def save_essay(self, essay: Essay) -> None:
        payload = json.dumps(essay_to_record(essay), sort_keys=True, ensure_ascii=False)
        with self._connect() as conn:
            conn.execute(
                "INSERT OR REPLACE INTO essays (id, assignment_id, payload) VALUES (?, ?, ?)",
                (essay.id, essay.assignment_id, payload),
            )

    def get_essay(self, essay_id: str) -> Essay | None:
        with self._connect() as conn:
            row = conn.execute("SELECT payload FROM essays WHERE id = ?", (essay_id,)).fetchone()
        return essay_from_record(json.loads(row["payload"])) if row else None

    def list_essays(self, assignment_id: str | None = None) -> list[Essay]:
        query = "SELECT payload FROM essays"
        params: tuple = ()
        if assignment_id is not None:
            query += " WHERE assignment_id = ?"
            params = (assignment_id,)
        with self._connect() as conn:
            rows = conn.execute(query + " ORDER BY rowid", params).fetchall()
        return [essay_from_record(json.loads(r["payload"])) for r in rows]

    # -- runs ---------------------------------------------------------------

    def create_run(self, run_id: str, assignment_id: str, provider: str, mode: str) -> None:
        with self._connect() as conn:
            conn.execute(
                "INSERT INTO runs (id, assignment_id, provider, mode, status, created_at) "
                "VALUES (?, ?, ?, ?, 'queued', ?)",
                (run_id, assignment_id, provider, mode, datetime.now(timezone.utc).isoformat()),
            )

    def update_run_status(
        self,
        run_id: str,
        status: str,
        *,
        started_at: float | None = None,
        finished_at: float | None = None,
    ) -> None:
        sets = ["status = ?"]
        params: list = [status]
        if started_at is not None:
            sets.append("started_at = ?")
            params.append(started_at)
        if finished_at is not None:
            sets.append("finished_at = ?")
            params.append(finished_at)
        params.append(run_id)
        with self._connect() as conn:
            conn.execute(f"UPDATE runs SET {', '.join(sets)} WHERE id = ?", params)

    def save_run_result(self, result: RunResult, status: str) -> None:
        manifest_json = json.dumps(
            manifest_to_dict(result.manifest), sort_keys=True, ensure_ascii=False
        )
        with self._connect() as conn:
            conn.execute(
                "UPDATE runs SET status = ?, manifest = ? WHERE id = ?",
                (status, manifest_json, result.run_id),
            )
            seq = 0
            for essay_result in result.essay_results:
                for comment in essay_result.comments:
                    conn.execute(
                        "INSERT INTO comments (id, run_id, essay_id, rubric_id, seq, payload) "
                        "VALUES (?, ?, ?, ?, ?, ?)",
                        (
                            comment.id,
                            result.run_id,
                            comment.essay_id,
                            comment.rubric_id,
                            seq,
                            json.dumps(comment_to_dict(comment), sort_keys=True, ensure_ascii=False),
                        ),
                    )
                    seq += 1
                for failure in essay_result.failures:
                    conn.execute(
                        "INSERT INTO failures (run_id, essay_id, rubric_id, step, error) "
                        "VALUES (?, ?, ?, ?, ?)",
                        (result.run_id, failure.essay_id, failure.rubric_id, failure.step, failure.error),
                    )

    def get_run(self, run_id: str) -> dict | None:
        with self._connect() as conn:
            row = conn.execute("SELECT * FROM runs WHERE id = ?", (run_id,)).fetchone()
        if row is None:
            return None
        out = dict(row)
        out["manifest"] = json.loads(row["manifest"]) if row["manifest"] else None
        return out

    def list_runs(self, assignment_id: str | None = None) -> list[dict]:
        query = "SELECT * FROM runs"
        params: tuple = ()
        if assignment_id is not None:
            query += " WHERE assignment_id = ?"
            params = (assignment_id,)
        with self._connect() as conn:
            rows = conn.execute(query + " ORDER BY rowid", params).fetchall()
        out = []
        for row in rows:
            d = dict(row)
            d["manifest"] = json.loads(row["manifest"]) if row["manifest"] else None
            out.append(d)
        return out

    def load_run_result(self, run_id: str) -> RunResult | None:
        run = self.get_run(run_id)
        if run is None or run["manifest"] is None:
            return None
        manifest = manifest_from_dict(run["manifest"])
        with self._connect() as conn:
            comment_rows = conn.execute(
                "SELECT payload FROM comments WHERE run_id = ? ORDER BY seq", (run_id,)
            ).fetchall()
            failure_rows = conn.execute(
                "SELECT * FROM failures WHERE run_id = ? ORDER BY rowid", (run_id,)
            ).fetchall()
        comments = [comment_from_dict(json.loads(r["payload"])) for r in comment_rows]
        failures = [
            FailedComment(r["essay_id"], r["rubric_id"], r["step"], r["error"]) for r in failure_rows
        ]
        by_essay: dict[str, tuple[list, list]] = {}
        for essay_id in manifest.essay_ids:
            by_essay[essay_id] = ([], [])
        for comment in comments:
            by_essay.setdefault(comment.essay_id, ([], []))[0].append(comment)
        for failure in failures:
            by_essay.setdefault(failure.essay_id, ([], []))[1].append(failure)
        essay_results = tuple(
            EssayRunResult(eid, tuple(pair[0]), tuple(pair[1])) for eid, pair in by_essay.items()
        )
        return RunResult(run_id, manifest, essay_results)

    def comments_for_run(self, run_id: str) -> list[FeedbackComment]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT payload FROM comments WHERE run_id = ? ORDER BY seq", (run_id,)
            ).fetchall()
        return [comment_from_dict(json.loads(r["payload"])) for r in rows]

    def comments_for_assignment(self, assignment_id: str) -> list[FeedbackComment]:
        """Every stored comment for the assignment's essays, across runs."""
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT payload FROM comments WHERE essay_id IN "
                "(SELECT id FROM essays WHERE assignment_id = ?) ORDER BY rowid",
                (assignment_id,),
            ).fetchall()
        return [comment_from_dict(json.loads(r["payload"])) for r in rows]

    def comments_for_essay(self, essay_id: str, run_id: str | None = None) -> list[FeedbackComment]:
        """Comments for an essay; defaults to the most recent run that
        produced any."""
        with self._connect() as conn:
            if run_id is None:
                row = conn.execute(
                    "SELECT run_id FROM comments WHERE essay_id = ? ORDER BY rowid DESC LIMIT 1",
                    (essay_id,),
                ).fetchone()
                if row is None:
                    return []
                run_id = row["run_id"]
            rows = conn.execute(
                "SELECT payload FROM comments WHERE essay_id = ? AND run_id = ? ORDER BY seq",
                (essay_id, run_id),
            ).fetchall()
        return [comment_from_dict(json.loads(r["payload"])) for r in rows]

    def get_comment(self, comment_id: str) -> FeedbackComment | None:
        with self._connect() as conn:
            row = conn.execute(
                "SELECT payload FROM comments WHERE id = ?", (comment_id,)
            ).fetchone()
        return comment_from_dict(json.loads(row["payload"])) if row else None

    # -- review actions ------------------------------------------------------

    def record_action(
        self,
        comment_id: str,
        reviewer_id: str,
        action: ActionType | str,
        final_text: str | None = None,
        final_verdict: Verdict | str | None = None,
    ) -> int:
        """Append one action to the log and return its id. Re-posting an
        action identical to the latest one for (comment, reviewer) is a
        no-op returning the existing id."""
        try:
            action = ActionType(action)
        except ValueError:
            raise InvalidAction(f"unknown action {action!r}") from None
        if final_verdict is not None and not isinstance(final_verdict, Verdict):
            try:
                final_verdict = Verdict(final_verdict)
            except ValueError:
                raise InvalidAction(f"unknown verdict {final_verdict!r}") from None

        comment = self.get_comment(comment_id)
        if comment is None:
            raise UnknownComment(f"unknown comment {comment_id!r}")
        validate_action(comment, action, final_text, final_verdict)

        with self._connect() as conn:
            latest = conn.execute(
                "SELECT * FROM actions WHERE comment_id = ? AND reviewer_id = ? "
                "ORDER BY id DESC LIMIT 1",
                (comment_id, reviewer_id),
            ).fetchone()
            if (
                latest is not None
                and latest["action"] == action.value
                and latest["final_text"] == final_text
                and latest["final_verdict"] == (final_verdict.value if final_verdict else None)
            ):
                return latest["id"]
            cursor = conn.execute(
                "INSERT INTO actions (comment_id, reviewer_id, action, final_text, final_verdict, created_at) "
                "VALUES (?, ?, ?, ?, ?, ?)",
                (
                    comment_id,
                    reviewer_id,
                    action.value,
                    final_text,
                    final_verdict.value if final_verdict else None,
                    datetime.now(timezone.utc).isoformat(),
                ),
            )
            return cursor.lastrowid

    def actions_for_comment(self, comment_id: str) -> list[ReviewAction]:
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT * FROM actions WHERE comment_id = ? ORDER BY id", (comment_id,)
            ).fetchall()
        return [self._row_to_action(r) for r in rows]

    def actions_for_comments(self, comment_ids: Iterable[str]) -> dict[str, list[ReviewAction]]:
        ids = list(comment_ids)
        if not ids:
            return {}
        marks = ",".join("?" for _ in ids)
        with self._connect() as conn:
            rows = conn.execute(
                f"SELECT * FROM actions WHERE comment_id IN ({marks}) ORDER BY id", ids
            ).fetchall()
        out: dict[str, list[ReviewAction]] = {cid: [] for cid in ids}
        for row in rows:
            out[row["comment_id"]].append(self._row_to_action(row))
        return out

    @staticmethod
    def _row_to_action(row: sqlite3.Row) -> ReviewAction:
        return ReviewAction(
            id=row["id"],
            comment_id=row["comment_id"],
            reviewer_id=row["reviewer_id"],
            action=ActionType(row["action"]),
            final_text=row["final_text"],
            final_verdict=Verdict(row["final_verdict"]) if row["final_verdict"] else None,
            created_at=row["created_at"],
        )

    def effective_state_for(self, comment: FeedbackComment) -> EffectiveState:
        return effective_state(comment, self.actions_for_comment(comment.id))
