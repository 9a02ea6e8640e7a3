"""Agreement and consistency summaries over verdicts and review logs.

Cohen's kappa over the binary met/missed universe is the agreement metric;
dismissed comments are excluded from every denominator.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Mapping, Sequence

from .pipeline import FeedbackComment, Verdict
from .store import ActionType, ReviewAction, effective_state


class ItemMismatch(Exception):
    """The two raters do not cover the same item set."""


class NoData(Exception):
    """The reviewer has no recorded actions in scope."""


@dataclass(frozen=True)
class AgreementReport:
    rater_a: str
    rater_b: str
    n_items: int
    observed_agreement: float
    kappa: float
    per_rubric: dict[str, tuple[int, float]]


def _as_verdict(value) -> Verdict:
    return value if isinstance(value, Verdict) else Verdict(value)


def agreement(
    verdicts_a: Mapping[tuple[str, str], Verdict | str],
    verdicts_b: Mapping[tuple[str, str], Verdict | str],
    *,
    rater_a: str = "A",
    rater_b: str = "B",
) -> AgreementReport:
    """Observed agreement and Cohen's kappa over two verdict maps keyed by
    (essay_id, rubric_id).

    kappa = (p_o - p_e) / (1 - p_e) with p_e from marginal verdict
    frequencies. When p_e = 1 the formula is singular; by convention kappa
    is 1 if p_o = 1 and 0 otherwise.
    """
    keys_a, keys_b = set(verdicts_a), set(verdicts_b)
    if keys_a != keys_b:
        missing = sorted(keys_a ^ keys_b)[:5]
        raise ItemMismatch(f"raters cover different items, e.g. {missing}")
    if not keys_a:
        raise ItemMismatch("no items to compare")

    items = sorted(keys_a)
    a = {k: _as_verdict(verdicts_a[k]) for k in items}
    b = {k: _as_verdict(verdicts_b[k]) for k in items}
    n = len(items)

    matches = sum(1 for k in items if a[k] == b[k])
    p_o = matches / n
    pa_met = sum(1 for k in items if a[k] is Verdict.MET) / n
    pb_met = sum(1 for k in items if b[k] is Verdict.MET) / n
    p_e = pa_met * pb_met + (1 - pa_met) * (1 - pb_met)
    if p_e == 1.0:
        kappa = 1.0 if p_o == 1.0 else 0.0
    else:
        kappa = (p_o - p_e) / (1 - p_e)

    per_rubric: dict[str, tuple[int, float]] = {}
    by_rubric: dict[str, list[tuple[str, str]]] = {}
    for key in items:
        by_rubric.setdefault(key[1], []).append(key)
    for rubric_id, keys in sorted(by_rubric.items()):
        hits = sum(1 for k in keys if a[k] == b[k])
        per_rubric[rubric_id] = (len(keys), hits / len(keys))

    return AgreementReport(rater_a, rater_b, n, p_o, kappa, per_rubric)


def verdict_maps_from_reviews(
    comments: Sequence[FeedbackComment],
    actions_by_comment: Mapping[str, Sequence[ReviewAction]],
    rater_a: str,
    rater_b: str,
) -> tuple[dict[tuple[str, str], Verdict], dict[tuple[str, str], Verdict]]:
    """Aligned verdict maps for two raters over (essay, rubric) items.

    "AI" denotes the pipeline's own verdict; any other name is a reviewer id
    whose verdict is the effective verdict of their latest action. Items a
    reviewer dismissed or never acted on are excluded. When the same item was
    reviewed in more than one run, the most recently acted-on comment wins.
    """

    def latest_for(reviewer: str, comment: FeedbackComment) -> ReviewAction | None:
        acts = [a for a in actions_by_comment.get(comment.id, ()) if a.reviewer_id == reviewer]
        return max(acts, key=lambda a: a.id) if acts else None

    map_a: dict[tuple[str, str], Verdict] = {}
    map_b: dict[tuple[str, str], Verdict] = {}
    recency: dict[tuple[str, str], int] = {}
    for comment in comments:
        key = (comment.essay_id, comment.rubric_id)
        verdicts: list[Verdict] = []
        stamp = -1
        covered = True
        for rater in (rater_a, rater_b):
            if rater == "AI":
                verdicts.append(comment.judgment.verdict)
                continue
            action = latest_for(rater, comment)
            if action is None or action.action is ActionType.DISMISS:
                covered = False
                break
            verdicts.append(effective_state(comment, [action]).verdict)
            stamp = max(stamp, action.id)
        if not covered:
            continue
        if key in recency and recency[key] >= stamp:
            continue
        recency[key] = stamp
        map_a[key], map_b[key] = verdicts[0], verdicts[1]
    return map_a, map_b


@dataclass(frozen=True)
class RubricConsistency:
    rubric_id: str
    n_reviewed: int
    flip_rate: float
    edit_rate: float
    ai_agreement: float


@dataclass(frozen=True)
class ConsistencyReport:
    """Per-rubric flip/edit rates for one reviewer, sorted so the rubrics
    where the AI is least trusted come first."""

    reviewer_id: str
    assignment_id: str
    rows: tuple[RubricConsistency, ...]


def consistency_report(
    reviewer_id: str,
    assignment_id: str,
    comments: Sequence[FeedbackComment],
    actions_by_comment: Mapping[str, Sequence[ReviewAction]],
) -> ConsistencyReport:
    """Summarize a reviewer's dispositions per rubric.

    Definitions: over comments the reviewer acted on, flip_rate counts
    flip_judgment dispositions, edit_rate counts edits, and ai_agreement is
    the fraction of non-dismissed acted comments whose effective verdict
    equals the AI verdict.
    """
    per_rubric: dict[str, list[tuple[FeedbackComment, ReviewAction]]] = {}
    for comment in comments:
        reviewer_actions = [
            a for a in actions_by_comment.get(comment.id, ()) if a.reviewer_id == reviewer_id
        ]
        if not reviewer_actions:
            continue
        latest = max(reviewer_actions, key=lambda a: a.id)
        per_rubric.setdefault(comment.rubric_id, []).append((comment, latest))

    if not per_rubric:
        raise NoData(f"reviewer {reviewer_id!r} has no actions on assignment {assignment_id!r}")

    rows = []
    for rubric_id, pairs in sorted(per_rubric.items()):
        n = len(pairs)
        flips = sum(1 for _, a in pairs if a.action is ActionType.FLIP_JUDGMENT)
        edits = sum(1 for _, a in pairs if a.action is ActionType.EDIT)
        undismissed = [
            (c, a) for c, a in pairs if a.action is not ActionType.DISMISS
        ]
        if undismissed:
            agreements = sum(
                1
                for c, a in undismissed
                if effective_state(c, [a]).verdict == c.judgment.verdict
            )
            ai_agreement = agreements / len(undismissed)
        else:
            ai_agreement = 1.0
        rows.append(RubricConsistency(rubric_id, n, flips / n, edits / n, ai_agreement))

    rows.sort(key=lambda r: (-r.flip_rate, -r.edit_rate, r.rubric_id))
    return ConsistencyReport(reviewer_id, assignment_id, tuple(rows))


def agreement_csv(report: AgreementReport) -> str:
    """Spreadsheet-friendly rendering of an agreement report."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["rater_a", "rater_b", "n_items", "observed_agreement", "kappa"])
    writer.writerow(
        [report.rater_a, report.rater_b, report.n_items, report.observed_agreement, report.kappa]
    )
    writer.writerow([])
    writer.writerow(["rubric_id", "n", "observed_agreement"])
    for rubric_id, (n, obs) in report.per_rubric.items():
        writer.writerow([rubric_id, n, obs])
    return buf.getvalue()


def consistency_csv(report: ConsistencyReport) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["reviewer_id", "assignment_id"])
    writer.writerow([report.reviewer_id, report.assignment_id])
    writer.writerow([])
    writer.writerow(["rubric_id", "n_reviewed", "flip_rate", "edit_rate", "ai_agreement"])
    for row in report.rows:
        writer.writerow([row.rubric_id, row.n_reviewed, row.flip_rate, row.edit_rate, row.ai_agreement])
    return buf.getvalue()
