"""Render an essay plus its comments as an annotated document, and flatten
runs to a record-oriented text file that imports back losslessly.

The annotated page is a single self-contained file; stripping its highlight
markers reproduces the essay text byte for byte, which is the contract the
golden-file tests pin down.
"""

from __future__ import annotations

import html
import json
import re
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import Essay, Rubric
from .pipeline import (
    EssayRunResult,
    FailedComment,
    FeedbackComment,
    Judgment,
    PipelineMode,
    RunResult,
    Verdict,
)
from .store import (
    EffectiveState,
    ReviewAction,
    completion_from_dict,
    completion_to_dict,
    effective_state,
    span_from_dict,
    span_to_dict,
)
from .textspan import EvidenceSpan, MatchQuality

MARKER_RE = re.compile(r"</?mark[^>]*>")

HISTORIC_ABSENT = "—"  # em dash placeholder when no canned feedback applies


@dataclass(frozen=True)
class HighlightRegion:
    """A contiguous highlighted stretch; overlapping anchors are merged into
    one region carrying every comment id."""

    start: int
    end: int
    comment_ids: tuple[str, ...]
    match_qualities: tuple[str, ...]


@dataclass(frozen=True)
class CommentBlock:
    comment_id: str
    rubric_id: str
    criterion: str
    verdict: str
    ai_feedback: str
    historic_feedback: str  # em dash when absent
    rationale: str
    match_quality: str
    score: float | None
    review_status: str
    effective_text: str
    effective_verdict: str
    document_level: bool
    start: int
    end: int


@dataclass(frozen=True)
class AnnotatedDocument:
    essay_id: str
    html_like_markup: str
    comment_blocks: tuple[CommentBlock, ...]
    regions: tuple[HighlightRegion, ...]


def merge_regions(comments: Sequence[FeedbackComment]) -> list[HighlightRegion]:
    """Merge overlapping anchor spans (unresolved anchors excluded)."""
    anchored = [c for c in comments if c.anchor.resolved]
    anchored.sort(key=lambda c: (c.anchor.start, c.anchor.end))
    regions: list[HighlightRegion] = []
    for comment in anchored:
        anchor = comment.anchor
        if regions and anchor.start < regions[-1].end:
            last = regions[-1]
            regions[-1] = HighlightRegion(
                last.start,
                max(last.end, anchor.end),
                last.comment_ids + (comment.id,),
                last.match_qualities + (anchor.match_quality.value,),
            )
        else:
            regions.append(
                HighlightRegion(
                    anchor.start, anchor.end, (comment.id,), (anchor.match_quality.value,)
                )
            )
    return regions


def _marked_segments(text: str, regions: Sequence[HighlightRegion]) -> list[tuple[str, HighlightRegion | None]]:
    segments: list[tuple[str, HighlightRegion | None]] = []
    cursor = 0
    for region in regions:
        if region.start > cursor:
            segments.append((text[cursor : region.start], None))
        segments.append((text[region.start : region.end], region))
        cursor = region.end
    if cursor < len(text):
        segments.append((text[cursor:], None))
    return segments


def export_annotated(
    essay: Essay,
    comments: Sequence[FeedbackComment],
    actions: Mapping[str, Sequence[ReviewAction]] | None = None,
    rubrics: Mapping[str, Rubric] | None = None,
) -> AnnotatedDocument:
    """Build the annotated document: highlight markers over anchor spans and
    one block per comment (document-level for unresolved anchors).

    ``comments`` must belong to the essay and should arrive in run output
    order (assignment rubric order), which is used as the tie-break.
    """
    actions = actions or {}
    regions = merge_regions(comments)

    markup_parts = []
    for segment_text, region in _marked_segments(essay.text, regions):
        if region is None:
            markup_parts.append(segment_text)
        else:
            ids = " ".join(region.comment_ids)
            markup_parts.append(f'<mark data-comment-ids="{ids}">{segment_text}</mark>')
    markup = "".join(markup_parts)

    order = {comment.id: i for i, comment in enumerate(comments)}
    blocks: list[CommentBlock] = []
    anchored = sorted(
        (c for c in comments if c.anchor.resolved),
        key=lambda c: (c.anchor.start, order[c.id]),
    )
    unanchored = sorted((c for c in comments if not c.anchor.resolved), key=lambda c: order[c.id])
    for comment in [*anchored, *unanchored]:
        state = effective_state(comment, actions.get(comment.id, ()))
        criterion = comment.rubric_id
        if rubrics and comment.rubric_id in rubrics:
            criterion = rubrics[comment.rubric_id].criterion
        blocks.append(
            CommentBlock(
                comment_id=comment.id,
                rubric_id=comment.rubric_id,
                criterion=criterion,
                verdict=comment.judgment.verdict.value,
                ai_feedback=comment.ai_feedback,
                historic_feedback=comment.historic_feedback or HISTORIC_ABSENT,
                rationale=comment.rationale,
                match_quality=comment.anchor.match_quality.value,
                score=comment.anchor.score,
                review_status=state.status,
                effective_text=state.text,
                effective_verdict=state.verdict.value,
                document_level=not comment.anchor.resolved,
                start=comment.anchor.start,
                end=comment.anchor.end,
            )
        )
    return AnnotatedDocument(essay.id, markup, tuple(blocks), tuple(regions))


def strip_markers(markup: str) -> str:
    return MARKER_RE.sub("", markup)


_PAGE_STYLE = """
body { font-family: Georgia, serif; margin: 2rem auto; max-width: 60rem; display: flex; gap: 2rem; }
.essay { flex: 3; line-height: 1.7; white-space: pre-wrap; }
.comments { flex: 2; font-family: system-ui, sans-serif; font-size: 0.9rem; }
mark { padding: 0 2px; border-radius: 2px; }
mark.mq-exact { background: #b5e3b5; }
mark.mq-normalized { background: #cfe3f7; }
mark.mq-fuzzy { background: #f7e3af; }
.block { border: 1px solid #ccc; border-radius: 6px; padding: 0.6rem; margin-bottom: 0.8rem; }
.block h4 { margin: 0 0 0.3rem; }
.badge { display: inline-block; padding: 0 6px; border-radius: 8px; background: #eee; margin-right: 4px; }
.badge.missed { background: #f6c6c6; }
.badge.met { background: #c9eec9; }
.doc-level { border-style: dashed; }
.field { margin: 0.2rem 0; }
.field .label { color: #666; }
"""


def render_page(
    doc: AnnotatedDocument, essay: Essay, *, title: str | None = None
) -> str:
    """Self-contained viewable page with embedded styles. Escapes content;
    use ``doc.html_like_markup`` when byte-exact essay text matters."""
    title = title or f"Essay {essay.id}"

    essay_parts = []
    for segment_text, region in _marked_segments(essay.text, doc.regions):
        escaped = html.escape(segment_text)
        if region is None:
            essay_parts.append(escaped)
        else:
            quality = region.match_qualities[0]
            ids = " ".join(region.comment_ids)
            essay_parts.append(
                f'<mark id="region-{region.start}" class="mq-{quality}" data-comment-ids="{ids}">{escaped}</mark>'
            )

    block_parts = []
    for block in doc.comment_blocks:
        cls = "block doc-level" if block.document_level else "block"
        location = (
            "document-level (no reliable anchor)"
            if block.document_level
            else f"chars {block.start}–{block.end}"
        )
        score = f" ({block.score:.3f})" if block.score is not None else ""
        effective = ""
        if block.review_status != "unreviewed":
            effective = (
                f'<div class="field"><span class="label">After review:</span> '
                f"[{block.effective_verdict}] {html.escape(block.effective_text)}</div>\n"
            )
        block_parts.append(
            f'<div class="{cls}" id="comment-{html.escape(block.comment_id)}">\n'
            f"<h4>{html.escape(block.criterion)}</h4>\n"
            f'<div class="field"><span class="badge {block.verdict}">{block.verdict}</span>'
            f'<span class="badge">{block.match_quality}{score}</span>'
            f'<span class="badge">{html.escape(block.review_status)}</span>'
            f'<span class="label">{location}</span></div>\n'
            f'<div class="field"><span class="label">AI feedback:</span> {html.escape(block.ai_feedback) or HISTORIC_ABSENT}</div>\n'
            f'<div class="field"><span class="label">Historic feedback:</span> {html.escape(block.historic_feedback)}</div>\n'
            f'<div class="field"><span class="label">Rationale:</span> {html.escape(block.rationale)}</div>\n'
            + effective
            + "</div>"
        )

    return (
        "<!doctype html>\n"
        f"<html><head><meta charset=\"utf-8\"><title>{html.escape(title)}</title>"
        f"<style>{_PAGE_STYLE}</style></head>\n"
        "<body>\n"
        f'<div class="essay">{"".join(essay_parts)}</div>\n'
        f'<div class="comments">\n{chr(10).join(block_parts)}\n</div>\n'
        "</body></html>\n"
    )


# ---------------------------------------------------------------------------
# Record-oriented run export / import.


def comment_record(comment: FeedbackComment, run_id: str) -> dict:
    return {
        "kind": "comment",
        "id": comment.id,
        "run_id": run_id,
        "essay_id": comment.essay_id,
        "rubric_id": comment.rubric_id,
        "pipeline_mode": comment.pipeline_mode.value,
        "verdict": comment.judgment.verdict.value,
        "rationale": comment.rationale,
        "ai_feedback": comment.ai_feedback,
        "historic_feedback": comment.historic_feedback,
        "anchor_start": comment.anchor.start,
        "anchor_end": comment.anchor.end,
        "anchor_quoted_text": comment.anchor.quoted_text,
        "anchor_match_quality": comment.anchor.match_quality.value,
        "anchor_score": comment.anchor.score,
        "supporting_spans": [span_to_dict(s) for s in comment.supporting_spans],
        "provenance": [completion_to_dict(r) for r in comment.provenance],
    }


def failure_record(failure: FailedComment, run_id: str) -> dict:
    return {
        "kind": "failure",
        "run_id": run_id,
        "essay_id": failure.essay_id,
        "rubric_id": failure.rubric_id,
        "step": failure.step,
        "error": failure.error,
    }


def export_records(run: RunResult, *, normalize: bool = False) -> str:
    """One flattened record per comment, then one per failure, in run order.

    ``normalize`` blanks fresh identifiers (comment ids, run id) so two runs
    of the same batch can be byte-diffed.
    """
    lines: list[str] = []
    run_id = "" if normalize else run.run_id
    for essay_result in run.essay_results:
        for comment in essay_result.comments:
            record = comment_record(comment, run_id)
            if normalize:
                record["id"] = ""
            lines.append(json.dumps(record, sort_keys=True, ensure_ascii=False))
    for essay_result in run.essay_results:
        for failure in essay_result.failures:
            lines.append(json.dumps(failure_record(failure, run_id), sort_keys=True, ensure_ascii=False))
    return "\n".join(lines) + ("\n" if lines else "")


def import_records(text: str) -> RunResult:
    """Rebuild a run (comments + failures grouped per essay, in record
    order) from an exported records file. Manifest data is not part of the
    record format; the returned manifest is a stub carrying only the run id."""
    from .pipeline import RunManifest

    comments: list[FeedbackComment] = []
    failures: list[FailedComment] = []
    run_id = ""
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        obj = json.loads(line)
        kind = obj.get("kind")
        if kind == "comment":
            run_id = obj["run_id"] or run_id
            anchor = EvidenceSpan(
                rubric_id=obj["rubric_id"],
                start=obj["anchor_start"],
                end=obj["anchor_end"],
                quoted_text=obj["anchor_quoted_text"],
                match_quality=MatchQuality(obj["anchor_match_quality"]),
                score=obj["anchor_score"],
            )
            comments.append(
                FeedbackComment(
                    id=obj["id"],
                    essay_id=obj["essay_id"],
                    rubric_id=obj["rubric_id"],
                    anchor=anchor,
                    supporting_spans=tuple(span_from_dict(s) for s in obj["supporting_spans"]),
                    judgment=Judgment(obj["rubric_id"], Verdict(obj["verdict"]), obj["rationale"]),
                    ai_feedback=obj["ai_feedback"],
                    historic_feedback=obj["historic_feedback"],
                    rationale=obj["rationale"],
                    pipeline_mode=PipelineMode(obj["pipeline_mode"]),
                    provenance=tuple(completion_from_dict(r) for r in obj["provenance"]),
                )
            )
        elif kind == "failure":
            run_id = obj["run_id"] or run_id
            failures.append(
                FailedComment(obj["essay_id"], obj["rubric_id"], obj["step"], obj["error"])
            )
        else:
            raise ValueError(f"line {lineno}: unknown record kind {kind!r}")

    by_essay: dict[str, tuple[list, list]] = {}
    for comment in comments:
        by_essay.setdefault(comment.essay_id, ([], []))[0].append(comment)
    for failure in failures:
        by_essay.setdefault(failure.essay_id, ([], []))[1].append(failure)
    essay_results = tuple(
        EssayRunResult(eid, tuple(pair[0]), tuple(pair[1])) for eid, pair in by_essay.items()
    )
    manifest = RunManifest(
        run_id=run_id,
        assignment_id="",
        essay_ids=tuple(by_essay),
        provider_name="",
        config={},
        created_at="",
    )
    return RunResult(run_id, manifest, essay_results)
