"""Prompt builders for the three generation steps.

The judgment prompt injects the rubric's full elaboration block verbatim:
judgment accuracy depends on the grader-facing definitions being visible to
the model, not summarized away.
"""

from __future__ import annotations

from typing import Sequence

from .gateway import SCHEMA_SHAPES
from .model import Essay, ExampleFeedback, Rubric
from .textspan import EvidenceSpan

DEFAULT_GUIDELINES = (
    "You help a teaching assistant write feedback on a student essay. Rules: "
    "(1) use specific, localized language that points at the student's own wording; "
    "(2) when the student meets the criterion, open with genuine praise for what they did; "
    "(3) when the student misses the criterion, pinpoint the mistake and pose guiding "
    "questions that steer them toward the fix without revealing the answer."
)


def _json_only(schema_id: str) -> str:
    return f"Reply with ONLY a JSON object of this shape: {SCHEMA_SHAPES[schema_id]}"


def rubric_block(rubric: Rubric) -> str:
    """Render the criterion plus the full elaboration block, verbatim."""
    lines = [f"Criterion: {rubric.criterion}"]
    elab = rubric.elaboration
    if elab is not None:
        if elab.domain_definition:
            lines.append(f"Domain definition: {elab.domain_definition}")
        if elab.acceptable_alternatives:
            lines.append("Acceptable alternatives:")
            lines.extend(f"- {alt}" for alt in elab.acceptable_alternatives)
        if elab.expected_depth:
            lines.append(f"Expected depth: {elab.expected_depth}")
        lines.append(f"Polarity: {elab.polarity.value}")
    return "\n".join(lines)


def build_evidence_prompt(essay: Essay, rubric: Rubric, max_quotes: int) -> tuple[str, str]:
    system = (
        "You locate evidence in student essays. Given a grading criterion and an essay, "
        "quote the sentences most relevant to deciding whether the criterion is met or "
        "missed. Quote verbatim; never paraphrase. "
        + _json_only("evidence_list")
    )
    user = (
        f"{rubric_block(rubric)}\n\n"
        f"Essay:\n{essay.text}\n\n"
        f"Return up to {max_quotes} verbatim quotes, most relevant first."
    )
    return system, user


def build_judgment_prompt(
    essay: Essay, rubric: Rubric, evidence: Sequence[EvidenceSpan]
) -> tuple[str, str]:
    system = (
        "You judge whether a student essay satisfies one grading criterion. Decide "
        "strictly from the essay; use the evidence quotes as pointers. "
        + _json_only("judgment")
    )
    quote_lines = "\n".join(f"- {span.quoted_text}" for span in evidence) or "- (none found)"
    user = (
        f"{rubric_block(rubric)}\n\n"
        f"Evidence quotes:\n{quote_lines}\n\n"
        f"Full essay:\n{essay.text}"
    )
    return system, user


def build_feedback_prompt(
    essay: Essay,
    rubric: Rubric,
    evidence: Sequence[EvidenceSpan],
    verdict: str,
    guideline_text: str,
    examples: Sequence[ExampleFeedback] = (),
    few_shot_limit: int = 4,
) -> tuple[str, str]:
    system = guideline_text + " " + _json_only("feedback_message")
    shots = list(examples)[: max(few_shot_limit, 0)]
    if shots:
        rendered = "\n\n".join(
            f"Situation: {ex.situation}\nFeedback: {ex.feedback_text}" for ex in shots
        )
        system += "\n\nExamples of high-quality feedback:\n" + rendered
    quote_lines = "\n".join(f"- {span.quoted_text}" for span in evidence) or "- (none found)"
    user = (
        f"{rubric_block(rubric)}\n\n"
        f"Judgment: the criterion was {verdict}.\n\n"
        f"Evidence quotes:\n{quote_lines}\n\n"
        f"Essay:\n{essay.text}\n\n"
        f"Write the feedback message for this student."
    )
    return system, user
