"""Shared domain types: assignments, rubrics, essays, and few-shot examples.

Everything here is an immutable value object; instances are safe to share
across threads without synchronization.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping

from .textspan import Sentence, segment


class Polarity(str, Enum):
    EXPECTED_BEHAVIOR = "expected_behavior"
    PROHIBITED_BEHAVIOR = "prohibited_behavior"


@dataclass(frozen=True)
class Elaboration:
    """Optional structured detail that makes a rubric machine-evaluable."""

    domain_definition: str | None = None
    acceptable_alternatives: tuple[str, ...] = ()
    expected_depth: str | None = None
    polarity: Polarity = Polarity.EXPECTED_BEHAVIOR


@dataclass(frozen=True)
class Rubric:
    """One gradable criterion, with instructor-authored canned feedback.

    ``keyword_groups`` is consumed only by the mock provider and the linter;
    real providers ignore it.
    """

    id: str
    short_name: str
    criterion: str
    elaboration: Elaboration | None = None
    historic_feedback: tuple[str, ...] = ()
    keyword_groups: tuple[tuple[str, ...], ...] = ()

    def __post_init__(self) -> None:
        if not self.criterion.strip():
            raise ValueError(f"rubric {self.id or '<unnamed>'}: criterion must be non-empty")
        for entry in self.historic_feedback:
            if not entry.strip():
                raise ValueError(f"rubric {self.id}: historic_feedback entries must be non-empty")

    @property
    def polarity(self) -> Polarity:
        return self.elaboration.polarity if self.elaboration else Polarity.EXPECTED_BEHAVIOR


@dataclass(frozen=True)
class ExampleFeedback:
    """Instructor-authored sample of high-quality feedback, used few-shot."""

    situation: str
    feedback_text: str

    def __post_init__(self) -> None:
        if not self.situation.strip():
            raise ValueError("example feedback: situation must be non-empty")
        if not self.feedback_text.strip():
            raise ValueError("example feedback: feedback_text must be non-empty")


@dataclass(frozen=True)
class Assignment:
    id: str
    title: str
    prompt_text: str
    rubric_ids: tuple[str, ...]
    few_shot_examples: tuple[ExampleFeedback, ...] = ()


@dataclass(frozen=True)
class Essay:
    """Immutable student text plus derived sentence spans."""

    id: str
    assignment_id: str
    author_alias: str
    text: str
    sentences: tuple[Sentence, ...] = field(default=(), compare=False)

    @classmethod
    def from_text(cls, id: str, assignment_id: str, author_alias: str, text: str) -> "Essay":
        return cls(id, assignment_id, author_alias, text, tuple(segment(text)))


def validate_assignment(
    assignment: Assignment, rubrics: Mapping[str, Rubric] | Iterable[Rubric]
) -> list[str]:
    """Check assignment invariants; returns one error per violation, each
    naming the offending field. An empty list means every other module will
    accept the pair without precondition failures."""
    if not isinstance(rubrics, Mapping):
        rubrics = {r.id: r for r in rubrics}
    errors: list[str] = []
    if not assignment.rubric_ids:
        errors.append("rubric_ids: must not be empty")
    seen: set[str] = set()
    for rid in assignment.rubric_ids:
        if rid in seen:
            errors.append(f"rubric_ids: duplicate rubric id {rid!r}")
        seen.add(rid)
        if rid not in rubrics:
            errors.append(f"rubric_ids: unknown rubric id {rid!r}")
    return errors
