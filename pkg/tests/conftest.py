"""Shared builders for rubrics, essays, and assignments used across the suite."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from redink.model import Assignment, Elaboration, Essay, ExampleFeedback, Rubric

FIXTURES = Path(__file__).parent / "fixtures"

_acceptance_outcomes: dict[str, str] = {}


def pytest_runtest_logreport(report):
    if "test_acceptance" in report.nodeid:
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            _acceptance_outcomes[report.nodeid] = report.outcome


def pytest_terminal_summary(terminalreporter):
    """One pass/fail line per acceptance criterion."""
    if not _acceptance_outcomes:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for nodeid, outcome in sorted(_acceptance_outcomes.items()):
        name = nodeid.split("::")[-1]
        status = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{status}  {name}")


def make_rubric(
    rid: str = "r1",
    criterion: str = "Identify the market failure in the article.",
    keyword_groups: tuple[tuple[str, ...], ...] = (("market",), ("failure",)),
    historic: tuple[str, ...] = (),
    elaboration: Elaboration | None = None,
    short_name: str | None = None,
) -> Rubric:
    return Rubric(
        id=rid,
        short_name=short_name or rid,
        criterion=criterion,
        elaboration=elaboration,
        historic_feedback=historic,
        keyword_groups=keyword_groups,
    )


def make_essay(
    text: str,
    eid: str = "e1",
    assignment_id: str = "a1",
    author_alias: str = "student-1",
) -> Essay:
    return Essay.from_text(eid, assignment_id, author_alias, text)


def make_assignment(
    rubric_ids: tuple[str, ...],
    aid: str = "a1",
    examples: tuple[ExampleFeedback, ...] = (),
) -> Assignment:
    return Assignment(
        id=aid,
        title="Market failure essay",
        prompt_text="Identify an economic phenomenon involving market failure and analyze it.",
        rubric_ids=rubric_ids,
        few_shot_examples=examples,
    )


@pytest.fixture
def externality_fixture() -> dict:
    """The negative-externality grading scenario used as a transcript-replay
    fixture: rubric, student essay, canned feedback, and the recorded
    provider responses."""
    rubric = Rubric(
        id="r-externality",
        short_name="Involuntary third party",
        criterion=(
            "Explain that the thrid party in the negative externality is involuntarily affected."
        ),
        elaboration=Elaboration(
            domain_definition=(
                "A negative externality imposes costs on a third party who did not choose "
                "to take part in the market transaction."
            ),
            acceptable_alternatives=(
                "the third party has no say in the transaction",
                "bystanders bear the cost without consenting",
            ),
            expected_depth="Name the third party and state that it is affected without consent.",
        ),
        historic_feedback=(
            "Revisit the definition of an externality and consider how those affected are "
            "economically reflected in the market.",
        ),
        keyword_groups=(("involuntarily", "involuntary"),),
    )
    essay = Essay.from_text(
        "e-externality",
        "a-econ",
        "student-7",
        "In economics, we call this a negative externality; the social costs are not taken "
        "on by the producers or consumers but by society.",
    )
    assignment = Assignment(
        id="a-econ",
        title="Negative externality essay",
        prompt_text="Analyze the market failure in the news article.",
        rubric_ids=(rubric.id,),
    )
    transcript = json.loads((FIXTURES / "externality_transcript.json").read_text(encoding="utf-8"))
    return {
        "rubric": rubric,
        "essay": essay,
        "assignment": assignment,
        "transcript": transcript,
        "ai_feedback": (
            "How might the impact on individuals differ if they were voluntary participants "
            "in the market? Consider how the concept of choice plays into the definition of "
            "negative externalities."
        ),
        "historic_feedback": (
            "Revisit the definition of an externality and consider how those affected are "
            "economically reflected in the market."
        ),
    }
