"""Domain type invariants and assignment validation."""

from __future__ import annotations

import dataclasses

import pytest

from redink.model import Elaboration, Essay, ExampleFeedback, Polarity, Rubric, validate_assignment

from conftest import make_assignment, make_rubric


def test_validate_assignment_empty_rubrics():
    assignment = make_assignment(())
    errors = validate_assignment(assignment, {})
    assert errors == ["rubric_ids: must not be empty"]


def test_validate_assignment_duplicate_rubric():
    r1 = make_rubric("R1")
    assignment = make_assignment(("R1", "R1"))
    errors = validate_assignment(assignment, {"R1": r1})
    assert any("duplicate rubric id 'R1'" in e for e in errors)


def test_validate_assignment_unknown_rubric():
    assignment = make_assignment(("R1", "R9"))
    errors = validate_assignment(assignment, {"R1": make_rubric("R1")})
    assert errors == ["rubric_ids: unknown rubric id 'R9'"]


def test_validate_assignment_well_formed():
    rubrics = {f"R{i}": make_rubric(f"R{i}") for i in range(1, 5)}
    assignment = make_assignment(tuple(rubrics))
    assert validate_assignment(assignment, rubrics) == []


def test_validate_assignment_accepts_iterable_of_rubrics():
    rubrics = [make_rubric("R1"), make_rubric("R2")]
    assignment = make_assignment(("R1", "R2"))
    assert validate_assignment(assignment, rubrics) == []


def test_rubric_requires_criterion():
    with pytest.raises(ValueError, match="criterion"):
        Rubric(id="r", short_name="r", criterion="   ")


def test_rubric_rejects_blank_historic_entries():
    with pytest.raises(ValueError, match="historic_feedback"):
        Rubric(id="r", short_name="r", criterion="c", historic_feedback=("ok", " "))


def test_rubric_polarity_defaults_to_expected():
    rubric = make_rubric()
    assert rubric.polarity is Polarity.EXPECTED_BEHAVIOR
    prohibited = Rubric(
        id="r",
        short_name="r",
        criterion="No direct quotes",
        elaboration=Elaboration(polarity=Polarity.PROHIBITED_BEHAVIOR),
    )
    assert prohibited.polarity is Polarity.PROHIBITED_BEHAVIOR


def test_example_feedback_requires_both_fields():
    with pytest.raises(ValueError):
        ExampleFeedback("", "text")
    with pytest.raises(ValueError):
        ExampleFeedback("situation", "  ")


def test_essay_text_is_immutable():
    essay = Essay.from_text("e1", "a1", "anon", "Price rises. Demand falls.")
    with pytest.raises(dataclasses.FrozenInstanceError):
        essay.text = "changed"


def test_essay_from_text_populates_sentences():
    essay = Essay.from_text("e1", "a1", "anon", "Price rises. Demand falls.")
    assert [s.text for s in essay.sentences] == ["Price rises.", "Demand falls."]
    assert all(essay.text[s.start : s.end] == s.text for s in essay.sentences)
