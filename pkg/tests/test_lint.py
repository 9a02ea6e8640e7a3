"""Rubric lint heuristics, pinned to the canonical good/bad rubric wordings."""

from __future__ import annotations

from redink.lint import DEFAULT_LINT_CONFIG, LintConfig, LintDimension, lint_rubric
from redink.model import Elaboration, Polarity, Rubric

FULL_ELABORATION = Elaboration(
    domain_definition="As the price of a good increases, the quantity demanded decreases.",
    acceptable_alternatives=("the demand curve shifts leftwards",),
    expected_depth="State the mechanism, not just the direction.",
)


def _rubric(criterion, elaboration=None, rid="r1"):
    return Rubric(id=rid, short_name=rid, criterion=criterion, elaboration=elaboration)


def dimensions(rubric, config=DEFAULT_LINT_CONFIG):
    return [w.dimension for w in lint_rubric(rubric, config)]


def test_bad_depth_example_triggers_unspecified_depth():
    rubric = _rubric("Explain the concept of artificially scarce goods conceptually.")
    assert LintDimension.UNSPECIFIED_DEPTH in dimensions(rubric)


def test_bad_negative_example_triggers_implicit_negative_behavior():
    rubric = _rubric(
        "Direct in-text references are present.",
        Elaboration(polarity=Polarity.PROHIBITED_BEHAVIOR),
    )
    assert LintDimension.IMPLICIT_NEGATIVE_BEHAVIOR in dimensions(rubric)


def test_good_depth_example_fully_elaborated_is_clean():
    rubric = _rubric(
        "The student explained why deadweight loss exists and mention it is quite large "
        "given that the Government purchased the excess.",
        Elaboration(
            domain_definition=(
                "Deadweight loss is the lost surplus from units not traded at the "
                "intervention price."
            ),
            acceptable_alternatives=("the student quantifies the surplus lost to the floor",),
            expected_depth="Explain why the loss exists and note its size.",
        ),
    )
    assert lint_rubric(rubric) == []


def test_good_negative_example_fully_elaborated_is_clean():
    rubric = _rubric(
        "The student did not use long direct quotes (more than 1 sentence in one quote) "
        "from the article.",
        Elaboration(
            domain_definition="A long direct quote copies more than one sentence verbatim.",
            acceptable_alternatives=("short fragments in quotation marks are fine",),
            expected_depth="Any quotation beyond one sentence counts.",
            polarity=Polarity.PROHIBITED_BEHAVIOR,
        ),
    )
    assert lint_rubric(rubric) == []


def test_missing_domain_definition_for_capitalized_term():
    rubric = _rubric("The student demonstrated an understanding of the Law of Demand.")
    assert LintDimension.MISSING_DOMAIN_DEFINITION in dimensions(rubric)


def test_missing_domain_definition_for_quoted_term():
    rubric = _rubric('The student correctly used the term "quantity demanded".')
    assert LintDimension.MISSING_DOMAIN_DEFINITION in dimensions(rubric)


def test_no_domain_warning_when_definition_present():
    rubric = _rubric(
        "The student demonstrated an understanding of the Law of Demand.",
        FULL_ELABORATION,
    )
    assert LintDimension.MISSING_DOMAIN_DEFINITION not in dimensions(rubric)


def test_missing_alternatives_fires_without_elaboration():
    rubric = _rubric("The student stated that demand for labor increases.")
    assert LintDimension.MISSING_ALTERNATIVES in dimensions(rubric)


def test_depth_words_are_word_bounded():
    # "discussion" must not trigger the "discuss" depth word
    rubric = _rubric("A discussion section is included.", FULL_ELABORATION)
    assert LintDimension.UNSPECIFIED_DEPTH not in dimensions(rubric)


def test_negation_words_are_word_bounded():
    # "nothing" contains "no" but is not an explicit negation
    rubric = _rubric(
        "Nothingburger claims are flagged.",
        Elaboration(polarity=Polarity.PROHIBITED_BEHAVIOR),
    )
    dims = dimensions(rubric)
    assert LintDimension.IMPLICIT_NEGATIVE_BEHAVIOR in dims


def test_explicit_negation_silences_negative_warning():
    rubric = _rubric(
        "The student did not include long quotes.",
        Elaboration(polarity=Polarity.PROHIBITED_BEHAVIOR),
    )
    assert LintDimension.IMPLICIT_NEGATIVE_BEHAVIOR not in dimensions(rubric)


def test_linter_is_deterministic_and_dimension_ordered():
    rubric = _rubric(
        "Discuss the Law of Demand conceptually.",
        Elaboration(polarity=Polarity.PROHIBITED_BEHAVIOR),
    )
    first = lint_rubric(rubric)
    second = lint_rubric(rubric)
    assert first == second
    dims = [w.dimension for w in first]
    order = list(LintDimension)
    assert dims == sorted(dims, key=order.index)
    assert len(first) == 4  # all four dimensions at once, at most one each


def test_custom_word_lists_are_configuration():
    rubric = _rubric("Provide a rigorous solution.")
    assert LintDimension.UNSPECIFIED_DEPTH not in dimensions(rubric)
    config = LintConfig(vague_depth_words=("rigorous",))
    assert LintDimension.UNSPECIFIED_DEPTH in dimensions(rubric, config)


def test_warning_carries_rubric_id_and_message():
    rubric = _rubric("Explain the concept conceptually.", rid="econ-3")
    warnings = lint_rubric(rubric)
    assert all(w.rubric_id == "econ-3" for w in warnings)
    assert all(w.message for w in warnings)
