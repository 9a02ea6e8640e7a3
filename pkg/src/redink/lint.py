"""Heuristic lint checks that flag rubrics an automated grader will
misread: missing domain definitions, no acceptable alternatives, vague
depth language, and prohibited behaviors phrased positively.

The word lists are configuration, not constants: the defaults cover the
common cases but courses can extend them.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum

from .model import Polarity, Rubric


class LintDimension(str, Enum):
    MISSING_DOMAIN_DEFINITION = "missing_domain_definition"
    MISSING_ALTERNATIVES = "missing_alternatives"
    UNSPECIFIED_DEPTH = "unspecified_depth"
    IMPLICIT_NEGATIVE_BEHAVIOR = "implicit_negative_behavior"


@dataclass(frozen=True)
class LintWarning:
    rubric_id: str
    dimension: LintDimension
    message: str


@dataclass(frozen=True)
class LintConfig:
    vague_depth_words: tuple[str, ...] = ("conceptually", "thoughtful", "well-reasoned", "discuss")
    negation_words: tuple[str, ...] = ("not", "no", "avoid", "without")


DEFAULT_LINT_CONFIG = LintConfig()

_QUOTED_TERM_RE = re.compile(r"[\"“‘'][^\"“”‘’']+[\"”’']")


def _has_specialized_term(criterion: str) -> bool:
    """A capitalized word past the first, or any quoted term, signals
    domain vocabulary the grader may not know."""
    words = criterion.split()
    if any(w[0].isupper() for w in words[1:] if w and w[0].isalpha()):
        return True
    return _QUOTED_TERM_RE.search(criterion) is not None


def _contains_word(text: str, word: str) -> bool:
    return re.search(rf"\b{re.escape(word)}\b", text, re.IGNORECASE) is not None


def lint_rubric(rubric: Rubric, config: LintConfig = DEFAULT_LINT_CONFIG) -> list[LintWarning]:
    """Run the four lint heuristics; deterministic and order-stable by
    dimension. At most one warning per dimension."""
    elaboration = rubric.elaboration
    warnings: list[LintWarning] = []

    has_definition = bool(elaboration and elaboration.domain_definition and elaboration.domain_definition.strip())
    if _has_specialized_term(rubric.criterion) and not has_definition:
        warnings.append(
            LintWarning(
                rubric.id,
                LintDimension.MISSING_DOMAIN_DEFINITION,
                "criterion names a specialized term but no domain definition is given; "
                "spell out the underlying concept so it can be checked",
            )
        )

    has_alternatives = bool(elaboration and elaboration.acceptable_alternatives)
    if not has_alternatives:
        warnings.append(
            LintWarning(
                rubric.id,
                LintDimension.MISSING_ALTERNATIVES,
                "no acceptable alternatives listed; add equivalent phrasings students "
                "may legitimately use",
            )
        )

    has_depth = bool(elaboration and elaboration.expected_depth and elaboration.expected_depth.strip())
    vague = [w for w in config.vague_depth_words if _contains_word(rubric.criterion, w)]
    if vague and not has_depth:
        warnings.append(
            LintWarning(
                rubric.id,
                LintDimension.UNSPECIFIED_DEPTH,
                f"criterion uses vague depth language ({', '.join(vague)}) without "
                "specifying the expected depth of explanation",
            )
        )

    if rubric.polarity is Polarity.PROHIBITED_BEHAVIOR:
        if not any(_contains_word(rubric.criterion, w) for w in config.negation_words):
            warnings.append(
                LintWarning(
                    rubric.id,
                    LintDimension.IMPLICIT_NEGATIVE_BEHAVIOR,
                    "rubric prohibits a behavior but the criterion has no explicit "
                    "negation; state what the student must NOT do",
                )
            )

    return warnings
