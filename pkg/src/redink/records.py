"""Record-oriented text serialization for rubrics, assignments, and essays.

One JSON object per line, discriminated by a ``record`` field. Lines are
emitted in canonical form (sorted keys), so parse -> serialize -> parse is
byte-stable modulo the field ordering of the source file. The full format
is documented in docs/schemas.md.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .model import Assignment, Elaboration, Essay, ExampleFeedback, Polarity, Rubric


class RecordError(ValueError):
    """Raised when an ingestion record is structurally invalid."""


@dataclass
class Catalog:
    """Everything ingested from one records file, in file order."""

    rubrics: dict[str, Rubric] = field(default_factory=dict)
    assignments: dict[str, Assignment] = field(default_factory=dict)
    essays: dict[str, Essay] = field(default_factory=dict)


def _require(obj: dict, key: str, kind: type, where: str):
    if key not in obj:
        raise RecordError(f"{where}: missing field {key!r}")
    value = obj[key]
    if not isinstance(value, kind):
        raise RecordError(f"{where}: field {key!r} must be {kind.__name__}")
    return value


def _str_list(obj: dict, key: str, where: str) -> tuple[str, ...]:
    raw = obj.get(key, [])
    if not isinstance(raw, list) or any(not isinstance(x, str) for x in raw):
        raise RecordError(f"{where}: field {key!r} must be a list of strings")
    return tuple(raw)


def rubric_from_record(obj: dict, where: str = "rubric") -> Rubric:
    elaboration = None
    raw_elab = obj.get("elaboration")
    if raw_elab is not None:
        if not isinstance(raw_elab, dict):
            raise RecordError(f"{where}: field 'elaboration' must be an object or null")
        polarity = raw_elab.get("polarity", Polarity.EXPECTED_BEHAVIOR.value)
        try:
            polarity = Polarity(polarity)
        except ValueError:
            raise RecordError(f"{where}: field 'elaboration.polarity' must be one of "
                              f"{[p.value for p in Polarity]}") from None
        elaboration = Elaboration(
            domain_definition=raw_elab.get("domain_definition"),
            acceptable_alternatives=_str_list(raw_elab, "acceptable_alternatives", where),
            expected_depth=raw_elab.get("expected_depth"),
            polarity=polarity,
        )
    groups_raw = obj.get("keyword_groups", [])
    if not isinstance(groups_raw, list) or any(
        not isinstance(g, list) or any(not isinstance(t, str) for t in g) for g in groups_raw
    ):
        raise RecordError(f"{where}: field 'keyword_groups' must be a list of lists of strings")
    try:
        return Rubric(
            id=_require(obj, "id", str, where),
            short_name=_require(obj, "short_name", str, where),
            criterion=_require(obj, "criterion", str, where),
            elaboration=elaboration,
            historic_feedback=_str_list(obj, "historic_feedback", where),
            keyword_groups=tuple(tuple(g) for g in groups_raw),
        )
    except ValueError as exc:
        raise RecordError(f"{where}: {exc}") from None


def rubric_to_record(rubric: Rubric) -> dict:
    elaboration = None
    if rubric.elaboration is not None:
        elaboration = {
            "domain_definition": rubric.elaboration.domain_definition,
            "acceptable_alternatives": list(rubric.elaboration.acceptable_alternatives),
            "expected_depth": rubric.elaboration.expected_depth,
            "polarity": rubric.elaboration.polarity.value,
        }
    return {
        "record": "rubric",
        "id": rubric.id,
        "short_name": rubric.short_name,
        "criterion": rubric.criterion,
        "elaboration": elaboration,
        "historic_feedback": list(rubric.historic_feedback),
        "keyword_groups": [list(g) for g in rubric.keyword_groups],
    }


def assignment_from_record(obj: dict, where: str = "assignment") -> Assignment:
    examples_raw = obj.get("few_shot_examples", [])
    if not isinstance(examples_raw, list):
        raise RecordError(f"{where}: field 'few_shot_examples' must be a list")
    examples = []
    for i, ex in enumerate(examples_raw):
        if not isinstance(ex, dict):
            raise RecordError(f"{where}: few_shot_examples[{i}] must be an object")
        try:
            examples.append(
                ExampleFeedback(
                    situation=_require(ex, "situation", str, f"{where}.few_shot_examples[{i}]"),
                    feedback_text=_require(ex, "feedback_text", str, f"{where}.few_shot_examples[{i}]"),
                )
            )
        except ValueError as exc:
            raise RecordError(f"{where}: {exc}") from None
    return Assignment(
        id=_require(obj, "id", str, where),
        title=_require(obj, "title", str, where),
        prompt_text=_require(obj, "prompt_text", str, where),
        rubric_ids=_str_list(obj, "rubric_ids", where),
        few_shot_examples=tuple(examples),
    )


def assignment_to_record(assignment: Assignment) -> dict:
    return {
        "record": "assignment",
        "id": assignment.id,
        "title": assignment.title,
        "prompt_text": assignment.prompt_text,
        "rubric_ids": list(assignment.rubric_ids),
        "few_shot_examples": [
            {"situation": ex.situation, "feedback_text": ex.feedback_text}
            for ex in assignment.few_shot_examples
        ],
    }


def essay_from_record(obj: dict, where: str = "essay") -> Essay:
    return Essay.from_text(
        id=_require(obj, "id", str, where),
        assignment_id=_require(obj, "assignment_id", str, where),
        author_alias=_require(obj, "author_alias", str, where),
        text=_require(obj, "text", str, where),
    )


def essay_to_record(essay: Essay) -> dict:
    return {
        "record": "essay",
        "id": essay.id,
        "assignment_id": essay.assignment_id,
        "author_alias": essay.author_alias,
        "text": essay.text,
    }


_PARSERS = {
    "rubric": rubric_from_record,
    "assignment": assignment_from_record,
    "essay": essay_from_record,
}


def parse_records(text: str) -> Catalog:
    """Parse a records file; raises RecordError naming the offending line."""
    catalog = Catalog()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise RecordError(f"line {lineno}: invalid JSON ({exc.msg})") from None
        if not isinstance(obj, dict):
            raise RecordError(f"line {lineno}: record must be a JSON object")
        kind = obj.get("record")
        parser = _PARSERS.get(kind)
        if parser is None:
            raise RecordError(f"line {lineno}: unknown record kind {kind!r}")
        where = f"line {lineno} ({kind})"
        parsed = parser(obj, where)
        bucket = {
            "rubric": catalog.rubrics,
            "assignment": catalog.assignments,
            "essay": catalog.essays,
        }[kind]
        if parsed.id in bucket:
            raise RecordError(f"line {lineno}: duplicate {kind} id {parsed.id!r}")
        bucket[parsed.id] = parsed
    return catalog


def canonical_line(record: dict) -> str:
    return json.dumps(record, sort_keys=True, ensure_ascii=False)


def serialize_records(catalog: Catalog) -> str:
    """Emit rubrics, then assignments, then essays, one canonical JSON
    object per line."""
    lines = []
    for rubric in catalog.rubrics.values():
        lines.append(canonical_line(rubric_to_record(rubric)))
    for assignment in catalog.assignments.values():
        lines.append(canonical_line(assignment_to_record(assignment)))
    for essay in catalog.essays.values():
        lines.append(canonical_line(essay_to_record(essay)))
    return "\n".join(lines) + ("\n" if lines else "")
