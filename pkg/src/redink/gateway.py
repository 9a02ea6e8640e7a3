"""Provider abstraction for all model calls: request shaping, structured
output validation, retries with correction prompts, and a deterministic
rule-based mock provider for tests.

Structured output is enforced on our side by validate-and-retry rather than
assuming the provider supports schemas, so any chat-style endpoint works.
"""

from __future__ import annotations

import json
import os
import re
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Any, Protocol

import httpx

from .model import Essay, Rubric

DEFAULT_TEMPERATURE = 0.05
DEFAULT_MAX_RETRIES = 2
DEFAULT_TIMEOUT_SECONDS = 60.0
DEFAULT_CONCURRENCY = 4

PROVIDER_URL_ENV = "FEEDBACK_PROVIDER_URL"
PROVIDER_KEY_ENV = "FEEDBACK_PROVIDER_KEY"
PROVIDER_MODEL_ENV = "FEEDBACK_PROVIDER_MODEL"

SCHEMA_SHAPES = {
    "evidence_list": '{"quotes": ["<verbatim quote from the essay>", ...]}',
    "judgment": '{"verdict": "met" or "missed", "rationale": "<one short paragraph>"}',
    "feedback_message": '{"feedback": "<the feedback message>"}',
}
SCHEMA_IDS = tuple(SCHEMA_SHAPES)


class GatewayError(Exception):
    """Base class for gateway failures surfaced to the pipeline."""


class ProviderUnreachable(GatewayError):
    """Network or auth failure that persisted through every retry."""


class SchemaViolation(GatewayError):
    """Every attempt produced non-conformant output; carries each raw
    attempt for audit."""

    def __init__(self, schema_id: str, attempts: list[str], errors: list[str]):
        self.schema_id = schema_id
        self.attempts = attempts
        self.errors = errors
        super().__init__(
            f"no conformant {schema_id} response after {len(attempts)} attempt(s): "
            + "; ".join(errors[-3:])
        )


class ProviderTransportError(GatewayError):
    """Raised by a provider for a single failed exchange; retried by
    ``complete`` up to the request's retry budget."""


@dataclass(frozen=True)
class PromptContext:
    """Structured inputs attached to a request for the mock provider's
    benefit; remote providers ignore it."""

    rubric: Rubric
    essay: Essay


@dataclass(frozen=True)
class CompletionRequest:
    system_prompt: str
    user_prompt: str
    response_schema: str
    temperature: float = DEFAULT_TEMPERATURE
    max_retries: int = DEFAULT_MAX_RETRIES
    context: PromptContext | None = None

    def __post_init__(self) -> None:
        if self.response_schema not in SCHEMA_IDS:
            raise ValueError(f"unknown response schema {self.response_schema!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class CompletionResult:
    parsed: Any
    raw_text: str
    provider_name: str
    attempt_count: int


class Provider(Protocol):
    name: str

    def send(self, request: CompletionRequest) -> str: ...


def validate_payload(schema_id: str, payload: Any) -> list[str]:
    """Validate a parsed response against a registered schema; returns one
    error string per violation."""
    errors: list[str] = []
    if not isinstance(payload, dict):
        return [f"{schema_id}: response must be a JSON object"]
    if schema_id == "evidence_list":
        quotes = payload.get("quotes")
        if not isinstance(quotes, list):
            errors.append("evidence_list: 'quotes' must be a list")
        else:
            for i, q in enumerate(quotes):
                if not isinstance(q, str):
                    errors.append(f"evidence_list: quotes[{i}] must be a string")
    elif schema_id == "judgment":
        verdict = payload.get("verdict")
        if verdict not in ("met", "missed"):
            errors.append("judgment: 'verdict' must be \"met\" or \"missed\"")
        rationale = payload.get("rationale")
        if not isinstance(rationale, str) or not rationale.strip():
            errors.append("judgment: 'rationale' must be a non-empty string")
    elif schema_id == "feedback_message":
        feedback = payload.get("feedback")
        if not isinstance(feedback, str) or not feedback.strip():
            errors.append("feedback_message: 'feedback' must be a non-empty string")
    else:
        errors.append(f"unknown schema {schema_id!r}")
    return errors


class AuditLog:
    """Appends one canonical JSON record per provider exchange."""

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self._lock = threading.Lock()

    def append(self, record: dict) -> None:
        line = json.dumps(record, sort_keys=True, ensure_ascii=False)
        with self._lock:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with self.path.open("a", encoding="utf-8") as handle:
                handle.write(line + "\n")


def _correction_note(schema_id: str, errors: list[str]) -> str:
    return (
        "\n\nYour previous reply did not match the required format: "
        + "; ".join(errors)
        + f"\nReply again with ONLY a JSON object of this shape: {SCHEMA_SHAPES[schema_id]}"
    )


def complete(
    request: CompletionRequest,
    provider: Provider,
    *,
    audit_log: AuditLog | None = None,
) -> CompletionResult:
    """Send a request, validate the response against its schema, and re-ask
    with a correction instruction on failure, up to ``max_retries`` extra
    attempts. Never returns a non-conformant value.

    Raises SchemaViolation when every attempt was malformed (carrying each
    raw attempt), or ProviderUnreachable when the provider never produced a
    response at all.
    """
    raw_attempts: list[str] = []
    all_errors: list[str] = []
    transport_failure: str | None = None
    current = request

    for attempt in range(1, request.max_retries + 2):
        try:
            raw = provider.send(current)
        except ProviderTransportError as exc:
            transport_failure = str(exc)
            if audit_log:
                audit_log.append(
                    {
                        "provider": provider.name,
                        "schema": request.response_schema,
                        "attempt": attempt,
                        "system_prompt": current.system_prompt,
                        "user_prompt": current.user_prompt,
                        "temperature": current.temperature,
                        "ok": False,
                        "error": transport_failure,
                    }
                )
            continue

        try:
            parsed = json.loads(raw)
            errors = validate_payload(request.response_schema, parsed)
        except json.JSONDecodeError as exc:
            parsed = None
            errors = [f"response is not valid JSON: {exc.msg}"]

        if audit_log:
            audit_log.append(
                {
                    "provider": provider.name,
                    "schema": request.response_schema,
                    "attempt": attempt,
                    "system_prompt": current.system_prompt,
                    "user_prompt": current.user_prompt,
                    "temperature": current.temperature,
                    "raw_text": raw,
                    "ok": not errors,
                    "errors": errors,
                }
            )

        if not errors:
            return CompletionResult(parsed, raw, provider.name, attempt)

        raw_attempts.append(raw)
        all_errors.extend(errors)
        current = replace(current, user_prompt=current.user_prompt + _correction_note(request.response_schema, errors))

    if raw_attempts:
        raise SchemaViolation(request.response_schema, raw_attempts, all_errors)
    raise ProviderUnreachable(transport_failure or "provider produced no response")


# ---------------------------------------------------------------------------
# Mock provider: deterministic, rule-based, keyed on rubric keyword groups.


def _group_hits(rubric: Rubric, essay: Essay) -> list[tuple[tuple[str, ...], int | None]]:
    """For each keyword group, the index of the first sentence containing any
    member (case-insensitive, word-boundary), or None."""
    hits: list[tuple[tuple[str, ...], int | None]] = []
    for group in rubric.keyword_groups:
        found: int | None = None
        for sentence in essay.sentences:
            if any(
                re.search(rf"\b{re.escape(term)}\b", sentence.text, re.IGNORECASE)
                for term in group
            ):
                found = sentence.index
                break
        hits.append((group, found))
    return hits


def mock_response(schema_id: str, rubric: Rubric, essay: Essay) -> str:
    """Deterministic response text for the given schema; a pure function of
    (schema, rubric, essay)."""
    hits = _group_hits(rubric, essay)
    matched = [(g, i) for g, i in hits if i is not None]
    missing = [g for g, i in hits if i is None]
    met = not missing

    if schema_id == "evidence_list":
        indexes = sorted({i for _, i in matched})
        quotes = [essay.sentences[i].text for i in indexes]
        payload: dict[str, Any] = {"quotes": quotes}
    elif schema_id == "judgment":
        matched_names = ", ".join("/".join(g) for g, _ in matched) or "none"
        if met:
            rationale = f"Matched cue groups: {matched_names}."
        else:
            missing_names = ", ".join("/".join(g) for g in missing)
            rationale = f"Matched cue groups: {matched_names}. Missing cue groups: {missing_names}."
        payload = {"verdict": "met" if met else "missed", "rationale": rationale}
    elif schema_id == "feedback_message":
        if met:
            payload = {"feedback": f"Great work: {rubric.criterion}."}
        else:
            term = missing[0][0]
            payload = {"feedback": f"Consider: what role does '{term}' play here?"}
    else:
        raise ValueError(f"unknown schema {schema_id!r}")
    return json.dumps(payload, sort_keys=True, ensure_ascii=False)


class MockProvider:
    """Rule-based stand-in for a real model; conformant by construction and
    byte-identical across runs and platforms."""

    name = "mock"

    def send(self, request: CompletionRequest) -> str:
        ctx = request.context
        if ctx is None:
            raise ProviderTransportError("mock provider requires rubric/essay context")
        if not ctx.rubric.keyword_groups:
            raise ProviderTransportError(
                f"mock provider requires keyword_groups on rubric {ctx.rubric.id!r}"
            )
        return mock_response(request.response_schema, ctx.rubric, ctx.essay)


def mock_complete(request: CompletionRequest, rubric: Rubric, essay: Essay) -> CompletionResult:
    """Run a request against the mock provider with explicit context."""
    return complete(replace(request, context=PromptContext(rubric, essay)), MockProvider())


# ---------------------------------------------------------------------------
# Transcript provider: replays recorded raw responses, for fixture tests and
# reproducing past runs from audit logs.


class TranscriptProvider:
    """Replays recorded raw responses. Each record is a dict with
    ``response_schema``, ``raw_text``, and optionally ``rubric_id`` to pin a
    record to one rubric's requests."""

    name = "transcript"

    def __init__(self, records: list[dict]):
        self._records = [dict(r) for r in records]
        self._used = [False] * len(self._records)
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path) -> "TranscriptProvider":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if not isinstance(data, list):
            raise ValueError("transcript file must contain a JSON list of records")
        return cls(data)

    def send(self, request: CompletionRequest) -> str:
        rubric_id = request.context.rubric.id if request.context else None
        with self._lock:
            for i, record in enumerate(self._records):
                if self._used[i]:
                    continue
                if record.get("response_schema") != request.response_schema:
                    continue
                pinned = record.get("rubric_id")
                if pinned is not None and pinned != rubric_id:
                    continue
                self._used[i] = True
                return record["raw_text"]
        raise ProviderTransportError(
            f"transcript exhausted: no recorded {request.response_schema} response"
            + (f" for rubric {rubric_id!r}" if rubric_id else "")
        )


# ---------------------------------------------------------------------------
# Remote provider: authenticated chat-completions endpoint.


class RemoteProvider:
    """Talks to a chat-completions style endpoint. The endpoint URL and key
    come from FEEDBACK_PROVIDER_URL / FEEDBACK_PROVIDER_KEY unless given
    explicitly; ``transport`` is injectable for tests."""

    name = "remote"

    def __init__(
        self,
        url: str | None = None,
        api_key: str | None = None,
        model: str | None = None,
        timeout: float = DEFAULT_TIMEOUT_SECONDS,
        transport: httpx.BaseTransport | None = None,
    ):
        self.url = url or os.environ.get(PROVIDER_URL_ENV)
        self.api_key = api_key or os.environ.get(PROVIDER_KEY_ENV)
        self.model = model or os.environ.get(PROVIDER_MODEL_ENV)
        self._client = httpx.Client(timeout=timeout, transport=transport)

    def send(self, request: CompletionRequest) -> str:
        if not self.url:
            raise ProviderTransportError(f"{PROVIDER_URL_ENV} is not set")
        body: dict[str, Any] = {
            "messages": [
                {"role": "system", "content": request.system_prompt},
                {"role": "user", "content": request.user_prompt},
            ],
            "temperature": request.temperature,
        }
        if self.model:
            body["model"] = self.model
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = self._client.post(self.url, json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise ProviderTransportError(f"provider request failed: {exc}") from exc
        if response.status_code != 200:
            raise ProviderTransportError(
                f"provider returned HTTP {response.status_code}: {response.text[:200]}"
            )
        try:
            return response.json()["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise ProviderTransportError(f"malformed provider response envelope: {exc}") from exc
