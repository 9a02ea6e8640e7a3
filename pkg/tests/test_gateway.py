"""Gateway behavior: schema validation, validate-and-retry, providers."""

from __future__ import annotations

import json

import httpx
import pytest

from redink.gateway import (
    AuditLog,
    CompletionRequest,
    MockProvider,
    PromptContext,
    ProviderTransportError,
    ProviderUnreachable,
    RemoteProvider,
    SchemaViolation,
    TranscriptProvider,
    complete,
    mock_complete,
    mock_response,
    validate_payload,
)

from conftest import make_essay, make_rubric


def judgment_request(**overrides):
    defaults = dict(
        system_prompt="sys",
        user_prompt="user",
        response_schema="judgment",
    )
    defaults.update(overrides)
    return CompletionRequest(**defaults)


class ScriptedProvider:
    """Returns canned raw strings in order; used to fault-inject."""

    name = "scripted"

    def __init__(self, outputs):
        self.outputs = list(outputs)
        self.requests = []

    def send(self, request):
        self.requests.append(request)
        out = self.outputs.pop(0)
        if isinstance(out, Exception):
            raise out
        return out


VALID_JUDGMENT = json.dumps({"verdict": "met", "rationale": "all cues found"})


# -- schema registry -----------------------------------------------------------


def test_request_rejects_unknown_schema():
    with pytest.raises(ValueError, match="unknown response schema"):
        judgment_request(response_schema="poem")


def test_request_defaults():
    request = judgment_request()
    assert request.temperature == 0.05
    assert request.max_retries == 2


def test_validate_payload_judgment():
    assert validate_payload("judgment", {"verdict": "met", "rationale": "r"}) == []
    assert validate_payload("judgment", {"verdict": "maybe", "rationale": "r"})
    assert validate_payload("judgment", {"verdict": "met", "rationale": "  "})
    assert validate_payload("judgment", ["not an object"])


def test_validate_payload_evidence_list():
    assert validate_payload("evidence_list", {"quotes": []}) == []
    assert validate_payload("evidence_list", {"quotes": ["a", "b"]}) == []
    assert validate_payload("evidence_list", {"quotes": "a"})
    assert validate_payload("evidence_list", {"quotes": [1]})


def test_validate_payload_feedback():
    assert validate_payload("feedback_message", {"feedback": "x"}) == []
    assert validate_payload("feedback_message", {"feedback": ""})


# -- complete: validate-and-retry ----------------------------------------------


def test_complete_first_attempt_conformant():
    provider = ScriptedProvider([VALID_JUDGMENT])
    result = complete(judgment_request(), provider)
    assert result.attempt_count == 1
    assert result.parsed["verdict"] == "met"
    assert result.provider_name == "scripted"
    assert result.raw_text == VALID_JUDGMENT


def test_complete_retries_then_succeeds():
    provider = ScriptedProvider(["garbage", "{\"verdict\": \"met\"}", VALID_JUDGMENT])
    result = complete(judgment_request(max_retries=2), provider)
    assert result.attempt_count == 3
    # correction instruction is appended on each re-ask
    assert "previous reply" in provider.requests[1].user_prompt
    assert provider.requests[2].user_prompt.count("previous reply") == 2


def test_complete_schema_violation_carries_all_attempts():
    provider = ScriptedProvider(["bad1", "bad2", "bad3"])
    with pytest.raises(SchemaViolation) as excinfo:
        complete(judgment_request(max_retries=2), provider)
    assert excinfo.value.attempts == ["bad1", "bad2", "bad3"]


def test_complete_zero_retries():
    provider = ScriptedProvider(["bad"])
    with pytest.raises(SchemaViolation) as excinfo:
        complete(judgment_request(max_retries=0), provider)
    assert len(excinfo.value.attempts) == 1


def test_complete_transport_failures_become_unreachable():
    provider = ScriptedProvider(
        [ProviderTransportError("down"), ProviderTransportError("down"), ProviderTransportError("down")]
    )
    with pytest.raises(ProviderUnreachable, match="down"):
        complete(judgment_request(max_retries=2), provider)


def test_complete_never_returns_nonconformant():
    provider = ScriptedProvider([json.dumps({"verdict": "met", "rationale": ""}), VALID_JUDGMENT])
    result = complete(judgment_request(), provider)
    assert validate_payload("judgment", result.parsed) == []


def test_audit_log_records_every_attempt(tmp_path):
    audit = AuditLog(tmp_path / "audit.jsonl")
    provider = ScriptedProvider(["bad", VALID_JUDGMENT])
    complete(judgment_request(), provider, audit_log=audit)
    lines = (tmp_path / "audit.jsonl").read_text().splitlines()
    records = [json.loads(line) for line in lines]
    assert len(records) == 2
    assert records[0]["ok"] is False
    assert records[1]["ok"] is True
    assert records[0]["schema"] == "judgment"


# -- mock provider ---------------------------------------------------------------


RUBRIC = make_rubric(keyword_groups=(("rival",), ("finite", "scarce")))


def test_mock_judgment_met_when_all_groups_present():
    essay = make_essay("Tuna is rival. It is also finite.")
    result = mock_complete(judgment_request(), RUBRIC, essay)
    assert result.parsed["verdict"] == "met"
    assert result.attempt_count == 1


def test_mock_judgment_missed_on_empty_essay():
    essay = make_essay("")
    evidence = mock_complete(
        judgment_request(response_schema="evidence_list"), RUBRIC, essay
    )
    assert evidence.parsed == {"quotes": []}
    judgment = mock_complete(judgment_request(), RUBRIC, essay)
    assert judgment.parsed["verdict"] == "missed"


def test_mock_missed_feedback_names_first_missing_term():
    essay = make_essay("Tuna is rival.")
    judgment = mock_complete(judgment_request(), RUBRIC, essay)
    assert judgment.parsed["verdict"] == "missed"
    assert "finite" in judgment.parsed["rationale"]
    feedback = mock_complete(
        judgment_request(response_schema="feedback_message"), RUBRIC, essay
    )
    assert feedback.parsed["feedback"] == "Consider: what role does 'finite' play here?"


def test_mock_met_feedback_praises_criterion():
    essay = make_essay("Tuna is rival. It is scarce.")
    feedback = mock_complete(
        judgment_request(response_schema="feedback_message"), RUBRIC, essay
    )
    assert feedback.parsed["feedback"] == f"Great work: {RUBRIC.criterion}."


def test_mock_evidence_quotes_are_verbatim_sentences_in_order():
    essay = make_essay("Alpha opening. Tuna is rival. It is finite and scarce.")
    result = mock_complete(judgment_request(response_schema="evidence_list"), RUBRIC, essay)
    assert result.parsed["quotes"] == ["Tuna is rival.", "It is finite and scarce."]


def test_mock_evidence_deduplicates_sentences():
    rubric = make_rubric(keyword_groups=(("rival",), ("tuna",)))
    essay = make_essay("Tuna is rival. Another sentence here.")
    result = mock_complete(judgment_request(response_schema="evidence_list"), rubric, essay)
    assert result.parsed["quotes"] == ["Tuna is rival."]


def test_mock_keyword_match_is_word_bounded():
    rubric = make_rubric(keyword_groups=(("rival",),))
    essay = make_essay("Rivalry is near. Arrival is close.")
    result = mock_complete(judgment_request(), rubric, essay)
    assert result.parsed["verdict"] == "missed"


def test_mock_is_byte_identical_across_calls():
    essay = make_essay("Tuna is rival. It is finite.")
    for schema in ("evidence_list", "judgment", "feedback_message"):
        a = mock_response(schema, RUBRIC, essay)
        b = mock_response(schema, RUBRIC, essay)
        assert a == b


def test_mock_requires_context_and_keyword_groups():
    with pytest.raises(ProviderUnreachable):
        complete(judgment_request(), MockProvider())
    bare = make_rubric(keyword_groups=())
    with pytest.raises(ProviderUnreachable):
        complete(
            judgment_request(context=PromptContext(bare, make_essay("Text."))), MockProvider()
        )


# -- transcript provider ------------------------------------------------------


def test_transcript_replays_in_schema_order():
    provider = TranscriptProvider(
        [
            {"response_schema": "judgment", "raw_text": VALID_JUDGMENT},
            {"response_schema": "feedback_message", "raw_text": json.dumps({"feedback": "f"})},
        ]
    )
    assert complete(judgment_request(), provider).parsed["verdict"] == "met"
    fb = complete(judgment_request(response_schema="feedback_message"), provider)
    assert fb.parsed["feedback"] == "f"
    with pytest.raises(ProviderUnreachable, match="transcript exhausted"):
        complete(judgment_request(max_retries=0), provider)


def test_transcript_pins_records_to_rubrics():
    rubric_a = make_rubric("ra")
    rubric_b = make_rubric("rb")
    essay = make_essay("Text.")
    provider = TranscriptProvider(
        [
            {"response_schema": "judgment", "rubric_id": "rb", "raw_text": VALID_JUDGMENT},
            {
                "response_schema": "judgment",
                "rubric_id": "ra",
                "raw_text": json.dumps({"verdict": "missed", "rationale": "nope"}),
            },
        ]
    )
    got_a = complete(judgment_request(context=PromptContext(rubric_a, essay)), provider)
    got_b = complete(judgment_request(context=PromptContext(rubric_b, essay)), provider)
    assert got_a.parsed["verdict"] == "missed"
    assert got_b.parsed["verdict"] == "met"


# -- remote provider -----------------------------------------------------------


def _transport(handler):
    return httpx.MockTransport(handler)


def test_remote_provider_success_and_request_shape():
    seen = {}

    def handler(request: httpx.Request) -> httpx.Response:
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(
            200, json={"choices": [{"message": {"content": VALID_JUDGMENT}}]}
        )

    provider = RemoteProvider(
        url="https://provider.test/v1/chat", api_key="sekrit", model="grader-1",
        transport=_transport(handler),
    )
    result = complete(judgment_request(temperature=0.05), provider)
    assert result.parsed["verdict"] == "met"
    assert seen["auth"] == "Bearer sekrit"
    assert seen["body"]["temperature"] == 0.05
    assert seen["body"]["model"] == "grader-1"
    assert seen["body"]["messages"][0]["role"] == "system"


def test_remote_provider_http_error_is_unreachable():
    def handler(request):
        return httpx.Response(503, text="overloaded")

    provider = RemoteProvider(url="https://provider.test/v1/chat", transport=_transport(handler))
    with pytest.raises(ProviderUnreachable, match="HTTP 503"):
        complete(judgment_request(max_retries=1), provider)


def test_remote_provider_missing_url(monkeypatch):
    monkeypatch.delenv("FEEDBACK_PROVIDER_URL", raising=False)
    provider = RemoteProvider()
    with pytest.raises(ProviderUnreachable, match="FEEDBACK_PROVIDER_URL"):
        complete(judgment_request(max_retries=0), provider)


def test_remote_provider_env_configuration(monkeypatch):
    monkeypatch.setenv("FEEDBACK_PROVIDER_URL", "https://env.test/chat")
    monkeypatch.setenv("FEEDBACK_PROVIDER_KEY", "envkey")
    provider = RemoteProvider()
    assert provider.url == "https://env.test/chat"
    assert provider.api_key == "envkey"


def test_remote_provider_malformed_envelope():
    def handler(request):
        return httpx.Response(200, json={"unexpected": True})

    provider = RemoteProvider(url="https://provider.test/v1/chat", transport=_transport(handler))
    with pytest.raises(ProviderUnreachable, match="malformed provider response"):
        complete(judgment_request(max_retries=0), provider)
