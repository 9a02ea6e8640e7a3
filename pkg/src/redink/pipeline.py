"""The feedback engine: per rubric, extract evidence, judge, compose
feedback, and retrieve canned instructor feedback on a miss.

The three generation steps are separate provider calls, not one mega-prompt:
each intermediate output is kept in the comment's provenance so a reviewer
can see exactly where a bad suggestion went wrong.
"""

from __future__ import annotations

import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from datetime import datetime, timezone
from enum import Enum
from typing import Mapping, Sequence

from . import prompts
from .gateway import (
    DEFAULT_CONCURRENCY,
    DEFAULT_MAX_RETRIES,
    DEFAULT_TEMPERATURE,
    AuditLog,
    CompletionRequest,
    CompletionResult,
    GatewayError,
    PromptContext,
    Provider,
    complete,
)
from .model import Assignment, Essay, ExampleFeedback, Rubric
from .textspan import DEFAULT_FUZZY_THRESHOLD, EvidenceSpan, MatchQuality, resolve


class PipelineMode(str, Enum):
    FULL_AI = "full_ai"
    JUDGMENT_PLUS_HISTORIC = "judgment_plus_historic"


class Verdict(str, Enum):
    MET = "met"
    MISSED = "missed"


@dataclass(frozen=True)
class Judgment:
    rubric_id: str
    verdict: Verdict
    rationale: str

    def __post_init__(self) -> None:
        if not self.rationale.strip():
            raise ValueError("judgment rationale must be non-empty")


@dataclass(frozen=True)
class PipelineConfig:
    mode: PipelineMode = PipelineMode.FULL_AI
    max_quotes_per_rubric: int = 3
    temperature: float = DEFAULT_TEMPERATURE
    retries: int = DEFAULT_MAX_RETRIES
    guideline_text: str = prompts.DEFAULT_GUIDELINES
    few_shot_limit: int = 4
    fuzzy_threshold: float = DEFAULT_FUZZY_THRESHOLD
    concurrency: int = DEFAULT_CONCURRENCY

    def __post_init__(self) -> None:
        if self.max_quotes_per_rubric <= 0:
            raise ValueError("max_quotes_per_rubric must be positive")
        if self.few_shot_limit <= 0:
            raise ValueError("few_shot_limit must be positive")
        if self.concurrency <= 0:
            raise ValueError("concurrency must be positive")

    def snapshot(self) -> dict:
        data = asdict(self)
        data["mode"] = self.mode.value
        return data


@dataclass(frozen=True)
class FeedbackComment:
    """One generated comment per (essay, rubric): anchor span, judgment,
    feedback texts, and per-step provenance."""

    id: str
    essay_id: str
    rubric_id: str
    anchor: EvidenceSpan
    supporting_spans: tuple[EvidenceSpan, ...]
    judgment: Judgment
    ai_feedback: str
    historic_feedback: str | None
    rationale: str
    pipeline_mode: PipelineMode
    provenance: tuple[CompletionResult, ...]


@dataclass(frozen=True)
class FailedComment:
    """A rubric whose pipeline run failed at one step; other rubrics are
    unaffected."""

    essay_id: str
    rubric_id: str
    step: str
    error: str


@dataclass(frozen=True)
class StepTiming:
    essay_id: str
    rubric_id: str
    step: str
    seconds: float


@dataclass(frozen=True)
class EssayRunResult:
    essay_id: str
    comments: tuple[FeedbackComment, ...]
    failures: tuple[FailedComment, ...]
    timings: tuple[StepTiming, ...] = ()


@dataclass(frozen=True)
class RunManifest:
    """Reproducibility record persisted alongside a run's comments."""

    run_id: str
    assignment_id: str
    essay_ids: tuple[str, ...]
    provider_name: str
    config: dict
    created_at: str
    judgment_inputs: str = "evidence_quotes_and_full_essay"
    timings: tuple[StepTiming, ...] = ()


@dataclass(frozen=True)
class RunResult:
    run_id: str
    manifest: RunManifest
    essay_results: tuple[EssayRunResult, ...]


class StepError(GatewayError):
    """Tags a gateway failure with the pipeline step that raised it."""

    def __init__(self, step: str, cause: Exception):
        self.step = step
        self.cause = cause
        super().__init__(f"step {step!r} failed: {cause}")


def _run_step(
    step: str,
    system: str,
    user: str,
    schema_id: str,
    rubric: Rubric,
    essay: Essay,
    config: PipelineConfig,
    provider: Provider,
    audit_log: AuditLog | None,
    sink: list[StepTiming] | None,
) -> CompletionResult:
    request = CompletionRequest(
        system_prompt=system,
        user_prompt=user,
        response_schema=schema_id,
        temperature=config.temperature,
        max_retries=config.retries,
        context=PromptContext(rubric, essay),
    )
    started = time.perf_counter()
    try:
        result = complete(request, provider, audit_log=audit_log)
    except GatewayError as exc:
        raise StepError(step, exc) from exc
    finally:
        if sink is not None:
            sink.append(StepTiming(essay.id, rubric.id, step, time.perf_counter() - started))
    return result


def _evidence_step(essay, rubric, config, provider, audit_log, sink):
    system, user = prompts.build_evidence_prompt(essay, rubric, config.max_quotes_per_rubric)
    result = _run_step(
        "evidence", system, user, "evidence_list", rubric, essay, config, provider, audit_log, sink
    )
    quotes = result.parsed["quotes"][: config.max_quotes_per_rubric]
    spans = [
        resolve(q, essay.text, essay.sentences, rubric_id=rubric.id, threshold=config.fuzzy_threshold)
        for q in quotes
    ]
    resolved = sorted((s for s in spans if s.resolved), key=lambda s: (s.start, s.end))
    unresolved = [s for s in spans if not s.resolved]
    return resolved + unresolved, result


def _judgment_step(essay, rubric, evidence, config, provider, audit_log, sink):
    system, user = prompts.build_judgment_prompt(essay, rubric, evidence)
    result = _run_step(
        "judgment", system, user, "judgment", rubric, essay, config, provider, audit_log, sink
    )
    judgment = Judgment(rubric.id, Verdict(result.parsed["verdict"]), result.parsed["rationale"])
    return judgment, result


def _feedback_step(essay, rubric, evidence, judgment, config, provider, examples, audit_log, sink):
    system, user = prompts.build_feedback_prompt(
        essay,
        rubric,
        evidence,
        judgment.verdict.value,
        config.guideline_text,
        examples,
        config.few_shot_limit,
    )
    result = _run_step(
        "feedback", system, user, "feedback_message", rubric, essay, config, provider, audit_log, sink
    )
    return result.parsed["feedback"], result


def extract_evidence(
    essay: Essay,
    rubric: Rubric,
    config: PipelineConfig,
    provider: Provider,
    *,
    audit_log: AuditLog | None = None,
) -> list[EvidenceSpan]:
    """Ask the provider for verbatim quotes and resolve each one to a span.

    Resolved spans come back in essay order; unresolved quotes are kept (as
    document-level spans) rather than dropped, since an unlocatable claim is
    itself a signal the reviewer should see.
    """
    spans, _ = _evidence_step(essay, rubric, config, provider, audit_log, None)
    return spans


def judge(
    essay: Essay,
    rubric: Rubric,
    evidence: Sequence[EvidenceSpan],
    config: PipelineConfig,
    provider: Provider,
    *,
    audit_log: AuditLog | None = None,
) -> Judgment:
    """Binary met/missed verdict for one rubric. The judge sees both the
    evidence quotes and the full essay: absent evidence may be a localization
    failure, so it never forces a miss by itself."""
    judgment, _ = _judgment_step(essay, rubric, list(evidence), config, provider, audit_log, None)
    return judgment


def compose_feedback(
    essay: Essay,
    rubric: Rubric,
    evidence: Sequence[EvidenceSpan],
    judgment: Judgment,
    config: PipelineConfig,
    provider: Provider,
    *,
    examples: Sequence[ExampleFeedback] = (),
    audit_log: AuditLog | None = None,
) -> str:
    """Compose the feedback message under the configured guidelines plus
    few-shot examples."""
    text, _ = _feedback_step(
        essay, rubric, list(evidence), judgment, config, provider, examples, audit_log, None
    )
    return text


def retrieve_historic(rubric: Rubric, judgment: Judgment) -> str | None:
    """First canned instructor message when the rubric was missed; absent
    otherwise. First-entry selection keeps retrieval auditable."""
    if judgment.verdict is Verdict.MISSED and rubric.historic_feedback:
        return rubric.historic_feedback[0]
    return None


def style_warnings(rubric: Rubric, judgment: Judgment, feedback_text: str) -> list[str]:
    """Check feedback against the authoring rules. Hard assertions only for
    mock output; for live providers these are advisory audit entries, since
    generative wording cannot be contractually guaranteed."""
    warnings: list[str] = []
    lowered = feedback_text.casefold()
    if judgment.verdict is Verdict.MET:
        praise = ("great", "good", "well done", "nice", "excellent", "strong", "clear")
        if not any(p in lowered for p in praise):
            warnings.append("met verdict but feedback carries no praise register")
    else:
        if "?" not in feedback_text:
            warnings.append("missed verdict but feedback poses no guiding question")
        definition = (rubric.elaboration.domain_definition or "") if rubric.elaboration else ""
        if definition.strip() and definition.strip().casefold() in lowered:
            warnings.append("feedback reveals the rubric's domain definition verbatim")
    return warnings


def run_rubric(
    essay: Essay,
    rubric: Rubric,
    config: PipelineConfig,
    provider: Provider,
    *,
    examples: Sequence[ExampleFeedback] = (),
    audit_log: AuditLog | None = None,
    timing_sink: list[StepTiming] | None = None,
) -> FeedbackComment:
    """Chain the steps for one rubric and assemble the comment.

    full_ai: evidence -> judgment -> feedback -> historic retrieval.
    judgment_plus_historic: evidence -> judgment -> historic retrieval, with
    ai_feedback left empty. Raises StepError on a step failure.
    """
    evidence, ev_result = _evidence_step(essay, rubric, config, provider, audit_log, timing_sink)
    judgment, j_result = _judgment_step(essay, rubric, evidence, config, provider, audit_log, timing_sink)

    provenance = [ev_result, j_result]
    ai_feedback = ""
    if config.mode is PipelineMode.FULL_AI:
        ai_feedback, f_result = _feedback_step(
            essay, rubric, evidence, judgment, config, provider, examples, audit_log, timing_sink
        )
        provenance.append(f_result)
        warnings = style_warnings(rubric, judgment, ai_feedback)
        if warnings and audit_log is not None and provider.name != "mock":
            audit_log.append(
                {
                    "provider": provider.name,
                    "kind": "style_warning",
                    "essay_id": essay.id,
                    "rubric_id": rubric.id,
                    "warnings": warnings,
                }
            )

    historic = retrieve_historic(rubric, judgment)
    anchor = evidence[0] if evidence else EvidenceSpan(rubric.id, 0, 0, "", MatchQuality.UNRESOLVED)

    return FeedbackComment(
        id=uuid.uuid4().hex,
        essay_id=essay.id,
        rubric_id=rubric.id,
        anchor=anchor,
        supporting_spans=tuple(evidence[1:]),
        judgment=judgment,
        ai_feedback=ai_feedback,
        historic_feedback=historic,
        rationale=judgment.rationale,
        pipeline_mode=config.mode,
        provenance=tuple(provenance),
    )


def run_essay(
    essay: Essay,
    assignment: Assignment,
    rubrics: Mapping[str, Rubric],
    config: PipelineConfig,
    provider: Provider,
    *,
    audit_log: AuditLog | None = None,
) -> EssayRunResult:
    """Run every rubric of the assignment against one essay.

    Rubrics are independent and fan out concurrently up to the configured
    limit; results are merged back in assignment rubric order, so output is
    deterministic regardless of execution order. Failures are per-rubric and
    never abort the rest."""
    ordered = [rubrics[rid] for rid in assignment.rubric_ids]
    timings: list[StepTiming] = []

    def one(rubric: Rubric) -> FeedbackComment | FailedComment:
        try:
            return run_rubric(
                essay,
                rubric,
                config,
                provider,
                examples=assignment.few_shot_examples,
                audit_log=audit_log,
                timing_sink=timings,
            )
        except StepError as exc:
            return FailedComment(essay.id, rubric.id, exc.step, str(exc.cause))

    if not ordered:
        return EssayRunResult(essay.id, (), (), ())
    workers = min(config.concurrency, len(ordered))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        outcomes = list(pool.map(one, ordered))

    comments = tuple(o for o in outcomes if isinstance(o, FeedbackComment))
    failures = tuple(o for o in outcomes if isinstance(o, FailedComment))
    return EssayRunResult(essay.id, comments, failures, tuple(timings))


def run_batch(
    assignment: Assignment,
    essays: Sequence[Essay],
    rubrics: Mapping[str, Rubric],
    config: PipelineConfig,
    provider: Provider,
    *,
    run_id: str | None = None,
    audit_log: AuditLog | None = None,
) -> RunResult:
    """Run a whole batch of essays and build the run manifest."""
    run_id = run_id or "run-" + uuid.uuid4().hex[:12]
    results = tuple(
        run_essay(essay, assignment, rubrics, config, provider, audit_log=audit_log)
        for essay in essays
    )
    all_timings: tuple[StepTiming, ...] = tuple(t for r in results for t in r.timings)
    manifest = RunManifest(
        run_id=run_id,
        assignment_id=assignment.id,
        essay_ids=tuple(e.id for e in essays),
        provider_name=provider.name,
        config=config.snapshot(),
        created_at=datetime.now(timezone.utc).isoformat(),
        timings=all_timings,
    )
    return RunResult(run_id, manifest, results)
