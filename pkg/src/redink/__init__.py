"""redink: rubric-based essay feedback with span-anchored comments and a
human review workflow."""

from .gateway import (
    CompletionRequest,
    CompletionResult,
    MockProvider,
    ProviderUnreachable,
    RemoteProvider,
    SchemaViolation,
    TranscriptProvider,
    complete,
    mock_complete,
)
from .lint import LintDimension, LintWarning, lint_rubric
from .model import (
    Assignment,
    Elaboration,
    Essay,
    ExampleFeedback,
    Polarity,
    Rubric,
    validate_assignment,
)
from .pipeline import (
    FailedComment,
    FeedbackComment,
    Judgment,
    PipelineConfig,
    PipelineMode,
    Verdict,
    compose_feedback,
    extract_evidence,
    judge,
    retrieve_historic,
    run_batch,
    run_essay,
    run_rubric,
)
from .reports import AgreementReport, agreement, consistency_report
from .store import ActionType, ReviewAction, Store, effective_state
from .textspan import EvidenceSpan, MatchQuality, Sentence, resolve, segment

__version__ = "0.1.0"

__all__ = [
    "ActionType",
    "AgreementReport",
    "Assignment",
    "CompletionRequest",
    "CompletionResult",
    "Elaboration",
    "Essay",
    "EvidenceSpan",
    "ExampleFeedback",
    "FailedComment",
    "FeedbackComment",
    "Judgment",
    "LintDimension",
    "LintWarning",
    "MatchQuality",
    "MockProvider",
    "PipelineConfig",
    "PipelineMode",
    "Polarity",
    "ProviderUnreachable",
    "RemoteProvider",
    "ReviewAction",
    "Rubric",
    "SchemaViolation",
    "Sentence",
    "Store",
    "TranscriptProvider",
    "Verdict",
    "agreement",
    "complete",
    "compose_feedback",
    "consistency_report",
    "effective_state",
    "extract_evidence",
    "judge",
    "lint_rubric",
    "mock_complete",
    "resolve",
    "retrieve_historic",
    "run_batch",
    "run_essay",
    "run_rubric",
    "segment",
    "validate_assignment",
]
