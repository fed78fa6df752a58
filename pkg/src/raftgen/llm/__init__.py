"""LLM access, knowledge-injected prompts, retrieval and refinement loops."""

from .loop import (
    ExplicationError,
    ExplicationResult,
    explicate,
    extract_code,
    formalize_with_feedback,
    judge_and_refine,
    parse_artifact,
)
from .prompts import (
    FEEDBACK_HEADING,
    PLACEHOLDERS,
    TEMPLATES,
    PromptError,
    PromptTemplate,
    build_prompt,
    get_template,
)
from .providers import (
    AuditLog,
    AuthenticationError,
    CallRecord,
    FixtureMissingError,
    HTTPProvider,
    MalformedResponseError,
    MockProvider,
    ProviderConfig,
    ProviderError,
    ProviderTimeout,
    TransportError,
    UsageLedger,
    UsageStats,
    complete,
    fingerprint,
    make_provider,
    sum_usage,
    whitespace_tokens,
)
from .retrieval import Chunk, RetrievalIndex, build_index, cosine, rank, retrieve, terms

__all__ = [
    "AuditLog",
    "AuthenticationError",
    "CallRecord",
    "Chunk",
    "ExplicationError",
    "ExplicationResult",
    "FEEDBACK_HEADING",
    "FixtureMissingError",
    "HTTPProvider",
    "MalformedResponseError",
    "MockProvider",
    "PLACEHOLDERS",
    "PromptError",
    "PromptTemplate",
    "ProviderConfig",
    "ProviderError",
    "ProviderTimeout",
    "RetrievalIndex",
    "TEMPLATES",
    "TransportError",
    "UsageLedger",
    "UsageStats",
    "build_index",
    "build_prompt",
    "complete",
    "cosine",
    "explicate",
    "extract_code",
    "fingerprint",
    "formalize_with_feedback",
    "get_template",
    "judge_and_refine",
    "make_provider",
    "parse_artifact",
    "rank",
    "retrieve",
    "sum_usage",
    "terms",
    "whitespace_tokens",
]
