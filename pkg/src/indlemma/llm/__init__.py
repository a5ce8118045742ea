"""Prompt rendering, model queries and conjecture extraction."""

from .client import (
    LLMClient,
    LLMResponse,
    ModelConfig,
    ProviderError,
    ReplayMiss,
    Transcript,
    TranscriptStore,
    Usage,
    query,
    transcript_key,
)
from .extract import Conjecture, Diagnostic, Provenance, candidate_texts, extract_conjectures
from .prompts import (
    DEFAULT_POOL,
    NAIVE,
    STRATEGY1,
    STRATEGY2,
    PromptStrategy,
    StrategyId,
    parse_pool,
    render_prompt,
    strategy,
)

__all__ = [
    "Conjecture", "DEFAULT_POOL", "Diagnostic", "LLMClient", "LLMResponse", "ModelConfig",
    "NAIVE", "PromptStrategy", "Provenance", "ProviderError", "ReplayMiss", "STRATEGY1",
    "STRATEGY2", "StrategyId", "Transcript", "TranscriptStore", "Usage", "candidate_texts",
    "extract_conjectures", "parse_pool", "query", "render_prompt", "strategy",
    "transcript_key",
]
