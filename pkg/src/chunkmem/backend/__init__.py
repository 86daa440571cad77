"""Model access, reply parsing and prompt construction."""

from .client import (
    AuthError,
    Backend,
    BackendError,
    BudgetExceeded,
    ChatRequest,
    FunctionBackend,
    HTTPBackend,
    ReplayBackend,
    ResponseMalformed,
    ScriptExhausted,
    TransportError,
    read_script,
)
from .decisions import (
    Act,
    AgentDecision,
    Malformed,
    NewSubgoal,
    Retrieve,
    format_decision,
    parse_decision,
    parse_retrieve,
)
from .prompts import (
    HELP_LINE,
    SUBGOAL_NOTE,
    SUMMARY_INSTRUCTIONS,
    EmptySummary,
    PromptSettings,
    SummaryResult,
    build_prompt,
    parse_summary,
    prompt_header,
    summarize,
    summary_prompt,
)

__all__ = [
    "Act",
    "AgentDecision",
    "AuthError",
    "Backend",
    "BackendError",
    "BudgetExceeded",
    "ChatRequest",
    "EmptySummary",
    "FunctionBackend",
    "HELP_LINE",
    "HTTPBackend",
    "Malformed",
    "NewSubgoal",
    "PromptSettings",
    "ReplayBackend",
    "ResponseMalformed",
    "Retrieve",
    "SUBGOAL_NOTE",
    "SUMMARY_INSTRUCTIONS",
    "ScriptExhausted",
    "SummaryResult",
    "TransportError",
    "build_prompt",
    "format_decision",
    "parse_decision",
    "parse_retrieve",
    "parse_summary",
    "prompt_header",
    "read_script",
    "summarize",
    "summary_prompt",
]
