"""Turning a model reply into exactly one agent decision."""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Union

from ..memory import MemoryMode

_SUBGOAL_RE = re.compile(r"^(?:\d+\s+)?subgoal\s*:\s*(.*)$", re.IGNORECASE)
_ACTION_RE = re.compile(r"^action\s*:\s*(.*)$", re.IGNORECASE)
_RETRIEVE_RE = re.compile(r"^retrieve\s*\(\s*(\d+)\s*\)\s*\.?$", re.IGNORECASE)
_QUOTES = "\"'`*"


@dataclass(frozen=True)
class NewSubgoal:
    subgoal: str
    action: str


@dataclass(frozen=True)
class Act:
    action: str


@dataclass(frozen=True)
class Retrieve:
    chunk_id: int

    def __post_init__(self) -> None:
        if self.chunk_id < 1:
            raise ValueError("chunk ids start at 1")


@dataclass(frozen=True)
class Malformed:
    raw: str


AgentDecision = Union[NewSubgoal, Act, Retrieve, Malformed]


def _clean(text: str) -> str:
    return text.strip().strip(_QUOTES).strip()


def parse_retrieve(action: str) -> int | None:
    """Chunk id of a ``retrieve(k)`` action, or ``None`` for anything else."""
    m = _RETRIEVE_RE.match(_clean(action))
    return int(m.group(1)) if m else None


def _action_decision(action: str, raw: str) -> AgentDecision:
    chunk_id = parse_retrieve(action)
    if chunk_id is None:
        return Act(action)
    return Retrieve(chunk_id) if chunk_id >= 1 else Malformed(raw)


def parse_decision(raw: str, mode: MemoryMode) -> AgentDecision:
    """Scan the reply line by line; the first complete decision wins."""
    pending_subgoal: str | None = None
    for line in raw.splitlines():
        line = line.strip().strip("*").strip()
        if not line:
            continue
        action = _ACTION_RE.match(line)
        if action:
            text = _clean(action.group(1))
            if not text:
                return Malformed(raw)
            if mode is MemoryMode.FLAT:
                return Act(text)
            if pending_subgoal is not None:
                if parse_retrieve(text) == 0:
                    return Malformed(raw)
                return NewSubgoal(pending_subgoal, text)
            return _action_decision(text, raw)
        if mode is MemoryMode.CHUNKED:
            subgoal = _SUBGOAL_RE.match(line)
            if subgoal:
                if pending_subgoal is not None:
                    return Malformed(raw)
                pending_subgoal = _clean(subgoal.group(1))
                if not pending_subgoal:
                    return Malformed(raw)
    return Malformed(raw)


def format_decision(decision: AgentDecision) -> str:
    """Canonical reply text; ``parse_decision`` inverts it."""
    if isinstance(decision, NewSubgoal):
        return f"Subgoal: {decision.subgoal}\nAction: {decision.action}"
    if isinstance(decision, Act):
        return f"Action: {decision.action}"
    if isinstance(decision, Retrieve):
        return f"Action: retrieve({decision.chunk_id})"
    return decision.raw
