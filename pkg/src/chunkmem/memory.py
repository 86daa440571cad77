"""Working memory: flat action-observation history or subgoal chunks.

Every operation returns a new :class:`WorkingMemory`; nothing is mutated in
place, so a memory value can be handed between threads or kept as a
snapshot for later comparison.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import IO, Any

_TOKEN_RE = re.compile(r"\w+|[^\w\s]")
_VERDICT_RE = re.compile(r"subgoal is (?:not )?met|not been met", re.IGNORECASE)


def token_count(text: str) -> int:
    """Word runs plus standalone punctuation marks.

    No token spans whitespace, so ``token_count(a + " " + b)`` always equals
    ``token_count(a) + token_count(b)``.
    """
    return len(_TOKEN_RE.findall(text))


class MemoryMode(str, Enum):
    FLAT = "flat"
    CHUNKED = "chunked"


class MemoryOpError(Exception):
    """Base class for invalid memory operations."""


class NoOpenChunk(MemoryOpError):
    pass


class PreviousChunkOpen(MemoryOpError):
    pass


class UnknownChunk(MemoryOpError):
    pass


class ChunkOpen(MemoryOpError):
    pass


@dataclass(frozen=True)
class MemoryStep:
    action_text: str
    observation_text: str
    executable: bool
    step_index: int

    def __post_init__(self) -> None:
        if not self.action_text.strip() or not self.observation_text.strip():
            raise ValueError("memory steps need non-empty action and observation text")

    def render(self) -> str:
        return f"Action: {self.action_text}\nObservation: {self.observation_text}"


@dataclass(frozen=True)
class MemoryChunk:
    chunk_id: int
    subgoal: str
    steps: tuple[MemoryStep, ...] = ()
    summary: str | None = None
    met: bool | None = None
    expanded: bool = False

    @property
    def closed(self) -> bool:
        return self.summary is not None

    def summary_line(self) -> str:
        """The summary, with a verdict clause appended if it lacks one."""
        text = self.summary or ""
        if self.met is not None and not _VERDICT_RE.search(text):
            text += " Subgoal is met." if self.met else " Subgoal is not met."
        return text

    def step_lines(self) -> str:
        return "\n".join(s.render() for s in self.steps)


@dataclass(frozen=True)
class WorkingMemory:
    """Initial observation plus an ordered tuple of chunks.

    ``collapse=False`` keeps closed chunks verbatim; the task-decomposition
    baseline uses it to emit subgoals without hiding any history.
    """

    initial_observation: str
    mode: MemoryMode = MemoryMode.CHUNKED
    chunks: tuple[MemoryChunk, ...] = ()
    collapse: bool = True

    def __post_init__(self) -> None:
        if self.mode is MemoryMode.FLAT and not self.chunks:
            object.__setattr__(self, "chunks", (MemoryChunk(1, ""),))
        ids = [c.chunk_id for c in self.chunks]
        if ids != list(range(1, len(ids) + 1)):
            raise ValueError(f"chunk ids must be contiguous from 1, got {ids}")
        if self.mode is MemoryMode.FLAT and len(self.chunks) != 1:
            raise ValueError("flat memory holds exactly one implicit chunk")
        if any(c.summary is None for c in self.chunks[:-1]):
            raise ValueError("only the last chunk may be open")

    # -- queries ------------------------------------------------------------

    @property
    def open_chunk(self) -> MemoryChunk | None:
        if self.mode is MemoryMode.FLAT:
            return self.chunks[0]
        if self.chunks and not self.chunks[-1].closed:
            return self.chunks[-1]
        return None

    @property
    def steps(self) -> list[MemoryStep]:
        return [s for c in self.chunks for s in c.steps]

    def chunk(self, chunk_id: int) -> MemoryChunk:
        if not 1 <= chunk_id <= len(self.chunks):
            raise UnknownChunk(f"no chunk {chunk_id}; memory has {len(self.chunks)}")
        return self.chunks[chunk_id - 1]

    def is_collapsed(self, chunk: MemoryChunk) -> bool:
        return self.collapse and chunk.closed and not chunk.expanded

    # -- operations ---------------------------------------------------------

    def _with_chunk(self, chunk: MemoryChunk) -> WorkingMemory:
        chunks = list(self.chunks)
        chunks[chunk.chunk_id - 1] = chunk
        return replace(self, chunks=tuple(chunks))

    def append_step(
        self,
        action_text: str,
        observation_text: str,
        executable: bool,
        step_index: int | None = None,
    ) -> WorkingMemory:
        target = self.open_chunk
        if target is None:
            raise NoOpenChunk("open a subgoal before appending steps")
        if step_index is None:
            previous = self.steps
            step_index = previous[-1].step_index + 1 if previous else 1
        if target.steps and step_index <= target.steps[-1].step_index:
            raise ValueError("step indices must increase within a chunk")
        step = MemoryStep(action_text, observation_text, executable, step_index)
        return self._with_chunk(replace(target, steps=target.steps + (step,)))

    def open_subgoal(self, subgoal: str) -> WorkingMemory:
        if self.mode is MemoryMode.FLAT:
            return self
        if self.open_chunk is not None:
            raise PreviousChunkOpen(f"chunk {self.chunks[-1].chunk_id} is still open")
        chunk = MemoryChunk(len(self.chunks) + 1, subgoal)
        return replace(self, chunks=self.chunks + (chunk,))

    def close_chunk(self, summary: str, met: bool | None) -> WorkingMemory:
        if self.mode is MemoryMode.FLAT:
            return self
        target = self.open_chunk
        if target is None:
            raise NoOpenChunk("there is no open chunk to close")
        chunks = [replace(c, expanded=False) if c.expanded else c for c in self.chunks[:-1]]
        chunks.append(replace(target, summary=summary, met=met))
        return replace(self, chunks=tuple(chunks))

    def expand(self, chunk_id: int) -> WorkingMemory:
        if self.mode is MemoryMode.FLAT:
            return self
        target = self.chunk(chunk_id)
        if not target.closed:
            raise ChunkOpen(f"chunk {chunk_id} is the open chunk")
        return self._with_chunk(replace(target, expanded=True))

    # -- rendering ----------------------------------------------------------

    @property
    def separator(self) -> str:
        return "\n" if self.mode is MemoryMode.FLAT else "\n\n"

    def render_chunk(self, chunk: MemoryChunk) -> str:
        head = f"{chunk.chunk_id} Subgoal: {chunk.subgoal}"
        if self.is_collapsed(chunk):
            return f"{head}\nObservation: {chunk.summary_line()}"
        return f"{head}\n{chunk.step_lines()}" if chunk.steps else head

    def render_body(self) -> str:
        if self.mode is MemoryMode.FLAT:
            return self.chunks[0].step_lines()
        return "\n\n".join(self.render_chunk(c) for c in self.chunks)

    def render_context(self) -> str:
        """Initial observation followed by the memory body.

        This is the in-trial part of the prompt, the part that grows as the
        trial proceeds.
        """
        head = f"Observation: {self.initial_observation}"
        body = self.render_body()
        return head + self.separator + body if body else head

    def render(self, header: str = "") -> str:
        context = self.render_context()
        return header + self.separator + context if header else context


# -- trajectory logging -------------------------------------------------------


@dataclass
class TrajectoryLog:
    """Append-only JSON-lines event log for one trial."""

    trial_id: str
    path: Path | None = None
    events: list[dict[str, Any]] = field(default_factory=list)
    _fh: IO[str] | None = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.path is not None:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            self._fh = self.path.open("w", encoding="utf-8")

    def record(
        self,
        event: str,
        *,
        step_index: int | None = None,
        chunk_id: int | None = None,
        text: str = "",
        executable: bool | None = None,
        progress: float | None = None,
        wall_ms: float | None = None,
        **extra: Any,
    ) -> None:
        entry = {
            "event": event,
            "trial_id": self.trial_id,
            "step_index": step_index,
            "chunk_id": chunk_id,
            "text": text,
            "tokens": token_count(text),
            "executable": executable,
            "progress": progress,
            "wall_ms": wall_ms,
            **extra,
        }
        self.events.append(entry)
        if self._fh is not None:
            self._fh.write(json.dumps(entry, sort_keys=True) + "\n")
            self._fh.flush()

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None
