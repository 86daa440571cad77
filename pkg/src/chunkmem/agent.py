"""The agent loop and its variants, plus a small parallel suite runner."""

from __future__ import annotations

import json
import logging
import time
from collections.abc import Callable, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from enum import Enum
from pathlib import Path
from typing import Any

from .backend import (
    Act,
    Backend,
    BackendError,
    ChatRequest,
    EmptySummary,
    Malformed,
    NewSubgoal,
    PromptSettings,
    Retrieve,
    build_prompt,
    parse_decision,
    parse_retrieve,
    summarize,
)
from .env import INVALID_ACTION_OBSERVATION, Task, load_domain
from .memory import (
    ChunkOpen,
    MemoryMode,
    TrajectoryLog,
    UnknownChunk,
    WorkingMemory,
    token_count,
)

log = logging.getLogger(__name__)

RETRIEVED_OBSERVATION = "trajectory of Subgoal {k} is retrieved."


class Variant(str, Enum):
    STD = "STD"
    OURS = "OURS"
    OURS_NO_OS = "OURS_NO_OS"
    OURS_NO_TR = "OURS_NO_TR"
    OURS_NO_OS_TR = "OURS_NO_OS_TR"
    TD = "TD"

    @property
    def mode(self) -> MemoryMode:
        return MemoryMode.FLAT if self is Variant.STD else MemoryMode.CHUNKED

    @property
    def summarizes(self) -> bool:
        return self in (Variant.OURS, Variant.OURS_NO_TR)

    @property
    def retrieves(self) -> bool:
        return self in (Variant.OURS, Variant.OURS_NO_OS)

    @property
    def collapses(self) -> bool:
        return self is not Variant.TD


@dataclass(frozen=True)
class AgentConfig:
    variant: Variant
    max_steps: int = 30
    max_chunks: int | None = None
    seed: int = 0
    prompt: PromptSettings = PromptSettings()

    def __post_init__(self) -> None:
        if self.max_steps < 1:
            raise ValueError("max_steps must be >= 1")
        if self.max_chunks is not None and self.max_chunks < 1:
            raise ValueError("max_chunks must be >= 1 when set")


@dataclass(frozen=True)
class StepRecord:
    step_index: int
    kind: str
    action_text: str
    observation: str
    executable: bool
    progress: float
    context_tokens: int
    wall_ms: float


@dataclass
class TrialRecord:
    task: str
    instance: str
    variant: str
    seed: int
    max_steps: int
    per_step: list[StepRecord] = field(default_factory=list)
    initial_progress: float = 0.0
    final_progress: float = 0.0
    max_progress: float = 0.0
    success: bool = False
    steps_used: int = 0
    chunks_closed: int = 0
    total_wall_ms: float = 0.0
    failed: bool = False
    error: str | None = None

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.task, self.instance, self.variant)

    def to_dict(self, timing: bool = True) -> dict[str, Any]:
        data = asdict(self)
        if not timing:
            data.pop("total_wall_ms")
            for step in data["per_step"]:
                step.pop("wall_ms")
        return data

    def to_json(self, timing: bool = True) -> str:
        return json.dumps(self.to_dict(timing), sort_keys=True)

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> TrialRecord:
        data = dict(data)
        steps = [StepRecord(**{"wall_ms": 0.0, **s}) for s in data.pop("per_step", [])]
        data.setdefault("total_wall_ms", 0.0)
        return cls(per_step=steps, **data)


def _one_line(text: str) -> str:
    return " ".join(text.split()) or "(empty reply)"


class _Trial:
    """Mutable per-trial state; lives only inside :func:`run_trial`."""

    def __init__(self, config: AgentConfig, task: Task, backend: Backend,
                 summarizer: Backend, tlog: TrajectoryLog):
        self.config = config
        self.variant = config.variant
        self.task = task
        self.backend = backend
        self.summarizer = summarizer
        self.tlog = tlog
        self.state = task.state
        self.mem = WorkingMemory(
            task.initial_observation, self.variant.mode, collapse=self.variant.collapses
        )
        self.progress = task.domain.progress(task.state, task.goal)
        self.done = self.progress == 1

    # each handler returns (action_text, observation, executable, append_to_memory)

    def act(self, action: str) -> tuple[str, str, bool, bool]:
        if self.mem.open_chunk is None:
            # chunked memory demands a subgoal before the first grounded action
            return action, INVALID_ACTION_OBSERVATION, False, False
        self.state, outcome = self.task.domain.execute(self.state, self.task.goal, action)
        self.progress = outcome.progress
        self.done = outcome.done
        return action, outcome.observation, outcome.executable, True

    def retrieve(self, chunk_id: int) -> tuple[str, str, bool, bool]:
        action = f"retrieve({chunk_id})"
        has_open = self.mem.open_chunk is not None
        if not self.variant.retrieves:
            return action, INVALID_ACTION_OBSERVATION, False, has_open
        try:
            self.mem = self.mem.expand(chunk_id)
        except (UnknownChunk, ChunkOpen) as exc:
            self.tlog.record("expand_rejected", chunk_id=chunk_id, text=str(exc))
            return action, INVALID_ACTION_OBSERVATION, False, has_open
        self.tlog.record("expand", chunk_id=chunk_id)
        return action, RETRIEVED_OBSERVATION.format(k=chunk_id), True, has_open

    def close_open_chunk(self, final: bool = False) -> None:
        chunk = self.mem.open_chunk
        if chunk is None:
            return
        last = chunk.steps[-1].observation_text if chunk.steps else self.task.initial_observation
        summary, met = last, None
        if final:
            met = True
        elif self.variant.summarizes and chunk.steps:
            try:
                result = summarize(self.summarizer, chunk.subgoal, chunk.steps,
                                   self.task.summary_example, self.config.prompt)
                summary, met = result.summary, result.met
            except (EmptySummary, BackendError) as exc:
                log.warning("summarizer failed on chunk %d: %s", chunk.chunk_id, exc)
                self.tlog.record("degradation", chunk_id=chunk.chunk_id, text=str(exc))
        self.mem = self.mem.close_chunk(summary, met)
        self.tlog.record("chunk_close", chunk_id=chunk.chunk_id, text=summary)

    def new_subgoal(self, subgoal: str, action: str) -> tuple[str, str, bool, bool]:
        limit = self.config.max_chunks
        if limit is not None and len(self.mem.chunks) >= limit:
            return action, INVALID_ACTION_OBSERVATION, False, self.mem.open_chunk is not None
        self.close_open_chunk()
        self.mem = self.mem.open_subgoal(subgoal)
        self.tlog.record("subgoal_open", chunk_id=len(self.mem.chunks), text=subgoal)
        chunk_id = parse_retrieve(action)
        if chunk_id is not None and chunk_id >= 1:
            return self.retrieve(chunk_id)
        return self.act(action)

    def dispatch(self, reply: str) -> tuple[str, str, str, bool, bool]:
        decision = parse_decision(reply, self.variant.mode)
        if isinstance(decision, NewSubgoal):
            return ("subgoal",) + self.new_subgoal(decision.subgoal, decision.action)
        if isinstance(decision, Act):
            return ("act",) + self.act(decision.action)
        if isinstance(decision, Retrieve):
            return ("retrieve",) + self.retrieve(decision.chunk_id)
        assert isinstance(decision, Malformed)
        has_open = self.mem.open_chunk is not None
        return "malformed", _one_line(reply), INVALID_ACTION_OBSERVATION, False, has_open


def run_trial(
    config: AgentConfig,
    task: Task,
    backend: Backend,
    *,
    summarizer: Backend | None = None,
    trajectory_log: TrajectoryLog | None = None,
    on_prompt: Callable[[ChatRequest, WorkingMemory], None] | None = None,
    clock: Callable[[], float] = time.perf_counter,
) -> TrialRecord:
    """Run one episode until the goal is met or the step budget is spent.

    Every model call that yields a decision costs one step, including
    retrievals, meta-actions and replies that cannot be parsed.
    """
    variant = config.variant
    tlog = trajectory_log or TrajectoryLog(f"{task.name}-{task.instance_id}-{variant.value}")
    trial = _Trial(config, task, backend, summarizer or backend, tlog)
    record = TrialRecord(
        task=task.name,
        instance=task.instance_id,
        variant=variant.value,
        seed=config.seed,
        max_steps=config.max_steps,
        initial_progress=float(trial.progress),
    )
    best = trial.progress
    started = clock()
    try:
        while not trial.done and record.steps_used < config.max_steps:
            t0 = clock()
            request = build_prompt(task, trial.mem, config.prompt)
            context_tokens = token_count(trial.mem.render_context())
            tlog.record("render_stats", step_index=record.steps_used + 1,
                        text=trial.mem.render_context())
            if on_prompt is not None:
                on_prompt(request, trial.mem)
            reply = backend.complete(request)
            kind, action, observation, executable, append = trial.dispatch(reply)
            record.steps_used += 1
            if append:
                trial.mem = trial.mem.append_step(action, observation, executable,
                                                  record.steps_used)
            best = max(best, trial.progress)
            wall_ms = (clock() - t0) * 1000.0
            record.per_step.append(StepRecord(
                step_index=record.steps_used,
                kind=kind,
                action_text=action,
                observation=observation,
                executable=executable,
                progress=float(trial.progress),
                context_tokens=context_tokens,
                wall_ms=wall_ms,
            ))
            tlog.record("step", step_index=record.steps_used, text=f"{action}\n{observation}",
                        executable=executable, progress=float(trial.progress), wall_ms=wall_ms,
                        chunk_id=len(trial.mem.chunks) if trial.mem.chunks else None)
        if trial.done and variant.mode is MemoryMode.CHUNKED:
            trial.close_open_chunk(final=True)
    except BackendError as exc:
        record.failed = True
        record.error = f"{type(exc).__name__}: {exc}"
        tlog.record("failure", text=record.error)
    finally:
        tlog.close()
    record.final_progress = float(trial.progress)
    record.max_progress = float(best)
    record.success = best == 1
    if variant.mode is MemoryMode.CHUNKED:
        record.chunks_closed = sum(1 for c in trial.mem.chunks if c.closed)
    record.total_wall_ms = (clock() - started) * 1000.0
    return record


# -- suites -------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class TrialSpec:
    task: str
    instance: str
    variant: str

    @property
    def slug(self) -> str:
        return f"{self.task}-{self.instance}-{self.variant}"


@dataclass
class SuiteResult:
    records: list[TrialRecord]
    failures: list[dict[str, Any]]


def run_suite(
    experiment: Sequence[TrialSpec],
    backend_factory: Callable[[TrialSpec], Backend],
    *,
    parallelism: int = 1,
    max_steps: int = 30,
    seed: int = 0,
    out_dir: Path | None = None,
    prompt: PromptSettings = PromptSettings(),
) -> SuiteResult:
    """Run independent trials; output order is sorted by (task, instance, variant)."""
    specs = sorted(set(experiment))

    def one(spec: TrialSpec) -> tuple[TrialSpec, TrialRecord | None, str | None]:
        try:
            task = load_domain(spec.task, spec.instance)
            config = AgentConfig(Variant(spec.variant), max_steps=max_steps, seed=seed,
                                 prompt=prompt)
            tlog = TrajectoryLog(spec.slug, out_dir / "trajectories" / f"{spec.slug}.jsonl"
                                 if out_dir else None)
            record = run_trial(config, task, backend_factory(spec), trajectory_log=tlog)
        except Exception as exc:  # isolate the trial, report it in the manifest
            log.exception("trial %s crashed", spec.slug)
            return spec, None, f"{type(exc).__name__}: {exc}"
        return spec, record, record.error if record.failed else None

    with ThreadPoolExecutor(max_workers=max(1, parallelism)) as pool:
        outcomes = list(pool.map(one, specs))

    records, failures = [], []
    for spec, record, error in outcomes:
        if error is None and record is not None:
            records.append(record)
        else:
            entry: dict[str, Any] = {**asdict(spec), "error": error}
            if record is not None:
                entry["record"] = record.to_dict()
            failures.append(entry)
    if out_dir is not None:
        write_records(out_dir / "records.jsonl", records)
        (out_dir / "failures.json").write_text(
            json.dumps(failures, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return SuiteResult(records, failures)


def write_records(path: Path, records: Sequence[TrialRecord]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(r.to_json() + "\n" for r in records), encoding="utf-8")


def read_records(path: Path) -> list[TrialRecord]:
    records = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            records.append(TrialRecord.from_dict(json.loads(line)))
    return records
