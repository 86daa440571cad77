"""Policy prompts and the observation summarizer."""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

from ..env.instances import GOAL_PREFIX, Task
from ..memory import MemoryMode, MemoryStep, WorkingMemory
from .client import Backend, ChatRequest

SUBGOAL_NOTE = (
    "Note: A subgoal is a milestone goal that you need to complete in order to achieve the "
    "final goal. When there is an unfinished subgoal, you need to ground the given subgoal to "
    "corresponding executable actions for solving the given task in the following format: "
    '"Action: {action}". When there is no current subgoal or you believe the previous subgoal '
    "has been completed (based on past actions and observations), you need to output the next "
    'subgoal to be completed and its first action in the following format: "Subgoal: {subgoal}\n'
    'Action: {action}". You cannot output two subgoals consecutively. Detailed trajectory '
    "information (action-observation pair) of previously satisfied subgoals will be hidden for "
    "context efficiency. If you believe that the detailed trajectory information of a particular "
    'subgoal is crucial for the current subgoal, you can use Action: "retrieve(subgoal_id)" to '
    "obtain the detailed trajectory information."
)
HELP_LINE = (
    "You should use the following commands for help when your action cannot be understood: "
    "check valid actions"
)


def goal_line(task: Task) -> str:
    return f"You should perform actions to accomplish the goal: {GOAL_PREFIX}{task.goal_text}"


def prompt_header(task: Task, mode: MemoryMode) -> str:
    """Everything before the initial observation; fixed for the whole trial."""
    if mode is MemoryMode.FLAT:
        return (
            f"{task.instructions}\n\nHere are examples:\n\n{task.example_std}\n"
            f"{goal_line(task)}\n{HELP_LINE}"
        )
    return (
        f"{task.instructions}\n\n{SUBGOAL_NOTE}\n\nHere are examples:\n\n{task.example_ours}\n"
        f"{goal_line(task)}\n\n{HELP_LINE}"
    )


@dataclass(frozen=True)
class PromptSettings:
    temperature: float = 0.0
    top_p: float = 1.0
    max_output_tokens: int = 512


def build_prompt(
    task: Task, mem: WorkingMemory, settings: PromptSettings = PromptSettings()
) -> ChatRequest:
    return ChatRequest(
        user_text=mem.render(prompt_header(task, mem.mode)),
        temperature=settings.temperature,
        top_p=settings.top_p,
        max_output_tokens=settings.max_output_tokens,
    )


# -- summarizer ---------------------------------------------------------------

SUMMARY_PREAMBLE = (
    "You are an advanced AI system tasked with summarizing and analyzing a series of "
    "action-observation pairs (trajectories) and determining whether a specific subgoal has "
    "been met.\n"
    "Your goal is to create a summary that captures all essential information, decisions, and "
    "outcomes from the given trajectories, and indicate whether the subgoal has been met based "
    "on the summarized observations.\n"
    "If there are no valid actions taken, you need to analyze the reason."
)
SUMMARY_INSTRUCTIONS = (
    "1. Provide a summarized observation related to the subgoal in a concise manner.",
    "2. Determine whether the subgoal has been met.",
    "3. Do not output anything except whether summary and subgoal are met. Your output should "
    "be only one line. Do not output things like '##Summary', '##Summary and Analysis'.",
)

_NEGATIVE_MARKERS = ("subgoal is not met", "not been met")
_POSITIVE_MARKERS = ("subgoal is met", "has been met")


class EmptySummary(Exception):
    pass


@dataclass(frozen=True)
class SummaryResult:
    summary: str
    met: bool

    def __post_init__(self) -> None:
        if not self.summary or "\n" in self.summary:
            raise ValueError("a summary is a single non-empty line")


def summary_prompt(subgoal: str, steps: Sequence[MemoryStep], example: str) -> str:
    trajectory = "\n".join(s.render() for s in steps)
    instructions = "\n".join(SUMMARY_INSTRUCTIONS)
    return (
        f"{SUMMARY_PREAMBLE}\n\n### Instructions:\n{instructions}\n\n{example}\n\n"
        f"##Trajectory\n{trajectory}\n\n##Subgoal:\n{subgoal}\n\n###Output:\n"
    )


def detect_met(summary: str) -> bool:
    lowered = summary.lower()
    if any(m in lowered for m in _NEGATIVE_MARKERS):
        return False
    return any(m in lowered for m in _POSITIVE_MARKERS)


def parse_summary(reply: str) -> SummaryResult:
    for line in reply.splitlines():
        line = line.strip()
        if line:
            return SummaryResult(line, detect_met(line))
    raise EmptySummary("summarizer reply has no non-empty line")


def summarize(
    backend: Backend,
    subgoal: str,
    steps: Sequence[MemoryStep],
    example: str,
    settings: PromptSettings = PromptSettings(),
) -> SummaryResult:
    if not steps:
        raise ValueError("cannot summarize a chunk without steps")
    request = ChatRequest(
        user_text=summary_prompt(subgoal, steps, example),
        temperature=settings.temperature,
        top_p=settings.top_p,
        max_output_tokens=settings.max_output_tokens,
    )
    return parse_summary(backend.complete(request))
