"""Scripted policies used in place of a language model."""

from __future__ import annotations

import random
from collections.abc import Sequence

from chunkmem.backend import ChatRequest, FunctionBackend
from chunkmem.backend.prompts import SUMMARY_PREAMBLE
from chunkmem.env import Task


def is_summary_request(request: ChatRequest) -> bool:
    return request.user_text.startswith(SUMMARY_PREAMBLE)


def _last_observation(request: ChatRequest) -> str:
    trajectory = request.user_text.rsplit("##Trajectory\n", 1)[1].split("\n\n##Subgoal:", 1)[0]
    return trajectory.splitlines()[-1].removeprefix("Observation: ")


def chunk_sizes(total: int, rng: random.Random, lo: int = 2, hi: int = 6) -> list[int]:
    sizes = []
    while total > 0:
        size = min(total, rng.randint(lo, hi))
        sizes.append(size)
        total -= size
    return sizes


def padded_plan(task: Task, rng: random.Random, meta_rate: float = 0.4) -> list[str]:
    """The reference BFS plan with meta-actions sprinkled in."""
    plan = task.domain.bfs_solve(task.state, task.goal, 30)
    assert plan is not None
    actions = []
    for step in plan:
        while rng.random() < meta_rate:
            actions.append(rng.choice(["check valid actions", "look around"]))
        actions.append(step.surface)
    return actions


def plan_policy(actions: Sequence[str], sizes: Sequence[int] | None) -> FunctionBackend:
    """Replies with a fixed action list; ``sizes`` groups it into subgoals.

    With ``sizes=None`` it emits bare actions (flat baseline). Summary
    requests are answered with the chunk's last observation.
    """
    starts: set[int] = set()
    if sizes is not None:
        pos = 0
        for size in sizes:
            starts.add(pos)
            pos += size
    cursor = [0]

    def reply(request: ChatRequest) -> str:
        if is_summary_request(request):
            return _last_observation(request) + " Subgoal is met."
        i = cursor[0]
        cursor[0] += 1
        action = actions[i] if i < len(actions) else "look around"
        if i in starts:
            return f"Subgoal: part starting at step {i + 1}\nAction: {action}"
        return f"Action: {action}"

    return FunctionBackend(reply, "plan")


def random_policy(task: Task, seed: int) -> FunctionBackend:
    """Random mixture of subgoals, actions, retrievals and junk replies."""
    rng = random.Random(seed)
    pool = [a.surface for a in task.domain.groundings(task.state)]
    pool += ["check valid actions", "look around", "dance wildly"]
    subgoals = [0]

    def reply(request: ChatRequest) -> str:
        if is_summary_request(request):
            return rng.choice(["Progress made. Subgoal is met.", "Stuck. Subgoal is not met.",
                               "", "Something happened."])
        roll = rng.random()
        action = rng.choice(pool)
        if roll < 0.25 or subgoals[0] == 0:
            subgoals[0] += 1
            if rng.random() < 0.1:
                action = f"retrieve({rng.randint(0, subgoals[0] + 1)})"
            return f"Subgoal: subgoal number {subgoals[0]}\nAction: {action}"
        if roll < 0.4:
            return f"Action: retrieve({rng.randint(0, subgoals[0] + 1)})"
        if roll < 0.45:
            return rng.choice(["no idea", "Subgoal: a\nSubgoal: b\nAction: x", "Action:"])
        return f"Action: {action}"

    return FunctionBackend(reply, "random")
