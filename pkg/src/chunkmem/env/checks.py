"""Self-checks for the bundled domains, shared by ``chunkmem envcheck`` and tests."""

from __future__ import annotations

import time
from collections.abc import Callable
from dataclasses import dataclass

from .core import GOAL_COMPLETED, META_ACTIONS_SUFFIX, Domain, MetaAction
from .instances import bundled_instances, get_domain, load_domain, reference_plan, transcript_pairs

# action names and arities as listed in each domain's instructions
EXPECTED_SCHEMAS: dict[str, dict[str, int]] = {
    "blocksworld": {"pickup": 1, "putdown": 1, "stack": 2, "unstack": 2},
    "gripper": {"move": 2, "pick": 3, "drop": 3},
    "tyreworld": {
        "open": 1, "close": 1, "fetch": 2, "put-away": 2, "loosen": 2, "tighten": 2,
        "jack-up": 1, "jack-down": 1, "undo": 2, "do-up": 2, "remove-wheel": 2,
        "put-on-wheel": 2, "inflate": 1,
    },
    "barman": {
        "grasp": 2, "leave": 2, "fill-shot": 5, "refill-shot": 5, "empty-shot": 3,
        "clean-shot": 4, "pour-shot-to-clean-shaker": 6, "pour-shot-to-used-shaker": 6,
        "empty-shaker": 5, "clean-shaker": 3, "shake": 6, "pour-shaker-to-shot": 6,
    },
}

# bundled instance whose initial state is the one used in the in-context example
EXAMPLE_INSTANCE = {"blocksworld": "b2", "gripper": "g2", "tyreworld": "t1", "barman": "m2"}

# this example closes subgoals with summary lines and keeps some typos, so
# only its flat twin is replayed
SUMMARY_EXAMPLES = {"tyreworld"}

REACHABLE_LIMIT = 10_000


@dataclass(frozen=True)
class CheckResult:
    domain: str
    check: str
    passed: bool
    detail: str = ""
    seconds: float = 0.0


def listed_actions(observation: str) -> set[str] | None:
    """Ground-action surfaces named in a ``Valid actions are:`` observation.

    Accepts both listing styles seen in transcripts: meta-actions appended as
    ``Check valid actions. Look around.`` or as a trailing ``check valid actions``
    list item.
    """
    prefix = "Valid actions are: "
    if not observation.startswith(prefix):
        return None
    body = observation[len(prefix):].strip()
    if body.endswith(META_ACTIONS_SUFFIX):
        body = body[: -len(META_ACTIONS_SUFFIX)].strip()
    items = [i.strip() for i in body.split(", ") if i.strip()]
    return {i for i in items if i.lower().rstrip(".") not in ("check valid actions", "look around")}


def check_schemas(domain: Domain) -> list[str]:
    expected = EXPECTED_SCHEMAS[domain.name]
    actual = {s.name: s.arity for s in domain.schemas}
    problems = []
    if list(actual) != list(expected):
        problems.append(f"schema names/order {list(actual)} != {list(expected)}")
    for name, arity in expected.items():
        if actual.get(name) not in (None, arity):
            problems.append(f"{name} has arity {actual[name]}, expected {arity}")
    return problems


def check_validity_agreement(name: str, instance: str) -> list[str]:
    """Exhaustively compare enumerate_valid with step executability."""
    task = load_domain(name, instance)
    domain, goal = task.domain, task.goal
    states = domain.reachable_states(task.state, REACHABLE_LIMIT)
    if states is None:
        return [f"more than {REACHABLE_LIMIT} reachable states; skipped"]
    problems = []
    for state in states:
        valid = set(domain.enumerate_valid(state))
        for action in domain.groundings(state):
            after, outcome = domain.step(state, goal, action)
            if (action in valid) != outcome.executable:
                problems.append(f"{action.surface} disagrees in {domain.render_observation(state)}")
            if not outcome.executable and after.facts != state.facts:
                problems.append(f"invalid {action.surface} changed the state")
            if outcome.done != (outcome.progress == 1):
                problems.append(f"done flag inconsistent after {action.surface}")
        for violation in domain.check_invariants(state):
            problems.append(f"invariant violated: {violation}")
        if len(problems) > 20:
            break
    return problems


def check_round_trip(name: str, instance: str) -> list[str]:
    task = load_domain(name, instance)
    domain = task.domain
    problems = []
    for action in domain.groundings(task.state):
        parsed = domain.normalize_action(action.surface)
        if parsed != action:
            problems.append(f"{action.surface!r} parsed as {parsed!r}")
    return problems


def check_plan(name: str, instance: str) -> list[str]:
    task = load_domain(name, instance)
    domain = task.domain
    problems = []
    plan = domain.bfs_solve(task.state, task.goal, 30)
    if plan is None:
        return ["breadth-first search found no plan within depth 30"]
    stored = reference_plan(name, instance)
    if len(stored) != len(plan):
        problems.append(f"stored plan has {len(stored)} steps, shortest is {len(plan)}")
    state = task.state
    for action in stored:
        state, outcome = domain.step(state, task.goal, action)
        if not outcome.executable:
            problems.append(f"stored plan step {action.surface!r} is not executable")
            break
    if domain.progress(state, task.goal) != 1:
        problems.append("stored plan does not reach the goal")
    return problems


def check_example_replay(name: str) -> list[str]:
    """Run the in-context example's actions and compare every observation."""
    task = load_domain(name, EXAMPLE_INSTANCE[name])
    domain = task.domain
    problems = []
    sources = [("std", task.example_std)]
    if name not in SUMMARY_EXAMPLES:
        sources.append(("ours", task.example_ours))
    for source, text in sources:
        state = task.state
        pairs = transcript_pairs(text)
        if not pairs:
            problems.append(f"{source} example has no action/observation pairs")
        for action, expected in pairs:
            if action.lower().startswith("retrieve("):
                continue
            state, outcome = domain.execute(state, task.goal, action)
            got = outcome.observation
            if source == "ours":
                expected = _strip_verdict(expected)
            listed = listed_actions(expected)
            if listed is not None and isinstance(domain.normalize_action(action), MetaAction):
                mine = {a.surface for a in domain.enumerate_valid(state)}
                if listed != mine:
                    problems.append(f"{source}: {action!r} lists {sorted(listed)}, env {sorted(mine)}")
            elif got != expected:
                problems.append(f"{source}: {action!r} expected {expected!r}, got {got!r}")
        if domain.progress(state, task.goal) != 1 or not got.endswith(GOAL_COMPLETED):
            problems.append(f"{source} example does not end with the goal completed")
    return problems


def _strip_verdict(observation: str) -> str:
    for clause in (" Subgoal is met.", " Subgoal is not met."):
        if observation.endswith(clause):
            return observation[: -len(clause)]
    return observation


def _timed(domain: str, check: str, fn: Callable[[], list[str]]) -> CheckResult:
    start = time.perf_counter()
    try:
        problems = fn()
    except Exception as exc:  # a crashing check is a failing check
        problems = [f"{type(exc).__name__}: {exc}"]
    seconds = time.perf_counter() - start
    return CheckResult(domain, check, not problems, "; ".join(problems[:5]), seconds)


def run_checks(name: str) -> list[CheckResult]:
    domain = get_domain(name)
    results = [_timed(name, "schemas", lambda: check_schemas(domain))]
    results.append(_timed(name, "example-replay", lambda: check_example_replay(name)))
    for instance in bundled_instances(name):
        results.append(_timed(name, f"validity:{instance}",
                              lambda i=instance: check_validity_agreement(name, i)))
        results.append(_timed(name, f"round-trip:{instance}",
                              lambda i=instance: check_round_trip(name, i)))
        results.append(_timed(name, f"plan:{instance}", lambda i=instance: check_plan(name, i)))
    return results


__all__ = [
    "EXAMPLE_INSTANCE",
    "EXPECTED_SCHEMAS",
    "CheckResult",
    "check_example_replay",
    "check_plan",
    "check_round_trip",
    "check_schemas",
    "check_validity_agreement",
    "listed_actions",
    "run_checks",
]
