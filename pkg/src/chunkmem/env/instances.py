"""Instance files and bundled task data.

An instance file has three sections::

    OBJECTS
    b1: block
    INIT
    on-table(b1)
    arm-empty
    GOAL
    holding(b1)

Blank lines and ``#`` comments are ignored.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .barman import Barman
from .blocksworld import Blocksworld
from .core import Domain, EnvState, Fact, GoalSpec, GroundAction
from .gripper import Gripper
from .tyreworld import Tyreworld

DOMAINS: dict[str, Domain] = {
    d.name: d for d in (Blocksworld(), Gripper(), Tyreworld(), Barman())
}
OUT_OF_SCOPE = {
    "jericho": "requires an external interactive-fiction game suite and is not bundled",
}
GOAL_PREFIX = "The goal is to satisfy the following conditions: "

_SECTIONS = ("OBJECTS", "INIT", "GOAL")
_FACT_RE = re.compile(r"^([a-z][a-z0-9-]*)(?:\(([^()]*)\))?$")


class InstanceError(ValueError):
    def __init__(self, message: str, line: int | None = None, source: str = "<instance>"):
        self.line = line
        where = f"{source}:{line}: " if line is not None else f"{source}: "
        super().__init__(where + message)


class UnknownDomain(KeyError):
    pass


def get_domain(name: str) -> Domain:
    try:
        return DOMAINS[name]
    except KeyError:
        if name in OUT_OF_SCOPE:
            raise UnknownDomain(f"task {name!r} is out of scope: {OUT_OF_SCOPE[name]}") from None
        raise UnknownDomain(f"unknown task {name!r}; known: {', '.join(DOMAINS)}") from None


def parse_instance(
    domain: Domain, text: str, source: str = "<instance>"
) -> tuple[EnvState, GoalSpec]:
    section = None
    seen: list[str] = []
    objects: dict[str, str] = {}
    init: list[tuple[int, Fact]] = []
    goal: list[tuple[int, Fact]] = []
    known_types = {t for admitted in domain.types.values() for t in admitted}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.upper() in _SECTIONS:
            section = line.upper()
            if section in seen:
                raise InstanceError(f"duplicate section {section}", lineno, source)
            seen.append(section)
            continue
        if section is None:
            raise InstanceError(f"content before any section: {line!r}", lineno, source)
        if section == "OBJECTS":
            name, sep, typ = (p.strip() for p in line.partition(":"))
            if not sep or not name or not typ:
                raise InstanceError(f"expected 'name: type', got {line!r}", lineno, source)
            if typ not in known_types:
                raise InstanceError(f"unknown type {typ!r}", lineno, source)
            if name in objects:
                raise InstanceError(f"object {name!r} declared twice", lineno, source)
            objects[name] = typ
            continue
        m = _FACT_RE.match(line)
        if not m:
            raise InstanceError(f"malformed fact {line!r}", lineno, source)
        pred = m.group(1)
        args = tuple(a.strip() for a in (m.group(2) or "").split(",") if a.strip())
        if pred not in domain.predicates:
            raise InstanceError(f"unknown predicate {pred!r}", lineno, source)
        if domain.predicates[pred][0] != len(args):
            raise InstanceError(
                f"{pred} takes {domain.predicates[pred][0]} argument(s), got {len(args)}",
                lineno,
                source,
            )
        (init if section == "INIT" else goal).append((lineno, Fact(pred, args)))
    missing = [s for s in _SECTIONS if s not in seen]
    if missing:
        raise InstanceError(f"missing section(s): {', '.join(missing)}", None, source)
    for lineno, fact in init + goal:
        for arg in fact.args:
            if arg not in objects:
                raise InstanceError(f"undeclared object {arg!r} in {fact}", lineno, source)
    if not goal:
        raise InstanceError("GOAL section is empty", None, source)
    state = EnvState(frozenset(f for _, f in init), objects)
    return state, GoalSpec(tuple(f for _, f in goal))


@dataclass(frozen=True)
class Task:
    """A loaded domain instance together with its prompt material."""

    domain: Domain
    instance_id: str
    state: EnvState
    goal: GoalSpec
    instructions: str
    example_std: str
    example_ours: str
    summary_example: str

    @property
    def name(self) -> str:
        return self.domain.name

    @property
    def goal_text(self) -> str:
        return self.domain.goal_text(self.goal)

    @property
    def initial_observation(self) -> str:
        return self.domain.render_observation(self.state)


def _data_dir(domain: str) -> Path:
    return Path(str(resources.files("chunkmem") / "data" / domain))


def bundled_instances(name: str) -> list[str]:
    get_domain(name)
    return sorted(p.stem for p in (_data_dir(name) / "instances").glob("*.txt"))


def _read(domain: str, filename: str) -> str:
    return (_data_dir(domain) / filename).read_text(encoding="utf-8").strip("\n")


def load_domain(name: str, instance: str | Path) -> Task:
    """Load a bundled instance id (e.g. ``"t1"``) or an instance file path."""
    domain = get_domain(name)
    path = Path(instance)
    if not path.suffix:
        path = _data_dir(name) / "instances" / f"{instance}.txt"
    if not path.is_file():
        raise InstanceError(f"no such instance {instance!r}", None, str(path))
    state, goal = parse_instance(domain, path.read_text(encoding="utf-8"), str(path))
    return Task(
        domain=domain,
        instance_id=path.stem,
        state=state,
        goal=goal,
        instructions=_read(name, "instructions.txt"),
        example_std=_read(name, "example_std.txt"),
        example_ours=_read(name, "example_ours.txt"),
        summary_example=_read(name, "summary_example.txt"),
    )


def reference_plan(name: str, instance: str) -> list[GroundAction]:
    """The stored plan for a bundled instance, parsed into ground actions."""
    domain = get_domain(name)
    path = _data_dir(name) / "instances" / f"{instance}.plan"
    plan = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        action = domain.normalize_action(line)
        if not isinstance(action, GroundAction):
            raise InstanceError(f"plan step is not a ground action: {line!r}", lineno, str(path))
        plan.append(action)
    return plan


def transcript_pairs(example: str) -> list[tuple[str, str]]:
    """Extract consecutive ``Action:``/``Observation:`` pairs from a transcript."""
    pairs = []
    pending = None
    for line in example.splitlines():
        line = line.strip()
        if line.startswith("Action:"):
            pending = line[len("Action:"):].strip()
        elif line.startswith("Observation:") and pending is not None:
            pairs.append((pending, line[len("Observation:"):].strip()))
            pending = None
    return pairs

