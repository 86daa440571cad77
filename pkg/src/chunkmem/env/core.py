"""Symbolic planning-domain engine shared by every bundled domain.

A domain is a table of predicates (each with a sentence template) and an
ordered list of STRIPS-style action schemas with optional negative
preconditions.  States are immutable fact sets, so every operation here is a
pure function.
"""

from __future__ import annotations

import itertools
import re
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Sequence, Union

INVALID_ACTION_OBSERVATION = (
    "The action is not valid and therefore takes no effect. Please check valid actions."
)
GOAL_COMPLETED = "Goal is completed."
META_ACTIONS_SUFFIX = "Check valid actions. Look around."


@dataclass(frozen=True, order=True)
class Fact:
    predicate: str
    args: tuple[str, ...] = ()

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class EnvState:
    facts: frozenset[Fact]
    # object name -> concrete type; constant for an instance, so excluded from eq/hash
    objects: Mapping[str, str] = field(default_factory=dict, compare=False, hash=False)

    def holds(self, fact: Fact) -> bool:
        return fact in self.facts

    def with_facts(self, facts: Iterable[Fact]) -> EnvState:
        return EnvState(frozenset(facts), self.objects)


@dataclass(frozen=True)
class GroundAction:
    name: str
    args: tuple[str, ...]
    surface: str = field(default="", compare=False)

    def __str__(self) -> str:
        return self.surface or f"{self.name} {' '.join(self.args)}"


class MetaAction(Enum):
    CHECK_VALID_ACTIONS = "check valid actions"
    LOOK_AROUND = "look around"


@dataclass(frozen=True)
class Unparseable:
    raw: str


NormalizedAction = Union[GroundAction, MetaAction, Unparseable]


@dataclass(frozen=True)
class GoalSpec:
    conditions: tuple[Fact, ...]

    def __post_init__(self) -> None:
        if not self.conditions:
            raise ValueError("goal must contain at least one condition")


@dataclass(frozen=True)
class StepOutcome:
    observation: str
    executable: bool
    progress: Fraction
    done: bool


# --- schema description -----------------------------------------------------

_ATOM_RE = re.compile(r"^(!?)([a-z][a-z0-9-]*)\(([^()]*)\)$")


@dataclass(frozen=True)
class Atom:
    predicate: str
    terms: tuple[str, ...]  # "?var" or a constant object name
    negated: bool = False

    @classmethod
    def parse(cls, text: str) -> Atom:
        m = _ATOM_RE.match(text.strip())
        if not m:
            raise ValueError(f"bad atom {text!r}")
        terms = tuple(t.strip() for t in m.group(3).split(",") if t.strip())
        return cls(m.group(2), terms, bool(m.group(1)))

    def ground(self, binding: Mapping[str, str]) -> Fact:
        return Fact(self.predicate, tuple(binding.get(t, t) for t in self.terms))


def _atoms(spec: str) -> tuple[Atom, ...]:
    return tuple(Atom.parse(tok) for tok in spec.split())


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]  # (variable, parameter type)
    pre: tuple[Atom, ...]
    add: tuple[Atom, ...]
    delete: tuple[Atom, ...]
    surface: str  # format string over variable names without "?"
    verbs: tuple[str, ...]
    # effect literals rendered as the success observation; defaults to `add`
    report: tuple[Atom, ...] = ()
    distinct: bool = False

    @property
    def arity(self) -> int:
        return len(self.params)

    @property
    def reported(self) -> tuple[Atom, ...]:
        return self.report or self.add


def schema(
    name: str,
    params: str,
    *,
    pre: str,
    add: str = "",
    delete: str = "",
    surface: str,
    verbs: Sequence[str] = (),
    report: str = "",
    distinct: bool = False,
) -> ActionSchema:
    """Build an :class:`ActionSchema` from a compact textual description.

    ``params`` is a space separated list of ``?var:type``; atoms are written as
    ``pred(?x,const)`` and a leading ``!`` negates a precondition.
    """
    plist = []
    for tok in params.split():
        var, _, typ = tok.partition(":")
        plist.append((var, typ))
    return ActionSchema(
        name=name,
        params=tuple(plist),
        pre=_atoms(pre),
        add=_atoms(add),
        delete=_atoms(delete),
        surface=surface,
        verbs=tuple(verbs) or (name,),
        report=_atoms(report),
        distinct=distinct,
    )


class Domain:
    """Base class for the bundled planning domains.

    Subclasses fill in the class attributes and may override
    :meth:`check_invariants`.
    """

    name: str = ""
    # parameter type -> concrete object types it admits
    types: Mapping[str, tuple[str, ...]] = {}
    # predicate -> (arity, sentence template using {0}, {1}, ...)
    predicates: Mapping[str, tuple[int, str]] = {}
    negative_templates: Mapping[str, str] = {}
    schemas: tuple[ActionSchema, ...] = ()
    capitalize: bool = True
    fillers: frozenset[str] = frozenset()

    def __init__(self) -> None:
        self._schema_by_name = {s.name: s for s in self.schemas}
        phrases = []
        for s in self.schemas:
            for verb in s.verbs:
                phrases.append((tuple(verb.lower().split()), s))
        # longest phrase first so "pick up" wins over "pick"
        phrases.sort(key=lambda p: -len(p[0]))
        self._phrases = phrases
        self._grounding_cache: dict[tuple, tuple[GroundAction, ...]] = {}

    # -- text -----------------------------------------------------------------

    def sentence(self, fact: Fact, *, negated: bool = False, capitalize: bool | None = None) -> str:
        if negated:
            template = self.negative_templates[fact.predicate]
        else:
            template = self.predicates[fact.predicate][1]
        text = template.format(*fact.args)
        if self.capitalize if capitalize is None else capitalize:
            text = text[:1].upper() + text[1:]
        return text

    @staticmethod
    def _sort_sentences(sentences: Iterable[str]) -> list[str]:
        return sorted(sentences, key=lambda s: (s.lower(), s))

    def render_observation(self, state: EnvState) -> str:
        return " ".join(self._sort_sentences(self.sentence(f) for f in state.facts))

    def goal_text(self, goal: GoalSpec) -> str:
        return ", ".join(self.sentence(c, capitalize=False) for c in goal.conditions)

    def surface(self, name: str, args: Sequence[str]) -> str:
        sch = self._schema_by_name[name]
        binding = {var.lstrip("?"): arg for (var, _), arg in zip(sch.params, args)}
        return sch.surface.format(**binding)

    def ground(self, name: str, args: Sequence[str]) -> GroundAction:
        args = tuple(args)
        return GroundAction(name, args, self.surface(name, args))

    # -- parsing --------------------------------------------------------------

    def normalize_action(self, raw: str) -> NormalizedAction:
        text = raw.strip()
        if text.endswith("."):
            text = text[:-1].rstrip()
        lowered = " ".join(text.lower().split())
        for meta in MetaAction:
            if lowered == meta.value:
                return meta
        tokens = text.split()
        low = [t.lower() for t in tokens]
        for phrase, sch in self._phrases:
            n = len(phrase)
            for i in range(len(low) - n + 1):
                if tuple(low[i : i + n]) == phrase:
                    rest = tokens[:i] + tokens[i + n :]
                    args = tuple(t for t in rest if t.lower() not in self.fillers)
                    if len(args) != sch.arity:
                        return Unparseable(raw)
                    return self.ground(sch.name, args)
        return Unparseable(raw)

    # -- semantics ------------------------------------------------------------

    def groundings(self, state: EnvState) -> tuple[GroundAction, ...]:
        """All type-correct ground actions, in schema then lexicographic order."""
        key = tuple(sorted(state.objects.items()))
        cached = self._grounding_cache.get(key)
        if cached is not None:
            return cached
        by_type: dict[str, list[str]] = {}
        for obj, typ in state.objects.items():
            by_type.setdefault(typ, []).append(obj)
        out = []
        for sch in self.schemas:
            pools = []
            for _, ptype in sch.params:
                admitted = self.types.get(ptype, (ptype,))
                pools.append(sorted(o for t in admitted for o in by_type.get(t, ())))
            for combo in itertools.product(*pools):
                if sch.distinct and len(set(combo)) != len(combo):
                    continue
                out.append(self.ground(sch.name, combo))
        result = tuple(out)
        self._grounding_cache[key] = result
        return result

    def _binding(self, sch: ActionSchema, action: GroundAction) -> dict[str, str]:
        return {var: arg for (var, _), arg in zip(sch.params, action.args)}

    def _well_typed(self, sch: ActionSchema, action: GroundAction, state: EnvState) -> bool:
        if len(action.args) != sch.arity:
            return False
        for (_, ptype), arg in zip(sch.params, action.args):
            if state.objects.get(arg) not in self.types.get(ptype, (ptype,)):
                return False
        return not (sch.distinct and len(set(action.args)) != len(action.args))

    def applicable(self, state: EnvState, action: GroundAction) -> bool:
        sch = self._schema_by_name.get(action.name)
        if sch is None or not self._well_typed(sch, action, state):
            return False
        binding = self._binding(sch, action)
        for atom in sch.pre:
            if state.holds(atom.ground(binding)) == atom.negated:
                return False
        return True

    def apply(self, state: EnvState, action: GroundAction) -> EnvState:
        sch = self._schema_by_name[action.name]
        binding = self._binding(sch, action)
        facts = set(state.facts)
        facts.difference_update(a.ground(binding) for a in sch.delete)
        facts.update(a.ground(binding) for a in sch.add)
        return state.with_facts(facts)

    def enumerate_valid(self, state: EnvState) -> list[GroundAction]:
        return [a for a in self.groundings(state) if self.applicable(state, a)]

    @staticmethod
    def progress(state: EnvState, goal: GoalSpec) -> Fraction:
        met = sum(1 for c in goal.conditions if c in state.facts)
        return Fraction(met, len(goal.conditions))

    def _success_observation(self, action: GroundAction) -> str:
        sch = self._schema_by_name[action.name]
        binding = self._binding(sch, action)
        sentences = [self.sentence(a.ground(binding), negated=a.negated) for a in sch.reported]
        return " ".join(self._sort_sentences(sentences))

    def valid_actions_text(self, state: EnvState) -> str:
        listed = ", ".join(a.surface for a in self.enumerate_valid(state))
        return "Valid actions are: " + (listed + " " if listed else "") + META_ACTIONS_SUFFIX

    def step(
        self, state: EnvState, goal: GoalSpec, action: NormalizedAction
    ) -> tuple[EnvState, StepOutcome]:
        executable = True
        if action is MetaAction.CHECK_VALID_ACTIONS:
            observation = self.valid_actions_text(state)
        elif action is MetaAction.LOOK_AROUND:
            observation = self.render_observation(state)
        elif isinstance(action, GroundAction) and self.applicable(state, action):
            state = self.apply(state, action)
            observation = self._success_observation(action)
        else:
            observation = INVALID_ACTION_OBSERVATION
            executable = False
        prog = self.progress(state, goal)
        done = prog == 1
        # invalid actions keep their exact text even once the goal holds
        if done and executable and not observation.endswith(GOAL_COMPLETED):
            observation = f"{observation} {GOAL_COMPLETED}"
        return state, StepOutcome(observation, executable, prog, done)

    def execute(
        self, state: EnvState, goal: GoalSpec, raw: str
    ) -> tuple[EnvState, StepOutcome]:
        return self.step(state, goal, self.normalize_action(raw))

    # -- search ---------------------------------------------------------------

    def successors(self, state: EnvState) -> Iterator[tuple[GroundAction, EnvState]]:
        for action in self.enumerate_valid(state):
            yield action, self.apply(state, action)

    def bfs_solve(
        self, state: EnvState, goal: GoalSpec, max_depth: int = 30
    ) -> list[GroundAction] | None:
        """Shortest plan reaching every goal condition, or ``None``."""
        if max_depth < 1:
            raise ValueError("max_depth must be >= 1")
        goal_facts = set(goal.conditions)
        if goal_facts <= state.facts:
            return []
        if any(arg not in state.objects for c in goal_facts for arg in c.args):
            return None
        parents: dict[frozenset[Fact], tuple[frozenset[Fact] | None, GroundAction | None]] = {
            state.facts: (None, None)
        }
        frontier = deque([(state, 0)])
        while frontier:
            current, depth = frontier.popleft()
            if depth >= max_depth:
                continue
            for action, nxt in self.successors(current):
                if nxt.facts in parents:
                    continue
                parents[nxt.facts] = (current.facts, action)
                if goal_facts <= nxt.facts:
                    plan = []
                    key: frozenset[Fact] | None = nxt.facts
                    while key is not None:
                        prev, act = parents[key]
                        if act is not None:
                            plan.append(act)
                        key = prev
                    return plan[::-1]
                frontier.append((nxt, depth + 1))
        return None

    def reachable_states(self, state: EnvState, limit: int = 10_000) -> list[EnvState] | None:
        """Every state reachable from ``state``; ``None`` if more than ``limit``."""
        seen = {state.facts: state}
        frontier = deque([state])
        while frontier:
            current = frontier.popleft()
            for _, nxt in self.successors(current):
                if nxt.facts not in seen:
                    if len(seen) >= limit:
                        return None
                    seen[nxt.facts] = nxt
                    frontier.append(nxt)
        return list(seen.values())

    # -- validation -----------------------------------------------------------

    def check_invariants(self, state: EnvState) -> list[str]:
        """Return human-readable violations; empty when the state is sound."""
        problems = []
        for fact in state.facts:
            spec = self.predicates.get(fact.predicate)
            if spec is None:
                problems.append(f"unknown predicate in {fact}")
            elif spec[0] != len(fact.args):
                problems.append(f"arity mismatch in {fact}")
            for arg in fact.args:
                if arg not in state.objects:
                    problems.append(f"undeclared object {arg!r} in {fact}")
        return problems

    def schema(self, name: str) -> ActionSchema:
        return self._schema_by_name[name]


def objects_of(state: EnvState, *types: str) -> list[str]:
    return sorted(o for o, t in state.objects.items() if t in types)
