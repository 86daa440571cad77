from __future__ import annotations

from .core import Domain, EnvState, Fact, objects_of, schema


class Blocksworld(Domain):
    name = "blocksworld"
    types = {"block": ("block",)}
    predicates = {
        "on-table": (1, "{0} is on the table."),
        "on": (2, "{0} is on {1}."),
        "clear": (1, "The {0} is clear."),
        "arm-empty": (0, "Robot arm is empty."),
        "holding": (1, "You have {0}."),
    }
    capitalize = False
    fillers = frozenset({"the", "on", "from", "top", "of", "block", "onto", "to"})
    schemas = (
        schema(
            "pickup",
            "?b:block",
            pre="clear(?b) on-table(?b) arm-empty()",
            add="holding(?b)",
            delete="clear(?b) on-table(?b) arm-empty()",
            surface="pickup {b}.",
            verbs=("pickup", "pick-up", "pick up"),
        ),
        schema(
            "putdown",
            "?b:block",
            pre="holding(?b)",
            add="on-table(?b) clear(?b) arm-empty()",
            delete="holding(?b)",
            surface="putdown {b}.",
            verbs=("putdown", "put-down", "put down"),
        ),
        schema(
            "stack",
            "?top:block ?bottom:block",
            pre="holding(?top) clear(?bottom)",
            add="on(?top,?bottom) clear(?top) arm-empty()",
            delete="holding(?top) clear(?bottom)",
            surface="stack {top} on {bottom}.",
            distinct=True,
        ),
        schema(
            "unstack",
            "?top:block ?bottom:block",
            pre="on(?top,?bottom) clear(?top) arm-empty()",
            add="holding(?top) clear(?bottom)",
            delete="on(?top,?bottom) clear(?top) arm-empty()",
            surface="unstack {top} from {bottom}.",
            distinct=True,
        ),
    )

    def check_invariants(self, state: EnvState) -> list[str]:
        problems = super().check_invariants(state)
        blocks = objects_of(state, "block")
        held = [b for b in blocks if Fact("holding", (b,)) in state.facts]
        arm_empty = Fact("arm-empty") in state.facts
        if len(held) > 1:
            problems.append(f"more than one block held: {held}")
        if arm_empty == bool(held):
            problems.append("arm-empty must hold exactly when nothing is held")
        for b in blocks:
            below = [f.args[1] for f in state.facts if f.predicate == "on" and f.args[0] == b]
            above = [f.args[0] for f in state.facts if f.predicate == "on" and f.args[1] == b]
            places = len(below) + (Fact("on-table", (b,)) in state.facts) + (b in held)
            if places != 1:
                problems.append(f"{b} must be in exactly one place, found {places}")
            if b in below:
                problems.append(f"{b} is on itself")
            if len(above) > 1:
                problems.append(f"{b} supports more than one block")
            expect_clear = not above and b not in held
            if (Fact("clear", (b,)) in state.facts) != expect_clear:
                problems.append(f"clear({b}) inconsistent with stacking")
        return problems
