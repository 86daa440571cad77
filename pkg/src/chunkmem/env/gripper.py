from __future__ import annotations

from .core import Domain, EnvState, objects_of, schema


class Gripper(Domain):
    name = "gripper"
    types = {"room": ("room",), "ball": ("ball",), "gripper": ("gripper",)}
    predicates = {
        "room": (1, "Room {0}."),
        "ball": (1, "{0} is a ball."),
        "gripper": (1, "{0} is a gripper."),
        "at-robby": (1, "Robby is at {0}."),
        "at": (2, "{0} is at {1}."),
        "free": (1, "{0} is free."),
        "carry": (2, "{0} is carrying {1}."),
    }
    fillers = frozenset({"from", "to", "at", "with", "arm", "the", "in", "using", "room", "ball"})
    schemas = (
        schema(
            "move",
            "?from:room ?to:room",
            pre="at-robby(?from)",
            add="at-robby(?to)",
            delete="at-robby(?from)",
            surface="Move from {from} to {to}.",
            distinct=True,
        ),
        schema(
            "pick",
            "?obj:ball ?room:room ?gripper:gripper",
            pre="at(?obj,?room) at-robby(?room) free(?gripper)",
            add="carry(?obj,?gripper)",
            delete="at(?obj,?room) free(?gripper)",
            surface="Pick up {obj} at {room} with arm {gripper}.",
            verbs=("pick up", "pick"),
        ),
        schema(
            "drop",
            "?obj:ball ?room:room ?gripper:gripper",
            pre="carry(?obj,?gripper) at-robby(?room)",
            add="at(?obj,?room) free(?gripper)",
            delete="carry(?obj,?gripper)",
            surface="Drop {obj} at {room} with arm {gripper}.",
        ),
    )

    def check_invariants(self, state: EnvState) -> list[str]:
        problems = super().check_invariants(state)
        facts = state.facts
        rooms = [f.args[0] for f in facts if f.predicate == "at-robby"]
        if len(rooms) != 1:
            problems.append(f"robot must be in exactly one room, found {rooms}")
        for ball in objects_of(state, "ball"):
            places = [f for f in facts if f.predicate in ("at", "carry") and f.args[0] == ball]
            if len(places) != 1:
                problems.append(f"{ball} must be in one room or one gripper, found {len(places)}")
        for g in objects_of(state, "gripper"):
            carried = [f for f in facts if f.predicate == "carry" and f.args[1] == g]
            free = any(f.predicate == "free" and f.args == (g,) for f in facts)
            if len(carried) > 1 or free == bool(carried):
                problems.append(f"gripper {g} must be free xor carry exactly one ball")
        return problems
