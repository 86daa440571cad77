from __future__ import annotations

from .core import Domain, EnvState, Fact, objects_of, schema


class Tyreworld(Domain):
    name = "tyreworld"
    types = {
        "container": ("container",),
        "object": ("tool", "wheel", "nut"),
        "nut": ("nut",),
        "hub": ("hub",),
        "wheel": ("wheel",),
    }
    predicates = {
        "open": (1, "{0} is open."),
        "closed": (1, "{0} is closed."),
        "unlocked": (1, "{0} is unlocked."),
        "in": (2, "{0} is in {1}."),
        "have": (1, "You have {0}."),
        "tight": (2, "The nut {0} on the hub {1} is tight."),
        "loose": (2, "The nut {0} on the hub {1} is loose."),
        "on-ground": (1, "Hub {0} is on the ground."),
        "fastened": (1, "Hub {0} is fastened."),
        "unfastened": (1, "Hub {0} is unfastened."),
        "free": (1, "Hub {0} is free."),
        "on": (2, "{0} is on {1}."),
        "intact": (1, "Wheel {0} is intact."),
        "inflated": (1, "Wheel {0} is inflated."),
        "not-inflated": (1, "Wheel {0} is not inflated."),
    }
    negative_templates = {"on-ground": "Hub {0} is not on the ground."}
    fillers = frozenset(
        {"the", "from", "in", "into", "on", "onto", "of", "to", "at", "nut", "hub", "wheel",
         "fastening", "with"}
    )
    schemas = (
        schema(
            "open",
            "?c:container",
            pre="unlocked(?c) closed(?c)",
            add="open(?c)",
            delete="closed(?c)",
            surface="Open {c}.",
        ),
        schema(
            "close",
            "?c:container",
            pre="open(?c)",
            add="closed(?c)",
            delete="open(?c)",
            surface="Close {c}.",
        ),
        schema(
            "fetch",
            "?x:object ?c:container",
            pre="in(?x,?c) open(?c)",
            add="have(?x)",
            delete="in(?x,?c)",
            surface="Fetch {x} from {c}.",
        ),
        schema(
            "put-away",
            "?x:object ?c:container",
            pre="have(?x) open(?c)",
            add="in(?x,?c)",
            delete="have(?x)",
            surface="Put-away {x} in {c}.",
            verbs=("put-away", "put away"),
        ),
        schema(
            "loosen",
            "?n:nut ?h:hub",
            pre="have(wrench) tight(?n,?h) on-ground(?h)",
            add="loose(?n,?h)",
            delete="tight(?n,?h)",
            surface="Loosen the nut {n} on the hub {h}.",
        ),
        schema(
            "tighten",
            "?n:nut ?h:hub",
            pre="have(wrench) loose(?n,?h) on-ground(?h)",
            add="tight(?n,?h)",
            delete="loose(?n,?h)",
            surface="Tighten the nut {n} on the hub {h}.",
        ),
        schema(
            "jack-up",
            "?h:hub",
            pre="have(jack) on-ground(?h)",
            delete="on-ground(?h) have(jack)",
            surface="Jack-up the hub {h}.",
            verbs=("jack-up", "jack up"),
            report="!on-ground(?h)",
        ),
        schema(
            "jack-down",
            "?h:hub",
            pre="!on-ground(?h)",
            add="on-ground(?h) have(jack)",
            surface="Jack-down the hub {h}.",
            verbs=("jack-down", "jack down"),
        ),
        schema(
            "undo",
            "?n:nut ?h:hub",
            pre="!on-ground(?h) fastened(?h) have(wrench) loose(?n,?h)",
            add="have(?n) unfastened(?h)",
            delete="fastened(?h) loose(?n,?h)",
            surface="Undo the fastening of the nut {n} on the hub {h}.",
            report="unfastened(?h)",
        ),
        schema(
            "do-up",
            "?n:nut ?h:hub",
            pre="have(wrench) unfastened(?h) !on-ground(?h) have(?n)",
            add="loose(?n,?h) fastened(?h)",
            delete="unfastened(?h) have(?n)",
            surface="Do-up the nut {n} on the hub {h}.",
            verbs=("do-up", "do up"),
        ),
        schema(
            "remove-wheel",
            "?w:wheel ?h:hub",
            pre="!on-ground(?h) on(?w,?h) unfastened(?h)",
            add="have(?w) free(?h)",
            delete="on(?w,?h)",
            surface="Remove-wheel {w} from the hub {h}.",
            verbs=("remove-wheel", "remove wheel", "remove"),
            report="have(?w)",
        ),
        schema(
            "put-on-wheel",
            "?w:wheel ?h:hub",
            pre="have(?w) free(?h) unfastened(?h) !on-ground(?h)",
            add="on(?w,?h)",
            delete="have(?w) free(?h)",
            surface="Put-on-wheel {w} on the hub {h}.",
            verbs=("put-on-wheel", "put on wheel"),
        ),
        schema(
            "inflate",
            "?w:wheel",
            pre="have(pump) not-inflated(?w) intact(?w)",
            add="inflated(?w)",
            delete="not-inflated(?w)",
            surface="Inflate the wheel {w}.",
        ),
    )

    def check_invariants(self, state: EnvState) -> list[str]:
        problems = super().check_invariants(state)
        facts = state.facts
        hubs = objects_of(state, "hub")
        raised = [h for h in hubs if Fact("on-ground", (h,)) not in facts]

        def located(x: str) -> list[str]:
            where = [f"in {f.args[1]}" for f in facts if f.predicate == "in" and f.args[0] == x]
            if Fact("have", (x,)) in facts:
                where.append("held")
            where += [f"{f.predicate} {f.args[1]}" for f in facts
                      if f.predicate in ("on", "tight", "loose") and f.args[0] == x]
            return where

        for tool in objects_of(state, "tool"):
            where = located(tool)
            if tool == "jack" and raised:
                where.append("under " + ",".join(raised))
            if len(where) != 1:
                problems.append(f"{tool} must be in exactly one location, found {where}")
        for obj in objects_of(state, "wheel", "nut"):
            where = located(obj)
            if len(where) != 1:
                problems.append(f"{obj} must be in exactly one location, found {where}")
        if len(raised) > 1:
            problems.append(f"only one hub can be jacked up, found {raised}")
        for c in objects_of(state, "container"):
            if (Fact("open", (c,)) in facts) == (Fact("closed", (c,)) in facts):
                problems.append(f"{c} must be open xor closed")
        for h in hubs:
            if (Fact("fastened", (h,)) in facts) == (Fact("unfastened", (h,)) in facts):
                problems.append(f"hub {h} must be fastened xor unfastened")
            wheels = [f for f in facts if f.predicate == "on" and f.args[1] == h]
            if len(wheels) > 1 or (Fact("free", (h,)) in facts) == bool(wheels):
                problems.append(f"hub {h} must be free xor carry exactly one wheel")
        for w in objects_of(state, "wheel"):
            if Fact("intact", (w,)) in facts:
                if (Fact("inflated", (w,)) in facts) == (Fact("not-inflated", (w,)) in facts):
                    problems.append(f"intact wheel {w} must be inflated xor not inflated")
        return problems
