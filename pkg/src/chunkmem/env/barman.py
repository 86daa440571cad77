"""Cocktail-mixing domain following the IPC-2011 barman semantics."""

from __future__ import annotations

from .core import Domain, EnvState, Fact, objects_of, schema


class Barman(Domain):
    name = "barman"
    types = {
        "hand": ("hand",),
        "shot": ("shot",),
        "shaker": ("shaker",),
        "container": ("shot", "shaker"),
        "ingredient": ("ingredient",),
        "cocktail": ("cocktail",),
        "beverage": ("ingredient", "cocktail"),
        "dispenser": ("dispenser",),
        "level": ("level",),
    }
    predicates = {
        "ontable": (1, "{0} is on the table."),
        "holding": (2, "{0} hand is holding {1}."),
        "handempty": (1, "{0} hand is empty."),
        "empty": (1, "{0} is empty."),
        "contains": (2, "{0} contains {1}."),
        "clean": (1, "{0} is clean."),
        "used": (2, "{0} is used with {1}."),
        "dispenses": (2, "{0} dispenses {1}."),
        "shaker-empty-level": (2, "{0} is at empty level {1}."),
        "shaker-level": (2, "{0} is at level {1}."),
        "next": (2, "Level {0} is next to level {1}."),
        "unshaked": (1, "{0} is unshaked."),
        "shaked": (1, "{0} is shaked."),
        "cocktail-part1": (2, "{0} part1 ingredient is {1}."),
        "cocktail-part2": (2, "{0} part2 ingredient is {1}."),
    }
    fillers = frozenset({"the", "with", "from", "to", "in", "into", "hand", "using"})
    schemas = (
        schema(
            "grasp",
            "?h:hand ?c:container",
            pre="ontable(?c) handempty(?h)",
            add="holding(?h,?c)",
            delete="ontable(?c) handempty(?h)",
            surface="{h} grasp {c}.",
        ),
        schema(
            "leave",
            "?h:hand ?c:container",
            pre="holding(?h,?c)",
            add="handempty(?h) ontable(?c)",
            delete="holding(?h,?c)",
            surface="{h} leave {c}.",
        ),
        schema(
            "fill-shot",
            "?s:shot ?i:ingredient ?h1:hand ?h2:hand ?d:dispenser",
            pre="holding(?h1,?s) handempty(?h2) dispenses(?d,?i) empty(?s) clean(?s)",
            add="contains(?s,?i) used(?s,?i)",
            delete="empty(?s) clean(?s)",
            surface="fill-shot {s} {i} {h1} {h2} {d}.",
            verbs=("fill-shot", "fill shot"),
        ),
        schema(
            "refill-shot",
            "?s:shot ?i:ingredient ?h1:hand ?h2:hand ?d:dispenser",
            pre="holding(?h1,?s) handempty(?h2) dispenses(?d,?i) empty(?s) used(?s,?i)",
            add="contains(?s,?i)",
            delete="empty(?s)",
            surface="refill-shot {s} {i} {h1} {h2} {d}.",
            verbs=("refill-shot", "refill shot"),
        ),
        schema(
            "empty-shot",
            "?h:hand ?p:shot ?b:beverage",
            pre="holding(?h,?p) contains(?p,?b)",
            add="empty(?p)",
            delete="contains(?p,?b)",
            surface="empty-shot {h} {p} {b}.",
            verbs=("empty-shot", "empty shot"),
        ),
        schema(
            "clean-shot",
            "?s:shot ?b:beverage ?h1:hand ?h2:hand",
            pre="holding(?h1,?s) handempty(?h2) empty(?s) used(?s,?b)",
            add="clean(?s)",
            delete="used(?s,?b)",
            surface="clean-shot {s} {b} {h1} {h2}.",
            verbs=("clean-shot", "clean shot"),
        ),
        schema(
            "pour-shot-to-clean-shaker",
            "?s:shot ?i:ingredient ?d:shaker ?h1:hand ?l:level ?l1:level",
            pre="holding(?h1,?s) contains(?s,?i) empty(?d) clean(?d) shaker-level(?d,?l) next(?l,?l1)",
            add="empty(?s) contains(?d,?i) unshaked(?d) shaker-level(?d,?l1)",
            delete="contains(?s,?i) empty(?d) clean(?d) shaker-level(?d,?l)",
            surface="pour-shot-to-clean-shaker {s} {i} {d} {h1} {l} {l1}.",
            verbs=("pour-shot-to-clean-shaker", "pour shot to clean shaker"),
        ),
        schema(
            "pour-shot-to-used-shaker",
            "?s:shot ?i:ingredient ?d:shaker ?h1:hand ?l:level ?l1:level",
            pre="holding(?h1,?s) contains(?s,?i) unshaked(?d) shaker-level(?d,?l) next(?l,?l1)",
            add="contains(?d,?i) empty(?s) shaker-level(?d,?l1)",
            delete="contains(?s,?i) shaker-level(?d,?l)",
            surface="pour-shot-to-used-shaker {s} {i} {d} {h1} {l} {l1}.",
            verbs=("pour-shot-to-used-shaker", "pour shot to used shaker"),
        ),
        schema(
            "empty-shaker",
            "?h:hand ?s:shaker ?b:cocktail ?l:level ?l1:level",
            pre="holding(?h,?s) contains(?s,?b) shaked(?s) shaker-level(?s,?l) shaker-empty-level(?s,?l1)",
            add="shaker-level(?s,?l1) empty(?s)",
            delete="shaked(?s) shaker-level(?s,?l) contains(?s,?b)",
            surface="empty-shaker {h} {s} {b} {l} {l1}.",
            verbs=("empty-shaker", "empty shaker"),
        ),
        schema(
            "clean-shaker",
            "?h1:hand ?h2:hand ?s:shaker",
            pre="holding(?h1,?s) handempty(?h2) empty(?s)",
            add="clean(?s)",
            surface="clean-shaker {h1} {h2} {s}.",
            verbs=("clean-shaker", "clean shaker"),
        ),
        schema(
            "shake",
            "?b:cocktail ?d1:ingredient ?d2:ingredient ?s:shaker ?h1:hand ?h2:hand",
            pre="holding(?h1,?s) handempty(?h2) contains(?s,?d1) contains(?s,?d2) "
            "cocktail-part1(?b,?d1) cocktail-part2(?b,?d2) unshaked(?s)",
            add="shaked(?s) contains(?s,?b)",
            delete="unshaked(?s) contains(?s,?d1) contains(?s,?d2)",
            surface="shake {b} {d1} {d2} {s} {h1} {h2}.",
        ),
        schema(
            "pour-shaker-to-shot",
            "?b:beverage ?d:shot ?h:hand ?s:shaker ?l:level ?l1:level",
            # the shaker may not be poured down to its empty level, which keeps
            # "empty <=> at the empty level" true without conditional effects
            pre="holding(?h,?s) shaked(?s) empty(?d) clean(?d) contains(?s,?b) "
            "shaker-level(?s,?l) next(?l1,?l) !shaker-empty-level(?s,?l1)",
            add="contains(?d,?b) shaker-level(?s,?l1)",
            delete="clean(?d) empty(?d) shaker-level(?s,?l)",
            surface="pour-shaker-to-shot {b} {d} {h} {s} {l} {l1}.",
            verbs=("pour-shaker-to-shot", "pour shaker to shot"),
        ),
    )

    def check_invariants(self, state: EnvState) -> list[str]:
        problems = super().check_invariants(state)
        facts = state.facts
        holding = [f for f in facts if f.predicate == "holding"]
        for h in objects_of(state, "hand"):
            held = [f for f in holding if f.args[0] == h]
            if len(held) > 1 or (Fact("handempty", (h,)) in facts) == bool(held):
                problems.append(f"{h} hand must be empty xor hold exactly one container")
        for c in objects_of(state, "shot", "shaker"):
            places = [f for f in holding if f.args[1] == c]
            places += [f for f in facts if f == Fact("ontable", (c,))]
            if len(places) != 1:
                problems.append(f"{c} must be on the table or in exactly one hand")
            contents = [f for f in facts if f.predicate == "contains" and f.args[0] == c]
            is_empty = Fact("empty", (c,)) in facts
            if is_empty == bool(contents):
                problems.append(f"{c} must be empty xor contain something")
            if state.objects[c] == "shot" and len(contents) > 1:
                problems.append(f"shot {c} holds more than one beverage")
        levels = objects_of(state, "level")
        for s in objects_of(state, "shaker"):
            current = [f.args[1] for f in facts if f.predicate == "shaker-level" and f.args[0] == s]
            empty_level = [f.args[1] for f in facts
                           if f.predicate == "shaker-empty-level" and f.args[0] == s]
            if len(current) != 1 or current[0] not in levels:
                problems.append(f"shaker {s} must have exactly one level, found {current}")
                continue
            is_empty = Fact("empty", (s,)) in facts
            if is_empty != (current == empty_level):
                problems.append(f"shaker {s}: empty must coincide with its empty level")
        return problems
