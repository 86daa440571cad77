"""Acceptance criteria 1-10, each recorded as one PASS/FAIL summary line."""

from __future__ import annotations

import itertools
import random
import statistics
import time
from importlib import resources
from pathlib import Path

import numpy as np
import pytest

from chunkmem.agent import AgentConfig, TrialSpec, Variant, run_suite, run_trial
from chunkmem.backend import ReplayBackend
from chunkmem.env import (
    INVALID_ACTION_OBSERVATION,
    DOMAINS,
    GroundAction,
    MetaAction,
    Unparseable,
    bundled_instances,
    get_domain,
    load_domain,
    transcript_pairs,
)
from chunkmem.env.checks import check_validity_agreement, listed_actions
from chunkmem.eval import step_series, summarize_metrics
from chunkmem.memory import MemoryMode
from chunkmem.stats import monte_carlo_p_value, wilcoxon_signed_rank

from acceptance_log import record
from oracles import brute_metrics, brute_series, brute_wilcoxon_p, random_records
from policies import chunk_sizes, padded_plan, plan_policy, random_policy

REPLAY = Path(str(resources.files("chunkmem") / "data" / "replay"))


# -- 1. tyreworld example transcript --------------------------------------------


def _replay_example():
    task = load_domain("tyreworld", "t1")
    state = task.state
    rows = []
    start = time.perf_counter()
    for action, expected in transcript_pairs(task.example_std):
        state, outcome = task.domain.execute(state, task.goal, action)
        rows.append((action, expected.rstrip(), outcome.observation))
    return rows, time.perf_counter() - start


def test_c1_transcript_verbatim():
    rows, seconds = _replay_example()
    mismatched = [a for a, want, got in rows if want != got]
    ok = not mismatched and rows[-1][2] == "W1 is in boot. Goal is completed." and seconds < 1
    record(1, ok, f"{len(rows) - len(mismatched)}/{len(rows)} observations byte-exact "
           f"in {seconds:.3f}s" + (f", mismatched after {mismatched}" if mismatched else ""),
           label="verbatim")
    assert ok, mismatched


def test_c1_listings_as_sets():
    rows, seconds = _replay_example()
    task = load_domain("tyreworld", "t1")
    ok = True
    for action, want, got in rows:
        if isinstance(task.domain.normalize_action(action), MetaAction) and \
                listed_actions(want) is not None:
            ok &= listed_actions(want) == listed_actions(got)
        else:
            ok &= want == got
    ok &= rows[-1][2].endswith("W1 is in boot. Goal is completed.")
    record(1, ok, "all observations exact, valid-action listings equal as sets",
           label="set reading", strict=False)
    assert ok


# -- 2. invalid-action contract -------------------------------------------------

_JUNK = ["", "dance", "please help", "open", "stack", "pick up the thing", "42", "!!!",
         "retrieve(1)", "Action: open boot", "go north", "unstack b1", "move to roomb"]


def _random_strings(task, rng: random.Random, n: int) -> list[str]:
    grounds = task.domain.groundings(task.state)
    objects = sorted(task.state.objects) + ["ghost", "B1", "x"]
    out = []
    for _ in range(n):
        roll = rng.random()
        if roll < 0.3:
            out.append(rng.choice(grounds).surface)
        elif roll < 0.55:
            words = rng.choice(grounds).surface.rstrip(".").split()
            i = rng.randrange(len(words))
            words[i] = rng.choice(objects)
            out.append(" ".join(words))
        elif roll < 0.75:
            words = rng.choice(grounds).surface.split()
            out.append(" ".join(rng.sample(words, len(words))))
        elif roll < 0.9:
            out.append(rng.choice(_JUNK))
        else:
            alphabet = "abcdefghij -.()"
            out.append("".join(rng.choice(alphabet) for _ in range(rng.randint(0, 25))))
    return out


@pytest.mark.parametrize("name", list(DOMAINS))
def test_c2_invalid_action_contract(name):
    rng = random.Random(list(DOMAINS).index(name))
    start = time.perf_counter()
    checked = invalid = 0
    violations = []
    for instance in bundled_instances(name):
        task = load_domain(name, instance)
        d = task.domain
        state = task.state
        for text in _random_strings(task, rng, 1000 // len(bundled_instances(name)) + 1):
            if rng.random() < 0.3:
                valid = d.enumerate_valid(state)
                if valid:
                    state = d.apply(state, rng.choice(valid))
            parsed = d.normalize_action(text)
            should_fail = isinstance(parsed, Unparseable) or (
                isinstance(parsed, GroundAction) and not d.applicable(state, parsed))
            after, outcome = d.execute(state, task.goal, text)
            checked += 1
            if should_fail:
                invalid += 1
                if outcome.observation != INVALID_ACTION_OBSERVATION or after != state \
                        or outcome.executable:
                    violations.append(text)
            elif outcome.observation == INVALID_ACTION_OBSERVATION:
                violations.append(text)
    seconds = time.perf_counter() - start
    ok = not violations and checked >= 1000 and seconds < 10
    record(2, ok, f"{name}: {checked} strings, {invalid} invalid, {len(violations)} violations, "
           f"{seconds:.2f}s", label=name)
    assert ok, violations[:5]


# -- 3. exhaustive validity agreement ------------------------------------------

SMALL = [("blocksworld", i) for i in ("b2", "b3", "b4")] + \
        [("gripper", i) for i in ("g1", "g2", "g3")]


def test_c3_validity_agreement():
    start = time.perf_counter()
    covered, problems = [], []
    for name in DOMAINS:
        for instance in bundled_instances(name):
            task = load_domain(name, instance)
            if task.domain.reachable_states(task.state, 10_000) is None:
                continue
            covered.append(f"{name}/{instance}")
            problems += check_validity_agreement(name, instance)
    seconds = time.perf_counter() - start
    required = {f"{n}/{i}" for n, i in SMALL}
    ok = not problems and required <= set(covered) and seconds < 60
    record(3, ok, f"{len(covered)} instances exhaustively checked, {len(problems)} disagreements, "
           f"{seconds:.1f}s")
    assert ok, problems[:5]


# -- 4. schema coverage ---------------------------------------------------------

SCHEMAS = {
    "blocksworld": [("pickup", 1), ("putdown", 1), ("stack", 2), ("unstack", 2)],
    "gripper": [("move", 2), ("pick", 3), ("drop", 3)],
    "tyreworld": [("open", 1), ("close", 1), ("fetch", 2), ("put-away", 2), ("loosen", 2),
                  ("tighten", 2), ("jack-up", 1), ("jack-down", 1), ("undo", 2), ("do-up", 2),
                  ("remove-wheel", 2), ("put-on-wheel", 2), ("inflate", 1)],
    "barman": [("grasp", 2), ("leave", 2), ("fill-shot", 5), ("refill-shot", 5),
               ("empty-shot", 3), ("clean-shot", 4), ("pour-shot-to-clean-shaker", 6),
               ("pour-shot-to-used-shaker", 6), ("empty-shaker", 5), ("clean-shaker", 3),
               ("shake", 6), ("pour-shaker-to-shot", 6)],
}


def test_c4_schema_coverage():
    counts = {n: len(get_domain(n).schemas) for n in SCHEMAS}
    exact = all(sorted((s.name, s.arity) for s in get_domain(n).schemas) == sorted(v)
                for n, v in SCHEMAS.items())
    ok = exact and sum(counts.values()) == 32 and list(counts.values()) == [4, 3, 13, 12]
    record(4, ok, " + ".join(str(c) for c in counts.values()) + f" = {sum(counts.values())} "
           "schemas with matching names and arities")
    assert ok


# -- 5. memory collapse -----------------------------------------------------------


def _step_line(step) -> str:
    return f"Action: {step.action_text}\nObservation: {step.observation}"


def _check_trial(seed: int) -> tuple[list[str], int]:
    rng = random.Random(seed)
    name = rng.choice(list(DOMAINS))
    task = load_domain(name, rng.choice(bundled_instances(name)))
    prompts = []
    trial = run_trial(AgentConfig(Variant.OURS, max_steps=rng.randint(8, 30), seed=seed), task,
                      random_policy(task, seed), on_prompt=lambda req, mem: prompts.append((req, mem)))
    problems = []
    # chunk membership rebuilt from the step records, independent of memory state
    owner: list[int] = []
    current = 0
    for s in trial.per_step:
        if s.kind == "subgoal":
            current += 1
        owner.append(current)
    for n, (request, mem) in enumerate(prompts):
        context = request.user_text[len(request.user_text) - len(mem.render_context()):]
        visible: dict[str, int] = {}
        hidden: set[str] = set()
        for chunk in mem.chunks:
            lines = [_step_line(s) for s, c in zip(trial.per_step[:n], owner[:n])
                     if c == chunk.chunk_id]
            if mem.is_collapsed(chunk):
                hidden.update(lines)
            else:
                for line in lines:
                    visible[line] = visible.get(line, 0) + 1
        for line in hidden:
            if context.count(line) > visible.get(line, 0):
                problems.append(f"seed {seed} prompt {n + 1}: hidden step shown: {line!r}")
        # every closed chunk re-expands to exactly its recorded lines
        for chunk in mem.chunks:
            if chunk.closed:
                expanded = mem.expand(chunk.chunk_id)
                want = [_step_line(s) for s, c in zip(trial.per_step[:n], owner[:n])
                        if c == chunk.chunk_id]
                got = expanded.chunk(chunk.chunk_id).step_lines()
                if got != "\n".join(want):
                    problems.append(f"seed {seed} prompt {n + 1}: chunk {chunk.chunk_id} "
                                    "expansion differs")
        if n and trial.per_step[n - 1].kind in ("retrieve", "subgoal") and \
                trial.per_step[n - 1].observation.startswith("trajectory of Subgoal"):
            k = int(trial.per_step[n - 1].observation.split()[3])
            if mem.chunk(k).step_lines() not in context:
                problems.append(f"seed {seed} prompt {n + 1}: retrieved chunk {k} not shown")
    retrievals = sum(s.observation.startswith("trajectory of Subgoal") for s in trial.per_step)
    return problems, retrievals


def test_c5_memory_collapse():
    start = time.perf_counter()
    failing = []
    retrievals = 0
    for seed in range(200):
        problems, count = _check_trial(seed)
        retrievals += count
        if problems:
            failing.append(problems[0])
    passed = 200 - len(failing)
    ok = not failing and retrievals > 0
    record(5, ok, f"{passed}/200 randomized OURS trials clean ({100 * passed / 200:.0f}%), "
           f"{retrievals} successful retrievals, {time.perf_counter() - start:.1f}s")
    assert ok, failing[:3]


# -- 6. context-efficiency direction ----------------------------------------------


def _paired_corpus():
    """Padded BFS plans on every bundled instance, 10 chunkings each."""
    for name in DOMAINS:
        for instance in bundled_instances(name):
            task = load_domain(name, instance)
            for seed in range(10):
                rng = random.Random(seed)
                actions = padded_plan(task, rng)
                sizes = chunk_sizes(len(actions), rng)
                runs, mems = {}, []
                for variant in (Variant.STD, Variant.OURS, Variant.TD):
                    hook = (lambda req, mem: mems.append(mem)) if variant is Variant.OURS else None
                    runs[variant] = run_trial(
                        AgentConfig(variant, max_steps=len(actions)), task,
                        plan_policy(actions, None if variant is Variant.STD else sizes),
                        on_prompt=hook)
                assert all(r.success for r in runs.values())
                qualifies = any(c.closed and len(c.steps) >= 2 for m in mems for c in m.chunks)
                means = {v: statistics.fmean(s.context_tokens for s in r.per_step)
                         for v, r in runs.items()}
                yield f"{name}/{instance}/seed{seed}", sizes, qualifies, means


_CORPUS: list = []


def _corpus():
    if not _CORPUS:
        _CORPUS.extend(_paired_corpus())
    return _CORPUS


def test_c6_chunked_below_flat_per_trajectory():
    rows = [r for r in _corpus() if r[2]]
    counter = [(label, sizes, m[Variant.OURS] / m[Variant.STD]) for label, sizes, _, m in rows
               if m[Variant.OURS] >= m[Variant.STD]]
    ok = not counter
    detail = f"{len(rows) - len(counter)}/{len(rows)} qualifying trajectories have CHUNKED < FLAT"
    if counter:
        label, sizes, ratio = counter[0]
        detail += f" (counterexample {label}, chunks {sizes}, ratio {ratio:.4f})"
    record(6, ok, detail, label="per trajectory")
    assert ok, counter


def test_c6_chunked_below_flat_on_average():
    rows = [r for r in _corpus() if r[2]]
    flat = statistics.fmean(m[Variant.STD] for *_, m in rows)
    chunked = statistics.fmean(m[Variant.OURS] for *_, m in rows)
    ok = chunked < flat
    record(6, ok, f"corpus mean CHUNKED/FLAT = {100 * chunked / flat:.2f}%",
           label="corpus mean", strict=False)
    assert ok


def test_c6_td_above_ours():
    rows = [r for r in _corpus() if r[2]]
    worse = [label for label, _, _, m in rows if not m[Variant.TD] > m[Variant.OURS]]
    td = statistics.fmean(m[Variant.TD] for *_, m in rows)
    ours = statistics.fmean(m[Variant.OURS] for *_, m in rows)
    ok = not worse
    record(6, ok, f"TD > OURS in {len(rows) - len(worse)}/{len(rows)} trajectories, "
           f"TD/OURS = {100 * td / ours:.1f}%", label="TD vs OURS")
    assert ok, worse


# -- 7. Wilcoxon ------------------------------------------------------------------


def test_c7_exact_against_enumeration():
    rng = np.random.default_rng(0)
    worst = 0.0
    cases = 0
    for n in range(5, 11):
        for _ in range(60):
            diffs = rng.permutation(np.arange(1, n + 1) * rng.uniform(0.5, 2.0))
            diffs = diffs * rng.choice([-1, 1], n)
            x = rng.normal(size=n)
            p = wilcoxon_signed_rank(x + diffs, x).p_value
            worst = max(worst, abs(p - brute_wilcoxon_p(list(diffs))))
            cases += 1
    ok = worst <= 1e-12
    record(7, ok, f"exact p vs sign enumeration on {cases} tie-free samples n=5..10, "
           f"max |diff| = {worst:.1e}", label="exact")
    assert ok


def test_c7_normal_against_monte_carlo():
    start = time.perf_counter()
    rng = np.random.default_rng(2024)
    y = rng.normal(size=50)
    x = y + rng.normal(0.25, 1.0, size=50)
    result = wilcoxon_signed_rank(x, y)
    mc = monte_carlo_p_value(x, y, samples=1_000_000, seed=1)
    seconds = time.perf_counter() - start
    ok = result.method == "normal" and abs(result.p_value - mc) <= 5e-3 and seconds < 60
    record(7, ok, f"n=50 normal p = {result.p_value:.5f}, Monte Carlo (1e6) = {mc:.5f}, "
           f"{seconds:.1f}s", label="normal")
    assert ok


# -- 8. metric oracles --------------------------------------------------------------


def test_c8_metric_oracles():
    mismatches = []
    for seed in range(100):
        rng = random.Random(seed)
        records = random_records(rng)
        width = rng.randint(1, 6)
        expected = brute_metrics(records, "STD")
        got = {(r.task, r.variant): r for r in summarize_metrics(records, "STD").rows}
        if set(got) != set(expected):
            mismatches.append((seed, "row keys"))
            continue
        for key, values in expected.items():
            for field, value in values.items():
                actual = getattr(got[key], field)
                if field == "trials":
                    same = actual == value
                elif value is None or actual is None:
                    same = value is actual
                else:
                    same = abs(actual - value) <= 1e-9
                if not same:
                    mismatches.append((seed, key, field))
        series = {(p.task, p.variant, p.bin_start): p
                  for p in step_series(records, width).points}
        for key, (progress, exe, actions, ok_count) in brute_series(records, width).items():
            p = series.get(key)
            if p is None or (p.actions, p.executable) != (actions, ok_count) \
                    or abs(p.progress - progress) > 1e-9 \
                    or (exe is None) != (p.executability is None) \
                    or (exe is not None and abs(p.executability - exe) > 1e-9):
                mismatches.append((seed, key, "series"))
    ok = not mismatches
    record(8, ok, f"100 random record sets, {len(mismatches)} mismatches")
    assert ok, mismatches[:5]


# -- 9. determinism -----------------------------------------------------------------


def test_c9_end_to_end_determinism(tmp_path):
    specs = [TrialSpec(t, i, v) for t, i in [("tyreworld", "t1"), ("blocksworld", "b4"),
                                              ("gripper", "g3"), ("barman", "m1")]
             for v in ("STD", "OURS")]

    def factory(spec):
        return ReplayBackend.from_file(REPLAY / f"{spec.task}_{spec.instance}_{spec.variant}.txt")

    start = time.perf_counter()
    outputs = []
    for run in range(2):
        result = run_suite(specs, factory, parallelism=4, out_dir=tmp_path / f"run{run}")
        outputs.append("".join(r.to_json(timing=False) + "\n" for r in result.records).encode())
    seconds = time.perf_counter() - start
    ok = outputs[0] == outputs[1] and len(result.records) == 8 and seconds < 30
    record(9, ok, f"8 trials x 2 runs, records byte-identical: {outputs[0] == outputs[1]}, "
           f"{seconds:.2f}s")
    assert ok


# -- 10. BFS solvability ---------------------------------------------------------------


@pytest.mark.parametrize("name, instance", [(n, i) for n in DOMAINS for i in bundled_instances(n)])
def test_c10_bfs_solvable(name, instance):
    task = load_domain(name, instance)
    start = time.perf_counter()
    plan = task.domain.bfs_solve(task.state, task.goal, 30)
    seconds = time.perf_counter() - start
    state = task.state
    for action in plan or []:
        state, outcome = task.domain.step(state, task.goal, action)
    ok = plan is not None and task.domain.progress(state, task.goal) == 1 and seconds < 5
    record(10, ok, f"{name}/{instance}: {len(plan or [])} steps in {seconds:.2f}s",
           label=f"{name}/{instance}")
    assert ok


def test_memory_mode_sanity():
    # guards the variant table the criteria above depend on
    assert Variant.STD.mode is MemoryMode.FLAT
    assert [v for v in Variant if not v.collapses] == [Variant.TD]
    assert list(itertools.compress(Variant, (v.retrieves for v in Variant))) == \
        [Variant.OURS, Variant.OURS_NO_OS]
