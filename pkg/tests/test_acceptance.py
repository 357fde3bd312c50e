"""Acceptance suite: each test pins one shipped guarantee at its tolerance
and prints a PASS/FAIL line."""

import random
import time
from collections import Counter
from contextlib import contextmanager

from dlctx import (
    AbstractLocation, AbstractTask, TaskCardinality, explore,
    generate_contexts, initial_tasks, initial_tasks_naive,
    initial_tasks_with_trace, is_deadlock, parse, replay, resolve_references,
)
from dlctx.depgraph import EdgeKind, build_dependency_graph, enumerate_cycles
from dlctx.explorer import TransitionKind, Verdict
from dlctx.syntax import iter_stmts

from helpers import brute_force_grouping_count, random_program

REGISTER = AbstractTask("DB", "register")
WORK = AbstractTask("Worker", "work")
MAKES = AbstractTask("DB", "makesConnection")


@contextmanager
def criterion(number: int, description: str):
    try:
        yield
    except BaseException:
        print(f"[criterion {number}] FAIL {description}")
        raise
    print(f"[criterion {number}] PASS {description}")


def fixture_cycle(program):
    graph = build_dependency_graph(program, resolve_references(program))
    cycles = enumerate_cycles(graph)
    assert len(cycles) == 1
    return cycles[0]


def test_criterion_1_cycle_reproduction(orig_program, mod_program):
    with criterion(1, "4-edge abstract cycle matches on both fixture variants"):
        started = time.perf_counter()
        for program in (orig_program, mod_program):
            cycle = fixture_cycle(program)
            assert len(cycle.edges) == 4
            names = []
            for node in cycle.nodes:
                if isinstance(node, AbstractLocation):
                    names.append(f"o@{node.creation_pp.render()}")
                else:
                    names.append(node.method_name)
            assert names == ["o@pp:newdb", "ping", "o@pp:neww", "getData"]
            loc_task = [e for e in cycle.edges if e.kind == EdgeKind.LOC_TASK]
            assert {(e.pp.label, e.in_task) for e in loc_task} == {
                ("register", REGISTER),
                ("work", WORK),
            }
        assert time.perf_counter() - started < 1.0


def test_criterion_2_t_ini_reproduction(mod_program):
    with criterion(2, "interfering tasks are exactly register, work, makesConnection"):
        result = initial_tasks(mod_program, fixture_cycle(mod_program))
        assert result == {
            TaskCardinality(REGISTER, 1, 1),
            TaskCardinality(WORK, 1, 1),
            TaskCardinality(MAKES, 1, 1),
        }


def test_criterion_3_worklist_trace(mod_program):
    with criterion(3, "post-init worklist multisets and the three connected-modifiers"):
        _, trace = initial_tasks_with_trace(mod_program, fixture_cycle(mod_program))
        events = Counter((e.task, e.pp.label) for e in trace.init_events)
        answers = Counter((e.task, e.pp.label) for e in trace.init_answers)
        assert events == Counter(
            {
                (WORK, "work"): 1,
                (WORK, "fgetdata"): 1,
                (REGISTER, "register"): 1,
                (REGISTER, "fping"): 1,
            }
        )
        assert answers == Counter({(REGISTER, "register"): 1, (WORK, "work"): 1})
        from dlctx import field_modifiers

        mods = field_modifiers(mod_program, "connected")
        assert {pp.label for _, pp in mods} == {"makestrue", "connected1", "connected"}


def test_criterion_4_context_reproduction(mod_program):
    with criterion(4, "exactly two canonical contexts with the expected groupings"):
        t_ini = initial_tasks(mod_program, fixture_cycle(mod_program))
        contexts = generate_contexts(mod_program, t_ini)
        assert len(contexts) == 2
        groupings = {
            tuple(
                sorted(
                    (loc.class_name, tuple(sorted(t.task.method_name for t in loc.tasks)))
                    for loc in ctx.locations
                )
            )
            for ctx in contexts
        }
        assert groupings == {
            (("DB", ("makesConnection", "register")), ("Worker", ("work",))),
            (("DB", ("makesConnection",)), ("DB", ("register",)), ("Worker", ("work",))),
        }


def test_criterion_5_interference_semantics(mod_program):
    with criterion(5, "2-task context provably clean, generated context deadlocks"):
        (two_task,) = generate_contexts(
            mod_program, [TaskCardinality(REGISTER, 1, 1), TaskCardinality(WORK, 1, 1)]
        )
        started = time.perf_counter()
        clean = explore(mod_program, two_task, max_states=10_000)
        assert time.perf_counter() - started <= 5.0
        assert clean.verdict == Verdict.NO_DEADLOCK
        assert not clean.bound_hit
        assert clean.states_explored <= 10_000

        t_ini = initial_tasks(mod_program, fixture_cycle(mod_program))
        deadlocking = []
        for ctx in generate_contexts(mod_program, t_ini):
            started = time.perf_counter()
            report = explore(mod_program, ctx, max_states=10_000)
            assert time.perf_counter() - started <= 5.0
            assert report.states_explored <= 10_000
            if report.verdict == Verdict.DEADLOCK_FOUND:
                deadlocking.append((ctx, report))
        assert deadlocking
        ctx, report = deadlocking[0]
        trace = report.traces[0]
        final = replay(mod_program, trace, ctx)
        assert is_deadlock(final)
        labels = [s.pp.label for s in trace.steps]
        suspend = labels.index("await")
        resume = next(
            i for i, s in enumerate(trace.steps)
            if s.transition.kind == TransitionKind.RESUME and s.task == REGISTER
        )
        makestrue = next(
            i for i, s in enumerate(trace.steps)
            if s.pp.label == "makestrue" and s.transition.kind == TransitionKind.STEP
        )
        assert suspend < makestrue < resume


def test_criterion_6_original_variant_deadlock(orig_program):
    with criterion(6, "original fixture deadlocks from {[register]_db1,[work]_w1}"):
        (ctx,) = generate_contexts(
            orig_program, [TaskCardinality(REGISTER, 1, 1), TaskCardinality(WORK, 1, 1)]
        )
        assert ctx.render() == "{[register]_db1, [work]_w1}"
        started = time.perf_counter()
        report = explore(orig_program, ctx, max_states=10_000)
        assert time.perf_counter() - started <= 5.0
        assert report.verdict == Verdict.DEADLOCK_FOUND


def test_criterion_7_oracle_equivalence(orig_program, mod_program):
    with criterion(7, "worklist equals naive fixpoint on corpus plus 100 programs"):
        rng = random.Random(424242)
        programs = [orig_program, mod_program]
        programs += [parse(random_program(rng)) for _ in range(100)]
        discrepancies = 0
        for program in programs:
            graph = build_dependency_graph(program, resolve_references(program))
            for cycle in enumerate_cycles(graph)[:40]:
                if initial_tasks(program, cycle) != initial_tasks_naive(program, cycle):
                    discrepancies += 1
        assert discrepancies == 0


def test_criterion_8_structural_invariants(orig_program, mod_program):
    with criterion(8, "edge taxonomy, worklist bound, Bell counts, DFS=BFS verdicts"):
        rng = random.Random(77)
        programs = [orig_program, mod_program]
        programs += [parse(random_program(rng)) for _ in range(30)]
        for program in programs:
            graph = build_dependency_graph(program, resolve_references(program))
            for e in graph.edges:
                assert not (
                    isinstance(e.src, AbstractLocation)
                    and isinstance(e.dst, AbstractLocation)
                )
            pairs = sum(len(list(iter_stmts(b))) for _, b in program.bodies())
            for cycle in enumerate_cycles(graph)[:20]:
                _, trace = initial_tasks_with_trace(program, cycle)
                assert trace.processed <= pairs

        # context counts against the brute-force grouping oracle, <= 4 instances
        lines = ["class C {"]
        for i in range(4):
            lines.append(f"  Unit m{i}() {{ skip; }}")
        lines += ["}", "main { C c = new C(); }"]
        four = parse("\n".join(lines))
        for k in range(1, 5):
            cards = [TaskCardinality(AbstractTask("C", f"m{i}"), 1, 1) for i in range(k)]
            expected = brute_force_grouping_count([f"m{i}" for i in range(k)])
            assert len(generate_contexts(four, cards)) == expected

        for program in (orig_program, mod_program):
            t_ini = initial_tasks(program, fixture_cycle(program))
            for ctx in generate_contexts(program, t_ini):
                dfs = explore(program, ctx, strategy="dfs")
                bfs = explore(program, ctx, strategy="bfs")
                assert dfs.verdict == bfs.verdict
                assert dfs.states_explored == bfs.states_explored
