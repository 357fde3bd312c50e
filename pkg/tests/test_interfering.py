import random
from collections import Counter

import pytest

from dlctx import (
    AbstractTask, AnalysisError, TaskCardinality, initial_tasks,
    initial_tasks_naive, initial_tasks_with_trace, parse, resolve_references,
)
from dlctx.depgraph import DeadlockCycle, build_dependency_graph, enumerate_cycles
from dlctx.syntax import iter_stmts

from helpers import AWAIT_ONLY_CALLER, MUTUAL_GET, random_program

REGISTER = AbstractTask("DB", "register")
WORK = AbstractTask("Worker", "work")
MAKES = AbstractTask("DB", "makesConnection")


def single_cycle(program):
    graph = build_dependency_graph(program, resolve_references(program))
    cycles = enumerate_cycles(graph)
    assert len(cycles) == 1
    return cycles[0]


def all_cycles(program):
    graph = build_dependency_graph(program, resolve_references(program))
    return enumerate_cycles(graph)


def tasks_of(cards) -> set[AbstractTask]:
    return {tc.task for tc in cards}


def test_fixture_t_ini(mod_program):
    result = initial_tasks(mod_program, single_cycle(mod_program))
    assert result == {
        TaskCardinality(REGISTER, 1, 1),
        TaskCardinality(WORK, 1, 1),
        TaskCardinality(MAKES, 1, 1),
    }


def test_orig_variant_same_t_ini(orig_program):
    # value-insensitive: pp:connected1 writes `connected` in both variants
    result = initial_tasks(orig_program, single_cycle(orig_program))
    assert tasks_of(result) == {REGISTER, WORK, MAKES}


def test_worklist_init_multisets(mod_program):
    _, trace = initial_tasks_with_trace(mod_program, single_cycle(mod_program))
    events = Counter((e.task.render(), e.pp.label) for e in trace.init_events)
    answers = Counter((e.task.render(), e.pp.label) for e in trace.init_answers)
    assert events == Counter(
        {
            ("Worker.work", "work"): 1,
            ("Worker.work", "fgetdata"): 1,
            ("DB.register", "register"): 1,
            ("DB.register", "fping"): 1,
        }
    )
    assert answers == Counter(
        {("DB.register", "register"): 1, ("Worker.work", "work"): 1}
    )


def test_worklist_modifier_step(mod_program):
    _, trace = initial_tasks_with_trace(mod_program, single_cycle(mod_program))
    adding = [s for s in trace.steps if s.added]
    assert len(adding) == 1
    (step,) = adding
    assert step.event.task == REGISTER
    assert step.fields == ("connected",)
    assert {(e.task.render(), e.pp.label) for e in step.added} == {
        ("DB.makesConnection", "makestrue"),
        ("DB.register", "connected1"),
        ("DB.register", "connected"),
    }


def test_mutual_get_exactly_the_two_get_tasks():
    program = parse(MUTUAL_GET)
    result = initial_tasks(program, single_cycle(program))
    assert tasks_of(result) == {AbstractTask("A", "ma"), AbstractTask("B", "mb")}


def test_await_only_caller_excluded_regression():
    # caller's cycle instructions are await-preceded but only reach fields
    # without modifiers, so neither route ever answers caller itself
    program = parse(AWAIT_ONLY_CALLER)
    cycles = all_cycles(program)
    caller_cycles = [
        c for c in cycles
        if AbstractTask("A", "caller") in {e.in_task for e in c.edges}
    ]
    assert caller_cycles
    for cycle in caller_cycles:
        worklist = initial_tasks(program, cycle)
        naive = initial_tasks_naive(program, cycle)
        assert worklist == naive
        assert AbstractTask("A", "caller") not in tasks_of(worklist)
        assert AbstractTask("B", "pong") in tasks_of(worklist)


def test_cardinalities_default_one(mod_program):
    for tc in initial_tasks(mod_program, single_cycle(mod_program)):
        assert tc.min == 1
        assert tc.max == 1


def test_cardinality_bounds_validated():
    with pytest.raises(AnalysisError):
        TaskCardinality(REGISTER, 0, 1)
    with pytest.raises(AnalysisError):
        TaskCardinality(REGISTER, 2, 1)


def test_get_task_inclusion(mod_program):
    from dlctx.depgraph import EdgeKind

    cycle = single_cycle(mod_program)
    result = tasks_of(initial_tasks(mod_program, cycle))
    for e in cycle.edges:
        if e.kind == EdgeKind.LOC_TASK:
            assert e.in_task in result


def test_clause_one_exclusion(mod_program):
    # getData and ping sit in the cycle but have no get edge, modify nothing
    # and are not await-preceded, so they never enter the result
    result = tasks_of(initial_tasks(mod_program, single_cycle(mod_program)))
    assert AbstractTask("DB", "getData") not in result
    assert AbstractTask("Worker", "ping") not in result


def test_termination_bound(mod_program):
    _, trace = initial_tasks_with_trace(mod_program, single_cycle(mod_program))
    pairs = sum(len(list(iter_stmts(body))) for _, body in mod_program.bodies())
    assert trace.processed <= pairs


def test_cycle_from_wrong_program_rejected(mod_program):
    other = parse(MUTUAL_GET)
    cycle = single_cycle(other)
    with pytest.raises(AnalysisError, match="unknown task"):
        initial_tasks(mod_program, cycle)


def test_naive_equivalence_on_corpus(mod_program, orig_program):
    for program in (mod_program, orig_program):
        cycle = single_cycle(program)
        assert initial_tasks(program, cycle) == initial_tasks_naive(program, cycle)


def test_naive_equivalence_on_random_programs():
    # acceptance-critical property: the worklist and the fixpoint oracle
    # agree on every cycle of 100 generated programs
    rng = random.Random(424242)
    checked_cycles = 0
    programs_with_cycles = 0
    for _ in range(100):
        program = parse(random_program(rng))
        cycles = all_cycles(program)
        if cycles:
            programs_with_cycles += 1
        for cycle in cycles[:40]:
            worklist, trace = initial_tasks_with_trace(program, cycle)
            assert worklist == initial_tasks_naive(program, cycle)
            pairs = sum(len(list(iter_stmts(b))) for _, b in program.bodies())
            assert trace.processed <= pairs
            checked_cycles += 1
    assert programs_with_cycles >= 20
    assert checked_cycles >= 50
