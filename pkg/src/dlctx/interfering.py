"""Deadlock-interfering task inference for one abstract cycle.

Two independent routes compute the same set:

* :func:`initial_tasks`: the worklist: blocking-get edges seed both the
  pending events and the answers; await edges seed events only; processing an
  event whose instruction is await-preceded pulls in every not-yet-answered
  modifier of the fields accessed up to that instruction, as both a new event
  and a new answer.  Events and answers are sets with insertion-order
  iteration, so each instruction is handled at most once.
* :func:`initial_tasks_naive`: the same semantics written as recursive
  membership equations over (task, instruction) pairs, solved by Kleene
  iteration over the finite lattice.

A task enters the result only through a blocking get of the cycle or through
a field-modifying instruction; await-preceded instructions contribute their
modifiers, not their own task.  Every returned task gets cardinality (1, 1).
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .absdom import AbstractTask, ProgramFacts
from .depgraph import DeadlockCycle, EdgeKind
from .errors import AnalysisError
from .syntax.ast import FieldAssign, Program, ProgramPoint


@dataclass(frozen=True)
class Event:
    task: AbstractTask
    pp: ProgramPoint

    def render(self) -> str:
        return f"({self.task.render()},{self.pp.render()})"


@dataclass(frozen=True)
class TaskCardinality:
    task: AbstractTask
    min: int = 1
    max: int = 1

    def __post_init__(self):
        if not (1 <= self.min <= self.max):
            raise AnalysisError(f"cardinality bounds must satisfy 1 <= min <= max, got "
                                f"({self.min}, {self.max})")

    def render(self) -> str:
        return f"{self.task.render()} min={self.min} max={self.max}"


@dataclass
class WorklistStep:
    event: Event
    awaited: bool
    fields: tuple[str, ...] = ()
    added: tuple[Event, ...] = ()


@dataclass
class WorklistTrace:
    """Replayable record of one worklist run."""

    init_events: list[Event] = field(default_factory=list)
    init_answers: list[Event] = field(default_factory=list)
    steps: list[WorklistStep] = field(default_factory=list)
    answers: list[Event] = field(default_factory=list)
    result: list[TaskCardinality] = field(default_factory=list)

    @property
    def processed(self) -> int:
        return len(self.steps)


def _validate_cycle(facts: ProgramFacts, cycle: DeadlockCycle) -> None:
    known = set(facts.tasks())
    for e in cycle.edges:
        if e.in_task not in known:
            raise AnalysisError(f"cycle references unknown task {e.in_task.render()}")
        facts.stmt_at(e.in_task, e.pp)
        if e.call_pp is not None:
            facts.stmt_at(e.in_task, e.call_pp)


def _seed(cycle: DeadlockCycle) -> tuple[list[Event], list[Event]]:
    """Initial pending events and answers, mirroring the edge-by-edge init.

    Each processed edge pushes its pair of events in front of the earlier
    ones; get edges also push their sync point in front of the answers.
    """
    events: list[Event] = []
    answers: list[Event] = []
    for edge in cycle.edges:
        if edge.kind == EdgeKind.LOC_TASK:
            events = [Event(edge.in_task, edge.call_pp), Event(edge.in_task, edge.pp)] + events
            answers = [Event(edge.in_task, edge.pp)] + answers
        elif edge.kind == EdgeKind.TASK_TASK:
            events = [Event(edge.in_task, edge.call_pp), Event(edge.in_task, edge.pp)] + events
    # set semantics with insertion order preserved
    events = list(dict.fromkeys(events))
    answers = list(dict.fromkeys(answers))
    return events, answers


def _modifiers(facts: ProgramFacts, ev: Event) -> list[Event]:
    """Modifier events of the fields accessed up to *ev*, in program order."""
    out: list[Event] = []
    for f in sorted(facts.accessed_fields(ev.task, ev.pp)):
        for task, pp in facts.modifiers_in_class(ev.task.class_name, f):
            cand = Event(task, pp)
            if cand not in out:
                out.append(cand)
    return out


def initial_tasks_with_trace(
    program: Program, cycle: DeadlockCycle
) -> tuple[frozenset[TaskCardinality], WorklistTrace]:
    facts = ProgramFacts(program)
    _validate_cycle(facts, cycle)
    trace = WorklistTrace()
    events, answers = _seed(cycle)
    trace.init_events = list(events)
    trace.init_answers = list(answers)

    answered = set(answers)
    enqueued = set(events)
    pending = list(events)
    while pending:
        ev = pending.pop(0)
        if not facts.has_await_before(ev.task, ev.pp):
            trace.steps.append(WorklistStep(ev, awaited=False))
            continue
        fields_here = facts.accessed_fields(ev.task, ev.pp)
        new = [m for m in _modifiers(facts, ev) if m not in answered]
        for m in new:
            answered.add(m)
            answers.append(m)
        fresh = [m for m in new if m not in enqueued]
        enqueued.update(fresh)
        pending = fresh + pending
        trace.steps.append(
            WorklistStep(ev, awaited=True, fields=tuple(sorted(fields_here)), added=tuple(new))
        )

    seen_tasks: dict[AbstractTask, None] = {}
    for ev in answers:
        seen_tasks.setdefault(ev.task)
    result = [TaskCardinality(t, 1, 1) for t in seen_tasks]
    trace.answers = answers
    trace.result = result
    return frozenset(result), trace


def initial_tasks(program: Program, cycle: DeadlockCycle) -> frozenset[TaskCardinality]:
    """Deadlock-interfering tasks of *cycle*, cardinality (1, 1) each."""
    return initial_tasks_with_trace(program, cycle)[0]


def initial_tasks_naive(program: Program, cycle: DeadlockCycle) -> frozenset[TaskCardinality]:
    """Same contract as :func:`initial_tasks`, computed by Kleene iteration.

    ``contrib(t, i)`` is the least map satisfying, for every seeded or
    reachable pair:

    * base: ``{t}`` when ``i`` is the get of a location-task edge of the
      cycle or a field-modifying instruction, else the empty set;
    * step: when an await may precede ``i``, additionally the union of
      ``contrib`` over every modifier of every field accessed up to ``i``.
    """
    facts = ProgramFacts(program)
    _validate_cycle(facts, cycle)

    get_points = {
        Event(e.in_task, e.pp) for e in cycle.edges if e.kind == EdgeKind.LOC_TASK
    }
    seeds, _ = _seed(cycle)

    def base(ev: Event) -> frozenset[AbstractTask]:
        if ev in get_points:
            return frozenset({ev.task})
        if isinstance(facts.stmt_at(ev.task, ev.pp), FieldAssign):
            return frozenset({ev.task})
        return frozenset()

    # the reachable pair universe: seeds plus modifiers closed transitively
    universe: list[Event] = list(seeds)
    frontier = list(seeds)
    while frontier:
        ev = frontier.pop()
        if not facts.has_await_before(ev.task, ev.pp):
            continue
        for m in _modifiers(facts, ev):
            if m not in universe:
                universe.append(m)
                frontier.append(m)

    contrib: dict[Event, frozenset[AbstractTask]] = {ev: frozenset() for ev in universe}
    changed = True
    while changed:
        changed = False
        for ev in universe:
            new = base(ev)
            if facts.has_await_before(ev.task, ev.pp):
                for m in _modifiers(facts, ev):
                    new |= contrib.get(m, frozenset())
            if new != contrib[ev]:
                contrib[ev] = new
                changed = True

    tasks: set[AbstractTask] = set()
    for ev in seeds:
        tasks |= contrib[ev]
    return frozenset(TaskCardinality(t, 1, 1) for t in tasks)
