"""Concrete cooperative semantics plus exhaustive interleaving exploration.

Locations run at most one non-suspended task at a time.  ``await`` on an
unresolved future suspends the task and frees its location for other queued
tasks; ``get`` freezes the whole location until the future resolves (the
resumption is atomic with the resolving step, since nothing else may run
there meanwhile).  One transition executes one statement, and only the
scheduling choice of which location starts, resumes or steps a task
branches the search.

States are memoized under a canonical hash that relabels location, task and
future identities, so symmetric interleavings collapse.  A deadlock is
global quiescence with unfinished work; with ``partial=True`` states whose
get-blocked locations form a waits-for cycle are reported as well, even if
unrelated tasks can still run.
"""

from __future__ import annotations

import itertools
from collections import deque
from dataclasses import dataclass, field
from enum import Enum
from typing import Optional

from .absdom import MAIN_TASK, AbstractTask
from .contexts import InitialContext, class_abbreviations
from .errors import ExploreError
from .syntax.ast import (
    AsyncCall, AwaitFut, Binary, BoolLit, Expr, FieldAssign, FieldRef,
    GetFut, If, IntLit, LocalAssign, MethodDecl, NewLocation, Program,
    ProgramPoint, Return, Skip, Stmt, ThisRef, Unary, UnitLit, VarRef, While,
)


class Unit:
    """The unit value."""

    _instance: Optional["Unit"] = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "unit"


UNIT = Unit()


@dataclass(frozen=True)
class LocRef:
    name: str


@dataclass(frozen=True)
class FutRef:
    task_id: int


class TaskStatus(str, Enum):
    PENDING = "pending"
    RUNNING = "running"
    SUSPENDED = "suspended"  # awaiting, location released
    BLOCKED = "blocked"  # inside get, location frozen
    DONE = "done"


class TransitionKind(str, Enum):
    START = "start"
    RESUME = "resume"
    STEP = "step"


_KIND_RANK = {TransitionKind.START: 0, TransitionKind.RESUME: 1, TransitionKind.STEP: 2}


@dataclass(frozen=True)
class Transition:
    kind: TransitionKind
    location: str
    task_id: int

    def sort_key(self) -> tuple:
        return (self.location, _KIND_RANK[self.kind], self.task_id)


@dataclass(frozen=True)
class TraceStep:
    transition: Transition
    task: AbstractTask
    pp: ProgramPoint

    def render(self) -> str:
        return (
            f"{self.transition.location} / {self.task.render()} / "
            f"{self.pp.render()} / {self.transition.kind.value}"
        )


@dataclass(frozen=True)
class Trace:
    steps: tuple[TraceStep, ...]
    kind: str = "global"  # 'global' | 'partial'


class Verdict(str, Enum):
    DEADLOCK_FOUND = "deadlock-found"
    NO_DEADLOCK = "no-deadlock"
    BOUND_HIT = "bound-hit"


@dataclass
class ExplorationReport:
    verdict: Verdict
    states_explored: int
    traces: list[Trace] = field(default_factory=list)
    bound_hit: bool = False


# ---------------------------------------------------------------------------
# Runtime state
# ---------------------------------------------------------------------------


@dataclass
class _Frame:
    """One level of the structured program counter."""

    block: tuple[Stmt, ...]
    key: tuple  # ('body',) | ('then'|'else'|'while', container pp id)
    idx: int

    def clone(self) -> "_Frame":
        return _Frame(self.block, self.key, self.idx)


@dataclass
class RtTask:
    task_id: int
    task: AbstractTask
    location: str
    status: TaskStatus
    args: tuple  # values bound to params at spawn time
    locals: dict
    frames: list[_Frame]
    awaiting: Optional[int] = None  # producer task id while suspended/blocked
    fut_resolved: bool = False
    fut_value: object = None

    def clone(self) -> "RtTask":
        return RtTask(
            self.task_id, self.task, self.location, self.status, self.args,
            dict(self.locals), [f.clone() for f in self.frames],
            self.awaiting, self.fut_resolved, self.fut_value,
        )


@dataclass
class RtLocation:
    name: str
    class_name: str
    fields: dict
    active: Optional[int] = None  # running or blocked task id
    blocked_on: Optional[int] = None  # producer task id of the get future
    resident: list[int] = field(default_factory=list)  # all tasks hosted here

    def clone(self) -> "RtLocation":
        return RtLocation(
            self.name, self.class_name, dict(self.fields), self.active,
            self.blocked_on, list(self.resident),
        )


@dataclass
class State:
    program: Program
    locations: dict[str, RtLocation]
    tasks: dict[int, RtTask]
    next_task_id: int
    loc_counters: dict[str, int]  # per-class instance numbering

    def clone(self) -> "State":
        return State(
            self.program,
            {k: v.clone() for k, v in self.locations.items()},
            {k: v.clone() for k, v in self.tasks.items()},
            self.next_task_id,
            dict(self.loc_counters),
        )


# ---------------------------------------------------------------------------
# Initialization
# ---------------------------------------------------------------------------


def _declared_fields(program: Program, class_name: str) -> dict:
    cls = program.class_named(class_name)
    fields: dict = {}
    for f in cls.fields:
        if f.init is None:
            fields[f.name] = _default_for(program, f.type)
        else:
            fields[f.name] = _eval_literal(f.init)
    return fields


def _default_for(program: Program, type_name: str):
    if type_name == "Int":
        return 0
    if type_name == "Bool":
        return False
    if type_name == "Unit":
        return UNIT
    return None  # unwired reference


def _eval_literal(e: Expr):
    if isinstance(e, IntLit):
        return e.value
    if isinstance(e, BoolLit):
        return e.value
    if isinstance(e, UnitLit):
        return UNIT
    raise ExploreError(f"not a literal: {e!r}")


def init_state(program: Program, context: InitialContext) -> State:
    """Materialize a generated context: wired locations with pending tasks."""
    state = State(program, {}, {}, next_task_id=1, loc_counters={})
    for loc in context.locations:
        fields = _declared_fields(program, loc.class_name)
        for fname, target in loc.fields:
            fields[fname] = LocRef(target)
        state.locations[loc.name] = RtLocation(loc.name, loc.class_name, fields)
        digits = "".join(ch for ch in loc.name if ch.isdigit())
        state.loc_counters[loc.class_name] = max(
            state.loc_counters.get(loc.class_name, 0), int(digits or 0)
        )
    for loc in context.locations:
        cls = program.class_named(loc.class_name)
        rt_loc = state.locations[loc.name]
        for ti in loc.tasks:
            method = cls.method_named(ti.task.method_name)
            values = []
            for (pname, ptype), (aname, aval) in zip(method.params, ti.args):
                if aname != pname:
                    raise ExploreError(f"argument {aname!r} does not match parameter {pname!r}")
                values.append(LocRef(aval) if isinstance(aval, str) else
                              UNIT if aval is None else aval)
            task_id = state.next_task_id
            state.next_task_id += 1
            state.tasks[task_id] = RtTask(
                task_id, ti.task, loc.name, TaskStatus.PENDING, tuple(values), {}, []
            )
            rt_loc.resident.append(task_id)
    return state


def init_state_from_main(program: Program) -> State:
    """A single main location actively running the main block."""
    state = State(program, {}, {}, next_task_id=1, loc_counters={})
    state.locations["main"] = RtLocation("main", "", {})
    task_id = state.next_task_id
    state.next_task_id += 1
    frames = [_Frame(program.main, ("body",), 0)] if program.main else []
    task = RtTask(task_id, MAIN_TASK, "main", TaskStatus.RUNNING, (), {}, frames)
    state.tasks[task_id] = task
    state.locations["main"].resident.append(task_id)
    state.locations["main"].active = task_id
    if not program.main:
        task.status = TaskStatus.DONE
        task.fut_resolved = True
        task.fut_value = UNIT
        state.locations["main"].active = None
    return state


# ---------------------------------------------------------------------------
# Expression evaluation
# ---------------------------------------------------------------------------


def _eval(state: State, task: RtTask, e: Expr):
    if isinstance(e, (IntLit, BoolLit, UnitLit)):
        return _eval_literal(e)
    if isinstance(e, VarRef):
        if e.name not in task.locals:
            raise ExploreError(f"local {e.name!r} used before assignment")
        return task.locals[e.name]
    if isinstance(e, FieldRef):
        return state.locations[task.location].fields[e.name]
    if isinstance(e, ThisRef):
        return LocRef(task.location)
    if isinstance(e, Unary):
        v = _eval(state, task, e.operand)
        if not isinstance(v, bool):
            raise ExploreError("'!' needs a Bool operand")
        return not v
    if isinstance(e, Binary):
        lhs = _eval(state, task, e.left)
        rhs = _eval(state, task, e.right)
        if e.op == "&&":
            if not (isinstance(lhs, bool) and isinstance(rhs, bool)):
                raise ExploreError("'&&' needs Bool operands")
            return lhs and rhs
        if e.op == "==":
            return lhs == rhs
        if e.op in ("+", "-", "<"):
            if isinstance(lhs, bool) or isinstance(rhs, bool) or \
               not (isinstance(lhs, int) and isinstance(rhs, int)):
                raise ExploreError(f"{e.op!r} needs Int operands")
            return lhs + rhs if e.op == "+" else lhs - rhs if e.op == "-" else lhs < rhs
    raise ExploreError(f"cannot evaluate {e!r}")


def _eval_bool(state: State, task: RtTask, e: Expr) -> bool:
    v = _eval(state, task, e)
    if not isinstance(v, bool):
        raise ExploreError("condition is not a Bool")
    return v


# ---------------------------------------------------------------------------
# Small-step execution
# ---------------------------------------------------------------------------


def _current_stmt(task: RtTask) -> Stmt:
    top = task.frames[-1]
    return top.block[top.idx]


def _normalize(state: State, task: RtTask) -> None:
    """Pop exhausted blocks; finish the task when the body runs out."""
    while task.frames:
        top = task.frames[-1]
        if top.idx < len(top.block):
            return
        task.frames.pop()
        if not task.frames:
            break
        parent = task.frames[-1]
        container = parent.block[parent.idx]
        if isinstance(container, If):
            parent.idx += 1
        # a While container re-executes and re-evaluates its condition
    if not task.frames:
        _finish_task(state, task)


def _finish_task(state: State, task: RtTask, value=UNIT) -> None:
    if not task.fut_resolved:
        task.fut_resolved = True
        task.fut_value = value
    task.status = TaskStatus.DONE
    loc = state.locations[task.location]
    if loc.active == task.task_id:
        loc.active = None
    _unblock_waiters(state, task.task_id)


def _unblock_waiters(state: State, producer_id: int) -> None:
    """Complete gets frozen on the resolved future; atomic with resolution."""
    for loc in state.locations.values():
        if loc.blocked_on == producer_id:
            blocked = state.tasks[loc.active]
            loc.blocked_on = None
            blocked.status = TaskStatus.RUNNING
            blocked.awaiting = None
            blocked.frames[-1].idx += 1
            _normalize(state, blocked)


def _spawn(state: State, caller: RtTask, stmt: AsyncCall) -> FutRef:
    target = _eval(state, caller, stmt.target)
    if not isinstance(target, LocRef):
        raise ExploreError(f"async call target at {stmt.pp.render()} is not a location")
    loc = state.locations[target.name]
    cls = state.program.class_named(loc.class_name)
    method = cls.method_named(stmt.method) if cls else None
    if method is None:
        raise ExploreError(f"{loc.class_name or 'main'} has no method {stmt.method!r}")
    if len(stmt.args) != len(method.params):
        raise ExploreError(f"wrong arity calling {loc.class_name}.{stmt.method}")
    values = tuple(_eval(state, caller, a) for a in stmt.args)
    task_id = state.next_task_id
    state.next_task_id += 1
    state.tasks[task_id] = RtTask(
        task_id, AbstractTask(loc.class_name, stmt.method), target.name,
        TaskStatus.PENDING, values, {}, [],
    )
    loc.resident.append(task_id)
    return FutRef(task_id)


def _new_location(state: State, task: RtTask, stmt: NewLocation) -> LocRef:
    cls = state.program.class_named(stmt.class_name)
    abbrev = class_abbreviations(state.program)[stmt.class_name]
    state.loc_counters[stmt.class_name] = state.loc_counters.get(stmt.class_name, 0) + 1
    name = f"{abbrev}{state.loc_counters[stmt.class_name]}"
    while name in state.locations:  # context names may already use the abbrev
        state.loc_counters[stmt.class_name] += 1
        name = f"{abbrev}{state.loc_counters[stmt.class_name]}"
    fields = _declared_fields(state.program, stmt.class_name)
    for (fname, _), arg in zip(cls.ctor_params, stmt.args):
        fields[fname] = _eval(state, task, arg)
    state.locations[name] = RtLocation(name, stmt.class_name, fields)
    return LocRef(name)


def _execute(state: State, task: RtTask) -> ProgramPoint:
    """Run the task's current statement; returns its program point."""
    stmt = _current_stmt(task)
    top = task.frames[-1]
    if isinstance(stmt, LocalAssign):
        task.locals[stmt.var] = _eval(state, task, stmt.expr)
        top.idx += 1
    elif isinstance(stmt, FieldAssign):
        state.locations[task.location].fields[stmt.field] = _eval(state, task, stmt.expr)
        top.idx += 1
    elif isinstance(stmt, NewLocation):
        task.locals[stmt.var] = _new_location(state, task, stmt)
        top.idx += 1
    elif isinstance(stmt, AsyncCall):
        task.locals[stmt.fut_var] = _spawn(state, task, stmt)
        top.idx += 1
    elif isinstance(stmt, AwaitFut):
        fut = task.locals[stmt.fut_var]
        producer = state.tasks[fut.task_id]
        if producer.fut_resolved:
            top.idx += 1
        else:
            task.status = TaskStatus.SUSPENDED
            task.awaiting = fut.task_id
            state.locations[task.location].active = None
            return stmt.pp  # pc stays at the await until resumption
    elif isinstance(stmt, GetFut):
        fut = task.locals[stmt.fut_var]
        producer = state.tasks[fut.task_id]
        if producer.fut_resolved:
            top.idx += 1
        else:
            task.status = TaskStatus.BLOCKED
            task.awaiting = fut.task_id
            state.locations[task.location].blocked_on = fut.task_id
            return stmt.pp  # location frozen; pc stays at the get
    elif isinstance(stmt, If):
        branch = stmt.then_block if _eval_bool(state, task, stmt.cond) else stmt.else_block
        tag = "then" if branch is stmt.then_block else "else"
        task.frames.append(_Frame(branch, (tag, stmt.pp.id), 0))
    elif isinstance(stmt, While):
        if _eval_bool(state, task, stmt.cond):
            task.frames.append(_Frame(stmt.block, ("while", stmt.pp.id), 0))
        else:
            top.idx += 1
    elif isinstance(stmt, Return):
        value = _eval(state, task, stmt.expr)
        task.frames.clear()
        _finish_task(state, task, value)
        return stmt.pp
    elif isinstance(stmt, Skip):
        top.idx += 1
    else:
        raise ExploreError(f"cannot execute {stmt!r}")
    _normalize(state, task)
    return stmt.pp


# ---------------------------------------------------------------------------
# Transitions
# ---------------------------------------------------------------------------


def enabled_transitions(state: State) -> list[Transition]:
    out: list[Transition] = []
    for name in sorted(state.locations):
        loc = state.locations[name]
        if loc.blocked_on is not None:
            continue  # frozen by a get; unblocking is atomic with resolution
        if loc.active is not None:
            out.append(Transition(TransitionKind.STEP, name, loc.active))
            continue
        for task_id in loc.resident:
            task = state.tasks[task_id]
            if task.status == TaskStatus.PENDING:
                out.append(Transition(TransitionKind.START, name, task_id))
            elif (
                task.status == TaskStatus.SUSPENDED
                and state.tasks[task.awaiting].fut_resolved
            ):
                out.append(Transition(TransitionKind.RESUME, name, task_id))
    out.sort(key=Transition.sort_key)
    return out


def apply_transition(state: State, transition: Transition) -> tuple[State, TraceStep]:
    """Pure step: returns the successor state and the trace entry."""
    nxt = state.clone()
    task = nxt.tasks[transition.task_id]
    loc = nxt.locations[transition.location]
    if transition.kind == TransitionKind.START:
        if loc.active is not None or task.status != TaskStatus.PENDING:
            raise ExploreError("start transition not enabled")
        body = _body_of(nxt.program, task.task)
        method = _method_of(nxt.program, task.task)
        task.locals = {p: v for (p, _), v in zip(method.params, task.args)} if method else {}
        task.frames = [_Frame(body, ("body",), 0)]
        task.status = TaskStatus.RUNNING
        loc.active = task.task_id
        pp = body[0].pp
        _normalize(nxt, task)
        return nxt, TraceStep(transition, task.task, pp)
    if transition.kind == TransitionKind.RESUME:
        if loc.active is not None or task.status != TaskStatus.SUSPENDED:
            raise ExploreError("resume transition not enabled")
        if not nxt.tasks[task.awaiting].fut_resolved:
            raise ExploreError("resume on unresolved future")
        pp = _current_stmt(task).pp
        task.status = TaskStatus.RUNNING
        task.awaiting = None
        loc.active = task.task_id
        task.frames[-1].idx += 1
        _normalize(nxt, task)
        return nxt, TraceStep(transition, task.task, pp)
    if task.status != TaskStatus.RUNNING or loc.active != task.task_id:
        raise ExploreError("step transition not enabled")
    pp = _execute(nxt, task)
    return nxt, TraceStep(transition, task.task, pp)


def _method_of(program: Program, task: AbstractTask) -> Optional[MethodDecl]:
    if task == MAIN_TASK:
        return None
    return program.class_named(task.class_name).method_named(task.method_name)


def _body_of(program: Program, task: AbstractTask) -> tuple[Stmt, ...]:
    if task == MAIN_TASK:
        return program.main
    return _method_of(program, task).body


# ---------------------------------------------------------------------------
# Deadlock predicates
# ---------------------------------------------------------------------------


def is_deadlock(state: State) -> bool:
    """Global quiescence with unfinished work."""
    if enabled_transitions(state):
        return False
    return any(t.status != TaskStatus.DONE for t in state.tasks.values())


def blocked_waits_for_cycle(state: State) -> bool:
    """True when get-blocked locations wait on each other in a cycle."""
    edges: dict[str, str] = {}
    for loc in state.locations.values():
        if loc.blocked_on is not None:
            edges[loc.name] = state.tasks[loc.blocked_on].location
    for start in edges:
        seen = set()
        node = start
        while node in edges and node not in seen:
            seen.add(node)
            node = edges[node]
        if node in seen and node in edges:
            return True
    return False


# ---------------------------------------------------------------------------
# Canonical state hashing
# ---------------------------------------------------------------------------


def _shallow_value(state: State, v) -> tuple:
    if isinstance(v, LocRef):
        return ("loc", state.locations[v.name].class_name)
    if isinstance(v, FutRef):
        return ("fut", state.tasks[v.task_id].task.render())
    if isinstance(v, Unit):
        return ("unit",)
    return ("prim", type(v).__name__, v)  # bool/int distinct despite True == 1


def _pc_key(task: RtTask) -> tuple:
    return tuple((f.key, f.idx) for f in task.frames)


_MAX_TIE_CANDIDATES = 20_000


def _intern(colors: dict) -> dict:
    distinct = sorted(set(colors.values()), key=repr)
    index = {c: i for i, c in enumerate(distinct)}
    return {k: (index[c],) for k, c in colors.items()}


def _refined_colors(
    state: State, locals_sorted: dict[int, list]
) -> tuple[dict[str, tuple], dict[int, tuple]]:
    """Isomorphism-invariant colors via a few rounds of mutual refinement."""
    loc_base: dict[str, tuple] = {}
    for name, loc in state.locations.items():
        loc_base[name] = (
            loc.class_name,
            loc.blocked_on is not None,
            tuple(sorted((k, _shallow_value(state, v)) for k, v in loc.fields.items())),
        )
    task_base: dict[int, tuple] = {}
    ref_locals: dict[int, list] = {}
    for tid, t in state.tasks.items():
        task_base[tid] = (
            t.task.class_name,
            t.task.method_name,
            t.status.value,
            _pc_key(t),
            tuple((k, _shallow_value(state, v)) for k, v in locals_sorted[tid]),
            t.fut_resolved,
            _shallow_value(state, t.fut_value) if t.fut_resolved else None,
        )
        ref_locals[tid] = [
            (k, v) for k, v in locals_sorted[tid] if isinstance(v, (LocRef, FutRef))
        ]
    loc_color = _intern(loc_base)
    task_color = _intern(task_base)

    for _ in range(2):
        new_task: dict[int, tuple] = {}
        for tid, t in state.tasks.items():
            refs = tuple(
                (
                    k,
                    ("loc",) + loc_color[v.name]
                    if isinstance(v, LocRef)
                    else ("fut",) + task_color[v.task_id],
                )
                for k, v in ref_locals[tid]
            )
            value_ref = None
            if t.fut_resolved and isinstance(t.fut_value, LocRef):
                value_ref = loc_color[t.fut_value.name]
            new_task[tid] = (
                task_color[tid],
                loc_color[t.location],
                task_color[t.awaiting] if t.awaiting is not None else None,
                refs,
                value_ref,
            )
        new_loc: dict[str, tuple] = {}
        for name, loc in state.locations.items():
            new_loc[name] = (
                loc_color[name],
                tuple(sorted((new_task[t] for t in loc.resident), key=repr)),
            )
        task_color = _intern(new_task)
        loc_color = _intern(new_loc)
    return loc_color, task_color


def _serialize(state: State, loc_index: dict[str, int], task_index: dict[int, int],
               ordered_locs: list[RtLocation], ordered_tasks: list[RtTask],
               locals_sorted: dict[int, list]) -> tuple:
    def deep_value(v) -> tuple:
        if isinstance(v, LocRef):
            return ("loc", loc_index[v.name])
        if isinstance(v, FutRef):
            return ("fut", task_index[v.task_id])
        if isinstance(v, Unit):
            return ("unit",)
        return ("prim", type(v).__name__, v)

    loc_entries = tuple(
        (
            loc.class_name,
            tuple(sorted((k, deep_value(v)) for k, v in loc.fields.items())),
            task_index[loc.active] if loc.active is not None else None,
            task_index[loc.blocked_on] if loc.blocked_on is not None else None,
        )
        for loc in ordered_locs
    )
    task_entries = tuple(
        (
            t.task.class_name,
            t.task.method_name,
            loc_index[t.location],
            t.status.value,
            _pc_key(t),
            tuple((k, deep_value(v)) for k, v in locals_sorted[t.task_id]),
            task_index[t.awaiting] if t.awaiting is not None else None,
            t.fut_resolved,
            deep_value(t.fut_value) if t.fut_resolved else None,
        )
        for t in ordered_tasks
    )
    return (loc_entries, task_entries)


def _factorial_product(groups) -> int:
    total = 1
    for g in groups:
        for i in range(2, len(g) + 1):
            total *= i
    return total


def canonical_key(state: State) -> tuple:
    """Injective serialization, identical across symmetric renamings.

    Locations and tasks are ordered by refined invariant colors; elements the
    refinement cannot separate are permuted exhaustively and the least
    serialization wins, so isomorphic states hash equal.  Queue order is
    erased entirely (queues behave as multisets).
    """
    cls_order = {c.name: i for i, c in enumerate(state.program.classes)}
    cls_order[""] = -1
    locals_sorted = {tid: sorted(t.locals.items()) for tid, t in state.tasks.items()}
    loc_color, task_color = _refined_colors(state, locals_sorted)

    def loc_sig(loc: RtLocation) -> tuple:
        return (cls_order[loc.class_name], loc_color[loc.name])

    loc_sorted = sorted(state.locations.values(), key=lambda l: (loc_sig(l), l.name))
    loc_groups = [
        list(members) for _, members in itertools.groupby(loc_sorted, key=loc_sig)
    ]

    def task_groups_for(ordered_locs: list[RtLocation]) -> list[list[RtTask]]:
        groups: list[list[RtTask]] = []
        for loc in ordered_locs:
            tasks = sorted(
                (state.tasks[t] for t in loc.resident),
                key=lambda t: (task_color[t.task_id], t.task_id),
            )
            groups.extend(
                list(members)
                for _, members in itertools.groupby(
                    tasks, key=lambda t: task_color[t.task_id]
                )
            )
        return groups

    # tie groups are almost always singletons; cap the degenerate blow-up
    sample_task_groups = task_groups_for(loc_sorted)
    exhaustive = (
        _factorial_product(loc_groups) * _factorial_product(sample_task_groups)
        <= _MAX_TIE_CANDIDATES
    )

    best: Optional[tuple] = None
    for loc_perm in itertools.product(*(itertools.permutations(g) for g in loc_groups)):
        ordered_locs = [loc for group in loc_perm for loc in group]
        loc_index = {loc.name: i for i, loc in enumerate(ordered_locs)}
        t_groups = task_groups_for(ordered_locs)
        task_perms = (
            itertools.product(*(itertools.permutations(g) for g in t_groups))
            if exhaustive
            else iter([tuple(tuple(g) for g in t_groups)])
        )
        for task_perm in task_perms:
            ordered_tasks = [t for group in task_perm for t in group]
            task_index = {t.task_id: i for i, t in enumerate(ordered_tasks)}
            key = _serialize(
                state, loc_index, task_index, ordered_locs, ordered_tasks, locals_sorted
            )
            if best is None or key < best:
                best = key
        if not exhaustive:
            break
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Exploration
# ---------------------------------------------------------------------------


def explore(
    program: Program,
    context: Optional[InitialContext] = None,
    *,
    from_main: bool = False,
    max_states: int = 10_000,
    max_depth: int = 100_000,
    partial: bool = False,
    strategy: str = "dfs",
) -> ExplorationReport:
    """Enumerate all interleavings with visited-state memoization.

    The verdict is exhaustive (``NO_DEADLOCK``) only when no bound was hit;
    any deadlock found yields ``DEADLOCK_FOUND`` with one witness trace per
    distinct deadlocked state.
    """
    if max_states <= 0 or max_depth <= 0:
        raise ExploreError("exploration limits must be positive")
    if strategy not in ("dfs", "bfs"):
        raise ExploreError(f"unknown strategy {strategy!r}")
    init = init_state_from_main(program) if from_main else init_state(program, context)

    init_key = canonical_key(init)
    frontier: deque = deque([(init, init_key, ())])
    visited: set = {init_key}
    deadlocks: dict = {}
    bound_hit = False

    while frontier:
        state, key, steps = frontier.pop() if strategy == "dfs" else frontier.popleft()
        transitions = enabled_transitions(state)
        if not transitions:
            if is_deadlock(state) and key not in deadlocks:
                deadlocks[key] = Trace(steps, "global")
            continue
        if partial and blocked_waits_for_cycle(state) and key not in deadlocks:
            deadlocks[key] = Trace(steps, "partial")
        if len(steps) >= max_depth:
            bound_hit = True
            continue
        for transition in transitions:
            nxt, step = apply_transition(state, transition)
            nxt_key = canonical_key(nxt)
            if nxt_key in visited:
                continue
            if len(visited) >= max_states:
                bound_hit = True
                continue
            visited.add(nxt_key)
            frontier.append((nxt, nxt_key, steps + (step,)))

    traces = [deadlocks[k] for k in sorted(deadlocks, key=repr)]
    if deadlocks:
        verdict = Verdict.DEADLOCK_FOUND
    elif bound_hit:
        verdict = Verdict.BOUND_HIT
    else:
        verdict = Verdict.NO_DEADLOCK
    return ExplorationReport(verdict, len(visited), traces, bound_hit)


def replay(
    program: Program,
    trace: Trace,
    context: Optional[InitialContext] = None,
    *,
    from_main: bool = False,
) -> State:
    """Re-run a recorded schedule from the initial state."""
    state = init_state_from_main(program) if from_main else init_state(program, context)
    for step in trace.steps:
        if step.transition not in enabled_transitions(state):
            raise ExploreError(f"trace step not enabled: {step.render()}")
        state, _ = apply_transition(state, step.transition)
    return state
