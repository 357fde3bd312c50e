"""Abstraction domain and per-instruction static facts.

Locations are abstracted by their creation program point, tasks by the method
they execute. On top of that this module computes, per task:

* ``accessed_fields(task, i)``: fields read or written on some path from the
  task entry up to and including instruction ``i`` (forward may-analysis);
* ``field_modifiers(f)``: the instructions writing field ``f``;
* ``has_await_before(task, i)``: whether some path reaches ``i`` with an
  await strictly before it;
* ``resolve_references``: flow-insensitive propagation of creation sites
  through assignments, constructor arguments and call arguments.

Field reads include fields used as async-call targets and in branch
conditions, and the analyses are may-approximations over all CFG paths.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional

from .errors import AnalysisError
from .syntax.ast import (
    AsyncCall, AwaitFut, ClassDecl, Expr, FieldAssign, FieldRef, GetFut, If,
    LocalAssign, MethodDecl, NewLocation, Program, ProgramPoint, Return,
    Stmt, ThisRef, VarRef, While, fields_read, iter_stmts,
)

#: Creation point of the location the main block runs on.
MAIN_PP = ProgramPoint(0, "main")


@dataclass(frozen=True)
class AbstractLocation:
    creation_pp: ProgramPoint
    class_name: str

    def render(self) -> str:
        return "obj@main" if self.creation_pp == MAIN_PP else f"obj@{self.creation_pp.render()}"


@dataclass(frozen=True)
class AbstractTask:
    class_name: str
    method_name: str

    def render(self) -> str:
        return self.method_name if self == MAIN_TASK else f"{self.class_name}.{self.method_name}"


#: Pseudo-task for the main block (runs on the main location).
MAIN_TASK = AbstractTask("", "main")
MAIN_LOCATION = AbstractLocation(MAIN_PP, "")


@dataclass(frozen=True)
class CFG:
    nodes: frozenset[ProgramPoint]
    edges: frozenset[tuple[ProgramPoint, ProgramPoint]]
    entry: ProgramPoint

    def successors(self, pp: ProgramPoint) -> list[ProgramPoint]:
        return sorted((b for a, b in self.edges if a == pp), key=lambda p: p.id)

    def predecessors(self, pp: ProgramPoint) -> list[ProgramPoint]:
        return sorted((a for a, b in self.edges if b == pp), key=lambda p: p.id)


def build_cfg(body: tuple[Stmt, ...]) -> CFG:
    """Intra-procedural CFG over statement program points."""
    nodes: set[ProgramPoint] = {s.pp for s in iter_stmts(body)}
    edges: set[tuple[ProgramPoint, ProgramPoint]] = set()

    def link(sources: Iterable[ProgramPoint], target: ProgramPoint) -> None:
        for src in sources:
            edges.add((src, target))

    def wire(block: tuple[Stmt, ...], preds: list[ProgramPoint]) -> list[ProgramPoint]:
        """Connect *preds* to the block and return its fall-through exits."""
        for s in block:
            link(preds, s.pp)
            if isinstance(s, If):
                # an empty branch falls straight through the If node itself
                then_exits = wire(s.then_block, [s.pp])
                else_exits = wire(s.else_block, [s.pp])
                preds = then_exits + else_exits
            elif isinstance(s, While):
                body_exits = wire(s.block, [s.pp])
                link(body_exits, s.pp)  # back edge
                preds = [s.pp]  # loop condition false
            elif isinstance(s, Return):
                preds = []  # no fall-through
            else:
                preds = [s.pp]
        return preds

    wire(body, [])
    return CFG(frozenset(nodes), frozenset(edges), body[0].pp)


def stmt_fields(stmt: Stmt) -> frozenset[str]:
    """Fields read or written directly by *stmt* (branch bodies excluded)."""
    if isinstance(stmt, FieldAssign):
        return frozenset({stmt.field}) | fields_read(stmt.expr)
    if isinstance(stmt, LocalAssign):
        return fields_read(stmt.expr)
    if isinstance(stmt, NewLocation):
        out: frozenset[str] = frozenset()
        for a in stmt.args:
            out |= fields_read(a)
        return out
    if isinstance(stmt, AsyncCall):
        out = fields_read(stmt.target)
        for a in stmt.args:
            out |= fields_read(a)
        return out
    if isinstance(stmt, (If, While)):
        return fields_read(stmt.cond)
    if isinstance(stmt, Return):
        return fields_read(stmt.expr)
    return frozenset()  # await / get / skip


# ---------------------------------------------------------------------------
# Points-to
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PointsTo:
    """Creation sites that may flow to each reference variable or field.

    Keys: ``("var", scope, name)`` for locals and parameters (scope is
    ``Class.method`` or ``main``), ``("field", class, name)`` for fields and
    ``("this", class)`` for the receiver inside a class.
    """

    sets: dict[tuple, frozenset[AbstractLocation]]

    def of(self, key: tuple) -> frozenset[AbstractLocation]:
        return self.sets.get(key, frozenset())

    def target_of(
        self, program: Program, owner: Optional[tuple[str, str]], target: Expr
    ) -> frozenset[AbstractLocation]:
        """Locations an async-call target expression may denote."""
        scope = f"{owner[0]}.{owner[1]}" if owner else "main"
        if isinstance(target, ThisRef):
            return self.of(("this", owner[0]))
        if isinstance(target, FieldRef):
            return self.of(("field", owner[0], target.name))
        if isinstance(target, VarRef):
            return self.of(("var", scope, target.name))
        raise AnalysisError(f"not a reference expression: {target!r}")


def resolve_references(program: Program) -> PointsTo:
    """Andersen-style flow-insensitive propagation over creation sites.

    Raises :class:`AnalysisError` when an async call's target has no creation
    site flowing to it (the call could never resolve at runtime).
    """
    creation_sites: dict[str, list[AbstractLocation]] = {}
    for owner, body in program.bodies():
        for s in iter_stmts(body):
            if isinstance(s, NewLocation):
                creation_sites.setdefault(s.class_name, []).append(
                    AbstractLocation(s.pp, s.class_name)
                )

    sets: dict[tuple, set[AbstractLocation]] = {}
    for cls in program.classes:
        sets[("this", cls.name)] = set(creation_sites.get(cls.name, []))

    def key_of(owner: Optional[tuple[str, str]], e: Expr) -> Optional[tuple]:
        scope = f"{owner[0]}.{owner[1]}" if owner else "main"
        if isinstance(e, ThisRef):
            return ("this", owner[0])
        if isinstance(e, FieldRef):
            return ("field", owner[0], e.name)
        if isinstance(e, VarRef):
            return ("var", scope, e.name)
        return None

    # subset constraints (src key or literal set) -> dst key
    flows: list[tuple[tuple, tuple]] = []

    def add_flow(src: Optional[tuple], dst: tuple) -> None:
        if src is not None:
            flows.append((src, dst))
            sets.setdefault(src, set())
            sets.setdefault(dst, set())

    def classes_with_method(name: str) -> list[ClassDecl]:
        return [c for c in program.classes if c.method_named(name)]

    for owner, body in program.bodies():
        scope = f"{owner[0]}.{owner[1]}" if owner else "main"
        for s in iter_stmts(body):
            if isinstance(s, NewLocation):
                loc = AbstractLocation(s.pp, s.class_name)
                sets.setdefault(("var", scope, s.var), set()).add(loc)
                cls = program.class_named(s.class_name)
                for (fname, ftype), arg in zip(cls.ctor_params, s.args):
                    if program.class_named(ftype):
                        add_flow(key_of(owner, arg), ("field", s.class_name, fname))
            elif isinstance(s, LocalAssign):
                add_flow(key_of(owner, s.expr), ("var", scope, s.var))
            elif isinstance(s, FieldAssign):
                add_flow(key_of(owner, s.expr), ("field", owner[0], s.field))
            elif isinstance(s, AsyncCall):
                for cls in classes_with_method(s.method):
                    method = cls.method_named(s.method)
                    for (pname, ptype), arg in zip(method.params, s.args):
                        if program.class_named(ptype):
                            add_flow(
                                key_of(owner, arg),
                                ("var", f"{cls.name}.{method.name}", pname),
                            )

    changed = True
    while changed:
        changed = False
        for src, dst in flows:
            before = len(sets[dst])
            sets[dst] |= sets[src]
            changed = changed or len(sets[dst]) != before

    pts = PointsTo({k: frozenset(v) for k, v in sets.items()})

    for owner, body in program.bodies():
        for s in iter_stmts(body):
            if isinstance(s, AsyncCall) and not pts.target_of(program, owner, s.target):
                where = f"{owner[0]}.{owner[1]}" if owner else "main"
                raise AnalysisError(
                    f"unresolvable reference: target of '! {s.method}' at "
                    f"{s.pp.render()} in {where} has no creation site"
                )
    return pts


# ---------------------------------------------------------------------------
# Per-task facts
# ---------------------------------------------------------------------------


class ProgramFacts:
    """Lazily computed static facts for one program; immutable once built."""

    def __init__(self, program: Program):
        self.program = program
        self._cfgs: dict[AbstractTask, CFG] = {}
        self._bodies: dict[AbstractTask, tuple[Stmt, ...]] = {}
        self._fields_out: dict[AbstractTask, dict[ProgramPoint, frozenset[str]]] = {}
        self._await_in: dict[AbstractTask, dict[ProgramPoint, bool]] = {}
        for cls in program.classes:
            for m in cls.methods:
                self._bodies[AbstractTask(cls.name, m.name)] = m.body
        if program.main:
            self._bodies[MAIN_TASK] = program.main

    def tasks(self) -> list[AbstractTask]:
        return list(self._bodies)

    def body_of(self, task: AbstractTask) -> tuple[Stmt, ...]:
        try:
            return self._bodies[task]
        except KeyError:
            raise AnalysisError(f"unknown task {task.render()}") from None

    def cfg_of(self, task: AbstractTask) -> CFG:
        if task not in self._cfgs:
            self._cfgs[task] = build_cfg(self.body_of(task))
        return self._cfgs[task]

    def stmt_at(self, task: AbstractTask, pp: ProgramPoint) -> Stmt:
        for s in iter_stmts(self.body_of(task)):
            if s.pp == pp:
                return s
        raise AnalysisError(f"instruction {pp.render()} not in task {task.render()}")

    def _fields_fixpoint(self, task: AbstractTask) -> dict[ProgramPoint, frozenset[str]]:
        if task in self._fields_out:
            return self._fields_out[task]
        cfg = self.cfg_of(task)
        gen = {s.pp: stmt_fields(s) for s in iter_stmts(self.body_of(task))}
        out: dict[ProgramPoint, frozenset[str]] = {pp: frozenset() for pp in cfg.nodes}
        work = sorted(cfg.nodes, key=lambda p: p.id)
        while work:
            pp = work.pop(0)
            inset: frozenset[str] = frozenset()
            for pred in cfg.predecessors(pp):
                inset |= out[pred]
            new_out = gen[pp] | inset
            if new_out != out[pp]:
                out[pp] = new_out
                work.extend(cfg.successors(pp))
        self._fields_out[task] = out
        return out

    def _await_fixpoint(self, task: AbstractTask) -> dict[ProgramPoint, bool]:
        if task in self._await_in:
            return self._await_in[task]
        cfg = self.cfg_of(task)
        is_await = {
            s.pp: isinstance(s, AwaitFut) for s in iter_stmts(self.body_of(task))
        }
        inb: dict[ProgramPoint, bool] = {pp: False for pp in cfg.nodes}
        outb: dict[ProgramPoint, bool] = {pp: False for pp in cfg.nodes}
        work = sorted(cfg.nodes, key=lambda p: p.id)
        while work:
            pp = work.pop(0)
            new_in = any(outb[pred] for pred in cfg.predecessors(pp))
            new_out = new_in or is_await[pp]
            if new_in != inb[pp] or new_out != outb[pp]:
                inb[pp] = new_in
                outb[pp] = new_out
                work.extend(cfg.successors(pp))
        self._await_in[task] = inb
        return inb

    def accessed_fields(self, task: AbstractTask, pp: ProgramPoint) -> frozenset[str]:
        """Fields read/written on some entry-to-*pp* path, *pp* inclusive."""
        out = self._fields_fixpoint(task)
        if pp not in out:
            raise AnalysisError(f"instruction {pp.render()} not in task {task.render()}")
        return out[pp]

    def has_await_before(self, task: AbstractTask, pp: ProgramPoint) -> bool:
        """True iff some path from the task entry reaches an await, then *pp*."""
        inb = self._await_fixpoint(task)
        if pp not in inb:
            raise AnalysisError(f"instruction {pp.render()} not in task {task.render()}")
        return inb[pp]

    def field_modifiers(self, field: str) -> frozenset[tuple[AbstractTask, ProgramPoint]]:
        return field_modifiers(self.program, field)

    def modifiers_in_class(
        self, class_name: str, field: str
    ) -> list[tuple[AbstractTask, ProgramPoint]]:
        """Writes to *field* of *class_name*, in program order."""
        found = []
        for cls in self.program.classes:
            if cls.name != class_name:
                continue
            for m in cls.methods:
                for s in iter_stmts(m.body):
                    if isinstance(s, FieldAssign) and s.field == field:
                        found.append((AbstractTask(cls.name, m.name), s.pp))
        return sorted(found, key=lambda pair: pair[1].id)

    def defining_call(self, task: AbstractTask, fut_var: str) -> AsyncCall:
        for s in iter_stmts(self.body_of(task)):
            if isinstance(s, AsyncCall) and s.fut_var == fut_var:
                return s
        raise AnalysisError(f"no defining call for future {fut_var!r} in {task.render()}")

    def facts_table(self) -> list[tuple[AbstractTask, ProgramPoint, frozenset[str], bool]]:
        """(task, pp, fields-so-far, await-before) rows for every instruction."""
        rows = []
        for task in self.tasks():
            for s in iter_stmts(self.body_of(task)):
                rows.append(
                    (
                        task,
                        s.pp,
                        self.accessed_fields(task, s.pp),
                        self.has_await_before(task, s.pp),
                    )
                )
        return rows


def accessed_fields(program: Program, task: AbstractTask, pp: ProgramPoint) -> frozenset[str]:
    return ProgramFacts(program).accessed_fields(task, pp)


def has_await_before(program: Program, task: AbstractTask, pp: ProgramPoint) -> bool:
    return ProgramFacts(program).has_await_before(task, pp)


def field_modifiers(program: Program, field: str) -> frozenset[tuple[AbstractTask, ProgramPoint]]:
    """All field-assignments writing *field*, paired with their task.

    *field* may be qualified (``Class.field``); a bare name must be unique
    across classes.
    """
    if "." in field:
        class_name, name = field.split(".", 1)
        owners = [c for c in program.classes if c.name == class_name and c.field_named(name)]
    else:
        name = field
        owners = [c for c in program.classes if c.field_named(name)]
    if not owners:
        raise AnalysisError(f"unknown field {field!r}")
    if len(owners) > 1:
        raise AnalysisError(
            f"field name {field!r} is ambiguous; qualify as Class.{name}"
        )
    facts = ProgramFacts(program)
    return frozenset(facts.modifiers_in_class(owners[0].name, name))
