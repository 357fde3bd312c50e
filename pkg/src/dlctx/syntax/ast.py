"""AST for the toy asynchronous actor language.

Every statement carries a :class:`ProgramPoint` whose id is unique across the
whole program; `@pp:NAME` source annotations surface as the point's label.
All nodes are frozen dataclasses, so parsed programs are safely shareable.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

PRIMITIVE_TYPES = ("Int", "Bool", "Unit")
FUT_TYPE = "Fut"


@dataclass(frozen=True)
class ProgramPoint:
    id: int
    label: Optional[str] = None

    def render(self) -> str:
        return f"pp:{self.label}" if self.label else f"pp#{self.id}"

    def __str__(self) -> str:  # pragma: no cover - convenience
        return self.render()


# ---------------------------------------------------------------------------
# Expressions
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IntLit:
    value: int


@dataclass(frozen=True)
class BoolLit:
    value: bool


@dataclass(frozen=True)
class UnitLit:
    pass


@dataclass(frozen=True)
class VarRef:
    """A method-local variable or parameter."""

    name: str


@dataclass(frozen=True)
class FieldRef:
    """A field of the enclosing class (implicit `this`)."""

    name: str


@dataclass(frozen=True)
class ThisRef:
    pass


@dataclass(frozen=True)
class Unary:
    op: str  # "!"
    operand: "Expr"


@dataclass(frozen=True)
class Binary:
    op: str  # one of + - < == &&
    left: "Expr"
    right: "Expr"


Expr = Union[IntLit, BoolLit, UnitLit, VarRef, FieldRef, ThisRef, Unary, Binary]


def fields_read(e: Expr) -> frozenset[str]:
    """Names of class fields read anywhere inside *e*."""
    if isinstance(e, FieldRef):
        return frozenset({e.name})
    if isinstance(e, Unary):
        return fields_read(e.operand)
    if isinstance(e, Binary):
        return fields_read(e.left) | fields_read(e.right)
    return frozenset()


# ---------------------------------------------------------------------------
# Statements
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Stmt:
    pp: ProgramPoint


@dataclass(frozen=True)
class FieldAssign(Stmt):
    field: str
    expr: Expr


@dataclass(frozen=True)
class LocalAssign(Stmt):
    var: str
    expr: Expr
    decl_type: Optional[str] = None  # set when the statement declares the local


@dataclass(frozen=True)
class NewLocation(Stmt):
    var: str
    class_name: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class AsyncCall(Stmt):
    fut_var: str
    target: Expr  # VarRef, FieldRef or ThisRef
    method: str
    args: tuple[Expr, ...]


@dataclass(frozen=True)
class AwaitFut(Stmt):
    fut_var: str


@dataclass(frozen=True)
class GetFut(Stmt):
    fut_var: str


@dataclass(frozen=True)
class If(Stmt):
    cond: Expr
    then_block: tuple[Stmt, ...]
    else_block: tuple[Stmt, ...]


@dataclass(frozen=True)
class While(Stmt):
    cond: Expr
    block: tuple[Stmt, ...]


@dataclass(frozen=True)
class Return(Stmt):
    expr: Expr


@dataclass(frozen=True)
class Skip(Stmt):
    pass


def iter_stmts(block: tuple[Stmt, ...]) -> Iterator[Stmt]:
    """Depth-first walk of *block*, yielding nested statements too."""
    for s in block:
        yield s
        if isinstance(s, If):
            yield from iter_stmts(s.then_block)
            yield from iter_stmts(s.else_block)
        elif isinstance(s, While):
            yield from iter_stmts(s.block)


# ---------------------------------------------------------------------------
# Declarations
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FieldDecl:
    name: str
    type: str
    init: Optional[Expr]  # None => wired through the constructor


@dataclass(frozen=True)
class MethodDecl:
    name: str
    return_type: str
    params: tuple[tuple[str, str], ...]  # (name, type)
    body: tuple[Stmt, ...]  # never empty (parser inserts skip)

    @property
    def entry_pp(self) -> ProgramPoint:
        return self.body[0].pp

    def param_type(self, name: str) -> Optional[str]:
        for p, t in self.params:
            if p == name:
                return t
        return None


@dataclass(frozen=True)
class ClassDecl:
    name: str
    fields: tuple[FieldDecl, ...]
    methods: tuple[MethodDecl, ...]

    @property
    def ctor_params(self) -> tuple[tuple[str, str], ...]:
        """Uninitialized fields, in declaration order, double as ctor params."""
        return tuple((f.name, f.type) for f in self.fields if f.init is None)

    def field_named(self, name: str) -> Optional[FieldDecl]:
        for f in self.fields:
            if f.name == name:
                return f
        return None

    def method_named(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...]
    main: tuple[Stmt, ...] = field(default_factory=tuple)

    def class_named(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None

    def bodies(self) -> Iterator[tuple[Optional[tuple[str, str]], tuple[Stmt, ...]]]:
        """All statement bodies with their owner: (class, method) or None for main."""
        for c in self.classes:
            for m in c.methods:
                yield (c.name, m.name), m.body
        yield None, self.main

    def all_statements(self) -> Iterator[Stmt]:
        for _, body in self.bodies():
            yield from iter_stmts(body)

    def stmt_at(self, pp: ProgramPoint) -> Optional[Stmt]:
        for s in self.all_statements():
            if s.pp == pp:
                return s
        return None

    def pp_labeled(self, label: str) -> ProgramPoint:
        for s in self.all_statements():
            if s.pp.label == label:
                return s.pp
        raise KeyError(f"no program point labeled {label!r}")
