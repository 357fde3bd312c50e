"""Recursive-descent parser producing labeled :class:`Program` values.

Conventions of the surface language:

* Statements are ``x = e;``, ``C x = new C(args);``, ``Fut f = ref ! m(args);``,
  ``await f?;``, ``f.get;``, ``if (e) {..} else {..}``, ``while (e) {..}``,
  ``return e;`` and ``skip;``. Typed declarations (``Int i = 0;``) introduce
  locals; a bare ``x = e;`` targets an existing local, else a class field.
* Constructor parameters are implicit: the uninitialized fields of a class, in
  declaration order, and ``new C(..)`` must supply exactly those arguments.
* ``@pp:NAME`` after a statement's terminator names its program point; an
  annotation following a closing brace binds to the most recently completed
  statement (the last statement of a method body, or an `if`/`while` itself).
* Future variables are method-local: introduced only by an async call, never
  redefined, and awaited/gotten only where that definition is in scope.
"""

from __future__ import annotations

from dataclasses import replace

from ..errors import ParseError
from .ast import (
    PRIMITIVE_TYPES, FUT_TYPE,
    AsyncCall, AwaitFut, Binary, BoolLit, ClassDecl, Expr, FieldAssign,
    FieldDecl, FieldRef, GetFut, If, IntLit, LocalAssign, MethodDecl,
    NewLocation, Program, ProgramPoint, Return, Skip, Stmt, ThisRef,
    Unary, UnitLit, VarRef, While, iter_stmts,
)
from .lexer import Token, tokenize


class _MethodScope:
    """Per-body name environment: locals with types plus future visibility."""

    def __init__(self, cls: ClassDecl | None, params: tuple[tuple[str, str], ...]):
        self.cls = cls
        self.local_types: dict[str, str] = dict((n, t) for n, t in params)
        self.fut_defined: set[str] = set()  # any definition in this body
        self.block_stack: list[set[str]] = [set()]  # futures visible per block

    def push_block(self) -> None:
        self.block_stack.append(set())

    def pop_block(self) -> None:
        self.block_stack.pop()

    def fut_visible(self, name: str) -> bool:
        return any(name in blk for blk in self.block_stack)

    def define_future(self, name: str) -> None:
        self.fut_defined.add(name)
        self.block_stack[-1].add(name)
        self.local_types[name] = FUT_TYPE


class Parser:
    def __init__(self, source: str):
        self.tokens = tokenize(source)
        self.pos = 0
        self.pp_counter = 0
        self.labels_seen: set[str] = set()

    # -- token helpers ------------------------------------------------------

    def peek(self, offset: int = 0) -> Token:
        return self.tokens[min(self.pos + offset, len(self.tokens) - 1)]

    def at(self, kind: str, text: str | None = None, offset: int = 0) -> bool:
        t = self.peek(offset)
        return t.kind == kind and (text is None or t.text == text)

    def take(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str, text: str | None = None) -> Token:
        t = self.peek()
        if not self.at(kind, text):
            want = text if text is not None else kind
            raise ParseError(f"expected {want!r}, found {t.describe()}", t.line, t.col)
        return self.take()

    def fail(self, message: str) -> ParseError:
        t = self.peek()
        return ParseError(message, t.line, t.col)

    def new_pp(self) -> ProgramPoint:
        self.pp_counter += 1
        return ProgramPoint(self.pp_counter)

    # -- program ------------------------------------------------------------

    def parse_program(self) -> Program:
        classes: list[ClassDecl] = []
        main: list[Stmt] | None = None
        while not self.at("eof"):
            if self.at("kw", "class"):
                cls = self.parse_class({c.name for c in classes})
                classes.append(cls)
            elif self.at("kw", "main"):
                if main is not None:
                    raise self.fail("duplicate main block")
                self.take()
                main = self.parse_block(_MethodScope(None, ()), classes_so_far=None)
            else:
                raise self.fail("expected 'class' or 'main'")
        program = Program(tuple(classes), tuple(main or ()))
        self._validate(program)
        return program

    def parse_class(self, seen_names: set[str]) -> ClassDecl:
        self.expect("kw", "class")
        name_tok = self.expect("ident")
        if name_tok.text in seen_names:
            raise ParseError(f"duplicate class {name_tok.text!r}", name_tok.line, name_tok.col)
        self.expect("sym", "{")
        fields: list[FieldDecl] = []
        methods: list[MethodDecl] = []
        # fields first, then methods; a '(' after the member name tells them apart
        while not self.at("sym", "}"):
            if not (self.at("ident") or self.at("kw")):
                raise self.fail("expected field or method declaration")
            if self.at("sym", "(", offset=2):
                methods.append(self.parse_method(name_tok.text, fields, methods))
            else:
                fields.append(self.parse_field(fields))
        self.expect("sym", "}")
        return ClassDecl(name_tok.text, tuple(fields), tuple(methods))

    def parse_field(self, existing: list[FieldDecl]) -> FieldDecl:
        type_tok = self.expect("ident")
        if type_tok.text == FUT_TYPE:
            raise ParseError("fields cannot have type Fut", type_tok.line, type_tok.col)
        name_tok = self.expect("ident")
        if any(f.name == name_tok.text for f in existing):
            raise ParseError(f"duplicate field {name_tok.text!r}", name_tok.line, name_tok.col)
        init: Expr | None = None
        if self.at("sym", "="):
            self.take()
            init = self.parse_literal()
        self.expect("sym", ";")
        return FieldDecl(name_tok.text, type_tok.text, init)

    def parse_literal(self) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.take()
            return IntLit(int(t.text))
        if t.kind == "kw" and t.text in ("true", "false"):
            self.take()
            return BoolLit(t.text == "true")
        if t.kind == "kw" and t.text == "unit":
            self.take()
            return UnitLit()
        raise self.fail("field initializer must be a literal")

    def parse_method(
        self, class_name: str, fields: list[FieldDecl], existing: list[MethodDecl]
    ) -> MethodDecl:
        ret_tok = self.expect("ident")
        name_tok = self.expect("ident")
        if any(m.name == name_tok.text for m in existing):
            raise ParseError(
                f"duplicate method {name_tok.text!r}", name_tok.line, name_tok.col
            )
        self.expect("sym", "(")
        params: list[tuple[str, str]] = []
        while not self.at("sym", ")"):
            if params:
                self.expect("sym", ",")
            p_type = self.expect("ident").text
            if p_type == FUT_TYPE:
                raise self.fail("parameters cannot have type Fut")
            p_name = self.expect("ident")
            if any(n == p_name.text for n, _ in params):
                raise ParseError(f"duplicate parameter {p_name.text!r}", p_name.line, p_name.col)
            params.append((p_name.text, p_type))
        self.expect("sym", ")")
        # the surrounding class is still being parsed; scope sees its fields only
        cls_view = ClassDecl(class_name, tuple(fields), ())
        scope = _MethodScope(cls_view, tuple(params))
        body = self.parse_block(scope, classes_so_far=None)
        if not body:
            body = [Skip(self.new_pp())]
        self._attach_annotation(body)
        return MethodDecl(name_tok.text, ret_tok.text, tuple(params), tuple(body))

    # -- statements ---------------------------------------------------------

    def parse_block(self, scope: _MethodScope, classes_so_far) -> list[Stmt]:
        self.expect("sym", "{")
        scope.push_block()
        stmts: list[Stmt] = []
        while not self.at("sym", "}"):
            stmts.append(self.parse_stmt(scope))
            self._attach_annotation(stmts)
        self.expect("sym", "}")
        scope.pop_block()
        return stmts

    def _attach_annotation(self, stmts: list[Stmt]) -> None:
        while self.at("annot"):
            t = self.take()
            if not stmts:
                raise ParseError("annotation with no preceding statement", t.line, t.col)
            if t.text in self.labels_seen:
                raise ParseError(f"duplicate label @pp:{t.text}", t.line, t.col)
            self.labels_seen.add(t.text)
            last = stmts[-1]
            if last.pp.label is not None:
                raise ParseError("statement already labeled", t.line, t.col)
            stmts[-1] = replace(last, pp=replace(last.pp, label=t.text))

    def parse_stmt(self, scope: _MethodScope) -> Stmt:
        t = self.peek()
        if t.kind == "kw":
            if t.text == "skip":
                pp = self.new_pp()
                self.take()
                self.expect("sym", ";")
                return Skip(pp)
            if t.text == "await":
                pp = self.new_pp()
                self.take()
                name = self.expect("ident")
                self.expect("sym", "?")
                self.expect("sym", ";")
                self._check_future_use(scope, name)
                return AwaitFut(pp, name.text)
            if t.text == "if":
                return self.parse_if(scope)
            if t.text == "while":
                pp = self.new_pp()
                self.take()
                self.expect("sym", "(")
                cond = self.parse_expr(scope)
                self.expect("sym", ")")
                block = self.parse_block(scope, None)
                return While(pp, cond, tuple(block))
            if t.text == "return":
                pp = self.new_pp()
                self.take()
                expr = self.parse_expr(scope)
                self.expect("sym", ";")
                return Return(pp, expr)
            raise self.fail(f"unexpected keyword {t.text!r} at statement start")
        if t.kind != "ident":
            raise self.fail("expected a statement")
        # IDENT '.' get ';'
        if self.at("sym", ".", offset=1):
            pp = self.new_pp()
            name = self.take()
            self.expect("sym", ".")
            self.expect("kw", "get")
            self.expect("sym", ";")
            self._check_future_use(scope, name)
            return GetFut(pp, name.text)
        # TYPE IDENT '=' ...  (typed declaration)
        if self.at("ident", offset=1) and self.at("sym", "=", offset=2):
            return self.parse_decl(scope)
        # IDENT '=' ...  (bare assignment)
        if self.at("sym", "=", offset=1):
            return self.parse_bare_assign(scope)
        raise self.fail(f"cannot parse statement starting with {t.describe()}")

    def parse_if(self, scope: _MethodScope) -> Stmt:
        pp = self.new_pp()
        self.expect("kw", "if")
        self.expect("sym", "(")
        cond = self.parse_expr(scope)
        self.expect("sym", ")")
        then_block = self.parse_block(scope, None)
        else_block: list[Stmt] = []
        if self.at("kw", "else"):
            self.take()
            else_block = self.parse_block(scope, None)
        return If(pp, cond, tuple(then_block), tuple(else_block))

    def parse_decl(self, scope: _MethodScope) -> Stmt:
        pp = self.new_pp()
        type_tok = self.take()
        name_tok = self.take()
        self.expect("sym", "=")
        if name_tok.text in scope.local_types:
            raise ParseError(f"local {name_tok.text!r} redeclared", name_tok.line, name_tok.col)
        if scope.cls and scope.cls.field_named(name_tok.text):
            raise ParseError(
                f"local {name_tok.text!r} shadows a field", name_tok.line, name_tok.col
            )
        if type_tok.text == FUT_TYPE:
            # Fut f = target ! m(args);
            target = self.parse_call_target(scope)
            self.expect("sym", "!")
            method = self.expect("ident").text
            args = self.parse_args(scope)
            self.expect("sym", ";")
            scope.define_future(name_tok.text)
            return AsyncCall(pp, name_tok.text, target, method, tuple(args))
        if self.at("kw", "new"):
            self.take()
            cls_tok = self.expect("ident")
            if cls_tok.text != type_tok.text:
                raise ParseError(
                    f"declared type {type_tok.text!r} does not match constructed class "
                    f"{cls_tok.text!r}",
                    cls_tok.line, cls_tok.col,
                )
            args = self.parse_args(scope)
            self.expect("sym", ";")
            scope.local_types[name_tok.text] = type_tok.text
            return NewLocation(pp, name_tok.text, cls_tok.text, tuple(args))
        expr = self.parse_expr(scope)
        self.expect("sym", ";")
        scope.local_types[name_tok.text] = type_tok.text
        return LocalAssign(pp, name_tok.text, expr, decl_type=type_tok.text)

    def parse_bare_assign(self, scope: _MethodScope) -> Stmt:
        pp = self.new_pp()
        name_tok = self.take()
        self.expect("sym", "=")
        expr = self.parse_expr(scope)
        self.expect("sym", ";")
        name = name_tok.text
        if name in scope.local_types:
            if scope.local_types[name] == FUT_TYPE:
                raise ParseError(f"future {name!r} cannot be reassigned", name_tok.line, name_tok.col)
            return LocalAssign(pp, name, expr)
        if scope.cls and scope.cls.field_named(name):
            return FieldAssign(pp, name, expr)
        raise ParseError(f"assignment to undeclared variable {name!r}", name_tok.line, name_tok.col)

    def parse_call_target(self, scope: _MethodScope) -> Expr:
        if self.at("kw", "this"):
            t = self.take()
            if scope.cls is None:
                raise ParseError("'this' outside a class", t.line, t.col)
            return ThisRef()
        name = self.expect("ident")
        return self._resolve_name(scope, name)

    def parse_args(self, scope: _MethodScope) -> list[Expr]:
        self.expect("sym", "(")
        args: list[Expr] = []
        while not self.at("sym", ")"):
            if args:
                self.expect("sym", ",")
            args.append(self.parse_expr(scope))
        self.expect("sym", ")")
        return args

    def _check_future_use(self, scope: _MethodScope, name_tok: Token) -> None:
        name = name_tok.text
        if scope.fut_visible(name):
            return
        if name in scope.fut_defined:
            raise ParseError(
                f"future {name!r} used outside its defining block", name_tok.line, name_tok.col
            )
        raise ParseError(f"unbound future {name!r}", name_tok.line, name_tok.col)

    # -- expressions --------------------------------------------------------

    def parse_expr(self, scope: _MethodScope) -> Expr:
        return self.parse_and(scope)

    def parse_and(self, scope: _MethodScope) -> Expr:
        left = self.parse_eq(scope)
        while self.at("sym", "&&"):
            self.take()
            left = Binary("&&", left, self.parse_eq(scope))
        return left

    def parse_eq(self, scope: _MethodScope) -> Expr:
        left = self.parse_rel(scope)
        while self.at("sym", "=="):
            self.take()
            left = Binary("==", left, self.parse_rel(scope))
        return left

    def parse_rel(self, scope: _MethodScope) -> Expr:
        left = self.parse_add(scope)
        while self.at("sym", "<"):
            self.take()
            left = Binary("<", left, self.parse_add(scope))
        return left

    def parse_add(self, scope: _MethodScope) -> Expr:
        left = self.parse_unary(scope)
        while self.at("sym", "+") or self.at("sym", "-"):
            op = self.take().text
            left = Binary(op, left, self.parse_unary(scope))
        return left

    def parse_unary(self, scope: _MethodScope) -> Expr:
        if self.at("sym", "!"):
            self.take()
            return Unary("!", self.parse_unary(scope))
        return self.parse_primary(scope)

    def parse_primary(self, scope: _MethodScope) -> Expr:
        t = self.peek()
        if t.kind == "int":
            self.take()
            return IntLit(int(t.text))
        if t.kind == "kw":
            if t.text in ("true", "false"):
                self.take()
                return BoolLit(t.text == "true")
            if t.text == "unit":
                self.take()
                return UnitLit()
            if t.text == "this":
                self.take()
                if scope.cls is None:
                    raise ParseError("'this' outside a class", t.line, t.col)
                return ThisRef()
            raise self.fail(f"unexpected keyword {t.text!r} in expression")
        if t.kind == "sym" and t.text == "(":
            self.take()
            e = self.parse_expr(scope)
            self.expect("sym", ")")
            return e
        if t.kind == "ident":
            name = self.take()
            return self._resolve_name(scope, name)
        raise self.fail("expected an expression")

    def _resolve_name(self, scope: _MethodScope, name_tok: Token) -> Expr:
        name = name_tok.text
        if name in scope.local_types:
            if scope.local_types[name] == FUT_TYPE:
                raise ParseError(
                    f"future {name!r} is not a value; use 'await {name}?' or '{name}.get'",
                    name_tok.line, name_tok.col,
                )
            return VarRef(name)
        if scope.cls and scope.cls.field_named(name):
            return FieldRef(name)
        raise ParseError(f"unknown variable {name!r}", name_tok.line, name_tok.col)

    # -- whole-program validation -------------------------------------------

    def _validate(self, program: Program) -> None:
        known_types = set(PRIMITIVE_TYPES) | {c.name for c in program.classes}
        for cls in program.classes:
            for f in cls.fields:
                if f.type not in known_types:
                    raise ParseError(f"unknown type {f.type!r} for field {cls.name}.{f.name}")
            for m in cls.methods:
                if m.return_type not in known_types:
                    raise ParseError(
                        f"unknown return type {m.return_type!r} for {cls.name}.{m.name}"
                    )
                for p_name, p_type in m.params:
                    if p_type not in known_types:
                        raise ParseError(
                            f"unknown type {p_type!r} for parameter {p_name!r} "
                            f"of {cls.name}.{m.name}"
                        )
        for s in program.all_statements():
            if isinstance(s, NewLocation):
                cls = program.class_named(s.class_name)
                if cls is None:
                    raise ParseError(f"unknown class {s.class_name!r} in 'new'")
                want = len(cls.ctor_params)
                if len(s.args) != want:
                    raise ParseError(
                        f"'new {s.class_name}' takes {want} argument(s) "
                        f"(its uninitialized fields), got {len(s.args)}"
                    )


def parse(source: str) -> Program:
    """Parse *source* text into a labeled :class:`Program`."""
    return Parser(source).parse_program()
