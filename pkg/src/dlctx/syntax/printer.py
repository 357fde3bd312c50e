"""Source renderer; `parse(pretty_print(p))` is structurally equal to `p`."""

from __future__ import annotations

from .ast import (
    AsyncCall, AwaitFut, Binary, BoolLit, Expr, FieldAssign, FieldRef,
    GetFut, If, IntLit, LocalAssign, NewLocation, Program, Return, Skip,
    Stmt, ThisRef, Unary, UnitLit, VarRef, While,
)

_PREC = {"&&": 1, "==": 2, "<": 3, "+": 4, "-": 4}


def render_expr(e: Expr, parent_prec: int = 0) -> str:
    if isinstance(e, IntLit):
        return str(e.value)
    if isinstance(e, BoolLit):
        return "true" if e.value else "false"
    if isinstance(e, UnitLit):
        return "unit"
    if isinstance(e, VarRef):
        return e.name
    if isinstance(e, FieldRef):
        return e.name
    if isinstance(e, ThisRef):
        return "this"
    if isinstance(e, Unary):
        return f"!{render_expr(e.operand, 5)}"
    if isinstance(e, Binary):
        prec = _PREC[e.op]
        text = f"{render_expr(e.left, prec)} {e.op} {render_expr(e.right, prec + 1)}"
        return f"({text})" if prec < parent_prec else text
    raise TypeError(f"not an expression: {e!r}")


def _label(s: Stmt) -> str:
    return f" @pp:{s.pp.label}" if s.pp.label else ""


def _render_stmt(s: Stmt, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(s, FieldAssign):
        out.append(f"{pad}{s.field} = {render_expr(s.expr)};{_label(s)}")
    elif isinstance(s, LocalAssign):
        decl = f"{s.decl_type} " if s.decl_type else ""
        out.append(f"{pad}{decl}{s.var} = {render_expr(s.expr)};{_label(s)}")
    elif isinstance(s, NewLocation):
        args = ", ".join(render_expr(a) for a in s.args)
        out.append(f"{pad}{s.class_name} {s.var} = new {s.class_name}({args});{_label(s)}")
    elif isinstance(s, AsyncCall):
        args = ", ".join(render_expr(a) for a in s.args)
        out.append(
            f"{pad}Fut {s.fut_var} = {render_expr(s.target)} ! {s.method}({args});{_label(s)}"
        )
    elif isinstance(s, AwaitFut):
        out.append(f"{pad}await {s.fut_var}?;{_label(s)}")
    elif isinstance(s, GetFut):
        out.append(f"{pad}{s.fut_var}.get;{_label(s)}")
    elif isinstance(s, If):
        out.append(f"{pad}if ({render_expr(s.cond)}) {{")
        for inner in s.then_block:
            _render_stmt(inner, indent + 1, out)
        if s.else_block:
            out.append(f"{pad}}} else {{")
            for inner in s.else_block:
                _render_stmt(inner, indent + 1, out)
        out.append(f"{pad}}}{_label(s)}")
    elif isinstance(s, While):
        out.append(f"{pad}while ({render_expr(s.cond)}) {{")
        for inner in s.block:
            _render_stmt(inner, indent + 1, out)
        out.append(f"{pad}}}{_label(s)}")
    elif isinstance(s, Return):
        out.append(f"{pad}return {render_expr(s.expr)};{_label(s)}")
    elif isinstance(s, Skip):
        out.append(f"{pad}skip;{_label(s)}")
    else:
        raise TypeError(f"not a statement: {s!r}")


def pretty_print(program: Program) -> str:
    out: list[str] = []
    for cls in program.classes:
        out.append(f"class {cls.name} {{")
        for f in cls.fields:
            if f.init is None:
                out.append(f"  {f.type} {f.name};")
            else:
                out.append(f"  {f.type} {f.name} = {render_expr(f.init)};")
        for m in cls.methods:
            params = ", ".join(f"{t} {n}" for n, t in m.params)
            out.append(f"  {m.return_type} {m.name}({params}) {{")
            for s in m.body:
                _render_stmt(s, 2, out)
            out.append("  }")
        out.append("}")
    if program.main:
        out.append("main {")
        for s in program.main:
            _render_stmt(s, 1, out)
        out.append("}")
    else:
        out.append("main { }")
    return "\n".join(out) + "\n"
