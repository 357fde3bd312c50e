"""Grammar, parser and program-point labeling for the actor language."""

from .ast import (
    AsyncCall, AwaitFut, Binary, BoolLit, ClassDecl, Expr, FieldAssign,
    FieldDecl, FieldRef, GetFut, If, IntLit, LocalAssign, MethodDecl,
    NewLocation, Program, ProgramPoint, Return, Skip, Stmt, ThisRef,
    Unary, UnitLit, VarRef, While, fields_read, iter_stmts,
)
from .parser import parse
from .printer import pretty_print, render_expr

__all__ = [
    "AsyncCall", "AwaitFut", "Binary", "BoolLit", "ClassDecl", "Expr",
    "FieldAssign", "FieldDecl", "FieldRef", "GetFut", "If", "IntLit",
    "LocalAssign", "MethodDecl", "NewLocation", "Program", "ProgramPoint",
    "Return", "Skip", "Stmt", "ThisRef", "Unary", "UnitLit", "VarRef",
    "While", "fields_read", "iter_stmts", "parse", "pretty_print",
    "render_expr",
]
