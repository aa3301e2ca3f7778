"""Source-level syntax tree for mini-SCOOP programs.

Nodes carry a ``pos`` (line, column) for diagnostics; ``pos`` is excluded from
equality so that a pretty-printed and re-parsed program compares equal to the
original.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Union

Pos = tuple[int, int]
NOPOS: Pos = (0, 0)

INTEGER = "INTEGER"
BOOLEAN = "BOOLEAN"


@dataclass(frozen=True)
class TypeRef:
    base: str
    is_separate: bool = False

    @property
    def is_reference(self) -> bool:
        return self.base not in (INTEGER, BOOLEAN)

    def __str__(self) -> str:
        return f"separate {self.base}" if self.is_separate else self.base


# ---------------------------------------------------------------- expressions


@dataclass(frozen=True)
class IntLit:
    value: int
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class BoolLit:
    value: bool
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class VoidLit:
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class CurrentRef:
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Name:
    """A bare identifier: local, formal, ``Result``, attribute or argument-less
    unqualified query on ``Current``."""

    ident: str
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Call:
    """``target.name(args)``; ``target`` is None for unqualified calls."""

    target: Optional["Expr"]
    name: str
    args: tuple["Expr", ...] = ()
    has_parens: bool = False
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class BinOp:
    op: str
    left: "Expr"
    right: "Expr"
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class UnOp:
    op: str  # "not" | "-"
    operand: "Expr"
    pos: Pos = field(default=NOPOS, compare=False)


Expr = Union[IntLit, BoolLit, VoidLit, CurrentRef, Name, Call, BinOp, UnOp]

ARITH_OPS = ("+", "-", "*")
COMPARE_OPS = ("=", "/=", "<", "<=", ">", ">=")
BOOL_OPS = ("and", "or")


# ----------------------------------------------------------------- statements


@dataclass(frozen=True)
class Create:
    target: str
    ctor: Optional[str] = None
    args: tuple[Expr, ...] = ()
    has_parens: bool = False
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Assign:
    target: str
    value: Expr
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class CallStmt:
    call: Call
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class If:
    cond: Expr
    then_body: tuple["Stmt", ...]
    else_body: tuple["Stmt", ...] = ()
    has_else: bool = False
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class Loop:
    init: tuple["Stmt", ...]
    until: Expr
    body: tuple["Stmt", ...]
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class SeparateBlock:
    targets: tuple[str, ...]
    body: tuple["Stmt", ...]
    pos: Pos = field(default=NOPOS, compare=False)


Stmt = Union[Create, Assign, CallStmt, If, Loop, SeparateBlock]


# ------------------------------------------------------------------- features


@dataclass(frozen=True)
class Attribute:
    name: str
    type: TypeRef
    pos: Pos = field(default=NOPOS, compare=False)


@dataclass(frozen=True)
class MethodDecl:
    name: str
    formals: tuple[tuple[str, TypeRef], ...] = ()
    return_type: Optional[TypeRef] = None
    require: tuple[Expr, ...] = ()
    locals: tuple[tuple[str, TypeRef], ...] = ()
    body: tuple[Stmt, ...] = ()
    ensure: tuple[Expr, ...] = ()
    pos: Pos = field(default=NOPOS, compare=False)

    @property
    def is_query(self) -> bool:
        return self.return_type is not None

    @property
    def controlled_formals(self) -> tuple[str, ...]:
        return tuple(n for n, t in self.formals if t.is_separate)

    @property
    def wait_condition(self) -> Optional[Expr]:
        """The ``require`` clauses folded into one conjunction."""
        if not self.require:
            return None
        cond = self.require[0]
        for clause in self.require[1:]:
            cond = BinOp("and", cond, clause, pos=clause.pos)
        return cond


@dataclass(frozen=True)
class ClassDecl:
    name: str
    attributes: tuple[Attribute, ...] = ()
    methods: tuple[MethodDecl, ...] = ()
    pos: Pos = field(default=NOPOS, compare=False)

    def method(self, name: str) -> Optional[MethodDecl]:
        for m in self.methods:
            if m.name == name:
                return m
        return None

    def attribute(self, name: str) -> Optional[Attribute]:
        for a in self.attributes:
            if a.name == name:
                return a
        return None


ENTRY_CLASS = "APPLICATION"
ENTRY_METHOD = "make"


@dataclass(frozen=True)
class Program:
    classes: tuple[ClassDecl, ...]
    entry: tuple[str, str] = (ENTRY_CLASS, ENTRY_METHOD)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def cls(self, name: str) -> Optional[ClassDecl]:
        for c in self.classes:
            if c.name == name:
                return c
        return None
