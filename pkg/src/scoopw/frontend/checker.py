"""Static checks: name resolution, typing, and the controlled-call rule."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional

from scoopw.frontend.ast import (
    ARITH_OPS,
    BOOL_OPS,
    BOOLEAN,
    COMPARE_OPS,
    INTEGER,
    Assign,
    BinOp,
    BoolLit,
    Call,
    CallStmt,
    ClassDecl,
    Create,
    CurrentRef,
    Expr,
    If,
    IntLit,
    Loop,
    MethodDecl,
    Name,
    Pos,
    Program,
    SeparateBlock,
    Stmt,
    TypeRef,
    UnOp,
    VoidLit,
)

INT_T = TypeRef(INTEGER)
BOOL_T = TypeRef(BOOLEAN)
NONE_T = TypeRef("NONE")  # type of Void


@dataclass(frozen=True)
class Diagnostic:
    line: int
    col: int
    message: str

    def __str__(self) -> str:
        return f"{self.line}:{self.col}: {self.message}"


class TypeError_(Exception):
    """Internal: raised by :meth:`Scope.type_of` on an ill-typed expression."""

    def __init__(self, pos: Pos, message: str):
        super().__init__(message)
        self.pos = pos
        self.message = message


def conforms(value: TypeRef, target: TypeRef) -> bool:
    if value == NONE_T:
        return target.is_reference
    if not target.is_reference or not value.is_reference:
        return value.base == target.base
    if value.base != target.base:
        return False
    return target.is_separate or not value.is_separate


@dataclass
class Scope:
    """Names visible inside one method body."""

    program: Program
    cls: ClassDecl
    method: MethodDecl

    def __post_init__(self) -> None:
        self.vars: dict[str, TypeRef] = {}
        for n, t in self.method.formals:
            self.vars[n] = t
        for n, t in self.method.locals:
            self.vars[n] = t
        if self.method.return_type is not None:
            self.vars["Result"] = self.method.return_type

    def lookup_var(self, name: str) -> Optional[TypeRef]:
        """Type of a local/formal/Result or attribute of Current."""
        if name in self.vars:
            return self.vars[name]
        a = self.cls.attribute(name)
        return a.type if a is not None else None

    def is_local(self, name: str) -> bool:
        return name in self.vars

    def feature_type(self, pos: Pos, target_t: TypeRef, name: str, nargs: int) -> tuple[str, Optional[TypeRef]]:
        """Resolve ``target.name``; returns (kind, type) with kind in
        {"attribute", "query", "command"}."""
        if not target_t.is_reference or target_t == NONE_T:
            raise TypeError_(pos, f"call on non-reference type {target_t}")
        cls = self.program.cls(target_t.base)
        if cls is None:
            raise TypeError_(pos, f"unknown class {target_t.base!r}")
        attr = cls.attribute(name)
        if attr is not None:
            if nargs:
                raise TypeError_(pos, f"attribute {name!r} takes no arguments")
            return "attribute", _separated(attr.type, target_t)
        m = cls.method(name)
        if m is None:
            raise TypeError_(pos, f"class {cls.name} has no feature {name!r}")
        if m.return_type is None:
            return "command", None
        return "query", _separated(m.return_type, target_t)

    def type_of(self, e: Expr) -> TypeRef:
        if isinstance(e, IntLit):
            return INT_T
        if isinstance(e, BoolLit):
            return BOOL_T
        if isinstance(e, VoidLit):
            return NONE_T
        if isinstance(e, CurrentRef):
            return TypeRef(self.cls.name)
        if isinstance(e, Name):
            t = self.lookup_var(e.ident)
            if t is not None:
                return t
            m = self.cls.method(e.ident)
            if m is None:
                raise TypeError_(e.pos, f"unknown name {e.ident!r}")
            if m.return_type is None:
                raise TypeError_(e.pos, f"command {e.ident!r} used as expression")
            if m.formals:
                raise TypeError_(e.pos, f"{e.ident!r} expects {len(m.formals)} argument(s)")
            return m.return_type
        if isinstance(e, Call):
            target_t = TypeRef(self.cls.name) if e.target is None else self.type_of(e.target)
            kind, t = self.feature_type(e.pos, target_t, e.name, len(e.args))
            if kind == "command":
                raise TypeError_(e.pos, f"command {e.name!r} used as expression")
            if kind == "query":
                self.check_args(e.pos, target_t, e.name, e.args)
            return t
        if isinstance(e, BinOp):
            lt, rt = self.type_of(e.left), self.type_of(e.right)
            if e.op in ARITH_OPS:
                if lt != INT_T or rt != INT_T:
                    raise TypeError_(e.pos, f"operator {e.op!r} needs INTEGER operands")
                return INT_T
            if e.op in BOOL_OPS:
                if lt != BOOL_T or rt != BOOL_T:
                    raise TypeError_(e.pos, f"operator {e.op!r} needs BOOLEAN operands")
                return BOOL_T
            if e.op in ("=", "/="):
                if not (conforms(lt, rt) or conforms(rt, lt) or _same_class(lt, rt)):
                    raise TypeError_(e.pos, f"cannot compare {lt} with {rt}")
                return BOOL_T
            if e.op in COMPARE_OPS:
                if lt != INT_T or rt != INT_T:
                    raise TypeError_(e.pos, f"operator {e.op!r} needs INTEGER operands")
                return BOOL_T
            raise TypeError_(e.pos, f"unknown operator {e.op!r}")
        if isinstance(e, UnOp):
            t = self.type_of(e.operand)
            want = BOOL_T if e.op == "not" else INT_T
            if t != want:
                raise TypeError_(e.pos, f"operator {e.op!r} needs {want} operand")
            return want
        raise TypeError_((0, 0), f"unknown expression {e!r}")

    def check_args(self, pos: Pos, target_t: TypeRef, name: str, args: tuple[Expr, ...]) -> None:
        cls = self.program.cls(target_t.base)
        m = cls.method(name)
        if len(args) != len(m.formals):
            raise TypeError_(pos, f"{name!r} expects {len(m.formals)} argument(s), got {len(args)}")
        for a, (fname, ft) in zip(args, m.formals):
            at = self.type_of(a)
            if target_t.is_separate and ft.is_reference and not ft.is_separate:
                # the supplier would receive a reference it does not own
                raise TypeError_(getattr(a, "pos", pos), f"argument {fname!r} of separate call {name!r} must have separate type")
            if not conforms(at, ft):
                raise TypeError_(getattr(a, "pos", pos), f"argument {fname!r} of {name!r}: {at} does not conform to {ft}")


def _separated(t: TypeRef, via: TypeRef) -> TypeRef:
    if via.is_separate and t.is_reference:
        return TypeRef(t.base, True)
    return t


def _same_class(a: TypeRef, b: TypeRef) -> bool:
    return a.is_reference and b.is_reference and a.base == b.base


def iter_calls(e: Expr) -> Iterator[Call]:
    """Every call node inside ``e``, outermost first."""
    if isinstance(e, Call):
        yield e
        if e.target is not None:
            yield from iter_calls(e.target)
        for a in e.args:
            yield from iter_calls(a)
    elif isinstance(e, BinOp):
        yield from iter_calls(e.left)
        yield from iter_calls(e.right)
    elif isinstance(e, UnOp):
        yield from iter_calls(e.operand)


class Checker:
    def __init__(self, program: Program):
        self.program = program
        self.diags: list[Diagnostic] = []

    def report(self, pos: Pos, message: str) -> None:
        self.diags.append(Diagnostic(pos[0], pos[1], message))

    def run(self) -> list[Diagnostic]:
        p = self.program
        entry_cls = p.cls(p.entry[0])
        if entry_cls is None or entry_cls.method(p.entry[1]) is None:
            self.report((1, 1), f"entry method {p.entry[0]}.{p.entry[1]} not found")
        elif entry_cls.method(p.entry[1]).formals:
            self.report(entry_cls.method(p.entry[1]).pos, "entry method must not take arguments")
        for c in p.classes:
            for a in c.attributes:
                self.check_type(a.pos, a.type)
            for m in c.methods:
                self.check_method(c, m)
        return self.diags

    def check_type(self, pos: Pos, t: TypeRef) -> None:
        if t.is_reference and self.program.cls(t.base) is None:
            self.report(pos, f"unknown class {t.base!r}")

    def check_method(self, c: ClassDecl, m: MethodDecl) -> None:
        for n, t in m.formals + m.locals:
            self.check_type(m.pos, t)
            if c.attribute(n) is not None:
                self.report(m.pos, f"{n!r} shadows an attribute")
        if m.return_type is not None:
            self.check_type(m.pos, m.return_type)
        scope = Scope(self.program, c, m)
        controlled = frozenset(m.controlled_formals)
        cond = m.wait_condition
        if cond is not None:
            if not controlled:
                self.report(cond.pos, "precondition requires separate formals (wait condition)")
            else:
                self.check_wait_condition(scope, cond, controlled)
        self.check_body(scope, m.body, controlled)

    def check_wait_condition(self, scope: Scope, cond: Expr, controlled: frozenset[str]) -> None:
        try:
            t = scope.type_of(cond)
        except TypeError_ as err:
            self.report(err.pos, err.message)
            return
        if t != BOOL_T:
            self.report(cond.pos, "wait condition must be BOOLEAN")
        for call in iter_calls(cond):
            if call.target is None:
                self.report(call.pos, "wait condition may not call queries on Current")
            elif not (isinstance(call.target, Name) and call.target.ident in controlled):
                self.report(call.pos, "wait condition may only query controlled formals")

    def check_expr(self, scope: Scope, e: Expr, controlled: frozenset[str]) -> Optional[TypeRef]:
        try:
            t = scope.type_of(e)
        except TypeError_ as err:
            self.report(err.pos, err.message)
            return None
        self.check_controlled(scope, e, controlled)
        return t

    def check_controlled(self, scope: Scope, e: Expr, controlled: frozenset[str]) -> None:
        for call in iter_calls(e):
            if call.target is None:
                continue
            try:
                tt = scope.type_of(call.target)
            except TypeError_:
                continue
            if tt.is_separate and not (isinstance(call.target, Name) and call.target.ident in controlled):
                self.report(call.pos, "uncontrolled separate call")

    def check_body(self, scope: Scope, body: tuple[Stmt, ...], controlled: frozenset[str]) -> None:
        for s in body:
            self.check_stmt(scope, s, controlled)

    def check_stmt(self, scope: Scope, s: Stmt, controlled: frozenset[str]) -> None:
        if isinstance(s, Assign):
            if s.target == "Result" and not scope.method.is_query:
                self.report(s.pos, "Result used in a command")
                return
            tt = scope.lookup_var(s.target)
            if tt is None:
                self.report(s.pos, f"unknown name {s.target!r}")
                return
            if s.target in controlled:
                self.report(s.pos, f"assignment to controlled name {s.target!r}")
            elif s.target in dict(scope.method.formals):
                self.report(s.pos, f"assignment to formal {s.target!r}")
            vt = self.check_expr(scope, s.value, controlled)
            if vt is not None and not conforms(vt, tt):
                self.report(s.pos, f"cannot assign {vt} to {s.target!r} of type {tt}")
        elif isinstance(s, Create):
            tt = scope.lookup_var(s.target)
            if tt is None:
                self.report(s.pos, f"unknown name {s.target!r}")
                return
            if not tt.is_reference:
                self.report(s.pos, f"cannot create {s.target!r} of type {tt}")
                return
            cls = self.program.cls(tt.base)
            if cls is None:
                return
            if s.target in controlled:
                self.report(s.pos, f"creation of controlled name {s.target!r}")
            if s.ctor is None:
                return
            ctor = cls.method(s.ctor)
            if ctor is None or ctor.is_query:
                self.report(s.pos, f"class {cls.name} has no creation procedure {s.ctor!r}")
                return
            try:
                scope.check_args(s.pos, tt, s.ctor, s.args)
            except TypeError_ as err:
                self.report(err.pos, err.message)
            for a in s.args:
                self.check_controlled(scope, a, controlled)
        elif isinstance(s, CallStmt):
            call = s.call
            try:
                target_t = TypeRef(scope.cls.name) if call.target is None else scope.type_of(call.target)
                kind, _ = scope.feature_type(call.pos, target_t, call.name, len(call.args))
                if kind != "command":
                    self.report(call.pos, f"{kind} {call.name!r} used as instruction")
                    return
                scope.check_args(call.pos, target_t, call.name, call.args)
            except TypeError_ as err:
                self.report(err.pos, err.message)
                return
            self.check_controlled(scope, call, controlled)
        elif isinstance(s, If):
            t = self.check_expr(scope, s.cond, controlled)
            if t is not None and t != BOOL_T:
                self.report(s.cond.pos, "condition must be BOOLEAN")
            self.check_body(scope, s.then_body, controlled)
            self.check_body(scope, s.else_body, controlled)
        elif isinstance(s, Loop):
            self.check_body(scope, s.init, controlled)
            t = self.check_expr(scope, s.until, controlled)
            if t is not None and t != BOOL_T:
                self.report(s.until.pos, "loop exit condition must be BOOLEAN")
            self.check_body(scope, s.body, controlled)
        elif isinstance(s, SeparateBlock):
            for n in s.targets:
                t = scope.lookup_var(n)
                if t is None:
                    self.report(s.pos, f"unknown name {n!r}")
                elif not (t.is_reference and t.is_separate):
                    self.report(s.pos, f"separate block target {n!r} is not of separate type")
            if len(set(s.targets)) != len(s.targets):
                self.report(s.pos, "duplicate separate block target")
            self.check_body(scope, s.body, controlled | frozenset(s.targets))
        else:
            self.report((0, 0), f"unknown statement {s!r}")


def check(program: Program) -> list[Diagnostic]:
    """Return the diagnostics for ``program``; empty iff it is well formed."""
    return Checker(program).run()
