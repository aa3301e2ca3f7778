"""Lowering of checked mini-SCOOP methods to control-flow graphs."""

from __future__ import annotations

from typing import Optional

from scoopw.frontend.ast import (
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
    Program,
    SeparateBlock,
    Stmt,
    TypeRef,
    UnOp,
    VoidLit,
)
from scoopw.frontend.checker import Scope, check
from scoopw.frontend.cfg import (
    Action,
    AssignLocal,
    Attr,
    Bin,
    Cfg,
    CfgSet,
    ClassInfo,
    CommandCall,
    Const,
    CreateObject,
    Edge,
    EnterBlock,
    ExitBlock,
    Field,
    Guard,
    Local,
    PureExpr,
    QueryCall,
    Return,
    SelfRef,
    Slot,
    Un,
    action_exprs,
)
from scoopw.frontend.printer import format_expr
from scoopw.values import default_value

_EPS = None  # placeholder action for edges removed before the CFG is finalized


class CompileError(Exception):
    pass


class _Builder:
    """Accumulates raw edges (with epsilon edges) for one method."""

    def __init__(self, program: Program, cls: ClassDecl, method: MethodDecl):
        self.scope = Scope(program, cls, method)
        self.program = program
        self.cls = cls
        self.method = method
        self.n = 1  # state 0 is the initial state
        self.cur = 0
        self.raw: list[tuple[int, Optional[Action], int]] = []
        self.names: list[str] = []
        self.types: list[Optional[TypeRef]] = []
        self.index: dict[str, int] = {}
        for n, t in method.formals + method.locals:
            self._declare(n, t)
        if method.return_type is not None:
            self._declare("Result", method.return_type)
        self.temps: list[int] = []
        self.next_block = 0

    def _declare(self, name: str, t: Optional[TypeRef]) -> int:
        self.index[name] = len(self.names)
        self.names.append(name)
        self.types.append(t)
        return self.index[name]

    def fresh_state(self) -> int:
        self.n += 1
        return self.n - 1

    def fresh_temp(self) -> Slot:
        name = f"$t{len(self.temps)}"
        i = self._declare(name, None)
        self.temps.append(i)
        return Slot("l", i, name)

    def emit(self, action: Optional[Action], dst: Optional[int] = None) -> int:
        if dst is None:
            dst = self.fresh_state()
        self.raw.append((self.cur, action, dst))
        self.cur = dst
        return dst

    # -- names

    def slot(self, name: str) -> Slot:
        if name in self.index:
            return Slot("l", self.index[name], name)
        attrs = [a.name for a in self.cls.attributes]
        if name in attrs:
            return Slot("a", attrs.index(name), name)
        raise CompileError(f"unknown name {name!r} in {self.cls.name}.{self.method.name}")

    def read(self, name: str) -> PureExpr:
        s = self.slot(name)
        return Local(s.index, name) if s.kind == "l" else Attr(s.index, name)

    # -- expressions

    def lower(self, e: Expr) -> PureExpr:
        """Emit hoisted query calls for ``e`` and return its pure remainder."""
        if isinstance(e, IntLit):
            return Const(e.value)
        if isinstance(e, BoolLit):
            return Const(bool(e.value))
        if isinstance(e, VoidLit):
            return Const(None)
        if isinstance(e, CurrentRef):
            return SelfRef()
        if isinstance(e, Name):
            if e.ident in self.index or self.cls.attribute(e.ident) is not None:
                return self.read(e.ident)
            return self._hoist(SelfRef(), self.cls.name, e.ident, ())
        if isinstance(e, Call):
            if e.target is None:
                args = tuple(self.lower(a) for a in e.args)
                return self._hoist(SelfRef(), self.cls.name, e.name, args)
            tt = self.scope.type_of(e.target)
            target_cls = self.program.cls(tt.base)
            target = self.lower(e.target)
            attr = target_cls.attribute(e.name)
            if attr is not None and not tt.is_separate:
                idx = [a.name for a in target_cls.attributes].index(e.name)
                return Field(target, idx, e.name)
            args = tuple(self.lower(a) for a in e.args)
            return self._hoist(target, tt.base, e.name, args)
        if isinstance(e, BinOp):
            left = self.lower(e.left)
            right = self.lower(e.right)
            return Bin(e.op, left, right)
        if isinstance(e, UnOp):
            return Un(e.op, self.lower(e.operand))
        raise CompileError(f"cannot lower {e!r}")

    def _hoist(self, target: PureExpr, cls: str, name: str, args: tuple[PureExpr, ...]) -> PureExpr:
        tmp = self.fresh_temp()
        self.emit(QueryCall(tmp, target, cls, name, args))
        return Local(tmp.index, tmp.name)

    # -- statements

    def stmts(self, body: tuple[Stmt, ...]) -> None:
        for s in body:
            self.stmt(s)

    def stmt(self, s: Stmt) -> None:
        if isinstance(s, Assign):
            value = self.lower(s.value)
            self.emit(AssignLocal(self.slot(s.target), value))
        elif isinstance(s, Create):
            t = self.scope.lookup_var(s.target)
            args = tuple(self.lower(a) for a in s.args)
            self.emit(CreateObject(self.slot(s.target), t.base, s.ctor, args, t.is_separate))
        elif isinstance(s, CallStmt):
            call = s.call
            if call.target is None:
                target: PureExpr = SelfRef()
                cls = self.cls.name
            else:
                cls = self.scope.type_of(call.target).base
                target = self.lower(call.target)
            args = tuple(self.lower(a) for a in call.args)
            self.emit(CommandCall(target, cls, call.name, args))
        elif isinstance(s, If):
            cond = self.lower(s.cond)
            head = self.cur
            join = self.fresh_state()
            self.emit(Guard(cond, True))
            self.stmts(s.then_body)
            self.emit(_EPS, join)
            self.cur = head
            self.emit(Guard(cond, False))
            self.stmts(s.else_body)
            self.emit(_EPS, join)
        elif isinstance(s, Loop):
            self.stmts(s.init)
            top = self.cur
            cond = self.lower(s.until)
            test = self.cur
            exit_ = self.fresh_state()
            self.emit(Guard(cond, False))
            self.stmts(s.body)
            self.emit(_EPS, top)
            self.cur = test
            self.emit(Guard(cond, True), exit_)
        elif isinstance(s, SeparateBlock):
            bid = self.next_block
            self.next_block += 1
            targets = tuple(self.read(n) for n in s.targets)
            self.emit(EnterBlock(bid, targets, s.targets))
            self.stmts(s.body)
            self.emit(ExitBlock(bid))
        else:
            raise CompileError(f"cannot lower statement {s!r}")

    def method_body(self) -> int:
        m = self.method
        controlled = m.controlled_formals
        if controlled:
            bid = self.next_block
            self.next_block += 1
            cond_src = format_expr(m.wait_condition) if m.wait_condition is not None else None
            targets = tuple(self.read(n) for n in controlled)
            enter = self.cur
            self.emit(EnterBlock(bid, targets, controlled, cond_src))
            if m.wait_condition is not None:
                cond = self.lower(m.wait_condition)
                test = self.cur
                self.emit(Guard(cond, False))
                self.emit(ExitBlock(bid, retry=True))
                self.emit(_EPS, enter)
                self.cur = test
                self.emit(Guard(cond, True))
            self.stmts(m.body)
            self.emit(ExitBlock(bid))
        else:
            self.stmts(m.body)
        return self.emit(Return())


def _finalize(b: _Builder, final_raw: int) -> tuple[tuple[Edge, ...], int, int]:
    """Collapse epsilon edges and renumber states in depth-first order."""
    alias: dict[int, int] = {}
    for src, action, dst in b.raw:
        if action is _EPS:
            alias[src] = dst

    def resolve(s: int) -> int:
        seen = set()
        while s in alias:
            if s in seen:
                raise CompileError("epsilon cycle")
            seen.add(s)
            s = alias[s]
        return s

    out: dict[int, list[tuple[Action, int]]] = {}
    for src, action, dst in b.raw:
        if action is _EPS:
            continue
        out.setdefault(resolve(src), []).append((action, resolve(dst)))

    order: dict[int, int] = {}
    stack = [resolve(0)]
    while stack:
        s = stack.pop()
        if s in order:
            continue
        order[s] = len(order)
        for _, dst in reversed(out.get(s, [])):
            if dst not in order:
                stack.append(dst)
    edges = []
    for s in sorted(order, key=order.get):
        for action, dst in out.get(s, []):
            edges.append(Edge(order[s], action, order[dst]))
    return tuple(edges), len(order), order[resolve(final_raw)]


def _liveness(n_states: int, edges: tuple[Edge, ...], temps: frozenset[int]) -> tuple[frozenset[int], ...]:
    """Temporaries live on entry to each state (backward may-analysis)."""
    uses: list[frozenset[int]] = []
    defs: list[frozenset[int]] = []
    for e in edges:
        used = set()
        for x in action_exprs(e.action):
            used.update(i for i in x.local_slots() if i in temps)
        uses.append(frozenset(used))
        lhs = getattr(e.action, "lhs", None)
        defs.append(frozenset({lhs.index}) if lhs is not None and lhs.kind == "l" and lhs.index in temps else frozenset())
    live = [frozenset()] * n_states
    changed = True
    while changed:
        changed = False
        for i in range(len(edges) - 1, -1, -1):
            e = edges[i]
            new = live[e.src] | uses[i] | (live[e.dst] - defs[i])
            if new != live[e.src]:
                live[e.src] = new
                changed = True
    return tuple(live)


def compile_method(program: Program, cls: ClassDecl, method: MethodDecl) -> Cfg:
    b = _Builder(program, cls, method)
    final_raw = b.method_body()
    edges, n_states, final = _finalize(b, final_raw)
    temps = frozenset(b.temps)
    out: list[list[Edge]] = [[] for _ in range(n_states)]
    for e in edges:
        out[e.src].append(e)
    types = tuple(t.base if t is not None else None for t in b.types)
    cfg = Cfg(
        cls=cls.name,
        method=method.name,
        formals=tuple(n for n, _ in method.formals),
        local_names=tuple(b.names),
        local_types=types,
        local_separate=tuple(bool(t and t.is_separate) for t in b.types),
        defaults=tuple(default_value(t) for t in types),
        result_slot=b.index.get("Result") if method.is_query else None,
        temps=temps,
        controlled_formals=method.controlled_formals,
        wait_condition=format_expr(method.wait_condition) if method.wait_condition is not None else None,
        n_states=n_states,
        edges=edges,
        initial=0,
        final=final,
    )
    cfg.out = tuple(tuple(o) for o in out)
    cfg.live_temps = _liveness(n_states, edges, temps)
    return cfg


def _getter(cls: ClassDecl, index: int) -> Cfg:
    """Synthetic query returning one attribute, so that remote attribute reads
    travel through the request queues like any other query."""
    a = cls.attributes[index]
    result = Slot("l", 0, "Result")
    edges = (Edge(0, AssignLocal(result, Attr(index, a.name)), 1), Edge(1, Return(), 2))
    cfg = Cfg(
        cls=cls.name,
        method=a.name,
        formals=(),
        local_names=("Result",),
        local_types=(a.type.base,),
        local_separate=(a.type.is_separate,),
        defaults=(default_value(a.type.base),),
        result_slot=0,
        temps=frozenset(),
        controlled_formals=(),
        wait_condition=None,
        n_states=3,
        edges=edges,
        initial=0,
        final=2,
        synthetic=True,
    )
    cfg.out = ((edges[0],), (edges[1],), ())
    cfg.live_temps = (frozenset(),) * 3
    return cfg


def compile_program(program: Program, source: Optional[str] = None) -> CfgSet:
    """Compile a checked program; one Cfg per method plus attribute getters."""
    classes: dict[str, ClassInfo] = {}
    methods: dict[tuple[str, str], Cfg] = {}
    for c in program.classes:
        types = tuple(a.type.base for a in c.attributes)
        classes[c.name] = ClassInfo(
            c.name,
            tuple(a.name for a in c.attributes),
            types,
            tuple(a.type.is_separate for a in c.attributes),
            tuple(default_value(t) for t in types),
        )
        for m in c.methods:
            methods[(c.name, m.name)] = compile_method(program, c, m)
        for i in range(len(c.attributes)):
            methods[(c.name, c.attributes[i].name)] = _getter(c, i)
    return CfgSet(classes, methods, program.entry, source)


def compile_source(source: str) -> CfgSet:
    """Parse, check and compile; raises CompileError listing diagnostics."""
    from scoopw.frontend.parser import parse

    program = parse(source)
    diags = check(program)
    if diags:
        raise CompileError("\n".join(str(d) for d in diags))
    return compile_program(program, source)


def lint(cfgs: CfgSet) -> list[str]:
    """Post-compile consistency checks over every user method's Cfg.

    Verifies slot ranges, properly nested Enter/ExitBlock pairs with a
    consistent block stack on every path, an empty block stack at Return, and
    that calls on separate-typed locals/attributes happen only while a block
    controlling that name is active.
    """
    problems: list[str] = []
    for cfg in cfgs.user_methods():
        info = cfgs.classes[cfg.cls]
        blocks_at: dict[int, tuple[int, ...]] = {cfg.initial: ()}
        names_of: dict[int, tuple[str, ...]] = {}
        work = [cfg.initial]
        while work:
            s = work.pop()
            stack = blocks_at[s]
            for e in cfg.out[s]:
                a = e.action
                for x in action_exprs(a):
                    for i in x.local_slots():
                        if i >= len(cfg.local_names):
                            problems.append(f"{cfg.name}: edge {e.src}->{e.dst} uses bad slot {i}")
                lhs = getattr(a, "lhs", None)
                if lhs is not None:
                    limit = len(cfg.local_names) if lhs.kind == "l" else len(info.attr_names)
                    if lhs.index >= limit:
                        problems.append(f"{cfg.name}: edge {e.src}->{e.dst} assigns bad slot {lhs}")
                new = stack
                if isinstance(a, EnterBlock):
                    new = stack + (a.block_id,)
                    names_of[a.block_id] = a.names
                elif isinstance(a, ExitBlock):
                    if not stack or stack[-1] != a.block_id:
                        problems.append(f"{cfg.name}: unmatched exit of block {a.block_id} at {e.src}")
                    else:
                        new = stack[:-1]
                elif isinstance(a, Return) and stack:
                    problems.append(f"{cfg.name}: return inside block {stack[-1]}")
                elif isinstance(a, (CommandCall, QueryCall)):
                    tname = _separate_name(cfg, info, a.target)
                    if tname is not None and not any(tname in names_of.get(b, ()) for b in stack):
                        problems.append(f"{cfg.name}: uncontrolled call on {tname!r} at {e.src}")
                if e.dst in blocks_at:
                    if blocks_at[e.dst] != new:
                        problems.append(f"{cfg.name}: inconsistent block nesting at state {e.dst}")
                else:
                    blocks_at[e.dst] = new
                    work.append(e.dst)
        if len(blocks_at) != cfg.n_states:
            problems.append(f"{cfg.name}: unreachable states")
        if cfg.out[cfg.final]:
            problems.append(f"{cfg.name}: final state has outgoing edges")
    return problems


def _separate_name(cfg: Cfg, info: ClassInfo, target: PureExpr) -> Optional[str]:
    if isinstance(target, Local) and cfg.local_separate[target.index]:
        return target.name
    if isinstance(target, Attr) and info.attr_separate[target.index]:
        return target.name
    return None
