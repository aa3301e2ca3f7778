"""Compiled program representation: resolved expressions, actions, and one
control-flow graph per method.

The CFG is the static part of a configuration; it never changes during
exploration.  Every edge carries exactly one :data:`Action`.  Expressions on
edges are *pure*: queries have been hoisted into preceding ``QueryCall``
actions, so evaluating an expression never involves another handler.
"""

from __future__ import annotations

import operator
from dataclasses import dataclass, field
from typing import Iterator, NamedTuple, Optional, Union

from scoopw.values import Ref, RuntimeFault, Value, checked, format_value

# ------------------------------------------------------------ pure expressions


class PureExpr:
    __slots__ = ()

    def ev(self, locs: tuple, attrs: tuple, heap: tuple, me: Ref) -> Value:
        raise NotImplementedError

    def local_slots(self) -> Iterator[int]:
        return iter(())

    def _fields(self) -> tuple:
        return tuple(getattr(self, s) for s in type(self).__slots__)

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self._fields() == other._fields()

    def __hash__(self) -> int:
        return hash((type(self).__name__, self._fields()))

    def __repr__(self) -> str:
        return f"{type(self).__name__}({str(self)!r})"


class Const(PureExpr):
    __slots__ = ("value",)

    def __init__(self, value: Value):
        self.value = value

    def ev(self, locs, attrs, heap, me):
        return self.value

    def __str__(self) -> str:
        return format_value(self.value)


class Local(PureExpr):
    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name

    def ev(self, locs, attrs, heap, me):
        return locs[self.index]

    def local_slots(self):
        yield self.index

    def __str__(self) -> str:
        return self.name


class Attr(PureExpr):
    """Attribute of the current object."""

    __slots__ = ("index", "name")

    def __init__(self, index: int, name: str):
        self.index = index
        self.name = name

    def ev(self, locs, attrs, heap, me):
        return attrs[self.index]

    def __str__(self) -> str:
        return self.name


class SelfRef(PureExpr):
    __slots__ = ()

    def ev(self, locs, attrs, heap, me):
        return me

    def __str__(self) -> str:
        return "Current"


class Field(PureExpr):
    """Direct attribute read on a non-separate object of the same handler."""

    __slots__ = ("obj", "index", "name")

    def __init__(self, obj: PureExpr, index: int, name: str):
        self.obj = obj
        self.index = index
        self.name = name

    def ev(self, locs, attrs, heap, me):
        ref = self.obj.ev(locs, attrs, heap, me)
        if ref is None:
            raise RuntimeFault("VoidCall", f"attribute {self.name!r} read on Void")
        for o in heap:
            if o.oid == ref[1]:
                return o.attrs[self.index]
        raise RuntimeFault("VoidCall", f"dangling reference {ref!r}")

    def local_slots(self):
        return self.obj.local_slots()

    def __str__(self) -> str:
        return f"{self.obj}.{self.name}"


def _add(a, b):
    return checked(a + b)


def _sub(a, b):
    return checked(a - b)


def _mul(a, b):
    return checked(a * b)


_BINOPS = {
    "+": _add,
    "-": _sub,
    "*": _mul,
    "=": operator.eq,
    "/=": operator.ne,
    "<": operator.lt,
    "<=": operator.le,
    ">": operator.gt,
    ">=": operator.ge,
    # operands are already evaluated (strict), so bitwise ops on bools suffice
    "and": operator.and_,
    "or": operator.or_,
}


class Bin(PureExpr):
    __slots__ = ("op", "left", "right", "fn")

    def __init__(self, op: str, left: PureExpr, right: PureExpr):
        self.op = op
        self.left = left
        self.right = right
        self.fn = _BINOPS[op]

    def ev(self, locs, attrs, heap, me):
        # strict: both operands are always evaluated, left first
        a = self.left.ev(locs, attrs, heap, me)
        b = self.right.ev(locs, attrs, heap, me)
        return self.fn(a, b)

    def local_slots(self):
        yield from self.left.local_slots()
        yield from self.right.local_slots()

    def __str__(self) -> str:
        return f"({self.left} {self.op} {self.right})"


class Un(PureExpr):
    __slots__ = ("op", "operand")

    def __init__(self, op: str, operand: PureExpr):
        self.op = op
        self.operand = operand

    def ev(self, locs, attrs, heap, me):
        v = self.operand.ev(locs, attrs, heap, me)
        return (not v) if self.op == "not" else checked(-v)

    def local_slots(self):
        return self.operand.local_slots()

    def __str__(self) -> str:
        return f"not {self.operand}" if self.op == "not" else f"-({self.operand})"


# --------------------------------------------------------------------- actions


class Slot(NamedTuple):
    """Assignable location: a frame local (``kind == "l"``) or an attribute of
    the current object (``kind == "a"``)."""

    kind: str
    index: int
    name: str

    def __str__(self) -> str:
        return self.name


class AssignLocal(NamedTuple):
    lhs: Slot
    expr: PureExpr

    def __str__(self) -> str:
        return f"{self.lhs} := {self.expr}"


class CreateObject(NamedTuple):
    lhs: Slot
    cls: str
    ctor: Optional[str]
    args: tuple[PureExpr, ...]
    separate: bool

    def __str__(self) -> str:
        call = f".{self.ctor}({', '.join(map(str, self.args))})" if self.ctor else ""
        return f"create {'separate ' if self.separate else ''}{self.lhs}{call}"


class CommandCall(NamedTuple):
    target: PureExpr
    cls: str
    method: str
    args: tuple[PureExpr, ...]

    def __str__(self) -> str:
        return f"{self.target}.{self.method}({', '.join(map(str, self.args))})"


class QueryCall(NamedTuple):
    lhs: Slot
    target: PureExpr
    cls: str
    method: str
    args: tuple[PureExpr, ...]

    def __str__(self) -> str:
        return f"{self.lhs} := {self.target}.{self.method}({', '.join(map(str, self.args))})"


class EnterBlock(NamedTuple):
    block_id: int
    targets: tuple[PureExpr, ...]
    names: tuple[str, ...]
    wait_condition: Optional[str] = None

    def __str__(self) -> str:
        w = f" require {self.wait_condition}" if self.wait_condition else ""
        return f"enter#{self.block_id} separate {', '.join(self.names)}{w}"


class ExitBlock(NamedTuple):
    block_id: int
    retry: bool = False

    def __str__(self) -> str:
        return f"{'retry' if self.retry else 'exit'}#{self.block_id}"


class Guard(NamedTuple):
    expr: PureExpr
    polarity: bool

    def __str__(self) -> str:
        return f"[{self.expr}]" if self.polarity else f"[not {self.expr}]"


class Return(NamedTuple):
    def __str__(self) -> str:
        return "return"


Action = Union[AssignLocal, CreateObject, CommandCall, QueryCall, EnterBlock, ExitBlock, Guard, Return]


def action_exprs(a: Action) -> Iterator[PureExpr]:
    if isinstance(a, (AssignLocal, Guard)):
        yield a.expr
    elif isinstance(a, CreateObject):
        yield from a.args
    elif isinstance(a, (CommandCall, QueryCall)):
        yield a.target
        yield from a.args
    elif isinstance(a, EnterBlock):
        yield from a.targets


class Edge(NamedTuple):
    src: int
    action: Action
    dst: int


# ------------------------------------------------------------------ containers


@dataclass
class Cfg:
    cls: str
    method: str
    formals: tuple[str, ...]
    local_names: tuple[str, ...]
    local_types: tuple[Optional[str], ...]  # None for compiler temporaries
    local_separate: tuple[bool, ...]
    defaults: tuple[Value, ...]
    result_slot: Optional[int]
    temps: frozenset[int]
    controlled_formals: tuple[str, ...]
    wait_condition: Optional[str]
    n_states: int
    edges: tuple[Edge, ...]
    initial: int
    final: int
    synthetic: bool = False
    out: tuple[tuple[Edge, ...], ...] = field(default=(), repr=False)
    live_temps: tuple[frozenset[int], ...] = field(default=(), repr=False)

    @property
    def is_query(self) -> bool:
        return self.result_slot is not None

    @property
    def name(self) -> str:
        return f"{self.cls}.{self.method}"


@dataclass
class ClassInfo:
    name: str
    attr_names: tuple[str, ...]
    attr_types: tuple[str, ...]
    attr_separate: tuple[bool, ...]
    defaults: tuple[Value, ...]


@dataclass
class CfgSet:
    """Map (class, method) -> Cfg, plus class layouts and the entry point."""

    classes: dict[str, ClassInfo]
    methods: dict[tuple[str, str], Cfg]
    entry: tuple[str, str]
    source: Optional[str] = field(default=None, repr=False)

    def method(self, cls: str, name: str) -> Cfg:
        return self.methods[(cls, name)]

    def user_methods(self) -> list[Cfg]:
        return [c for c in self.methods.values() if not c.synthetic]
