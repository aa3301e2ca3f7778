"""Dynamic configurations: handlers, stacks, heaps, inboxes and topology.

Everything here is an immutable tuple.  ``repr`` of every record is the plain
tuple ``repr`` so that :func:`canonical_key` is a cheap, deterministic
serialization of the whole configuration.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from scoopw.frontend.cfg import CfgSet, PureExpr
from scoopw.values import Ref, RuntimeFault, Value, format_value

# ------------------------------------------------------------------- records


class Obj(NamedTuple):
    oid: int
    cls: str
    attrs: tuple

    __repr__ = tuple.__repr__


class Frame(NamedTuple):
    """One activation.  ``ret`` is the caller's lhs slot ``(kind, index)`` for
    local query calls; ``bottom`` marks the first frame of a served request
    (or of the entry method), whose Return is a synchronization step."""

    cls: str
    method: str
    obj: int
    pc: int
    locs: tuple
    ret: Optional[tuple]
    bottom: bool
    reply_to: Optional[int]

    __repr__ = tuple.__repr__


class Request(NamedTuple):
    kind: str  # "command" | "query"
    cls: str
    method: str
    target: int
    args: tuple
    client: int
    block: int
    seq: int
    reply_to: Optional[int]

    __repr__ = tuple.__repr__


class Subqueue(NamedTuple):
    """A private request area; its requests carry ``block=None`` because the
    owner field already names the block."""

    owner: int  # block instance id
    client: int
    closed: bool
    reqs: tuple

    __repr__ = tuple.__repr__


class BlockInstance(NamedTuple):
    """An active separate block of a handler.  ``targets`` are the handlers
    reserved by this block; ``seqs[i]`` is the last sequence number used for
    ``targets[i]``.  Placeholder blocks (every target already controlled or
    local) have ``id is None`` and no targets."""

    id: Optional[int]
    static: int
    targets: tuple
    seqs: tuple
    depth: int

    __repr__ = tuple.__repr__


class ErrorMarker(NamedTuple):
    kind: str
    witness: tuple

    __repr__ = tuple.__repr__


ERROR_KINDS = ("Deadlock", "MutexViolation", "OrderViolation", "VoidCall", "Stuck", "Overflow", "UncontrolledCall")

Inbox = tuple  # tuple[Request] under RQ, tuple[Subqueue] under QoQ/D-SCOOP


class Handler(NamedTuple):
    id: int
    node: int
    stack: tuple  # tuple[Frame], top is last
    heap: tuple  # tuple[Obj] in creation order
    inbox: Inbox
    blocks: tuple  # tuple[BlockInstance], innermost last
    waiting: Optional[tuple]  # (supplier, lhs kind, lhs index) while a query is pending
    proto: Optional[tuple]  # D-SCOOP: (nodes to prelock, how many acquired)

    __repr__ = tuple.__repr__

    @property
    def idle(self) -> bool:
        return not self.stack

    def obj(self, oid: int) -> Obj:
        for o in self.heap:
            if o.oid == oid:
                return o
        raise KeyError(oid)


class Configuration(NamedTuple):
    handlers: tuple  # tuple[Handler], index == id
    nodes: int
    locks: tuple  # RQ: sorted ((target handler, owner handler, block id), ...)
    prelocks: tuple  # D-SCOOP: sorted ((node, owner handler), ...)
    next_block_id: int
    error: Optional[ErrorMarker] = None

    __repr__ = tuple.__repr__

    @property
    def next_handler_id(self) -> int:
        return len(self.handlers)

    @property
    def next_object_id(self) -> int:
        # object ids are per handler (creation order within its heap)
        return sum(len(h.heap) for h in self.handlers)

    def replace_handler(self, h: Handler) -> "Configuration":
        hs = self[0]
        i = h[0]
        return Configuration(hs[:i] + (h,) + hs[i + 1 :], self[1], self[2], self[3], self[4], self[5])

    def with_error(self, kind: str, witness: tuple) -> "Configuration":
        if self.error is not None:
            return self
        return self._replace(error=ErrorMarker(kind, witness))


# ------------------------------------------------------------- construction


def new_frame(cfgs: CfgSet, cls: str, method: str, obj: int, args: tuple, *, ret=None, bottom=False, reply_to=None) -> Frame:
    cfg = cfgs.method(cls, method)
    locs = tuple(args) + cfg.defaults[len(args) :]
    return Frame(cls, method, obj, cfg.initial, locs, ret, bottom, reply_to)


def load_initial(cfgs: CfgSet) -> Configuration:
    """One root handler on node 0 executing the entry method on a fresh root
    object; nothing else exists yet."""
    cls, method = cfgs.entry
    info = cfgs.classes[cls]
    root = Obj(0, cls, info.defaults)
    frame = new_frame(cfgs, cls, method, 0, (), bottom=True)
    h = Handler(0, 0, (frame,), (root,), (), (), None, None)
    return Configuration((h,), 1, (), (), 0)


# --------------------------------------------------------------- evaluation


def eval_expr(cfg: Configuration, handler: int, e: PureExpr) -> Value:
    """Evaluate a pure expression in the active frame of ``handler``.

    Raises :class:`RuntimeFault` (VoidCall, Overflow); the engine turns that
    into an error configuration."""
    h = cfg.handlers[handler]
    f = h.stack[-1]
    return e.ev(f.locs, h.obj(f.obj).attrs, h.heap, Ref(h.id, f.obj))


def status(cfg: Configuration, handler: int) -> str:
    """Status visible from the handler record alone: Idle, WaitingQuery,
    WaitingPrelock or Executing.  The engine refines Executing into
    WaitingLock when a block reservation is disabled."""
    h = cfg.handlers[handler]
    if not h.stack:
        return "Idle"
    if h.waiting is not None:
        return "WaitingQuery"
    if h.proto is not None:
        return "WaitingPrelock"
    return "Executing"


# --------------------------------------------------------- canonicalization


def block_ids(cfg: Configuration) -> list[int]:
    """Live block-instance ids in deterministic traversal order."""
    seen: dict[int, None] = {}
    for h in cfg.handlers:
        for b in h.blocks:
            if b.id is not None:
                seen.setdefault(b.id)
        for item in h.inbox:
            if type(item) is Subqueue:
                seen.setdefault(item.owner)
            else:
                seen.setdefault(item.block)
    for _, _, b in cfg.locks:
        seen.setdefault(b)
    return list(seen)


def normalize(cfg: Configuration) -> tuple[Configuration, dict[int, int]]:
    """Rename block instances to 0, 1, ... by traversal order.

    Block ids are pure names, so two configurations that differ only in them
    are the same state; without this, every wait-condition retry or loop
    iteration would mint a new state."""
    ids = block_ids(cfg)
    mapping = {b: i for i, b in enumerate(ids)}
    if cfg.next_block_id == len(ids) and all(k == v for k, v in mapping.items()):
        return cfg, mapping
    m = mapping.__getitem__
    handlers = []
    for h in cfg.handlers:
        if not h.blocks and (not h.inbox or (type(h.inbox[0]) is Subqueue and all(mapping[q[0]] == q[0] for q in h.inbox))):
            handlers.append(h)
            continue
        blocks = tuple(b if b[0] is None else BlockInstance(m(b[0]), b[1], b[2], b[3], b[4]) for b in h.blocks)
        inbox = []
        for item in h.inbox:
            if type(item) is Subqueue:
                inbox.append(Subqueue(m(item[0]), item[1], item[2], item[3]))
            else:
                inbox.append(Request(*item[:6], m(item[6]), item[7], item[8]))
        handlers.append(Handler(h[0], h[1], h[2], h[3], tuple(inbox), blocks, h[6], h[7]))
    locks = tuple(sorted((t, o, m(b)) for t, o, b in cfg.locks))
    return Configuration(tuple(handlers), cfg.nodes, locks, cfg.prelocks, len(ids), cfg.error), mapping


def canonical_key(cfg: Configuration) -> bytes:
    return repr(normalize(cfg)[0]).encode()


# ------------------------------------------------------------------------ gc


def gc(cfg: Configuration, cfgs: CfgSet) -> Configuration:
    """Reset dead compiler temporaries and drop closed, drained subqueues.

    Heap objects are never collected, even when unreachable."""
    changed = False
    handlers = list(cfg.handlers)
    for i, h in enumerate(handlers):
        stack = h.stack
        new_stack = stack
        for d, f in enumerate(stack):
            c = cfgs.method(f.cls, f.method)
            if not c.temps:
                continue
            live = c.live_temps[f.pc]
            locs = f.locs
            if any(locs[t] is not None and t not in live and not _is_ret_slot(stack, d, t) for t in c.temps):
                locs = tuple(
                    None if (j in c.temps and j not in live and not _is_ret_slot(stack, d, j)) else v
                    for j, v in enumerate(locs)
                )
                if new_stack is stack:
                    new_stack = list(stack)
                new_stack[d] = Frame(f[0], f[1], f[2], f[3], locs, f[5], f[6], f[7])
        inbox = h.inbox
        if inbox and isinstance(inbox[0], Subqueue) and any(s.closed and not s.reqs for s in inbox):
            inbox = tuple(s for s in inbox if not (s.closed and not s.reqs))
        if new_stack is not stack or inbox is not h.inbox:
            handlers[i] = Handler(h[0], h[1], tuple(new_stack), h[3], inbox, h[5], h[6], h[7])
            changed = True
    return Configuration(tuple(handlers), cfg[1], cfg[2], cfg[3], cfg[4], cfg[5]) if changed else cfg


def _is_ret_slot(stack: tuple, depth: int, index: int) -> bool:
    # a caller's pending query result slot is written on return; keep it
    if depth + 1 < len(stack):
        r = stack[depth + 1].ret
        return r is not None and r[0] == "l" and r[1] == index
    return False


# ---------------------------------------------------------------- debug dump


def dump(cfg: Configuration) -> str:
    """Line-oriented rendering used by golden tests and reports."""
    lines = [f"configuration nodes={cfg.nodes} objects={cfg.next_object_id} blocks={cfg.next_block_id}"]
    if cfg.error is not None:
        lines.append(f"error {cfg.error.kind} {cfg.error.witness!r}")
    for t, o, b in cfg.locks:
        lines.append(f"lock h{t} owner=h{o} block={b}")
    for n, o in cfg.prelocks:
        lines.append(f"prelock n{n} owner=h{o}")
    for h in cfg.handlers:
        st = status(cfg, h.id)
        lines.append(f"handler h{h.id} node=n{h.node} status={st}")
        for o in h.heap:
            attrs = " ".join(format_value(v) for v in o.attrs)
            lines.append(f"  object #{o.oid} {o.cls} [{attrs}]")
        for f in h.stack:
            locs = " ".join(format_value(v) for v in f.locs)
            tag = " bottom" if f.bottom else ""
            reply = f" reply_to=h{f.reply_to}" if f.reply_to is not None else ""
            lines.append(f"  frame {f.cls}.{f.method} obj=#{f.obj} pc={f.pc} [{locs}]{tag}{reply}")
        for b in h.blocks:
            ts = ",".join(f"h{t}:{s}" for t, s in zip(b.targets, b.seqs))
            lines.append(f"  block {b.id if b.id is not None else '-'} static={b.static} depth={b.depth} [{ts}]")
        if h.waiting is not None:
            lines.append(f"  waiting query on h{h.waiting[0]}")
        if h.proto is not None:
            lines.append(f"  prelocking nodes={list(h.proto[0])} acquired={h.proto[1]}")
        for item in h.inbox:
            if isinstance(item, Subqueue):
                state = "closed" if item.closed else "open"
                lines.append(f"  subqueue block={item.owner} {state}")
                for r in item.reqs:
                    lines.append(f"    {_fmt_request(r)}")
            else:
                lines.append(f"  queued {_fmt_request(item)}")
    return "\n".join(lines) + "\n"


def _fmt_request(r: Request) -> str:
    args = ", ".join(format_value(v) for v in r.args)
    return f"{r.kind} {r.cls}.{r.method}({args}) on #{r.target} from h{r.client}" + (f" block={r.block}" if r.block is not None else "") + f" seq={r.seq}"


# ---------------------------------------------------------------- invariants


def heap_refs_ok(cfg: Configuration) -> bool:
    """Every reference points to an object in its handler's heap."""
    objs = {(h.id, o.oid) for h in cfg.handlers for o in h.heap}

    def ok(v: Value) -> bool:
        return not isinstance(v, tuple) or tuple(v) in objs

    for h in cfg.handlers:
        for o in h.heap:
            if not all(ok(v) for v in o.attrs):
                return False
        for f in h.stack:
            if not all(ok(v) for v in f.locs) or (h.id, f.obj) not in objs:
                return False
        for item in h.inbox:
            reqs = item.reqs if isinstance(item, Subqueue) else (item,)
            for r in reqs:
                if not all(ok(v) for v in r.args):
                    return False
    return True


__all__ = [
    "BlockInstance",
    "Configuration",
    "ERROR_KINDS",
    "ErrorMarker",
    "Frame",
    "Handler",
    "Obj",
    "Request",
    "RuntimeFault",
    "Subqueue",
    "block_ids",
    "canonical_key",
    "dump",
    "eval_expr",
    "gc",
    "heap_refs_ok",
    "load_initial",
    "new_frame",
    "normalize",
    "status",
]
