"""Macro-step scheduler.

Each macro step runs every handler (ascending id) through its purely local
actions until it is idle or at a synchronization point, then applies exactly
one synchronization step.  The model-specific parts of synchronization
(reservation, queueing, serving, release) are delegated to an
:class:`~scoopw.models.base.ExecutionModel`.
"""

from __future__ import annotations

from typing import NamedTuple, Optional

from scoopw.frontend.cfg import (
    AssignLocal,
    CfgSet,
    CommandCall,
    CreateObject,
    EnterBlock,
    ExitBlock,
    Guard,
    QueryCall,
    Return,
)
from scoopw.models.base import ExecutionModel, WaitEdge
from scoopw.state import (
    BlockInstance,
    Configuration,
    Frame,
    Handler,
    Obj,
    Request,
    gc,
    new_frame,
    status,
)
from scoopw.values import Ref, RuntimeFault

STACK_LIMIT = 64
STEP_BUDGET = 100_000

SYNC_RULES = (
    "create_separate",
    "reserve",
    "prelock",
    "lock",
    "enqueue_command",
    "enqueue_query",
    "dequeue_execute",
    "query_reply",
    "wait_retry",
    "block_exit",
    "release",
    "handler_idle",
)


class Label(NamedTuple):
    handler: int
    rule: str
    detail: tuple = ()

    __repr__ = tuple.__repr__

    def __str__(self) -> str:
        d = " ".join(str(x) for x in self.detail)
        return f"h{self.handler}:{self.rule}" + (f" {d}" if d else "")


class _Sync(Exception):
    """Raised inside a local run when the handler reaches a sync point."""


def _write(h: Handler, depth: int, slot: tuple, value) -> Handler:
    """Store ``value`` into local or attribute ``slot`` of frame ``depth``."""
    stack = h.stack
    f = stack[depth]
    if slot[0] == "l":
        locs = f.locs
        i = slot[1]
        f = Frame(f[0], f[1], f[2], f[3], locs[:i] + (value,) + locs[i + 1 :], f[5], f[6], f[7])
        return _with_stack(h, stack[:depth] + (f,) + stack[depth + 1 :])
    heap = list(h.heap)
    for k, o in enumerate(heap):
        if o.oid == f.obj:
            attrs = o.attrs
            i = slot[1]
            heap[k] = o._replace(attrs=attrs[:i] + (value,) + attrs[i + 1 :])
            return h._replace(heap=tuple(heap))
    raise KeyError(f.obj)


def _set_pc(h: Handler, pc: int) -> Handler:
    f = h.stack[-1]
    f = Frame(f[0], f[1], f[2], pc, f[4], f[5], f[6], f[7])
    return Handler(h[0], h[1], h.stack[:-1] + (f,), h[3], h[4], h[5], h[6], h[7])


def _with_stack(h: Handler, stack: tuple) -> Handler:
    return Handler(h[0], h[1], stack, h[3], h[4], h[5], h[6], h[7])


def _eval(h: Handler, e):
    f = h.stack[-1]
    return e.ev(f.locs, h.obj(f.obj).attrs, h.heap, Ref(h.id, f.obj))


class Engine:
    """Successor function for one compiled program under one model."""

    def __init__(self, cfgs: CfgSet, model: ExecutionModel, *, stack_limit: int = STACK_LIMIT, step_budget: int = STEP_BUDGET):
        self.cfgs = cfgs
        self.model = model
        self.stack_limit = stack_limit
        self.step_budget = step_budget
        self._out = {k: c.out for k, c in cfgs.methods.items()}

    # ------------------------------------------------------------- helpers

    def edges(self, f: Frame):
        return self._out[(f.cls, f.method)][f.pc]

    def controlled(self, h: Handler) -> set[int]:
        s = {h.id}
        for b in h.blocks:
            s.update(b.targets)
        return s

    def needed_targets(self, h: Handler, action: EnterBlock) -> tuple[int, ...]:
        """Handlers an EnterBlock must newly reserve (Void raises VoidCall)."""
        ctl = self.controlled(h)
        out: list[int] = []
        for e, name in zip(action.targets, action.names):
            v = _eval(h, e)
            if v is None:
                raise RuntimeFault("VoidCall", f"separate block target {name!r} is Void")
            if v[0] not in ctl and v[0] not in out:
                out.append(v[0])
        return tuple(out)

    def push(self, h: Handler, frame: Frame) -> Handler:
        if len(h.stack) >= self.stack_limit:
            raise RuntimeFault("Stuck", f"stack depth limit {self.stack_limit} exceeded on h{h.id}")
        return _with_stack(h, h.stack + (frame,))

    # ---------------------------------------------------------- local steps

    def _local_step(self, h: Handler) -> Handler:
        """Apply one local action of ``h``; raise _Sync at a sync point."""
        f = h.stack[-1]
        out = self.edges(f)
        if len(out) == 2:
            e0 = out[0]
            v = _eval(h, e0.action.expr)
            e = e0 if v == e0.action.polarity else out[1]
            return _set_pc(h, e.dst)
        e = out[0]
        a = e.action
        t = type(a)
        if t is AssignLocal:
            v = _eval(h, a.expr)
            return _write(_set_pc(h, e.dst), len(h.stack) - 1, a.lhs[:2], v)
        if t is CommandCall or t is QueryCall:
            target = _eval(h, a.target)
            if target is None:
                raise RuntimeFault("VoidCall", f"call of {a.method!r} on Void")
            if target[0] != h.id:
                raise _Sync
            args = tuple(_eval(h, x) for x in a.args)
            h = _set_pc(h, e.dst)
            ret = None
            if t is QueryCall:
                ret = a.lhs[:2]
                h = _write(h, len(h.stack) - 1, ret, None)
            return self.push(h, new_frame(self.cfgs, a.cls, a.method, target[1], args, ret=ret))
        if t is Guard:
            v = _eval(h, a.expr)
            if v != a.polarity:
                raise AssertionError("single guard edge evaluated false")
            return _set_pc(h, e.dst)
        if t is CreateObject:
            if a.separate:
                raise _Sync
            args = tuple(_eval(h, x) for x in a.args)
            oid = len(h.heap)
            h = h._replace(heap=h.heap + (Obj(oid, a.cls, self.cfgs.classes[a.cls].defaults),))
            h = _write(_set_pc(h, e.dst), len(h.stack) - 1, a.lhs[:2], Ref(h.id, oid))
            if a.ctor is not None:
                h = self.push(h, new_frame(self.cfgs, a.cls, a.ctor, oid, args))
            return h
        if t is EnterBlock:
            if self.needed_targets(h, a):
                raise _Sync
            ph = BlockInstance(None, a.block_id, (), (), len(h.stack) - 1)
            return _set_pc(h, e.dst)._replace(blocks=h.blocks + (ph,))
        if t is ExitBlock:
            if a.retry or h.blocks[-1].id is not None:
                raise _Sync
            return _set_pc(h, e.dst)._replace(blocks=h.blocks[:-1])
        if t is Return:
            if f.bottom:
                raise _Sync
            h = _with_stack(h, h.stack[:-1])
            if f.ret is not None:
                cfg = self.cfgs.method(f.cls, f.method)
                h = _write(h, len(h.stack) - 1, f.ret, f.locs[cfg.result_slot])
            return h
        raise AssertionError(f"unknown action {a!r}")

    def run_local(self, cfg: Configuration, hid: int) -> Configuration:
        """Advance one handler as long as possible."""
        h = cfg.handlers[hid]
        start = h
        steps = 0
        try:
            while h.stack and h.waiting is None and h.proto is None:
                try:
                    h = self._local_step(h)
                except _Sync:
                    break
                steps += 1
                if steps > self.step_budget:
                    raise RuntimeFault("Stuck", f"local step budget exceeded on h{hid}")
        except RuntimeFault as fault:
            return cfg.replace_handler(h).with_error(fault.kind, (hid, fault.detail))
        return cfg if h is start else cfg.replace_handler(h)

    def local_macro_step(self, cfg: Configuration) -> Configuration:
        if cfg.error is not None:
            return cfg
        for hid in range(len(cfg.handlers)):
            cfg = self.run_local(cfg, hid)
            if cfg.error is not None:
                return cfg
        return gc(cfg, self.cfgs)

    def run_query_locally(self, cfg: Configuration, hid: int, req: Request) -> Configuration:
        """Execute a request on a handler's own object synchronously, without
        touching any inbox, and return once its frame has been popped."""
        h = cfg.handlers[hid]
        depth = len(h.stack)
        h = self.push(h, new_frame(self.cfgs, req.cls, req.method, req.target, req.args))
        steps = 0
        while len(h.stack) > depth:
            h = self._local_step(h)
            steps += 1
            if steps > self.step_budget:
                raise RuntimeFault("Stuck", f"local step budget exceeded on h{hid}")
        return cfg.replace_handler(h)

    # ----------------------------------------------------------- sync steps

    def enter_block(self, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> tuple[Configuration, int]:
        """Push a fresh block instance for the EnterBlock at ``hid``'s pc."""
        h = cfg.handlers[hid]
        e = self.edges(h.stack[-1])[0]
        bid = cfg.next_block_id
        b = BlockInstance(bid, e.action.block_id, needed, (0,) * len(needed), len(h.stack) - 1)
        h = _set_pc(h, e.dst)._replace(blocks=h.blocks + (b,), proto=None)
        return cfg._replace(next_block_id=bid + 1).replace_handler(h), bid

    def start_request(self, cfg: Configuration, hid: int, req: Request, inbox: tuple) -> Configuration:
        h = cfg.handlers[hid]
        frame = new_frame(self.cfgs, req.cls, req.method, req.target, req.args, bottom=True, reply_to=req.reply_to)
        return cfg.replace_handler(h._replace(stack=(frame,), inbox=inbox))

    def _sync_handler(self, cfg: Configuration, hid: int) -> list[tuple[Label, Configuration]]:
        h = cfg.handlers[hid]
        model = self.model
        if not h.stack:
            nxt = model.next_request(h)
            if nxt is None:
                return []
            req, inbox = nxt
            new = self.start_request(cfg, hid, req, inbox)
            return [(Label(hid, "dequeue_execute", (req.client, req.block, req.seq, req.method)), new)]
        if h.waiting is not None:
            return []
        f = h.stack[-1]
        e = self.edges(f)[0]
        a = e.action
        t = type(a)
        if t is CreateObject:
            return [self._create_separate(cfg, h, e)]
        if t is CommandCall or t is QueryCall:
            return [self._issue(cfg, h, e)]
        if t is EnterBlock:
            return model.reserve(self, cfg, hid, self.needed_targets(h, a))
        if t is ExitBlock:
            b = h.blocks[-1]
            if b.id is not None:
                cfg = model.release(cfg, hid, b.id)
                h = cfg.handlers[hid]
            h = _set_pc(h, e.dst)._replace(blocks=h.blocks[:-1])
            rule = "wait_retry" if a.retry else model.release_label
            return [(Label(hid, rule, (b.id,) if b.id is not None else ()), cfg.replace_handler(h))]
        if t is Return:
            h = h._replace(stack=h.stack[:-1])
            cfg = cfg.replace_handler(h)
            if f.reply_to is None:
                return [(Label(hid, "handler_idle", (f.method,)), cfg)]
            client = cfg.handlers[f.reply_to]
            assert client.waiting is not None and client.waiting[0] == hid
            result = f.locs[self.cfgs.method(f.cls, f.method).result_slot]
            client = _write(client._replace(waiting=None), len(client.stack) - 1, client.waiting[1:], result)
            return [(Label(hid, "query_reply", (f.reply_to, f.method)), cfg.replace_handler(client))]
        raise AssertionError(f"unexpected sync action {a!r}")

    def _create_separate(self, cfg: Configuration, h: Handler, e) -> tuple[Label, Configuration]:
        a = e.action
        args = tuple(_eval(h, x) for x in a.args)
        new_id = len(cfg.handlers)
        node, nodes = self.model.new_node(cfg)
        bid = cfg.next_block_id
        req = None
        if a.ctor is not None:
            req = Request("command", a.cls, a.ctor, 0, args, h.id, bid, 1, None)
        obj = Obj(0, a.cls, self.cfgs.classes[a.cls].defaults)
        new = Handler(new_id, node, (), (obj,), self.model.initial_inbox(req, bid, h.id), (), None, None)
        h = _write(_set_pc(h, e.dst), len(h.stack) - 1, a.lhs[:2], Ref(new_id, 0))
        cfg = cfg._replace(handlers=cfg.handlers + (new,), nodes=nodes, next_block_id=bid + 1).replace_handler(h)
        return Label(h.id, "create_separate", (new_id, a.cls)), cfg

    def _issue(self, cfg: Configuration, h: Handler, e) -> tuple[Label, Configuration]:
        a = e.action
        target = _eval(h, a.target)
        supplier = target[0]
        args = tuple(_eval(h, x) for x in a.args)
        for k in range(len(h.blocks) - 1, -1, -1):
            b = h.blocks[k]
            if supplier in b.targets:
                break
        else:
            raise RuntimeFault("UncontrolledCall", f"h{h.id} calls {a.method!r} on unreserved h{supplier}")
        i = b.targets.index(supplier)
        seq = b.seqs[i] + 1
        b = b._replace(seqs=b.seqs[:i] + (seq,) + b.seqs[i + 1 :])
        h = _set_pc(h, e.dst)._replace(blocks=h.blocks[:k] + (b,) + h.blocks[k + 1 :])
        if type(a) is QueryCall:
            req = Request("query", a.cls, a.method, target[1], args, h.id, b.id, seq, h.id)
            h = _write(h, len(h.stack) - 1, a.lhs[:2], None)._replace(waiting=(supplier,) + tuple(a.lhs[:2]))
            rule = "enqueue_query"
        else:
            req = Request("command", a.cls, a.method, target[1], args, h.id, b.id, seq, None)
            rule = "enqueue_command"
        cfg = self.model.enqueue(cfg.replace_handler(h), supplier, req)
        return Label(h.id, rule, (supplier, b.id, seq, a.method)), cfg

    def enumerate_sync_steps(self, cfg: Configuration) -> list[tuple[Label, Configuration]]:
        """Every configuration one synchronization step away, each closed
        under local steps.  ``cfg`` must be a local fixpoint."""
        result = []
        for hid in range(len(cfg.handlers)):
            try:
                steps = self._sync_handler(cfg, hid)
            except RuntimeFault as fault:
                steps = [(Label(hid, "fault", (fault.kind,)), cfg.with_error(fault.kind, (hid, fault.detail)))]
            for label, nxt in steps:
                result.append((label, self.local_macro_step(nxt)))
        return result

    def successors(self, cfg: Configuration) -> list[tuple[Label, Configuration]]:
        if cfg.error is not None:
            return []
        cfg = self.local_macro_step(cfg)
        if cfg.error is not None:
            return []
        return self.enumerate_sync_steps(cfg)

    def initial(self) -> Configuration:
        from scoopw.state import load_initial

        return self.local_macro_step(load_initial(self.cfgs))

    # --------------------------------------------------------- diagnostics

    def at_enter(self, h: Handler) -> Optional[EnterBlock]:
        if not h.stack or h.waiting is not None:
            return None
        out = self.edges(h.stack[-1])
        if len(out) == 1 and type(out[0].action) is EnterBlock:
            return out[0].action
        return None

    def wait_edges(self, cfg: Configuration) -> list[WaitEdge]:
        """Wait-for edges (waiter, resource, owner) of every blocked handler."""
        edges: list[WaitEdge] = []
        for h in cfg.handlers:
            if not h.stack:
                edges.extend(self.model.serve_waits(cfg, h.id))
            elif h.waiting is not None:
                edges.append((h.id, f"query(h{h.waiting[0]})", h.waiting[0]))
            else:
                a = self.at_enter(h)
                if a is not None:
                    try:
                        needed = self.needed_targets(h, a)
                    except RuntimeFault:
                        continue
                    if needed:
                        edges.extend(self.model.reserve_waits(cfg, h.id, needed))
        return edges

    def handler_status(self, cfg: Configuration, hid: int) -> str:
        st = status(cfg, hid)
        if st == "Executing":
            h = cfg.handlers[hid]
            a = self.at_enter(h)
            if a is not None:
                try:
                    needed = self.needed_targets(h, a)
                except RuntimeFault:
                    return st
                if needed and self.model.reserve_waits(cfg, hid, needed):
                    return "WaitingPrelock" if self.model.distributed else "WaitingLock"
        return st
