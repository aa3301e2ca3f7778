"""Request Queues: one lock-protected FIFO per handler.

A block atomically locks the queues of all handlers it newly reserves and
keeps the locks until the block exits."""

from __future__ import annotations

from typing import Optional

from scoopw.models.base import ExecutionModel, Step, WaitEdge
from scoopw.state import Configuration, Handler, Request


class RQModel(ExecutionModel):
    name = "rq"

    def initial_inbox(self, req: Optional[Request], block: int, client: int) -> tuple:
        return (req,) if req is not None else ()

    def reserve(self, eng, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[Step]:
        from scoopw.engine import Label

        held = {t for t, _, _ in cfg.locks}
        if any(t in held for t in needed):
            return []  # atomic multi-lock: disabled until every lock is free
        cfg, bid = eng.enter_block(cfg, hid, needed)
        locks = tuple(sorted(cfg.locks + tuple((t, hid, bid) for t in needed)))
        return [(Label(hid, "reserve", (bid,) + needed), cfg._replace(locks=locks))]

    def reserve_waits(self, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[WaitEdge]:
        return [(hid, f"lock(h{t})", o) for t, o, _ in cfg.locks if t in needed]

    def release(self, cfg: Configuration, hid: int, block: int) -> Configuration:
        return cfg._replace(locks=tuple(lk for lk in cfg.locks if lk[2] != block))

    def enqueue(self, cfg: Configuration, supplier: int, req: Request) -> Configuration:
        assert any(t == supplier and o == req.client for t, o, _ in cfg.locks), "enqueue without holding the queue lock"
        h = cfg.handlers[supplier]
        return cfg.replace_handler(h._replace(inbox=h.inbox + (req,)))

    def next_request(self, h: Handler):
        if not h.inbox:
            return None
        if self.fault_reorder:
            return h.inbox[-1], h.inbox[:-1]
        return h.inbox[0], h.inbox[1:]
