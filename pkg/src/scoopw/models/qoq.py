"""Queues of Queues: each block gets a private subqueue on every handler it
reserves; suppliers drain subqueues one by one in creation order."""

from __future__ import annotations

from typing import Optional

from scoopw.models.base import (
    ExecutionModel,
    Step,
    WaitEdge,
    append_to_subqueue,
    close_subqueues,
    open_subqueues,
    strip_block,
)
from scoopw.state import Configuration, Handler, Request, Subqueue


class QoQModel(ExecutionModel):
    name = "qoq"
    release_label = "block_exit"

    def initial_inbox(self, req: Optional[Request], block: int, client: int) -> tuple:
        if req is None:
            return ()
        return (Subqueue(block, client, True, (strip_block(req),)),)

    def reserve(self, eng, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[Step]:
        from scoopw.engine import Label

        cfg, bid = eng.enter_block(cfg, hid, needed)
        return [(Label(hid, "reserve", (bid,) + needed), open_subqueues(cfg, bid, hid, needed))]

    def release(self, cfg: Configuration, hid: int, block: int) -> Configuration:
        targets = cfg.handlers[hid].blocks[-1].targets
        return close_subqueues(cfg, block, targets)

    def enqueue(self, cfg: Configuration, supplier: int, req: Request) -> Configuration:
        return cfg.replace_handler(append_to_subqueue(cfg.handlers[supplier], req))

    def next_request(self, h: Handler):
        inbox = h.inbox
        while inbox:
            head = inbox[0]
            if head.reqs:
                if self.fault_reorder:
                    req, rest = head.reqs[-1], head.reqs[:-1]
                else:
                    req, rest = head.reqs[0], head.reqs[1:]
                return req._replace(block=head.owner), (Subqueue(head[0], head[1], head[2], rest),) + inbox[1:]
            if not head.closed:
                return None  # an open head blocks the supplier, even if empty
            inbox = inbox[1:]
        return None

    def serve_waits(self, cfg: Configuration, hid: int) -> list[WaitEdge]:
        inbox = cfg.handlers[hid].inbox
        if inbox and not inbox[0].closed and not inbox[0].reqs:
            return [(hid, f"subqueue(b{inbox[0].owner})", inbox[0].client)]
        return []
