"""Interface between the generic macro-step engine and an execution model."""

from __future__ import annotations

from typing import TYPE_CHECKING, Optional

from scoopw.state import Configuration, Handler, Request, Subqueue

if TYPE_CHECKING:
    from scoopw.engine import Engine, Label

Step = tuple["Label", Configuration]
WaitEdge = tuple[int, str, int]  # (waiting handler, resource, owner)


class ExecutionModel:
    """Model-specific hooks.  Every hook is a pure function of its inputs.

    ``fault_reorder`` is a test hook: suppliers serve the most recently
    logged request of the current queue instead of the oldest one, which
    breaks the order guarantee on purpose."""

    name = "abstract"
    distributed = False

    def __init__(self, *, fault_reorder: bool = False):
        self.fault_reorder = fault_reorder

    # -- topology and creation

    def new_node(self, cfg: Configuration) -> tuple[int, int]:
        """Node for a freshly created handler and the new node count."""
        return 0, cfg.nodes

    def initial_inbox(self, req: Optional[Request], block: int, client: int) -> tuple:
        raise NotImplementedError

    # -- blocks

    def reserve(self, eng: "Engine", cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[Step]:
        """Successors for a client at an EnterBlock that must reserve the
        handlers ``needed``; empty when the reservation is disabled."""
        raise NotImplementedError

    def reserve_waits(self, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[WaitEdge]:
        """Wait-for edges of a client whose reservation is disabled."""
        return []

    def release(self, cfg: Configuration, hid: int, block: int) -> Configuration:
        raise NotImplementedError

    release_label = "release"

    # -- requests

    def enqueue(self, cfg: Configuration, supplier: int, req: Request) -> Configuration:
        raise NotImplementedError

    def next_request(self, h: Handler) -> Optional[tuple[Request, tuple]]:
        """The request an idle supplier would execute next, with its inbox
        after removal; None when nothing may be served."""
        raise NotImplementedError

    def serve_waits(self, cfg: Configuration, hid: int) -> list[WaitEdge]:
        """Wait-for edges of an idle supplier that cannot serve."""
        return []

    def __repr__(self) -> str:
        extra = ", fault_reorder=True" if self.fault_reorder else ""
        return f"{type(self).__name__}({extra.lstrip(', ')})"


def block_client(cfg: Configuration, block: int) -> Optional[int]:
    for h in cfg.handlers:
        for b in h.blocks:
            if b.id == block:
                return h.id
    return None


def strip_block(req: Request) -> Request:
    """Requests inside a subqueue do not repeat the owner's block id."""
    return Request(req[0], req[1], req[2], req[3], req[4], req[5], None, req[7], req[8])


def append_to_subqueue(h: Handler, req: Request) -> Handler:
    inbox = list(h.inbox)
    for i, sq in enumerate(inbox):
        if sq.owner == req.block and not sq.closed:
            inbox[i] = Subqueue(sq[0], sq[1], sq[2], sq.reqs + (strip_block(req),))
            return h._replace(inbox=tuple(inbox))
    raise AssertionError(f"no open subqueue of block {req.block} on handler {h.id}")


def close_subqueues(cfg: Configuration, block: int, targets: tuple[int, ...]) -> Configuration:
    handlers = list(cfg.handlers)
    for t in targets:
        h = handlers[t]
        handlers[t] = h._replace(inbox=tuple(sq._replace(closed=True) if sq.owner == block else sq for sq in h.inbox))
    return cfg._replace(handlers=tuple(handlers))


def open_subqueues(cfg: Configuration, block: int, client: int, targets: tuple[int, ...]) -> Configuration:
    handlers = list(cfg.handlers)
    for t in targets:
        h = handlers[t]
        handlers[t] = h._replace(inbox=h.inbox + (Subqueue(block, client, False, ()),))
    return cfg._replace(handlers=tuple(handlers))
