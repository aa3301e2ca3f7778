"""D-SCOOP: QoQ on a multi-node topology.

Every separate creation starts a new node.  Entering a block first prelocks
the nodes of all remote targets one at a time (ascending node id), then a
single LOCK step opens the subqueues and frees the prelocks."""

from __future__ import annotations

from scoopw.models.base import Step, WaitEdge, open_subqueues
from scoopw.models.qoq import QoQModel
from scoopw.state import Configuration

PRELOCK_ORDERS = ("ascending", "descending", "textual")


class DScoopModel(QoQModel):
    name = "dscoop"
    distributed = True

    def __init__(self, *, fault_reorder: bool = False, prelock_order: str = "ascending"):
        super().__init__(fault_reorder=fault_reorder)
        if prelock_order not in PRELOCK_ORDERS:
            raise ValueError(f"unknown prelock order {prelock_order!r}")
        self.prelock_order = prelock_order

    def new_node(self, cfg: Configuration) -> tuple[int, int]:
        return cfg.nodes, cfg.nodes + 1

    def prelock_plan(self, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> tuple[int, ...]:
        """Remote nodes to prelock, in acquisition order (own node skipped)."""
        own = cfg.handlers[hid].node
        nodes: list[int] = []
        for t in needed:
            n = cfg.handlers[t].node
            if n != own and n not in nodes:
                nodes.append(n)
        if self.prelock_order == "ascending":
            nodes.sort()
        elif self.prelock_order == "descending":
            nodes.sort(reverse=True)
        return tuple(nodes)

    def reserve(self, eng, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[Step]:
        from scoopw.engine import Label

        h = cfg.handlers[hid]
        if h.proto is None:
            plan, done = self.prelock_plan(cfg, hid, needed), 0
        else:
            plan, done = h.proto
        if done < len(plan):
            node = plan[done]
            if any(n == node for n, _ in cfg.prelocks):
                return []
            prelocks = tuple(sorted(cfg.prelocks + ((node, hid),)))
            h = h._replace(proto=(plan, done + 1))
            return [(Label(hid, "prelock", (node,)), cfg._replace(prelocks=prelocks).replace_handler(h))]
        prelocks = tuple(p for p in cfg.prelocks if p[1] != hid)
        cfg, bid = eng.enter_block(cfg._replace(prelocks=prelocks), hid, needed)
        return [(Label(hid, "lock", (bid,) + needed), open_subqueues(cfg, bid, hid, needed))]

    def reserve_waits(self, cfg: Configuration, hid: int, needed: tuple[int, ...]) -> list[WaitEdge]:
        h = cfg.handlers[hid]
        plan, done = h.proto if h.proto is not None else (self.prelock_plan(cfg, hid, needed), 0)
        if done < len(plan):
            node = plan[done]
            return [(hid, f"prelock(n{node})", o) for n, o in cfg.prelocks if n == node and o != hid]
        return []
