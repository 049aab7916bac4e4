"""Valley-free, preference-ordered path exploration from one source AS.

Routes are ranked Gao-Rexford style: the class of the first hop (customer <
peer < provider) dominates, then hop count. For every AS reachable from the
source we record the best ``(class, hops)`` and how many distinct valley-free
paths achieve it.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from torbgp import _kernels
from torbgp.topology import AsGraph

DEFAULT_PATH_CAP = 2**20


class RouteClass(enum.IntEnum):
    CUSTOMER = 0
    PEER = 1
    PROVIDER = 2


@dataclass(eq=False)
class PathState:
    """Exploration result for ``source``.

    The per-node arrays are indexed like ``graph.asns``; ``cls`` is -1 for the
    source itself and for unreachable nodes. The dict views are built lazily.
    """

    graph: AsGraph = field(repr=False)
    source: int
    cls: np.ndarray = field(repr=False)
    hops: np.ndarray = field(repr=False)
    count: np.ndarray = field(repr=False)
    saturated: bool = False

    @cached_property
    def keys(self) -> np.ndarray:
        return _kernels.rank_keys(self.cls, self.hops)

    @cached_property
    def rank(self) -> dict[int, tuple[RouteClass, int]]:
        asns = self.graph.asns
        return {
            int(asns[i]): (RouteClass(int(self.cls[i])), int(self.hops[i]))
            for i in np.flatnonzero(self.cls >= 0)
        }

    @cached_property
    def path_count(self) -> dict[int, int]:
        asns = self.graph.asns
        return {int(asns[i]): int(self.count[i]) for i in np.flatnonzero(self.cls >= 0)}

    @cached_property
    def route_class(self) -> dict[int, RouteClass]:
        return {asn: r[0] for asn, r in self.rank.items()}

    def reachable(self, asn: int) -> bool:
        i = self.graph.index.get(int(asn))
        return i is not None and self.cls[i] >= 0


def explore_from_source(graph: AsGraph, v: int, *, cap: int = DEFAULT_PATH_CAP) -> PathState:
    """Rank every AS reachable from ``v`` and count its equally-preferred best paths.

    Path counts are capped at ``cap``; ``PathState.saturated`` reports whether
    the cap was hit anywhere.
    """
    src = graph.idx(v)
    cls, hops, count, saturated = _kernels.explore(
        graph.down.ptr, graph.down.idx,
        graph.up.ptr, graph.up.idx,
        graph.peer.ptr, graph.peer.idx,
        src, np.int64(cap),
    )
    return PathState(graph=graph, source=int(v), cls=cls, hops=hops, count=count, saturated=bool(saturated))
