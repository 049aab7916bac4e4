"""AS-level topology with typed business relationships.

The graph is loaded from CAIDA ``as-rel`` text (``asn1|asn2|rel``) and kept
immutable afterwards. Besides the dict-based view used by the Python code,
every graph carries CSR adjacency arrays (customers, providers, peers) that
the compiled kernels walk.
"""

from __future__ import annotations

import bz2
import enum
import gzip
from collections.abc import Iterable
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from torbgp.errors import ConflictError, ParseError, UnknownASError

# AS174, AS209, ... as used for the interception study.
DEFAULT_TIER1 = frozenset(
    {174, 209, 286, 701, 1239, 1299, 2828, 2914, 3257, 3320, 3356, 5511, 6453, 6461, 6762, 7018, 12956}
)


class AsRelation(enum.IntEnum):
    PROVIDER_TO_CUSTOMER = -1
    PEER_TO_PEER = 0


class StepClass(enum.IntEnum):
    """Direction of one hop, seen from the AS taking it."""

    TO_CUSTOMER = 0
    TO_PEER = 1
    TO_PROVIDER = 2


@dataclass(frozen=True)
class Csr:
    """Compressed adjacency for one step class. ``idx[ptr[u]:ptr[u+1]]`` are u's neighbours."""

    ptr: np.ndarray
    idx: np.ndarray

    def of(self, u: int) -> np.ndarray:
        return self.idx[self.ptr[u] : self.ptr[u + 1]]


def _csr(n: int, pairs: list[tuple[int, int]]) -> Csr:
    if pairs:
        arr = np.array(sorted(pairs), dtype=np.int64)
        src, dst = arr[:, 0], arr[:, 1]
    else:
        src = dst = np.empty(0, dtype=np.int64)
    ptr = np.zeros(n + 1, dtype=np.int64)
    np.add.at(ptr, src + 1, 1)
    np.cumsum(ptr, out=ptr)
    return Csr(ptr=ptr, idx=dst.astype(np.int64))


@dataclass(frozen=True, eq=False)
class AsGraph:
    """Immutable AS graph.

    ``edges`` maps each ordered pair as written in the source to its relation:
    ``(p, c) -> PROVIDER_TO_CUSTOMER`` or ``(a, b) -> PEER_TO_PEER``.
    """

    asns: np.ndarray
    edges: dict[tuple[int, int], AsRelation]
    index: dict[int, int] = field(repr=False)
    down: Csr = field(repr=False)
    up: Csr = field(repr=False)
    peer: Csr = field(repr=False)

    @classmethod
    def from_edges(
        cls,
        edges: Iterable[tuple[int, int, AsRelation | int]],
        nodes: Iterable[int] = (),
    ) -> AsGraph:
        rel_of: dict[frozenset, tuple[tuple[int, int], AsRelation]] = {}
        asn_set = {int(a) for a in nodes}
        for a, b, rel in edges:
            a, b, rel = int(a), int(b), AsRelation(int(rel))
            if a == b:
                raise ConflictError(f"self-loop on AS{a}")
            key = frozenset((a, b))
            seen = rel_of.get(key)
            if seen is not None:
                (sa, sb), srel = seen
                same = srel == rel and (rel == AsRelation.PEER_TO_PEER or (sa, sb) == (a, b))
                if not same:
                    raise ConflictError(f"AS{a}-AS{b} listed with conflicting relations")
                continue
            rel_of[key] = ((a, b), rel)
            asn_set.update((a, b))

        asns = np.array(sorted(asn_set), dtype=np.int64)
        index = {int(a): i for i, a in enumerate(asns)}
        down, up, peer = [], [], []
        ordered: dict[tuple[int, int], AsRelation] = {}
        for (a, b), rel in rel_of.values():
            ordered[(a, b)] = rel
            ia, ib = index[a], index[b]
            if rel == AsRelation.PROVIDER_TO_CUSTOMER:
                down.append((ia, ib))
                up.append((ib, ia))
            else:
                peer.append((ia, ib))
                peer.append((ib, ia))
        n = len(asns)
        return cls(
            asns=asns,
            edges=ordered,
            index=index,
            down=_csr(n, down),
            up=_csr(n, up),
            peer=_csr(n, peer),
        )

    @property
    def node_count(self) -> int:
        return len(self.asns)

    def __len__(self) -> int:
        return len(self.asns)

    def __contains__(self, asn) -> bool:
        return int(asn) in self.index

    @property
    def nodes(self) -> frozenset[int]:
        return frozenset(self.index)

    def idx(self, asn: int) -> int:
        try:
            return self.index[int(asn)]
        except KeyError:
            raise UnknownASError(asn) from None

    def to_lines(self) -> list[str]:
        """Serialize back to sorted ``asn1|asn2|rel`` lines."""
        return sorted(f"{a}|{b}|{int(rel)}" for (a, b), rel in self.edges.items())


def neighbors(graph: AsGraph, asn: int) -> list[tuple[int, StepClass]]:
    """Neighbours of ``asn`` with the step class of moving to each, sorted by ASN."""
    u = graph.idx(asn)
    out = [(int(graph.asns[w]), StepClass.TO_CUSTOMER) for w in graph.down.of(u)]
    out += [(int(graph.asns[w]), StepClass.TO_PROVIDER) for w in graph.up.of(u)]
    out += [(int(graph.asns[w]), StepClass.TO_PEER) for w in graph.peer.of(u)]
    return sorted(out)


def parse_as_rel_lines(lines: Iterable[str]) -> list[tuple[int, int, AsRelation]]:
    out = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        fields = line.split("|")
        # serial-2 files append a fourth "source" column
        if len(fields) not in (3, 4):
            raise ParseError(f"expected asn1|asn2|rel, got {line!r}", lineno)
        try:
            a, b, rel = int(fields[0]), int(fields[1]), int(fields[2])
        except ValueError:
            raise ParseError(f"non-integer field in {line!r}", lineno) from None
        if a <= 0 or b <= 0:
            raise ParseError(f"ASNs must be positive in {line!r}", lineno)
        if rel not in (-1, 0):
            raise ParseError(f"relation must be -1 or 0, got {rel}", lineno)
        out.append((a, b, AsRelation(rel)))
    return out


def load_as_topology(source: str | Iterable[str]) -> AsGraph:
    """Build an :class:`AsGraph` from CAIDA as-rel text (a string or an iterable of lines)."""
    lines = source.splitlines() if isinstance(source, str) else source
    edges = parse_as_rel_lines(lines)
    try:
        return AsGraph.from_edges(edges)
    except ConflictError:
        raise
    except ValueError as exc:
        raise ParseError(str(exc)) from exc


def _open_text(path: Path):
    if path.suffix == ".bz2":
        return bz2.open(path, "rt")
    if path.suffix == ".gz":
        return gzip.open(path, "rt")
    return open(path, encoding="utf-8")


def read_as_topology(path: str | Path) -> AsGraph:
    with _open_text(Path(path)) as fh:
        return load_as_topology(fh)


def tier1_set(graph: AsGraph, asns: Iterable[int] = DEFAULT_TIER1, *, strict: bool = True) -> frozenset[int]:
    """Validate a Tier-1 attacker set against ``graph``.

    With ``strict=False`` members missing from the graph are dropped instead of
    raising; the caller decides whether an empty result is acceptable.
    """
    members = frozenset(int(a) for a in asns)
    missing = sorted(a for a in members if a not in graph)
    if missing and strict:
        raise UnknownASError(missing[0])
    return frozenset(a for a in members if a in graph)
