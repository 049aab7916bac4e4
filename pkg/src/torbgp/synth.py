"""Seeded synthetic inputs: a tiered AS hierarchy, relays, clients and a BGP update corpus.

These stand in for the CAIDA, consensus and BGP-stream snapshots in tests,
the benchmark, and the ``torbgp synth`` command.
"""

from __future__ import annotations

import ipaddress
from collections.abc import Iterable, Mapping
from dataclasses import replace
from datetime import datetime, timezone

import numpy as np

from torbgp.monitor.pipeline import DAY, HOUR, AttackSpec
from torbgp.monitor.registry import PrefixRegistry
from torbgp.monitor.stream import BgpUpdate, Net, UpdateKind, net
from torbgp.relaydata import IpAsnMap, RelayRecord
from torbgp.topology import AsGraph, AsRelation

P2C = AsRelation.PROVIDER_TO_CUSTOMER
P2P = AsRelation.PEER_TO_PEER

TIER1_BASE = 1
MID_BASE = 100
STUB_BASE = 1000


def synthetic_hierarchy(n_tier1: int = 5, n_mid: int = 50, n_stub: int = 445, seed: int = 0,
                        mid_peering: float = 0.05) -> AsGraph:
    """Fully peered tier-1 clique, multihomed mid-tier transit, multihomed stubs."""
    rng = np.random.default_rng(seed)
    t1 = list(range(TIER1_BASE, TIER1_BASE + n_tier1))
    mid = list(range(MID_BASE, MID_BASE + n_mid))
    stubs = list(range(STUB_BASE, STUB_BASE + n_stub))
    edges: dict[tuple[int, int], AsRelation] = {}
    for i, a in enumerate(t1):
        for b in t1[i + 1:]:
            edges[(a, b)] = P2P
    for m in mid:
        for p in rng.choice(t1, size=min(len(t1), int(rng.integers(1, 3))), replace=False):
            edges[(int(p), m)] = P2C
    for i, a in enumerate(mid):
        for b in mid[i + 1:]:
            if rng.random() < mid_peering:
                edges[(a, b)] = P2P
    upstream = mid or t1
    for s in stubs:
        for p in rng.choice(upstream, size=min(len(upstream), int(rng.integers(1, 3))), replace=False):
            edges[(int(p), s)] = P2C
    return AsGraph.from_edges((a, b, rel) for (a, b), rel in edges.items())


def _fingerprint(i: int) -> str:
    return f"{i:040X}"


def synthetic_relays(graph: AsGraph, n_guards: int = 60, n_exits: int = 20, n_middle: int = 10,
                     seed: int = 0) -> tuple[list[RelayRecord], IpAsnMap]:
    """Relays hosted in random non-tier-1 ASes, one /24 per hosting AS, ASNs resolved."""
    rng = np.random.default_rng(seed)
    hosts = [int(a) for a in graph.asns if a >= MID_BASE] or [int(a) for a in graph.asns]
    ip_map = IpAsnMap()
    nets: dict[int, ipaddress.IPv4Network] = {}
    relays = []
    kinds = ["Guard"] * n_guards + ["Exit"] * n_exits + [""] * n_middle
    for i, kind in enumerate(kinds):
        asn = int(rng.choice(hosts))
        if asn not in nets:
            k = len(nets)
            nets[asn] = ipaddress.IPv4Network((int(ipaddress.IPv4Address("10.0.0.0")) + (k << 8), 24))
            ip_map.add(nets[asn], asn)
        host = int(rng.integers(1, 255))
        addr = nets[asn].network_address + host
        flags = frozenset({"Running", "Valid", "Fast"} | ({kind} if kind else set()))
        bw = int(rng.integers(100, 20000))
        relays.append(RelayRecord(f"relay{i}", _fingerprint(i + 1), addr, flags, bw, asn))
    return relays, ip_map


def anticorrelate_bandwidth(relays: Iterable[RelayRecord], score: Mapping[int, float]) -> list[RelayRecord]:
    """Reassign the existing bandwidths so higher-``score`` ASes get less bandwidth.

    ``score`` maps ASN to a resilience-like value; relays whose ASN is absent
    keep their bandwidth.
    """
    relays = list(relays)
    idx = [i for i, r in enumerate(relays) if r.asn in score]
    by_score = sorted(idx, key=lambda i: (score[relays[i].asn], relays[i].fingerprint))
    bws = sorted((relays[i].bandwidth for i in idx), reverse=True)
    out = list(relays)
    for i, bw in zip(by_score, bws):
        out[i] = replace(relays[i], bandwidth=bw)
    return out


def synthetic_clients(graph: AsGraph, n: int = 20, seed: int = 0) -> dict[int, float]:
    rng = np.random.default_rng(seed)
    stubs = [int(a) for a in graph.asns if a >= STUB_BASE] or [int(a) for a in graph.asns]
    picked = sorted(int(a) for a in rng.choice(stubs, size=min(n, len(stubs)), replace=False))
    return {a: float(rng.integers(1, 10)) for a in picked}


# --- BGP corpus ----------------------------------------------------------------

# prefix, hijacking ASN, true origin ASN, updates injected, hijack length (s)
KNOWN_ATTACKS: tuple[tuple[str, int, int, int, int], ...] = (
    ("185.15.244.0/22", 29256, 24961, 3, 4 * 60),
    ("103.56.207.0/24", 10063, 58477, 10, 25 * HOUR),
    ("104.37.192.0/24", 7029, 36077, 2, HOUR),
    ("195.254.135.0/24", 7029, 38935, 8, 8 * HOUR),
    ("89.187.128.0/19", 7029, 35592, 9, 9 * HOUR),
    ("77.245.144.0/20", 7029, 42868, 9, 9 * HOUR),
    ("151.100.0.0/16", 7029, 137, 9, 9 * HOUR),
    ("107.181.174.0/24", 13110, 46562, 2, 17 * 60),
    ("193.200.241.0/24", 51088, 51167, 4, 11 * HOUR),
)

CORPUS_START = int(datetime(2016, 3, 1, tzinfo=timezone.utc).timestamp())
# upstreams seen in benign paths; the fifth known attack uses a shorter path than these
_TRANSIT = (174, 1299, 2914, 3257, 3356, 6453, 6762, 6939)
_COLLECTORS = ("rrc00", "rrc01", "route-views2", "route-views.linx")


def _extra_prefixes(n: int) -> list[tuple[str, frozenset[int]]]:
    out = []
    for i in range(n):
        owners = {64500 + i}
        if i < 2:
            # multi-origin organizations announcing from two ASNs
            owners.add(65000 + i)
        out.append((f"198.18.{i}.0/24", frozenset(owners)))
    return out


def corpus_prefixes(n_prefixes: int = 20) -> list[tuple[Net, frozenset[int]]]:
    rows = [(net(p), frozenset({true})) for p, _, true, _, _ in KNOWN_ATTACKS]
    extra = [(net(p), o) for p, o in _extra_prefixes(max(n_prefixes - len(rows), 0))]
    return (rows + extra)[:n_prefixes]


def corpus_registry(prefixes: Iterable[tuple[Net, frozenset[int]]]) -> PrefixRegistry:
    """Monitor the first /24 inside each announced prefix."""
    return PrefixRegistry({next(p.subnets(new_prefix=24)) if p.prefixlen < 24 else p: o for p, o in prefixes})


def benign_corpus(start: int = CORPUS_START, days: int = 60, per_day: int = 150, n_prefixes: int = 20,
                  seed: int = 0, withdraw_every: int = 3) -> tuple[list[BgpUpdate], PrefixRegistry]:
    """Stationary-owner update stream: only registered owners ever originate.

    Each prefix gets about ``per_day`` announcements per day at random times
    from a few collectors, plus a short withdraw/re-announce outage every
    ``withdraw_every`` days.
    """
    rng = np.random.default_rng(seed)
    prefixes = corpus_prefixes(n_prefixes)
    ups: list[BgpUpdate] = []
    transit = np.array(_TRANSIT)
    for p, owners in prefixes:
        owners_l = sorted(owners)
        for d in range(days):
            day0 = start + d * DAY
            times = np.sort(rng.integers(0, DAY, size=per_day)) + day0
            # two distinct transit hops per path: offset the second by a nonzero step
            h1 = rng.integers(len(transit), size=per_day)
            h2 = (h1 + rng.integers(1, len(transit), size=per_day)) % len(transit)
            cols = rng.integers(len(_COLLECTORS), size=per_day)
            for j in range(per_day):
                path = (int(transit[h1[j]]), int(transit[h2[j]]), owners_l[j % len(owners_l)])
                ups.append(BgpUpdate(int(times[j]), UpdateKind.ANNOUNCE, p, path, _COLLECTORS[cols[j]]))
            if withdraw_every and d % withdraw_every == withdraw_every - 1:
                t = day0 + int(rng.integers(HOUR, DAY - HOUR))
                ups.append(BgpUpdate.withdraw(t, p, _COLLECTORS[0]))
                ups.append(BgpUpdate.announce(t + int(rng.integers(60, 600)), p, (174, 3356, owners_l[0]), _COLLECTORS[0]))
    ups.sort(key=lambda u: (u.ts, str(u.prefix), u.kind.value))
    return ups, corpus_registry(prefixes)


def known_attack_specs(start: int = CORPUS_START, first_day: int = 32, spacing_days: int = 3) -> list[AttackSpec]:
    """The nine attack shapes, placed in the second month of the corpus at distinct days."""
    specs = []
    for i, (p, hijacker, _, n, dur) in enumerate(KNOWN_ATTACKS):
        t0 = start + (first_day + i * spacing_days) * DAY + 10 * HOUR + 17 * 60
        path = (hijacker,) if i == 4 else (3356, hijacker)
        specs.append(AttackSpec(net(p), hijacker, t0, dur, n, path))
    return specs
