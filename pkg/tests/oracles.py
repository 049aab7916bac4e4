"""Brute-force references built straight from edge lists, sharing no code with torbgp.

A route from v climbs zero or more customer->provider links, crosses at most
one peer link, then descends provider->customer links. Its class is set by the
first hop (0 customer, 1 peer, 2 provider). Every simple path is enumerated.
"""

from __future__ import annotations

import itertools
import random
from fractions import Fraction

UNREACHABLE = None


def adjacency(edges):
    """edges: (a, b, rel) with rel -1 = a is b's provider, 0 = peers."""
    providers, customers, peers = {}, {}, {}
    nodes = set()
    for a, b, rel in edges:
        nodes |= {a, b}
        if rel == -1:
            customers.setdefault(a, set()).add(b)
            providers.setdefault(b, set()).add(a)
        else:
            peers.setdefault(a, set()).add(b)
            peers.setdefault(b, set()).add(a)
    return nodes, providers, customers, peers


def all_valley_free_paths(edges, v):
    """Yield every simple valley-free path starting at v, as a tuple of nodes plus its class."""
    nodes, providers, customers, peers = adjacency(edges)

    def walk(path, phase, cls):
        yield path, cls
        u = path[-1]
        steps = []
        if phase == "up":
            steps += [(w, "up", 2) for w in providers.get(u, ())]
            steps += [(w, "down", 1) for w in peers.get(u, ())]
        steps += [(w, "down", 0) for w in customers.get(u, ())]
        for w, nxt, step_cls in sorted(steps):
            if w in path:
                continue
            yield from walk(path + (w,), nxt, cls if cls is not None else step_cls)

    for path, cls in walk((v,), "up", None):
        if len(path) > 1:
            yield path, cls


def best_routes(edges, v):
    """node -> (class, hops, number of simple paths with that best rank)."""
    best = {}
    for path, cls in all_valley_free_paths(edges, v):
        t, key = path[-1], (cls, len(path) - 1)
        if t not in best or key < best[t][:2]:
            best[t] = (key[0], key[1], 1)
        elif key == best[t][:2]:
            best[t] = (key[0], key[1], best[t][2] + 1)
    return best


def beta(best, t, a):
    """Chance v keeps routing to t when a announces t's prefix (exact fraction)."""
    rt, ra = best.get(t), best.get(a)
    if rt is None and ra is None:
        return Fraction(1, 2)
    if ra is None:
        return Fraction(1)
    if rt is None:
        return Fraction(0)
    if rt[:2] < ra[:2]:
        return Fraction(1)
    if rt[:2] > ra[:2]:
        return Fraction(0)
    return Fraction(rt[2], rt[2] + ra[2])


def hijack_resilience(edges, v, t, nodes=None):
    """Average of beta over every attacker other than v and t."""
    nodes = sorted(nodes if nodes is not None else adjacency(edges)[0])
    best = best_routes(edges, v)
    if t not in best:
        return Fraction(0)
    att = [a for a in nodes if a not in (v, t)]
    return sum((beta(best, t, a) for a in att), Fraction(0)) / len(att)


def intercept_resilience(edges, v, t, attackers=None, nodes=None):
    """Line-by-line rendering of the interception pseudocode (source-route safety test)."""
    nodes = sorted(nodes if nodes is not None else adjacency(edges)[0])
    best = best_routes(edges, v)
    if t not in best:
        return Fraction(0)
    pool = [a for a in (nodes if attackers is None else attackers) if a not in (v, t)]
    kt = best[t][:2]

    def key(a):
        return best[a][:2] if a in best else (9, 10**9)

    less = [a for a in pool if key(a) > kt]
    more = [a for a in pool if key(a) < kt]
    equal = [a for a in pool if key(a) == kt]
    provider_route = best[t][0] == 2
    m_set = {a for a in pool if a in best and best[a][0] == 2}
    protected = []
    if provider_route:
        more = [a for a in more if a in m_set]
        protected = [a for a in equal if a in m_set]
        equal = [a for a in equal if a not in m_set]
    total = len(less) + len(more) + len(protected) + sum((beta(best, t, a) for a in equal), Fraction(0))
    return Fraction(total) / len(pool)


def random_graph(rng: random.Random, max_nodes: int = 8):
    """Random AS graph (no self-loops, one relation per pair); may be disconnected."""
    n = rng.randint(3, max_nodes)
    nodes = list(range(1, n + 1))
    edges = []
    for a, b in itertools.combinations(nodes, 2):
        r = rng.random()
        if r < 0.25:
            edges.append((a, b, -1))
        elif r < 0.40:
            edges.append((b, a, -1))
        elif r < 0.55:
            edges.append((a, b, 0))
    if not edges:
        edges.append((1, 2, -1))
    return nodes, edges


def random_suite(count: int = 200, seed: int = 2016, max_nodes: int = 8):
    rng = random.Random(seed)
    return [random_graph(rng, max_nodes) for _ in range(count)]


def tille_reference(r, k):
    """Textbook elimination: pin items whose share exceeds 1, re-share the rest."""
    r = [Fraction(x) for x in r]
    n = len(r)
    pinned = set()
    while True:
        free = [i for i in range(n) if i not in pinned]
        kk = k - len(pinned)
        tot = sum(r[i] for i in free)
        pi = {i: Fraction(1) for i in pinned}
        for i in free:
            pi[i] = kk * r[i] / tot if tot else Fraction(kk, len(free))
        over = [i for i in free if pi[i] > 1]
        if not over:
            return [pi[i] for i in range(n)]
        pinned |= set(over)
