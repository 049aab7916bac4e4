"""Resilience of Tor-hosting ASes to equally-specific hijacks and interceptions.

For a source AS ``v`` and a true origin ``t``, every other AS ``a`` is a
potential false origin. ``v`` stays with ``t`` when its best route to ``t``
beats its best route to ``a``; on a tie the chance is proportional to the
number of equally good paths. Averaging over attackers gives the
origin-source resilience, and averaging that over a source set gives the
origin resilience.
"""

from __future__ import annotations

import csv
import enum
import io
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import TextIO

import numpy as np

from torbgp import _kernels
from torbgp.errors import DegenerateInputError, UnknownASError
from torbgp.pathinfer import DEFAULT_PATH_CAP, PathState, RouteClass, explore_from_source
from torbgp.topology import AsGraph


class AttackKind(str, enum.Enum):
    HIJACK = "hijack"
    INTERCEPTION = "interception"


class Weighting(str, enum.Enum):
    UNIFORM = "uniform"
    TOR_BANDWIDTH = "bandwidth"


class Safety(str, enum.Enum):
    """Which route decides whether an interceptor must stay quiet towards its providers.

    SOURCE_ROUTE evaluates the source's route, exactly as the published
    pseudocode does. ATTACKER_ROUTE evaluates each attacker's own route to the
    true origin; it is experimental and off by default.
    """

    SOURCE_ROUTE = "source-route"
    ATTACKER_ROUTE = "attacker-route"


@dataclass
class ResilienceVector:
    source: int
    kind: AttackKind
    values: dict[int, float]
    # N-2 for all-AS attackers, |attackers - {v, t}| otherwise; exact per-origin values in ``normalizers``
    attacker_count: int
    normalizers: dict[int, int] = field(default_factory=dict, repr=False)


@dataclass(frozen=True)
class CdfSeries:
    points: list[tuple[float, float]]
    weighting: Weighting

    def to_csv(self) -> str:
        buf = io.StringIO()
        write_cdf_csv(self, buf)
        return buf.getvalue()


def beta(state: PathState, t: int, a: int) -> float:
    """Probability that ``state.source`` keeps routing to ``t`` when ``a`` also announces."""
    if int(t) == int(a):
        raise ValueError("true origin and attacker must differ")
    t_ok, a_ok = state.reachable(t), state.reachable(a)
    if not t_ok and not a_ok:
        return 0.5
    if not a_ok:
        return 1.0
    if not t_ok:
        return 0.0
    rt, ra = state.rank[int(t)], state.rank[int(a)]
    if rt < ra:
        return 1.0
    if rt > ra:
        return 0.0
    pt, pa = state.path_count[int(t)], state.path_count[int(a)]
    return pt / (pt + pa)


def _origin_indices(graph: AsGraph, v: int, tor_origins: Iterable[int]) -> tuple[list[int], np.ndarray]:
    origins = sorted({int(t) for t in tor_origins} - {int(v)})
    for t in origins:
        if t not in graph:
            raise UnknownASError(t)
    return origins, np.array([graph.index[t] for t in origins], dtype=np.int64)


def _attacker_mask(graph: AsGraph, src: int, attackers: Iterable[int] | None) -> np.ndarray:
    if attackers is None:
        mask = np.ones(len(graph), dtype=bool)
    else:
        mask = np.zeros(len(graph), dtype=bool)
        for a in attackers:
            mask[graph.idx(a)] = True
    mask[src] = False
    return mask


def _run_kernel(state: PathState, origins_idx: np.ndarray, mask: np.ndarray, mode: int) -> np.ndarray:
    keys = state.keys
    att = np.flatnonzero(mask)
    order = np.argsort(keys[att], kind="stable")
    att = att[order]
    return _kernels.resilience(
        keys[att], state.count[att], keys[origins_idx], state.count[origins_idx], mask[origins_idx], mode
    )


def _vector(state, kind, origins, origins_idx, mask, values) -> ResilienceVector:
    m = int(mask.sum())
    norms = {t: m - int(mask[i]) for t, i in zip(origins, origins_idx)}
    bad = [t for t, d in norms.items() if d <= 0]
    if bad:
        raise DegenerateInputError(f"no eligible attackers for origin AS{bad[0]} from AS{state.source}")
    return ResilienceVector(
        source=state.source,
        kind=kind,
        values={t: float(x) for t, x in zip(origins, values)},
        attacker_count=max(norms.values(), default=m),
        normalizers=norms,
    )


def hijack_resilience_from_source(
    graph: AsGraph,
    v: int,
    tor_origins: Iterable[int],
    *,
    state: PathState | None = None,
    cap: int = DEFAULT_PATH_CAP,
) -> ResilienceVector:
    """Origin-source hijack resilience of every Tor origin seen from ``v``.

    Every AS other than ``v`` and ``t`` is a potential attacker (normalizer N-2).
    """
    state = state or explore_from_source(graph, v, cap=cap)
    origins, oidx = _origin_indices(graph, v, tor_origins)
    mask = _attacker_mask(graph, graph.idx(v), None)
    values = _run_kernel(state, oidx, mask, _kernels.MODE_HIJACK)
    return _vector(state, AttackKind.HIJACK, origins, oidx, mask, values)


def intercept_resilience_from_source(
    graph: AsGraph,
    v: int,
    tor_origins: Iterable[int],
    attackers: Iterable[int] | None = None,
    *,
    safety: Safety = Safety.SOURCE_ROUTE,
    state: PathState | None = None,
    cap: int = DEFAULT_PATH_CAP,
) -> ResilienceVector:
    """Origin-source interception resilience; ``attackers=None`` means every AS.

    A restricted attacker set (e.g. Tier-1) also restricts the normalizer to
    ``|attackers - {v, t}|``.
    """
    state = state or explore_from_source(graph, v, cap=cap)
    origins, oidx = _origin_indices(graph, v, tor_origins)
    src = graph.idx(v)
    mask = _attacker_mask(graph, src, attackers)
    if not mask.any():
        raise DegenerateInputError(f"attacker set is empty once AS{v} is removed")
    if Safety(safety) is Safety.SOURCE_ROUTE:
        values = _run_kernel(state, oidx, mask, _kernels.MODE_INTERCEPT)
    else:
        values = _intercept_attacker_route(graph, state, oidx, mask, cap)
    return _vector(state, AttackKind.INTERCEPTION, origins, oidx, mask, values)


def _intercept_attacker_route(graph, state, oidx, mask, cap) -> np.ndarray:
    att = np.flatnonzero(mask)
    # route class from each attacker towards every node
    from_att = np.stack([explore_from_source(graph, int(graph.asns[a]), cap=cap).cls for a in att])
    keys = state.keys[att]
    counts = state.count[att].astype(np.float64)
    out = np.zeros(len(oidx))
    for j, ti in enumerate(oidx):
        kt = state.keys[ti]
        if kt == _kernels.INF_KEY:
            continue
        others = att != ti
        restricted = from_att[:, ti] == RouteClass.PROVIDER
        less = others & (keys > kt)
        more = others & (keys < kt) & restricted
        eq = others & (keys == kt)
        pt = float(state.count[ti])
        tie = eq & ~restricted
        s = float(np.sum(pt / (pt + counts[tie])))
        out[j] = (less.sum() + more.sum() + (eq & restricted).sum() + s) / others.sum()
    return out


def resilience_table(
    graph: AsGraph,
    sources: Iterable[int],
    tor_origins: Iterable[int],
    kind: AttackKind = AttackKind.HIJACK,
    attackers: Iterable[int] | None = None,
    *,
    workers: int = 1,
    cap: int = DEFAULT_PATH_CAP,
) -> list[ResilienceVector]:
    """Origin-source vectors for many sources, in the order given.

    ``workers > 1`` spreads sources over threads; the numba kernels release
    the GIL. Results do not depend on the worker count.
    """
    origins = frozenset(int(t) for t in tor_origins)
    attackers = None if attackers is None else frozenset(int(a) for a in attackers)

    def one(v: int) -> ResilienceVector:
        if AttackKind(kind) is AttackKind.HIJACK:
            return hijack_resilience_from_source(graph, v, origins, cap=cap)
        return intercept_resilience_from_source(graph, v, origins, attackers, cap=cap)

    sources = [int(v) for v in sources]
    if workers <= 1:
        return [one(v) for v in sources]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, sources))


def origin_resilience(
    vectors: list[ResilienceVector], source_weights: Mapping[int, float] | None = None
) -> dict[int, float]:
    """Weighted mean of origin-source values per origin (uniform when no weights given).

    An origin missing from a vector (because it is that vector's source) is
    averaged over the remaining sources only.
    """
    if not vectors:
        raise DegenerateInputError("no resilience vectors to aggregate")
    kinds = {vec.kind for vec in vectors}
    if len(kinds) > 1:
        raise ValueError("cannot mix hijack and interception vectors")
    num: dict[int, float] = {}
    den: dict[int, float] = {}
    for vec in vectors:
        w = 1.0 if source_weights is None else float(source_weights[vec.source])
        if w < 0:
            raise ValueError(f"negative weight for source AS{vec.source}")
        for t, x in vec.values.items():
            num[t] = num.get(t, 0.0) + w * x
            den[t] = den.get(t, 0.0) + w
    if not den or all(d == 0 for d in den.values()):
        raise DegenerateInputError("total source weight is zero")
    return {t: num[t] / den[t] for t in sorted(num) if den[t] > 0}


def cdf_export(
    values: Mapping[int, float],
    weighting: Weighting = Weighting.UNIFORM,
    bandwidth: Mapping[int, float] | None = None,
) -> CdfSeries:
    """Cumulative distribution of resilience, optionally weighted by Tor bandwidth per AS."""
    weighting = Weighting(weighting)
    asns = list(values)
    if weighting is Weighting.TOR_BANDWIDTH:
        if bandwidth is None:
            raise ValueError("bandwidth weighting needs a bandwidth map")
        missing = [a for a in asns if a not in bandwidth]
        if missing:
            raise ValueError(f"no bandwidth for AS{missing[0]}")
        weights = np.array([float(bandwidth[a]) for a in asns])
    else:
        weights = np.ones(len(asns))
    total = weights.sum()
    if len(asns) == 0 or total <= 0:
        raise DegenerateInputError("total weight is zero")
    res = np.array([float(values[a]) for a in asns])
    xs, inv = np.unique(res, return_inverse=True)
    mass = np.bincount(inv.ravel(), weights=weights, minlength=len(xs))
    cum = np.cumsum(mass) / total
    cum[-1] = 1.0
    return CdfSeries(points=[(float(x), float(c)) for x, c in zip(xs, cum)], weighting=weighting)


def write_cdf_csv(series: CdfSeries, fh: TextIO) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(["resilience", "cum_fraction"])
    for x, c in series.points:
        w.writerow([f"{x:.6f}", f"{c:.6f}"])
