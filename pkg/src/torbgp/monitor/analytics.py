"""Baseline bookkeeping and the frequency / time analytics.

A :class:`Baseline` summarizes a window of updates: announcement counts per
(prefix, origin), and how long each route key was the active announcement
for its prefix. A route key is the origin AS by default, or the full AS path
when ``granularity="path"``. An announcement stays active until a withdrawal
of the prefix, an announcement with a different key, or the window end.
"""

from __future__ import annotations

import copy
from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass, field

from torbgp.errors import SequencingError
from torbgp.monitor.alerts import Alert, Detector
from torbgp.monitor.stream import BgpUpdate, Net

ORDER_TOLERANCE = 60
GRANULARITIES = ("origin", "path")


def route_key(u: BgpUpdate, granularity: str):
    return u.origin if granularity == "origin" else u.as_path


def _origin_of(key) -> int:
    return key[-1] if isinstance(key, tuple) else key


@dataclass
class Baseline:
    window: tuple[int, int]
    granularity: str = "origin"
    ann_count: dict[tuple[Net, int], int] = field(default_factory=dict)
    total_count: dict[Net, int] = field(default_factory=dict)
    # closed intervals only; open ones live in ``active`` as key -> since
    closed_duration: dict[tuple[Net, object], int] = field(default_factory=dict)
    active: dict[Net, dict[object, int]] = field(default_factory=dict)
    first_seen: dict[Net, int] = field(default_factory=dict)
    last_ts: int | None = None

    def __post_init__(self):
        if self.granularity not in GRANULARITIES:
            raise ValueError(f"granularity must be one of {GRANULARITIES}")

    @classmethod
    def empty(cls, start: int, granularity: str = "origin") -> Baseline:
        return cls(window=(start, start), granularity=granularity)

    def duration(self, prefix: Net, key, at: int | None = None) -> int:
        at = self.window[1] if at is None else at
        d = self.closed_duration.get((prefix, key), 0)
        since = self.active.get(prefix, {}).get(key)
        if since is not None:
            d += max(at - since, 0)
        return d

    def span(self, prefix: Net, at: int | None = None) -> int:
        at = self.window[1] if at is None else at
        first = self.first_seen.get(prefix)
        return 0 if first is None else max(at - first, 0)

    @property
    def active_duration(self) -> dict[tuple[Net, object], int]:
        keys = set(self.closed_duration)
        keys.update((p, k) for p, ks in self.active.items() for k in ks)
        return {pk: self.duration(*pk) for pk in sorted(keys, key=repr)}

    @property
    def observed_span(self) -> dict[Net, int]:
        return {p: self.span(p) for p in self.first_seen}

    def rollover(self, start: int) -> Baseline:
        """Empty baseline for the window starting at ``start``; open announcements carry over."""
        nxt = Baseline.empty(start, self.granularity)
        for p, keys in self.active.items():
            if keys:
                nxt.active[p] = {k: start for k in keys}
                nxt.first_seen[p] = start
        return nxt

    def _close(self, prefix: Net, key, at: int) -> None:
        since = self.active[prefix].pop(key)
        pk = (prefix, key)
        self.closed_duration[pk] = self.closed_duration.get(pk, 0) + max(at - since, 0)


def update_baseline(
    baseline: Baseline,
    batch: Iterable[BgpUpdate],
    *,
    end: int | None = None,
    exclude: Collection[tuple[Net, int]] = (),
) -> Baseline:
    """Return a copy of ``baseline`` extended with ``batch`` (in timestamp order).

    ``exclude`` lists (prefix, origin) pairs that were already flagged; their
    announcements are left out so an attacker cannot pollute the baseline.
    ``end`` moves the window end forward (defaults to the last timestamp).
    """
    b = copy.deepcopy(baseline)
    accrue(b, batch, end=end, exclude=exclude)
    return b


def accrue(
    b: Baseline,
    batch: Iterable[BgpUpdate],
    *,
    end: int | None = None,
    exclude: Collection[tuple[Net, int]] = (),
) -> None:
    """In-place form of :func:`update_baseline`."""
    gran = b.granularity
    last = b.window[1] if b.last_ts is None else max(b.last_ts, b.window[1])
    for u in batch:
        if u.ts < last - ORDER_TOLERANCE:
            raise SequencingError(f"update at {u.ts} is older than {last} by more than {ORDER_TOLERANCE}s")
        # small reorderings are clamped so intervals never run backwards
        ts = max(u.ts, last)
        last = ts
        p = u.prefix
        if u.is_announce and (p, u.origin) in exclude:
            continue
        b.first_seen.setdefault(p, ts)
        act = b.active.setdefault(p, {})
        if u.is_announce:
            key = route_key(u, gran)
            b.ann_count[(p, u.origin)] = b.ann_count.get((p, u.origin), 0) + 1
            b.total_count[p] = b.total_count.get(p, 0) + 1
            for other in [k for k in act if k != key]:
                b._close(p, other, ts)
            act.setdefault(key, ts)
        else:
            for k in list(act):
                b._close(p, k, ts)
    b.last_ts = last
    stop = max(b.window[1], last if end is None else end)
    b.window = (b.window[0], stop)


def _announced(current: Iterable[BgpUpdate], gran: str) -> dict[tuple[Net, object], int]:
    """(prefix, key) -> first timestamp, in order of first appearance."""
    seen: dict[tuple[Net, object], int] = {}
    for u in current:
        if u.is_announce:
            seen.setdefault((u.prefix, route_key(u, gran)), u.ts)
    return seen


def _check_threshold(threshold: float) -> None:
    if not 0.0 <= threshold < 1.0:
        raise ValueError(f"threshold must lie in [0, 1), got {threshold}")


def frequency_ratios(
    baseline: Baseline,
    current: Iterable[BgpUpdate],
    *,
    exclude: Collection[tuple[Net, int]] = (),
) -> dict[tuple[Net, int], tuple[float, int]]:
    """(prefix, origin) announced in ``current`` -> (share of the prefix's announcements, first ts).

    Shares are over baseline plus current counts; excluded pairs count for
    nothing, so the shares of a prefix's remaining origins still sum to one.
    """
    cur_pair: dict[tuple[Net, int], int] = {}
    cur_total: dict[Net, int] = {}
    first: dict[tuple[Net, int], int] = {}
    for u in current:
        if not u.is_announce:
            continue
        pk = (u.prefix, u.origin)
        first.setdefault(pk, u.ts)
        if pk not in exclude:
            cur_pair[pk] = cur_pair.get(pk, 0) + 1
            cur_total[u.prefix] = cur_total.get(u.prefix, 0) + 1
    out = {}
    for (p, o), ts in first.items():
        total = baseline.total_count.get(p, 0) + cur_total.get(p, 0)
        if total:
            out[(p, o)] = ((baseline.ann_count.get((p, o), 0) + cur_pair.get((p, o), 0)) / total, ts)
    return out


def frequency_analytic(
    baseline: Baseline,
    current: Iterable[BgpUpdate],
    threshold: float,
    *,
    exclude: Collection[tuple[Net, int]] = (),
) -> list[Alert]:
    """Flag (prefix, origin) pairs whose share of the prefix's announcements is below ``threshold``."""
    _check_threshold(threshold)
    return [
        Alert(Detector.FREQUENCY, p, o, ratio, ts)
        for (p, o), (ratio, ts) in frequency_ratios(baseline, current, exclude=exclude).items()
        if ratio < threshold
    ]


def time_analytic(
    baseline: Baseline,
    current: Iterable[BgpUpdate],
    threshold: float,
    *,
    start: int | None = None,
    end: int | None = None,
    carry: Mapping[Net, Iterable] | None = None,
) -> list[Alert]:
    """Flag route keys whose share of the prefix's observed time is below ``threshold``.

    The current batch covers ``[start, end]``: ``start`` defaults to the
    baseline's window end, ``end`` (the evaluation instant) to the last update.
    ``carry`` names the route keys already active at ``start``; by default the
    baseline's still-open announcements.
    """
    _check_threshold(threshold)
    current = list(current)
    gran = baseline.granularity
    start = baseline.window[1] if start is None else start
    if end is None:
        end = max([start] + [u.ts for u in current])
    if carry is None:
        carry = {p: list(ks) for p, ks in baseline.active.items()}

    cur = Baseline.empty(start, gran)
    for p, keys in carry.items():
        keys = list(keys)
        if keys:
            cur.active[p] = {k: start for k in keys}
    # the observed span runs on from the baseline into the current batch
    for p in set(baseline.first_seen) | set(cur.active):
        cur.first_seen[p] = start
    accrue(cur, current, end=end)

    alerts = []
    for (p, key), ts in _announced(current, gran).items():
        span = baseline.span(p) + cur.span(p, end)
        if span <= 0:
            continue
        frac = (baseline.duration(p, key) + cur.duration(p, key, end)) / span
        if frac < threshold:
            alerts.append(Alert(Detector.TIME, p, _origin_of(key), frac, ts))
    return alerts
