"""Stream replay: real-time origin check, hourly analytics, blacklist, attack injection, scoring."""

from __future__ import annotations

import heapq
import json
import logging
from collections.abc import Collection, Iterable, Mapping
from dataclasses import dataclass, field
from datetime import datetime, timezone

from torbgp.monitor.alerts import Alert, Detector
from torbgp.monitor.analytics import Baseline, accrue, frequency_analytic, time_analytic
from torbgp.monitor.registry import PrefixRegistry, filter_tor_updates, origin_check
from torbgp.monitor.stream import BgpUpdate, Net, net

log = logging.getLogger(__name__)

HOUR = 3600
DAY = 86400
DEFAULT_FREQ_THRESHOLD = 0.0025
DEFAULT_TIME_THRESHOLD = 0.065
DEFAULT_QUARANTINE = DAY


# --- blacklist ---------------------------------------------------------------


@dataclass(frozen=True)
class BlacklistEntry:
    since: int
    detectors: frozenset[Detector]


Blacklist = dict[Net, BlacklistEntry]


def blacklist_step(blacklist: Mapping[Net, BlacklistEntry], alerts: Iterable[Alert],
                   recovered: Iterable[Net] = ()) -> Blacklist:
    out = dict(blacklist)
    for a in alerts:
        cur = out.get(a.prefix)
        if cur is None:
            out[a.prefix] = BlacklistEntry(a.first_seen, frozenset({a.detector}))
        else:
            out[a.prefix] = BlacklistEntry(cur.since, cur.detectors | {a.detector})
    for p in recovered:
        out.pop(p, None)
    return out


def blacklist_json(blacklist: Mapping[Net, BlacklistEntry]) -> str:
    obj = {
        str(p): {"since": e.since, "detectors": sorted(d.value for d in e.detectors)}
        for p, e in sorted(blacklist.items())
    }
    return json.dumps(obj, indent=2, sort_keys=True)


# --- replay ------------------------------------------------------------------


@dataclass(frozen=True)
class MonitorConfig:
    freq_threshold: float = DEFAULT_FREQ_THRESHOLD
    time_threshold: float = DEFAULT_TIME_THRESHOLD
    # None = calendar months (UTC); otherwise fixed windows of this many days
    window_days: int | None = None
    batch_seconds: int = HOUR
    quarantine: int = DEFAULT_QUARANTINE
    granularity: str = "origin"
    benign: frozenset[tuple[Net, int]] = frozenset()

    def __post_init__(self):
        for name in ("freq_threshold", "time_threshold"):
            v = getattr(self, name)
            if not 0.0 <= v < 1.0:
                raise ValueError(f"{name} must lie in [0, 1), got {v}")
        if self.batch_seconds <= 0 or self.quarantine < 0:
            raise ValueError("batch_seconds must be positive and quarantine nonnegative")
        if self.window_days is not None and self.window_days <= 0:
            raise ValueError("window_days must be positive")


def _month_start(ts: int) -> int:
    d = datetime.fromtimestamp(ts, tz=timezone.utc)
    return int(datetime(d.year, d.month, 1, tzinfo=timezone.utc).timestamp())


def _next_month(start: int) -> int:
    d = datetime.fromtimestamp(start, tz=timezone.utc)
    y, m = (d.year + 1, 1) if d.month == 12 else (d.year, d.month + 1)
    return int(datetime(y, m, 1, tzinfo=timezone.utc).timestamp())


@dataclass
class HourRecord:
    """Announced (prefix, origin) pairs of one batch and the pairs each detector flagged."""

    start: int
    evaluated: bool
    pairs: set[tuple[Net, int]] = field(default_factory=set)
    flagged: dict[Detector, set[tuple[Net, int]]] = field(default_factory=dict)


@dataclass
class MonitorResult:
    alerts: list[Alert]
    blacklist: Blacklist
    hours: list[HourRecord]
    removed: list[tuple[int, Net]]

    def alerts_jsonl(self) -> str:
        return "".join(a.to_json() + "\n" for a in self.alerts)


class Monitor:
    """Single consumer replaying updates in timestamp order.

    Origin checks run per update. Every ``batch_seconds`` the frequency and
    time analytics score the batch against the previous complete window.
    The first window only builds a baseline.
    """

    def __init__(self, registry: PrefixRegistry, config: MonitorConfig | None = None):
        self.registry = registry
        self.config = config or MonitorConfig()
        self.alerts: list[Alert] = []
        self.blacklist: Blacklist = {}
        self.hours: list[HourRecord] = []
        self.removed: list[tuple[int, Net]] = []
        self.flagged_pairs: set[tuple[Net, int]] = set()
        self._window: Baseline | None = None
        self._window_end = 0
        self._prev: Baseline | None = None
        self._batch: list[BgpUpdate] = []
        self._batch_start: int | None = None
        self._last_bad: dict[Net, int] = {}
        self._batch_origin: set[tuple[Net, int]] = set()

    def _window_bounds(self, ts: int) -> tuple[int, int]:
        if self.config.window_days is None:
            start = _month_start(ts)
            return start, _next_month(start)
        span = self.config.window_days * DAY
        start = ts - ts % span
        return start, start + span

    def _batch_floor(self, ts: int) -> int:
        return ts - ts % self.config.batch_seconds

    def feed(self, u: BgpUpdate) -> None:
        if self._batch_start is None:
            self._batch_start = self._batch_floor(u.ts)
            start, self._window_end = self._window_bounds(u.ts)
            self._window = Baseline.empty(start, self.config.granularity)
        while u.ts >= self._batch_start + self.config.batch_seconds:
            self._close_batch()
        if u.is_announce:
            owners = self.registry.owners_for(u.prefix)
            benign = (u.prefix, u.origin) in self.config.benign
            if owners and u.origin not in owners and not benign:
                self._last_bad[u.prefix] = u.ts
            a = origin_check(u, self.registry, self.config.benign)
            if a is not None:
                self._emit([a])
                self._batch_origin.add((a.prefix, a.offending_origin))
        self._batch.append(u)

    def _emit(self, alerts: list[Alert]) -> None:
        if not alerts:
            return
        self.alerts.extend(alerts)
        self.blacklist = blacklist_step(self.blacklist, alerts)
        for a in alerts:
            self._last_bad[a.prefix] = max(self._last_bad.get(a.prefix, a.first_seen), a.first_seen)

    def _close_batch(self) -> None:
        cfg = self.config
        start = self._batch_start
        end = start + cfg.batch_seconds
        batch, self._batch = self._batch, []
        rec = HourRecord(start, evaluated=self._prev is not None)
        rec.pairs = {(u.prefix, u.origin) for u in batch if u.is_announce}
        if self._prev is not None and batch:
            carry = {p: list(ks) for p, ks in self._window.active.items()}
            freq = frequency_analytic(self._prev, batch, cfg.freq_threshold, exclude=self.flagged_pairs)
            tim = time_analytic(self._prev, batch, cfg.time_threshold, start=start, end=end, carry=carry)
            for det, found in ((Detector.FREQUENCY, freq), (Detector.TIME, tim)):
                rec.flagged[det] = {(a.prefix, a.offending_origin) for a in found}
            self._emit(sorted(freq + tim, key=lambda a: (a.first_seen, a.detector.value, str(a.prefix))))
            self.flagged_pairs |= rec.flagged[Detector.FREQUENCY] | rec.flagged[Detector.TIME]
        rec.flagged[Detector.ORIGIN_CHECK], self._batch_origin = self._batch_origin, set()
        self.hours.append(rec)

        accrue(self._window, batch, end=min(end, self._window_end), exclude=self.flagged_pairs)
        if end >= self._window_end:
            self._prev = self._window
            self._prev.window = (self._prev.window[0], self._window_end)
            nstart, self._window_end = self._window_bounds(self._window_end)
            self._window = self._prev.rollover(nstart)
        self._recover(end)
        self._batch_start = end

    def _recover(self, now: int) -> None:
        q = self.config.quarantine
        done = [p for p, e in self.blacklist.items() if now - max(e.since, self._last_bad.get(p, e.since)) >= q]
        if done:
            self.blacklist = blacklist_step(self.blacklist, (), done)
            self.removed.extend((now, p) for p in sorted(done))

    def finish(self) -> MonitorResult:
        if self._batch_start is not None:
            self._close_batch()
        return MonitorResult(self.alerts, self.blacklist, self.hours, self.removed)


def run_monitor(stream: Iterable[BgpUpdate], registry: PrefixRegistry,
                config: MonitorConfig | None = None) -> MonitorResult:
    mon = Monitor(registry, config)
    # stable sort keeps the input order of same-second updates
    for u in sorted(filter_tor_updates(stream, registry), key=lambda u: u.ts):
        mon.feed(u)
    return mon.finish()


# --- injection and scoring ---------------------------------------------------


@dataclass(frozen=True)
class AttackSpec:
    prefix: Net
    false_origin: int
    start: int
    duration: int
    n_updates: int
    path: tuple[int, ...] = ()
    collector: str = "inject"

    def __post_init__(self):
        object.__setattr__(self, "prefix", net(self.prefix))
        object.__setattr__(self, "path", tuple(int(a) for a in self.path))
        if self.n_updates < 1:
            raise ValueError("n_updates must be at least 1")
        if self.duration < 0:
            raise ValueError("duration must be nonnegative")
        if self.path and self.path[-1] != self.false_origin:
            raise ValueError("path must end at the false origin")

    @classmethod
    def from_dict(cls, d: Mapping) -> AttackSpec:
        return cls(
            prefix=d["prefix"],
            false_origin=int(d["false_origin"]),
            start=int(d["start"]),
            duration=int(d["duration"]),
            n_updates=int(d["n_updates"]),
            path=tuple(int(a) for a in d.get("path", ())),
        )

    def updates(self) -> list[BgpUpdate]:
        path = self.path or (self.false_origin,)
        n = self.n_updates
        ts = [self.start + (i * self.duration // (n - 1) if n > 1 else 0) for i in range(n)]
        return [BgpUpdate.announce(t, self.prefix, path, self.collector) for t in ts]


@dataclass(frozen=True)
class InjectedAttack:
    spec: AttackSpec
    timestamps: tuple[int, ...]

    @property
    def pair(self) -> tuple[Net, int]:
        return (self.spec.prefix, self.spec.false_origin)


def inject_attack(stream: Iterable[BgpUpdate], spec: AttackSpec,
                  registry: PrefixRegistry) -> tuple[list[BgpUpdate], InjectedAttack]:
    """Merge the spoofed announcements into ``stream``; the label is returned separately."""
    if not registry.is_monitored(spec.prefix):
        raise ValueError(f"{spec.prefix} is not a monitored prefix")
    fake = spec.updates()
    merged = list(heapq.merge(stream, fake, key=lambda u: u.ts))
    return merged, InjectedAttack(spec, tuple(u.ts for u in fake))


def inject_attacks(stream: Iterable[BgpUpdate], specs: Iterable[AttackSpec],
                   registry: PrefixRegistry) -> tuple[list[BgpUpdate], list[InjectedAttack]]:
    out = list(stream)
    labels = []
    for s in specs:
        out, lab = inject_attack(out, s, registry)
        labels.append(lab)
    return out, labels


@dataclass
class DetectorScore:
    detected: int = 0
    false_negatives: int = 0
    false_positives: int = 0
    fp_rate: float = 0.0
    hours: int = 0

    def to_dict(self) -> dict:
        return {
            "detected": self.detected,
            "false_negatives": self.false_negatives,
            "false_positives": self.false_positives,
            "fp_rate": self.fp_rate,
            "hours": self.hours,
        }


def score_result(result: MonitorResult, attacks: Collection[InjectedAttack]) -> dict[Detector, DetectorScore]:
    """Per-detector detection counts and the mean hourly false-positive rate.

    An attack is detected when an alert names its prefix and false origin
    within the hour after its first announcement. False positives are flagged
    benign (prefix, origin) pairs, counted once per batch.
    """
    attack_pairs = {a.pair for a in attacks}
    scores: dict[Detector, DetectorScore] = {}
    for det in Detector:
        sc = DetectorScore()
        hits = [a for a in result.alerts if a.detector is det]
        for atk in attacks:
            t0 = atk.timestamps[0]
            if any((a.prefix, a.offending_origin) == atk.pair and t0 <= a.first_seen < t0 + HOUR for a in hits):
                sc.detected += 1
            else:
                sc.false_negatives += 1
        rates = []
        for rec in result.hours:
            if det is not Detector.ORIGIN_CHECK and not rec.evaluated:
                continue
            benign = rec.pairs - attack_pairs
            if not benign:
                continue
            fp = rec.flagged.get(det, set()) - attack_pairs
            sc.false_positives += len(fp)
            rates.append(len(fp) / len(benign))
        sc.hours = len(rates)
        sc.fp_rate = sum(rates) / len(rates) if rates else 0.0
        scores[det] = sc
    return scores


def evaluate_detection(stream: Iterable[BgpUpdate], attacks: Collection[InjectedAttack],
                       registry: PrefixRegistry, config: MonitorConfig | None = None) -> dict:
    """Replay ``stream`` (attacks already merged in) and score every detector."""
    result = run_monitor(stream, registry, config)
    scores = score_result(result, attacks)
    return {
        "attacks": len(attacks),
        "detectors": {d.value: s.to_dict() for d, s in scores.items()},
    }
