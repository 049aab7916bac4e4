"""Monitored /24 prefixes of Tor guard and exit relays, and the origin-AS check."""

from __future__ import annotations

import logging
from collections.abc import Collection, Iterable, Iterator, Mapping
from dataclasses import dataclass, field

from torbgp.monitor.alerts import Alert, Detector
from torbgp.monitor.stream import BgpUpdate, Net, net
from torbgp.relaydata import IpAsnMap, RelayRecord

log = logging.getLogger(__name__)


@dataclass
class PrefixRegistry:
    """Owner ASNs per monitored /24."""

    entries: dict[Net, frozenset[int]]
    skipped: int = 0
    _supernets: dict[Net, list[Net]] = field(default_factory=dict, repr=False)

    def __post_init__(self):
        self.entries = {net(p): frozenset(o) for p, o in self.entries.items()}
        for p, owners in self.entries.items():
            if p.prefixlen != 24:
                raise ValueError(f"monitored prefixes are /24s, got {p}")
            if not owners:
                raise ValueError(f"{p} has no owner AS")
        # every supernet (length 0..24) of a monitored /24 -> the /24s under it
        for p in sorted(self.entries):
            for plen in range(0, 25):
                self._supernets.setdefault(net(p.supernet(new_prefix=plen)), []).append(p)

    @classmethod
    def from_owners(cls, owners: Mapping[str | Net, Iterable[int]]) -> PrefixRegistry:
        return cls({net(p): frozenset(int(a) for a in o) for p, o in owners.items()})

    def __contains__(self, prefix) -> bool:
        return net(prefix) in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def covered(self, prefix: Net) -> list[Net]:
        """Monitored /24s equal to or inside ``prefix`` (empty for longer-than-/24 prefixes)."""
        return self._supernets.get(prefix, [])

    def is_monitored(self, prefix: Net) -> bool:
        return prefix in self._supernets

    def owners_for(self, prefix: Net) -> frozenset[int]:
        out: set[int] = set()
        for p in self.covered(prefix):
            out |= self.entries[p]
        return frozenset(out)

    def to_json(self) -> dict:
        return {str(p): sorted(o) for p, o in sorted(self.entries.items())}


def build_registry(relays: Iterable[RelayRecord], ip_map: IpAsnMap) -> PrefixRegistry:
    """Monitor the /24 of every Guard or Exit relay; owners are every ASN mapped inside it."""
    owners: dict[Net, set[int]] = {}
    skipped = 0
    for r in relays:
        if not (r.is_guard or r.is_exit):
            continue
        asns = ip_map.lookup_all(r.address)
        if r.asn is not None and r.asn not in asns:
            asns = [r.asn, *asns]
        if not asns:
            skipped += 1
            continue
        owners.setdefault(r.prefix24, set()).update(asns)
    for p, s in owners.items():
        s.update(a for _, a in ip_map.entries_within(p))
    if skipped:
        log.info("%d guard/exit relay(s) unmapped; not monitored", skipped)
    reg = PrefixRegistry({p: frozenset(s) for p, s in owners.items()})
    reg.skipped = skipped
    return reg


def filter_tor_updates(stream: Iterable[BgpUpdate], registry: PrefixRegistry) -> Iterator[BgpUpdate]:
    """Keep updates for a monitored /24 or any shorter prefix covering one."""
    for u in stream:
        if registry.is_monitored(u.prefix):
            yield u


def origin_check(
    update: BgpUpdate,
    registry: PrefixRegistry,
    benign: Collection[tuple[Net, int]] = (),
) -> Alert | None:
    if not update.is_announce:
        return None
    owners = registry.owners_for(update.prefix)
    if not owners or update.origin in owners or (update.prefix, update.origin) in benign:
        return None
    return Alert(Detector.ORIGIN_CHECK, update.prefix, update.origin, 1.0, update.ts)
