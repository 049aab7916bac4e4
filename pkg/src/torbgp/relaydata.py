"""Tor relay ingestion, IP-to-ASN resolution and bandwidth normalization."""

from __future__ import annotations

import base64
import binascii
import ipaddress
import json
import logging
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field, replace
from pathlib import Path

from torbgp.errors import DegenerateInputError, ParseError

log = logging.getLogger(__name__)

IPv4 = ipaddress.IPv4Address
Net = ipaddress.IPv4Network


def prefix24(address: IPv4) -> Net:
    return Net((int(address) & 0xFFFFFF00, 24))


@dataclass(frozen=True)
class RelayRecord:
    nickname: str
    fingerprint: str
    address: IPv4
    flags: frozenset[str]
    bandwidth: int
    asn: int | None = None

    @property
    def prefix24(self) -> Net:
        return prefix24(self.address)

    @property
    def is_guard(self) -> bool:
        return "Guard" in self.flags

    @property
    def is_exit(self) -> bool:
        return "Exit" in self.flags


@dataclass
class IpAsnMap:
    """Longest-prefix-match table. One prefix may list several ASNs; the first is primary."""

    entries: list[tuple[Net, int]] = field(default_factory=list)

    def __post_init__(self):
        self._by_len: dict[int, dict[int, list[int]]] = {}
        for net, asn in self.entries:
            self._add(net, asn)

    def _add(self, net: Net, asn: int) -> None:
        bucket = self._by_len.setdefault(net.prefixlen, {})
        owners = bucket.setdefault(int(net.network_address), [])
        if asn not in owners:
            owners.append(asn)

    def add(self, net: Net | str, asn: int) -> None:
        net = Net(net) if isinstance(net, str) else net
        self.entries.append((net, int(asn)))
        self._add(net, int(asn))

    def lookup_all(self, address: IPv4 | str) -> list[int]:
        a = int(IPv4(address) if isinstance(address, str) else address)
        for plen in sorted(self._by_len, reverse=True):
            mask = (0xFFFFFFFF << (32 - plen)) & 0xFFFFFFFF
            hit = self._by_len[plen].get(a & mask)
            if hit:
                return list(hit)
        return []

    def lookup(self, address: IPv4 | str) -> int | None:
        hit = self.lookup_all(address)
        return hit[0] if hit else None

    def entries_within(self, net: Net) -> list[tuple[Net, int]]:
        return [(n, a) for n, a in self.entries if n.subnet_of(net)]


@dataclass(frozen=True)
class ClientSet:
    members: tuple[tuple[int, float], ...]

    def __post_init__(self):
        if not self.members:
            raise DegenerateInputError("client set is empty")
        asns = [a for a, _ in self.members]
        if len(set(asns)) != len(asns):
            raise ParseError("duplicate client ASN")
        if any(w <= 0 for _, w in self.members):
            raise ParseError("client weights must be positive")

    @property
    def asns(self) -> list[int]:
        return [a for a, _ in self.members]

    @property
    def weights(self) -> dict[int, float]:
        return dict(self.members)


def _fingerprint_from_b64(identity: str, lineno: int) -> str:
    try:
        raw = base64.b64decode(identity + "=" * (-len(identity) % 4), validate=True)
    except (binascii.Error, ValueError):
        raise ParseError(f"identity {identity!r} is not base64", lineno) from None
    if len(raw) != 20:
        raise ParseError(f"identity decodes to {len(raw)} bytes, expected 20", lineno)
    return raw.hex().upper()


def _parse_consensus(lines: Iterable[str]) -> list[RelayRecord]:
    relays: list[dict] = []
    missing_bw = 0
    for lineno, raw in enumerate(lines, start=1):
        parts = raw.split()
        if not parts:
            continue
        kw = parts[0]
        if kw == "r":
            if len(parts) < 9:
                raise ParseError("r line needs 8 fields", lineno)
            try:
                addr = IPv4(parts[6])
            except ValueError:
                raise ParseError(f"bad IPv4 address {parts[6]!r}", lineno) from None
            relays.append(
                dict(
                    nickname=parts[1],
                    fingerprint=_fingerprint_from_b64(parts[2], lineno),
                    address=addr,
                    flags=frozenset(),
                    bandwidth=None,
                )
            )
        elif kw == "s":
            if not relays:
                raise ParseError("s line before any r line", lineno)
            relays[-1]["flags"] = frozenset(parts[1:])
        elif kw == "w":
            if not relays:
                raise ParseError("w line before any r line", lineno)
            for item in parts[1:]:
                if item.startswith("Bandwidth="):
                    try:
                        relays[-1]["bandwidth"] = int(item.split("=", 1)[1])
                    except ValueError:
                        raise ParseError(f"bad bandwidth {item!r}", lineno) from None
    out = []
    for r in relays:
        if r["bandwidth"] is None:
            missing_bw += 1
            r["bandwidth"] = 0
        out.append(RelayRecord(**r))
    if missing_bw:
        log.warning("%d relay(s) without a Bandwidth weight; using 0", missing_bw)
    return out


def _parse_jsonl(lines: Iterable[str]) -> list[RelayRecord]:
    out = []
    for lineno, raw in enumerate(lines, start=1):
        if not raw.strip():
            continue
        try:
            obj = json.loads(raw)
            fp = str(obj["fingerprint"]).upper()
            if len(fp) != 40 or any(c not in "0123456789ABCDEF" for c in fp):
                raise ValueError(f"fingerprint {fp!r} is not 40 hex chars")
            out.append(
                RelayRecord(
                    nickname=str(obj["nickname"]),
                    fingerprint=fp,
                    address=IPv4(obj["address"]),
                    flags=frozenset(obj.get("flags", ())),
                    bandwidth=int(obj["bandwidth"]),
                    asn=int(obj["asn"]) if obj.get("asn") is not None else None,
                )
            )
        except (ValueError, KeyError, TypeError) as exc:
            raise ParseError(str(exc), lineno) from None
        if out[-1].bandwidth < 0:
            raise ParseError("negative bandwidth", lineno)
    return out


def load_relays(source: str) -> list[RelayRecord]:
    """Parse relays from consensus text or from JSON-lines (auto-detected)."""
    lines = source.splitlines()
    first = next((ln.lstrip() for ln in lines if ln.strip()), "")
    if first.startswith("{"):
        return _parse_jsonl(lines)
    return _parse_consensus(lines)


def read_relays(path: str | Path) -> list[RelayRecord]:
    return load_relays(Path(path).read_text(encoding="utf-8"))


def load_ip_map(source: str) -> IpAsnMap:
    """Parse ``prefix<TAB>asn`` lines (any whitespace accepted, ``#`` comments)."""
    m = IpAsnMap()
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        if len(parts) != 2:
            raise ParseError(f"expected prefix<TAB>asn, got {line!r}", lineno)
        try:
            m.add(Net(parts[0], strict=False), int(parts[1]))
        except ValueError as exc:
            raise ParseError(str(exc), lineno) from None
    return m


def read_ip_map(path: str | Path) -> IpAsnMap:
    return load_ip_map(Path(path).read_text(encoding="utf-8"))


def load_clients(source: str) -> ClientSet:
    members = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = [p.strip() for p in line.split(",")]
        try:
            asn = int(parts[0])
            weight = float(parts[1]) if len(parts) > 1 else 1.0
        except ValueError:
            raise ParseError(f"expected asn[,weight], got {line!r}", lineno) from None
        if len(parts) > 2:
            raise ParseError(f"expected asn[,weight], got {line!r}", lineno)
        members.append((asn, weight))
    return ClientSet(tuple(members))


def read_clients(path: str | Path) -> ClientSet:
    return load_clients(Path(path).read_text(encoding="utf-8"))


def resolve_asn(ip_map: IpAsnMap, relays: Iterable[RelayRecord]) -> list[RelayRecord]:
    """Attach the longest-prefix-match ASN to each relay; unmatched relays get ``asn=None``."""
    out = [replace(r, asn=ip_map.lookup(r.address)) for r in relays]
    unmapped = sum(r.asn is None for r in out)
    if unmapped:
        log.info("%d of %d relays have no IP-to-ASN mapping", unmapped, len(out))
    return out


def filter_flag(relays: Iterable[RelayRecord], flag: str | None) -> list[RelayRecord]:
    return [r for r in relays if flag is None or flag in r.flags]


def normalize_bandwidth(relays: Iterable[RelayRecord], subset: str | None = "Guard") -> dict[str, float]:
    """Bandwidth divided by the largest bandwidth among relays carrying ``subset``."""
    chosen = filter_flag(relays, subset)
    if not chosen:
        raise DegenerateInputError(f"no relays with flag {subset!r}")
    top = max(r.bandwidth for r in chosen)
    if top <= 0:
        raise DegenerateInputError("all bandwidths are zero")
    return {r.fingerprint: r.bandwidth / top for r in chosen}


def as_bandwidth(relays: Iterable[RelayRecord], flag: str | None = None) -> dict[int, float]:
    """Summed consensus bandwidth per ASN (mapped relays only)."""
    out: dict[int, float] = {}
    for r in filter_flag(relays, flag):
        if r.asn is not None:
            out[r.asn] = out.get(r.asn, 0.0) + r.bandwidth
    return out


def relays_by_as(relays: Iterable[RelayRecord]) -> Mapping[int, list[RelayRecord]]:
    out: dict[int, list[RelayRecord]] = {}
    for r in relays:
        if r.asn is not None:
            out.setdefault(r.asn, []).append(r)
    return out


def relay_json(r: RelayRecord) -> str:
    obj = {
        "nickname": r.nickname,
        "fingerprint": r.fingerprint,
        "address": str(r.address),
        "flags": sorted(r.flags),
        "bandwidth": r.bandwidth,
    }
    if r.asn is not None:
        obj["asn"] = r.asn
    return json.dumps(obj)


def write_relays(relays: Iterable[RelayRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for r in relays:
            fh.write(relay_json(r) + "\n")


def write_ip_map(ip_map: IpAsnMap, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for n, asn in ip_map.entries:
            fh.write(f"{n}\t{asn}\n")
