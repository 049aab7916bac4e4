"""BGP update records and their JSON-lines encoding."""

from __future__ import annotations

import enum
import ipaddress
import json
from collections.abc import Iterable, Iterator
from dataclasses import dataclass
from pathlib import Path

from torbgp.errors import ParseError



class Net(ipaddress.IPv4Network):
    """IPv4 network with a cached hash. Stream prefixes are interned via :func:`net`."""

    def __hash__(self):
        try:
            return self._hash
        except AttributeError:
            self._hash = super().__hash__()
            return self._hash


_INTERN: dict[str, Net] = {}


def net(spec: str | ipaddress.IPv4Network) -> Net:
    """Shared :class:`Net` instance for ``spec``; identical prefixes compare by identity in dicts."""
    key = spec if isinstance(spec, str) else str(spec)
    n = _INTERN.get(key)
    if n is None:
        n = Net(spec)
        _INTERN[key] = _INTERN[str(n)] = n
    return n


class UpdateKind(str, enum.Enum):
    ANNOUNCE = "A"
    WITHDRAW = "W"


@dataclass(frozen=True)
class BgpUpdate:
    ts: int
    kind: UpdateKind
    prefix: Net
    as_path: tuple[int, ...] = ()
    collector: str = ""

    def __post_init__(self):
        if self.kind is UpdateKind.ANNOUNCE and not self.as_path:
            raise ValueError("announcement without an AS path")
        if self.kind is UpdateKind.WITHDRAW and self.as_path:
            raise ValueError("withdrawal must not carry an AS path")

    @property
    def origin(self) -> int | None:
        return self.as_path[-1] if self.as_path else None

    @property
    def is_announce(self) -> bool:
        return self.kind is UpdateKind.ANNOUNCE

    @classmethod
    def announce(cls, ts: int, prefix: str | Net, as_path: Iterable[int], collector: str = "") -> BgpUpdate:
        return cls(int(ts), UpdateKind.ANNOUNCE, net(prefix), tuple(int(a) for a in as_path), collector)

    @classmethod
    def withdraw(cls, ts: int, prefix: str | Net, collector: str = "") -> BgpUpdate:
        return cls(int(ts), UpdateKind.WITHDRAW, net(prefix), (), collector)

    def to_json(self) -> str:
        obj: dict = {"ts": self.ts, "type": self.kind.value, "prefix": str(self.prefix)}
        if self.as_path:
            obj["as_path"] = list(self.as_path)
        obj["collector"] = self.collector
        return json.dumps(obj, separators=(", ", ": "))


def parse_update(line: str, lineno: int | None = None) -> BgpUpdate:
    try:
        obj = json.loads(line)
        kind = UpdateKind(obj["type"])
        path = tuple(int(a) for a in obj.get("as_path") or ())
        if kind is UpdateKind.WITHDRAW:
            path = ()
        ts = obj["ts"]
        if isinstance(ts, bool) or int(ts) != ts:
            raise ValueError(f"timestamp {ts!r} is not an integer")
        return BgpUpdate(int(ts), kind, net(obj["prefix"]), path, str(obj.get("collector", "")))
    except (ValueError, KeyError, TypeError) as exc:
        raise ParseError(f"bad update: {exc}", lineno) from None


def iter_stream(lines: Iterable[str]) -> Iterator[BgpUpdate]:
    for lineno, line in enumerate(lines, start=1):
        if line.strip():
            yield parse_update(line, lineno)


def read_stream(path: str | Path) -> list[BgpUpdate]:
    with open(path, encoding="utf-8") as fh:
        return list(iter_stream(fh))


def write_stream(updates: Iterable[BgpUpdate], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for u in updates:
            fh.write(u.to_json() + "\n")
