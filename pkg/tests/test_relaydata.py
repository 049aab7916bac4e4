import base64
import ipaddress
import json

import pytest
from hypothesis import given
from hypothesis import strategies as st

from torbgp.errors import DegenerateInputError, ParseError
from torbgp.relaydata import (
    ClientSet,
    IpAsnMap,
    RelayRecord,
    as_bandwidth,
    filter_flag,
    load_clients,
    load_ip_map,
    load_relays,
    normalize_bandwidth,
    relay_json,
    resolve_asn,
)

ID_A = base64.b64encode(bytes(range(20))).decode().rstrip("=")
ID_B = base64.b64encode(bytes(range(20, 40))).decode().rstrip("=")

CONSENSUS = f"""network-status-version 3
r alpha {ID_A} digestdigestdigestdigestdig 2016-01-01 00:00:00 1.2.3.4 9001 0
s Fast Guard Running Stable Valid
w Bandwidth=5000
r beta {ID_B} digestdigestdigestdigestdig 2016-01-01 00:00:00 5.6.7.8 443 80
s Exit Fast Running Valid
w Bandwidth=2500 Unmeasured=1
"""


def _relay(fp, bw, flags=("Guard",), asn=None, addr="10.0.0.1"):
    return RelayRecord(fp, fp, ipaddress.IPv4Address(addr), frozenset(flags), bw, asn)


def test_consensus_parse():
    a, b = load_relays(CONSENSUS)
    assert a.nickname == "alpha" and a.fingerprint == bytes(range(20)).hex().upper()
    assert a.is_guard and not a.is_exit and a.bandwidth == 5000
    assert str(b.address) == "5.6.7.8" and b.is_exit and b.bandwidth == 2500


def test_consensus_missing_bandwidth_is_zero(caplog):
    (r,) = load_relays(f"r x {ID_A} d 2016-01-01 00:00:00 1.2.3.4 1 0\ns Guard\n")
    assert r.bandwidth == 0
    assert "Bandwidth" in caplog.text


def test_consensus_errors():
    with pytest.raises(ParseError, match="line 1"):
        load_relays("s Guard\n")
    with pytest.raises(ParseError, match="line 1"):
        load_relays("r x notbase64!! d 2016-01-01 00:00:00 1.2.3.4 1 0\n")
    with pytest.raises(ParseError, match="line 1"):
        load_relays(f"r x {ID_A} d 2016-01-01 00:00:00 1.2.3.999 1 0\n")


def test_jsonl_order_preserved():
    lines = [
        {"nickname": "n1", "fingerprint": "A" * 40, "address": "1.1.1.1", "flags": ["Guard"], "bandwidth": 10},
        {"nickname": "n2", "fingerprint": "b" * 40, "address": "2.2.2.2", "flags": [], "bandwidth": 20},
    ]
    rs = load_relays("\n".join(json.dumps(x) for x in lines))
    assert [r.nickname for r in rs] == ["n1", "n2"]
    assert rs[1].fingerprint == "B" * 40
    assert load_relays(relay_json(rs[0]))[0] == rs[0]


def test_jsonl_bad_fingerprint():
    with pytest.raises(ParseError, match="line 1"):
        load_relays(json.dumps({"nickname": "n", "fingerprint": "XYZ", "address": "1.1.1.1", "bandwidth": 1}))


def test_longest_prefix_match():
    m = load_ip_map("# test\n1.2.0.0/16\t100\n1.2.3.0/24\t200\n")
    assert m.lookup("1.2.3.4") == 200
    assert m.lookup("1.2.9.9") == 100
    assert m.lookup("9.9.9.9") is None


def test_ip_map_multi_origin_and_errors():
    m = load_ip_map("1.2.3.0/24 100\n1.2.3.0/24 200\n")
    assert m.lookup_all("1.2.3.7") == [100, 200]
    with pytest.raises(ParseError, match="line 2"):
        load_ip_map("1.2.3.0/24 100\nnonsense\n")


def test_resolve_is_idempotent():
    m = IpAsnMap()
    m.add("10.0.0.0/8", 64500)
    rs = [_relay("A" * 40, 1), _relay("B" * 40, 1, addr="11.0.0.1")]
    once = resolve_asn(m, rs)
    assert [r.asn for r in once] == [64500, None]
    assert resolve_asn(m, once) == once


def test_clients():
    cs = load_clients("# top clients\n3320,2.5\n7922\n")
    assert cs.asns == [3320, 7922] and cs.weights == {3320: 2.5, 7922: 1.0}
    with pytest.raises(DegenerateInputError):
        load_clients("# nothing\n")
    with pytest.raises(ParseError):
        load_clients("1\n1\n")
    with pytest.raises(ParseError):
        ClientSet(((1, 0.0),))


def test_normalize_bandwidth():
    rs = [_relay("a", 5000), _relay("b", 2500), _relay("c", 0), _relay("d", 9999, flags=("Exit",))]
    assert normalize_bandwidth(rs) == {"a": 1.0, "b": 0.5, "c": 0.0}
    assert normalize_bandwidth([_relay("x", 7)]) == {"x": 1.0}
    with pytest.raises(DegenerateInputError):
        normalize_bandwidth([_relay("a", 0)])
    with pytest.raises(DegenerateInputError):
        normalize_bandwidth([_relay("d", 5, flags=("Exit",))])


@given(st.lists(st.integers(1, 10**6), min_size=1, max_size=20), st.integers(1, 1000))
def test_normalization_scale_invariant(bws, k):
    rs = [_relay(f"{i:040X}", b) for i, b in enumerate(bws)]
    scaled = [_relay(r.fingerprint, r.bandwidth * k) for r in rs]
    assert normalize_bandwidth(rs) == pytest.approx(normalize_bandwidth(scaled))


def test_as_bandwidth_sums_members():
    rs = [_relay("a", 10, asn=1), _relay("b", 5, asn=1), _relay("c", 7, asn=2), _relay("d", 3)]
    assert as_bandwidth(rs) == {1: 15, 2: 7}
    assert filter_flag(rs, "Exit") == []
