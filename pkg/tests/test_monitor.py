import ipaddress
import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from torbgp.errors import ParseError, SequencingError
from torbgp.monitor import (
    AttackSpec,
    Baseline,
    BgpUpdate,
    Detector,
    MonitorConfig,
    PrefixRegistry,
    blacklist_json,
    blacklist_step,
    build_registry,
    filter_tor_updates,
    frequency_analytic,
    frequency_ratios,
    inject_attack,
    iter_stream,
    origin_check,
    parse_update,
    run_monitor,
    score_result,
    time_analytic,
    update_baseline,
)
from torbgp.monitor.alerts import Alert
from torbgp.monitor.stream import net
from torbgp.relaydata import IpAsnMap, RelayRecord

P = net("1.2.3.0/24")
T0 = 1_456_790_400  # 2016-03-01 00:00 UTC


def A(ts, origin, prefix=P, path=None):
    return BgpUpdate.announce(ts, prefix, path or (3356, origin))


def W(ts, prefix=P):
    return BgpUpdate.withdraw(ts, prefix)


# --- stream -------------------------------------------------------------------


def test_update_json_roundtrip():
    u = A(5, 100)
    assert u.to_json() == '{"ts": 5, "type": "A", "prefix": "1.2.3.0/24", "as_path": [3356, 100], "collector": ""}'
    assert parse_update(u.to_json()) == u
    w = parse_update('{"ts": 6, "type": "W", "prefix": "1.2.3.0/24", "collector": "rrc00"}')
    assert w.origin is None and not w.is_announce
    assert "as_path" not in w.to_json()


@pytest.mark.parametrize(
    "line",
    ['{"ts": 1, "type": "A", "prefix": "1.2.3.0/24"}', '{"ts": 1.5, "type": "W", "prefix": "1.2.3.0/24"}',
     '{"ts": 1, "type": "X", "prefix": "1.2.3.0/24"}', "not json"],
)
def test_malformed_stream_line(line):
    with pytest.raises(ParseError, match="line 2"):
        list(iter_stream([A(1, 5).to_json(), line]))


# --- registry and origin check -----------------------------------------------------


def _relay(addr, flags):
    return RelayRecord("n", "F" * 40, ipaddress.IPv4Address(addr), frozenset(flags), 1)


def test_build_registry():
    m = IpAsnMap()
    m.add("1.2.3.0/24", 100)
    m.add("5.6.7.0/25", 100)
    m.add("5.6.7.128/25", 200)
    reg = build_registry([_relay("1.2.3.4", ["Guard"]), _relay("9.9.9.9", ["Exit"]), _relay("1.2.3.9", ["Fast"]),
                          _relay("5.6.7.1", ["Exit"]), _relay("5.6.7.200", ["Guard"])], m)
    assert reg.to_json() == {"1.2.3.0/24": [100], "5.6.7.0/24": [100, 200]}
    assert reg.skipped == 1


def test_registry_rejects_bad_entries():
    with pytest.raises(ValueError):
        PrefixRegistry.from_owners({"1.2.0.0/16": [1]})
    with pytest.raises(ValueError):
        PrefixRegistry.from_owners({"1.2.3.0/24": []})


def test_filter_keeps_covering_and_exact():
    reg = PrefixRegistry.from_owners({"1.2.3.0/24": [100]})
    ups = [A(1, 1, net("1.2.0.0/16")), A(2, 1), A(3, 1, net("9.9.9.0/24")), A(4, 1, net("1.2.3.0/25")),
           A(5, 1, net("1.2.4.0/24"))]
    assert [u.ts for u in filter_tor_updates(ups, reg)] == [1, 2]


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.integers(8, 32))
def test_filter_never_passes_disjoint_prefix(addr, plen):
    reg = PrefixRegistry.from_owners({"1.2.3.0/24": [1], "10.20.30.0/24": [2]})
    p = ipaddress.IPv4Network((addr, plen), strict=False)
    kept = list(filter_tor_updates([A(1, 7, net(p))], reg))
    if kept:
        assert any(p.overlaps(m) for m in reg.entries)


def test_origin_check():
    reg = PrefixRegistry.from_owners({P: [100]})
    assert origin_check(A(1, 200), reg).detector is Detector.ORIGIN_CHECK
    assert origin_check(A(1, 100), reg) is None
    assert origin_check(A(1, 200), reg, benign={(P, 200)}) is None
    assert origin_check(W(1), reg) is None
    multi = PrefixRegistry.from_owners({P: [100, 200]})
    assert origin_check(A(1, 200), multi) is None


# --- baseline and analytics ---------------------------------------------------------


def test_withdraw_closes_interval():
    b = update_baseline(Baseline.empty(0), [A(100, 5), W(400)])
    assert b.duration(P, 5) == 300
    assert b.span(P) == 300


def test_counts_and_identity():
    b0 = Baseline.empty(0)
    b = update_baseline(b0, [A(1, 5), A(2, 5)])
    assert b.ann_count[(P, 5)] == 2 and b.total_count[P] == 2
    assert update_baseline(b, []) == b
    assert b0.total_count == {}


def test_replacement_and_open_interval():
    b = update_baseline(Baseline.empty(0), [A(0, 5), A(100, 6), A(160, 5)], end=1000)
    assert b.duration(P, 6) == 60
    assert b.duration(P, 5) == 100 + 840
    assert b.span(P) == 1000
    assert b.active_duration[(P, 5)] == 940


def test_out_of_order_tolerance():
    b = update_baseline(Baseline.empty(0), [A(100, 5), A(50, 5)])
    assert b.total_count[P] == 2
    with pytest.raises(SequencingError):
        update_baseline(Baseline.empty(0), [A(100, 5), A(39, 5)])


def test_path_granularity():
    b = update_baseline(Baseline.empty(0, "path"), [A(0, 5, path=(1, 5)), A(10, 5, path=(2, 5))], end=20)
    assert b.duration(P, (1, 5)) == 10 and b.duration(P, (2, 5)) == 10
    with pytest.raises(ValueError):
        Baseline.empty(0, "bogus")


def _baseline_with(n, origin=100):
    return update_baseline(Baseline.empty(0), [A(i, origin) for i in range(n)])


def test_frequency_worked_example():
    (alert,) = frequency_analytic(_baseline_with(1000), [A(2000, 200)], 0.0025)
    assert alert.offending_origin == 200 and alert.evidence == pytest.approx(1 / 1001)
    assert frequency_analytic(_baseline_with(10), [A(20, 100)], 0.0025) == []


def test_frequency_strict_boundary():
    # 1 / 400 == 0.0025 exactly
    assert frequency_analytic(_baseline_with(399), [A(500, 200)], 0.0025) == []
    assert frequency_analytic(_baseline_with(400), [A(500, 200)], 0.0025)


def test_frequency_skips_unknown_prefix_and_validates():
    assert frequency_analytic(Baseline.empty(0), [W(1)], 0.5) == []
    with pytest.raises(ValueError):
        frequency_analytic(Baseline.empty(0), [], 1.0)


def test_time_worked_example():
    month = 720 * 3600
    base = update_baseline(Baseline.empty(0), [A(0, 100)], end=month)
    cur = [A(month + 10, 200), A(month + 250, 100)]
    alerts = time_analytic(base, cur, 0.065, start=month, end=month + 250)
    (a,) = alerts
    assert a.offending_origin == 200 and a.evidence == pytest.approx(240 / (month + 250))


def test_time_whole_span_and_boundary():
    base = update_baseline(Baseline.empty(0), [A(0, 100)], end=1000)
    assert time_analytic(base, [A(1000, 100)], 0.5, end=1000) == []
    # origin 200 holds the prefix for 100 s in each window: 200 of 1000 s
    base = update_baseline(Baseline.empty(0), [A(0, 200), A(100, 100)], end=900)
    assert time_analytic(base, [A(900, 200), A(1000, 100)], 0.2, end=1000) == []
    assert time_analytic(base, [A(900, 200), A(1000, 100)], 0.21, end=1000)


def test_time_accrues_to_evaluation_instant():
    base = update_baseline(Baseline.empty(0), [A(0, 100)], end=1000)
    (a,) = time_analytic(base, [A(1000, 200)], 0.9, start=1000, end=2000)
    assert a.evidence == pytest.approx(1000 / 2000)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 50), st.sampled_from([100, 200, 300, None])), min_size=1, max_size=40))
def test_frequency_ratios_sum_to_one(events):
    ts, ups = 0, []
    for gap, origin in events:
        ts += gap
        ups.append(W(ts) if origin is None else A(ts, origin))
    half = len(ups) // 2
    base = update_baseline(Baseline.empty(0), ups[:half])
    ratios = frequency_ratios(base, ups[half:])
    origins = {u.origin for u in ups[half:] if u.is_announce}
    if origins and {u.origin for u in ups if u.is_announce} == origins:
        assert sum(r for r, _ in ratios.values()) == pytest.approx(1.0)
    b = update_baseline(Baseline.empty(0), ups)
    assert sum(b.ann_count.values()) == sum(b.total_count.values())
    for (p, _), d in b.active_duration.items():
        assert d <= b.span(p)


# --- blacklist -----------------------------------------------------------------


def test_blacklist_step():
    a1 = Alert(Detector.ORIGIN_CHECK, P, 200, 1.0, 10)
    a2 = Alert(Detector.TIME, P, 200, 0.01, 50)
    bl = blacklist_step({}, [a1])
    assert bl[P].since == 10
    bl = blacklist_step(bl, [a2])
    assert bl[P].since == 10 and bl[P].detectors == {Detector.ORIGIN_CHECK, Detector.TIME}
    assert blacklist_step(bl, [], [P]) == {}
    assert json.loads(blacklist_json(bl)) == {"1.2.3.0/24": {"since": 10, "detectors": ["origin", "time"]}}


def test_monitor_recovers_after_quarantine():
    reg = PrefixRegistry.from_owners({P: [100]})
    ups = [A(T0 + 60 * i, 100) for i in range(60 * 30)]
    ups.append(A(T0 + 3600 + 30, 666))
    ups.sort(key=lambda u: u.ts)
    res = run_monitor(ups, reg, MonitorConfig(quarantine=24 * 3600))
    assert res.blacklist == {}
    ((when, p),) = res.removed
    assert p == P and when >= T0 + 3600 + 30 + 24 * 3600
    short = run_monitor([u for u in ups if u.ts < T0 + 20 * 3600], reg)
    assert P in short.blacklist


# --- injection and replay ---------------------------------------------------------


def test_inject_shapes():
    reg = PrefixRegistry.from_owners({P: [100]})
    base = [A(T0 + i * 600, 100) for i in range(20)]
    merged, lab = inject_attack(base, AttackSpec(P, 666, T0 + 100, 240, 3), reg)
    assert lab.timestamps == (T0 + 100, T0 + 220, T0 + 340)
    assert [u.ts for u in merged] == sorted(u.ts for u in merged) and len(merged) == 23
    _, lab = inject_attack(base, AttackSpec(P, 666, T0, 25 * 3600, 10), reg)
    assert lab.timestamps[-1] - lab.timestamps[0] == 25 * 3600 and len(lab.timestamps) == 10
    _, lab = inject_attack(base, AttackSpec(P, 666, T0 + 5, 999, 1), reg)
    assert lab.timestamps == (T0 + 5,)
    with pytest.raises(ValueError):
        inject_attack(base, AttackSpec(net("9.9.9.0/24"), 666, T0, 10, 1), reg)
    with pytest.raises(ValueError):
        AttackSpec(P, 666, T0, 10, 0)


def test_covering_prefix_uses_covered_owners():
    reg = PrefixRegistry.from_owners({P: [100]})
    assert origin_check(A(1, 100, net("1.2.0.0/16")), reg) is None
    assert origin_check(A(1, 7, net("1.2.0.0/16")), reg) is not None


def _small_corpus():
    from torbgp.synth import benign_corpus

    return benign_corpus(days=40, per_day=60, n_prefixes=4, seed=5)


def test_benign_corpus_raises_nothing():
    ups, reg = _small_corpus()
    res = run_monitor(ups, reg)
    assert res.alerts == []
    assert sum(h.evaluated for h in res.hours) > 0


def test_attack_detected_in_first_hour_and_replay_deterministic():
    ups, reg = _small_corpus()
    p = sorted(reg.entries)[0]
    announced = next(u.prefix for u in ups if reg.covered(u.prefix) == [p])
    spec = AttackSpec(announced, 64666, T0 + 35 * 86400 + 1234, 300, 2)
    stream, lab = inject_attack(ups, spec, reg)
    r1 = run_monitor(stream, reg)
    r2 = run_monitor(stream, reg)
    assert r1.alerts_jsonl() == r2.alerts_jsonl()
    scores = score_result(r1, [lab])
    for det in Detector:
        assert scores[det].detected == 1 and scores[det].false_positives == 0


def test_per_minute_batches():
    ups, reg = _small_corpus()
    res = run_monitor(ups[: len(ups) // 20], reg, MonitorConfig(batch_seconds=60))
    assert res.hours[1].start - res.hours[0].start == 60


def test_config_validation():
    with pytest.raises(ValueError):
        MonitorConfig(freq_threshold=1.2)
    with pytest.raises(ValueError):
        MonitorConfig(batch_seconds=0)
