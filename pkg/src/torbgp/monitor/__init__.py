"""BGP monitoring of Tor relay prefixes."""

from torbgp.monitor.alerts import Alert, Detector
from torbgp.monitor.analytics import (
    Baseline,
    accrue,
    frequency_analytic,
    frequency_ratios,
    time_analytic,
    update_baseline,
)
from torbgp.monitor.pipeline import (
    AttackSpec,
    Blacklist,
    BlacklistEntry,
    InjectedAttack,
    Monitor,
    MonitorConfig,
    MonitorResult,
    blacklist_json,
    blacklist_step,
    evaluate_detection,
    inject_attack,
    inject_attacks,
    run_monitor,
    score_result,
)
from torbgp.monitor.registry import PrefixRegistry, build_registry, filter_tor_updates, origin_check
from torbgp.monitor.stream import BgpUpdate, UpdateKind, iter_stream, parse_update, read_stream, write_stream

__all__ = [
    "Alert",
    "AttackSpec",
    "Baseline",
    "BgpUpdate",
    "Blacklist",
    "BlacklistEntry",
    "Detector",
    "InjectedAttack",
    "Monitor",
    "MonitorConfig",
    "MonitorResult",
    "PrefixRegistry",
    "UpdateKind",
    "accrue",
    "blacklist_json",
    "blacklist_step",
    "build_registry",
    "evaluate_detection",
    "filter_tor_updates",
    "frequency_analytic",
    "frequency_ratios",
    "inject_attack",
    "inject_attacks",
    "iter_stream",
    "origin_check",
    "parse_update",
    "read_stream",
    "run_monitor",
    "score_result",
    "time_analytic",
    "update_baseline",
    "write_stream",
]
