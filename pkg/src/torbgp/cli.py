"""``torbgp`` command line: resilience tables, guard-selection experiments, monitor replay.

Exit status is 0 on success, 1 for usage or configuration errors and 2 for
bad input data. Diagnostics go to stderr; results go to files under ``--out``.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from torbgp import resilience as res
from torbgp import synth
from torbgp.errors import DegenerateInputError, TorBgpError
from torbgp.guardselect import DEFAULT_ALPHA, DEFAULT_G, SelectionParams, selection_report
from torbgp.monitor import (
    AttackSpec,
    MonitorConfig,
    blacklist_json,
    inject_attacks,
    read_stream,
    run_monitor,
    score_result,
    write_stream,
)
from torbgp.monitor.registry import build_registry
from torbgp.monitor.stream import net
from torbgp.pathinfer import DEFAULT_PATH_CAP
from torbgp.relaydata import (
    as_bandwidth,
    read_clients,
    read_ip_map,
    read_relays,
    resolve_asn,
    write_ip_map,
    write_relays,
)
from torbgp.topology import DEFAULT_TIER1, read_as_topology, tier1_set

log = logging.getLogger("torbgp")

SWEEP_ALPHAS = (0.0, 0.25, 0.5, 0.75, 1.0)


class UsageError(Exception):
    pass


def _json_dump(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _need(args, *names: str) -> None:
    for n in names:
        if getattr(args, n) is None:
            raise UsageError(f"--{n.replace('_', '-')} is required")
        p = getattr(args, n)
        if isinstance(p, Path) and not p.exists():
            raise UsageError(f"{p} does not exist")


def _out_dir(args) -> Path:
    if args.out is None:
        raise UsageError("--out is required")
    args.out.mkdir(parents=True, exist_ok=True)
    return args.out


def _clients(args):
    try:
        return read_clients(args.clients)
    except DegenerateInputError as exc:
        raise UsageError(f"{args.clients}: {exc}") from None


def _load_graph_relays(args):
    _need(args, "topology", "relays", "ip_map")
    graph = read_as_topology(args.topology)
    relays = resolve_asn(read_ip_map(args.ip_map), read_relays(args.relays))
    return graph, relays


# --- resilience ----------------------------------------------------------------


def _write_origin_csv(values: dict[int, float], path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("origin,resilience\n")
        for t in sorted(values):
            fh.write(f"{t},{values[t]:.6f}\n")


def _write_origin_source_csv(vectors, path: Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("source,origin,resilience\n")
        for vec in sorted(vectors, key=lambda v: v.source):
            for t in sorted(vec.values):
                fh.write(f"{vec.source},{t},{vec.values[t]:.6f}\n")


def cmd_resilience(args) -> int:
    graph, relays = _load_graph_relays(args)
    out = _out_dir(args)
    bw = as_bandwidth(relays)
    tor_related = sorted(a for a in bw if a in graph)
    guard_ases = sorted(a for a in as_bandwidth(relays, "Guard") if a in graph)
    if not tor_related:
        raise DegenerateInputError("no relay maps to an AS in the topology")

    if args.attackers == "tier1":
        wanted = args.tier1 if args.tier1 else DEFAULT_TIER1
        attackers = tier1_set(graph, wanted, strict=False)
        if len(attackers) < len(set(wanted)):
            log.warning("%d tier-1 AS(es) absent from the topology", len(set(wanted)) - len(attackers))
        if not attackers:
            raise UsageError("none of the tier-1 attackers is in the topology; pass --tier1")
    else:
        attackers = None

    scopes = []
    all_sources = args.sources if args.sources else [int(a) for a in graph.asns]
    for s in all_sources:
        graph.idx(s)
    scopes.append(("all", all_sources, tor_related, None))
    if args.clients is not None:
        cs = _clients(args)
        members = [a for a in cs.asns if a in graph]
        if not members:
            raise DegenerateInputError("no client AS is in the topology")
        scopes.append(("clients", members, guard_ases, cs.weights))

    weightings = [res.Weighting(args.weighting)] if args.weighting else list(res.Weighting)
    kinds = [res.AttackKind(args.kind)] if args.kind else list(res.AttackKind)
    for scope, sources, origins, weights in scopes:
        for kind in kinds:
            vectors = res.resilience_table(
                graph, sources, origins, kind,
                attackers if kind is res.AttackKind.INTERCEPTION else None,
                workers=args.workers, cap=args.path_cap,
            )
            values = res.origin_resilience(vectors, weights)
            tag = f"{kind.value}_{scope}"
            _write_origin_csv(values, out / f"origin_{tag}.csv")
            _write_origin_source_csv(vectors, out / f"origin_source_{tag}.csv")
            for w in weightings:
                series = res.cdf_export(values, w, bw)
                with open(out / f"cdf_{tag}_{w.value}.csv", "w", encoding="utf-8") as fh:
                    res.write_cdf_csv(series, fh)
    return 0


# --- select --------------------------------------------------------------------


def cmd_select(args) -> int:
    _need(args, "clients")
    graph, relays = _load_graph_relays(args)
    clients = _clients(args).weights
    alphas = SWEEP_ALPHAS if args.sweep else (args.alpha,)
    cache: dict = {}
    reports = []
    for a in alphas:
        try:
            params = SelectionParams(alpha=a, g=args.g, rng_seed=args.seed)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
        reports.append(selection_report(graph, relays, clients, params, picks=args.picks, resilience_cache=cache))
    doc = {"sweep": reports} if args.sweep else reports[0]
    if args.out is None:
        sys.stdout.write(json.dumps(doc, indent=2, sort_keys=True) + "\n")
    else:
        out = _out_dir(args)
        _json_dump(doc, out / ("select_sweep.json" if args.sweep else "select.json"))
    return 0


# --- monitor -------------------------------------------------------------------


def _load_specs(path: Path) -> list[AttackSpec]:
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: {exc}") from None
    items = doc if isinstance(doc, list) else [doc]
    try:
        return [AttackSpec.from_dict(d) for d in items]
    except (KeyError, TypeError, ValueError) as exc:
        raise UsageError(f"{path}: bad attack spec ({exc})") from None


def _load_benign(path: Path) -> frozenset:
    pairs = set()
    for lineno, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        try:
            p, o = line.replace(",", " ").split()
            pairs.add((net(p), int(o)))
        except ValueError:
            raise UsageError(f"{path}: line {lineno}: expected prefix,origin") from None
    return frozenset(pairs)


def cmd_monitor(args) -> int:
    _need(args, "stream", "relays", "ip_map")
    out = _out_dir(args)
    try:
        config = MonitorConfig(
            freq_threshold=args.freq_threshold,
            time_threshold=args.time_threshold,
            window_days=args.window_days,
            batch_seconds=60 if args.per_minute else 3600,
            quarantine=int(args.quarantine_hours * 3600),
            granularity=args.granularity,
            benign=_load_benign(args.benign) if args.benign else frozenset(),
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    relays = resolve_asn(read_ip_map(args.ip_map), read_relays(args.relays))
    registry = build_registry(relays, read_ip_map(args.ip_map))
    stream = read_stream(args.stream)
    labels = []
    if args.inject is not None:
        try:
            stream, labels = inject_attacks(stream, _load_specs(args.inject), registry)
        except ValueError as exc:
            raise UsageError(str(exc)) from None
    result = run_monitor(stream, registry, config)

    (out / "alerts.jsonl").write_text(result.alerts_jsonl(), encoding="utf-8")
    (out / "blacklist.json").write_text(blacklist_json(result.blacklist) + "\n", encoding="utf-8")
    metrics = {
        "updates": len(stream),
        "monitored_prefixes": len(registry),
        "batches": len(result.hours),
        "evaluated_batches": sum(h.evaluated for h in result.hours),
        "alerts": {d: sum(a.detector.value == d for a in result.alerts) for d in ("origin", "frequency", "time")},
        "freq_threshold": config.freq_threshold,
        "time_threshold": config.time_threshold,
    }
    if labels:
        metrics["attacks"] = len(labels)
        metrics["detectors"] = {d.value: s.to_dict() for d, s in score_result(result, labels).items()}
    _json_dump(metrics, out / "metrics.json")
    return 0


# --- synth ---------------------------------------------------------------------


def cmd_synth(args) -> int:
    out = _out_dir(args)
    graph = synth.synthetic_hierarchy(seed=args.seed)
    relays, ip_map = synth.synthetic_relays(graph, seed=args.seed)
    (out / "topology.txt").write_text("\n".join(graph.to_lines()) + "\n", encoding="utf-8")
    write_relays(relays, out / "relays.jsonl")
    write_ip_map(ip_map, out / "ipmap.tsv")
    clients = synth.synthetic_clients(graph, seed=args.seed)
    (out / "clients.txt").write_text("".join(f"{a},{w:g}\n" for a, w in clients.items()), encoding="utf-8")

    ups, reg = synth.benign_corpus(seed=args.seed, days=args.days)
    write_stream(ups, out / "stream.jsonl")
    # relays and IP map for the monitored prefixes, so the monitor can rebuild the registry
    bgp_relays, bgp_map = [], []
    for i, (p, owners) in enumerate(sorted(reg.entries.items())):
        bgp_relays.append(
            {"nickname": f"mon{i}", "fingerprint": f"{0xF0000000 + i:040X}", "address": str(p.network_address + 1),
             "flags": ["Guard", "Running", "Valid"], "bandwidth": 1000}
        )
        bgp_map.extend(f"{p}\t{o}\n" for o in sorted(owners))
    (out / "monitor_relays.jsonl").write_text("".join(json.dumps(r) + "\n" for r in bgp_relays), encoding="utf-8")
    (out / "monitor_ipmap.tsv").write_text("".join(bgp_map), encoding="utf-8")
    specs = [
        {"prefix": str(s.prefix), "false_origin": s.false_origin, "start": s.start, "duration": s.duration,
         "n_updates": s.n_updates, "path": list(s.path)}
        for s in synth.known_attack_specs()
    ]
    _json_dump(specs, out / "attacks.json")
    return 0


# --- entry point ---------------------------------------------------------------


def _asn_list(text: str) -> list[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated ASNs, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="torbgp", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="count", default=0)
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, *, out_required=False):
        p.add_argument("--topology", type=Path)
        p.add_argument("--relays", type=Path)
        p.add_argument("--ip-map", type=Path)
        p.add_argument("--clients", type=Path)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--out", type=Path)

    p = sub.add_parser("resilience", help="origin and origin-source resilience tables and CDFs")
    common(p)
    p.add_argument("--attackers", choices=("all", "tier1"), default="all",
                   help="attacker universe for interception")
    p.add_argument("--tier1", type=_asn_list, help="override the built-in tier-1 list")
    p.add_argument("--weighting", choices=[w.value for w in res.Weighting],
                   help="CDF weighting (default: both)")
    p.add_argument("--kind", choices=[k.value for k in res.AttackKind], help="attack kind (default: both)")
    p.add_argument("--sources", type=_asn_list, help="restrict the all-source scope to these ASNs")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--path-cap", type=int, default=DEFAULT_PATH_CAP)
    p.set_defaults(func=cmd_resilience)

    p = sub.add_parser("select", help="resilience-aware guard selection experiment")
    common(p)
    p.add_argument("--alpha", type=float, default=DEFAULT_ALPHA)
    p.add_argument("--g", type=float, default=DEFAULT_G)
    p.add_argument("--picks", type=int, default=3)
    p.add_argument("--sweep", action="store_true", help="alpha in 0, 0.25, 0.5, 0.75, 1")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("monitor", help="replay a BGP update stream through the detectors")
    common(p)
    p.add_argument("--stream", type=Path)
    p.add_argument("--freq-threshold", type=float, default=0.0025)
    p.add_argument("--time-threshold", type=float, default=0.065)
    p.add_argument("--inject", type=Path, help="attack spec JSON (object or list)")
    p.add_argument("--benign", type=Path, help="prefix,origin pairs exempt from the origin check")
    p.add_argument("--window-days", type=int, help="baseline window length (default: calendar month)")
    p.add_argument("--per-minute", action="store_true", help="evaluate every minute instead of hourly")
    p.add_argument("--quarantine-hours", type=float, default=24.0)
    p.add_argument("--granularity", choices=("origin", "path"), default="origin")
    p.set_defaults(func=cmd_monitor)

    p = sub.add_parser("synth", help="write a synthetic topology, relays, clients and BGP corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--days", type=int, default=60)
    p.add_argument("--out", type=Path)
    p.set_defaults(func=cmd_synth)
    return ap


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"torbgp: error: {exc}", file=sys.stderr)
        return 1
    except (TorBgpError, OSError) as exc:
        print(f"torbgp: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
