"""Time the numba and numpy kernels on a synthetic hierarchy.

    python benchmarks/bench_kernels.py --stubs 2000 --sources 200

Both backends run the same per-source exploration and resilience counting;
the script checks their outputs agree (summation order may differ
in the last bits) before reporting timings. The numba
timing excludes JIT compilation (one warm-up source is run first).
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from torbgp import _kernels
from torbgp.resilience import AttackKind, resilience_table
from torbgp.synth import synthetic_hierarchy, synthetic_relays


def run(backend, graph, sources, origins, kind):
    _kernels.explore, _kernels.resilience = backend.explore, backend.resilience
    resilience_table(graph, sources[:1], origins, kind)
    t0 = time.perf_counter()
    vecs = resilience_table(graph, sources, origins, kind)
    return time.perf_counter() - t0, vecs


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--tier1", type=int, default=5)
    ap.add_argument("--mid", type=int, default=200)
    ap.add_argument("--stubs", type=int, default=2000)
    ap.add_argument("--sources", type=int, default=200)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    graph = synthetic_hierarchy(args.tier1, args.mid, args.stubs, seed=args.seed)
    relays, _ = synthetic_relays(graph, seed=args.seed)
    origins = sorted({r.asn for r in relays})
    rng = np.random.default_rng(args.seed)
    sources = sorted(int(a) for a in rng.choice(sorted(graph.nodes), size=min(args.sources, len(graph)),
                                                 replace=False))
    backends = [("numpy", _kernels.numpy_backend)]
    if _kernels.numba_backend is not None:
        backends.append(("numba", _kernels.numba_backend))
    saved = _kernels.explore, _kernels.resilience
    print(f"{len(graph)} ASes, {len(sources)} sources, {len(origins)} origins")
    try:
        for kind in AttackKind:
            results = {name: run(mod, graph, sources, origins, kind) for name, mod in backends}
            ref = results["numpy"][1]
            for name, (secs, vecs) in results.items():
                dev = max((abs(a.values[t] - b.values[t]) for a, b in zip(ref, vecs) for t in a.values), default=0.0)
                print(f"{kind.value:13s} {name:6s} {secs:8.3f}s  {secs / len(sources) * 1e3:7.2f} ms/source"
                      f"  max |diff| vs numpy {dev:.1e}")
                if dev > 1e-12:
                    raise SystemExit(f"{name} disagrees with numpy by {dev}")
            if "numba" in results:
                print(f"{kind.value:13s} speedup {results['numpy'][0] / results['numba'][0]:.1f}x")
    finally:
        _kernels.explore, _kernels.resilience = saved


if __name__ == "__main__":
    main()
