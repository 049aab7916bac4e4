"""Resilience-aware guard selection and its security/anonymity metrics.

Each guard gets ``W = alpha * R' + (1 - alpha) * B``, where ``B`` is its
max-normalized bandwidth and ``R'`` is its client-specific resilience turned
into an inclusion probability for a random sample of ``round(g * N)`` guards
(Tille elimination). The client then draws a guard proportionally to ``W``.
"""

from __future__ import annotations

import logging
import math
from collections.abc import Mapping, Sequence
from dataclasses import dataclass

import numpy as np

from torbgp.errors import DegenerateInputError

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.5
DEFAULT_G = 0.10
SUM_TOL = 1e-9


@dataclass(frozen=True)
class SelectionParams:
    alpha: float = DEFAULT_ALPHA
    g: float = DEFAULT_G
    rng_seed: int | None = None

    def __post_init__(self):
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha}")
        if not 0.0 < self.g <= 1.0:
            raise ValueError(f"g must lie in (0, 1], got {self.g}")

    def rng(self) -> np.random.Generator:
        return np.random.default_rng(self.rng_seed)


@dataclass(frozen=True)
class WeightedRelay:
    fingerprint: str
    R: float
    R_prime: float
    B_bar: float
    W: float


def sample_size(g: float, n: int) -> int:
    """``round(g * n)`` (halves round up), clamped to ``[1, n]``."""
    return min(max(int(math.floor(g * n + 0.5)), 1), n)


def tille_adjust(R: Sequence[float], g: float) -> np.ndarray:
    """Inclusion probabilities of a size-``round(g*N)`` sample, scaled to sum to one.

    Items whose proportional share exceeds one are pinned at one and removed,
    the sample size shrinks by the number pinned, and the rest is
    re-proportioned until nothing exceeds one.
    """
    r = np.asarray(R, dtype=np.float64)
    n = r.size
    if n == 0:
        raise DegenerateInputError("no relays to adjust")
    if (r < 0).any():
        raise ValueError("resilience values must be nonnegative")
    if not (r > 0).any():
        log.warning("all resilience values are zero; falling back to uniform")
        return np.full(n, 1.0 / n)

    k0 = sample_size(g, n)
    k = k0
    out = np.zeros(n)
    active = np.ones(n, dtype=bool)
    for _ in range(n + 1):
        total = r[active].sum()
        if total > 0:
            out[active] = k * r[active] / total
        else:
            # only zero-resilience items remain: spread the leftover sample evenly
            out[active] = k / active.sum()
        over = active & (out > 1.0)
        if not over.any():
            break
        out[over] = 1.0
        active &= ~over
        k -= int(over.sum())
    else:  # pragma: no cover - each pass pins at least one item
        raise AssertionError("Tille elimination did not converge")
    return out / k0


def compute_weights(
    fingerprints: Sequence[str],
    R: Sequence[float],
    R_prime: Sequence[float],
    B_bar: Sequence[float],
    alpha: float,
) -> list[WeightedRelay]:
    if not (len(fingerprints) == len(R) == len(R_prime) == len(B_bar)):
        raise ValueError("fingerprints, R, R_prime and B_bar must have equal length")
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
    return [
        WeightedRelay(fp, float(r), float(rp), float(b), alpha * float(rp) + (1.0 - alpha) * float(b))
        for fp, r, rp, b in zip(fingerprints, R, R_prime, B_bar)
    ]


def pick_probabilities(weighted: Sequence[WeightedRelay]) -> dict[str, float]:
    w = np.array([x.W for x in weighted], dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise DegenerateInputError("all selection weights are zero")
    return {x.fingerprint: float(p) for x, p in zip(weighted, w / total)}


def sample_guard(weighted: Sequence[WeightedRelay], rng: np.random.Generator) -> str:
    """Draw one fingerprint with probability ``W / sum(W)``."""
    return sample_guards(weighted, rng, 1)[0]


def sample_guards(weighted: Sequence[WeightedRelay], rng: np.random.Generator, size: int) -> list[str]:
    cum = np.cumsum([x.W for x in weighted], dtype=np.float64)
    if not len(cum) or cum[-1] <= 0:
        raise DegenerateInputError("all selection weights are zero")
    u = rng.random(size) * cum[-1]
    # side="right" so zero-weight items (flat steps in cum) are never returned
    picks = np.minimum(np.searchsorted(cum, u, side="right"), len(cum) - 1)
    return [weighted[i].fingerprint for i in picks]


def resilience_probability(P_pick: Mapping[str, float], P_resilient: Mapping[str, float]) -> float:
    """Chance that the chosen guard's AS stays reachable during a hijack."""
    if set(P_pick) != set(P_resilient):
        raise ValueError("P_pick and P_resilient must cover the same relays")
    if abs(sum(P_pick.values()) - 1.0) > SUM_TOL:
        raise ValueError("P_pick must sum to 1")
    return float(sum(P_pick[k] * P_resilient[k] for k in P_pick))


def shannon_entropy(p: Sequence[float]) -> float:
    """Entropy in bits; zero-probability entries contribute nothing."""
    arr = np.asarray(p, dtype=np.float64)
    if (arr < 0).any():
        raise ValueError("probabilities must be nonnegative")
    if abs(arr.sum() - 1.0) > SUM_TOL:
        raise ValueError(f"probabilities sum to {arr.sum()}, not 1")
    nz = arr[arr > 0]
    return float(-(nz * np.log2(nz)).sum()) + 0.0


def fingerprint_entropy(relay: str, per_client_pick: Mapping[int, float]) -> float:
    """Entropy of "which client picked ``relay``" given each client's pick probability."""
    p = np.array(list(per_client_pick.values()), dtype=np.float64)
    if (p < 0).any():
        raise ValueError("pick probabilities must be nonnegative")
    total = p.sum()
    if total <= 0:
        raise DegenerateInputError(f"no client ever picks relay {relay}")
    return shannon_entropy(p / total)


# --- selection experiments -------------------------------------------------


@dataclass
class ClientSelection:
    client_asn: int
    weighted: list[WeightedRelay]
    P_pick: dict[str, float]
    P_resilient: dict[str, float]

    @property
    def resilience_probability(self) -> float:
        return resilience_probability(self.P_pick, self.P_resilient)


def guard_resilience(graph, client_asn: int, guards, *, cap: int | None = None) -> np.ndarray:
    """Hijack resilience of each guard's AS seen from ``client_asn``.

    A guard inside the client's own AS cannot be hijacked away from it and
    scores 1.
    """
    from torbgp.resilience import hijack_resilience_from_source

    kwargs = {} if cap is None else {"cap": cap}
    vec = hijack_resilience_from_source(graph, client_asn, {r.asn for r in guards}, **kwargs)
    return np.array([1.0 if r.asn == client_asn else vec.values[r.asn] for r in guards])


def select_for_client(graph, client_asn: int, guards, B_bar: Mapping[str, float], params: SelectionParams,
                      R: np.ndarray | None = None) -> ClientSelection:
    if R is None:
        R = guard_resilience(graph, client_asn, guards)
    R_prime = tille_adjust(R, params.g)
    fps = [r.fingerprint for r in guards]
    weighted = compute_weights(fps, R, R_prime, [B_bar[fp] for fp in fps], params.alpha)
    return ClientSelection(
        client_asn=int(client_asn),
        weighted=weighted,
        P_pick=pick_probabilities(weighted),
        P_resilient={fp: float(x) for fp, x in zip(fps, R)},
    )


def usable_guards(graph, relays) -> list:
    """Guard-flagged relays whose ASN is known and present in the topology."""
    out = [r for r in relays if r.is_guard and r.asn is not None and r.asn in graph]
    skipped = sum(1 for r in relays if r.is_guard) - len(out)
    if skipped:
        log.info("skipping %d guard(s) with no ASN in the topology", skipped)
    if not out:
        raise DegenerateInputError("no usable guard relays")
    return out


def selection_report(graph, relays, clients: Mapping[int, float], params: SelectionParams, *,
                     picks: int = 3, resilience_cache: dict | None = None) -> dict:
    """Run the selection experiment for every client; returns a JSON-ready dict.

    Per-client ``entropy`` is the expected fingerprint entropy of the guard the
    client draws; ``mean_entropy`` is the plain mean over guards. Client
    weights act as the observer's prior over clients.
    """
    from torbgp.relaydata import normalize_bandwidth

    guards = usable_guards(graph, relays)
    B_bar = normalize_bandwidth(guards, "Guard")
    rng = params.rng()
    cache = resilience_cache if resilience_cache is not None else {}
    sel: dict[int, ClientSelection] = {}
    for c in clients:
        if c not in graph:
            log.warning("client AS%d is not in the topology; skipped", c)
            continue
        if c not in cache:
            cache[c] = guard_resilience(graph, c, guards)
        sel[c] = select_for_client(graph, c, guards, B_bar, params, cache[c])
    if not sel:
        raise DegenerateInputError("no client AS is present in the topology")

    H: dict[str, float] = {}
    for r in guards:
        fp = r.fingerprint
        per_client = {c: clients[c] * s.P_pick[fp] for c, s in sel.items()}
        if sum(per_client.values()) > 0:
            H[fp] = fingerprint_entropy(fp, per_client)

    out_clients = []
    for c, s in sel.items():
        out_clients.append(
            {
                "client_asn": c,
                "alpha": params.alpha,
                "g": params.g,
                "resilience_probability": s.resilience_probability,
                "entropy": float(sum(p * H[fp] for fp, p in s.P_pick.items() if fp in H)),
                "picks": sample_guards(s.weighted, rng, picks) if picks > 0 else [],
            }
        )
    return {
        "alpha": params.alpha,
        "g": params.g,
        "seed": params.rng_seed,
        "guards": len(guards),
        "mean_entropy": float(np.mean(list(H.values()))),
        "max_entropy": math.log2(len(sel)),
        "clients": out_clients,
    }
