"""Pure-numpy kernels: frontier-at-a-time BFS and per-origin vectorized sums."""

from __future__ import annotations

import numpy as np

from torbgp._kernels.common import CLASS_SHIFT, INF_KEY, MODE_HIJACK, PROVIDER

_EMPTY = np.empty(0, dtype=np.int64)


def _expand(ptr, idx, nodes, counts):
    """All (neighbour, parent count) pairs reachable in one step from ``nodes``."""
    if nodes.size == 0:
        return _EMPTY, _EMPTY
    starts = ptr[nodes]
    lens = ptr[nodes + 1] - starts
    total = int(lens.sum())
    if total == 0:
        return _EMPTY, _EMPTY
    parent = np.repeat(np.arange(nodes.size), lens)
    offs = np.arange(total) - np.repeat(np.cumsum(lens) - lens, lens)
    return idx[starts[parent] + offs], counts[parent]


def _settle(dist, cnt, tgt, c, d1, cap):
    """Assign layer ``d1`` to unseen targets and accumulate their path counts."""
    if tgt.size == 0:
        return _EMPTY, False
    fresh = tgt[dist[tgt] == -1]
    dist[fresh] = d1
    keep = dist[tgt] == d1
    tgt, c = tgt[keep], c[keep]
    np.add.at(cnt, tgt, c)
    nodes = np.unique(tgt)
    sat = bool((cnt[nodes] > cap).any())
    if sat:
        np.minimum(cnt, cap, out=cnt)
    return nodes, sat


def explore(down_ptr, down_idx, up_ptr, up_idx, peer_ptr, peer_idx, src, cap):
    n = down_ptr.shape[0] - 1
    cls = np.full(n, -1, np.int8)
    hops = np.zeros(n, np.int32)
    count = np.zeros(n, np.int64)
    saturated = False
    src_arr = np.array([src], dtype=np.int64)
    one = np.ones(1, dtype=np.int64)

    for klass in range(3):
        dist_u = np.full(n, -1, np.int32)
        dist_d = np.full(n, -1, np.int32)
        cnt_u = np.zeros(n, np.int64)
        cnt_d = np.zeros(n, np.int64)
        dist_u[src] = dist_d[src] = 0
        fu, fd = _EMPTY, _EMPTY
        if klass == 0:
            fd, _ = _settle(dist_d, cnt_d, *_expand(down_ptr, down_idx, src_arr, one), 1, cap)
        elif klass == 1:
            fd, _ = _settle(dist_d, cnt_d, *_expand(peer_ptr, peer_idx, src_arr, one), 1, cap)
        else:
            fu, _ = _settle(dist_u, cnt_u, *_expand(up_ptr, up_idx, src_arr, one), 1, cap)

        d = 1
        while fu.size or fd.size:
            d1 = d + 1
            up_t, up_c = _expand(up_ptr, up_idx, fu, cnt_u[fu])
            parts = [
                _expand(peer_ptr, peer_idx, fu, cnt_u[fu]),
                _expand(down_ptr, down_idx, fu, cnt_u[fu]),
                _expand(down_ptr, down_idx, fd, cnt_d[fd]),
            ]
            dn_t = np.concatenate([p[0] for p in parts])
            dn_c = np.concatenate([p[1] for p in parts])
            fu, s1 = _settle(dist_u, cnt_u, up_t, up_c, d1, cap)
            fd, s2 = _settle(dist_d, cnt_d, dn_t, dn_c, d1, cap)
            saturated |= s1 or s2
            d = d1

        du = np.where(dist_u > 0, dist_u, np.iinfo(np.int32).max)
        dd = np.where(dist_d > 0, dist_d, np.iinfo(np.int32).max)
        h = np.minimum(du, dd)
        new = (cls == -1) & (h < np.iinfo(np.int32).max)
        new[src] = False
        c = np.where(du == h, cnt_u, 0) + np.where(dd == h, cnt_d, 0)
        if (c[new] > cap).any():
            saturated = True
        cls[new] = klass
        hops[new] = h[new]
        count[new] = np.minimum(c[new], cap)
    return cls, hops, count, saturated


def resilience(att_keys, att_counts, origin_keys, origin_counts, origin_is_att, mode):
    m = att_keys.shape[0]
    prov_lo = np.int64(PROVIDER) << CLASS_SHIFT
    first_prov = np.searchsorted(att_keys, prov_lo)
    lo = np.searchsorted(att_keys, origin_keys)
    hi = np.searchsorted(att_keys, origin_keys, side="right")
    self_att = origin_is_att.astype(np.int64)
    denom = (m - self_att).astype(np.float64)
    n_less = m - hi
    n_eq = hi - lo - self_att

    out = np.empty(origin_keys.shape[0], dtype=np.float64)
    counts = att_counts.astype(np.float64)
    for j in range(origin_keys.shape[0]):
        if denom[j] <= 0:
            out[j] = np.nan
            continue
        kt = origin_keys[j]
        if kt == INF_KEY:
            out[j] = 0.0
            continue
        if mode != MODE_HIJACK and kt >= prov_lo:
            out[j] = (n_less[j] + (lo[j] - first_prov) + n_eq[j]) / denom[j]
            continue
        pt = float(origin_counts[j])
        s = float(np.sum(pt / (pt + counts[lo[j] : hi[j]]))) - 0.5 * self_att[j]
        more = 0 if mode == MODE_HIJACK else lo[j]
        out[j] = (n_less[j] + more + s) / denom[j]
    return out
