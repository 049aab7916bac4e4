"""numba-compiled kernels. Same contracts as ``_numpy``; see ``torbgp._kernels``."""

from __future__ import annotations

import numpy as np
from numba import njit

from torbgp._kernels.common import CLASS_SHIFT, INF_KEY, MODE_HIJACK, PROVIDER


@njit(cache=True, nogil=True)
def _relax(dist, cnt, w, d1, c, cap, nxt, nn, phase):
    sat = False
    if dist[w] == -1:
        dist[w] = d1
        cnt[w] = c
        nxt[nn] = w * 2 + phase
        nn += 1
    elif dist[w] == d1:
        s = cnt[w] + c
        if s > cap:
            s = cap
            sat = True
        cnt[w] = s
    return nn, sat


@njit(cache=True, nogil=True)
def explore(down_ptr, down_idx, up_ptr, up_idx, peer_ptr, peer_idx, src, cap):
    n = down_ptr.shape[0] - 1
    cls = np.full(n, -1, np.int8)
    hops = np.zeros(n, np.int32)
    count = np.zeros(n, np.int64)
    saturated = False

    dist_u = np.empty(n, np.int32)
    dist_d = np.empty(n, np.int32)
    cnt_u = np.empty(n, np.int64)
    cnt_d = np.empty(n, np.int64)
    # frontier entries encode node * 2 + phase (0 = still climbing, 1 = descending)
    front = np.empty(2 * n, np.int64)
    nxt = np.empty(2 * n, np.int64)

    for klass in range(3):
        dist_u[:] = -1
        dist_d[:] = -1
        cnt_u[:] = 0
        cnt_d[:] = 0
        dist_u[src] = 0
        dist_d[src] = 0
        nf = 0
        if klass == 0:
            for e in range(down_ptr[src], down_ptr[src + 1]):
                nf, s = _relax(dist_d, cnt_d, down_idx[e], 1, 1, cap, front, nf, 1)
        elif klass == 1:
            for e in range(peer_ptr[src], peer_ptr[src + 1]):
                nf, s = _relax(dist_d, cnt_d, peer_idx[e], 1, 1, cap, front, nf, 1)
        else:
            for e in range(up_ptr[src], up_ptr[src + 1]):
                nf, s = _relax(dist_u, cnt_u, up_idx[e], 1, 1, cap, front, nf, 0)

        d = 1
        while nf > 0:
            nn = 0
            d1 = d + 1
            for f in range(nf):
                st = front[f]
                u = st >> 1
                if st & 1 == 0:
                    c = cnt_u[u]
                    for e in range(up_ptr[u], up_ptr[u + 1]):
                        nn, s = _relax(dist_u, cnt_u, up_idx[e], d1, c, cap, nxt, nn, 0)
                        saturated |= s
                    for e in range(peer_ptr[u], peer_ptr[u + 1]):
                        nn, s = _relax(dist_d, cnt_d, peer_idx[e], d1, c, cap, nxt, nn, 1)
                        saturated |= s
                else:
                    c = cnt_d[u]
                for e in range(down_ptr[u], down_ptr[u + 1]):
                    nn, s = _relax(dist_d, cnt_d, down_idx[e], d1, c, cap, nxt, nn, 1)
                    saturated |= s
            front, nxt = nxt, front
            nf = nn
            d = d1

        for x in range(n):
            if x == src or cls[x] != -1:
                continue
            du = dist_u[x]
            dd = dist_d[x]
            if du <= 0 and dd <= 0:
                continue
            if du <= 0:
                h = dd
            elif dd <= 0:
                h = du
            else:
                h = min(du, dd)
            c = 0
            if du == h:
                c += cnt_u[x]
            if dd == h:
                c += cnt_d[x]
            if c > cap:
                c = cap
                saturated = True
            cls[x] = klass
            hops[x] = h
            count[x] = c
    return cls, hops, count, saturated


@njit(cache=True, nogil=True)
def resilience(att_keys, att_counts, origin_keys, origin_counts, origin_is_att, mode):
    m = att_keys.shape[0]
    out = np.empty(origin_keys.shape[0], np.float64)
    prov_lo = np.int64(PROVIDER) << CLASS_SHIFT
    first_prov = np.searchsorted(att_keys, prov_lo)
    for j in range(origin_keys.shape[0]):
        kt = origin_keys[j]
        self_att = 1 if origin_is_att[j] else 0
        denom = m - self_att
        if denom <= 0:
            out[j] = np.nan
            continue
        if kt == INF_KEY:
            out[j] = 0.0
            continue
        lo = np.searchsorted(att_keys, kt)
        hi = np.searchsorted(att_keys, kt, side="right")
        n_less = m - hi
        n_eq = hi - lo - self_att
        if mode != MODE_HIJACK and kt >= prov_lo:
            out[j] = (n_less + (lo - first_prov) + n_eq) / denom
            continue
        pt = float(origin_counts[j])
        s = 0.0
        for k in range(lo, hi):
            s += pt / (pt + att_counts[k])
        s -= 0.5 * self_att
        if mode == MODE_HIJACK:
            out[j] = (n_less + s) / denom
        else:
            out[j] = (n_less + lo + s) / denom
    return out
