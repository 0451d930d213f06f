"""Pure-numpy kernels: vectorized equivalents of the numba backend.

Every sampler follows the slot layout documented in ``_kernels_nb``;
rejection loops become mask loops in which each still-active lane reads
the same slots it would have read in the compiled scalar loop, so the two
backends agree draw for draw (up to last-ulp libm differences, which the
test suite bounds).
"""

import math

import numpy as np

from ._rngcore import derive_vec, u01_vec

_REJ_CAP = 128
_TINY_POS = 2.2250738585072014e-308
_TWO_PI = 2.0 * math.pi
_lgamma_uf = np.frompyfunc(math.lgamma, 1, 1)


def _lgamma(arr):
    # math.lgamma elementwise: keeps bit parity with the compiled backend
    return _lgamma_uf(arr).astype(np.float64)


def _u01(keys, slot):
    return u01_vec(keys, np.uint64(slot))


def _u01s(keys, slots):
    return u01_vec(keys, slots)


def gamma_vec(step_key, shapes):
    """Independent unit-rate gamma draws; component j uses child stream j."""
    shapes = np.asarray(shapes, dtype=np.float64)
    n = shapes.shape[0]
    keys = derive_vec(np.uint64(step_key), np.arange(n, dtype=np.uint64))
    boosted = shapes < 1.0
    d = np.where(boosted, shapes + 1.0, shapes) - 1.0 / 3.0
    c = 1.0 / np.sqrt(9.0 * d)
    out = d.copy()  # cap fallback, unreachable
    alive = np.arange(n)
    for i in range(_REJ_CAP):
        if alive.size == 0:
            break
        base = np.uint64(1 + 3 * i)
        ka = keys[alive]
        u1 = _u01(ka, base)
        u2 = _u01s(ka, base + np.uint64(1))
        z = np.sqrt(-2.0 * np.log(u1)) * np.cos(_TWO_PI * u2)
        t = 1.0 + c[alive] * z
        v = t * t * t
        ok = v > 0.0
        u = _u01s(ka, base + np.uint64(2))
        z2 = z * z
        quick = u < 1.0 - 0.0331 * z2 * z2
        with np.errstate(divide="ignore", invalid="ignore"):
            full = np.log(u) < 0.5 * z2 + d[alive] * (1.0 - v + np.log(v))
        accept = ok & (quick | full)
        if accept.any():
            lanes = alive[accept]
            out[lanes] = d[lanes] * v[accept]
        alive = alive[~accept]
    if boosted.any():
        bidx = np.flatnonzero(boosted)
        u0 = _u01(keys[bidx], np.uint64(0))
        out[bidx] = out[bidx] * np.exp(np.log(u0) / shapes[bidx])
    return np.maximum(out, _TINY_POS)


def binomial_vec(keys, ns, ps):
    """Vector of Binomial(n_j, p_j) draws, one child stream per lane."""
    keys = np.asarray(keys, dtype=np.uint64)
    ns = np.asarray(ns, dtype=np.int64)
    ps = np.asarray(ps, dtype=np.float64)
    out = np.zeros(ns.shape[0], dtype=np.int64)
    out[(ps >= 1.0) & (ns > 0)] = ns[(ps >= 1.0) & (ns > 0)]
    work = (ns > 0) & (ps > 0.0) & (ps < 1.0)
    if not work.any():
        return out
    flip = ps > 0.5
    q = np.where(flip, 1.0 - ps, ps)
    nq = ns * q
    # inversion lanes
    inv = np.flatnonzero(work & (nq <= 10.0))
    if inv.size:
        n_i = ns[inv]
        q_i = q[inv]
        s = q_i / (1.0 - q_i)
        r = np.exp(n_i * np.log1p(-q_i))
        u = _u01(keys[inv], np.uint64(0))
        k = np.zeros(inv.size, dtype=np.int64)
        act = np.flatnonzero(u > r)
        while act.size:
            u[act] = u[act] - r[act]
            k[act] += 1
            over = k[act] > n_i[act]
            if over.any():
                k[act[over]] = n_i[act[over]]
            act = act[~over]
            if act.size:
                r[act] = r[act] * (s[act] * (n_i[act] - k[act] + 1) / k[act])
                act = act[u[act] > r[act]]
        out[inv] = k
    # transformed-rejection lanes
    trs = np.flatnonzero(work & (nq > 10.0))
    if trs.size:
        n_t = ns[trs].astype(np.float64)
        q_t = q[trs]
        spq = np.sqrt(n_t * q_t * (1.0 - q_t))
        b = 1.15 + 2.53 * spq
        a = -0.0873 + 0.0248 * b + 0.01 * q_t
        cc = n_t * q_t + 0.5
        vr = 0.92 - 4.2 / b
        alpha = (2.83 + 5.1 / b) * spq
        lpq = np.log(q_t / (1.0 - q_t))
        mm = np.floor((n_t + 1) * q_t)
        h = _lgamma(mm + 1.0) + _lgamma(n_t - mm + 1.0)
        k = mm.astype(np.int64)  # cap fallback, unreachable
        alive = np.arange(trs.size)
        for i in range(_REJ_CAP):
            if alive.size == 0:
                break
            base = np.uint64(2 * i)
            ka = keys[trs[alive]]
            u = _u01(ka, base) - 0.5
            v = _u01s(ka, base + np.uint64(1))
            us = 0.5 - np.abs(u)
            kf = np.floor((2.0 * a[alive] / us + b[alive]) * u + cc[alive])
            inrange = (kf >= 0.0) & (kf <= n_t[alive])
            quick = inrange & (us >= 0.07) & (v <= vr[alive])
            kfc = np.clip(kf, 0.0, n_t[alive])  # lgamma poles off-range
            with np.errstate(divide="ignore", invalid="ignore"):
                lv = np.log(v * alpha[alive] / (a[alive] / (us * us) + b[alive]))
                ub = (h[alive] - _lgamma(kfc + 1.0) - _lgamma(n_t[alive] - kfc + 1.0)
                      + (kfc - mm[alive]) * lpq[alive])
            accept = quick | (inrange & (lv <= ub))
            if accept.any():
                k[alive[accept]] = kf[accept].astype(np.int64)
            alive = alive[~accept]
        out[trs] = k
    fl = flip & work
    out[fl] = ns[fl] - out[fl]
    return out


def poisson_vec(step_key, lams):
    lams = np.asarray(lams, dtype=np.float64)
    n = lams.shape[0]
    keys = derive_vec(np.uint64(step_key), np.arange(n, dtype=np.uint64))
    out = np.zeros(n, dtype=np.int64)
    small = np.flatnonzero((lams > 0.0) & (lams < 10.0))
    if small.size:
        enlam = np.exp(-lams[small])
        prod = np.ones(small.size)
        k = np.zeros(small.size, dtype=np.int64)
        act = np.arange(small.size)
        slot = 0
        while act.size:
            prod[act] = prod[act] * _u01(keys[small[act]], np.uint64(slot))
            cont = prod[act] > enlam[act]
            k[act[cont]] += 1
            act = act[cont]
            slot += 1
        out[small] = k
    big = np.flatnonzero(lams >= 10.0)
    if big.size:
        lam = lams[big]
        b = 0.931 + 2.53 * np.sqrt(lam)
        a = -0.059 + 0.02483 * b
        invalpha = 1.1239 + 1.1328 / (b - 3.4)
        vr = 0.9277 - 3.6224 / (b - 2.0)
        loglam = np.log(lam)
        k = lam.astype(np.int64)  # cap fallback, unreachable
        alive = np.arange(big.size)
        for i in range(_REJ_CAP):
            if alive.size == 0:
                break
            base = np.uint64(2 * i)
            ka = keys[big[alive]]
            u = _u01(ka, base) - 0.5
            v = _u01s(ka, base + np.uint64(1))
            us = 0.5 - np.abs(u)
            kf = np.floor((2.0 * a[alive] / us + b[alive]) * u + lam[alive] + 0.43)
            inrange = kf >= 0.0
            quick = inrange & (us >= 0.07) & (v <= vr[alive])
            hard_rej = (us < 0.013) & (v > us)
            kfc = np.maximum(kf, 0.0)  # lgamma pole off-range
            with np.errstate(divide="ignore", invalid="ignore"):
                lhs = np.log(v * invalpha[alive] / (a[alive] / (us * us) + b[alive]))
                rhs = kfc * loglam[alive] - lam[alive] - _lgamma(kfc + 1.0)
            accept = quick | (inrange & ~hard_rej & (lhs <= rhs))
            if accept.any():
                k[alive[accept]] = kf[accept].astype(np.int64)
            alive = alive[~accept]
        out[big] = k
    return out


def multinomial_one(key, total, weights):
    """Single multinomial draw over (possibly unnormalized) weights."""
    weights = np.asarray(weights, dtype=np.float64)
    k = weights.shape[0]
    out = np.zeros(k, dtype=np.int64)
    suffix = np.cumsum(weights[::-1])[::-1]
    rem = int(total)
    for c in range(k):
        if rem == 0:
            break
        w = weights[c]
        if w <= 0.0:
            continue
        p = w / suffix[c]
        if p >= 1.0:
            cnt = rem
        else:
            ck = derive_vec(np.uint64(key), np.uint64(c))
            cnt = int(binomial_vec(np.array([ck]), np.array([rem]),
                                   np.array([p]))[0])
        out[c] = cnt
        rem -= cnt
    if rem > 0:
        out[0] = -1
    return out


def _counts_padded(idx_mat, w_mat, rows, y, step_key, s_out):
    """Shared core: padded (rows x kmax) supports, sequential binomials."""
    wsuf = np.cumsum(w_mat[:, ::-1], axis=1)[:, ::-1]
    bad = ~(wsuf[:, 0] > 0.0)
    if bad.any():
        return int(rows[np.flatnonzero(bad)[0]])
    row_keys = derive_vec(np.uint64(step_key), rows.astype(np.uint64))
    rem = y[rows].astype(np.int64).copy()
    kmax = w_mat.shape[1]
    for c in range(kmax):
        lanes = np.flatnonzero((rem > 0) & (w_mat[:, c] > 0.0))
        if lanes.size == 0:
            if not (rem > 0).any():
                break
            continue
        p = w_mat[lanes, c] / wsuf[lanes, c]
        sure = p >= 1.0
        cnt = np.empty(lanes.size, dtype=np.int64)
        cnt[sure] = rem[lanes[sure]]
        if (~sure).any():
            dr = lanes[~sure]
            keys_c = derive_vec(row_keys[dr], np.uint64(c))
            cnt[~sure] = binomial_vec(keys_c, rem[dr], p[~sure])
        np.add.at(s_out, idx_mat[lanes, c], cnt)
        rem[lanes] -= cnt
    if (rem > 0).any():
        return int(rows[np.flatnonzero(rem > 0)[0]])
    return -1


def step_counts_csr(indptr, indices, weights, x, y, step_key, s_out):
    rows = np.flatnonzero(y > 0)
    if rows.size == 0:
        return -1
    klen = indptr[rows + 1] - indptr[rows]
    kmax = int(klen.max())
    if kmax == 0:
        return int(rows[0])
    ar = np.arange(kmax)
    mask = ar[None, :] < klen[:, None]
    flat = np.minimum(indptr[rows][:, None] + ar[None, :], len(indices) - 1)
    idx_mat = np.where(mask, indices[flat], 0)
    w_mat = np.where(mask, weights[flat] * x[idx_mat], 0.0)
    return _counts_padded(idx_mat, w_mat, rows, y, step_key, s_out)


def step_counts_conv(taps_dr, taps_dc, taps_w, height, width, periodic,
                     x, y, step_key, s_out):
    rows = np.flatnonzero(y > 0)
    if rows.size == 0:
        return -1
    r = rows // width
    cc = rows - r * width
    rr = r[:, None] + taps_dr[None, :]
    cj = cc[:, None] + taps_dc[None, :]
    if periodic:
        rr %= height
        cj %= width
        valid = np.ones(rr.shape, dtype=bool)
    else:
        valid = (rr >= 0) & (rr < height) & (cj >= 0) & (cj < width)
        rr = np.where(valid, rr, 0)
        cj = np.where(valid, cj, 0)
    idx_mat = rr * width + cj
    w_mat = np.where(valid, taps_w[None, :] * x[idx_mat], 0.0)
    idx_mat = np.where(valid, idx_mat, 0)
    return _counts_padded(idx_mat, w_mat, rows, y, step_key, s_out)
