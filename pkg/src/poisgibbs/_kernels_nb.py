"""numba-compiled kernels: distribution samplers and the latent-count sweep.

Algorithms (shared with the numpy backend, slot layouts must match exactly):

* gamma: Marsaglia-Tsang squeeze/rejection, shape < 1 boosted through
  Gamma(shape + 1) times U^(1/shape).  Slot 0 reserved for the boost
  uniform; iteration i uses slots 1+3i, 2+3i (normal pair) and 3+3i.
* binomial: inversion when n*min(p,1-p) <= 10 (slot 0 only), transformed
  rejection (BTRS) otherwise (slots 2i, 2i+1 per iteration).
* poisson: product-of-uniforms when lam < 10 (slots 0,1,...), transformed
  rejection (PTRS) otherwise (slots 2i, 2i+1).
* multinomial: sequential conditional binomials over suffix weight sums;
  category c draws from the child stream derive(row_key, c).

Rejection loops are capped at 128 rounds; the cap is unreachable in
practice (acceptance rates are >= 0.7 per round) and exists so compiled
loops provably terminate.
"""

import math

import numpy as np
from numba import njit

from ._rngcore import GOLDEN, MIX_A, MIX_B, DERIVE_TAG

_U_GOLDEN = np.uint64(GOLDEN)
_U_MIX_A = np.uint64(MIX_A)
_U_MIX_B = np.uint64(MIX_B)
_U_TAG = np.uint64(DERIVE_TAG)
_S30 = np.uint64(30)
_S27 = np.uint64(27)
_S31 = np.uint64(31)
_S11 = np.uint64(11)
_ONE = np.uint64(1)
_INV53 = 2.0 ** -53
_TWO_PI = 2.0 * math.pi
_REJ_CAP = 128
_TINY_POS = 2.2250738585072014e-308  # smallest positive normal double


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> _S30)) * _U_MIX_A
    z = (z ^ (z >> _S27)) * _U_MIX_B
    return z ^ (z >> _S31)


@njit(cache=True)
def _derive(key, tag):
    return _mix64(key ^ _mix64(tag * _U_GOLDEN + _U_TAG))


@njit(cache=True)
def _u01(key, slot):
    bits = _mix64(key + (slot + _ONE) * _U_GOLDEN)
    return (float(bits >> _S11) + 0.5) * _INV53


@njit(cache=True)
def _normal(key, slot):
    u1 = _u01(key, slot)
    u2 = _u01(key, slot + _ONE)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(_TWO_PI * u2)


@njit(cache=True)
def _gamma_std(key, a):
    """Unit-rate gamma draw, valid for any shape a > 0."""
    boosted = a < 1.0
    d = (a + 1.0 if boosted else a) - 1.0 / 3.0
    c = 1.0 / math.sqrt(9.0 * d)
    out = d  # cap fallback, unreachable
    for i in range(_REJ_CAP):
        base = np.uint64(1 + 3 * i)
        z = _normal(key, base)
        t = 1.0 + c * z
        v = t * t * t
        if v <= 0.0:
            continue
        u = _u01(key, base + np.uint64(2))
        z2 = z * z
        if u < 1.0 - 0.0331 * z2 * z2:
            out = d * v
            break
        if math.log(u) < 0.5 * z2 + d * (1.0 - v + math.log(v)):
            out = d * v
            break
    if boosted:
        u0 = _u01(key, np.uint64(0))
        out = out * math.exp(math.log(u0) / a)
    if out < _TINY_POS:
        out = _TINY_POS
    return out


@njit(cache=True)
def _binomial(key, n, p):
    """Draw from Binomial(n, p); exact for all n >= 0, p in [0, 1]."""
    if n <= 0 or p <= 0.0:
        return 0
    if p >= 1.0:
        return n
    flip = p > 0.5
    q = 1.0 - p if flip else p
    k = 0
    if n * q <= 10.0:
        # inversion: walk the cdf with a single uniform
        s = q / (1.0 - q)
        r = math.exp(n * math.log1p(-q))
        u = _u01(key, np.uint64(0))
        while u > r:
            u -= r
            k += 1
            if k > n:
                k = n
                break
            r *= s * (n - k + 1) / k
    else:
        spq = math.sqrt(n * q * (1.0 - q))
        b = 1.15 + 2.53 * spq
        a = -0.0873 + 0.0248 * b + 0.01 * q
        c = n * q + 0.5
        vr = 0.92 - 4.2 / b
        alpha = (2.83 + 5.1 / b) * spq
        lpq = math.log(q / (1.0 - q))
        m = int(math.floor((n + 1) * q))
        h = math.lgamma(m + 1.0) + math.lgamma(n - m + 1.0)
        k = m  # cap fallback, unreachable
        for i in range(_REJ_CAP):
            base = np.uint64(2 * i)
            u = _u01(key, base) - 0.5
            v = _u01(key, base + _ONE)
            us = 0.5 - abs(u)
            kf = math.floor((2.0 * a / us + b) * u + c)
            if kf < 0.0 or kf > n:
                continue
            kk = int(kf)
            if us >= 0.07 and v <= vr:
                k = kk
                break
            lv = math.log(v * alpha / (a / (us * us) + b))
            ub = (h - math.lgamma(kk + 1.0) - math.lgamma(n - kk + 1.0)
                  + (kk - m) * lpq)
            if lv <= ub:
                k = kk
                break
    if flip:
        k = n - k
    return k


@njit(cache=True)
def _poisson(key, lam):
    if lam <= 0.0:
        return 0
    if lam < 10.0:
        enlam = math.exp(-lam)
        k = 0
        prod = 1.0
        for slot in range(4096):
            prod *= _u01(key, np.uint64(slot))
            if prod <= enlam:
                break
            k += 1
        return k
    b = 0.931 + 2.53 * math.sqrt(lam)
    a = -0.059 + 0.02483 * b
    invalpha = 1.1239 + 1.1328 / (b - 3.4)
    vr = 0.9277 - 3.6224 / (b - 2.0)
    loglam = math.log(lam)
    k = int(lam)  # cap fallback, unreachable
    for i in range(_REJ_CAP):
        base = np.uint64(2 * i)
        u = _u01(key, base) - 0.5
        v = _u01(key, base + _ONE)
        us = 0.5 - abs(u)
        kf = math.floor((2.0 * a / us + b) * u + lam + 0.43)
        if kf < 0.0:
            continue
        kk = int(kf)
        if us >= 0.07 and v <= vr:
            k = kk
            break
        if us < 0.013 and v > us:
            continue
        if (math.log(v * invalpha / (a / (us * us) + b))
                <= kk * loglam - lam - math.lgamma(kk + 1.0)):
            k = kk
            break
    return k


@njit(cache=True)
def gamma_vec(step_key, shapes):
    """Independent unit-rate gamma draws; component j uses child stream j."""
    n = shapes.shape[0]
    out = np.empty(n, dtype=np.float64)
    for j in range(n):
        out[j] = _gamma_std(_derive(step_key, np.uint64(j)), shapes[j])
    return out


@njit(cache=True)
def poisson_vec(step_key, lams):
    n = lams.shape[0]
    out = np.empty(n, dtype=np.int64)
    for j in range(n):
        out[j] = _poisson(_derive(step_key, np.uint64(j)), lams[j])
    return out


@njit(cache=True)
def binomial_vec(keys, ns, ps):
    n = keys.shape[0]
    out = np.empty(n, dtype=np.int64)
    for j in range(n):
        out[j] = _binomial(keys[j], ns[j], ps[j])
    return out


@njit(cache=True)
def _multinomial_suffix(row_key, total, wbuf, sbuf, k, idx, off, s_out):
    """Sequential conditional binomials over suffix sums; accumulates into s_out.

    Returns remaining count (0 on success, >0 only if weights were exhausted
    while counts remained, which the caller reports as model inconsistency).
    """
    rem = total
    for c in range(k):
        if rem == 0:
            break
        w = wbuf[c]
        if w <= 0.0:
            continue
        p = w / sbuf[c]
        if p >= 1.0:
            cnt = rem
        else:
            cnt = _binomial(_derive(row_key, np.uint64(c)), rem, p)
        if cnt > 0:
            s_out[idx[off + c]] += cnt
        rem -= cnt
    return rem


@njit(cache=True)
def multinomial_one(key, total, weights):
    """Single multinomial draw over (possibly unnormalized) weights."""
    k = weights.shape[0]
    sbuf = np.empty(k, dtype=np.float64)
    acc = 0.0
    for c in range(k - 1, -1, -1):
        acc += weights[c]
        sbuf[c] = acc
    out = np.zeros(k, dtype=np.int64)
    idx = np.arange(k, dtype=np.int64)
    rem = _multinomial_suffix(key, total, weights, sbuf, k, idx, 0, out)
    if rem > 0:
        out[0] = -1  # caller raises: zero weight mass with counts remaining
    return out


@njit(cache=True)
def step_counts_csr(indptr, indices, weights, x, y, step_key, s_out):
    """Latent-count accumulation for a CSR operator.

    Returns -1 on success, else the index of a row whose support weight
    vanished while its observed count is positive.
    """
    m = y.shape[0]
    kmax = 0
    for i in range(m):
        w = indptr[i + 1] - indptr[i]
        if w > kmax:
            kmax = w
    wbuf = np.empty(kmax, dtype=np.float64)
    sbuf = np.empty(kmax, dtype=np.float64)
    for i in range(m):
        yi = y[i]
        if yi == 0:
            continue
        off = indptr[i]
        k = indptr[i + 1] - off
        acc = 0.0
        for c in range(k - 1, -1, -1):
            wbuf[c] = weights[off + c] * x[indices[off + c]]
            acc += wbuf[c]
            sbuf[c] = acc
        if not (acc > 0.0):
            return i
        row_key = _derive(step_key, np.uint64(i))
        rem = _multinomial_suffix(row_key, yi, wbuf, sbuf, k, indices, off, s_out)
        if rem > 0:
            return i
    return -1


@njit(cache=True)
def step_counts_conv(taps_dr, taps_dc, taps_w, height, width, periodic,
                     x, y, step_key, s_out):
    """Latent-count accumulation for a stencil operator, rows on the fly.

    taps_dr/taps_dc are centered offsets of the stencil taps; `periodic`
    selects wraparound, otherwise out-of-range taps carry zero weight.
    """
    ktaps = taps_w.shape[0]
    wbuf = np.empty(ktaps, dtype=np.float64)
    jbuf = np.empty(ktaps, dtype=np.int64)
    sbuf = np.empty(ktaps, dtype=np.float64)
    m = y.shape[0]
    for i in range(m):
        yi = y[i]
        if yi == 0:
            continue
        r = i // width
        cc = i - r * width
        for t in range(ktaps):
            rr = r + taps_dr[t]
            cj = cc + taps_dc[t]
            if periodic:
                rr %= height
                cj %= width
            elif rr < 0 or rr >= height or cj < 0 or cj >= width:
                wbuf[t] = 0.0
                jbuf[t] = 0
                continue
            j = rr * width + cj
            jbuf[t] = j
            wbuf[t] = taps_w[t] * x[j]
        acc = 0.0
        for t in range(ktaps - 1, -1, -1):
            acc += wbuf[t]
            sbuf[t] = acc
        if not (acc > 0.0):
            return i
        row_key = _derive(step_key, np.uint64(i))
        rem = _multinomial_suffix(row_key, yi, wbuf, sbuf, ktaps, jbuf, 0, s_out)
        if rem > 0:
            return i
    return -1
