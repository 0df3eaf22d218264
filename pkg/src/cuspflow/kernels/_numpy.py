"""Vectorized numpy versions of the numba kernels.

Same signatures and outputs; loops run over reduction rounds or time steps
with the batch dimension vectorized.
"""

import math

import numpy as np

MAX_MOVES = 10_000
_EPS = 1e-14


def _reduce_rounds(m, complex_):
    m = m.copy()
    n = m.shape[0]
    moves = np.zeros(n, dtype=np.int64)
    active = np.ones(n, dtype=bool)
    rounds = 0
    while active.any():
        sub = m[active]
        a, b, c, d = sub[:, 0, 0], sub[:, 0, 1], sub[:, 1, 0], sub[:, 1, 1]
        q = np.abs(c) ** 2 + np.abs(d) ** 2
        x = (a * np.conj(c) + b * np.conj(d)) / q
        if complex_:
            shift = np.floor(x.real + 0.5) + 1j * np.floor(x.imag + 0.5)
        else:
            shift = np.floor(x + 0.5)
        moved = shift != 0
        a = a - shift * c
        b = b - shift * d
        top = np.abs(a) ** 2 + np.abs(b) ** 2
        flip = top < q * (1.0 - _EPS)
        na = np.where(flip, -c, a)
        nb = np.where(flip, -d, b)
        nc = np.where(flip, a, c)
        nd = np.where(flip, b, d)
        sub[:, 0, 0], sub[:, 0, 1], sub[:, 1, 0], sub[:, 1, 1] = na, nb, nc, nd
        m[active] = sub
        idx = np.flatnonzero(active)
        moves[idx] += moved.astype(np.int64) + flip.astype(np.int64)
        done = ~flip
        active[idx[done]] = False
        rounds += 1
        over = moves > MAX_MOVES
        if over.any():
            moves[over] = -1
            active[over] = False
    return m, moves


def reduce_real_batch(mats):
    out, moves = _reduce_rounds(np.asarray(mats, dtype=float), False)
    logh = -np.log(out[:, 1, 0] ** 2 + out[:, 1, 1] ** 2)
    return out, logh, moves


def reduce_complex_batch(mats):
    out, moves = _reduce_rounds(np.asarray(mats, dtype=complex), True)
    logh = -np.log(np.abs(out[:, 1, 0]) ** 2 + np.abs(out[:, 1, 1]) ** 2)
    return out, logh, moves


def orbit_logheights_many(g0s, step, nsteps, resync, complex_):
    """(N, nsteps) log heights for N orbits advanced in lockstep."""
    g0s = np.asarray(g0s, dtype=complex if complex_ else float)
    m, moves = _reduce_rounds(g0s, complex_)
    status = np.where(moves < 0, -1, 0)
    out = np.empty((g0s.shape[0], nsteps))
    for j in range(1, nsteps + 1):
        if resync > 0 and j % resync == 0:
            s = j * step
            m = g0s.copy()
            m[:, 0, 0] += g0s[:, 0, 1] * s
            m[:, 1, 0] += g0s[:, 1, 1] * s
        else:
            m[:, 0, 0] += m[:, 0, 1] * step
            m[:, 1, 0] += m[:, 1, 1] * step
        m, moves = _reduce_rounds(m, complex_)
        status = np.where(moves < 0, -1, status)
        det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
        drift = np.abs(det - 1.0) > 1e-12
        if drift.any():
            m[drift] /= np.sqrt(det[drift])[:, None, None]
        out[:, j - 1] = -np.log(np.abs(m[:, 1, 0]) ** 2 + np.abs(m[:, 1, 1]) ** 2)
    return out, status


def _gcd_real(p, q):
    return np.gcd(np.abs(p), np.abs(q))


def _gauss_unit_gcd(p, q):
    a = p.astype(complex)
    b = q.astype(complex)
    live = b != 0
    while live.any():
        ab, bb = a[live], b[live]
        k = ab / bb
        k = np.floor(k.real + 0.5) + 1j * np.floor(k.imag + 0.5)
        r = ab - k * bb
        a[live], b[live] = bb, r
        live = b != 0
    return np.abs(a) ** 2 == 1


def enumerate_real(mats, lo, hi, level, rho=2.0):
    mats = np.asarray(mats, dtype=float)
    out = [[], [], [], [], []]
    for i, g in enumerate(mats):
        a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
        P, R, Q = a * a + b * b, a * c + b * d, c * c + d * d
        cmax = int(math.floor(math.sqrt(hi * Q)))
        ps = np.arange(0, cmax + 1, dtype=np.int64)
        ps = ps[ps % level == 0]
        rad = np.sqrt(np.maximum((hi - ps * ps / Q) / Q, 0.0))
        center = -ps * R / Q
        qlo = np.ceil(center - rad).astype(np.int64)
        qhi = np.floor(center + rad).astype(np.int64)
        counts = np.maximum(qhi - qlo + 1, 0)
        if counts.sum() == 0:
            continue
        pp = np.repeat(ps, counts)
        offs = np.arange(counts.sum()) - np.repeat(np.cumsum(counts) - counts, counts)
        qq = np.repeat(qlo, counts) + offs
        nrm = P * pp * pp + 2.0 * R * pp * qq + Q * qq * qq
        keep = (nrm >= lo) & (nrm <= hi) & ((pp > 0) | ((pp == 0) & (qq == 1)))
        if rho < 1.0:
            keep &= (pp * a + qq * c) ** 2 <= rho * rho * nrm
        pp, qq = pp[keep], qq[keep]
        keep = _gcd_real(pp, qq) == 1
        pp, qq = pp[keep], qq[keep]
        out[0].append(np.full(pp.size, i, dtype=np.int64))
        out[1].append(pp)
        out[2].append(qq)
        out[3].append(pp * a + qq * c)
        out[4].append(pp * b + qq * d)
    if not out[0]:
        e = np.empty(0, dtype=np.int64)
        return e, e, e, np.empty(0), np.empty(0)
    return tuple(np.concatenate(v) for v in out)


def enumerate_complex(mats, lo, hi, rho=2.0):
    mats = np.asarray(mats, dtype=complex)
    out = [[], [], [], [], []]
    for i, g in enumerate(mats):
        a, b, c, d = g[0, 0], g[0, 1], g[1, 0], g[1, 1]
        R = a * np.conj(c) + b * np.conj(d)
        Q = abs(c) ** 2 + abs(d) ** 2
        pbound = hi * Q
        if rho < 1.0:
            # p = w0 d - w1 c with |w0| <= rho sqrt(hi) and |w1| <= sqrt(hi)
            pbound = min(pbound, ((abs(d) * rho + abs(c)) * math.sqrt(hi) * (1 + 1e-12)) ** 2)
        pmax = int(math.floor(math.sqrt(pbound)))
        r = np.arange(-pmax, pmax + 1)
        pr, pi_ = np.meshgrid(r, r, indexing="ij")
        p = (pr + 1j * pi_).ravel()
        p = p[np.abs(p) ** 2 <= pbound]
        rad = np.sqrt(np.maximum((hi - np.abs(p) ** 2 / Q) / Q, 0.0))
        center = -p * R / Q
        span = int(math.ceil(rad.max())) + 1 if p.size else 0
        offs = np.arange(-span, span + 1)
        qr = np.round(center.real)[:, None, None] + offs[None, :, None]
        qi = np.round(center.imag)[:, None, None] + offs[None, None, :]
        q = (qr + 1j * qi).reshape(p.size, -1)
        pp = np.broadcast_to(p[:, None], q.shape)
        q, pp = q.ravel(), pp.ravel()
        v0 = pp * a + q * c
        v1 = pp * b + q * d
        nrm = np.abs(v0) ** 2 + np.abs(v1) ** 2
        canon = np.where(pp != 0, (pp.real > 0) & (pp.imag >= 0), (q.real > 0) & (q.imag >= 0))
        keep = (nrm >= lo) & (nrm <= hi) & canon
        if rho < 1.0:
            keep &= np.abs(v0) ** 2 <= rho * rho * nrm
        pp, q, v0, v1 = pp[keep], q[keep], v0[keep], v1[keep]
        keep = _gauss_unit_gcd(pp, q)
        out[0].append(np.full(int(keep.sum()), i, dtype=np.int64))
        out[1].append(pp[keep])
        out[2].append(q[keep])
        out[3].append(v0[keep])
        out[4].append(v1[keep])
    if not out[0]:
        e = np.empty(0, dtype=np.int64)
        ec = np.empty(0, dtype=complex)
        return e, ec, ec, ec, ec
    return tuple(np.concatenate(v) for v in out)


def eisenstein_sum_real(mats, power, bound):
    mats = np.asarray(mats, dtype=float)
    res = np.zeros(mats.shape[0])
    for i in range(mats.shape[0]):
        _, _, _, w0, w1 = enumerate_real(mats[i:i + 1], 0.0, bound, 1)
        res[i] = np.sum((w0 * w0 + w1 * w1) ** (-power))
    return res


def eisenstein_sum_complex(mats, power, bound):
    mats = np.asarray(mats, dtype=complex)
    res = np.zeros(mats.shape[0])
    for i in range(mats.shape[0]):
        _, _, _, w0, w1 = enumerate_complex(mats[i:i + 1], 0.0, bound)
        res[i] = np.sum((np.abs(w0) ** 2 + np.abs(w1) ** 2) ** (-power))
    return res
