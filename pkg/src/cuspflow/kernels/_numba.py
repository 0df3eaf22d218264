"""Scalar-loop kernels compiled with numba.

All matrices are 2x2 with rows (a, b), (c, d).  The "log height" of a
representative is t = -log(|c|^2 + |d|^2), its Iwasawa t-coordinate.
"""

import math

import numpy as np

from .._backend import njit

MAX_MOVES = 10_000
_EPS = 1e-14


# ---------------------------------------------------------------------------
# reduction into the standard fundamental domains

@njit
def reduce_real_inplace(m):
    """Reduce m modulo SL2(Z) acting on the left.  Returns the move count,
    or -1 if MAX_MOVES was exceeded."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    moves = 0
    while True:
        q = c * c + d * d
        x = (a * c + b * d) / q
        n = math.floor(x + 0.5)
        if n != 0.0:
            a -= n * c
            b -= n * d
            moves += 1
        if a * a + b * b < q * (1.0 - _EPS):
            a, b, c, d = -c, -d, a, b
            moves += 1
        else:
            break
        if moves > MAX_MOVES:
            moves = -1
            break
    m[0, 0], m[0, 1], m[1, 0], m[1, 1] = a, b, c, d
    return moves


@njit
def reduce_complex_inplace(m):
    """Reduce m modulo SL2(Z[i]): translate x into the unit square centered at
    0, invert while |x|^2 + h^2 < 1."""
    a, b, c, d = m[0, 0], m[0, 1], m[1, 0], m[1, 1]
    moves = 0
    while True:
        q = c.real * c.real + c.imag * c.imag + d.real * d.real + d.imag * d.imag
        x = (a * c.conjugate() + b * d.conjugate()) / q
        nr = math.floor(x.real + 0.5)
        ni = math.floor(x.imag + 0.5)
        if nr != 0.0 or ni != 0.0:
            n = complex(nr, ni)
            a -= n * c
            b -= n * d
            moves += 1
        top = a.real * a.real + a.imag * a.imag + b.real * b.real + b.imag * b.imag
        if top < q * (1.0 - _EPS):
            a, b, c, d = -c, -d, a, b
            moves += 1
        else:
            break
        if moves > MAX_MOVES:
            moves = -1
            break
    m[0, 0], m[0, 1], m[1, 0], m[1, 1] = a, b, c, d
    return moves


@njit
def reduce_real_batch(mats):
    out = mats.copy()
    logh = np.empty(mats.shape[0])
    moves = np.empty(mats.shape[0], dtype=np.int64)
    for i in range(mats.shape[0]):
        moves[i] = reduce_real_inplace(out[i])
        logh[i] = -math.log(out[i, 1, 0] ** 2 + out[i, 1, 1] ** 2)
    return out, logh, moves


@njit
def reduce_complex_batch(mats):
    out = mats.copy()
    logh = np.empty(mats.shape[0])
    moves = np.empty(mats.shape[0], dtype=np.int64)
    for i in range(mats.shape[0]):
        moves[i] = reduce_complex_inplace(out[i])
        logh[i] = -math.log(abs(out[i, 1, 0]) ** 2 + abs(out[i, 1, 1]) ** 2)
    return out, logh, moves


# ---------------------------------------------------------------------------
# orbits of the unipotent flow

@njit
def orbit_logheights_real(g0, step, nsteps, resync):
    """log heights of the reduced x0 u_{j*step}, j = 1..nsteps.

    The representative is carried forward by right multiplication with
    u_step and re-reduced; every ``resync`` steps it is rebuilt from
    g0 u_s directly to stop rounding drift.  Returns (logh, status) with
    status -1 on a reduction overflow.
    """
    out = np.empty(nsteps)
    m = g0.copy()
    status = reduce_real_inplace(m)
    if status < 0:
        return out, -1
    for j in range(1, nsteps + 1):
        if resync > 0 and j % resync == 0:
            s = j * step
            m[0, 0] = g0[0, 0] + g0[0, 1] * s
            m[0, 1] = g0[0, 1]
            m[1, 0] = g0[1, 0] + g0[1, 1] * s
            m[1, 1] = g0[1, 1]
        else:
            m[0, 0] += m[0, 1] * step
            m[1, 0] += m[1, 1] * step
        if reduce_real_inplace(m) < 0:
            return out, -1
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1.0) > 1e-12:
            r = 1.0 / math.sqrt(det)
            m[0, 0] *= r
            m[0, 1] *= r
            m[1, 0] *= r
            m[1, 1] *= r
        out[j - 1] = -math.log(m[1, 0] ** 2 + m[1, 1] ** 2)
    return out, 0


@njit
def orbit_logheights_complex(g0, step, nsteps, resync):
    out = np.empty(nsteps)
    m = g0.copy()
    status = reduce_complex_inplace(m)
    if status < 0:
        return out, -1
    for j in range(1, nsteps + 1):
        if resync > 0 and j % resync == 0:
            s = j * step
            m[0, 0] = g0[0, 0] + g0[0, 1] * s
            m[0, 1] = g0[0, 1]
            m[1, 0] = g0[1, 0] + g0[1, 1] * s
            m[1, 1] = g0[1, 1]
        else:
            m[0, 0] += m[0, 1] * step
            m[1, 0] += m[1, 1] * step
        if reduce_complex_inplace(m) < 0:
            return out, -1
        det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
        if abs(det - 1.0) > 1e-12:
            r = 1.0 / np.sqrt(det)
            m[0, 0] *= r
            m[0, 1] *= r
            m[1, 0] *= r
            m[1, 1] *= r
        out[j - 1] = -math.log(abs(m[1, 0]) ** 2 + abs(m[1, 1]) ** 2)
    return out, 0


# ---------------------------------------------------------------------------
# coprime pairs in an ellipse

@njit
def _gcd_int(a, b):
    a = abs(a)
    b = abs(b)
    while b:
        a, b = b, a % b
    return a


@njit
def _gauss_is_unit_gcd(pr, pi, qr, qi):
    # Euclid in Z[i] with nearest-integer quotients
    ar, ai, br, bi = pr, pi, qr, qi
    while br != 0 or bi != 0:
        nb = br * br + bi * bi
        # a / b = a * conj(b) / |b|^2
        xr = ar * br + ai * bi
        xi = ai * br - ar * bi
        kr = int(math.floor(xr / nb + 0.5))
        ki = int(math.floor(xi / nb + 0.5))
        rr = ar - (kr * br - ki * bi)
        ri = ai - (kr * bi + ki * br)
        ar, ai, br, bi = br, bi, rr, ri
    return ar * ar + ai * ai == 1


@njit
def _canonical_real(c, d):
    return c > 0 or (c == 0 and d == 1)


@njit
def _canonical_complex(cr, ci, dr, di):
    if cr != 0 or ci != 0:
        return cr > 0 and ci >= 0
    return dr > 0 and di >= 0


@njit
def _scan_real(mats, lo, hi, level, rho, fill, idx, cs, ds, w0, w1):
    count = 0
    cone = rho < 1.0
    wmax = rho * math.sqrt(hi)
    for i in range(mats.shape[0]):
        a, b, c, d = mats[i, 0, 0], mats[i, 0, 1], mats[i, 1, 0], mats[i, 1, 1]
        P = a * a + b * b
        R = a * c + b * d
        Q = c * c + d * d
        cmax = int(math.floor(math.sqrt(hi * Q)))
        for p in range(0, cmax + 1):
            if p % level != 0:
                continue
            rad2 = (hi - p * p / Q) / Q
            if rad2 < 0:
                continue
            center = -p * R / Q
            rad = math.sqrt(rad2)
            qlo = int(math.ceil(center - rad))
            qhi = int(math.floor(center + rad))
            if cone and abs(c) > 1e-300:
                # |p a + q c| <= rho sqrt(hi)
                e1 = (-p * a - wmax) / c
                e2 = (-p * a + wmax) / c
                qlo = max(qlo, int(math.ceil(min(e1, e2))))
                qhi = min(qhi, int(math.floor(max(e1, e2))))
            for q in range(qlo, qhi + 1):
                if not _canonical_real(p, q):
                    continue
                nrm = P * p * p + 2.0 * R * p * q + Q * q * q
                if nrm < lo or nrm > hi:
                    continue
                if cone:
                    v0 = p * a + q * c
                    if v0 * v0 > rho * rho * nrm:
                        continue
                if _gcd_int(p, q) != 1:
                    continue
                if fill:
                    idx[count] = i
                    cs[count] = p
                    ds[count] = q
                    w0[count] = p * a + q * c
                    w1[count] = p * b + q * d
                count += 1
    return count


@njit
def enumerate_real(mats, lo, hi, level, rho=2.0):
    """All canonical coprime (c, d) with lo <= ||(c, d) g||^2 <= hi, c = 0 mod level.

    Returns (point index, c, d, w0, w1) where (w0, w1) = (c, d) g.
    """
    z = np.empty(0, dtype=np.int64)
    zf = np.empty(0)
    n = _scan_real(mats, lo, hi, level, rho, False, z, z, z, zf, zf)
    idx = np.empty(n, dtype=np.int64)
    cs = np.empty(n, dtype=np.int64)
    ds = np.empty(n, dtype=np.int64)
    w0 = np.empty(n)
    w1 = np.empty(n)
    _scan_real(mats, lo, hi, level, rho, True, idx, cs, ds, w0, w1)
    return idx, cs, ds, w0, w1


@njit
def _scan_complex(mats, lo, hi, rho, fill, idx, cs, ds, w0, w1):
    count = 0
    cone = rho < 1.0
    wmax = rho * math.sqrt(hi)
    for i in range(mats.shape[0]):
        a, b, c, d = mats[i, 0, 0], mats[i, 0, 1], mats[i, 1, 0], mats[i, 1, 1]
        R = a * c.conjugate() + b * d.conjugate()
        Q = abs(c) ** 2 + abs(d) ** 2
        pbound = hi * Q
        if cone:
            # p = w0 d - w1 c with |w0| <= wmax and |w1| <= sqrt(hi)
            pbound = min(pbound, ((abs(d) * wmax + abs(c) * math.sqrt(hi)) * (1 + 1e-12)) ** 2)
        pmax = int(math.floor(math.sqrt(pbound)))
        for pr in range(-pmax, pmax + 1):
            for pi_ in range(-pmax, pmax + 1):
                pp = pr * pr + pi_ * pi_
                if pp > pbound:
                    continue
                rad2 = (hi - pp / Q) / Q
                if rad2 < 0:
                    continue
                p = complex(pr, pi_)
                center = -p * R / Q
                rad = math.sqrt(rad2)
                rlo = int(math.ceil(center.real - rad))
                rhi = int(math.floor(center.real + rad))
                use_cone = cone and abs(c) > 1e-300
                if use_cone:
                    # |p a + q c| <= rho sqrt(hi): q in a second disk
                    c2 = -p * a / c
                    r2 = wmax / abs(c)
                    rlo = max(rlo, int(math.ceil(c2.real - r2)))
                    rhi = min(rhi, int(math.floor(c2.real + r2)))
                for qr in range(rlo, rhi + 1):
                    dx = qr - center.real
                    rem = rad2 - dx * dx
                    if rem < 0:
                        continue
                    h = math.sqrt(rem)
                    ilo = int(math.ceil(center.imag - h))
                    ihi = int(math.floor(center.imag + h))
                    if use_cone:
                        dx2 = qr - c2.real
                        rem2 = r2 * r2 - dx2 * dx2
                        if rem2 < 0:
                            continue
                        h2 = math.sqrt(rem2)
                        ilo = max(ilo, int(math.ceil(c2.imag - h2)))
                        ihi = min(ihi, int(math.floor(c2.imag + h2)))
                    for qi in range(ilo, ihi + 1):
                        if not _canonical_complex(pr, pi_, qr, qi):
                            continue
                        q = complex(qr, qi)
                        v0 = p * a + q * c
                        v1 = p * b + q * d
                        nrm = abs(v0) ** 2 + abs(v1) ** 2
                        if nrm < lo or nrm > hi:
                            continue
                        if cone and abs(v0) ** 2 > rho * rho * nrm:
                            continue
                        if not _gauss_is_unit_gcd(pr, pi_, qr, qi):
                            continue
                        if fill:
                            idx[count] = i
                            cs[count] = p
                            ds[count] = q
                            w0[count] = v0
                            w1[count] = v1
                        count += 1
    return count


@njit
def enumerate_complex(mats, lo, hi, rho=2.0):
    z = np.empty(0, dtype=np.int64)
    zc = np.empty(0, dtype=np.complex128)
    n = _scan_complex(mats, lo, hi, rho, False, z, zc, zc, zc, zc)
    idx = np.empty(n, dtype=np.int64)
    cs = np.empty(n, dtype=np.complex128)
    ds = np.empty(n, dtype=np.complex128)
    w0 = np.empty(n, dtype=np.complex128)
    w1 = np.empty(n, dtype=np.complex128)
    _scan_complex(mats, lo, hi, rho, True, idx, cs, ds, w0, w1)
    return idx, cs, ds, w0, w1


@njit
def eisenstein_sum_real(mats, power, bound):
    """Per point, the sum of ||(c,d) g||^(-2 power) over canonical coprime
    (c, d) with ||(c,d) g||^2 <= bound."""
    out = np.zeros(mats.shape[0])
    for i in range(mats.shape[0]):
        a, b, c, d = mats[i, 0, 0], mats[i, 0, 1], mats[i, 1, 0], mats[i, 1, 1]
        P = a * a + b * b
        R = a * c + b * d
        Q = c * c + d * d
        cmax = int(math.floor(math.sqrt(bound * Q)))
        acc = 0.0
        for p in range(0, cmax + 1):
            rad2 = (bound - p * p / Q) / Q
            if rad2 < 0:
                continue
            center = -p * R / Q
            rad = math.sqrt(rad2)
            for q in range(int(math.ceil(center - rad)), int(math.floor(center + rad)) + 1):
                if not _canonical_real(p, q):
                    continue
                nrm = P * p * p + 2.0 * R * p * q + Q * q * q
                if nrm > bound:
                    continue
                if _gcd_int(p, q) != 1:
                    continue
                acc += nrm ** (-power)
        out[i] = acc
    return out


@njit
def eisenstein_sum_complex(mats, power, bound):
    """As :func:`eisenstein_sum_real` over Z[i]."""
    out = np.zeros(mats.shape[0])
    for i in range(mats.shape[0]):
        a, b, c, d = mats[i, 0, 0], mats[i, 0, 1], mats[i, 1, 0], mats[i, 1, 1]
        R = a * c.conjugate() + b * d.conjugate()
        Q = abs(c) ** 2 + abs(d) ** 2
        pmax = int(math.floor(math.sqrt(bound * Q)))
        acc = 0.0
        for pr in range(-pmax, pmax + 1):
            for pi_ in range(-pmax, pmax + 1):
                pp = pr * pr + pi_ * pi_
                rad2 = (bound - pp / Q) / Q
                if rad2 < 0:
                    continue
                p = complex(pr, pi_)
                center = -p * R / Q
                rad = math.sqrt(rad2)
                for qr in range(int(math.ceil(center.real - rad)), int(math.floor(center.real + rad)) + 1):
                    dx = qr - center.real
                    rem = rad2 - dx * dx
                    if rem < 0:
                        continue
                    h = math.sqrt(rem)
                    for qi in range(int(math.ceil(center.imag - h)), int(math.floor(center.imag + h)) + 1):
                        if not _canonical_complex(pr, pi_, qr, qi):
                            continue
                        q = complex(qr, qi)
                        v0 = p * a + q * c
                        v1 = p * b + q * d
                        nrm = abs(v0) ** 2 + abs(v1) ** 2
                        if nrm > bound:
                            continue
                        if not _gauss_is_unit_gcd(pr, pi_, qr, qi):
                            continue
                        acc += nrm ** (-power)
        out[i] = acc
    return out
