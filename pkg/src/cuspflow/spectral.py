"""Spectral side of the theta norm.

For ``f = v(t) psi(k)`` with weight decomposition ``w_m = ||psi_m||^2`` the
norm of the incomplete theta series is

    c0 * ( ||psi||^2 int |vhat(r - i/2)|^2 dr
         + int vhat(r - i/2)^2 C(1/2 + ir) sum_m w_m P_m(1/2 + ir) dr
         + sum_j c_j sum_m w_m P_m(s_j) |int v e^{-s_j t} dt|^2 )

where ``P_m(s) = prod_{k<|m|} (mu (1-s) + k) / (mu s + k)`` and the poles
``(s_j, c_j)`` include ``(1, c0)``.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import loggamma

from .errors import (
    InvalidParameter,
    PoleInDenominator,
    QuadratureBudgetExceeded,
    StepSizeUnderflow,
    TruncationFailure,
)
from .group import FactorKind
from .special import scattering_C, vhat_line

__all__ = [
    "pm_eval",
    "pm_table",
    "pm_asymptotic_check",
    "mf_eval",
    "ProjectionNorms",
    "su2_projection_norms",
    "su2_moments",
    "SpectralNormReport",
    "spectral_theta_norm",
    "OperatorReport",
    "operator_identity_check",
    "monotone_check",
    "m_tilde",
]


# ---------------------------------------------------------------------------
# P_m

def pm_eval(m, s, mu) -> complex:
    """``P_m(s)`` for a weight vector ``m`` and weight vector ``mu``.

    Raises
    ------
    PoleInDenominator
        If some ``mu_j s + k`` vanishes for ``k < |m_j|``.
    """
    m = np.atleast_1d(np.asarray(m, dtype=np.int64))
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if m.shape != mu.shape:
        raise InvalidParameter("m and mu must have the same length")
    s = complex(s)
    total = 1.0 + 0j
    for mj, muj in zip(np.abs(m).tolist(), mu.tolist()):
        if mj == 0:
            continue
        a, b = muj * (1 - s), muj * s
        ks = np.arange(mj)
        if np.any(np.abs(b + ks) < 1e-14):
            raise PoleInDenominator(f"mu s + k = 0 for mu={muj}, s={s}")
        if np.any(np.abs(a + ks) < 1e-14):
            return 0j
        if mj <= 50:
            total *= complex(np.prod((a + ks) / (b + ks)))
        else:
            lg = loggamma(a + mj) - loggamma(a) - loggamma(b + mj) + loggamma(b)
            total *= complex(np.exp(lg))
    return total


def pm_table(m_max: int, s, mu: int) -> np.ndarray:
    """``P_m(s)`` for ``m = 0..m_max`` (rows) and an array of ``s`` (columns).

    Raises
    ------
    PoleInDenominator
        If ``mu s + k`` vanishes for some ``k < m_max``.
    """
    s = np.atleast_1d(np.asarray(s, dtype=complex))
    ks = np.arange(m_max, dtype=float)[:, None]
    if np.any(np.abs(mu * s[None, :] + ks) < 1e-14):
        raise PoleInDenominator(f"mu s + k = 0 for mu={mu} and some s in {s.tolist()}")
    ratio = (mu * (1 - s)[None, :] + ks) / (mu * s[None, :] + ks)
    out = np.empty((m_max + 1, s.size), dtype=complex)
    out[0] = 1.0
    if m_max:
        out[1:] = np.cumprod(ratio, axis=0)
    return out


def pm_asymptotic_check(s: float, m_max: int, case=FactorKind.REAL) -> tuple:
    """Band ``(min, max)`` of ``P_m(s) (m+1)^{e}`` over ``1 <= m <= m_max``.

    ``e = 2s - 1`` for a real factor and ``4s - 2`` for a complex one.
    """
    case = FactorKind.parse(case)
    if m_max < 10:
        raise InvalidParameter("m_max must be >= 10")
    mu = case.mu
    p = pm_table(m_max, [s], mu)[:, 0].real
    m = np.arange(m_max + 1)
    e = mu * (2 * s - 1)
    ratio = p[1:] * (m[1:] + 1.0) ** e
    return float(ratio.min()), float(ratio.max())


def mf_eval(f, s, tail_tol: float = 1e-6) -> float:
    """``M_f(s) = (sum_m w_m P_m(s)) |int v e^{-s t} dt|^2``.

    Raises
    ------
    TruncationFailure
        When the unresolved weight mass exceeds ``tail_tol`` of the head.
    """
    s = complex(s)
    if not (0.5 < s.real <= 1.0):
        raise InvalidParameter("s must lie in (1/2, 1]")
    w = np.asarray(f.weights)
    p = pm_table(w.size - 1, [s], f.mu)[:, 0]
    head = complex(np.sum(w * p))
    mel = f.v.mellin(s)
    scale = abs(mel) ** 2
    # |P_m(s)| decreases in m for real s in (1/2, 1], so the unresolved
    # weights contribute at most |P_{M+1}(s)| times their mass
    bound = abs(pm_table(w.size, [s], f.mu)[-1, 0]) * f.weight_tail
    if w.size == 0 or bound > tail_tol * max(abs(head), 1e-300):
        raise TruncationFailure(f"weight tail bound {bound:.3e} too large vs head {abs(head):.3e}")
    return float(head.real * scale)


def m_tilde(f, s) -> float:
    """``lambda^{2 s L} sum_m w_m / (m+1)^{mu (2s - 1)}``, the asymptotic surrogate of M_f."""
    w = np.asarray(f.weights)
    m = np.arange(w.size)
    return float(math.exp(2 * s * f.v.length) * np.sum(w / (m + 1.0) ** (f.mu * (2 * s - 1))))


def monotone_check(f, s0: float, s_grid: Sequence[float]) -> dict:
    """Test the monotonicity of ``m_tilde`` on ``[s0, ...]`` when it is >= 1 at s0."""
    vals = [m_tilde(f, s) for s in s_grid]
    base = m_tilde(f, s0)
    diffs = np.diff([base] + vals)
    return {"s0": s0, "base": base, "values": vals, "applies": base >= 1.0,
            "nondecreasing": bool(np.all(diffs >= -1e-12 * max(abs(base), 1.0)))}


# ---------------------------------------------------------------------------
# SU(2) projections

@dataclass(frozen=True)
class ProjectionNorms:
    norms: np.ndarray
    total: float
    mean: float
    tail: float
    m_max: int


def _panels(a: float, b: float, width: float, nodes: int):
    n = max(1, int(math.ceil((b - a) / width)))
    e = np.linspace(a, b, n + 1)
    x, w = np.polynomial.legendre.leggauss(nodes)
    lo, hi = e[:-1, None], e[1:, None]
    return ((0.5 * (hi - lo) * x + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel())


def su2_moments(psi: Callable, theta_support, phi_support, nodes: int = 48) -> tuple:
    """``(||psi||^2, int psi dk)`` for ``psi(theta, phi)`` on ``M\\K``."""
    th, wth = _panels(*theta_support, (theta_support[1] - theta_support[0]) / 8, nodes)
    ph, wph = _panels(*phi_support, (phi_support[1] - phi_support[0]) / 8, nodes)
    F = psi(th[:, None], ph[None, :])
    meas = (np.sin(2 * th) * wth)[:, None] * wph[None, :] / (2 * math.pi)
    return float(np.sum(meas * F * F)), float(np.sum(meas * F))


# scipy's sph_legendre_p_all returns NaN from degree 646 on
SH_MAX_DEGREE = 645


def su2_projection_norms(psi: Callable, m_max: int | None = None,
                         theta_support=(0.0, math.pi / 2), phi_support=(-math.pi, math.pi),
                         tail_tol: float = 1e-3, budget: int = 512) -> ProjectionNorms:
    """``||psi_m||^2`` for ``psi(theta, phi)`` on ``M\\K``, ``phi = alpha - beta``.

    The pushforward of ``dk`` to ``(theta, phi)`` is ``sin(2 theta) dtheta dphi / (2 pi)``,
    i.e. normalized area on the sphere with polar angle ``2 theta``.  The
    weight-``m`` component is the degree-``m`` spherical-harmonic part.

    Parameters
    ----------
    psi : callable
        Vectorized in both arguments.
    m_max : int, optional
        Fixed truncation; by default doubled until the unresolved mass is
        below ``tail_tol`` of the total.
    theta_support, phi_support : tuple
        Intervals containing the support.
    budget : int
        Largest degree allowed before giving up; at most ``SH_MAX_DEGREE``.

    Raises
    ------
    QuadratureBudgetExceeded
    """
    from scipy.special import sph_legendre_p_all

    t0, t1 = theta_support
    p0, p1 = phi_support
    adaptive = m_max is None
    m_cur = 32 if adaptive else int(m_max)
    if m_cur > SH_MAX_DEGREE or budget > SH_MAX_DEGREE:
        raise QuadratureBudgetExceeded(f"spherical-harmonic degree limited to {SH_MAX_DEGREE}")
    while True:
        res = max(m_cur, 8)
        # about 5 nodes per half-wavelength of the degree-m harmonics
        th, wth = _panels(t0, t1, min((t1 - t0) / 4, 6.0 / res), 16)
        ph, wph = _panels(p0, p1, min((p1 - p0) / 4, 6.0 / res), 16)
        F = psi(th[:, None], ph[None, :])
        meas = np.sin(2 * th) * wth
        total = float(np.sum(meas[:, None] * (F * F) * wph[None, :]) / (2 * math.pi))
        mean = float(np.sum(meas[:, None] * F * wph[None, :]) / (2 * math.pi))
        ls = np.arange(-m_cur, m_cur + 1)
        # F_l(theta) = (1/2pi) int F e^{-i l phi} dphi
        Fl = (F * wph[None, :]) @ np.exp(-1j * np.outer(ph, ls)) / (2 * math.pi)
        energy = np.sum(np.abs(Fl) ** 2 * meas[:, None], axis=0)
        big = np.flatnonzero(energy > 1e-14 * max(energy.max(), 1e-300))
        lmax = int(np.max(np.abs(ls[big]))) if big.size else 0
        Theta = 2 * th
        sinw = np.sin(Theta) * 2 * wth   # sin(Theta) dTheta
        chunk = max(1, int(2e7 // ((m_cur + 1) * (2 * lmax + 1))))
        acc = np.zeros((m_cur + 1, 2 * lmax + 1), dtype=complex)
        for i in range(0, th.size, chunk):
            P = sph_legendre_p_all(m_cur, lmax, Theta[i:i + chunk])[0]
            # orders come as 0..lmax then -lmax..-1; put them in ascending order
            P = np.concatenate([P[:, lmax + 1:], P[:, :lmax + 1]], axis=1)
            fl = Fl[i:i + chunk, m_cur - lmax:m_cur + lmax + 1] * sinw[i:i + chunk, None]
            acc += np.einsum("mlt,tl->ml", P, fl)
        # a_{ml} = (2 pi / sqrt(4 pi)) int F_l P_ml sin dTheta
        acc *= 2 * math.pi / math.sqrt(4 * math.pi)
        norms = np.sum(np.abs(acc) ** 2, axis=1)
        tail = max(total - float(norms.sum()), 0.0)
        if not adaptive or tail <= tail_tol * total:
            return ProjectionNorms(norms, total, mean, tail, m_cur)
        if m_cur * 2 > budget:
            raise QuadratureBudgetExceeded(
                f"projection tail {tail:.2e} still above {tail_tol:.0e} at m = {m_cur}")
        m_cur *= 2


# ---------------------------------------------------------------------------
# spectral norm

@dataclass
class SpectralNormReport:
    """Itemized spectral evaluation of the theta norm."""

    l2_term: float
    cross_term: complex
    pole_terms: list
    total: float
    imag_residual: float
    bracketing: tuple
    c0: float
    R: float
    n_nodes: int
    m_max: int
    weight_tail: float
    f_params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["cross_term"] = [self.cross_term.real, self.cross_term.imag]
        d["bracketing"] = list(self.bracketing)
        d["pole_terms"] = [[float(s), float(v)] for s, v in self.pole_terms]
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


@functools.lru_cache(maxsize=8)
def _c_on_line(lattice_key, r_bytes: bytes):
    from .lattice import LatticeSpec

    L = LatticeSpec.from_json(lattice_key)
    r = np.frombuffer(r_bytes)
    return np.array([scattering_C(0.5 + 1j * ri, L) for ri in r])


def spectral_theta_norm(f, L, extra_poles: Sequence[tuple] = (), tol: float = 1e-10) -> SpectralNormReport:
    """Theta norm of ``f`` from the spectral identity.

    Parameters
    ----------
    f : TestFunction
    L : LatticeSpec
        Supplies ``c0`` and ``C(s)``.
    extra_poles : sequence of (s_j, c_j)
        Exceptional poles in (1/2, 1) to add to the pole at 1.
    tol : float
        Relative cut for the line-integral truncation.
    """
    c0 = L.c0
    r, w, vh, R = vhat_line(f.v, 0.5, tol)
    A = float(np.sum(w * np.abs(vh) ** 2)) * f.psi_l2sq
    weights = np.asarray(f.weights)
    m_max = weights.size - 1
    # only half the line is needed: the integrand at -r is the conjugate
    half = r >= 0
    rr = np.ascontiguousarray(r[half])
    C = _c_on_line(L.to_json(), rr.tobytes())
    P = pm_table(m_max, 0.5 + 1j * rr, f.mu)
    wsum = weights @ P
    integrand = vh[half] ** 2 * C * wsum
    B = 2.0 * complex(np.sum(w[half] * integrand.real))
    # the imaginary part cancels between r and -r; report the full-line residual
    neg = ~half
    Cn = np.conj(_c_on_line(L.to_json(), np.ascontiguousarray(-r[neg]).tobytes()))
    Pn = np.conj(pm_table(m_max, 0.5 - 1j * r[neg], f.mu))
    full = np.sum(w[half] * integrand) + np.sum(w[neg] * vh[neg] ** 2 * Cn * (weights @ Pn))
    imag_res = abs(full.imag)
    poles = [(1.0, c0)] + [(float(s), float(c)) for s, c in extra_poles]
    pole_terms = []
    for s_j, c_j in poles:
        mel = f.v.mellin(s_j)
        pm = pm_table(m_max, [s_j], f.mu)[:, 0].real
        pole_terms.append((s_j, float(c_j * np.sum(weights * pm) * abs(mel) ** 2)))
    Pi = sum(v for _, v in pole_terms)
    total = c0 * (A + B.real + Pi)
    extra = sum(v for s, v in pole_terms[1:])
    lower = c0 * c0 * f.l1 ** 2 + c0 * extra
    upper = 2 * c0 * f.l2sq + c0 * c0 * f.l1 ** 2 + c0 * extra
    return SpectralNormReport(A, B, pole_terms, float(total), float(imag_res), (lower, upper), c0,
                              float(R), int(r.size), int(m_max), float(f.weight_tail),
                              f.describe())


# ---------------------------------------------------------------------------
# ladder and Casimir identities

@dataclass
class OperatorReport:
    case: str
    s: complex
    m: int
    max_rel_residual: float
    ratio_spread: float | None = None
    kappa: complex | None = None
    casimir_value: complex | None = None
    casimir_spread: float | None = None
    detail: dict = field(default_factory=dict)


def _d4(fn, x, i, h):
    """Fourth-order central difference of ``fn`` along coordinate ``i``.

    ``h`` is a scalar or one step per point.
    """
    h = np.asarray(h, dtype=float)
    e = np.zeros(x.shape)
    e[..., i] = h
    return (-fn(x + 2 * e) + 8 * fn(x + e) - 8 * fn(x - e) + fn(x - 2 * e)) / (12 * h)


def _phi_real(s, m):
    def fn(x):
        z = x[..., 0] + 1j * x[..., 1]
        return z ** (2 * m) / (x[..., 0] ** 2 + x[..., 1] ** 2) ** (s + m)
    return fn


def _phi_complex(s, m):
    def fn(x):
        z1 = x[..., 0] + 1j * x[..., 1]
        z2 = x[..., 2] + 1j * x[..., 3]
        rr = np.abs(z1) ** 2 + np.abs(z2) ** 2
        return (z1 * np.conj(z2)) ** m / rr ** (2 * s + m)
    return fn


def operator_identity_check(s, m: int, case=FactorKind.REAL, n_points: int = 100,
                            rng: np.random.Generator | None = None, h: float = 1e-3) -> OperatorReport:
    """Finite-difference check of the ladder identities.

    Real case: ``a^{+-} phi_{s,m} = -2 (s +- m) phi_{s,m+-1}`` with
    ``a^{+-} = x1 d1 - x2 d2 +- i (x1 d2 + x2 d1)``.

    Complex case: ``a^+ = z1 d/dz2`` (Wirtinger) applied to ``phi_{s,m}``
    divided by ``(2s + m) phi_{s,m+1}`` should be a constant ``kappa_m``; the
    Casimir ``E^2 + 2E`` with ``E = zbar1 d/dzbar1 + zbar2 d/dzbar2`` is
    evaluated as a ratio to ``phi_{s,m}`` and reported with its sign.

    Raises
    ------
    StepSizeUnderflow
        If ``h`` is too small relative to the sample points.
    """
    case = FactorKind.parse(case)
    rng = np.random.default_rng(0) if rng is None else rng
    if h < 1e-6:
        raise StepSizeUnderflow("finite-difference step below 1e-6")
    s = complex(s)
    if case is FactorKind.REAL:
        r = rng.uniform(0.6, 1.6, n_points)
        ang = rng.uniform(0, 2 * math.pi, n_points)
        x = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=-1)
        phi = _phi_real(s, m)
        d1, d2 = _d4(phi, x, 0, h), _d4(phi, x, 1, h)
        x1, x2 = x[:, 0], x[:, 1]
        worst = 0.0
        detail = {}
        for sign in (+1, -1):
            lhs = x1 * d1 - x2 * d2 + sign * 1j * (x1 * d2 + x2 * d1)
            rhs = -2 * (s + sign * m) * _phi_real(s, m + sign)(x)
            scale = np.maximum(np.abs(rhs), np.abs(lhs))
            scale = np.where(scale > 0, scale, 1.0)
            res = float(np.max(np.abs(lhs - rhs) / scale))
            detail["plus" if sign > 0 else "minus"] = res
            worst = max(worst, res)
        return OperatorReport("real", s, m, worst, detail=detail)

    x = rng.normal(size=(n_points, 4))
    x /= np.linalg.norm(x, axis=1)[:, None]
    x *= rng.uniform(0.6, 1.6, n_points)[:, None]
    phi = _phi_complex(s, m)
    z1 = x[:, 0] + 1j * x[:, 1]
    z2 = x[:, 2] + 1j * x[:, 3]
    # phi_{s,m} carries (z1 zbar2)^m, so its derivatives vary on the scale min(|z1|, |z2|)
    h = h * np.minimum(1.0, np.minimum(np.abs(z1), np.abs(z2)))
    grads = [_d4(phi, x, i, h) for i in range(4)]
    dz2 = 0.5 * (grads[2] - 1j * grads[3])
    lhs = z1 * dz2
    target = (2 * s + m) * _phi_complex(s, m + 1)(x)
    ratio = lhs / target
    kappa = complex(np.median(ratio.real) + 1j * np.median(ratio.imag))
    spread = float(np.max(np.abs(ratio - kappa)) / max(abs(kappa), 1e-300))

    def euler(fn):
        def g(y):
            gr = [_d4(fn, y, i, h) for i in range(4)]
            w1 = x1c(y)
            w2 = x2c(y)
            dzb1 = 0.5 * (gr[0] + 1j * gr[1])
            dzb2 = 0.5 * (gr[2] + 1j * gr[3])
            return np.conj(w1) * dzb1 + np.conj(w2) * dzb2
        return g

    def x1c(y):
        return y[..., 0] + 1j * y[..., 1]

    def x2c(y):
        return y[..., 2] + 1j * y[..., 3]

    e1 = euler(phi)
    e2 = euler(e1)
    omega = e2(x) + 2 * e1(x)
    cas = omega / phi(x)
    cval = complex(np.median(cas.real) + 1j * np.median(cas.imag))
    cspread = float(np.max(np.abs(cas - cval)) / max(abs(cval), 1e-300))
    return OperatorReport("complex", s, m, spread, spread, kappa, cval, cspread,
                          detail={"positive_form": 4 * s * (1 - s), "opposite": 4 * s * (s - 1)})
