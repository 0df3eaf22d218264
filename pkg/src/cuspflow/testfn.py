"""Factored test functions ``f(a_{eta t} k) = v(t) psi(k)`` on Q\\G.

``t`` is the cusp height coordinate ``t_n = mu * t_iwasawa``; the Q\\G
measure is ``e^{-t} dt dk`` with ``dk`` a probability measure.

Real factor: ``psi`` lives on ``M\\K`` = theta mod pi, with weights ``m`` in Z
and orthonormal basis ``e^{2 i m theta}``.  Complex factor: ``M\\K`` is the
2-sphere through ``k_{theta,alpha,beta} -> (2 theta, alpha - beta)`` and the
weight-``m`` space is spanned by degree-``m`` spherical harmonics.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import InvalidParameter
from .group import FactorKind
from .special import BumpV, bump_v

__all__ = [
    "ConvBump",
    "TestFunction",
    "f_lambda_real",
    "f_lambda_complex",
    "spherical",
    "trig_real",
    "rows_to_tk",
]

_GL = np.polynomial.legendre.leggauss


def _bump01(u):
    """``exp(1 - 1/(1 - u^2))`` on (-1, 1); max 1 at 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


class ConvBump:
    """``psi = (b * b) / (b * b)(0)`` with ``b`` a bump on [-1/2, 1/2].

    Supported on [-1, 1], values in [0, 1], and its Fourier transform
    ``|b_hat|^2 / (b * b)(0)`` is nonnegative.
    """

    def __init__(self, grid: int = 4001):
        x, w = _GL(64)
        edges = np.linspace(-0.5, 0.5, 17)
        a, b = edges[:-1, None], edges[1:, None]
        self._y = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        self._w = (0.5 * (b - a) * w).ravel()
        by = _bump01(2 * self._y)
        self._by = by
        self._norm = float(np.sum(self._w * by * by))
        xs = np.linspace(-1.0, 1.0, grid)
        self._xs = xs
        self._tab = np.array([np.sum(self._w * by * _bump01(2 * (xi - self._y))) for xi in xs])
        self._tab /= self._norm
        from scipy.interpolate import CubicSpline

        self._spline = CubicSpline(xs, self._tab)

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        out = np.zeros_like(x)
        inside = np.abs(x) < 1
        out[inside] = np.clip(self._spline(x[inside]), 0.0, 1.0)
        return out

    def fourier(self, omega):
        """``int psi(x) e^{-i omega x} dx`` (real and >= 0)."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        bh = np.cos(np.outer(omega, self._y)) @ (self._w * self._by)
        return bh * bh / self._norm

    @functools.cached_property
    def l2sq(self) -> float:
        """``int psi(x)^2 dx`` by Parseval on the exact transform."""
        om = np.linspace(0, 400, 40001)
        vals = self.fourier(om) ** 2
        return float(2 * np.trapezoid(vals, om) / (2 * math.pi))


@functools.lru_cache(maxsize=1)
def _conv_bump() -> ConvBump:
    return ConvBump()


def rows_to_tk(w0, w1, case: FactorKind):
    """Cusp coordinate ``t_n`` and compact part from bottom rows ``(c, d) g``."""
    if case is FactorKind.REAL:
        t = -np.log(w0 * w0 + w1 * w1)
        theta = np.arctan2(-w0, w1)
        return t, theta
    a0, a1 = np.abs(w0), np.abs(w1)
    t = -2.0 * np.log(a0 * a0 + a1 * a1)
    theta = np.arctan2(a0, a1)
    beta = np.where(a0 > 0, -np.angle(-w0), 0.0)
    alpha = np.where(a1 > 0, -np.angle(w1), 0.0)
    return t, (theta, alpha, beta)


def _wrap_pi(theta):
    """Representative of theta mod pi in [-pi/2, pi/2)."""
    return np.mod(theta + math.pi / 2, math.pi) - math.pi / 2


def _wrap_2pi(phi):
    return np.mod(phi + math.pi, 2 * math.pi) - math.pi


@dataclass(frozen=True)
class TestFunction:
    """``f = v(t) psi(k)``.

    Attributes
    ----------
    v : BumpV
    case : FactorKind
    psi : callable
        Real case: function of theta mod pi.  Complex case: function of
        ``(theta, alpha - beta)``.
    weights : ndarray
        ``||psi_m||^2`` for ``m = 0, 1, ...`` (real case sums m and -m).
    psi_l2sq : float
        ``||psi||^2`` under dk.
    psi_mean : float
        ``int psi dk``.
    positive : bool
    weight_tail : float
        ``psi_l2sq - sum(weights)``, the mass beyond the last weight.
    k_box : tuple, optional
        Box in the compact coordinates containing the support of psi:
        ``(theta_lo, theta_hi)`` (real) or ``(theta_lo, theta_hi, phi_lo, phi_hi)``
        (complex).  ``None`` means all of ``M\\K``.
    cone : float
        Bound on ``|w0| / ||w||`` over the support, used to prune coset scans;
        values >= 1 disable pruning.
    """

    v: BumpV
    case: FactorKind
    psi: Callable = field(repr=False)
    weights: np.ndarray = field(repr=False)
    psi_l2sq: float
    psi_mean: float
    positive: bool = True
    weight_tail: float = 0.0
    label: str = ""
    params: dict = field(default_factory=dict)
    k_box: tuple | None = None
    cone: float = 2.0

    @property
    def support(self) -> tuple:
        return self.v.support

    @property
    def mu(self) -> int:
        return self.case.mu

    def eval_tk(self, t, k):
        t = np.asarray(t, dtype=float)
        vt = self.v(t)
        if self.case is FactorKind.REAL:
            return vt * self.psi(_wrap_pi(np.asarray(k)))
        theta, alpha, beta = k
        return vt * self.psi(np.asarray(theta), _wrap_2pi(np.asarray(alpha) - np.asarray(beta)))

    def eval_rows(self, w0, w1):
        """``f(gamma g)`` from the bottom row ``(w0, w1) = (c, d) g``."""
        t, k = rows_to_tk(np.asarray(w0), np.asarray(w1), self.case)
        return self.eval_tk(t, k)

    @functools.cached_property
    def v_mellin1(self) -> float:
        """``int v(t) e^{-t} dt``."""
        return float(self.v.mellin(1.0).real)

    @property
    def l1(self) -> float:
        """``int_{Q\\G} f`` (equal to the L1 norm when f >= 0)."""
        return self.v_mellin1 * self.psi_mean

    @property
    def l2sq(self) -> float:
        return self.v.l2_weighted(1.0) * self.psi_l2sq

    def scaled(self, c: float) -> "TestFunction":
        """``c * f``."""
        psi = self.psi
        return TestFunction(self.v, self.case, lambda *a: c * psi(*a), self.weights * c * c,
                            self.psi_l2sq * c * c, self.psi_mean * c, self.positive and c >= 0,
                            self.weight_tail * c * c, f"{c}*{self.label}", dict(self.params),
                            self.k_box, self.cone)

    def describe(self) -> dict:
        return {"label": self.label, "case": self.case.name.lower(), "lambda": self.v.lam,
                "eps": self.v.eps, "support": list(self.support), **self.params}


# ---------------------------------------------------------------------------
# real case

def _real_weights_from_coeffs(coef_fn, m_max: int, l2sq: float):
    m = np.arange(0, m_max + 1)
    c = coef_fn(m)
    cneg = coef_fn(-m)
    w = np.abs(c) ** 2 + np.abs(cneg) ** 2
    w[0] = abs(c[0]) ** 2
    return w, max(l2sq - float(np.sum(w)), 0.0)


def f_lambda_real(lam: float, eps: float, tail_tol: float = 1e-6) -> TestFunction:
    """``v_lambda(t) psi(lambda theta)`` with ``psi`` the autoconvolved bump.

    Requires ``lambda > 2 / pi`` so the support of ``psi(lambda .)`` fits in
    one period of theta mod pi.
    """
    if lam * math.pi / 2 <= 1:
        raise InvalidParameter("lambda too small for psi(lambda theta) to live on M\\K")
    v = bump_v(lam, eps, FactorKind.REAL)
    cb = _conv_bump()

    def psi(theta):
        return cb(lam * np.asarray(theta))

    # c_m = (1/pi) int psi(lam th) e^{-2 i m th} dth = psi_hat(2m/lam) / (pi lam)
    def coef(m):
        return cb.fourier(2.0 * np.asarray(m, dtype=float) / lam) / (math.pi * lam)

    l2sq = cb.l2sq / (math.pi * lam)
    m_max = 16
    while True:
        w, tail = _real_weights_from_coeffs(coef, m_max, l2sq)
        if tail <= tail_tol * float(np.sum(w)) or m_max > 200_000:
            break
        m_max *= 2
    mean = float(coef(np.array([0]))[0])
    half = min(1.0 / lam, math.pi / 2)
    return TestFunction(v, FactorKind.REAL, psi, w, l2sq, mean, True, tail,
                        f"f_lambda_real({lam},{eps})", {"lam": lam, "eps": eps, "m_max": m_max},
                        (-half, half), math.sin(half) if half < math.pi / 2 else 2.0)


def spherical(v: BumpV) -> TestFunction:
    """``psi = 1``: weight zero only."""
    if v.case is FactorKind.REAL:
        def psi(theta):
            return np.ones_like(np.asarray(theta, dtype=float))
    else:
        def psi(theta, phi):
            return np.ones_like(np.asarray(theta, dtype=float))
    return TestFunction(v, v.case, psi, np.array([1.0]), 1.0, 1.0, True, 0.0, "spherical")


def trig_real(v: BumpV, coeffs: dict) -> TestFunction:
    """``psi(theta) = sum_m a_m e^{2 i m theta}`` with ``a_{-m} = conj(a_m)``.

    ``coeffs`` maps ``m >= 0`` to ``a_m``; the result is real.
    """
    coeffs = {int(m): complex(a) for m, a in coeffs.items()}
    if any(m < 0 for m in coeffs):
        raise InvalidParameter("give coefficients for m >= 0 only")
    m_max = max(coeffs) if coeffs else 0

    def psi(theta):
        theta = np.asarray(theta, dtype=float)
        out = np.full(theta.shape, coeffs.get(0, 0).real)
        for m, a in coeffs.items():
            if m > 0:
                out = out + 2 * (a * np.exp(2j * m * theta)).real
        return out

    w = np.zeros(m_max + 1)
    for m, a in coeffs.items():
        w[m] = abs(a) ** 2 * (1 if m == 0 else 2)
    a0 = coeffs.get(0, 0).real
    positive = a0 >= 2 * sum(abs(a) for m, a in coeffs.items() if m > 0)
    return TestFunction(v, FactorKind.REAL, psi, w, float(np.sum(w)), a0, positive, 0.0,
                        "trig_real", {"coeffs": {m: [a.real, a.imag] for m, a in coeffs.items()}})


# ---------------------------------------------------------------------------
# complex case

X1_RANGE = (0.25, 1.25)


def psi2_base(x1, x2):
    """Product bump on ``[0.25, 1.25] x [-1, 1]``; values in [0, 1]."""
    lo, hi = X1_RANGE
    mid, half = 0.5 * (lo + hi), 0.5 * (hi - lo)
    return _bump01((np.asarray(x1) - mid) / half) * _bump01(np.asarray(x2))


def f_lambda_complex(lam: float, eps: float, m_max: int | None = None,
                     tail_tol: float = 1e-6, with_weights: bool = True) -> TestFunction:
    """``v_lambda(t) psi(lambda sin theta, lambda (alpha - beta))``.

    ``psi`` vanishes near ``sin theta = 0`` so the function is smooth on the
    sphere ``M\\K``.

    Parameters
    ----------
    with_weights : bool
        Compute the projection norms ``||phi_m||^2``.  They cost far more
        than everything else and the direct norm does not use them; when
        skipped, ``weights`` is empty and ``weight_tail`` equals ``psi_l2sq``.
    """
    if lam < 2:
        raise InvalidParameter("complex family needs lambda >= 2")
    from .spectral import su2_projection_norms, su2_moments

    v = bump_v(lam, eps, FactorKind.COMPLEX)

    def psi(theta, phi):
        return psi2_base(lam * np.sin(theta), lam * phi)

    th_box = _theta_support(lam)
    ph_box = (-1.0 / lam, 1.0 / lam)
    if with_weights:
        proj = su2_projection_norms(psi, m_max=m_max, theta_support=th_box,
                                    phi_support=ph_box, tail_tol=tail_tol)
        weights, total, mean, tail = proj.norms, proj.total, proj.mean, proj.tail
    else:
        total, mean = su2_moments(psi, th_box, ph_box)
        weights, tail = np.zeros(0), total
    return TestFunction(v, FactorKind.COMPLEX, psi, weights, total, mean, True, tail,
                        f"f_lambda_complex({lam},{eps})",
                        {"lam": lam, "eps": eps, "m_max": int(weights.size - 1)},
                        (*th_box, *ph_box), X1_RANGE[1] / lam)


def _theta_support(lam: float) -> tuple:
    lo, hi = X1_RANGE
    return (math.asin(lo / lam), math.asin(min(hi / lam, 1.0)))
