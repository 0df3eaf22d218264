"""Zeta-type functions, scattering constants and the bump family v.

``zeta`` uses the Borwein acceleration of the alternating (eta) series,
switches to Euler-Maclaurin where ``1 - 2^{1-s}`` is close to zero, and
reflects through the functional equation for Re(s) < 0.4.
"""

from __future__ import annotations

import cmath
import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import loggamma

from .errors import (
    DegenerateSupportWarning,
    InvalidParameter,
    PoleAtOne,
    PoleHit,
    UnsupportedLattice,
)
from .group import FactorKind

__all__ = [
    "zeta",
    "dirichlet_beta",
    "dedekind_zeta_gauss",
    "scattering_C",
    "scattering_residue",
    "ScatteringEvaluator",
    "BumpV",
    "bump_v",
    "vhat",
    "vhat_line",
    "CATALAN",
]

CATALAN = 0.915965594177219015054603514932
_REFLECT_BELOW = 0.4


@functools.lru_cache(maxsize=64)
def _borwein_coeffs(n: int) -> np.ndarray:
    """``(d_k - d_n) / d_n`` for Borwein's algorithm 2."""
    d = np.empty(n + 1)
    acc = 0.0
    term = 1.0 / n
    for i in range(n + 1):
        if i == 0:
            term = 1.0 / n
        else:
            term *= 4.0 * (n + i - 1) * (n - i + 1) / ((2 * i - 1) * (2 * i))
        acc += term
        d[i] = acc
    d *= n
    return (d[:-1] - d[-1]) / d[-1]


_BERNOULLI_2K = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730, 7 / 6, -3617 / 510,
                 43867 / 798, -174611 / 330, 854513 / 138, -236364091 / 2730]


def _zeta_em(s: complex) -> complex:
    """Euler-Maclaurin with N ~ 20 + |Im s| terms and 12 correction terms."""
    N = int(20 + abs(s.imag))
    n = np.arange(1, N, dtype=float)
    head = complex(np.sum(np.exp(-s * np.log(n))))
    Ns = cmath.exp(-s * math.log(N))
    total = head + N * Ns / (s - 1) + 0.5 * Ns
    rising = s
    fact = 2.0
    npow = Ns / N
    for k, b2k in enumerate(_BERNOULLI_2K, start=1):
        total += b2k / fact * rising * npow
        rising *= (s + 2 * k - 1) * (s + 2 * k)
        fact *= (2 * k + 1) * (2 * k + 2)
        npow /= N * N
    return total


def _eta_borwein(s: complex) -> complex:
    n = int(40 + 1.3 * abs(s.imag))
    coeff = _borwein_coeffs(n)
    k = np.arange(n, dtype=float)
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    terms = signs * coeff * np.exp(-s * np.log(k + 1))
    return -complex(np.sum(terms))


def _zeta_right(s: complex) -> complex:
    denom = 1.0 - cmath.exp((1.0 - s) * math.log(2.0))
    if abs(denom) < 0.1:
        return _zeta_em(s)
    return _eta_borwein(s) / denom


def zeta(s) -> complex:
    """Riemann zeta for complex ``s``.

    Parameters
    ----------
    s : complex

    Returns
    -------
    complex

    Raises
    ------
    PoleAtOne
        If ``|s - 1| < 1e-12``.
    """
    s = complex(s)
    if abs(s - 1.0) < 1e-12:
        raise PoleAtOne("zeta has a pole at s = 1")
    if s.real >= _REFLECT_BELOW:
        return _zeta_right(s)
    # zeta(s) = pi^{s-1/2} Gamma((1-s)/2) / Gamma(s/2) zeta(1-s)
    if abs(s) < 1e-7:
        # 1 - s rounds to 1 here; zeta(s) = -1/2 - s log(2 pi) / 2 + O(s^2)
        return -0.5 - 0.5 * s * math.log(2 * math.pi)
    if s.imag == 0 and s.real < 0 and s.real == math.floor(s.real) and int(s.real) % 2 == 0:
        return 0j
    lg = loggamma((1 - s) / 2) - loggamma(s / 2)
    return cmath.exp((s - 0.5) * math.log(math.pi) + complex(lg)) * _zeta_right(1 - s)


def dirichlet_beta(s) -> complex:
    """``L(s, chi_-4) = sum (-1)^k (2k+1)^{-s}`` by Borwein acceleration.

    Reflects through the functional equation for Re(s) < 0.4.
    """
    s = complex(s)
    if s.real < _REFLECT_BELOW:
        # beta(1-s) = (pi/2)^{-s} sin(pi s / 2) Gamma(s) beta(s), solved for beta(s)
        z = 1 - s
        return (cmath.exp(-z * math.log(math.pi / 2)) * cmath.sin(math.pi * z / 2)
                * cmath.exp(complex(loggamma(z))) * dirichlet_beta(z))
    n = int(40 + 1.3 * abs(s.imag))
    coeff = _borwein_coeffs(n)
    k = np.arange(n, dtype=float)
    signs = np.where(k % 2 == 0, 1.0, -1.0)
    return -complex(np.sum(signs * coeff * np.exp(-s * np.log(2 * k + 1))))


def dedekind_zeta_gauss(s) -> complex:
    """``zeta_{Q(i)}(s) = zeta(s) L(s, chi_-4)``."""
    return zeta(s) * dirichlet_beta(s)


def _c_modular(s: complex) -> complex:
    lg = loggamma(s - 0.5) - loggamma(s)
    return math.sqrt(math.pi) * cmath.exp(complex(lg)) * zeta(2 * s - 1) / zeta(2 * s)


def _c_bianchi(s: complex) -> complex:
    return math.pi * dedekind_zeta_gauss(2 * s - 1) / ((2 * s - 1) * dedekind_zeta_gauss(2 * s))


def scattering_C(s, L, allow_unvalidated: bool = False) -> complex:
    """Constant-term coefficient ``C(s)`` in ``phi_s + C(s) phi_{1-s}``.

    Parameters
    ----------
    s : complex
    L : LatticeSpec
    allow_unvalidated : bool
        Evaluate the SL2(Z[i]) closed form even if the coset-sum validation
        has not passed.

    Raises
    ------
    PoleHit
        Within 1e-10 of s = 1 (or s = 1/2 for the Bianchi form).
    UnsupportedLattice
        For SL2(Z[i]) unless validated, and for congruence subgroups.
    """
    from .lattice import LatticeKind

    s = complex(s)
    if abs(s - 1.0) < 1e-10:
        raise PoleHit("C(s) has a pole at s = 1")
    if L.kind is LatticeKind.MODULAR_Z:
        if abs(s - 0.5) < 1e-12:
            return -1.0 + 0j
        return _c_modular(s)
    if L.kind is LatticeKind.BIANCHI_ZI:
        if not allow_unvalidated and not bianchi_validation().passed:
            raise UnsupportedLattice("SL2(Z[i]) scattering form failed validation")
        if abs(s - 0.5) < 1e-12:
            return -1.0 + 0j
        return _c_bianchi(s)
    raise UnsupportedLattice(f"no scattering constant for {L.kind.value}")


def scattering_residue(L, h0: float = 1e-3, levels: int = 4, **kw) -> float:
    """Residue of C at s = 1 by Richardson extrapolation of ``h C(1 + h)``.

    Symmetric differences ``(h C(1+h) - h C(1-h)) / 2`` kill the odd powers.
    """
    table = []
    for j in range(levels):
        h = h0 / 2 ** j
        val = 0.5 * (h * scattering_C(1 + h, L, **kw) - h * scattering_C(1 - h, L, **kw))
        table.append([val.real])
    cur = [row[0] for row in table]
    for p in range(1, levels):
        fac = 4.0 ** p
        cur = [(fac * cur[i + 1] - cur[i]) / (fac - 1) for i in range(len(cur) - 1)]
    return float(cur[0])


@dataclass(frozen=True)
class BianchiValidation:
    """Coset-sum check of the SL2(Z[i]) closed form."""

    s_values: tuple
    fitted: tuple
    closed_form: tuple
    max_rel_residual: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_rel_residual < self.tolerance


@functools.lru_cache(maxsize=None)
def bianchi_validation(tolerance: float = 1e-6) -> BianchiValidation:
    """Compare the closed form with constant terms of truncated coset sums."""
    from .eisenstein import extract_constant_term
    from .lattice import bianchi

    L = bianchi()
    svals = (1.3, 1.6, 2.0)
    fitted, closed = [], []
    for s in svals:
        fitted.append(extract_constant_term(s, L, height=1.5, bound=1e3, grid=4))
        closed.append(_c_bianchi(complex(s)).real)
    rel = max(abs(f - c) / abs(c) for f, c in zip(fitted, closed))
    return BianchiValidation(svals, tuple(fitted), tuple(closed), rel, tolerance)


@dataclass(frozen=True)
class ScatteringEvaluator:
    """``C(s)`` together with its pole list on (1/2, 1]."""

    lattice: object
    extra_poles: tuple = ()

    def __call__(self, s) -> complex:
        return scattering_C(s, self.lattice)

    @property
    def poles(self) -> list:
        return [(1.0, self.lattice.c0)] + list(self.extra_poles)

    @property
    def c0(self) -> float:
        return self.lattice.c0


# ---------------------------------------------------------------------------
# bump family

def _smoothstep(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    out[u >= 1] = 1.0
    mid = (u > 0) & (u < 1)
    um = u[mid]
    a = np.exp(-1.0 / um)
    b = np.exp(-1.0 / (1.0 - um))
    out[mid] = a / (a + b)
    return out


@dataclass(frozen=True)
class BumpV:
    """Smooth ``v`` supported on ``[-length, 0]``.

    Two unit ramps built from ``exp(-1/x)``; ``v = 1`` on
    ``[-length + 1, -1]``.  When ``length < 2`` the ramps are shrunk to
    ``length / 2`` each and ``degenerate`` is set.
    """

    lam: float
    eps: float
    case: FactorKind
    length: float
    ramp: float
    degenerate: bool

    @property
    def support(self) -> tuple:
        return (-self.length, 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return _smoothstep((t + self.length) / self.ramp) * _smoothstep(-t / self.ramp)

    def panels(self, width: float = 0.25) -> np.ndarray:
        """Panel edges aligned with the ramp boundaries."""
        L, w = self.length, self.ramp
        knots = sorted({-L, -L + w, -w, 0.0})
        edges = [knots[0]]
        for a, b in zip(knots[:-1], knots[1:]):
            m = max(1, int(math.ceil((b - a) / width)))
            edges.extend(np.linspace(a, b, m + 1)[1:].tolist())
        return np.asarray(edges)

    def integrate(self, g, nodes: int = 24, width: float = 0.25) -> complex:
        """``int v(t) g(t) dt`` by composite Gauss-Legendre."""
        t, w = self.quadrature(nodes, width)
        return np.sum(w * self(t) * g(t))

    def quadrature(self, nodes: int = 24, width: float = 0.25):
        x, wx = np.polynomial.legendre.leggauss(nodes)
        e = self.panels(width)
        a, b = e[:-1, None], e[1:, None]
        t = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
        w = (0.5 * (b - a) * wx).ravel()
        return t, w

    def l2_weighted(self, sigma: float = 1.0) -> float:
        """``int v(t)^2 e^{-sigma t} dt``."""
        t, w = self.quadrature()
        return float(np.sum(w * self(t) ** 2 * np.exp(-sigma * t)))

    def mellin(self, s) -> complex:
        """``int v(t) e^{-s t} dt`` for complex ``s``."""
        t, w = self.quadrature()
        return complex(np.sum(w * self(t) * np.exp(-complex(s) * t)))


def bump_v(lam: float, eps: float, case=FactorKind.REAL) -> BumpV:
    """The ``v`` factor of the ``f^(lambda)`` family.

    Raises
    ------
    InvalidParameter
        If ``lam < 1`` or ``eps`` is outside (0, 1).

    Warns
    -----
    DegenerateSupportWarning
        When the support is shorter than 2.
    """
    case = FactorKind.parse(case)
    if lam < 1:
        raise InvalidParameter("lambda must be >= 1")
    if not 0 < eps < 1:
        raise InvalidParameter("eps must lie in (0, 1)")
    base = 1.0 if case is FactorKind.REAL else 3.0
    length = (base + eps) * math.log(lam)
    if length <= 0:
        raise InvalidParameter("lambda = 1 gives an empty support")
    if length < 2:
        warnings.warn(f"support length {length:.3f} < 2; using a single centered bump",
                      DegenerateSupportWarning, stacklevel=2)
        return BumpV(lam, eps, case, length, length / 2, True)
    return BumpV(lam, eps, case, length, 1.0, False)


def vhat(v: BumpV, r, sigma: float = 0.5):
    """``(2 pi)^{-1/2} int v(t) e^{-sigma t} e^{-i r t} dt`` for an array of ``r``.

    The panel width is refined with ``|r|`` so every panel sees at most a
    fraction of an oscillation.
    """
    if not 0 <= sigma <= 1.5:
        raise InvalidParameter("sigma must lie in [0, 1.5]")
    r = np.atleast_1d(np.asarray(r, dtype=float))
    rmax = float(np.max(np.abs(r))) if r.size else 0.0
    width = min(0.25, 2.0 / max(rmax, 1e-9))
    t, w = v.quadrature(24, width)
    base = w * v(t) * np.exp(-sigma * t)
    out = np.empty(r.shape, dtype=complex)
    chunk = max(1, 4_000_000 // max(t.size, 1))
    for i in range(0, r.size, chunk):
        rr = r[i:i + chunk]
        out[i:i + chunk] = np.exp(-1j * np.outer(rr, t)) @ base
    return out / math.sqrt(2 * math.pi)


def vhat_line(v: BumpV, sigma: float = 0.5, tol: float = 1e-10, nodes: int = 32):
    """Gauss-Legendre nodes and values of ``vhat(r - i sigma)`` on ``|r| <= R``.

    ``R`` grows until ``|vhat|^2`` on the outer panel falls below ``tol``
    times its peak.  Returns ``(r, weights, values, R)``.
    """
    peak = abs(vhat(v, [0.0], sigma)[0]) ** 2
    R = 8.0
    while R < 4000:
        probe = np.linspace(R - 4.0, R, 33)
        if np.max(np.abs(vhat(v, probe, sigma)) ** 2) < tol * peak:
            break
        R *= 1.5
    x, wx = np.polynomial.legendre.leggauss(nodes)
    npan = int(math.ceil(2 * R / 0.5))
    e = np.linspace(-R, R, npan + 1)
    a, b = e[:-1, None], e[1:, None]
    r = (0.5 * (b - a) * x + 0.5 * (a + b)).ravel()
    w = (0.5 * (b - a) * wx).ravel()
    return r, w, vhat(v, r, sigma), R
