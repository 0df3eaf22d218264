"""Numerical model of G = SL2(R)^r1 x SL2(C)^r2.

Coordinates follow g = n_x a_t k per factor with

    n_x = [[1, x], [0, 1]],   a_t = diag(e^{t/2}, e^{-t/2}),
    k_theta = [[cos, sin], [-sin, cos]]                      (real factor)
    k_{theta,alpha,beta} = [[cos e^{i alpha},  sin e^{i beta}],
                            [-sin e^{-i beta}, cos e^{-i alpha}]]  (complex factor)

Haar measure is dg = exp(-sum_j mu_j t_j) dt dx dk with dk a probability
measure on K.  Batch helpers operate on arrays of shape (N, 2, 2).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import InvalidParameter, SingularD

DET_TOL = 1e-12
TWO_PI = 2.0 * math.pi


class FactorKind(enum.Enum):
    REAL = 1
    COMPLEX = 2

    @property
    def mu(self) -> int:
        return self.value

    @property
    def dtype(self):
        return np.float64 if self is FactorKind.REAL else np.complex128

    @classmethod
    def parse(cls, value) -> "FactorKind":
        if isinstance(value, cls):
            return value
        key = str(value).strip().lower()
        if key in ("real", "r", "1"):
            return cls.REAL
        if key in ("complex", "c", "2"):
            return cls.COMPLEX
        raise InvalidParameter(f"unknown factor kind {value!r}")


def _as_kinds(kinds) -> tuple[FactorKind, ...]:
    if isinstance(kinds, (FactorKind, str)):
        kinds = (kinds,)
    return tuple(FactorKind.parse(k) for k in kinds)


@dataclass(frozen=True)
class GroupPoint:
    """Element of G as one 2x2 matrix per factor."""

    factors: tuple
    kinds: tuple

    def __post_init__(self):
        kinds = _as_kinds(self.kinds)
        if len(kinds) != len(self.factors) or not kinds:
            raise InvalidParameter("need one kind per factor and at least one factor")
        mats = []
        for kind, m in zip(kinds, self.factors):
            m = np.array(m, dtype=kind.dtype)
            if m.shape != (2, 2):
                raise InvalidParameter(f"factor has shape {m.shape}, expected (2, 2)")
            det = m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            if abs(det) == 0:
                raise InvalidParameter("singular factor")
            if abs(det - 1) > DET_TOL:
                m = m / np.sqrt(det)
            m.setflags(write=False)
            mats.append(m)
        object.__setattr__(self, "factors", tuple(mats))
        object.__setattr__(self, "kinds", kinds)

    @classmethod
    def single(cls, matrix, kind="real") -> "GroupPoint":
        return cls((matrix,), (kind,))

    @classmethod
    def identity(cls, kinds) -> "GroupPoint":
        kinds = _as_kinds(kinds)
        return cls(tuple(np.eye(2) for _ in kinds), kinds)

    @property
    def n(self) -> int:
        return len(self.factors)

    @property
    def mu(self) -> np.ndarray:
        return np.array([k.mu for k in self.kinds])

    def __matmul__(self, other: "GroupPoint") -> "GroupPoint":
        if self.kinds != other.kinds:
            raise InvalidParameter("factor kinds differ")
        return GroupPoint(tuple(a @ b for a, b in zip(self.factors, other.factors)), self.kinds)

    def inverse(self) -> "GroupPoint":
        inv = []
        for m in self.factors:
            inv.append(np.array([[m[1, 1], -m[0, 1]], [-m[1, 0], m[0, 0]]]))
        return GroupPoint(tuple(inv), self.kinds)

    def distance_inf(self, other: "GroupPoint") -> float:
        return max(float(np.max(np.abs(a - b))) for a, b in zip(self.factors, other.factors))


@dataclass(frozen=True)
class IwasawaCoords:
    """Per-factor (x, t, k) with k = theta (real) or (theta, alpha, beta) (complex)."""

    x: tuple
    t: tuple
    k: tuple
    kinds: tuple

    @property
    def mu(self) -> np.ndarray:
        return np.array([FactorKind.parse(k).mu for k in self.kinds])


@dataclass(frozen=True)
class CuspCoords:
    x: tuple
    tvec: np.ndarray
    tn: float
    k: tuple
    density: float


@dataclass(frozen=True)
class FlowDirection:
    """Direction y of the unipotent flow u_s = n^-_{s y}, y in [0,1]^n with max 1."""

    y: tuple

    def __post_init__(self):
        y = tuple(float(v) for v in self.y)
        if not y:
            raise InvalidParameter("FlowDirection needs at least one coordinate")
        if any(v < 0 or v > 1 for v in y) or not math.isclose(max(y), 1.0):
            raise InvalidParameter(f"FlowDirection invariant violated: y={y} must lie in [0,1]^n with max 1")
        object.__setattr__(self, "y", y)

    @classmethod
    def default(cls, n: int = 1) -> "FlowDirection":
        return cls((1.0,) * n)


# ---------------------------------------------------------------------------
# elementary matrices

def n_mat(x, kind=FactorKind.REAL):
    return np.array([[1, x], [0, 1]], dtype=FactorKind.parse(kind).dtype)


def nminus_mat(x, kind=FactorKind.REAL):
    return np.array([[1, 0], [x, 1]], dtype=FactorKind.parse(kind).dtype)


def a_mat(t, kind=FactorKind.REAL):
    return np.array([[math.exp(t / 2), 0], [0, math.exp(-t / 2)]], dtype=FactorKind.parse(kind).dtype)


def k_real(theta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, s], [-s, c]])


def k_complex(theta, alpha, beta):
    c, s = math.cos(theta), math.sin(theta)
    return np.array(
        [[c * np.exp(1j * alpha), s * np.exp(1j * beta)],
         [-s * np.exp(-1j * beta), c * np.exp(-1j * alpha)]]
    )


# ---------------------------------------------------------------------------
# batch kernels on (N, 2, 2) arrays

def iwasawa_batch(mats: np.ndarray, kind) -> tuple:
    """Vectorized decomposition.

    Returns ``(x, t, k)`` where ``k`` is ``theta`` for real matrices and a
    ``(theta, alpha, beta)`` tuple of arrays for complex ones.
    """
    kind = FactorKind.parse(kind)
    mats = np.asarray(mats)
    a, b = mats[..., 0, 0], mats[..., 0, 1]
    c, d = mats[..., 1, 0], mats[..., 1, 1]
    if kind is FactorKind.REAL:
        rho2 = c * c + d * d
        t = -np.log(rho2)
        theta = np.mod(np.arctan2(-c, d), TWO_PI)
        # h = g k^{-1}; its (0,1) entry over its (1,1) entry is x
        ct, st = np.cos(theta), np.sin(theta)
        h01 = -a * st + b * ct
        h11 = -c * st + d * ct
        return h01 / h11, t, theta
    ac, ad = np.abs(c), np.abs(d)
    rho2 = ac * ac + ad * ad
    t = -np.log(rho2)
    theta = np.arctan2(ac, ad)
    beta = np.where(ac > 0, np.mod(-np.angle(-c), TWO_PI), 0.0)
    alpha = np.where(ad > 0, np.mod(-np.angle(d), TWO_PI), 0.0)
    k00 = np.cos(theta) * np.exp(1j * alpha)
    k01 = np.sin(theta) * np.exp(1j * beta)
    # k^{-1} = k^H: columns (conj k00, conj k01), (-k01, k00)
    h01 = -a * k01 + b * k00
    h11 = -c * k01 + d * k00
    return h01 / h11, t, (theta, alpha, beta)


def compose_batch(x, t, k, kind) -> np.ndarray:
    """Inverse of :func:`iwasawa_batch`."""
    kind = FactorKind.parse(kind)
    x = np.asarray(x)
    t = np.asarray(t, dtype=float)
    shape = np.broadcast(x, t).shape
    ep, em = np.exp(t / 2), np.exp(-t / 2)
    if kind is FactorKind.REAL:
        theta = np.asarray(k, dtype=float)
        k00, k01 = np.cos(theta), np.sin(theta)
        k10, k11 = -k01, k00
        out = np.empty(shape + (2, 2))
    else:
        theta, alpha, beta = (np.asarray(v, dtype=float) for v in k)
        k00 = np.cos(theta) * np.exp(1j * alpha)
        k01 = np.sin(theta) * np.exp(1j * beta)
        k10, k11 = -np.conj(k01), np.conj(k00)
        out = np.empty(shape + (2, 2), dtype=complex)
    # n_x a_t = [[ep, x em], [0, em]]
    out[..., 0, 0] = ep * k00 + x * em * k10
    out[..., 0, 1] = ep * k01 + x * em * k11
    out[..., 1, 0] = em * k10
    out[..., 1, 1] = em * k11
    return out


def random_sl2(rng: np.random.Generator, size: int, kind, scale: float = 1.0) -> np.ndarray:
    """Random unit-determinant matrices from Gaussian entries, renormalized."""
    kind = FactorKind.parse(kind)
    m = rng.normal(scale=scale, size=(size, 2, 2))
    if kind is FactorKind.COMPLEX:
        m = m + 1j * rng.normal(scale=scale, size=(size, 2, 2))
    det = m[:, 0, 0] * m[:, 1, 1] - m[:, 0, 1] * m[:, 1, 0]
    if kind is FactorKind.REAL:
        flip = det < 0
        m[flip, :, 0] *= -1
        det = np.abs(det)
        return m / np.sqrt(det)[:, None, None]
    return m / np.sqrt(det)[:, None, None]


def renormalize_det(mats: np.ndarray) -> np.ndarray:
    det = mats[..., 0, 0] * mats[..., 1, 1] - mats[..., 0, 1] * mats[..., 1, 0]
    return mats / np.sqrt(det)[..., None, None]


# ---------------------------------------------------------------------------
# single-point API

def iwasawa_decompose(g: GroupPoint) -> IwasawaCoords:
    xs, ts, ks = [], [], []
    for kind, m in zip(g.kinds, g.factors):
        x, t, k = iwasawa_batch(m[None], kind)
        xs.append(x[0].item())
        ts.append(float(t[0]))
        if kind is FactorKind.REAL:
            ks.append(float(k[0]))
        else:
            ks.append(tuple(float(v[0]) for v in k))
    return IwasawaCoords(tuple(xs), tuple(ts), tuple(ks), g.kinds)


def compose(c: IwasawaCoords) -> GroupPoint:
    mats = []
    for kind, x, t, k in zip(_as_kinds(c.kinds), c.x, c.t, c.k):
        if kind is FactorKind.REAL:
            mats.append(compose_batch(np.array([x]), np.array([t]), np.array([k]), kind)[0])
        else:
            kk = tuple(np.array([v]) for v in k)
            mats.append(compose_batch(np.array([x]), np.array([t]), kk, kind)[0])
    return GroupPoint(tuple(mats), c.kinds)


def unipotent(s: float, y: FlowDirection | Sequence[float], kinds=None) -> GroupPoint:
    """u_s = n^-_{s y}: lower-triangular unipotent per factor."""
    if not isinstance(y, FlowDirection):
        y = FlowDirection(tuple(y))
    kinds = _as_kinds(kinds) if kinds is not None else (FactorKind.REAL,) * len(y.y)
    if len(kinds) != len(y.y):
        raise InvalidParameter("flow direction length differs from number of factors")
    return GroupPoint(tuple(nminus_mat(s * yj, k) for yj, k in zip(y.y, kinds)), kinds)


def haar_density(c: IwasawaCoords) -> float:
    """exp(-sum_j mu_j t_j), the density of dg against dt dx dk."""
    return math.exp(-float(np.dot(c.mu, np.asarray(c.t, dtype=float))))


def dk_density_so2(theta):
    """Probability density of dk_theta against dtheta on [0, 2 pi)."""
    return np.full_like(np.asarray(theta, dtype=float), 1.0 / TWO_PI)


def dk_density_su2(theta, alpha=None, beta=None):
    """Probability density of Haar measure on SU(2) in the chart
    theta in [0, pi/2], alpha, beta in [0, 2 pi): |sin 2 theta| / (4 pi^2).

    On the 4-fold chart theta in [0, 2 pi) the same measure reads
    |sin 2 theta| / (16 pi^2).
    """
    return np.abs(np.sin(2 * np.asarray(theta, dtype=float))) / (4 * math.pi ** 2)


def eta_vector(mu) -> np.ndarray:
    mu = np.asarray(mu, dtype=float)
    return 1.0 / (len(mu) * mu)


def cusp_coords(g: GroupPoint, D=None, R: float | None = None) -> CuspCoords:
    """Coordinates g = n_x a_{D tvec} k at the cusp.

    ``D`` defaults to the 1x1 matrix (1/mu) when n = 1.  Its last column must
    be eta = (1/n)(1/mu_1, ..., 1/mu_n); ``R`` defaults to det D.
    """
    iw = iwasawa_decompose(g)
    mu = iw.mu
    n = len(mu)
    eta = eta_vector(mu)
    if D is None:
        if n != 1:
            raise InvalidParameter("D must be supplied when n >= 2")
        D = eta.reshape(1, 1)
    D = np.asarray(D, dtype=float).reshape(n, n)
    det = float(np.linalg.det(D))
    if abs(det) < 1e-14:
        raise SingularD("det(D) = 0")
    if not np.allclose(D[:, -1], eta, atol=1e-12):
        raise InvalidParameter("last column of D must be eta = (1/n)(1/mu_j)")
    if n > 1 and not np.allclose(mu @ D[:, :-1], 0.0, atol=1e-10):
        raise InvalidParameter("unit-log columns of D must satisfy sum_j mu_j v_j = 0")
    ttil = np.asarray(iw.t, dtype=float)
    tvec = np.linalg.solve(D, ttil)
    reg = abs(det) if R is None else float(R)
    tn = float(tvec[-1])
    return CuspCoords(iw.x, tvec, tn, iw.k, reg * math.exp(-tn))
