"""Concrete one-cusp lattices SL2(Z), SL2(Z[i]) and Gamma_0(N).

Everything is projective: coset representatives for Gamma_inf \\ Gamma are
coprime bottom rows (c, d) taken modulo the unit group of the ring, and
heights are read off the bottom row through ``e^{-t} = |c|^2 + |d|^2``.
"""

from __future__ import annotations

import enum
import functools
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Iterator

import numpy as np

from . import kernels
from .errors import InvalidParameter
from .group import FactorKind, GroupPoint, compose_batch

__all__ = [
    "LatticeKind",
    "LatticeSpec",
    "ReducedPoint",
    "CosetRep",
    "modular",
    "bianchi",
    "gamma0",
    "reduce",
    "reduce_batch",
    "delta",
    "delta_batch",
    "coset_rows",
    "enumerate_cosets",
    "subgroup_cosets",
    "haar_sample",
    "bianchi_covolume",
]


class LatticeKind(str, enum.Enum):
    MODULAR_Z = "ModularZ"
    BIANCHI_ZI = "BianchiZi"
    CONGRUENCE_SUB = "CongruenceSub"


@functools.lru_cache(maxsize=None)
def bianchi_covolume() -> float:
    """Volume of the standard SL2(Z[i]) domain under dx dh / h^3.

    The domain is the unit square in x (translations only) above the unit
    hemisphere; the part with h >= 1 contributes 1/2, the rest is
    ``int |x|^2 / (2 (1 - |x|^2)) dx`` over the square.
    """
    from scipy.integrate import dblquad

    bottom, _ = dblquad(lambda y, x: (x * x + y * y) / (2.0 * (1.0 - x * x - y * y)),
                        -0.5, 0.5, -0.5, 0.5, epsabs=1e-13, epsrel=1e-13)
    return 0.5 + bottom


def _gamma0_index(level: int) -> int:
    idx = level
    n, p = level, 2
    while p * p <= n:
        if n % p == 0:
            idx = idx // p * (p + 1)
            while n % p == 0:
                n //= p
        p += 1
    if n > 1:
        idx = idx // n * (n + 1)
    return idx


@dataclass(frozen=True)
class LatticeSpec:
    """Numerical data of a one-cusp lattice.

    Attributes
    ----------
    kind : LatticeKind
    level : int
        Level N of Gamma_0(N); 1 for the full groups.
    factor : FactorKind
    regulator : float
        ``det D`` with ``D = (1/mu)`` in rank one.
    omega : float
        Measure of the unipotent quotient, ``2^{n-1} R |F_O|``.
    covolume : float
        ``v_Gamma`` under ``dg = e^{-mu t} dt dx dk``.
    index : int
        ``[Gamma_full : Gamma]``.
    cusp_index : int
        ``[Gamma_full,inf : Gamma_inf]``.
    """

    kind: LatticeKind
    level: int
    factor: FactorKind
    regulator: float
    omega: float
    covolume: float
    index: int = 1
    cusp_index: int = 1
    seed_provenance: dict = field(default_factory=dict, compare=False)

    @property
    def mu(self) -> int:
        return self.factor.mu

    @property
    def c0(self) -> float:
        return self.omega / self.covolume

    @property
    def is_complex(self) -> bool:
        return self.factor is FactorKind.COMPLEX

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["factor"] = self.factor.name.lower()
        d["c0"] = self.c0
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "LatticeSpec":
        kind = LatticeKind(d["kind"])
        if kind is LatticeKind.MODULAR_Z:
            base = modular()
        elif kind is LatticeKind.BIANCHI_ZI:
            base = bianchi()
        else:
            base = gamma0(int(d["level"]))
        return cls(**{**asdict(base), "seed_provenance": dict(d.get("seed_provenance", {}))})

    @classmethod
    def from_json(cls, text: str) -> "LatticeSpec":
        return cls.from_dict(json.loads(text))

    @classmethod
    def parse(cls, name: str) -> "LatticeSpec":
        """Accepts ``sl2z``, ``sl2zi`` or ``gamma0:N``."""
        key = name.strip().lower()
        if key in ("sl2z", "modularz", "modular"):
            return modular()
        if key in ("sl2zi", "sl2z[i]", "bianchizi", "bianchi"):
            return bianchi()
        if key.startswith("gamma0"):
            _, _, lvl = key.partition(":")
            try:
                return gamma0(int(lvl))
            except ValueError:
                raise InvalidParameter(f"bad congruence level in {name!r}") from None
        raise InvalidParameter(f"unknown lattice {name!r}")


def modular() -> LatticeSpec:
    return LatticeSpec(LatticeKind.MODULAR_Z, 1, FactorKind.REAL, 1.0, 1.0, math.pi / 3)


def bianchi() -> LatticeSpec:
    # R = 1/mu; the translation square has area 1
    return LatticeSpec(LatticeKind.BIANCHI_ZI, 1, FactorKind.COMPLEX, 0.5, 0.5,
                       bianchi_covolume())


def gamma0(level: int) -> LatticeSpec:
    if level < 1:
        raise InvalidParameter("congruence level must be >= 1")
    idx = _gamma0_index(level)
    return LatticeSpec(LatticeKind.CONGRUENCE_SUB, level, FactorKind.REAL, 1.0, 1.0,
                       idx * math.pi / 3, index=idx, cusp_index=1)


# ---------------------------------------------------------------------------
# reduction and Delta

@dataclass(frozen=True)
class ReducedPoint:
    rep: GroupPoint
    height: float
    word_length: int


def _check_kind(mats, L: LatticeSpec):
    if np.iscomplexobj(mats) and not L.is_complex:
        raise InvalidParameter("complex matrix given for a real lattice")


def reduce_batch(mats: np.ndarray, L: LatticeSpec):
    """Vectorized reduction. Returns ``(reps, log_height, moves)``."""
    mats = np.asarray(mats)
    _check_kind(mats, L)
    return kernels.reduce_batch(mats, L.factor.value)


def reduce(g: GroupPoint, L: LatticeSpec) -> ReducedPoint:
    """Move ``g`` into the standard fundamental domain of the full group.

    For Gamma_0(N) the full-group domain is used; Delta only depends on the
    cusp of SL2(Z).
    """
    if g.n != 1 or g.kinds[0] is not L.factor:
        raise InvalidParameter("reduction needs a single factor matching the lattice")
    reps, logh, moves = reduce_batch(g.factors[0][None], L)
    return ReducedPoint(GroupPoint((reps[0],), g.kinds), float(math.exp(logh[0])),
                        int(moves[0]))


def delta_batch(mats: np.ndarray, L: LatticeSpec) -> np.ndarray:
    """``max(0, mu log height)`` for a stack of matrices."""
    _, logh, _ = reduce_batch(mats, L)
    return np.maximum(0.0, L.mu * logh)


def delta(g: GroupPoint, L: LatticeSpec) -> float:
    return max(0.0, L.mu * math.log(reduce(g, L).height))


# ---------------------------------------------------------------------------
# cosets

def _ext_gcd_int(a: int, b: int):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


def _gauss_round(z: complex) -> complex:
    return complex(math.floor(z.real + 0.5), math.floor(z.imag + 0.5))


def _ext_gcd_gauss(a: complex, b: complex):
    x0, x1, y0, y1 = 1 + 0j, 0j, 0j, 1 + 0j
    while b != 0:
        q = _gauss_round(a / b)
        a, b = b, a - q * b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    return a, x0, y0


@dataclass(frozen=True)
class CosetRep:
    """A Gamma_inf coset, stored as its canonical bottom row."""

    bottom_row: tuple
    complex_: bool = False

    @property
    def completed_matrix(self) -> np.ndarray:
        """Some gamma in the full group with this bottom row."""
        c, d = self.bottom_row
        if not self.complex_:
            g, x, y = _ext_gcd_int(int(c), int(d))
            # x c + y d = g = +-1, so [[y g, -x g], [c, d]] has det g^2 = 1
            return np.array([[y * g, -x * g], [c, d]], dtype=float)
        g, x, y = _ext_gcd_gauss(complex(c), complex(d))
        m = np.array([[y, -x], [c, d]], dtype=complex)
        det = m[0, 0] * d - m[0, 1] * c
        m[0] /= det
        return np.round(m.real) + 1j * np.round(m.imag)


def coset_rows(mats: np.ndarray, L: LatticeSpec, lo: float, hi: float):
    """Array form of the enumerator: ``(idx, c, d, w0, w1)`` with ``(w0, w1) = (c, d) g``.

    Only rows with ``lo <= ||(c, d) g||^2 <= hi`` are returned.  Gamma_0(N)
    adds the condition ``c = 0 mod N``.
    """
    mats = np.asarray(mats)
    if mats.ndim == 2:
        mats = mats[None]
    _check_kind(mats, L)
    return kernels.enumerate_pairs(mats, lo, hi, L.factor.value, L.level)


def enumerate_cosets(g: GroupPoint, L: LatticeSpec, norm_bound: float) -> Iterator[CosetRep]:
    """Yield every coset with ``||(c, d) g||^2 <= norm_bound`` exactly once."""
    if norm_bound < 1:
        raise InvalidParameter("norm_bound must be >= 1")
    _, c, d, _, _ = coset_rows(g.factors[0], L, 0.0, norm_bound)
    for ci, di in zip(c.tolist(), d.tolist()):
        yield CosetRep((ci, di), L.is_complex)


def subgroup_cosets(g: GroupPoint, L: LatticeSpec, norm_bound: float) -> Iterator[CosetRep]:
    if L.kind is not LatticeKind.CONGRUENCE_SUB:
        raise InvalidParameter("subgroup_cosets needs a CongruenceSub lattice")
    return enumerate_cosets(g, L, norm_bound)


# ---------------------------------------------------------------------------
# Haar sampling of Gamma \ G

def _sample_su2(rng: np.random.Generator, n: int):
    q = rng.normal(size=(n, 4))
    q /= np.linalg.norm(q, axis=1)[:, None]
    k00 = q[:, 0] + 1j * q[:, 1]
    k01 = q[:, 2] + 1j * q[:, 3]
    theta = np.arctan2(np.abs(k01), np.abs(k00))
    alpha = np.mod(np.angle(k00), 2 * math.pi)
    beta = np.mod(np.angle(k01), 2 * math.pi)
    return theta, alpha, beta


def _sample_bottom(rng, n, draw_x, lo, hi, power):
    """Rejection sampler for the part of the domain below height 1.

    Heights come from the density ``h^{-power}`` on ``[lo, 1]`` by inverse CDF;
    points under the unit sphere are rejected.
    """
    xs, hs = [np.empty(0, dtype=np.asarray(draw_x(0)).dtype)], [np.empty(0)]
    need = n
    a, b = lo ** (1 - power), hi ** (1 - power)
    while need > 0:
        m = int(need * 1.6) + 16
        x = draw_x(m)
        u = rng.random(m)
        h = (a + u * (b - a)) ** (1.0 / (1 - power))
        ok = np.abs(x) ** 2 + h * h >= 1.0
        xs.append(x[ok][:need])
        hs.append(h[ok][:need])
        need -= int(min(ok.sum(), need))
    return np.concatenate(xs), np.concatenate(hs)


def haar_sample(L: LatticeSpec, rng: np.random.Generator, size: int = 1):
    """Draw ``size`` points of Gamma \\ G from the Haar probability measure.

    Returns an array of shape ``(size, 2, 2)``.  The cusp region above height
    1 is sampled by inverse CDF, the rest by rejection, mixed in proportion
    to their volumes.
    """
    if L.kind is LatticeKind.CONGRUENCE_SUB:
        raise InvalidParameter("haar_sample is implemented for the full groups only")
    if L.is_complex:
        p_cusp = 0.5 / L.covolume
        def draw_x(m):
            return rng.random(m) - 0.5 + 1j * (rng.random(m) - 0.5)
        power, lo = 3, math.sqrt(0.5)
    else:
        p_cusp = 1.0 / L.covolume
        def draw_x(m):
            return rng.random(m) - 0.5
        power, lo = 2, math.sqrt(3) / 2
    in_cusp = rng.random(size) < p_cusp
    nc = int(in_cusp.sum())
    x = np.empty(size, dtype=complex if L.is_complex else float)
    h = np.empty(size)
    x[in_cusp] = draw_x(nc)
    # cusp: P(h > y) = y^{1-power}
    h[in_cusp] = rng.random(nc) ** (-1.0 / (power - 1))
    xb, hb = _sample_bottom(rng, size - nc, draw_x, lo, 1.0, power)
    x[~in_cusp] = xb
    h[~in_cusp] = hb
    t = np.log(h)
    if L.is_complex:
        k = _sample_su2(rng, size)
    else:
        k = rng.random(size) * 2 * math.pi
    return compose_batch(x, t, k, L.factor)
