"""Cusp excursions of unipotent orbits and the sets D_k.

The flow is ``u_s = n^-_{s y}`` acting on the right.  Excursion depth is
measured by ``Delta = max(0, mu log height)``, normalized so that
``sigma{Delta > r}`` is ``c0 e^{-r}``.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy import optimize

from . import kernels
from .errors import InvalidParameter, ProposalMismatch
from .group import FactorKind, FlowDirection, GroupPoint, compose_batch, iwasawa_batch
from .lattice import LatticeSpec, delta_batch, haar_sample
from .theta import McEstimate, _estimate

__all__ = [
    "ExcursionRecord",
    "TargetSchedule",
    "DkSpec",
    "simulate_orbit",
    "simulate_orbits",
    "iter_orbits",
    "shrinking_target_count",
    "hits_from_deltas",
    "dk_membership",
    "dk_threshold",
    "dk_threshold_x",
    "dk_volume_exact",
    "measure_dk",
    "measure_ydk",
    "affine_constant",
]


@dataclass(frozen=True)
class ExcursionRecord:
    """Excursion depths along one orbit.

    ``running_max_ratio[i] = max_{s_min <= s' <= times[i]} deltas(s') / log s'``,
    and ``nan`` before ``s_min``.
    """

    times: np.ndarray
    deltas: np.ndarray
    running_max_ratio: np.ndarray
    s_min: float = 1.0

    @property
    def final_ratio(self) -> float:
        return float(self.running_max_ratio[-1])

    def ratio_at(self, T: float) -> float:
        i = int(np.searchsorted(self.times, T, side="right")) - 1
        if i < 0:
            raise InvalidParameter(f"T={T} precedes the first sample time")
        return float(self.running_max_ratio[i])


@dataclass(frozen=True)
class TargetSchedule:
    """Shrinking targets ``r_l = (1 + sign eps) log l`` and window ``[k, p(k)]``.

    ``p_factor`` sets ``p(k) = p_factor * k``.  ``degenerate`` makes every
    ``r_l`` infinite (targets that are never hit).
    """

    eps: float
    sign: int = -1
    p_factor: int = 2
    degenerate: bool = False

    def __post_init__(self):
        if not self.degenerate and not (self.eps > 0 and math.isfinite(self.eps)):
            raise InvalidParameter(f"TargetSchedule invariant violated: eps must be > 0, got {self.eps}")
        if self.sign not in (1, -1):
            raise InvalidParameter("TargetSchedule sign must be +1 or -1")
        if self.p_factor < 1:
            raise InvalidParameter("p_factor must be >= 1")
        if not self.degenerate and self.sign == -1 and self.eps >= 1:
            raise InvalidParameter("a divergent schedule needs eps < 1")

    @classmethod
    def never(cls) -> "TargetSchedule":
        return cls(0.0, 1, 2, degenerate=True)

    def r(self, ell):
        ell = np.asarray(ell, dtype=float)
        if self.degenerate:
            return np.full(ell.shape, np.inf)
        return (1.0 + self.sign * self.eps) * np.log(ell)

    def p(self, k: int) -> int:
        return self.p_factor * int(k)

    @property
    def divergent(self) -> bool:
        """Whether ``sum e^{-r_l}`` diverges."""
        return not self.degenerate and self.sign == -1

    def to_dict(self) -> dict:
        return {"eps": self.eps, "sign": self.sign, "p_factor": self.p_factor,
                "degenerate": self.degenerate}


@dataclass(frozen=True)
class DkSpec:
    k: int
    schedule: TargetSchedule
    lattice: LatticeSpec
    flow: FlowDirection = field(default_factory=FlowDirection.default)

    def __post_init__(self):
        if int(self.k) < 1:
            raise InvalidParameter("DkSpec needs k >= 1")
        if len(self.flow.y) != 1:
            raise InvalidParameter("D_k experiments run in rank one")

    @property
    def ells(self) -> np.ndarray:
        return np.arange(self.k, self.schedule.p(self.k) + 1)


# ---------------------------------------------------------------------------
# orbits

def _as_matrix(x0, L: LatticeSpec) -> np.ndarray:
    if isinstance(x0, GroupPoint):
        if x0.n != 1:
            raise InvalidParameter("orbit experiments run for one factor")
        x0 = x0.factors[0]
    return np.asarray(x0, dtype=L.factor.dtype)


def _running_ratio(times, deltas, s_min):
    ratio = np.full(times.shape, np.nan)
    live = times >= s_min
    if live.any():
        ratio[live] = np.maximum.accumulate(deltas[live] / np.log(times[live]))
    return ratio


def simulate_orbit(x0, L: LatticeSpec, flow: FlowDirection | None = None, horizon: float = 1e6,
                   stride: float = 1.0, s_min: float = 100.0) -> ExcursionRecord:
    """``Delta(x0 u_s)`` at ``s = stride, 2 stride, ..., horizon``.

    Parameters
    ----------
    x0 : GroupPoint or (2, 2) array
    s_min : float
        Burn-in time before which ``Delta / log s`` is not recorded; the
        ratio is meaningless while ``log s`` is of order one.
    """
    flow = FlowDirection.default() if flow is None else flow
    if horizon < 10:
        raise InvalidParameter("horizon must be >= 10")
    if stride <= 0:
        raise InvalidParameter("stride must be positive")
    if s_min <= 1:
        raise InvalidParameter("s_min must exceed 1")
    n = int(math.floor(horizon / stride))
    step = stride * flow.y[0]
    logh = kernels.orbit_logheights(_as_matrix(x0, L), step, n, L.factor.value)
    deltas = np.maximum(0.0, L.mu * logh)
    times = stride * np.arange(1, n + 1, dtype=float)
    return ExcursionRecord(times, deltas, _running_ratio(times, deltas, s_min), s_min)


def iter_orbits(L: LatticeSpec, n_orbits: int, horizon: float, seed: int,
                stride: float = 1.0, s_min: float = 100.0):
    """Yield orbits from independent Haar-random starting points, one stream each.

    Orbit ``i`` starts from the ``i``-th child of ``SeedSequence(seed)``, so
    a prefix of the orbits does not depend on ``n_orbits``.
    """
    for sq in np.random.SeedSequence(seed).spawn(n_orbits):
        x0 = haar_sample(L, np.random.default_rng(sq), 1)[0]
        yield simulate_orbit(x0, L, None, horizon, stride, s_min)


def simulate_orbits(L: LatticeSpec, n_orbits: int, horizon: float, seed: int,
                    stride: float = 1.0, s_min: float = 100.0) -> list:
    """List version of :func:`iter_orbits`."""
    return list(iter_orbits(L, n_orbits, horizon, seed, stride, s_min))


def hits_from_deltas(deltas: np.ndarray, schedule: TargetSchedule) -> np.ndarray:
    """``{l : Delta(x0 u_l) >= r_l}`` from depths sampled at ``l = 1, 2, ...``."""
    ell = np.arange(1, deltas.size + 1)
    return ell[deltas >= schedule.r(ell)]


def shrinking_target_count(x0, L: LatticeSpec, flow: FlowDirection | None,
                           schedule: TargetSchedule, L_max: int) -> np.ndarray:
    """Integer times ``l <= L_max`` at which the orbit is inside ``B_{r_l}``."""
    if L_max < 10:
        raise InvalidParameter("L_max must be >= 10")
    if schedule.degenerate:
        return np.zeros(0, dtype=np.int64)
    rec = simulate_orbit(x0, L, flow, float(L_max), 1.0)
    return hits_from_deltas(rec.deltas, schedule)


# ---------------------------------------------------------------------------
# D_k on Q \ G

def _row_after_flow(k, ell, case: FactorKind):
    """``|| (0, 1) k u_l ||^2`` for compact parts ``k`` (broadcast against ``ell``)."""
    if case is FactorKind.REAL:
        th = np.asarray(k)[..., None]
        return (ell * np.cos(th) - np.sin(th)) ** 2 + np.cos(th) ** 2
    th, al, be = (np.asarray(v)[..., None] for v in k)
    w0 = -np.sin(th) * np.exp(-1j * be) + ell * np.cos(th) * np.exp(-1j * al)
    return np.abs(w0) ** 2 + np.cos(th) ** 2


def dk_threshold(k, spec: DkSpec) -> np.ndarray:
    """``tau(k) = min_l (r_l + mu log ||(0,1) k u_l||^2)``.

    ``a_t k`` lies in ``D_k`` exactly when ``t >= tau(k)``.
    """
    case = spec.lattice.factor
    ells = spec.ells.astype(float) * spec.flow.y[0]
    q = _row_after_flow(k, ells, case)
    return np.min(spec.schedule.r(spec.ells) + case.mu * np.log(q), axis=-1)


def dk_membership(t, k, spec: DkSpec) -> np.ndarray:
    """Whether ``Q a_t k`` lies in ``D_k`` (``t`` is the cusp coordinate ``t_n``).

    Checked by forming ``a_t k u_l`` for every ``l`` in ``[k, p(k)]`` and
    reading off its Iwasawa height.
    """
    case = spec.lattice.factor
    t = np.atleast_1d(np.asarray(t, dtype=float))
    n = t.size
    if case is FactorKind.REAL:
        kk = np.broadcast_to(np.asarray(k, dtype=float), (n,))
    else:
        kk = tuple(np.broadcast_to(np.asarray(v, dtype=float), (n,)) for v in k)
    mats = compose_batch(np.zeros(n), t / case.mu, kk, case)
    out = np.zeros(n, dtype=bool)
    y = spec.flow.y[0]
    for ell, r in zip(spec.ells, spec.schedule.r(spec.ells)):
        m = mats.copy()
        m[:, :, 0] += m[:, :, 1] * (ell * y)
        _, tt, _ = iwasawa_batch(m, case)
        out |= case.mu * tt >= r
    return out


def dk_threshold_x(x, spec: DkSpec) -> np.ndarray:
    """``tau`` for the point ``Q a_t n^-_x``: ``min_l (r_l + mu log(1 + |x + l y|^2))``.

    In the coordinates ``Q a_t n^-_x`` the measure on ``Q \\ G`` is
    ``e^{-t} dt dx / pi`` (``dx`` Lebesgue on R or C).
    """
    case = spec.lattice.factor
    ells = spec.ells
    shift = np.asarray(x)[..., None] + ells * spec.flow.y[0]
    return np.min(spec.schedule.r(ells) + case.mu * np.log1p(np.abs(shift) ** 2), axis=-1)


def _x_to_tk(t, x, case: FactorKind):
    """Cusp coordinate and compact part of ``a_{t/mu} n^-_x``."""
    n = np.size(x)
    kk = np.zeros(n) if case is FactorKind.REAL else (np.zeros(n),) * 3
    mats = compose_batch(np.zeros(n), np.asarray(t) / case.mu, kk, case)
    mats[:, :, 0] += mats[:, :, 1] * np.asarray(x)[:, None]
    _, tt, k = iwasawa_batch(mats, case)
    return case.mu * tt, k


class _XProposal:
    """Mixture of a uniform box over the target window and a Cauchy-type tail.

    The tail density decays like ``|x|^{-2}`` (real) or ``|x|^{-4}`` (complex),
    matching the decay of ``e^{-tau(x)}``, so the importance ratio stays bounded.
    """

    def __init__(self, spec: DkSpec, p_box: float = 0.8):
        y = spec.flow.y[0]
        self.lo = -spec.schedule.p(spec.k) * y - 1.0
        self.hi = -spec.k * y + 1.0
        self.centre = 0.5 * (self.lo + self.hi)
        self.scale = 0.5 * (self.hi - self.lo)
        self.complex = spec.lattice.is_complex
        self.p_box = p_box

    def sample(self, rng, n):
        box = rng.random(n) < self.p_box
        xr = self.lo + (self.hi - self.lo) * rng.random(n)
        if not self.complex:
            tail = self.centre + self.scale * np.tan(math.pi * (rng.random(n) - 0.5))
            return np.where(box, xr, tail)
        xi = -1.0 + 2.0 * rng.random(n)
        # radial law with density 2 rho / (1 + rho^2)^2
        u = rng.random(n)
        rho = self.scale * np.sqrt(u / (1 - u))
        ang = 2 * math.pi * rng.random(n)
        tail = self.centre + rho * np.exp(1j * ang)
        return np.where(box, xr + 1j * xi, tail)

    def density(self, x):
        if not self.complex:
            in_box = (x >= self.lo) & (x <= self.hi)
            box = in_box / (self.hi - self.lo)
            z = (x - self.centre) / self.scale
            tail = 1.0 / (math.pi * self.scale * (1 + z * z))
        else:
            in_box = (x.real >= self.lo) & (x.real <= self.hi) & (np.abs(x.imag) <= 1)
            box = in_box / (2.0 * (self.hi - self.lo))
            z2 = np.abs((x - self.centre) / self.scale) ** 2
            tail = 1.0 / (math.pi * self.scale ** 2 * (1 + z2) ** 2)
        return self.p_box * box + (1 - self.p_box) * tail


def measure_dk(spec: DkSpec, n_samples: int, seed: int = 0, max_weight_ratio: float = 1e4) -> McEstimate:
    """``|D_k|`` under the ``Q \\ G`` measure by importance sampling.

    Points are drawn as ``Q a_t n^-_x``: ``x`` from a box-plus-tail mixture
    over the window ``x ~ -l``, and ``t`` given ``x`` from a two-sided
    exponential centred at ``tau(x)``.  Membership is decided by
    :func:`dk_membership` after converting to ``(t_n, k)``.

    Raises
    ------
    ProposalMismatch
        If a few draws dominate the estimate.
    """
    if n_samples < 100:
        raise InvalidParameter("n_samples must be >= 100")
    rng = np.random.default_rng(seed)
    case = spec.lattice.factor
    prop = _XProposal(spec)
    x = prop.sample(rng, n_samples)
    centre = dk_threshold_x(x, spec)
    t = centre + rng.laplace(0.0, 1.0, n_samples)
    q = 0.5 * np.exp(-np.abs(t - centre)) * prop.density(x)
    w = np.exp(-t) / (math.pi * q)
    tn, k = _x_to_tk(t, x, case)
    hit = dk_membership(tn, k, spec)
    vals = np.where(hit, w, 0.0)
    if vals.max() > max_weight_ratio * max(vals.mean(), 1e-300):
        raise ProposalMismatch("importance weights too uneven; widen the proposal")
    return _estimate(vals, seed, 1, k=spec.k, hit_rate=float(hit.mean()))


@functools.lru_cache(maxsize=8)
def _leggauss(nodes):
    return np.polynomial.legendre.leggauss(nodes)


def _gl_panels(a, b, width, nodes=8):
    n = max(1, int(math.ceil((b - a) / width)))
    e = np.linspace(a, b, n + 1)
    u, w = _leggauss(nodes)
    lo, hi = e[:-1, None], e[1:, None]
    return (0.5 * (hi - lo) * u + 0.5 * (hi + lo)).ravel(), (0.5 * (hi - lo) * w).ravel()


def _tails(lo, hi, tail_nodes=96, scale_lo=1.0, scale_hi=1.0):
    """``x = lo - s tan v`` and ``x = hi + s tan v``; ``s`` should match the decay length."""
    v, wv = _gl_panels(0.0, math.pi / 2, math.pi / 16, tail_nodes // 8)
    off, jac = np.tan(v), wv / np.cos(v) ** 2
    return (lo - scale_lo * off[::-1], scale_lo * jac[::-1],
            hi + scale_hi * off, scale_hi * jac)


def _line_rule(lo, hi, width=0.25, tail_nodes=96, tail_scale=1.0):
    """Nodes on R: GL panels on [lo, hi] plus tan-mapped tails."""
    x, w = _gl_panels(lo, hi, width)
    xl, wl, xh, wh = _tails(lo, hi, tail_nodes, tail_scale, tail_scale)
    return np.concatenate([xl, x, xh]), np.concatenate([wl, w, wh])


def _branch_switches(spec: DkSpec, lo, hi, xi=0.0, step=0.01):
    """Points in ``[lo, hi]`` where the minimizing ``l`` of ``tau(x + i xi)`` changes."""
    ells = spec.ells
    r = spec.schedule.r(ells)
    mu = spec.lattice.factor.mu
    y = spec.flow.y[0]

    def branch(x, j):
        return r[j] + mu * np.log1p((x + ells[j] * y) ** 2 + xi * xi)

    grid = np.linspace(lo, hi, int(math.ceil((hi - lo) / step)) + 1)
    vals = r + mu * np.log1p((grid[:, None] + ells * y) ** 2 + xi * xi)
    arg = np.argmin(vals, axis=1)
    edges = []
    for i in np.flatnonzero(arg[1:] != arg[:-1]):
        a, b = arg[i], arg[i + 1]
        f = lambda x: branch(x, a) - branch(x, b)  # noqa: E731
        if f(grid[i]) * f(grid[i + 1]) < 0:
            edges.append(optimize.brentq(f, grid[i], grid[i + 1], xtol=1e-14))
        else:
            # more than one switch inside the cell; the cell edge is close enough
            edges.append(grid[i + 1])
    return edges


def _kink_rule(spec: DkSpec, xi=0.0, width=0.25):
    """Nodes on R with panel edges at every branch switch of ``tau``, plus tails.

    Right of the window the branch ``l = k`` is active throughout.  Left of
    it, the smaller ``r_l`` wins again once ``|x| >> mu p / (1 + sign eps)``,
    so the switch search extends that far.
    """
    y = spec.flow.y[0]
    p = spec.schedule.p(spec.k)
    sched = spec.schedule
    mu = spec.lattice.factor.mu
    lo, hi = -p * y - 2.0, -spec.k * y + 2.0
    far = lo - 4.0 * mu * p * y / (1.0 + sched.sign * sched.eps)
    edges = ([far] + _branch_switches(spec, far, lo, xi, step=0.5) + [lo]
             + _branch_switches(spec, lo, hi, xi, step=0.05) + [hi])
    # the integrand varies on scale ~|x + k y| far left, so panels can widen there
    xs, ws = zip(*(_gl_panels(a, b, width if a >= lo else 8 * width)
                   for a, b in zip(edges[:-1], edges[1:]) if b > a))
    # far left the active branch is l = k, a Lorentzian centred at -k y
    xl, wl, xh, wh = _tails(far, hi, scale_lo=-spec.k * y - far)
    return np.concatenate([xl, *xs, xh]), np.concatenate([wl, *ws, wh])


def dk_volume_exact(spec: DkSpec) -> float:
    """``|D_k| = (1/pi) int e^{-tau(x)} dx`` by composite Gauss-Legendre quadrature.

    ``tau`` is a minimum of smooth branches; panel edges sit on the switches
    between branches so that each panel integrates a smooth function.
    """
    if spec.schedule.degenerate:
        return 0.0
    if not spec.lattice.is_complex:
        xr, wr = _kink_rule(spec)
        return float(np.sum(wr * np.exp(-dk_threshold_x(xr, spec))) / math.pi)
    # tau is even in Im x; the row integral decays only once |Im x| exceeds the window
    xi, wi = _line_rule(0.0, 2.0, tail_scale=spec.k * spec.flow.y[0])
    xi, wi = xi[xi >= 0], 2.0 * wi[xi >= 0]
    total = 0.0
    for j in range(xi.size):
        xr, wr = _kink_rule(spec, xi[j])
        total += wi[j] * np.sum(wr * np.exp(-dk_threshold_x(xr + 1j * xi[j], spec)))
    return float(total / math.pi)


def measure_ydk(spec: DkSpec, n_samples: int, seed: int = 0) -> McEstimate:
    """``sigma(Y_{D_k})``: Haar probability that ``Delta(x u_l) >= r_l`` for some l in [k, p(k)].

    ``extra['witness_ok']`` re-checks every hit at its first witness.
    """
    L = spec.lattice
    rng = np.random.default_rng(seed)
    x = haar_sample(L, rng, n_samples)
    hit = np.zeros(n_samples, dtype=bool)
    witness = np.zeros(n_samples, dtype=np.int64)
    y = spec.flow.y[0]
    for ell, r in zip(spec.ells, spec.schedule.r(spec.ells)):
        m = x.copy()
        m[:, :, 0] += m[:, :, 1] * (ell * y)
        new = (delta_batch(m, L) >= r) & ~hit
        witness[new] = ell
        hit |= new
    ok = True
    if hit.any():
        m = x[hit].copy()
        m[:, :, 0] += m[:, :, 1] * (witness[hit] * y)[:, None]
        ok = bool(np.all(delta_batch(m, L) >= spec.schedule.r(witness[hit])))
    return _estimate(hit.astype(float), seed, 1, k=spec.k, witness_ok=ok)


@functools.lru_cache(maxsize=4)
def affine_constant(case=FactorKind.REAL, grid: int = 201) -> float:
    """Largest drop of ``t_n`` under right multiplication by ``B^- = {n^-_x : |x| < 1}``.

    Measured over a grid of ``x`` on ``a_t``; the drop does not depend on ``t``.
    """
    case = FactorKind.parse(case)
    if case is FactorKind.REAL:
        xs = np.linspace(-1.0, 1.0, grid)
    else:
        r = np.linspace(0.0, 1.0, grid)
        ang = np.linspace(0.0, 2 * math.pi, 64, endpoint=False)
        xs = (r[:, None] * np.exp(1j * ang[None, :])).ravel()
    n = xs.size
    kk = np.zeros(n) if case is FactorKind.REAL else (np.zeros(n),) * 3
    t0 = 3.0
    mats = compose_batch(np.zeros(n), np.full(n, t0), kk, case)
    mats[:, :, 0] += mats[:, :, 1] * xs[:, None]
    _, t, _ = iwasawa_batch(mats, case)
    return float(np.max(case.mu * (t0 - t)))
