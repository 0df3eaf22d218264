"""Incomplete theta series by direct coset summation.

``Theta_f(g) = sum over Gamma_inf \\ Gamma of f(gamma g)``.  Only the bottom
row ``(c, d) g`` of ``gamma g`` matters, so the sum runs over the coprime
rows whose norm lands in the t-support of ``f``.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import kernels
from .errors import InsufficientSupport, InvalidParameter
from .group import FactorKind, GroupPoint, compose_batch
from .lattice import LatticeKind, LatticeSpec, haar_sample

__all__ = [
    "ThetaValue",
    "McEstimate",
    "norm_window",
    "theta_values",
    "theta_eval",
    "direct_theta_norm",
    "siegel_mean",
    "folding_norm",
    "SubgroupComparison",
    "subgroup_comparison",
]

SLACK = 1e-9
_CHUNK = 2048


@dataclass(frozen=True)
class ThetaValue:
    value: float
    terms_used: int
    norm_bound_used: float


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo mean with its standard error.

    ``std_error`` is the sample standard deviation over ``sqrt(n_samples)``.
    """

    mean: float
    std_error: float
    n_samples: int
    seed: int
    n_workers: int = 1
    extra: dict = field(default_factory=dict)

    @property
    def rel_se(self) -> float:
        return self.std_error / abs(self.mean) if self.mean else math.inf

    def to_dict(self, **context) -> dict:
        d = asdict(self)
        d.update({"value": self.mean, "se": self.std_error, "n": self.n_samples})
        d.update(context)
        return d

    def to_json(self, **context) -> str:
        return json.dumps(self.to_dict(**context), sort_keys=True, default=str)


def _estimate(values: np.ndarray, seed: int, n_workers: int, **extra) -> McEstimate:
    n = values.size
    mean = float(np.sum(values) / n)
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else math.inf
    return McEstimate(mean, se, n, int(seed), int(n_workers), extra)


def _check_case(f, L: LatticeSpec):
    if f.case is not L.factor:
        raise InvalidParameter(f"test function is {f.case.name}, lattice is {L.factor.name}")


def norm_window(f) -> tuple:
    """Row-norm interval ``[lo, hi]`` for which ``f`` can be nonzero.

    ``t_n = -mu log ||(c, d) g||^2``, so the t-support ``[T-, T+]`` maps to
    ``[e^{-T+/mu}, e^{-T-/mu}]``, widened by a relative ``SLACK``.
    """
    t_lo, t_hi = f.support
    mu = f.mu
    return math.exp(-t_hi / mu) * (1 - SLACK), math.exp(-t_lo / mu) * (1 + SLACK)


def theta_values(f, mats: np.ndarray, L: LatticeSpec) -> tuple:
    """``Theta_f`` at a stack of matrices.

    Returns
    -------
    values : ndarray
    terms : ndarray
        Number of cosets inside the norm window per point.
    """
    _check_case(f, L)
    mats = np.asarray(mats)
    lo, hi = norm_window(f)
    idx, _, _, w0, w1 = kernels.enumerate_pairs(mats, lo, hi, L.factor.value,
                                                level=L.level, rho=f.cone)
    vals = f.eval_rows(w0, w1) if idx.size else np.zeros(0)
    n = mats.shape[0]
    return (np.bincount(idx, weights=vals, minlength=n)[:n],
            np.bincount(idx, minlength=n)[:n])


def theta_eval(f, g: GroupPoint, L: LatticeSpec) -> ThetaValue:
    """``Theta_f(g)`` for a single group point."""
    if g.n != 1:
        raise InvalidParameter("coset enumeration is implemented for one factor")
    vals, terms = theta_values(f, np.asarray(g.factors[0])[None], L)
    return ThetaValue(float(vals[0]), int(terms[0]), norm_window(f)[1])


# ---------------------------------------------------------------------------
# sampling of Gamma_inf \ G restricted to supp f

def _sample_support(f, L: LatticeSpec, rng: np.random.Generator, n: int):
    """Points of ``Gamma_inf \\ G`` in the support box of ``f`` with weights.

    ``t`` has density proportional to ``e^{-t}`` on the t-support, ``x`` is
    uniform on the unipotent quotient and ``k`` is uniform on the support
    box.  The returned weight makes ``mean(weight * h)`` an unbiased
    estimate of ``c0 int h e^{-t} dt dx dk`` with ``dx`` normalized.
    """
    t_lo, t_hi = f.support
    if not t_hi > t_lo:
        raise InsufficientSupport("test function has empty t-support")
    e_hi, e_lo = math.exp(-t_lo), math.exp(-t_hi)
    z = e_hi - e_lo
    t = -np.log(e_lo + rng.random(n) * z)
    width = L.cusp_index
    if f.case is FactorKind.REAL:
        x = rng.random(n) * width
        a, b = f.k_box if f.k_box is not None else (-math.pi / 2, math.pi / 2)
        theta = a + (b - a) * rng.random(n)
        weight = np.full(n, L.c0 * z * (b - a) / math.pi)
        k = theta
        mats = compose_batch(x, t, theta, FactorKind.REAL)
    else:
        x = (rng.random(n) + 1j * rng.random(n)) * width
        if f.k_box is not None:
            th0, th1, ph0, ph1 = f.k_box
        else:
            th0, th1, ph0, ph1 = 0.0, math.pi / 2, -math.pi, math.pi
        theta = th0 + (th1 - th0) * rng.random(n)
        phi = ph0 + (ph1 - ph0) * rng.random(n)
        alpha = 2 * math.pi * rng.random(n)
        beta = alpha - phi
        # (theta, phi) pushforward of dk: sin(2 theta) dtheta dphi / (2 pi)
        weight = L.c0 * z * np.sin(2 * theta) * (th1 - th0) * (ph1 - ph0) / (2 * math.pi)
        k = (theta, alpha, beta)
        mats = compose_batch(x, t / 2, k, FactorKind.COMPLEX)
    return t, k, mats, weight


def _worker_streams(seed: int, n_samples: int, n_workers: int):
    if n_workers < 1:
        raise InvalidParameter("n_workers must be >= 1")
    seqs = np.random.SeedSequence(seed).spawn(n_workers)
    base, extra = divmod(n_samples, n_workers)
    return [(np.random.default_rng(s), base + (i < extra)) for i, s in enumerate(seqs)]


def _map_workers(fn, streams, n_workers: int):
    if n_workers == 1:
        return [fn(*streams[0])]
    with ThreadPoolExecutor(max_workers=n_workers) as ex:
        return list(ex.map(lambda a: fn(*a), streams))


def _direct_values(f, L, rng, n, theta_lattice=None):
    out = np.empty(n)
    tl = L if theta_lattice is None else theta_lattice
    for i in range(0, n, _CHUNK):
        m = min(_CHUNK, n - i)
        t, k, mats, w = _sample_support(f, L, rng, m)
        fv = f.eval_tk(t, k)
        vals = np.zeros(m)
        live = np.flatnonzero(fv != 0)
        if live.size:
            th, _ = theta_values(f, mats[live], tl)
            vals[live] = w[live] * np.conj(fv[live]) * th
        out[i:i + m] = vals
    return out


def direct_theta_norm(f, L: LatticeSpec, n_samples: int, seed: int = 0,
                      n_workers: int = 1) -> McEstimate:
    """``||Theta_f||^2`` on ``Gamma \\ G`` (probability measure) via unfolding.

    ``||Theta_f||^2 = c0 E[ f(g) Theta_f(g) ]`` with ``g = n_x a_t k`` drawn
    from ``e^{-t} dt dx dk`` over the support of ``f``.

    Parameters
    ----------
    f : TestFunction
    L : LatticeSpec
    n_samples : int
        At least 1000.
    seed : int
        Master seed; worker ``i`` uses the ``i``-th spawned child stream.
    n_workers : int
        Number of streams.  Results depend on ``(seed, n_workers)`` only.
    """
    if n_samples < 1000:
        raise InvalidParameter("n_samples must be >= 1000")
    _check_case(f, L)
    streams = _worker_streams(seed, n_samples, n_workers)
    parts = _map_workers(lambda rng, n: _direct_values(f, L, rng, n), streams, n_workers)
    return _estimate(np.concatenate(parts), seed, n_workers, method="direct")


def _haar_theta(f, L, rng, n, square: bool):
    out = np.empty(n)
    for i in range(0, n, _CHUNK):
        m = min(_CHUNK, n - i)
        mats = haar_sample(L, rng, m)
        th, _ = theta_values(f, mats, L)
        out[i:i + m] = th * th if square else th
    return out


def siegel_mean(f, L: LatticeSpec, n_samples: int, seed: int = 0,
                n_workers: int = 1) -> McEstimate:
    """Haar average of ``Theta_f``; ``extra['expected'] = c0 int f``."""
    _check_case(f, L)
    streams = _worker_streams(seed, n_samples, n_workers)
    parts = _map_workers(lambda rng, n: _haar_theta(f, L, rng, n, False), streams, n_workers)
    expected = L.c0 * f.l1
    return _estimate(np.concatenate(parts), seed, n_workers, method="siegel",
                     expected=expected)


def folding_norm(f, L: LatticeSpec, n_samples: int, seed: int = 0,
                 n_workers: int = 1) -> McEstimate:
    """``||Theta_f||^2`` as the Haar average of ``Theta_f^2`` (no unfolding)."""
    _check_case(f, L)
    streams = _worker_streams(seed, n_samples, n_workers)
    parts = _map_workers(lambda rng, n: _haar_theta(f, L, rng, n, True), streams, n_workers)
    return _estimate(np.concatenate(parts), seed, n_workers, method="folding")


@dataclass(frozen=True)
class SubgroupComparison:
    lhs: McEstimate
    rhs: McEstimate
    factor: float
    combined_se: float
    passed: bool

    def to_dict(self) -> dict:
        return {"lhs": self.lhs.to_dict(), "rhs": self.rhs.to_dict(), "factor": self.factor,
                "combined_se": self.combined_se, "pass": self.passed}


def subgroup_comparison(f, L_sub: LatticeSpec, n_samples: int, seed: int = 0,
                        n_workers: int = 1) -> SubgroupComparison:
    """``||Theta_f^Lambda||^2 <= ([G_inf : L_inf]^2 / [G : L]) ||Theta_f^Gamma||^2``.

    Both sides are estimated from the same sample stream, so their errors are
    strongly correlated; the reported ``combined_se`` is the standard error of
    the per-sample difference.
    """
    if L_sub.kind is not LatticeKind.CONGRUENCE_SUB:
        full = L_sub
    else:
        from .lattice import modular

        full = modular()
    factor = L_sub.cusp_index ** 2 / L_sub.index
    streams = _worker_streams(seed, n_samples, n_workers)

    def both(rng, n):
        # one support sample, evaluated against both lattices
        out_l = np.empty(n)
        out_r = np.empty(n)
        for i in range(0, n, _CHUNK):
            m = min(_CHUNK, n - i)
            t, k, mats, w = _sample_support(f, L_sub, rng, m)
            fv = f.eval_tk(t, k)
            live = np.flatnonzero(fv != 0)
            a = np.zeros(m)
            b = np.zeros(m)
            if live.size:
                th_s, _ = theta_values(f, mats[live], L_sub)
                th_f, _ = theta_values(f, mats[live], full)
                a[live] = w[live] * fv[live] * th_s
                # rescale weights from c0(L_sub) to c0(full)
                b[live] = w[live] * fv[live] * th_f * (full.c0 / L_sub.c0) * factor
            out_l[i:i + m] = a
            out_r[i:i + m] = b
        return out_l, out_r

    parts = _map_workers(both, streams, n_workers)
    lv = np.concatenate([p[0] for p in parts])
    rv = np.concatenate([p[1] for p in parts])
    lhs = _estimate(lv, seed, n_workers, method="direct", lattice=L_sub.kind.value)
    rhs = _estimate(rv, seed, n_workers, method="direct-scaled", lattice=full.kind.value,
                    factor=factor)
    diff = rv - lv
    cse = float(np.std(diff, ddof=1) / math.sqrt(diff.size))
    # both sides can agree exactly (every contributing coset lies in the subgroup);
    # allow for rounding in that case
    slack = 3 * cse + 1e-12 * abs(rhs.mean)
    return SubgroupComparison(lhs, rhs, factor, cse, bool(lhs.mean <= rhs.mean + slack))
