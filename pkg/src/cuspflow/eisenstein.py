"""Eisenstein series by direct coset summation.

Used as an independent route to the scattering constant: the constant term
of ``E(s, n_x a_t)`` is ``phi_s + C(s) phi_{1-s}``, and averaging over an
equally spaced x-grid removes every nonconstant Fourier mode whose frequency
is not a multiple of the grid size.
"""

from __future__ import annotations

import math

import numpy as np

from . import kernels
from .group import compose_batch

__all__ = ["eisenstein_truncated", "extract_constant_term"]


def _tail(power: float, bound: float, L) -> float:
    """Expected mass of ``sum nrm^{-power}`` beyond ``bound``.

    The counting function of row norms ``nrm <= X`` is ``c0 X^mu`` on
    average: the integral formula applied to the indicator of
    ``t_n >= -mu log X`` under ``e^{-t_n} dt_n``.
    """
    mu = L.mu
    return L.c0 * mu * bound ** (mu - power) / (power - mu)


def eisenstein_truncated(mats, s: float, L, bound: float, tail: bool = True) -> np.ndarray:
    """``E(s, g) = sum ||(c, d) g||^{-2 mu s}`` over cosets with norm^2 <= bound."""
    power = L.mu * s
    vals = kernels.eisenstein_sum(np.asarray(mats), power, bound, L.factor.value)
    if tail:
        vals = vals + _tail(power, bound, L)
    return vals


def extract_constant_term(s: float, L, height: float = 1.5, bound: float = 2e5,
                          grid: int = 4) -> float:
    """Fit ``C(s)`` from ``mean_x E(s, n_x a_t) = h^{mu s} + C h^{mu (1 - s)}``.

    Parameters
    ----------
    s : float
        Real, > 1 so the coset sum converges absolutely.
    L : LatticeSpec
    height : float
        ``h = e^t`` of the sample points.
    bound : float
        Norm bound for the truncated sum.
    grid : int
        Points per real direction of the x-grid.
    """
    t = math.log(height)
    xs = (np.arange(grid) + 0.5) / grid
    if L.is_complex:
        xr, xi = np.meshgrid(xs, xs, indexing="ij")
        x = (xr + 1j * xi).ravel()
        k = (np.zeros(x.size), np.zeros(x.size), np.zeros(x.size))
    else:
        x = xs
        k = np.zeros(x.size)
    mats = compose_batch(x, np.full(x.size, t), k, L.factor)
    e = eisenstein_truncated(mats, s, L, bound)
    mu = L.mu
    return float((e.mean() - height ** (mu * s)) / height ** (mu * (1 - s)))
