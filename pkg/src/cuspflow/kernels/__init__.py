"""Backend dispatch for the hot loops.

Every public function here checks ``CUSPFLOW_BACKEND`` at call time, so the
benchmark and the parity tests can flip backends inside one process.
"""

import numpy as np

from .._backend import requested_backend
from ..errors import NonTermination
from . import _numpy


def _numba_mod():
    from . import _numba

    return _numba


def _impl():
    return _numba_mod() if requested_backend() == "numba" else _numpy


def _is_complex(kind):
    return int(kind) == 2


def reduce_batch(mats, kind):
    """Reduce a stack of (N, 2, 2) matrices into the fundamental domain.

    Returns
    -------
    reps : ndarray
        Reduced representatives gamma g.
    logh : ndarray
        log height ``-log(|c|^2 + |d|^2)`` of each representative.
    moves : ndarray
        Generator moves used.

    Raises
    ------
    NonTermination
        If any point exceeded the move budget.
    """
    impl = _impl()
    if _is_complex(kind):
        reps, logh, moves = impl.reduce_complex_batch(np.ascontiguousarray(mats, dtype=complex))
    else:
        reps, logh, moves = impl.reduce_real_batch(np.ascontiguousarray(mats, dtype=float))
    if np.any(moves < 0):
        raise NonTermination(f"reduction exceeded move budget for {int(np.sum(moves < 0))} point(s)")
    return reps, logh, moves


def orbit_logheights(g0, step, nsteps, kind, resync=1000):
    """Log heights along one discretized unipotent orbit."""
    if _is_complex(kind):
        g0 = np.ascontiguousarray(g0, dtype=complex)
    else:
        g0 = np.ascontiguousarray(g0, dtype=float)
    if requested_backend() == "numba":
        nb = _numba_mod()
        fn = nb.orbit_logheights_complex if _is_complex(kind) else nb.orbit_logheights_real
        out, status = fn(g0, float(step), int(nsteps), int(resync))
    else:
        out, st = _numpy.orbit_logheights_many(g0[None], float(step), int(nsteps),
                                               int(resync), _is_complex(kind))
        out, status = out[0], int(st[0])
    if status < 0:
        raise NonTermination("orbit reduction exceeded move budget")
    return out


def orbit_logheights_many(g0s, step, nsteps, kind, resync=1000):
    """Log heights for a stack of orbits, shape (N, nsteps)."""
    if requested_backend() == "numba":
        return np.stack([orbit_logheights(g, step, nsteps, kind, resync) for g in g0s])
    out, status = _numpy.orbit_logheights_many(g0s, float(step), int(nsteps), int(resync),
                                               _is_complex(kind))
    if np.any(status < 0):
        raise NonTermination("orbit reduction exceeded move budget")
    return out


def enumerate_pairs(mats, lo, hi, kind, level=1, rho=2.0):
    """Canonical coprime bottom rows (c, d) with lo <= ||(c, d) g||^2 <= hi.

    With ``rho < 1`` only rows with ``|w0|^2 <= rho^2 ||w||^2`` are kept;
    the scan skips the excluded region instead of filtering afterwards.

    Returns (idx, c, d, w0, w1) flattened over the batch, with
    (w0, w1) = (c, d) g_idx.
    """
    impl = _impl()
    if _is_complex(kind):
        if level != 1:
            raise ValueError("congruence level only supported for real factors")
        return impl.enumerate_complex(np.ascontiguousarray(mats, dtype=complex), float(lo), float(hi),
                                      float(rho))
    return impl.enumerate_real(np.ascontiguousarray(mats, dtype=float), float(lo), float(hi),
                               int(level), float(rho))


def eisenstein_sum(mats, power, bound, kind):
    """Sum of ``||(c, d) g||^(-2 power)`` over cosets with squared norm <= bound."""
    impl = _impl()
    if _is_complex(kind):
        return impl.eisenstein_sum_complex(np.ascontiguousarray(mats, dtype=complex),
                                           float(power), float(bound))
    return impl.eisenstein_sum_real(np.ascontiguousarray(mats, dtype=float), float(power),
                                    float(bound))
