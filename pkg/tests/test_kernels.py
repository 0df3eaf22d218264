import numpy as np
import pytest

from cuspflow import kernels
from cuspflow.group import FactorKind, random_sl2


def _both(fn):
    import os

    out = {}
    for b in ("numba", "numpy"):
        os.environ["CUSPFLOW_BACKEND"] = b
        try:
            out[b] = fn()
        finally:
            os.environ.pop("CUSPFLOW_BACKEND", None)
    return out["numba"], out["numpy"]


@pytest.mark.parametrize("kind", [1, 2])
def test_reduce_parity(kind, rng):
    g = random_sl2(rng, 2000, FactorKind(kind), scale=3.0)
    (ra, la, ma), (rb, lb, mb) = _both(lambda: kernels.reduce_batch(g, kind))
    np.testing.assert_allclose(la, lb, atol=1e-10)
    np.testing.assert_array_equal(ma >= 0, mb >= 0)


@pytest.mark.parametrize("kind", [1, 2])
@pytest.mark.parametrize("rho", [2.0, 0.3])
def test_enumerate_parity(kind, rho, rng):
    g = random_sl2(rng, 10, FactorKind(kind))

    def run():
        idx, c, d, w0, w1 = kernels.enumerate_pairs(g, 0.5, 60.0, kind, 1, rho)
        key = np.lexsort((np.round(np.abs(w1), 9), np.round(np.abs(w0), 9), idx))
        return idx[key], np.abs(w0[key]) ** 2 + np.abs(w1[key]) ** 2

    (ia, na), (ib, nb) = _both(run)
    np.testing.assert_array_equal(ia, ib)
    np.testing.assert_allclose(na, nb, rtol=1e-12)


@pytest.mark.parametrize("kind", [1, 2])
def test_cone_filter_equals_post_filter(kind, rng):
    g = random_sl2(rng, 5, FactorKind(kind))
    idx, _, _, w0, w1 = kernels.enumerate_pairs(g, 0.0, 80.0, kind, 1, 2.0)
    keep = np.abs(w0) ** 2 <= 0.25 ** 2 * (np.abs(w0) ** 2 + np.abs(w1) ** 2)
    idx2, *_ = kernels.enumerate_pairs(g, 0.0, 80.0, kind, 1, 0.25)
    assert idx2.size == int(keep.sum())


def test_level_filter(rng):
    g = random_sl2(rng, 3, FactorKind.REAL)
    _, c, *_ = kernels.enumerate_pairs(g, 0.0, 100.0, 1, 3)
    assert np.all(c % 3 == 0)


def test_orbit_parity(rng):
    g0 = random_sl2(rng, 1, FactorKind.REAL)[0]
    a, b = _both(lambda: kernels.orbit_logheights(g0, 1.0, 3000, 1))
    np.testing.assert_allclose(a, b, atol=1e-8)


def test_orbit_resync_matches_direct_products(rng):
    from cuspflow.lattice import delta_batch, modular

    g0 = random_sl2(rng, 1, FactorKind.REAL)[0]
    logh = kernels.orbit_logheights(g0, 1.0, 2500, 1)
    s = np.array([1, 999, 1000, 1001, 2500])
    mats = np.repeat(g0[None], s.size, axis=0)
    mats[:, :, 0] += mats[:, :, 1] * s[:, None]
    np.testing.assert_allclose(np.maximum(logh[s - 1], 0), delta_batch(mats, modular()), atol=1e-8)


def test_backend_env_validated(monkeypatch):
    from cuspflow._backend import requested_backend

    monkeypatch.setenv("CUSPFLOW_BACKEND", "fortran")
    with pytest.raises(ValueError):
        requested_backend()
