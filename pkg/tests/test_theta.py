import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspflow.errors import InvalidParameter
from cuspflow.group import FactorKind, GroupPoint, compose_batch, iwasawa_batch, random_sl2
from cuspflow.lattice import bianchi, gamma0, modular
from cuspflow.special import bump_v
from cuspflow.spectral import spectral_theta_norm
from cuspflow.testfn import f_lambda_complex, f_lambda_real, spherical, trig_real
from cuspflow.theta import (
    direct_theta_norm,
    folding_norm,
    siegel_mean,
    subgroup_comparison,
    theta_eval,
    theta_values,
)


class _Indicator:
    """v = 1 on [-0.1, 0]."""

    lam, eps, support = 1.0, 0.0, (-0.1, 0.0)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return ((t >= -0.1) & (t <= 0.0)).astype(float)


def test_identity_counts_two_unit_rows():
    f = replace(spherical(bump_v(4, 0.2)), v=_Indicator())
    val = theta_eval(f, GroupPoint.identity(["real"]), modular())
    assert val.value == 2.0 and val.terms_used == 2


def _theta_brute(f, g, L, N=40):
    # independent route: complete every coprime row to gamma and decompose gamma g
    total = 0.0
    for c in range(0, N + 1):
        for d in range(-N, N + 1):
            if math.gcd(c, d) != 1 or (c == 0 and d != 1) or c % L.level:
                continue
            _, x0, y0 = _egcd(c, d)
            gamma = np.array([[y0, -x0], [c, d]], dtype=float)
            x, t, theta = iwasawa_batch((gamma @ g)[None], FactorKind.REAL)
            total += float(f.eval_tk(t, theta)[0])
    return total


def _egcd(a, b):
    x0, x1, y0, y1 = 1, 0, 0, 1
    while b:
        q, a, b = a // b, b, a % b
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        x0, y0 = -x0, -y0
    return a, x0, y0


@pytest.mark.parametrize("L", [modular(), gamma0(2)], ids=["sl2z", "gamma0_2"])
def test_theta_matches_brute_force(L, rng):
    f = f_lambda_real(4, 0.2)
    g = compose_batch(rng.random(20), rng.uniform(-1.5, 0.0, 20), rng.uniform(-0.2, 0.2, 20), "real")
    vals, _ = theta_values(f, g, L)
    ref = [_theta_brute(f, gi, L) for gi in g]
    np.testing.assert_allclose(vals, ref, atol=1e-12)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2 ** 32 - 1), which=st.sampled_from(["real", "complex"]))
def test_theta_is_gamma_invariant(seed, which):
    rng = np.random.default_rng(seed)
    if which == "real":
        L, f = modular(), trig_real(bump_v(8, 0.2), {0: 1.0, 1: 0.3})
        gamma = np.array([[2.0, 1.0], [1.0, 1.0]])
    else:
        L, f = bianchi(), spherical(bump_v(4, 0.2, "complex"))
        gamma = np.array([[1 + 1j, 1j], [1.0, 1.0]])
    g = random_sl2(rng, 4, L.factor)
    a, _ = theta_values(f, g, L)
    b, _ = theta_values(f, gamma @ g, L)
    np.testing.assert_allclose(a, b, rtol=1e-9, atol=1e-12)


def test_case_mismatch_and_sample_floor():
    with pytest.raises(InvalidParameter):
        theta_values(f_lambda_real(4, 0.2), np.eye(2, dtype=complex)[None], bianchi())
    with pytest.raises(InvalidParameter):
        direct_theta_norm(f_lambda_real(4, 0.2), modular(), 999)


def test_direct_matches_spectral_lambda4():
    f = f_lambda_real(4, 0.2)
    spec = spectral_theta_norm(f, modular()).total
    est = direct_theta_norm(f, modular(), 200_000, seed=7)
    assert abs(est.mean - spec) <= max(0.02 * spec, 3 * est.std_error)


def test_direct_matches_spectral_bianchi():
    f = f_lambda_complex(2, 0.2, m_max=256)
    spec = spectral_theta_norm(f, bianchi()).total
    est = direct_theta_norm(f, bianchi(), 100_000, seed=3)
    assert abs(est.mean - spec) <= max(0.02 * spec, 3 * est.std_error)


def test_seeded_reproducibility():
    f = f_lambda_real(4, 0.2)
    a = direct_theta_norm(f, modular(), 5000, seed=11, n_workers=2)
    b = direct_theta_norm(f, modular(), 5000, seed=11, n_workers=2)
    c = direct_theta_norm(f, modular(), 5000, seed=12, n_workers=2)
    assert a.mean == b.mean and a.mean != c.mean


@pytest.mark.parametrize("f", [f_lambda_real(4, 0.2), trig_real(bump_v(8, 0.2), {0: 1.0, 2: 0.2})],
                         ids=["f4", "trig"])
def test_siegel_mean(f):
    est = siegel_mean(f, modular(), 100_000, seed=5)
    assert abs(est.mean - est.extra["expected"]) <= 3 * est.std_error
    assert est.extra["expected"] == pytest.approx(3 / math.pi * f.l1)


def test_folding_agrees_with_unfolding():
    f = f_lambda_real(2, 0.2)
    fold = folding_norm(f, modular(), 200_000, seed=2)
    unfold = spectral_theta_norm(f, modular()).total
    assert abs(fold.mean - unfold) <= 3 * fold.std_error


def test_norm_additivity_across_weights():
    # weights 0 and 2 are orthogonal, so the norms add
    v = bump_v(8, 0.2)
    f0, f2, both = trig_real(v, {0: 1.0}), trig_real(v, {2: 0.4}), trig_real(v, {0: 1.0, 2: 0.4})
    L = modular()
    parts = spectral_theta_norm(f0, L).total + spectral_theta_norm(f2, L).total
    assert spectral_theta_norm(both, L).total == pytest.approx(parts, rel=1e-12)
    est = direct_theta_norm(both, L, 100_000, seed=4)
    assert abs(est.mean - parts) <= max(0.02 * parts, 3 * est.std_error)


def test_subgroup_comparison():
    res = subgroup_comparison(f_lambda_real(4, 0.2), gamma0(2), 50_000, seed=1)
    assert res.factor == pytest.approx(1 / 3)
    assert res.lhs.mean <= res.rhs.mean + 3 * res.combined_se
    assert res.passed
