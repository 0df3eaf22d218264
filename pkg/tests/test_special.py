import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuspflow.eisenstein import extract_constant_term
from cuspflow.errors import InvalidParameter, PoleAtOne, PoleHit, UnsupportedLattice
from cuspflow.group import FactorKind
from cuspflow.lattice import bianchi, gamma0, modular
from cuspflow.special import (
    CATALAN,
    bianchi_validation,
    bump_v,
    dirichlet_beta,
    scattering_C,
    scattering_residue,
    vhat,
    vhat_line,
    zeta,
)


def test_zeta_half(golden):
    assert zeta(0.5).real == pytest.approx(golden["zeta_half"], abs=1e-9)
    assert zeta(2).real == pytest.approx(golden["zeta_2"], rel=1e-13)


@settings(max_examples=40, deadline=None)
@given(re=st.floats(-4, 6), im=st.floats(-40, 40))
def test_zeta_against_mpmath(re, im):
    s = complex(re, im)
    if abs(s - 1) < 1e-3:
        return
    ref = complex(mp.zeta(mp.mpc(re, im)))
    assert abs(zeta(s) - ref) <= 1e-9 * max(1.0, abs(ref))


@settings(max_examples=30, deadline=None)
@given(re=st.floats(-2, 5), im=st.floats(-30, 30))
def test_dirichlet_beta_against_mpmath(re, im):
    s = complex(re, im)
    z = mp.mpc(re, im)
    ref = complex(4 ** (-z) * (mp.zeta(z, 0.25) - mp.zeta(z, 0.75)))
    assert abs(dirichlet_beta(s) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_dirichlet_beta_at_two_is_catalan(golden):
    assert dirichlet_beta(2).real == pytest.approx(golden["catalan"], rel=1e-13)
    assert CATALAN == pytest.approx(golden["catalan"], rel=1e-15)


def test_zeta_pole():
    with pytest.raises(PoleAtOne):
        zeta(1.0)


@pytest.mark.parametrize("s", ["0.6", "0.75", "0.9", "1.5", "2.0"])
def test_c_modular_against_mpmath(golden, s):
    assert scattering_C(float(s), modular()).real == pytest.approx(golden["c_modular"][s], rel=1e-10)


@settings(max_examples=40, deadline=None)
@given(r=st.floats(0.1, 20))
def test_c_unitary_on_critical_line(r):
    assert abs(scattering_C(0.5 + 1j * r, modular())) == pytest.approx(1.0, abs=1e-8)


@settings(max_examples=20, deadline=None)
@given(re=st.floats(0.55, 0.95), im=st.floats(-5, 5))
def test_c_functional_equation(re, im):
    s = complex(re, im)
    for L in (modular(), bianchi()):
        assert abs(scattering_C(s, L) * scattering_C(1 - s, L) - 1) < 1e-8


def test_residues(golden):
    assert scattering_residue(modular()) == pytest.approx(golden["residue_modular"], abs=1e-4)
    assert scattering_residue(bianchi()) == pytest.approx(golden["c0_bianchi"], abs=1e-4)


def test_no_exceptional_pole_modular():
    s = np.linspace(0.51, 0.99, 200)
    inv = np.array([1 / scattering_C(x, modular()).real for x in s])
    assert np.all(inv < 0)


def test_pole_and_unsupported():
    with pytest.raises(PoleHit):
        scattering_C(1.0, modular())
    with pytest.raises(UnsupportedLattice):
        scattering_C(0.7, gamma0(2))


def test_constant_term_from_coset_sum(golden):
    fitted = extract_constant_term(1.5, modular(), height=1.5, bound=1e6)
    assert fitted == pytest.approx(golden["c_modular"]["1.5"], rel=1e-4)


def test_bianchi_closed_form_validated():
    v = bianchi_validation()
    assert v.passed, v


@pytest.mark.parametrize("lam", [2, 8, 32])
@pytest.mark.parametrize("case", [FactorKind.REAL, FactorKind.COMPLEX])
def test_plancherel(lam, case):
    v = bump_v(lam, 0.2, case)
    r, w, vals, _ = vhat_line(v)
    lhs = float(np.sum(w * np.abs(vals) ** 2))
    assert lhs == pytest.approx(v.l2_weighted(1.0), rel=1e-6)


def test_l2_bracket_lambda8():
    v = bump_v(8, 0.2)
    hi = math.exp(1.2 * math.log(8))
    assert hi * math.exp(-2) * 0.99 <= v.l2_weighted() <= hi


def test_vhat_matches_direct_quadrature():
    from scipy import integrate

    v = bump_v(8, 0.2)
    r = 1.7
    re = integrate.quad(lambda t: v(t) * math.exp(-0.5 * t) * math.cos(r * t), *v.support, limit=200)[0]
    im = integrate.quad(lambda t: -v(t) * math.exp(-0.5 * t) * math.sin(r * t), *v.support, limit=200)[0]
    assert vhat(v, [r])[0] == pytest.approx(complex(re, im) / math.sqrt(2 * math.pi), abs=1e-10)


def test_bump_validation():
    with pytest.raises(InvalidParameter):
        bump_v(0.5, 0.2)
    with pytest.raises(InvalidParameter):
        bump_v(4, 1.5)
    assert bump_v(2, 0.2).degenerate
    assert not bump_v(32, 0.2).degenerate
