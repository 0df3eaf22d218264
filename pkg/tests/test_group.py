import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from cuspflow.errors import InvalidParameter
from cuspflow.group import (
    FactorKind,
    FlowDirection,
    GroupPoint,
    IwasawaCoords,
    compose,
    compose_batch,
    cusp_coords,
    dk_density_su2,
    haar_density,
    iwasawa_batch,
    iwasawa_decompose,
    random_sl2,
    unipotent,
)

finite = st.floats(-3.0, 3.0, allow_nan=False)
angle = st.floats(0.0, 2 * math.pi, exclude_max=True)


@pytest.mark.parametrize("kind", [FactorKind.REAL, FactorKind.COMPLEX])
def test_batch_recomposition(kind, rng):
    g = random_sl2(rng, 10_000, kind, scale=2.0)
    x, t, k = iwasawa_batch(g, kind)
    assert np.max(np.abs(compose_batch(x, t, k, kind) - g)) < 1e-10


@given(x=finite, t=finite, theta=angle)
def test_real_round_trip(x, t, theta):
    c = IwasawaCoords((x,), (t,), (theta,), (FactorKind.REAL,))
    back = iwasawa_decompose(compose(c))
    assert back.x[0] == pytest.approx(x, abs=1e-9)
    assert back.t[0] == pytest.approx(t, abs=1e-9)
    assert math.cos(back.k[0] - theta) == pytest.approx(1.0, abs=1e-12)


@given(xr=finite, xi=finite, t=finite,
       theta=st.floats(0.05, math.pi / 2 - 0.05), alpha=angle, beta=angle)
def test_complex_round_trip(xr, xi, t, theta, alpha, beta):
    c = IwasawaCoords((complex(xr, xi),), (t,), ((theta, alpha, beta),), (FactorKind.COMPLEX,))
    g = compose(c)
    assert compose(iwasawa_decompose(g)).distance_inf(g) < 1e-9
    assert iwasawa_decompose(g).t[0] == pytest.approx(t, abs=1e-9)


def test_group_point_normalizes_determinant():
    g = GroupPoint.single(2.0 * np.eye(2))
    assert np.linalg.det(g.factors[0]) == pytest.approx(1.0)
    with pytest.raises(InvalidParameter):
        GroupPoint.single(np.zeros((2, 2)))


def test_inverse_and_product():
    g = GroupPoint.single([[2.0, 1.0], [1.0, 1.0]])
    assert (g @ g.inverse()).distance_inf(GroupPoint.identity(["real"])) < 1e-14


def test_su2_density_integrates_to_one():
    # the theta density alone integrates to 1/(4 pi^2); alpha and beta add (2 pi)^2
    val, _ = integrate.quad(lambda th: dk_density_su2(th), 0.0, math.pi / 2)
    assert val * (2 * math.pi) ** 2 == pytest.approx(1.0, abs=1e-12)


def test_haar_density_is_exp_minus_mu_t():
    c = IwasawaCoords((0.0, 0j), (0.5, 0.25), (0.0, (0.1, 0, 0)), ("real", "complex"))
    assert haar_density(c) == pytest.approx(math.exp(-(0.5 + 2 * 0.25)))


def test_cusp_coords_two_factors_tn():
    g = GroupPoint((np.diag([math.exp(0.3), math.exp(-0.3)]), np.diag([math.exp(0.2), math.exp(-0.2)])),
                   ("real", "complex"))
    D = np.array([[1.0, 0.5], [-0.5, 0.25]])
    cc = cusp_coords(g, D=D)
    iw = iwasawa_decompose(g)
    assert cc.tn == pytest.approx(float(np.dot(iw.mu, iw.t)))


def test_flow_direction_invariant():
    assert FlowDirection.default(2).y == (1.0, 1.0)
    for bad in [(0.0,), (0.5, 0.5), (1.2,), (-0.1, 1.0)]:
        with pytest.raises(InvalidParameter):
            FlowDirection(bad)


def test_unipotent_is_lower_triangular():
    u = unipotent(2.5, [1.0]).factors[0]
    np.testing.assert_allclose(u, [[1.0, 0.0], [2.5, 1.0]])


@settings(max_examples=30)
@given(s1=st.floats(-5, 5), s2=st.floats(-5, 5))
def test_unipotent_is_a_one_parameter_group(s1, s2):
    lhs = unipotent(s1, [1.0]) @ unipotent(s2, [1.0])
    assert lhs.distance_inf(unipotent(s1 + s2, [1.0])) < 1e-12
