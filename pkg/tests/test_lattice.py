import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from cuspflow.errors import InvalidParameter
from cuspflow.group import GroupPoint, random_sl2
from cuspflow.lattice import (
    LatticeKind,
    LatticeSpec,
    bianchi,
    coset_rows,
    delta_batch,
    enumerate_cosets,
    gamma0,
    haar_sample,
    modular,
    reduce,
    reduce_batch,
    subgroup_cosets,
)


def _point(z: complex) -> GroupPoint:
    # n_x a_t with height y = e^t
    y = z.imag
    return GroupPoint.single([[math.sqrt(y), z.real / math.sqrt(y)], [0.0, 1 / math.sqrt(y)]])


def test_reduce_half_i():
    r = reduce(_point(0.5j), modular())
    assert r.height == pytest.approx(2.0)


@settings(max_examples=40, deadline=None)
@given(x=st.floats(-3, 3), y=st.floats(0.05, 3))
def test_reduction_height_is_brute_force_max(x, y):
    z = complex(x, y)
    best = y
    for c in range(0, 30):
        for d in range(-30, 31):
            if math.gcd(c, d) == 1 and (c, d) != (0, -1):
                best = max(best, y / abs(c * z + d) ** 2)
    assert reduce(_point(z), modular()).height == pytest.approx(best, rel=1e-10)


@pytest.mark.parametrize("L", [modular(), bianchi()], ids=["sl2z", "sl2zi"])
def test_reduced_point_is_in_the_same_coset(L, rng):
    g = random_sl2(rng, 200, L.factor, scale=3.0)
    reps, logh, moves = reduce_batch(g, L)
    gamma = reps @ np.linalg.inv(g)
    assert np.max(np.abs(gamma - np.round(gamma.real) - 1j * np.round(gamma.imag) * L.is_complex)) < 1e-8
    assert np.all(moves >= 0)
    # reduced: the (0, 1) row is the shortest coset row
    idx, _, _, w0, w1 = coset_rows(reps, L, 0.0, 4.0)
    nrm = np.abs(w0) ** 2 + np.abs(w1) ** 2
    shortest = np.full(len(reps), np.inf)
    np.minimum.at(shortest, idx, nrm)
    np.testing.assert_allclose(shortest, np.exp(-logh), rtol=1e-9)


def test_cosets_identity_modular():
    got = {r.bottom_row for r in enumerate_cosets(GroupPoint.identity(["real"]), modular(), 5)}
    assert got == {(0, 1), (1, 0), (1, 1), (1, -1), (1, 2), (2, 1), (1, -2), (2, -1)}


def test_cosets_identity_bianchi():
    got = {r.bottom_row for r in enumerate_cosets(GroupPoint.identity(["complex"]), bianchi(), 1)}
    assert got == {(0j, 1 + 0j), (1 + 0j, 0j)}


def test_gamma0_cosets_parity_filter():
    got = {r.bottom_row for r in subgroup_cosets(GroupPoint.identity(["real"]), gamma0(2), 5)}
    assert got == {(0, 1), (2, 1), (2, -1)}


def test_coset_counts_match_brute_force(golden):
    counts = golden["coset_counts_bound_1000"]
    eye = np.eye(2)[None]
    assert coset_rows(eye, modular(), 0.0, 1000.0)[0].size == counts["sl2z"]
    assert coset_rows(eye, gamma0(2), 0.0, 1000.0)[0].size == counts["gamma0_2"]
    # density ratio approaches the index [Gamma : Gamma_0(2)] = 3
    assert counts["sl2z"] / counts["gamma0_2"] == pytest.approx(gamma0(2).index, rel=0.02)


@pytest.mark.parametrize("kind", ["real", "complex"])
def test_completed_matrix_is_in_the_group(kind):
    L = modular() if kind == "real" else bianchi()
    g = GroupPoint.identity([kind])
    for rep in enumerate_cosets(g, L, 20):
        m = rep.completed_matrix
        assert m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0] == pytest.approx(1.0)
        assert tuple(m[1]) == pytest.approx(rep.bottom_row)


def test_lattice_spec_round_trip_and_parse():
    for L in (modular(), bianchi(), gamma0(3)):
        assert LatticeSpec.from_json(L.to_json()) == L
    assert LatticeSpec.parse("gamma0:2") == gamma0(2)
    assert LatticeSpec.parse("SL2Z").kind is LatticeKind.MODULAR_Z
    with pytest.raises(InvalidParameter):
        LatticeSpec.parse("sl3z")


def test_c0_values(golden):
    assert modular().c0 == pytest.approx(golden["c0_modular"], rel=1e-12)
    assert bianchi().c0 == pytest.approx(golden["c0_bianchi"], rel=1e-9)


def test_cusp_volume_at_r2(golden):
    rng = np.random.default_rng(11)
    d = delta_batch(haar_sample(modular(), rng, 200_000), modular())
    hit = (d > 2.0).mean()
    se = math.sqrt(hit * (1 - hit) / d.size)
    assert abs(hit - golden["cusp_volume_r2_modular"]) < 3 * se


def test_bottom_region_matches_quadrature():
    # sigma{ sqrt(3)/2 <= Im z <= 1 } by 2-d quadrature of dx dy / y^2 over the domain
    from scipy import integrate

    val, _ = integrate.dblquad(lambda y, x: 1 / y ** 2, -0.5, 0.5,
                               lambda x: math.sqrt(1 - x * x), lambda x: 1.0)
    expected = val / (math.pi / 3)
    rng = np.random.default_rng(5)
    d = delta_batch(haar_sample(modular(), rng, 100_000), modular())
    frac = (d <= 0.0).mean()
    se = math.sqrt(frac * (1 - frac) / d.size)
    assert abs(frac - expected) < 3 * se


@pytest.mark.parametrize("L", [modular(), bianchi()], ids=["sl2z", "sl2zi"])
def test_delta_samples_are_seed_stable(L):
    a = delta_batch(haar_sample(L, np.random.default_rng(1), 100_000), L)
    b = delta_batch(haar_sample(L, np.random.default_rng(2), 100_000), L)
    assert stats.ks_2samp(a, b).statistic < 0.01


def test_delta_invariant_under_the_group(rng):
    L = modular()
    g = random_sl2(rng, 500, "real")
    gamma = np.array([[1.0, 1.0], [0.0, 1.0]]) @ np.array([[0.0, -1.0], [1.0, 0.0]])
    np.testing.assert_allclose(delta_batch(gamma @ g, L), delta_batch(g, L), atol=1e-9)


def test_real_matrix_rejected_for_mismatch():
    with pytest.raises(InvalidParameter):
        reduce_batch(np.eye(2, dtype=complex)[None] * (1 + 0j), modular())
