import random
from fractions import Fraction

import numpy as np
import pytest

from semisimple_cohft.core_algebra import RATIONAL, EndSeries, VecSeries, as_matrix, zeros
from semisimple_cohft.correlator_engine import (
    CorrelatorTable,
    build_cohft,
    delta_step,
    exp_delta,
    gl_twist,
    keys_for,
    potential_terms,
    quantum_product,
    rescaled_trivial_theory,
    stable_signatures,
    string_dilaton_check,
    table_from_json,
    translate,
    trivial_theory,
    u_deform,
)
from semisimple_cohft.frobenius import diagonal_algebra, idempotent_decomposition, rank_one
from semisimple_cohft.moduli_oracle import wk_intersection
from semisimple_cohft.nodal_series import Ad, random_series, random_symmetric_bivector, random_symplectic, scalar_exp_series


def _entries(max_genus, max_points, dim):
    return [(g, key) for g, n in stable_signatures(max_genus, max_points) for key in keys_for(g, n, dim)]


def _same(T1, T2, max_genus=2, max_points=3):
    return all(T1.value(g, k) == T2.value(g, k) for g, k in _entries(max_genus, max_points, T1.dim))


@pytest.fixture(scope="module")
def one():
    return idempotent_decomposition(rank_one(), normalize=False)


@pytest.fixture(scope="module")
def pair():
    return idempotent_decomposition(diagonal_algebra([1, 1]), normalize=False)


@pytest.fixture(scope="module")
def pair23():
    return idempotent_decomposition(diagonal_algebra([2, 3]), normalize=False)


def test_trivial_rank_one_is_witten_kontsevich(one):
    T = trivial_theory(one)
    for g, key in _entries(3, 3, 1):
        assert T.value(g, key) == wk_intersection(g, [a for _, a in key])


def test_trivial_theory_weights_by_theta(pair23):
    T = trivial_theory(pair23)
    # e₀ = P₀ has θ = 2: ⟨τ₁⟩₁ θ⁰ and ⟨τ₀³⟩₀ θ¹ on the idempotent
    assert T(1, (0, 1)) == Fraction(1, 24)
    assert T(0, (0, 0), (0, 0), (0, 0)) == 2
    assert T(0, (0, 0), (1, 0), (1, 0)) == 0
    assert T(2, (1, 4)) == Fraction(1, 3) * Fraction(1, 1152)


def test_translation_by_zero_is_identity(pair):
    T = trivial_theory(pair)
    assert _same(translate(T, VecSeries.from_list([[0, 0]] * 4, RATIONAL)), T)


def test_translation_additivity(pair):
    T = trivial_theory(pair)
    a = VecSeries.from_list([[0, 0], [0, 0], [Fraction(1, 3), Fraction(-1, 2)], [Fraction(2, 5), 0]], RATIONAL)
    b = VecSeries.from_list([[0, 0], [0, 0], [Fraction(-1, 7), Fraction(1, 4)], [0, Fraction(3, 2)]], RATIONAL)
    assert _same(translate(translate(T, a), b), translate(T, a + b))


def test_z_linear_translation_rescales_the_algebra(one):
    from semisimple_cohft.correlator_engine import zeta1_translation_coefficients

    T = trivial_theory(one)
    z1 = Fraction(1, 3)
    R = rescaled_trivial_theory(one, np.array([z1], dtype=object))
    for g, key in [(1, ((0, 1),)), (2, ((0, 4),)), (0, ((0, 0),) * 3)]:
        n = len(key)
        assert R.value(g, key) == (1 + z1) ** (2 - 2 * g - n) * T.value(g, key)
        coeffs = zeta1_translation_coefficients(T, np.array([z1], dtype=object), g, key, 3)
        for k, c in enumerate(coeffs):
            e = 2 - 2 * g - n
            binom = Fraction(1)
            for i in range(k):
                binom = binom * (e - i) / (i + 1)
            assert c == binom * z1**k * T.value(g, key)


def test_gl_identity_is_identity(pair):
    T = trivial_theory(pair)
    assert _same(gl_twist(T, EndSeries.identity(2, 6, RATIONAL)), T)


def test_gl_rank_one_hodge_shift(one):
    h = Fraction(1, 5)
    T = gl_twist(trivial_theory(one), scalar_exp_series([0, h], 1, 3, RATIONAL))
    assert T(1, (0, 0)) == -h / 24


def test_gl_composition(pair):
    T = trivial_theory(pair)
    rng = random.Random(4)
    g1 = random_series(2, 6, rng, RATIONAL)
    g2 = random_series(2, 6, rng, RATIONAL)
    assert _same(gl_twist(T, g1 @ g2), gl_twist(gl_twist(T, g2), g1), 2, 2)


def test_delta_step_zero_bivector(one):
    T = trivial_theory(one)
    V = random_symmetric_bivector(rank_one(), 2, 1) * 0
    D = delta_step(T, V)
    assert all(D.value(g, k) == 0 for g, k in _entries(1, 2, 1))


def test_delta_step_calibration(one):
    # the velocity carries the overall minus sign: V = c·(1⊗1) gives −c/2 on M̄_{1,1},
    # so the Hodge bivector W = −h₁ produces +h₁/2
    c = Fraction(3, 7)
    V = zeros((1, 1, 1, 1), RATIONAL)
    V[0, 0] = as_matrix([[c]], RATIONAL)
    assert delta_step(trivial_theory(one), V)(1, (0, 0)) == -c / 2


def test_delta_flows_commute_and_add(pair):
    A = pair.algebra
    T = trivial_theory(pair)
    V = random_symmetric_bivector(A, 3, 5)
    W = random_symmetric_bivector(A, 3, 7)
    VW = exp_delta(exp_delta(T, V), W)
    assert _same(VW, exp_delta(exp_delta(T, W), V), 2, 2)
    assert _same(VW, exp_delta(T, V + W), 2, 2)


def test_gl_conjugation_covariance(pair):
    T = trivial_theory(pair)
    V = random_symmetric_bivector(pair.algebra, 6, 5)
    g = random_series(2, 6, random.Random(3), RATIONAL)
    assert _same(gl_twist(exp_delta(T, V), g), exp_delta(gl_twist(T, g), Ad(g, V)), 2, 3)


def test_build_cohft_identity_is_trivial(pair):
    assert _same(build_cohft(pair, EndSeries.identity(2, 6, RATIONAL)), trivial_theory(pair))


def test_build_cohft_hodge_series_keeps_genus_zero(one):
    h = Fraction(1, 5)
    C = build_cohft(one, scalar_exp_series([0, h], 1, 4, RATIONAL))
    for g, key in _entries(0, 5, 1):
        assert C.value(g, key) == wk_intersection(0, [a for _, a in key])
    assert C(1, (0, 0)) == h / 2


def test_build_cohft_satisfies_string_and_dilaton(pair):
    C = build_cohft(pair, random_symplectic(pair.algebra, 6, 1))
    assert string_dilaton_check(C, 2, 3).ok
    assert not string_dilaton_check(build_cohft(pair, random_symplectic(pair.algebra, 6, 1), include_translation=False), 2, 3).ok


def test_build_cohft_rejects_non_symplectic(pair):
    with pytest.raises(ValueError):
        build_cohft(pair, random_series(2, 4, random.Random(1), RATIONAL))


def test_u_deform_first_layer(pair23):
    T = trivial_theory(pair23)
    u = [Fraction(1, 3), Fraction(-2, 5)]
    D = u_deform(T, u, 3)
    key = ((0, 0), (1, 0), (1, 0))
    assert D.layer(0, 0, key) == T.value(0, key)
    expected = -sum(c * T.value(0, tuple(sorted(key + ((b, 0),)))) for b, c in enumerate(u))
    assert D.layer(1, 0, key) == expected
    assert _same(u_deform(T, [0, 0], 3), T, 1, 3)


def test_u_deformation_keeps_flat_identity(pair):
    C = build_cohft(pair, random_symplectic(pair.algebra, 6, 2))
    D = u_deform(C, [Fraction(1, 2), Fraction(1, 3)], 2)
    assert string_dilaton_check(D, 1, 3).ok


def test_quantum_product_of_trivial_theory(pair23):
    A = pair23.algebra
    qp = quantum_product(trivial_theory(pair23), [Fraction(1, 3), Fraction(1, 7)], 3)
    assert (qp.orders[0] == A.mult).all()
    assert qp.associative


def test_potential_terms_genus_zero_cubic(one):
    x = VecSeries.from_list([[Fraction(2)]], RATIONAL)
    F = potential_terms(trivial_theory(one), x, 1, 3)
    # F₀ = x³/3!, F₁ has no stable n ≤ 3 term without ψ
    assert F[0] == Fraction(8, 6)
    assert F[1] == 0


def test_table_json_round_trip(pair23):
    C = build_cohft(pair23, random_symplectic(pair23.algebra, 4, 9))
    tab = CorrelatorTable.from_theory(C, 1, 3)
    back = table_from_json(tab.to_json())
    assert back.equals(tab)
    assert string_dilaton_check(back).ok
