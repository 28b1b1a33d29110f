from fractions import Fraction

import numpy as np
import pytest

from semisimple_cohft.core_algebra import RATIONAL, ComplexBackend, EndSeries, inverse, zeros
from semisimple_cohft.correlator_engine import build_cohft, required_series_order, string_dilaton_check
from semisimple_cohft.frobenius import diagonal_algebra, idempotent_decomposition, quantum_p1, rank_one
from semisimple_cohft.moduli_oracle import wk_intersection
from semisimple_cohft.nodal_series import check_symplectic, symplectic_defect
from semisimple_cohft.reconstruction import (
    BlockConstraintError,
    EulerData,
    EulerDataError,
    HodgeTwist,
    algebra_from_theory,
    basic_weights,
    check_homogeneity,
    hodge_ambiguity_apply,
    quantum_p1_euler_data,
    quantum_p1_family,
    rank_one_euler_data,
    reconstruct_gw,
    reconstruct_theory,
    recursion_residual,
    solve_rmatrix,
    validate_euler_data,
    verify_ode_u,
    wdvv_genus0_oracle,
)


@pytest.fixture(scope="module")
def bk():
    return ComplexBackend()


@pytest.fixture(scope="module")
def p1(bk):
    return idempotent_decomposition(quantum_p1(1, bk)).require_normalized()


@pytest.fixture(scope="module")
def p1_theory(p1):
    return reconstruct_theory(p1, quantum_p1_euler_data(), required_series_order(2, 4))


def test_quantum_p1_euler_data_is_valid():
    assert validate_euler_data(quantum_p1(1), quantum_p1_euler_data()) == []


def test_invalid_euler_data_is_reported():
    bad = EulerData.create([0, 2], [[0, 0], [0, 0]], 1)
    assert any("𝟏" in p for p in validate_euler_data(quantum_p1(1), bad))
    not_skew = EulerData.create([0, 2], [[Fraction(-1, 2), 1], [0, Fraction(1, 2)]], 1)
    assert any("skew" in p for p in validate_euler_data(quantum_p1(1), not_skew))


def test_euler_data_json_round_trip():
    d = quantum_p1_euler_data()
    assert EulerData.from_json(d.to_json(RATIONAL)).to_json(RATIONAL) == d.to_json(RATIONAL)
    with pytest.raises(EulerDataError):
        EulerData.from_json({"xi0": [0]})


def test_rmatrix_satisfies_recursion_and_is_symplectic(p1, bk):
    E = solve_rmatrix(p1, quantum_p1_euler_data(), 8)
    assert recursion_residual(p1, quantum_p1_euler_data(), E) <= 1e-30
    defect = max(bk.abs(x) for x in symplectic_defect(p1, E).coeffs.ravel())
    assert defect <= 1e-30


def test_canonical_rmatrix_conjugates_back(p1, bk):
    d = quantum_p1_euler_data()
    E = solve_rmatrix(p1, d, 4)
    H = solve_rmatrix(p1, d, 4, canonical=True)
    Pi_inv = inverse(p1.Pi, bk)
    for k in range(5):
        back = Pi_inv.dot(E[k]).dot(p1.Pi)
        assert all(bk.eq(a, b) for a, b in zip(back.ravel(), H[k].ravel()))


def test_rank_one_homogeneous_data_gives_identity():
    fr = idempotent_decomposition(rank_one())
    E = solve_rmatrix(fr, rank_one_euler_data(3), 6)
    assert E.is_identity()


def test_repeated_eigenvalue_with_nonzero_block_is_rejected():
    fr = idempotent_decomposition(diagonal_algebra([1, 1]))
    mu = [[0, Fraction(1, 2)], [Fraction(-1, 2), 0]]
    with pytest.raises(BlockConstraintError):
        solve_rmatrix(fr, EulerData.create([1, 1], mu, 0), 3)


def test_hodge_twist_is_symplectic_and_scalar():
    A = diagonal_algebra([1, 2])
    E = hodge_ambiguity_apply(EndSeries.identity(2, 5, RATIONAL), HodgeTwist((Fraction(1, 3), Fraction(1, 5))))
    assert check_symplectic(A, E)
    assert E[1][0, 0] == Fraction(1, 3) and E[1][0, 1] == 0


def test_p1_ancestor_values(p1_theory, bk):
    T, _ = p1_theory
    assert bk.eq(T(1, (1, 0)), bk.coerce(Fraction(-1, 24)))
    assert bk.eq(T(1, (0, 1)), bk.coerce(Fraction(1, 12)))
    assert bk.eq(T(0, (1, 0), (1, 0), (1, 0)), bk.one)
    assert bk.eq(T(0, (0, 0), (0, 0), (1, 0)), bk.one)
    assert bk.eq(T(0, (1, 0), (1, 0), (1, 0), (1, 0)), bk.one)


def test_p1_theory_is_homogeneous(p1_theory):
    T, _ = p1_theory
    rep = check_homogeneity(T, quantum_p1_euler_data(), 1, 3)
    assert rep.ok and rep.checked > 0
    assert all(w["ok"] for w in rep.weights.values())


def test_homogeneity_negative_control(p1, p1_theory, bk):
    _, E = p1_theory
    Sh = np.array([[bk.coerce(Fraction(1, 3)), bk.coerce(Fraction(1, 5))], [bk.coerce(Fraction(1, 5)), bk.coerce(Fraction(1, 7))]], dtype=object)
    Z = zeros((E.order + 1, 2, 2), bk)
    Z[1] = p1.Pi.dot(Sh).dot(inverse(p1.Pi, bk))
    T2 = build_cohft(p1, E @ EndSeries(Z, bk).exp())
    assert string_dilaton_check(T2, 1, 3).ok
    assert not check_homogeneity(T2, quantum_p1_euler_data(), 1, 3).ok


def test_basic_weights_for_p1(p1_theory):
    T, _ = p1_theory
    w = basic_weights(T, quantum_p1_euler_data())
    assert w and all(v["ok"] for v in w.values())


def test_ode_residual_is_first_order(bk):
    fam = quantum_p1_family(bk)
    d = quantum_p1_euler_data()
    r3 = verify_ode_u(fam, d, [0, 1], bk.ctx.mpf("1e-3"))
    r4 = verify_ode_u(fam, d, [0, 1], bk.ctx.mpf("1e-4"))
    assert abs(r3.max_residual / r4.max_residual - 10) <= 2
    assert verify_ode_u(fam, d, [0, 1], 0).max_residual == 0


def test_rank_one_reconstruction_is_witten_kontsevich():
    fr = idempotent_decomposition(rank_one())
    tab = reconstruct_gw(fr, rank_one_euler_data(), 2, 3)
    assert all(v == wk_intersection(g, [a for _, a in key]) for (g, key), v in tab.entries.items())


def test_rank_one_hodge_twist_first_order():
    fr = idempotent_decomposition(rank_one())
    h = Fraction(1, 5)
    tab = reconstruct_gw(fr, rank_one_euler_data(), 2, 3, h=[h])
    assert tab.value(1, (0, 0)) == h / 2
    assert tab.value(1, (0, 1)) == Fraction(1, 24)
    assert all(v == wk_intersection(0, [a for _, a in key]) for (g, key), v in tab.entries.items() if g == 0)


def test_genus_zero_round_trip(p1, bk):
    tab = reconstruct_gw(p1, quantum_p1_euler_data(), 1, 3)
    B = algebra_from_theory(tab.as_theory())
    A = p1.algebra
    assert all(bk.eq(x, y) for x, y in zip(B.mult.ravel(), A.mult.ravel()))
    assert all(bk.eq(x, y) for x, y in zip(B.pairing.ravel(), A.pairing.ravel()))


def test_wdvv_oracle():
    assert wdvv_genus0_oracle(5) == [1, 1, 12, 620, 87304]
