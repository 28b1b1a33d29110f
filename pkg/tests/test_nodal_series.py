import random
from fractions import Fraction

import numpy as np
import pytest

from semisimple_cohft.core_algebra import RATIONAL, BiSeries, EndSeries, as_matrix, zeros
from semisimple_cohft.frobenius import diagonal_algebra, idempotent_decomposition, quantum_p1, rank_one
from semisimple_cohft.nodal_series import (
    B_from_ED,
    C_from_ED,
    NodalSymmetryError,
    NotSymplecticError,
    W_from_E,
    bivector,
    check_symplectic,
    consistency_4way,
    is_nodal_symmetric,
    random_admissible_D,
    random_series,
    random_symplectic,
    scalar_exp_series,
    series_exp,
    series_log,
    zeta_from_E,
)


@pytest.fixture(scope="module")
def p1():
    return quantum_p1(1)


def test_random_symplectic_is_symplectic(p1):
    for seed in range(5):
        assert check_symplectic(p1, random_symplectic(p1, 5, seed))


def test_generic_series_is_not_symplectic(p1):
    assert not check_symplectic(p1, random_series(2, 4, random.Random(1), RATIONAL))


def test_odd_scalar_exponential_is_symplectic():
    E = scalar_exp_series([0, Fraction(1, 3), 0, Fraction(2, 7)], 2, 6, RATIONAL)
    assert check_symplectic(diagonal_algebra([1, 5]), E)


def test_identity_propagator_gives_identity_nodal_forms(p1):
    E = random_symplectic(p1, 6, 3)
    assert B_from_ED(p1, E).is_identity()
    assert C_from_ED(p1, E).is_identity()


def test_four_way_chain_with_admissible_propagator(p1):
    E = random_symplectic(p1, 5, 11)
    D = random_admissible_D(p1, E, 4)
    B = B_from_ED(p1, E, D)
    C = C_from_ED(p1, E, D)
    rep = consistency_4way(p1, E, B, C, D)
    assert rep.ok, rep.agreements
    assert is_nodal_symmetric(p1, B)


def test_non_symmetric_propagator_is_rejected(p1):
    E = random_symplectic(p1, 3, 2)
    D = BiSeries.identity(2, 3, RATIONAL)
    D.coeffs[1, 0] = as_matrix([[1, 2], [0, 0]], RATIONAL)
    with pytest.raises(NodalSymmetryError):
        B_from_ED(p1, E, D)


def test_W_requires_symplectic_input(p1):
    with pytest.raises(NotSymplecticError):
        W_from_E(p1, random_series(2, 4, random.Random(5), RATIONAL))


def test_rank_one_W_for_hodge_series():
    h = Fraction(1, 5)
    E = scalar_exp_series([0, h], 1, 4, RATIONAL)
    W = W_from_E(rank_one(), E)
    # (e^{−h z₂} e^{−h z₁} − 1)/(z₁+z₂) = −h + h²(z₁+z₂)/2 − …
    assert W[0, 0][0, 0] == -h
    assert W[1, 0][0, 0] == W[0, 1][0, 0] == h * h / 2


def test_bivector_symmetry(p1):
    V = bivector(p1, W_from_E(p1, random_symplectic(p1, 5, 8)))
    K = V.shape[0] - 1
    for p in range(K + 1):
        for q in range(K + 1 - p):
            assert (V[p, q] == V[q, p].T).all()


def test_zeta_of_hodge_series_vanishes_and_exponents_are_read_off():
    h = Fraction(1, 5)
    fr = idempotent_decomposition(rank_one(), normalize=False)
    zd = zeta_from_E(fr, scalar_exp_series([0, h], 1, 4, RATIONAL))
    # E⁻¹(z)𝟏 = e^{−hz} ⇒ ζ = z e^{−hz} − z and a₁ = h
    assert zd.a[0][0] == h and all(v[0] == 0 for v in zd.a[1:])
    assert zd.zeta[2][0] == -h and zd.zeta[3][0] == h * h / 2


def test_scalar_log_and_exp_are_inverse():
    c = [Fraction(1), Fraction(1, 2), Fraction(-1, 3), Fraction(2, 5)]
    assert series_exp(series_log(c, RATIONAL), RATIONAL) == c
