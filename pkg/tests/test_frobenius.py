from fractions import Fraction

import numpy as np
import pytest

from semisimple_cohft.core_algebra import RATIONAL, ComplexBackend
from semisimple_cohft.frobenius import (
    FrobeniusAlgebra,
    NotSemisimpleError,
    diagonal_algebra,
    dual_numbers,
    euler_element,
    idempotent_decomposition,
    is_semisimple,
    quantum_p1,
    quantum_p2,
    rank_one,
    validate,
)


def test_catalogue_algebras_satisfy_the_axioms():
    for A in (rank_one(3), diagonal_algebra([2, 3]), quantum_p1(1), dual_numbers()):
        assert validate(A).ok


def test_non_invariant_pairing_is_reported():
    # β(h·h, 1) = 1 but β(h, h·1) = 2
    A = quantum_p1(1)
    bad = FrobeniusAlgebra(A.mult, A.unit, np.array([[Fraction(1), Fraction(0)], [Fraction(0), Fraction(2)]], dtype=object), A.basis_names, RATIONAL)
    assert not validate(bad).ok


def test_dual_numbers_are_not_semisimple():
    A = dual_numbers()
    assert not is_semisimple(A)
    with pytest.raises(NotSemisimpleError):
        idempotent_decomposition(A)


def test_diagonal_algebra_frame_recovers_thetas():
    fr = idempotent_decomposition(diagonal_algebra([4, 1]))
    assert sorted(fr.thetas) == [1, 4]
    assert fr.normalized and sorted(fr.sqrt_thetas) == [1, 2]


def test_quantum_p1_idempotents_and_thetas():
    fr = idempotent_decomposition(quantum_p1(1), normalize=False)
    # P± = (1 ± h)/2, θ(P±) = ±1/2
    assert sorted(fr.thetas) == [Fraction(-1, 2), Fraction(1, 2)]
    A = fr.algebra
    for i in range(2):
        p = fr.idempotents[:, i]
        assert (A.multiply(p, p) == p).all()


def test_non_square_theta_moves_to_complex_backend():
    with pytest.warns(RuntimeWarning):
        fr = idempotent_decomposition(quantum_p1(1))
    assert isinstance(fr.backend, ComplexBackend)
    bk = fr.backend
    for i in range(2):
        assert bk.eq(fr.sqrt_thetas[i] ** 2, fr.thetas[i])


def test_irrational_eigenvalues_switch_to_complex():
    with pytest.warns(RuntimeWarning):
        fr = idempotent_decomposition(quantum_p2(1, RATIONAL))
    assert fr.dim == 3 and not fr.backend.exact


def test_euler_element_is_sum_of_inverse_thetas():
    fr = idempotent_decomposition(diagonal_algebra([2, 3]), normalize=False)
    alpha = euler_element(fr.algebra)
    coords = fr.coordinates.dot(alpha)
    assert sorted(coords) == [Fraction(1, 3), Fraction(1, 2)]


def test_permuted_frame_swaps_idempotents():
    fr = idempotent_decomposition(diagonal_algebra([2, 3]), normalize=False)
    pf = fr.permuted([1, 0])
    assert pf.thetas == (fr.thetas[1], fr.thetas[0])


def test_json_round_trip():
    A = quantum_p1(Fraction(2, 3))
    B = FrobeniusAlgebra.from_json(A.to_json())
    assert (A.mult == B.mult).all() and (A.pairing == B.pairing).all()
