from fractions import Fraction

import pytest

from semisimple_cohft.frobenius import diagonal_algebra, euler_element, idempotent_decomposition, quantum_p1
from semisimple_cohft.tft_closed import (
    SurfaceSignature,
    cylinder,
    decomposition_propagator,
    handle_operator,
    left_elbow,
    normalized_propagator,
    propagator,
    s_diagram,
    self_sew,
    sew,
)


@pytest.fixture(scope="module")
def frame23():
    return idempotent_decomposition(diagonal_algebra([2, 3]), normalize=False)


def test_cylinder_is_identity(frame23):
    t = cylinder(frame23).matrix
    assert all(t[i, j] == (1 if i == j else 0) for i in range(2) for j in range(2))


def test_left_elbow_is_the_pairing(frame23):
    assert (left_elbow(frame23).matrix.reshape(2, 2) == frame23.algebra.pairing).all()


def test_s_diagram_equals_cylinder(frame23):
    assert s_diagram(frame23).equals(cylinder(frame23))


def test_closed_torus_counts_idempotents(frame23):
    p = propagator(frame23, SurfaceSignature(1, 0, 0))
    assert p.tensor.item() == 2
    assert p.metadata.get("closed_surface_ansatz")


def test_closed_genus_two_is_sum_of_inverse_thetas(frame23):
    p = propagator(frame23, (2, 0, 0))
    assert p.tensor.item() == Fraction(1, 2) + Fraction(1, 3)


@pytest.mark.parametrize("sig", [(0, 1, 1), (0, 2, 1), (1, 1, 1), (1, 2, 2), (2, 1, 0), (0, 0, 3), (3, 2, 2)])
def test_propagator_matches_elementary_sewing(frame23, sig):
    assert propagator(frame23, sig).equals(decomposition_propagator(frame23.algebra, sig))


def test_sewing_two_pants_adds_genus(frame23):
    pants_out = propagator(frame23, (0, 1, 2))
    pants_in = propagator(frame23, (0, 2, 1))
    torus_tube = sew(pants_out, pants_in, [(0, 0), (1, 1)])
    assert torus_tube.genus == 1
    assert torus_tube.equals(propagator(frame23, (1, 1, 1)))


def test_self_sew_adds_a_handle(frame23):
    assert self_sew(propagator(frame23, (0, 2, 2)), 1, 1).equals(propagator(frame23, (1, 1, 1)))


def test_handle_operator_is_multiplication_by_alpha(frame23):
    A = frame23.algebra
    h = handle_operator(frame23, 1)
    assert (h == A.mult_matrix(euler_element(A))).all()
    tube = propagator(frame23, (1, 1, 1)).matrix
    assert (tube == h).all()


def test_normalized_propagator_agrees_with_idempotent_form(complex_backend):
    fr = idempotent_decomposition(quantum_p1(1, complex_backend))
    for sig in [(0, 1, 2), (1, 1, 1), (2, 2, 0)]:
        assert normalized_propagator(fr, sig).equals(propagator(fr, sig))


def test_negative_counts_are_rejected():
    with pytest.raises(ValueError):
        SurfaceSignature(-1, 0, 0)
