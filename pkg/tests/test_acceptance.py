"""Acceptance criteria AC-1 … AC-10 at their stated tolerances.

Each test is one clause of a criterion; the terminal summary (see
``conftest.py``) prints one PASS/FAIL line per criterion.  Clauses whose
literal statement is mathematically unattainable are kept verbatim as strict
expected failures, so the suite stays green while the criterion reports FAIL.
"""
import random
import time
from collections import Counter
from fractions import Fraction
from math import factorial

import numpy as np
import pytest
import sympy

from semisimple_cohft.core_algebra import RATIONAL, ComplexBackend, VecSeries
from semisimple_cohft.correlator_engine import (
    build_cohft,
    exp_delta,
    gl_twist,
    keys_for,
    rescaled_trivial_theory,
    stable_signatures,
    string_dilaton_check,
    translate,
    trivial_theory,
    zeta1_translation_coefficients,
)
from semisimple_cohft.frobenius import diagonal_algebra, euler_element, idempotent_decomposition, quantum_p1, rank_one
from semisimple_cohft.moduli_oracle import _wk, kappa_to_psi, moduli_dim, wk_intersection, wk_table
from semisimple_cohft.nodal_series import (
    Ad,
    B_from_ED,
    C_from_ED,
    check_symplectic,
    consistency_4way,
    random_admissible_D,
    random_series,
    random_symmetric_bivector,
    random_symplectic,
    scalar_exp_series,
    series_log,
    symplectic_defect,
)
from semisimple_cohft.reconstruction import (
    algebra_from_theory,
    quantum_p1_euler_data,
    quantum_p1_family,
    rank_one_euler_data,
    reconstruct_gw,
    recursion_residual,
    solve_rmatrix,
    verify_ode_u,
    wdvv_genus0_oracle,
)
from semisimple_cohft.tft_closed import SurfaceSignature, decomposition_propagator, propagator, s_diagram

acceptance = pytest.mark.acceptance


def _entries(max_genus, max_points, dim):
    return [(g, key) for g, n in stable_signatures(max_genus, max_points) for key in keys_for(g, n, dim)]


def _mismatches(T1, T2, max_genus, max_points):
    return sum(1 for g, k in _entries(max_genus, max_points, T1.dim) if T1.value(g, k) != T2.value(g, k))


# -- AC-1 ----------------------------------------------------------------------


@acceptance("AC-1", "⟨τ₀³⟩₀ = 1, ⟨τ₁⟩₁ = 1/24, ⟨τ₄⟩₂ = 1/1152 exactly")
def test_ac1_base_values():
    assert wk_intersection(0, (0, 0, 0)) == 1
    assert wk_intersection(1, (1,)) == Fraction(1, 24)
    assert wk_intersection(2, (4,)) == Fraction(1, 1152)
    assert all(isinstance(v, Fraction) for v in (wk_intersection(2, (4,)), wk_intersection(3, (2, 3, 3))))


@acceptance("AC-1", "⟨τ₀⁴⟩₀ = 1 as stated")
@pytest.mark.xfail(
    strict=True,
    reason="Σa = 0 ≠ dim M̄_{0,4} = 1, so ⟨τ₀⁴⟩₀ = 0; the stated value belongs to ⟨τ₀³τ₁⟩₀",
)
def test_ac1_four_point_literal():
    assert wk_intersection(0, (0, 0, 0, 0)) == 1


@acceptance("AC-1", "full table for 3g−3+n ≤ 9 in < 5 s, re-derived by string/dilaton and closed forms")
def test_ac1_table(record_property):
    _wk.cache_clear()
    t0 = time.perf_counter()
    table = wk_table(9)
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(table)} entries in {elapsed:.2f} s")
    assert elapsed < 5
    assert wk_intersection(0, (0, 0, 0, 1)) == 1
    for (g, exps), v in table.items():
        n = len(exps)
        if g == 0:
            expected = Fraction(factorial(n - 3))
            for a in exps:
                expected /= factorial(a)
            assert v == expected
        if n == 1:
            assert v == Fraction(1, 24**g * factorial(g))
        if n >= 2 and (g, n - 1) != (0, 2):
            rest = list(exps)
            if 0 in exps:  # string: drop one τ₀, lower each remaining exponent in turn
                rest.remove(0)
                lowered = sum(
                    table[(g, tuple(sorted(rest[:i] + [a - 1] + rest[i + 1 :])))] for i, a in enumerate(rest) if a
                )
                assert v == lowered, (g, exps)
            elif 1 in exps:  # dilaton: drop one τ₁
                rest.remove(1)
                assert v == (2 * g - 3 + n) * table[(g, tuple(rest))], (g, exps)


# -- AC-2 ----------------------------------------------------------------------


@acceptance("AC-2", "g ≤ 3, m+n ≤ 4 on θ=(2,3): propagator = elementary sewing; S-diagram exact")
def test_ac2_closed_tft(record_property):
    frame = idempotent_decomposition(diagonal_algebra([2, 3]), normalize=False)
    checked = 0
    for g in range(4):
        for total in range(5):
            for m in range(total + 1):
                sig = SurfaceSignature(g, m, total - m)
                assert propagator(frame, sig).equals(decomposition_propagator(frame.algebra, sig)), sig
                checked += 1
    assert s_diagram(frame).equals(propagator(frame, SurfaceSignature(0, 1, 1)))
    record_property("detail", f"{checked} signatures")


# -- AC-3 ----------------------------------------------------------------------


@acceptance("AC-3", "20 random symplectic E (order 6): B′ = C′ = Id and the four-way chain, exact")
def test_ac3_nodal_rational():
    A = diagonal_algebra([1, 2])
    for seed in range(20):
        E = random_symplectic(A, 6, seed)
        B, C = B_from_ED(A, E), C_from_ED(A, E)
        assert B.is_identity() and C.is_identity()
        assert consistency_4way(A, E, B, C).ok
        D = random_admissible_D(A, E, seed)
        rep = consistency_4way(A, E, B_from_ED(A, E, D), C_from_ED(A, E, D), D)
        assert rep.ok, (seed, rep.agreements)


@acceptance("AC-3", "same identities to 1e−30 in the 256-bit complex backend")
def test_ac3_nodal_float():
    bk = ComplexBackend()
    frame = idempotent_decomposition(quantum_p1(1, bk)).require_normalized()
    assert bk.tolerance <= 1e-30
    for seed in range(3):
        E = random_symplectic(frame, 6, seed)
        B, C = B_from_ED(frame, E), C_from_ED(frame, E)
        assert B.is_identity() and C.is_identity()
        assert consistency_4way(frame, E, B, C).ok


# -- AC-4 ----------------------------------------------------------------------


@pytest.fixture(scope="module")
def pair():
    return idempotent_decomposition(diagonal_algebra([1, 1]), normalize=False)


@acceptance("AC-4", "translation additivity on θ=(1,1), G=2, N=3")
def test_ac4_translation_additivity(pair):
    T = trivial_theory(pair)
    rng = random.Random(1)
    rnd = lambda: Fraction(rng.randint(-9, 9), rng.randint(1, 9))
    a = VecSeries.from_list([[0, 0], [0, 0]] + [[rnd(), rnd()] for _ in range(5)], RATIONAL)
    b = VecSeries.from_list([[0, 0], [0, 0]] + [[rnd(), rnd()] for _ in range(5)], RATIONAL)
    assert _mismatches(translate(translate(T, b), a), translate(T, a + b), 2, 3) == 0


@acceptance("AC-4", "δV/δW flow commutativity on θ=(1,1), G=2, N=3")
def test_ac4_flow_commutativity(pair):
    T = trivial_theory(pair)
    V = random_symmetric_bivector(pair.algebra, 6, 5)
    W = random_symmetric_bivector(pair.algebra, 6, 7)
    VW = exp_delta(exp_delta(T, V), W)
    assert _mismatches(VW, exp_delta(exp_delta(T, W), V), 2, 3) == 0
    assert _mismatches(VW, exp_delta(T, V + W), 2, 3) == 0


@acceptance("AC-4", "GL conjugation covariance g·e^V = e^{Ad_g V}·g on θ=(1,1), G=2, N=3, all laws < 60 s")
def test_ac4_gl_covariance(pair, record_property):
    t0 = time.perf_counter()
    T = trivial_theory(pair)
    V = random_symmetric_bivector(pair.algebra, 6, 5)
    g = random_series(2, 6, random.Random(3), RATIONAL)
    lhs = gl_twist(exp_delta(T, V), g)
    rhs = exp_delta(gl_twist(T, g), Ad(g, V))
    assert _mismatches(lhs, rhs, 2, 3) == 0
    elapsed = time.perf_counter() - t0
    record_property("detail", f"{len(_entries(2, 3, 2))} entries, {elapsed:.1f} s")
    assert elapsed < 60


# -- AC-5 ----------------------------------------------------------------------


@acceptance("AC-5", "rank-one ζ-translation (two coefficients) = closed κ-form via kappa_to_psi, g ≤ 2")
def test_ac5_kappa_formula():
    frame = idempotent_decomposition(rank_one(), normalize=False)
    K = 7
    zeta = [0, 0, Fraction(1, 3), Fraction(-2, 5)] + [0] * (K - 3)
    T = translate(trivial_theory(frame), VecSeries.from_list([[c] for c in zeta], RATIONAL))
    # exp(−Σ s_j κ_j) with Σ s_j z^j = −log(1 + ζ/z); α = 1 for θ = 1
    assert euler_element(frame.algebra)[0] == 1
    s = [-c for c in series_log([1] + [zeta[k + 1] for k in range(1, K)], RATIONAL)]

    def closed_form(g, psis):
        top = moduli_dim(g, len(psis)) - sum(psis)
        total = Fraction(0)

        def rec(lo, left, acc):
            nonlocal total
            if left == 0:
                c = Fraction(1)
                for j, m in Counter(acc).items():
                    c *= s[j] ** m / factorial(m)
                total += c * kappa_to_psi(g, acc, psis)
                return
            for j in range(lo, left + 1):
                rec(j, left - j, acc + [j])

        rec(1, top, [])
        return total

    for g, key in _entries(2, 3, 1):
        assert T.value(g, key) == closed_form(g, [a for _, a in key]), (g, key)


@acceptance("AC-5", "ζ₁-rescaling = α^g/(1+ζ₁)^{2g−1} through order ζ₁³, g = 1, 2")
def test_ac5_zeta1_rescaling():
    frame = idempotent_decomposition(rank_one(), normalize=False)
    T = trivial_theory(frame)
    z1 = Fraction(2, 7)
    for g in (1, 2):
        key = ((0, 3 * g - 2),)
        coeffs = zeta1_translation_coefficients(T, np.array([z1], dtype=object), g, key, 3)
        e = 1 - 2 * g
        for k, c in enumerate(coeffs):
            binom = Fraction(1)
            for i in range(k):
                binom = binom * (e - i) / (i + 1)
            assert c == binom * z1**k * T.value(g, key)
        R = rescaled_trivial_theory(frame, np.array([z1], dtype=object))
        assert R.value(g, key) == T.value(g, key) / (1 + z1) ** (2 * g - 1)


# -- AC-6 ----------------------------------------------------------------------


@acceptance("AC-6", "build_cohft for random symplectic E passes string/dilaton exactly")
def test_ac6_flat_identity(pair, record_property):
    checked = 0
    for seed in range(3):
        C = build_cohft(pair, random_symplectic(pair.algebra, 6, seed))
        rep = string_dilaton_check(C, 2, 3)
        assert rep.ok, rep.to_json()
        checked += rep.checked
    one = idempotent_decomposition(rank_one(), normalize=False)
    assert string_dilaton_check(build_cohft(one, scalar_exp_series([0, Fraction(1, 5), 0, Fraction(1, 7)], 1, 6, RATIONAL)), 2, 3).ok
    record_property("detail", f"{checked} relations")


@acceptance("AC-6", "omitting the ζ-stage breaks the relations (negative control)")
def test_ac6_negative_control(pair):
    E = random_symplectic(pair.algebra, 6, 0)
    assert not string_dilaton_check(build_cohft(pair, E, include_translation=False), 2, 3).ok


# -- AC-7 ----------------------------------------------------------------------


def _hodge_oracle(h1):
    """12h₁·∫_{M̄_{1,1}} ch₁(Λ) with ∫λ₁ from Mumford's κ₁ = 12λ₁ − δ + ψ."""
    kappa1 = kappa_to_psi(1, [1], [0])
    psi1 = wk_intersection(1, (1,))
    delta = wk_intersection(0, (0, 0, 0)) / 2  # one nonseparating node, automorphism 2
    lam1 = (kappa1 - psi1 + delta) / 12
    assert lam1 == Fraction(1, 24)
    b2 = Fraction(str(sympy.bernoulli(2)))
    exponent = h1 * factorial(2) / b2
    assert exponent == 12 * h1
    return exponent * lam1


@pytest.fixture(scope="module")
def hodge_tables():
    frame = idempotent_decomposition(rank_one())
    return {h: reconstruct_gw(frame, rank_one_euler_data(), 2, 3, h=[h]) for h in (Fraction(0), Fraction(1, 5), Fraction(1, 50))}


@acceptance("AC-7", "genus-0 entries identical to Witten–Kontsevich")
def test_ac7_genus_zero(hodge_tables):
    for tab in hodge_tables.values():
        for (g, key), v in tab.entries.items():
            if g == 0:
                assert v == wk_intersection(0, [a for _, a in key])


@acceptance("AC-7", "first-order shift of the genus-1 one-point ψ⁰ entry = oracle 12h₁·(1/24) = h₁/2")
def test_ac7_hodge_oracle(hodge_tables, record_property):
    base = hodge_tables[Fraction(0)].value(1, (0, 0))
    for h, tab in hodge_tables.items():
        if h:
            assert (tab.value(1, (0, 0)) - base) / h == _hodge_oracle(Fraction(1)) == Fraction(1, 2)
            assert tab.value(1, (0, 1)) == Fraction(1, 24)
    record_property("detail", f"ψ⁰ entry {hodge_tables[Fraction(1, 5)].value(1, (0, 0))} at h₁ = 1/5; ψ¹ entry 1/24")


@acceptance("AC-7", "genus-1 one-point ψ⁰ entry = 1/24 + h₁/2 as stated")
@pytest.mark.xfail(
    strict=True,
    reason="⟨τ₀⟩₁ = 0 by dimension, so the ψ⁰ entry is h₁/2 with no 1/24; 1/24 is the ψ¹ entry ⟨τ₁⟩₁",
)
def test_ac7_literal(hodge_tables):
    h = Fraction(1, 5)
    assert hodge_tables[h].value(1, (0, 0)) == Fraction(1, 24) + h / 2


# -- AC-8 ----------------------------------------------------------------------


@acceptance("AC-8", "QH(P¹) R-matrix to K = 8: recursion residual 0, symplectic to 1e−30, < 1 s")
def test_ac8_rmatrix(record_property):
    bk = ComplexBackend(256)
    frame = idempotent_decomposition(quantum_p1(1, bk)).require_normalized()
    data = quantum_p1_euler_data()
    t0 = time.perf_counter()
    E = solve_rmatrix(frame, data, 8)
    elapsed = time.perf_counter() - t0
    residual = recursion_residual(frame, data, E)
    defect = max(bk.abs(x) for x in symplectic_defect(frame, E).coeffs.ravel())
    record_property("detail", f"residual {residual:.1e}, symplectic defect {defect:.1e}, {elapsed:.3f} s")
    assert residual <= bk.tolerance
    assert defect <= 1e-30
    assert elapsed < 1


@acceptance("AC-8", "rank-one homogeneous data yields E = Id exactly")
def test_ac8_rank_one():
    frame = idempotent_decomposition(rank_one())
    for xi0 in (0, 3):
        E = solve_rmatrix(frame, rank_one_euler_data(xi0), 8)
        assert E.is_identity() and check_symplectic(frame, E)


# -- AC-9 ----------------------------------------------------------------------


@acceptance("AC-9", "ODE residual along q scales first-order: ratio within 20% of 10")
def test_ac9_ode(record_property):
    bk = ComplexBackend()
    fam = quantum_p1_family(bk)
    data = quantum_p1_euler_data()
    r3 = verify_ode_u(fam, data, [0, 1], bk.ctx.mpf("1e-3"))
    r4 = verify_ode_u(fam, data, [0, 1], bk.ctx.mpf("1e-4"))
    ratio = r3.max_residual / r4.max_residual
    record_property("detail", f"residuals {r3.max_residual:.3e} / {r4.max_residual:.3e}, ratio {ratio:.3f}")
    assert 8 <= ratio <= 12


# -- AC-10 ---------------------------------------------------------------------


@acceptance("AC-10", "reconstruct_gw for QH(P¹) returns the input product and pairing at u = 0")
def test_ac10_round_trip():
    bk = ComplexBackend()
    frame = idempotent_decomposition(quantum_p1(1, bk)).require_normalized()
    tab = reconstruct_gw(frame, quantum_p1_euler_data(), 1, 3)
    B = algebra_from_theory(tab.as_theory())
    A = frame.algebra
    assert all(bk.eq(x, y) for x, y in zip(B.mult.ravel(), A.mult.ravel()))
    assert all(bk.eq(x, y) for x, y in zip(B.pairing.ravel(), A.pairing.ravel()))
    assert all(bk.eq(x, y) for x, y in zip(B.unit, A.unit))


@acceptance("AC-10", "wdvv_genus0_oracle gives N₁…N₄ = 1, 1, 12, 620 in < 1 s")
def test_ac10_wdvv():
    t0 = time.perf_counter()
    N = wdvv_genus0_oracle(4)
    assert time.perf_counter() - t0 < 1
    assert N == [1, 1, 12, 620]
