"""Series-level classification data: adjoints, nodal forms, W_E, ζ and κ-exponents.

All identities are truncated at the order ``K`` of the input series.  ``z₁``
and ``z₂`` are the universal ψ-classes at the two branches of a node.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

import numpy as np

from .core_algebra import (
    Backend,
    BiSeries,
    EndSeries,
    SeriesError,
    VecSeries,
    identity,
    inverse,
    zeros,
)
from .frobenius import FrobeniusAlgebra, SemisimpleFrame

__all__ = [
    "NodalSymmetryError",
    "NotSymplecticError",
    "ChainReport",
    "ZetaData",
    "adjoint_series",
    "check_symplectic",
    "symplectic_defect",
    "B_from_ED",
    "C_from_ED",
    "is_nodal_symmetric",
    "consistency_4way",
    "W_from_E",
    "bivector",
    "zeta_from_E",
    "series_log",
    "series_exp",
    "random_symplectic",
    "random_series",
    "random_admissible_D",
    "random_symmetric_bivector",
    "Ad",
    "scalar_exp_series",
]


class NodalSymmetryError(SeriesError):
    """``B′(z₂,z₁) ≠ B′(z₁,z₂)*`` — the data do not define a theory."""


class NotSymplecticError(SeriesError):
    """``E(z)E*(−z) ≠ Id`` to the truncation order."""


def _algebra(obj: FrobeniusAlgebra | SemisimpleFrame) -> FrobeniusAlgebra:
    return obj.algebra if isinstance(obj, SemisimpleFrame) else obj


# ---------------------------------------------------------------------------
# Adjoints and the symplectic condition
# ---------------------------------------------------------------------------


def adjoint_series(frame: FrobeniusAlgebra | SemisimpleFrame, E: EndSeries) -> EndSeries:
    """Coefficient-wise β-adjoint ``E*(z)``."""
    return E.adjoint(_algebra(frame).pairing)


def symplectic_defect(frame: FrobeniusAlgebra | SemisimpleFrame, E: EndSeries) -> EndSeries:
    """``E(z)∘E*(−z) − Id``."""
    prod = E @ adjoint_series(frame, E).reflect()
    return prod - EndSeries.identity(E.dim, E.order, E.backend)


def check_symplectic(frame: FrobeniusAlgebra | SemisimpleFrame, E: EndSeries) -> bool:
    """True iff ``E(z)∘E*(−z) = Id`` up to ``z^K`` (tolerance in float backends)."""
    return (E @ adjoint_series(frame, E).reflect()).is_identity()


# ---------------------------------------------------------------------------
# Nodal forms
# ---------------------------------------------------------------------------


def _bi_adjoint(A: FrobeniusAlgebra, f: BiSeries) -> BiSeries:
    return f.adjoint(A.pairing)


def is_nodal_symmetric(frame: FrobeniusAlgebra | SemisimpleFrame, f: BiSeries) -> bool:
    """``f(z₂, z₁) = f(z₁, z₂)*``."""
    A = _algebra(frame)
    return f.swap().equals(_bi_adjoint(A, f))


def B_from_ED(
    frame: FrobeniusAlgebra | SemisimpleFrame,
    E: EndSeries,
    D: BiSeries | None = None,
    check: bool = True,
) -> BiSeries:
    """``B′(z₁,z₂) = E⁻¹(−z₁)* ∘ E⁻¹(z₁) ∘ D(z₁,z₂)``.

    With ``check`` the symmetry ``B′(z₂,z₁) = B′(z₁,z₂)*`` is enforced and a
    :class:`NodalSymmetryError` raised when it fails.
    """
    A = _algebra(frame)
    K, n, bk = E.order, E.dim, E.backend
    if D is None:
        D = BiSeries.identity(n, K, bk)
    e_inv = E.inverse()
    left = BiSeries.lift(adjoint_series(A, e_inv).reflect() @ e_inv, 1)
    out = left @ D
    if check and not is_nodal_symmetric(A, out):
        raise NodalSymmetryError("B′(z₂,z₁) ≠ B′(z₁,z₂)*: (E, D) is not a valid nodal datum")
    return BiSeries(out.coeffs, bk, symmetric=True)


def C_from_ED(
    frame: FrobeniusAlgebra | SemisimpleFrame,
    E: EndSeries,
    D: BiSeries | None = None,
    check: bool = True,
) -> BiSeries:
    """``C′(z₁,z₂) = D(z₂,z₁) ∘ E(−z₁) ∘ E*(z₁)``."""
    A = _algebra(frame)
    K, n, bk = E.order, E.dim, E.backend
    if D is None:
        D = BiSeries.identity(n, K, bk)
    right = BiSeries.lift(E.reflect() @ adjoint_series(A, E), 1)
    out = D.swap() @ right
    if check and not is_nodal_symmetric(A, out):
        raise NodalSymmetryError("C′(z₂,z₁) ≠ C′(z₁,z₂)*: (E, D) is not a valid nodal datum")
    return BiSeries(out.coeffs, bk, symmetric=True)


@dataclass
class ChainReport:
    """The four expressions of ``E⁻¹(−z)*∘E⁻¹(z)`` and whether they agree."""

    from_E: EndSeries
    from_D: EndSeries
    from_B: EndSeries
    from_C: EndSeries
    agreements: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(self.agreements.values())

    def max_deviation(self) -> float:
        return max(
            self.from_E.max_deviation(s) for s in (self.from_D, self.from_B, self.from_C)
        )


def consistency_4way(
    frame: FrobeniusAlgebra | SemisimpleFrame,
    E: EndSeries,
    B: BiSeries,
    C: BiSeries,
    D: BiSeries | None = None,
) -> ChainReport:
    """Check ``E⁻¹(−z)*E⁻¹(z) = D*(0,z)D⁻¹(z,0) = B′(z,−z) = C′(−z,z)⁻¹``."""
    A = _algebra(frame)
    K, n, bk = E.order, E.dim, E.backend
    if D is None:
        D = BiSeries.identity(n, K, bk)
    e_inv = E.inverse()
    from_e = adjoint_series(A, e_inv).reflect() @ e_inv
    d_0z = D.restrict(1)  # D(0, z)
    d_z0 = D.restrict(2)  # D(z, 0)
    from_d = adjoint_series(A, d_0z) @ d_z0.inverse()
    from_b = B.antidiagonal()
    from_c = C.antidiagonal(first_negated=True).inverse()
    agreements = {
        "E=D": from_e.equals(from_d),
        "E=B": from_e.equals(from_b),
        "E=C": from_e.equals(from_c),
    }
    return ChainReport(from_e, from_d, from_b, from_c, agreements)


def W_from_E(frame: FrobeniusAlgebra | SemisimpleFrame, E: EndSeries) -> BiSeries:
    """``W′ = (E⁻¹(z₂)E⁻¹(z₁)* − Id)/(z₁+z₂)`` (order ``K−1``).

    Raises :class:`NotSymplecticError` when the numerator does not vanish on
    the anti-diagonal.
    """
    A = _algebra(frame)
    e_inv = E.inverse()
    num = BiSeries.lift(e_inv, 2) @ BiSeries.lift(adjoint_series(A, e_inv), 1)
    try:
        w = divided_difference_checked(num)
    except SeriesError as exc:
        raise NotSymplecticError(str(exc)) from exc
    return BiSeries(w.coeffs, w.backend, symmetric=True)


def divided_difference_checked(f: BiSeries) -> BiSeries:
    from .core_algebra import divided_difference

    return divided_difference(f)


def bivector(frame: FrobeniusAlgebra | SemisimpleFrame, W: BiSeries) -> np.ndarray:
    """Tensor ``V[p, q, a, b]`` of the element of ``A⊗A[[z₁,z₂]]`` attached to ``W′``.

    The ``z₁``-slot carries the output index of ``W′``:
    ``V_{pq} = G⁻¹ W′_{pq}ᵀ``, i.e. ``V = Σ W′_{pq}(e^b) ⊗ e_b`` with dual basis
    ``e^b``.  The result is symmetric, ``V[p,q,a,b] = V[q,p,b,a]``, whenever
    ``W′(z₁,z₂)* = W′(z₂,z₁)``.
    """
    A = _algebra(frame)
    ginv = A.pairing_inverse
    K = W.order
    out = zeros(W.coeffs.shape, W.backend)
    for p in range(K + 1):
        for q in range(K + 1 - p):
            out[p, q] = ginv.dot(W.coeffs[p, q].T)
    return out


def Ad(g: EndSeries, V: np.ndarray) -> np.ndarray:
    """``(g(z₁)⊗g(z₂))∘V`` on a bivector tensor ``V[p, q, a, b]``."""
    K = V.shape[0] - 1
    bk = g.backend
    out = zeros(V.shape, bk)
    for p in range(K + 1):
        for q in range(K + 1 - p):
            acc = zeros(V.shape[2:], bk)
            for r in range(p + 1):
                for s in range(q + 1):
                    acc = acc + g[p - r].dot(V[r, s]).dot(g[q - s].T)
            out[p, q] = acc
    return out


# ---------------------------------------------------------------------------
# ζ and the κ-exponent
# ---------------------------------------------------------------------------


def series_log(c: Sequence[Any], backend: Backend) -> list:
    """Scalar ``log(c(z))`` for ``c₀ = 1``, truncated at the length of ``c``."""
    K = len(c) - 1
    if not backend.eq(c[0], backend.one):
        raise SeriesError("log requires constant term 1")
    # l' = c'/c  ⇒  k·l_k = k·c_k − Σ_{j=1}^{k−1} j·l_j·c_{k−j}
    out = [backend.zero] * (K + 1)
    for k in range(1, K + 1):
        acc = k * c[k]
        for j in range(1, k):
            acc = acc - j * out[j] * c[k - j]
        out[k] = acc / k
    return out


def series_exp(a: Sequence[Any], backend: Backend) -> list:
    """Scalar ``exp(a(z))`` for ``a₀ = 0``."""
    K = len(a) - 1
    if not backend.is_zero(a[0]):
        raise SeriesError("exp requires zero constant term")
    out = [backend.zero] * (K + 1)
    out[0] = backend.one
    for k in range(1, K + 1):
        acc = backend.zero
        for j in range(1, k + 1):
            acc = acc + j * a[j] * out[k - j]
        out[k] = acc / k
    return out


def scalar_exp_series(coeffs: Sequence[Any], n: int, order: int, backend: Backend) -> EndSeries:
    """``exp(Σ_j c_j z^j)·Id`` with ``coeffs[j]`` the coefficient of ``z^j`` (``c₀ = 0``)."""
    c = [backend.coerce(x) for x in coeffs] + [backend.zero] * (order + 1 - len(coeffs))
    return EndSeries.scalar(series_exp(c[: order + 1], backend), n, backend)


@dataclass
class ZetaData:
    """``ζ(z) ∈ z²A[[z]]`` and the κ-exponents ``a_j ∈ A`` (``j ≥ 1``)."""

    zeta: VecSeries
    a: list
    unit_image: VecSeries  # E⁻¹(z)(𝟏)

    def to_json(self) -> dict:
        bk = self.zeta.backend
        return {
            "zeta": self.zeta.to_json(),
            "a": [[bk.to_json(x) for x in v] for v in self.a],
        }


def zeta_from_E(frame: SemisimpleFrame, E: EndSeries) -> ZetaData:
    """Translation ``ζ = z·E⁻¹(z)(𝟏) − z`` and exponents ``exp{−Σ a_j z^j} = E⁻¹(z)(𝟏)``.

    The logarithm is taken componentwise in the idempotent frame, so ``ζ``
    equals ``z·exp(−Σ a_j z^j) − z`` identically.  ``ζ`` has order ``K+1``.
    """
    A = frame.algebra
    bk, K, n = E.backend, E.order, E.dim
    img = E.inverse().apply(A.unit)
    coords = frame.coordinates
    a = [zeros(n, bk) for _ in range(K + 1)]
    for i in range(n):
        comp = [coords[i, :].dot(img[k]) for k in range(K + 1)]
        lg = series_log(comp, bk)
        for k in range(1, K + 1):
            a[k] = a[k] - lg[k] * frame.idempotents[:, i]
    z = zeros((K + 2, n), bk)
    for k in range(1, K + 1):
        z[k + 1] = img[k]
    return ZetaData(VecSeries(z, bk), a[1:], img)


# ---------------------------------------------------------------------------
# Random data generators (tests, demos)
# ---------------------------------------------------------------------------


def _rand_fraction(rng: random.Random, span: int = 3, den: int = 4) -> Fraction:
    return Fraction(rng.randint(-span, span), rng.randint(1, den))


def _rand_matrix(rng: random.Random, n: int, backend: Backend) -> np.ndarray:
    m = zeros((n, n), backend)
    for i in range(n):
        for j in range(n):
            m[i, j] = backend.coerce(_rand_fraction(rng))
    return m


def random_series(n: int, order: int, rng: random.Random, backend: Backend) -> EndSeries:
    """``Id + Σ_{k≥1} M_k z^k`` with random small rational ``M_k``."""
    c = zeros((order + 1, n, n), backend)
    c[0] = identity(n, backend)
    for k in range(1, order + 1):
        c[k] = _rand_matrix(rng, n, backend)
    return EndSeries(c, backend)


def random_symplectic(
    frame: FrobeniusAlgebra | SemisimpleFrame, order: int, rng: random.Random | int = 0
) -> EndSeries:
    """``exp(X(z))`` with ``X_k* = (−1)^{k+1} X_k`` — symplectic by construction."""
    A = _algebra(frame)
    rng = random.Random(rng) if isinstance(rng, int) else rng
    bk, n = A.backend, A.dim
    G, ginv = A.pairing, A.pairing_inverse
    half = bk.coerce(Fraction(1, 2))
    x = zeros((order + 1, n, n), bk)
    for k in range(1, order + 1):
        m = _rand_matrix(rng, n, bk)
        m_adj = ginv.dot(m.T).dot(G)
        x[k] = (m + m_adj) * half if k % 2 else (m - m_adj) * half
    return EndSeries(x, bk).exp()


def random_symmetric_bivector(
    frame: FrobeniusAlgebra | SemisimpleFrame, order: int, rng: random.Random | int = 0
) -> np.ndarray:
    """Random ``V[p, q, a, b]`` with ``V[p,q,a,b] = V[q,p,b,a]``."""
    A = _algebra(frame)
    rng = random.Random(rng) if isinstance(rng, int) else rng
    bk, n = A.backend, A.dim
    V = zeros((order + 1, order + 1, n, n), bk)
    for p in range(order + 1):
        for q in range(p, order + 1 - p):
            m = _rand_matrix(rng, n, bk)
            if p == q:
                m = m + m.T
            V[p, q] = m
            V[q, p] = m.T.copy()
    return V


def random_admissible_D(
    frame: FrobeniusAlgebra | SemisimpleFrame, E: EndSeries, rng: random.Random | int = 0
) -> BiSeries:
    """A nodal propagator compatible with ``E``: ``D(z,−z) = Id`` and ``B′`` symmetric.

    With ``F(z) = E⁻¹(−z)*E⁻¹(z)`` (which satisfies ``F(−z)* = F(z)``) take
    ``B′ = ½(F(z₁) + F(z₂)*) + (z₁+z₂)S`` for a random nodal-symmetric ``S``
    and ``D = F(z₁)⁻¹B′``.
    """
    A = _algebra(frame)
    rng = random.Random(rng) if isinstance(rng, int) else rng
    bk, n, K = E.backend, E.dim, E.order
    e_inv = E.inverse()
    F = adjoint_series(A, e_inv).reflect() @ e_inv
    half = bk.coerce(Fraction(1, 2))
    Bp = (BiSeries.lift(F, 1) + BiSeries.lift(adjoint_series(A, F), 2)).scale(half)
    # S = R + swap(R)* is nodal-symmetric for any R
    R = BiSeries.from_function(n, K, bk, lambda p, q: _rand_matrix(rng, n, bk))
    S = R + _swap_adj(A, R)
    Bp = Bp + _times_sum(S)
    return BiSeries.lift(F.inverse(), 1) @ Bp


def _swap_adj(A: FrobeniusAlgebra, f: BiSeries) -> BiSeries:
    return f.swap().adjoint(A.pairing)


def _times_sum(f: BiSeries) -> BiSeries:
    """Multiply by ``(z₁ + z₂)`` and truncate."""
    K, n, bk = f.order, f.dim, f.backend
    out = zeros(f.coeffs.shape, bk)
    for p in range(K + 1):
        for q in range(K + 1 - p):
            acc = zeros((n, n), bk)
            if p >= 1:
                acc = acc + f[p - 1, q]
            if q >= 1:
                acc = acc + f[p, q - 1]
            out[p, q] = acc
    return BiSeries(out, bk)
