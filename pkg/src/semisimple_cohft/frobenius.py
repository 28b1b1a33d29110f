"""Commutative Frobenius algebras, semi-simplicity and the canonical frame.

An algebra is given by structure constants ``c[i, j, k]`` (the coefficient of
``e_k`` in ``e_i·e_j``), a unit vector and a nondegenerate symmetric pairing
matrix ``G[i, j] = β(e_i, e_j)``.
"""
from __future__ import annotations

import random
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import sympy

from .core_algebra import (
    RATIONAL,
    Backend,
    ComplexBackend,
    SingularMatrixError,
    as_matrix,
    as_vector,
    convert,
    determinant,
    identity,
    inverse,
    parse_scalar,
    solve,
    zeros,
)

__all__ = [
    "FrobeniusAlgebra",
    "ValidationReport",
    "SemisimpleFrame",
    "NotSemisimpleError",
    "GenericityError",
    "validate",
    "euler_element",
    "is_semisimple",
    "idempotent_decomposition",
    "frame_from_idempotents",
    "adjoint",
    "rank_one",
    "diagonal_algebra",
    "quantum_p1",
    "quantum_p2",
    "dual_numbers",
]


class NotSemisimpleError(ValueError):
    """The algebra has nilpotents (degenerate trace form)."""


class GenericityError(RuntimeError):
    """No generic element with distinct eigenvalues was found."""


@dataclass(frozen=True, eq=False)
class FrobeniusAlgebra:
    """A commutative Frobenius algebra in a fixed basis."""

    mult: np.ndarray
    unit: np.ndarray
    pairing: np.ndarray
    basis_names: tuple[str, ...] = ()
    backend: Backend = field(default=RATIONAL)

    def __post_init__(self) -> None:
        n = self.unit.shape[0]
        if self.mult.shape != (n, n, n) or self.pairing.shape != (n, n):
            raise ValueError("inconsistent shapes for mult/unit/pairing")
        if not self.basis_names:
            object.__setattr__(self, "basis_names", tuple(f"e{i}" for i in range(n)))

    # -- construction ------------------------------------------------------
    @classmethod
    def create(
        cls,
        mult: Any,
        unit: Any,
        pairing: Any,
        basis_names: Sequence[str] | None = None,
        backend: Backend = RATIONAL,
    ) -> "FrobeniusAlgebra":
        m = np.array(mult, dtype=object)
        m = np.vectorize(backend.coerce, otypes=[object])(m)
        return cls(m, as_vector(unit, backend), as_matrix(pairing, backend), tuple(basis_names or ()), backend)

    @classmethod
    def from_json(cls, data: dict, backend: Backend = RATIONAL) -> "FrobeniusAlgebra":
        """Read the ``{dim, basis_names, mult_table, pairing, unit}`` schema."""
        n = int(data["dim"])
        conv = lambda x: parse_scalar(x, backend)  # noqa: E731
        mult = np.array([[[conv(x) for x in row] for row in plane] for plane in data["mult_table"]], dtype=object)
        unit = np.array([conv(x) for x in data["unit"]], dtype=object)
        pairing = np.array([[conv(x) for x in row] for row in data["pairing"]], dtype=object)
        if mult.shape != (n, n, n):
            raise ValueError(f"mult_table must have shape ({n}, {n}, {n})")
        names = tuple(data.get("basis_names") or ())
        if names and len(names) != n:
            raise ValueError("basis_names length differs from dim")
        return cls(mult, unit, pairing, names, backend)

    def to_json(self) -> dict:
        enc = self.backend.to_json
        return {
            "dim": self.dim,
            "basis_names": list(self.basis_names),
            "mult_table": [[[enc(x) for x in row] for row in plane] for plane in self.mult],
            "pairing": [[enc(x) for x in row] for row in self.pairing],
            "unit": [enc(x) for x in self.unit],
        }

    def with_backend(self, backend: Backend) -> "FrobeniusAlgebra":
        return FrobeniusAlgebra(
            convert(self.mult, backend),
            convert(self.unit, backend),
            convert(self.pairing, backend),
            self.basis_names,
            backend,
        )

    # -- structure -----------------------------------------------------------
    @property
    def dim(self) -> int:
        return self.unit.shape[0]

    def vector(self, entries: Any) -> np.ndarray:
        return as_vector(entries, self.backend)

    def basis_vector(self, i: int) -> np.ndarray:
        v = zeros(self.dim, self.backend)
        v[i] = self.backend.one
        return v

    def multiply(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.einsum("i,j,ijk->k", x, y, self.mult)

    def mult_matrix(self, x: np.ndarray) -> np.ndarray:
        """Matrix of ``y ↦ x·y`` (columns are images of basis vectors)."""
        return np.einsum("i,ijk->kj", x, self.mult)

    def beta(self, x: np.ndarray, y: np.ndarray) -> Any:
        return x.dot(self.pairing).dot(y)

    def theta(self, x: np.ndarray) -> Any:
        return self.beta(self.unit, x)

    @property
    def pairing_inverse(self) -> np.ndarray:
        cached = self.__dict__.get("_ginv")
        if cached is None:
            cached = inverse(self.pairing, self.backend)
            object.__setattr__(self, "_ginv", cached)
        return cached

    def power(self, x: np.ndarray, k: int) -> np.ndarray:
        out = self.unit.copy()
        for _ in range(k):
            out = self.multiply(out, x)
        return out


@dataclass
class ValidationReport:
    violations: list[str]

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def validate(A: FrobeniusAlgebra) -> ValidationReport:
    """Check commutativity, associativity, unit, Frobenius condition, nondegeneracy."""
    bk, n, c = A.backend, A.dim, A.mult
    bad: list[str] = []
    names = A.basis_names
    for i in range(n):
        for j in range(n):
            if any(not bk.eq(x, y) for x, y in zip(c[i, j], c[j, i])):
                bad.append(f"commutativity: {names[i]}·{names[j]} ≠ {names[j]}·{names[i]}")
    basis = [A.basis_vector(i) for i in range(n)]
    for i in range(n):
        for j in range(n):
            for k in range(n):
                lhs = A.multiply(A.multiply(basis[i], basis[j]), basis[k])
                rhs = A.multiply(basis[i], A.multiply(basis[j], basis[k]))
                if any(not bk.eq(x, y) for x, y in zip(lhs, rhs)):
                    bad.append(f"associativity: ({names[i]}{names[j]}){names[k]}")
    for i in range(n):
        prod = A.multiply(A.unit, basis[i])
        if any(not bk.eq(x, y) for x, y in zip(prod, basis[i])):
            bad.append(f"unit law fails on {names[i]}")
    g = A.pairing
    for i in range(n):
        for j in range(n):
            if not bk.eq(g[i, j], g[j, i]):
                bad.append(f"pairing not symmetric at ({names[i]}, {names[j]})")
    for i in range(n):
        for j in range(n):
            for k in range(n):
                lhs = A.beta(A.multiply(basis[i], basis[j]), basis[k])
                rhs = A.beta(basis[i], A.multiply(basis[j], basis[k]))
                if not bk.eq(lhs, rhs):
                    bad.append(
                        f"Frobenius condition: β({names[i]}{names[j]},{names[k]}) ≠ β({names[i]},{names[j]}{names[k]})"
                    )
    if bk.is_zero(determinant(g, bk)):
        bad.append("pairing is degenerate")
    return ValidationReport(bad)


def euler_element(A: FrobeniusAlgebra) -> np.ndarray:
    """The element ``α`` with ``θ(α·x) = Tr(x·)`` for every ``x``."""
    traces = np.array(
        [sum(np.diagonal(A.mult_matrix(A.basis_vector(b)))) for b in range(A.dim)], dtype=object
    )
    # θ(α x) = β(α, x) = (G α)_x
    return solve(A.pairing, traces, A.backend)


def trace_form(A: FrobeniusAlgebra) -> np.ndarray:
    n = A.dim
    out = zeros((n, n), A.backend)
    for a in range(n):
        for b in range(n):
            prod = A.multiply(A.basis_vector(a), A.basis_vector(b))
            out[a, b] = sum(np.diagonal(A.mult_matrix(prod)))
    return out


def is_semisimple(A: FrobeniusAlgebra) -> bool:
    """True iff the trace form ``(x, y) ↦ Tr(xy·)`` is nondegenerate."""
    return not A.backend.is_zero(determinant(trace_form(A), A.backend))


def adjoint(A: FrobeniusAlgebra, M: np.ndarray) -> np.ndarray:
    """β-adjoint ``M* = G⁻¹ Mᵀ G`` so that ``β(Mx, y) = β(x, M* y)``."""
    return A.pairing_inverse.dot(M.T).dot(A.pairing)


# ---------------------------------------------------------------------------
# Semi-simple frame
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SemisimpleFrame:
    """Idempotent decomposition of a semi-simple algebra.

    ``idempotents`` has the vectors ``P_i`` as columns.  ``sqrt_thetas`` and
    ``Pi`` (columns ``p_i = θ_i^{−1/2} P_i``) are ``None`` for a rational frame
    whose ``θ_i`` are not all rational squares.
    """

    algebra: FrobeniusAlgebra
    idempotents: np.ndarray
    thetas: tuple
    sqrt_thetas: tuple | None
    Pi: np.ndarray | None
    eigenvalues: tuple = ()

    @property
    def backend(self) -> Backend:
        return self.algebra.backend

    @property
    def dim(self) -> int:
        return self.algebra.dim

    @property
    def normalized(self) -> bool:
        return self.Pi is not None

    @property
    def coordinates(self) -> np.ndarray:
        """Inverse of the idempotent matrix: row ``i`` gives the ``P_i`` coefficient."""
        cached = self.__dict__.get("_coords")
        if cached is None:
            cached = inverse(self.idempotents, self.backend)
            object.__setattr__(self, "_coords", cached)
        return cached

    def idempotent(self, i: int) -> np.ndarray:
        return self.idempotents[:, i].copy()

    def require_normalized(self) -> "SemisimpleFrame":
        """Return a frame that carries ``Π`` (switching to complex if needed)."""
        if self.normalized:
            return self
        return _normalize(self, ComplexBackend(), warn=True)

    def with_backend(self, backend: Backend) -> "SemisimpleFrame":
        return frame_from_idempotents(
            self.algebra.with_backend(backend),
            convert(self.idempotents, backend),
            eigenvalues=tuple(backend.coerce(x) for x in self.eigenvalues),
            normalize=self.normalized,
        )

    def permuted(self, perm: Sequence[int]) -> "SemisimpleFrame":
        """Reorder the idempotents (``perm[k]`` is the old index of the new ``k``-th)."""
        idem = self.idempotents[:, list(perm)]
        eig = tuple(self.eigenvalues[p] for p in perm) if self.eigenvalues else ()
        return frame_from_idempotents(self.algebra, idem, eigenvalues=eig, normalize=self.normalized)

    def describe(self) -> dict:
        enc = self.backend.to_json
        return {
            "thetas": [enc(t) for t in self.thetas],
            "sqrt_thetas": None if self.sqrt_thetas is None else [enc(s) for s in self.sqrt_thetas],
            "branch": "principal" if not self.backend.exact else "positive rational",
        }


def _rational_roots(charpoly_coeffs: list) -> list | None:
    x = sympy.Symbol("x")
    poly = sympy.Poly([sympy.Rational(c.numerator, c.denominator) for c in charpoly_coeffs], x)
    roots = sympy.roots(poly, filter="Q")
    if sum(roots.values()) != poly.degree():
        return None
    return roots


def _charpoly_rational(M: np.ndarray) -> list:
    sm = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row] for row in M])
    coeffs = sm.charpoly().all_coeffs()
    from fractions import Fraction

    return [Fraction(int(sympy.fraction(c)[0]), int(sympy.fraction(c)[1])) for c in coeffs]


def _interpolation_idempotents(A: FrobeniusAlgebra, x: np.ndarray, eigs: list) -> np.ndarray:
    """``P_i = Π_{j≠i} (x − λ_j)/(λ_i − λ_j)`` evaluated in the algebra."""
    bk, n = A.backend, A.dim
    Lx = A.mult_matrix(x)
    cols = []
    for i in range(n):
        v = A.unit.copy()
        for j in range(n):
            if j != i:
                v = (Lx.dot(v) - eigs[j] * v) * (bk.one / (eigs[i] - eigs[j]))
        cols.append(v)
    return np.array(cols, dtype=object).T.copy()


def _sort_key(bk: Backend, lam: Any) -> tuple:
    if bk.exact:
        return (lam, 0)
    lam = bk.snap(lam)
    return (float(lam.real), float(lam.imag))


def idempotent_decomposition(
    A: FrobeniusAlgebra,
    seed: int = 0,
    attempts: int = 20,
    normalize: bool = True,
    generic_element: Sequence[Any] | None = None,
) -> SemisimpleFrame:
    """Compute ``P_i``, ``θ_i`` and (optionally) the normalized frame ``Π``.

    The idempotents are polynomials in a generic element ``x`` (first
    ``Σ (i+1) e_i``, then seeded random small-integer combinations), obtained by Lagrange
    interpolation at the eigenvalues of ``(x·)``; they are sorted by eigenvalue
    (lexicographically on (re, im)).  In the rational backend the eigenvalues
    must be rational; otherwise the computation moves to the complex backend
    with a warning.  With ``normalize=False`` a rational frame is returned
    even when some ``θ_i`` is not a rational square (``Π`` is then omitted).
    """
    if not is_semisimple(A):
        raise NotSemisimpleError("algebra is not semi-simple (trace form is degenerate)")
    bk, n = A.backend, A.dim
    rng = random.Random(seed)
    for attempt in range(attempts):
        if attempt == 0:
            x = A.vector(generic_element if generic_element is not None else range(1, n + 1))
        else:
            x = A.vector([rng.randint(-7, 7) or 1 for _ in range(n)])
        Lx = A.mult_matrix(x)
        if bk.exact:
            roots = _rational_roots(_charpoly_rational(Lx))
            if roots is None:
                warnings.warn(
                    "eigenvalues are not rational; switching to the complex backend",
                    RuntimeWarning,
                    stacklevel=2,
                )
                return idempotent_decomposition(
                    A.with_backend(ComplexBackend()), seed, attempts, normalize, generic_element
                )
            if any(m > 1 for m in roots.values()):
                continue
            eigs = [bk.coerce(sympy.Rational(r).p) / sympy.Rational(r).q for r in roots]
        else:
            ev = bk.ctx.eig(bk.ctx.matrix(Lx.tolist()), left=False, right=False)
            eigs = [bk.snap(e) for e in ev]
            gap = min(
                (abs(eigs[i] - eigs[j]) for i in range(n) for j in range(i + 1, n)), default=1
            )
            if gap <= bk.ctx.mpf(bk.tolerance) ** 0.5:
                continue
        eigs.sort(key=lambda lam: _sort_key(bk, lam))
        idem = _interpolation_idempotents(A, x, eigs)
        if not bk.exact:
            idem = _refine_idempotents(A, idem)
        return frame_from_idempotents(A, idem, eigenvalues=tuple(eigs), normalize=normalize)
    raise GenericityError(f"no generic element with distinct eigenvalues after {attempts} attempts")


def _refine_idempotents(A: FrobeniusAlgebra, idem: np.ndarray, steps: int = 3) -> np.ndarray:
    """Newton-style polishing ``P ↦ 3P² − 2P³`` of numerically computed idempotents."""
    cols = [idem[:, i] for i in range(idem.shape[1])]
    for _ in range(steps):
        new = []
        for p in cols:
            p2 = A.multiply(p, p)
            p3 = A.multiply(p2, p)
            new.append(3 * p2 - 2 * p3)
        cols = new
    return np.array(cols, dtype=object).T.copy()


def frame_from_idempotents(
    A: FrobeniusAlgebra,
    idempotents: np.ndarray,
    eigenvalues: tuple = (),
    normalize: bool = True,
) -> SemisimpleFrame:
    """Assemble a frame from given idempotent columns (checked to be a splitting)."""
    bk, n = A.backend, A.dim
    cols = [idempotents[:, i] for i in range(n)]
    for i in range(n):
        for j in range(n):
            prod = A.multiply(cols[i], cols[j])
            target = cols[i] if i == j else zeros(n, bk)
            if any(not bk.eq(a, b) for a, b in zip(prod, target)):
                raise ValueError(f"P_{i}·P_{j} is not δ_ij P_i")
    total = sum(cols[1:], cols[0].copy())
    if any(not bk.eq(a, b) for a, b in zip(total, A.unit)):
        raise ValueError("idempotents do not sum to the unit")
    thetas = tuple(A.theta(c) for c in cols)
    if any(bk.is_zero(t) for t in thetas):
        raise ValueError("some θ_i vanishes")
    frame = SemisimpleFrame(A, idempotents.copy(), thetas, None, None, tuple(eigenvalues))
    if not normalize:
        return frame
    return _normalize(frame, ComplexBackend(), warn=True)


def _normalize(frame: SemisimpleFrame, fallback: ComplexBackend, warn: bool) -> SemisimpleFrame:
    bk = frame.backend
    roots = [bk.sqrt(t) for t in frame.thetas]
    if any(r is None for r in roots):
        if warn:
            warnings.warn(
                "some θ_i is not a rational square; switching to the complex backend",
                RuntimeWarning,
                stacklevel=3,
            )
        converted = frame_from_idempotents(
            frame.algebra.with_backend(fallback),
            convert(frame.idempotents, fallback),
            eigenvalues=tuple(fallback.coerce(x) for x in frame.eigenvalues),
            normalize=False,
        )
        return _normalize(converted, fallback, warn=False)
    n = frame.dim
    Pi = zeros((n, n), bk)
    for i in range(n):
        Pi[:, i] = frame.idempotents[:, i] * (bk.one / roots[i])
    return SemisimpleFrame(frame.algebra, frame.idempotents, frame.thetas, tuple(roots), Pi, frame.eigenvalues)


# ---------------------------------------------------------------------------
# Catalogue of algebras
# ---------------------------------------------------------------------------


def rank_one(theta: Any = 1, backend: Backend = RATIONAL) -> FrobeniusAlgebra:
    """``ℂ`` with ``θ(1) = theta``."""
    return FrobeniusAlgebra.create([[[1]]], [1], [[theta]], ("1",), backend)


def diagonal_algebra(thetas: Sequence[Any], backend: Backend = RATIONAL) -> FrobeniusAlgebra:
    """``⊕ ℂ·e_i`` with ``e_i e_j = δ_ij e_i`` and ``β(e_i, e_i) = θ_i``."""
    n = len(thetas)
    mult = [[[1 if (i == j == k) else 0 for k in range(n)] for j in range(n)] for i in range(n)]
    pairing = [[thetas[i] if i == j else 0 for j in range(n)] for i in range(n)]
    return FrobeniusAlgebra.create(mult, [1] * n, pairing, tuple(f"P{i}" for i in range(n)), backend)


def quantum_p1(q: Any = 1, backend: Backend = RATIONAL) -> FrobeniusAlgebra:
    """Small quantum cohomology of ``P¹``: basis ``(1, h)``, ``h·h = q``."""
    mult = [[[1, 0], [0, 1]], [[0, 1], [q, 0]]]
    return FrobeniusAlgebra.create(mult, [1, 0], [[0, 1], [1, 0]], ("1", "h"), backend)


def quantum_p2(q: Any = 1, backend: Backend | None = None) -> FrobeniusAlgebra:
    """Small quantum cohomology of ``P²``: basis ``(1, H, H²)``, ``H³ = q``."""
    backend = backend or ComplexBackend()
    mult = [
        [[1, 0, 0], [0, 1, 0], [0, 0, 1]],
        [[0, 1, 0], [0, 0, 1], [q, 0, 0]],
        [[0, 0, 1], [q, 0, 0], [0, q, 0]],
    ]
    pairing = [[0, 0, 1], [0, 1, 0], [1, 0, 0]]
    return FrobeniusAlgebra.create(mult, [1, 0, 0], pairing, ("1", "H", "H2"), backend)


def dual_numbers(backend: Backend = RATIONAL) -> FrobeniusAlgebra:
    """``ℂ[x]/x²`` with ``θ(1) = 0``, ``θ(x) = 1`` (not semi-simple)."""
    mult = [[[1, 0], [0, 1]], [[0, 1], [0, 0]]]
    return FrobeniusAlgebra.create(mult, [1, 0], [[0, 1], [1, 0]], ("1", "x"), backend)


def is_invertible(A: FrobeniusAlgebra, x: np.ndarray) -> bool:
    try:
        inverse(A.mult_matrix(x), A.backend)
    except SingularMatrixError:
        return False
    return True


def identity_matrix(A: FrobeniusAlgebra) -> np.ndarray:
    return identity(A.dim, A.backend)
