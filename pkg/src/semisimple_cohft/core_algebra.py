"""Scalar backends, dense object-array linear algebra and truncated power series.

Two scalar backends are provided:

* :class:`RationalBackend` -- exact :class:`fractions.Fraction` arithmetic.
* :class:`ComplexBackend` -- ``mpmath`` complex numbers at a configurable
  precision, compared against an absolute/relative tolerance.

Matrices are ``numpy`` arrays of ``dtype=object`` so that both scalar types
flow through the same code.  Series types:

* :class:`EndSeries` -- ``Σ_k M_k z^k`` with ``N×N`` matrix coefficients,
* :class:`VecSeries` -- ``Σ_k v_k z^k`` with vector coefficients,
* :class:`BiSeries` -- ``Σ_{p+q≤K} M_{pq} z₁^p z₂^q`` with matrix coefficients
  (also used for bivectors, where ``M_{pq}[a, b]`` is the coefficient of
  ``e_a z₁^p ⊗ e_b z₂^q``).
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Iterable, Sequence

import mpmath
import numpy as np

__all__ = [
    "Backend",
    "RationalBackend",
    "ComplexBackend",
    "RATIONAL",
    "backend_from_spec",
    "SingularMatrixError",
    "SeriesError",
    "zeros",
    "identity",
    "as_matrix",
    "as_vector",
    "inverse",
    "solve",
    "determinant",
    "matrices_close",
    "max_abs",
    "EndSeries",
    "VecSeries",
    "BiSeries",
    "series_mul",
    "series_inverse",
    "divided_difference",
]


class SingularMatrixError(ArithmeticError):
    """Raised when a matrix that must be inverted is singular."""


class SeriesError(ValueError):
    """Raised on incompatible or invalid series data."""


# ---------------------------------------------------------------------------
# Scalar backends
# ---------------------------------------------------------------------------


class Backend:
    """Common interface of the scalar backends."""

    name: str = "abstract"
    exact: bool = False

    @property
    def zero(self) -> Any:
        return self.coerce(0)

    @property
    def one(self) -> Any:
        return self.coerce(1)

    def coerce(self, x: Any) -> Any:  # pragma: no cover - interface
        raise NotImplementedError

    def is_zero(self, x: Any) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def eq(self, a: Any, b: Any) -> bool:  # pragma: no cover - interface
        raise NotImplementedError

    def sqrt(self, x: Any) -> Any | None:  # pragma: no cover - interface
        raise NotImplementedError

    def abs(self, x: Any) -> float:
        return float(abs(x))

    def to_json(self, x: Any) -> Any:  # pragma: no cover - interface
        raise NotImplementedError

    def from_json(self, x: Any) -> Any:
        return parse_scalar(x, self)

    def describe(self) -> dict:
        return {"kind": self.name}

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Backend) and self.describe() == other.describe()

    def __hash__(self) -> int:
        return hash(tuple(sorted(self.describe().items())))


class RationalBackend(Backend):
    """Exact rational arithmetic with :class:`fractions.Fraction`."""

    name = "rational"
    exact = True

    def coerce(self, x: Any) -> Fraction:
        if isinstance(x, Fraction):
            return x
        if isinstance(x, (int, np.integer)):
            return Fraction(int(x))
        if isinstance(x, str):
            return Fraction(x.strip())
        if isinstance(x, float):
            return Fraction(x)
        if isinstance(x, (mpmath.mpf, mpmath.mpc)) or hasattr(x, "imag"):
            raise TypeError(f"cannot coerce inexact value {x!r} to a rational")
        return Fraction(x)

    def is_zero(self, x: Any) -> bool:
        return x == 0

    def eq(self, a: Any, b: Any) -> bool:
        return a == b

    def sqrt(self, x: Any) -> Fraction | None:
        """Return the non-negative rational square root, or ``None``."""
        x = self.coerce(x)
        if x < 0:
            return None
        num, den = x.numerator, x.denominator
        rn, rd = _isqrt_exact(num), _isqrt_exact(den)
        if rn is None or rd is None:
            return None
        return Fraction(rn, rd)

    def to_json(self, x: Any) -> str:
        x = self.coerce(x)
        return f"{x.numerator}/{x.denominator}"


def _isqrt_exact(n: int) -> int | None:
    from math import isqrt

    r = isqrt(n)
    return r if r * r == n else None


class ComplexBackend(Backend):
    """Arbitrary-precision complex arithmetic (``mpmath``) with a tolerance.

    Every backend owns a private ``mpmath`` context, so precision settings do
    not leak between backends or into the global ``mpmath.mp`` context.
    """

    name = "complex"
    exact = False

    def __init__(self, precision_bits: int = 256, tolerance: float = 1e-40):
        if tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if precision_bits < 53:
            raise ValueError("precision must be at least 53 bits")
        self.precision_bits = int(precision_bits)
        self.tolerance = float(tolerance)
        self.ctx = mpmath.MPContext()
        self.ctx.prec = self.precision_bits
        self._tol = self.ctx.mpf(self.tolerance)

    def describe(self) -> dict:
        return {
            "kind": self.name,
            "precision_bits": self.precision_bits,
            "tolerance": self.tolerance,
        }

    def coerce(self, x: Any) -> Any:
        ctx = self.ctx
        if isinstance(x, ctx.mpc):
            return x
        if isinstance(x, Fraction):
            return ctx.mpc(ctx.mpf(x.numerator) / x.denominator)
        if isinstance(x, (int, np.integer)):
            return ctx.mpc(int(x))
        if isinstance(x, str):
            return ctx.mpc(ctx.mpf(x))
        if isinstance(x, (list, tuple)) and len(x) == 2:
            return ctx.mpc(ctx.mpf(str(x[0])), ctx.mpf(str(x[1])))
        if hasattr(x, "imag"):
            return ctx.mpc(ctx.mpf(x.real), ctx.mpf(x.imag))
        return ctx.mpc(x)

    def is_zero(self, x: Any) -> bool:
        return abs(x) <= self._tol

    def eq(self, a: Any, b: Any) -> bool:
        scale = max(1, abs(a), abs(b))
        return abs(a - b) <= self._tol * scale

    def snap(self, x: Any) -> Any:
        """Remove real/imaginary parts below the tolerance."""
        x = self.coerce(x)
        re, im = x.real, x.imag
        if abs(re) <= self._tol * max(1, abs(im)):
            re = self.ctx.mpf(0)
        if abs(im) <= self._tol * max(1, abs(re)):
            im = self.ctx.mpf(0)
        return self.ctx.mpc(re, im)

    def sqrt(self, x: Any) -> Any:
        """Principal square root, after snapping sub-tolerance components."""
        return self.ctx.sqrt(self.snap(x))

    def to_json(self, x: Any) -> list:
        x = self.coerce(x)
        digits = max(15, int(self.precision_bits * 0.30103))
        return [self.ctx.nstr(x.real, digits), self.ctx.nstr(x.imag, digits)]


RATIONAL = RationalBackend()


def backend_from_spec(spec: dict | str | Backend | None) -> Backend:
    """Build a backend from a config fragment such as ``{"kind": "complex"}``."""
    if spec is None:
        return RATIONAL
    if isinstance(spec, Backend):
        return spec
    if isinstance(spec, str):
        spec = {"kind": spec}
    kind = spec.get("kind", "rational")
    if kind == "rational":
        return RATIONAL
    if kind == "complex":
        return ComplexBackend(
            int(spec.get("precision_bits", 256)), float(spec.get("tolerance", 1e-40))
        )
    raise ValueError(f"unknown backend kind {kind!r}")


def parse_scalar(x: Any, backend: Backend) -> Any:
    """Decode the JSON scalar encodings ``"p/q"`` and ``["re", "im"]``."""
    if isinstance(x, list):
        if backend.exact:
            if len(x) == 2 and Fraction(str(x[1])) == 0:
                return backend.coerce(Fraction(str(x[0])))
            raise TypeError("complex scalar in a rational context")
        return backend.coerce(x)
    if isinstance(x, str) and not backend.exact:
        return backend.coerce(Fraction(x))
    return backend.coerce(x)


# ---------------------------------------------------------------------------
# Dense matrices
# ---------------------------------------------------------------------------


def zeros(shape: int | tuple, backend: Backend) -> np.ndarray:
    out = np.empty(shape, dtype=object)
    z = backend.zero
    out.fill(z)
    return out


def identity(n: int, backend: Backend) -> np.ndarray:
    out = zeros((n, n), backend)
    one = backend.one
    for i in range(n):
        out[i, i] = one
    return out


def as_matrix(rows: Any, backend: Backend) -> np.ndarray:
    arr = np.array(rows, dtype=object)
    if arr.ndim != 2:
        raise ValueError("matrix input must be two-dimensional")
    return np.vectorize(backend.coerce, otypes=[object])(arr)


def as_vector(entries: Any, backend: Backend) -> np.ndarray:
    arr = np.array(entries, dtype=object)
    if arr.ndim != 1:
        raise ValueError("vector input must be one-dimensional")
    return np.vectorize(backend.coerce, otypes=[object])(arr) if arr.size else arr


def convert(arr: np.ndarray, backend: Backend) -> np.ndarray:
    """Coerce every entry of an object array into ``backend``."""
    if arr.size == 0:
        return arr.copy()
    return np.vectorize(backend.coerce, otypes=[object])(arr)


def _pivot(col: list, backend: Backend) -> int | None:
    best, best_abs = None, None
    for r, x in col:
        if backend.is_zero(x):
            continue
        if backend.exact:
            return r
        ax = abs(x)
        if best_abs is None or ax > best_abs:
            best, best_abs = r, ax
    return best


def solve(a: np.ndarray, b: np.ndarray, backend: Backend) -> np.ndarray:
    """Solve ``a @ x = b`` by Gauss-Jordan elimination (``b`` vector or matrix)."""
    n = a.shape[0]
    if a.shape != (n, n):
        raise ValueError("solve requires a square matrix")
    vec = b.ndim == 1
    rhs = b.reshape(n, -1) if vec else b
    m = np.concatenate([a.copy(), rhs.copy()], axis=1)
    for c in range(n):
        p = _pivot([(r, m[r, c]) for r in range(c, n)], backend)
        if p is None:
            raise SingularMatrixError(f"matrix is singular (column {c})")
        if p != c:
            m[[c, p]] = m[[p, c]]
        inv_p = backend.one / m[c, c]
        m[c] = m[c] * inv_p
        for r in range(n):
            if r != c and not backend.is_zero(m[r, c]):
                m[r] = m[r] - m[r, c] * m[c]
    out = m[:, n:]
    return out.reshape(n) if vec else out


def inverse(a: np.ndarray, backend: Backend) -> np.ndarray:
    return solve(a, identity(a.shape[0], backend), backend)


def determinant(a: np.ndarray, backend: Backend) -> Any:
    n = a.shape[0]
    m = a.copy()
    det = backend.one
    for c in range(n):
        p = _pivot([(r, m[r, c]) for r in range(c, n)], backend)
        if p is None:
            return backend.zero
        if p != c:
            m[[c, p]] = m[[p, c]]
            det = -det
        det = det * m[c, c]
        inv_p = backend.one / m[c, c]
        for r in range(c + 1, n):
            if not backend.is_zero(m[r, c]):
                m[r] = m[r] - (m[r, c] * inv_p) * m[c]
    return det


def max_abs(arr: np.ndarray) -> float:
    if arr.size == 0:
        return 0.0
    return float(max(abs(x) for x in arr.flat))


def matrices_close(a: np.ndarray, b: np.ndarray, backend: Backend) -> bool:
    if a.shape != b.shape:
        return False
    return all(backend.eq(x, y) for x, y in zip(a.flat, b.flat))


# ---------------------------------------------------------------------------
# One-variable series
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EndSeries:
    """Truncated series ``Σ_{k=0}^{K} M_k z^k`` of ``N×N`` matrices.

    ``coeffs`` has shape ``(K+1, N, N)``; all arithmetic truncates at ``z^K``.
    """

    coeffs: np.ndarray
    backend: Backend = field(default=RATIONAL)

    def __post_init__(self) -> None:
        c = self.coeffs
        if c.ndim != 3 or c.shape[1] != c.shape[2]:
            raise SeriesError("EndSeries coefficients must have shape (K+1, N, N)")

    # -- construction ------------------------------------------------------
    @classmethod
    def from_list(cls, mats: Sequence[Any], backend: Backend = RATIONAL) -> "EndSeries":
        arr = np.array([as_matrix(m, backend) for m in mats], dtype=object)
        return cls(arr, backend)

    @classmethod
    def identity(cls, n: int, order: int, backend: Backend = RATIONAL) -> "EndSeries":
        c = zeros((order + 1, n, n), backend)
        c[0] = identity(n, backend)
        return cls(c, backend)

    @classmethod
    def scalar(cls, coeffs: Sequence[Any], n: int, backend: Backend = RATIONAL) -> "EndSeries":
        """The series ``(Σ c_k z^k)·Id``."""
        c = zeros((len(coeffs), n, n), backend)
        for k, s in enumerate(coeffs):
            s = backend.coerce(s)
            for i in range(n):
                c[k, i, i] = s
        return cls(c, backend)

    # -- basic properties --------------------------------------------------
    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def __getitem__(self, k: int) -> np.ndarray:
        if k > self.order or k < 0:
            return zeros((self.dim, self.dim), self.backend)
        return self.coeffs[k]

    def _check(self, other: "EndSeries") -> None:
        if other.dim != self.dim:
            raise SeriesError(f"dimension mismatch: {self.dim} vs {other.dim}")
        if other.order != self.order:
            raise SeriesError(f"order mismatch: {self.order} vs {other.order}")

    def truncate(self, order: int) -> "EndSeries":
        if order <= self.order:
            return EndSeries(self.coeffs[: order + 1].copy(), self.backend)
        c = zeros((order + 1, self.dim, self.dim), self.backend)
        c[: self.order + 1] = self.coeffs
        return EndSeries(c, self.backend)

    # -- arithmetic --------------------------------------------------------
    def __add__(self, other: "EndSeries") -> "EndSeries":
        self._check(other)
        return EndSeries(self.coeffs + other.coeffs, self.backend)

    def __sub__(self, other: "EndSeries") -> "EndSeries":
        self._check(other)
        return EndSeries(self.coeffs - other.coeffs, self.backend)

    def __neg__(self) -> "EndSeries":
        return EndSeries(-self.coeffs, self.backend)

    def scale(self, s: Any) -> "EndSeries":
        return EndSeries(self.coeffs * self.backend.coerce(s), self.backend)

    def __matmul__(self, other: "EndSeries") -> "EndSeries":
        return series_mul(self, other)

    def inverse(self) -> "EndSeries":
        return series_inverse(self)

    def reflect(self) -> "EndSeries":
        """``z ↦ −z``."""
        c = self.coeffs.copy()
        c[1::2] = -c[1::2]
        return EndSeries(c, self.backend)

    def transpose(self) -> "EndSeries":
        return EndSeries(np.transpose(self.coeffs, (0, 2, 1)).copy(), self.backend)

    def adjoint(self, pairing: np.ndarray) -> "EndSeries":
        """Coefficient-wise adjoint ``M* = G⁻¹ Mᵀ G`` for the pairing matrix ``G``."""
        g_inv = inverse(pairing, self.backend)
        c = np.array([g_inv.dot(m.T).dot(pairing) for m in self.coeffs], dtype=object)
        return EndSeries(c.reshape(self.coeffs.shape), self.backend)

    def apply(self, v: np.ndarray) -> "VecSeries":
        return VecSeries(np.array([m.dot(v) for m in self.coeffs], dtype=object), self.backend)

    def exp(self) -> "EndSeries":
        """Exponential of a series with vanishing constant term."""
        if any(not self.backend.is_zero(x) for x in self.coeffs[0].flat):
            raise SeriesError("exp requires a vanishing constant term")
        result = EndSeries.identity(self.dim, self.order, self.backend)
        term = result
        for j in range(1, self.order + 1):
            term = series_mul(term, self).scale(Fraction(1, j))
            result = result + term
        return result

    def equals(self, other: "EndSeries", upto: int | None = None) -> bool:
        k = min(self.order, other.order) if upto is None else upto
        return all(matrices_close(self[j], other[j], self.backend) for j in range(k + 1))

    def is_identity(self, upto: int | None = None) -> bool:
        return self.equals(EndSeries.identity(self.dim, self.order, self.backend), upto)

    def max_deviation(self, other: "EndSeries") -> float:
        k = min(self.order, other.order)
        return max(max_abs(self[j] - other[j]) for j in range(k + 1))

    def convert(self, backend: Backend) -> "EndSeries":
        return EndSeries(convert(self.coeffs, backend), backend)

    def to_json(self) -> list:
        return [[[self.backend.to_json(x) for x in row] for row in m] for m in self.coeffs]

    @classmethod
    def from_json(cls, data: list, backend: Backend) -> "EndSeries":
        mats = [[[parse_scalar(x, backend) for x in row] for row in m] for m in data]
        return cls(np.array(mats, dtype=object), backend)


def series_mul(a: EndSeries, b: EndSeries) -> EndSeries:
    """Truncated Cauchy product ``Σ_{i+j=k} a_i b_j``."""
    a._check(b)
    k_max = a.order
    out = zeros(a.coeffs.shape, a.backend)
    for i in range(k_max + 1):
        ai = a.coeffs[i]
        for j in range(k_max + 1 - i):
            out[i + j] = out[i + j] + ai.dot(b.coeffs[j])
    return EndSeries(out, a.backend)


def series_inverse(a: EndSeries) -> EndSeries:
    """Two-sided inverse modulo ``z^{K+1}``; requires ``a_0`` invertible."""
    bk = a.backend
    try:
        a0_inv = inverse(a.coeffs[0], bk)
    except SingularMatrixError as exc:
        raise SingularMatrixError("series constant term is singular") from exc
    out = zeros(a.coeffs.shape, bk)
    out[0] = a0_inv
    for k in range(1, a.order + 1):
        acc = zeros((a.dim, a.dim), bk)
        for j in range(1, k + 1):
            acc = acc + a.coeffs[j].dot(out[k - j])
        out[k] = -a0_inv.dot(acc)
    return EndSeries(out, bk)


@dataclass(frozen=True, eq=False)
class VecSeries:
    """Truncated series ``Σ_k v_k z^k`` of vectors; ``coeffs`` has shape ``(K+1, N)``."""

    coeffs: np.ndarray
    backend: Backend = field(default=RATIONAL)

    @classmethod
    def from_list(cls, vecs: Sequence[Any], backend: Backend = RATIONAL) -> "VecSeries":
        return cls(np.array([as_vector(v, backend) for v in vecs], dtype=object), backend)

    @classmethod
    def zero(cls, n: int, order: int, backend: Backend = RATIONAL) -> "VecSeries":
        return cls(zeros((order + 1, n), backend), backend)

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[1]

    def __getitem__(self, k: int) -> np.ndarray:
        if k > self.order or k < 0:
            return zeros(self.dim, self.backend)
        return self.coeffs[k]

    def __add__(self, other: "VecSeries") -> "VecSeries":
        k = max(self.order, other.order)
        out = zeros((k + 1, self.dim), self.backend)
        for j in range(k + 1):
            out[j] = self[j] + other[j]
        return VecSeries(out, self.backend)

    def __neg__(self) -> "VecSeries":
        return VecSeries(-self.coeffs, self.backend)

    def __sub__(self, other: "VecSeries") -> "VecSeries":
        return self + (-other)

    def scale(self, s: Any) -> "VecSeries":
        return VecSeries(self.coeffs * self.backend.coerce(s), self.backend)

    def shift(self, by: int = 1) -> "VecSeries":
        """Multiply by ``z^by`` (the order grows accordingly)."""
        out = zeros((self.order + 1 + by, self.dim), self.backend)
        out[by:] = self.coeffs
        return VecSeries(out, self.backend)

    def is_zero(self) -> bool:
        return all(self.backend.is_zero(x) for x in self.coeffs.flat)

    def nonzero_orders(self) -> list[int]:
        return [k for k in range(self.order + 1) if any(not self.backend.is_zero(x) for x in self.coeffs[k])]

    def equals(self, other: "VecSeries") -> bool:
        k = max(self.order, other.order)
        return all(self.backend.eq(x, y) for j in range(k + 1) for x, y in zip(self[j], other[j]))

    def to_json(self) -> list:
        return [[self.backend.to_json(x) for x in v] for v in self.coeffs]


# ---------------------------------------------------------------------------
# Two-variable series
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BiSeries:
    """Truncated two-variable series ``Σ_{p+q≤K} M_{pq} z₁^p z₂^q``.

    ``coeffs`` has shape ``(K+1, K+1, N, N)``; entries with ``p+q > K`` are kept
    at zero.  The ``symmetric`` flag records that the object is meant to satisfy
    a symmetry constraint (checked by the caller, not enforced here).
    """

    coeffs: np.ndarray
    backend: Backend = field(default=RATIONAL)
    symmetric: bool = False

    @property
    def order(self) -> int:
        return self.coeffs.shape[0] - 1

    @property
    def dim(self) -> int:
        return self.coeffs.shape[2]

    def __getitem__(self, pq: tuple[int, int]) -> np.ndarray:
        p, q = pq
        if p < 0 or q < 0 or p + q > self.order:
            return zeros((self.dim, self.dim), self.backend)
        return self.coeffs[p, q]

    @classmethod
    def zero(cls, n: int, order: int, backend: Backend = RATIONAL) -> "BiSeries":
        return cls(zeros((order + 1, order + 1, n, n), backend), backend)

    @classmethod
    def identity(cls, n: int, order: int, backend: Backend = RATIONAL) -> "BiSeries":
        c = zeros((order + 1, order + 1, n, n), backend)
        c[0, 0] = identity(n, backend)
        return cls(c, backend)

    @classmethod
    def lift(cls, s: EndSeries, var: int) -> "BiSeries":
        """View a one-variable series in ``z₁`` (``var=1``) or ``z₂`` (``var=2``)."""
        k = s.order
        c = zeros((k + 1, k + 1, s.dim, s.dim), s.backend)
        for j in range(k + 1):
            if var == 1:
                c[j, 0] = s.coeffs[j]
            else:
                c[0, j] = s.coeffs[j]
        return cls(c, s.backend)

    @classmethod
    def from_function(cls, n: int, order: int, backend: Backend, fn: Callable[[int, int], Any]) -> "BiSeries":
        c = zeros((order + 1, order + 1, n, n), backend)
        for p in range(order + 1):
            for q in range(order + 1 - p):
                c[p, q] = fn(p, q)
        return cls(c, backend)

    def _check(self, other: "BiSeries") -> None:
        if other.dim != self.dim or other.order != self.order:
            raise SeriesError("BiSeries shape mismatch")

    def __add__(self, other: "BiSeries") -> "BiSeries":
        self._check(other)
        return BiSeries(self.coeffs + other.coeffs, self.backend)

    def __sub__(self, other: "BiSeries") -> "BiSeries":
        self._check(other)
        return BiSeries(self.coeffs - other.coeffs, self.backend)

    def __neg__(self) -> "BiSeries":
        return BiSeries(-self.coeffs, self.backend, self.symmetric)

    def scale(self, s: Any) -> "BiSeries":
        return BiSeries(self.coeffs * self.backend.coerce(s), self.backend, self.symmetric)

    def __matmul__(self, other: "BiSeries") -> "BiSeries":
        """Matrix product of coefficients with triangle truncation."""
        self._check(other)
        k = self.order
        out = zeros(self.coeffs.shape, self.backend)
        for p1 in range(k + 1):
            for q1 in range(k + 1 - p1):
                a = self.coeffs[p1, q1]
                if all(self.backend.is_zero(x) for x in a.flat):
                    continue
                for p2 in range(k + 1 - p1 - q1):
                    for q2 in range(k + 1 - p1 - q1 - p2):
                        out[p1 + p2, q1 + q2] = out[p1 + p2, q1 + q2] + a.dot(other.coeffs[p2, q2])
        return BiSeries(out, self.backend)

    def swap(self) -> "BiSeries":
        """``f(z₁, z₂) ↦ f(z₂, z₁)``."""
        return BiSeries(np.transpose(self.coeffs, (1, 0, 2, 3)).copy(), self.backend, self.symmetric)

    def transpose(self) -> "BiSeries":
        """Transpose every matrix coefficient."""
        return BiSeries(np.transpose(self.coeffs, (0, 1, 3, 2)).copy(), self.backend, self.symmetric)

    def adjoint(self, pairing: np.ndarray) -> "BiSeries":
        g_inv = inverse(pairing, self.backend)
        out = zeros(self.coeffs.shape, self.backend)
        for p in range(self.order + 1):
            for q in range(self.order + 1 - p):
                out[p, q] = g_inv.dot(self.coeffs[p, q].T).dot(pairing)
        return BiSeries(out, self.backend)

    def restrict(self, var: int) -> EndSeries:
        """Set ``z_var = 0``; the result is a series in the other variable."""
        k = self.order
        if var == 1:
            c = np.array([self.coeffs[0, j] for j in range(k + 1)], dtype=object)
        else:
            c = np.array([self.coeffs[j, 0] for j in range(k + 1)], dtype=object)
        return EndSeries(c.reshape(k + 1, self.dim, self.dim), self.backend)

    def antidiagonal(self, first_negated: bool = False) -> EndSeries:
        """Restrict to ``(z₁, z₂) = (z, −z)`` (or ``(−z, z)`` if ``first_negated``)."""
        k = self.order
        out = zeros((k + 1, self.dim, self.dim), self.backend)
        for p in range(k + 1):
            for q in range(k + 1 - p):
                sign = -1 if ((p if first_negated else q) % 2) else 1
                out[p + q] = out[p + q] + sign * self.coeffs[p, q]
        return EndSeries(out, self.backend)

    def truncate(self, order: int) -> "BiSeries":
        n = self.dim
        out = zeros((order + 1, order + 1, n, n), self.backend)
        for p in range(min(order, self.order) + 1):
            for q in range(min(order - p, self.order - p) + 1):
                out[p, q] = self.coeffs[p, q]
        return BiSeries(out, self.backend, self.symmetric)

    def equals(self, other: "BiSeries", upto: int | None = None) -> bool:
        k = min(self.order, other.order) if upto is None else upto
        return all(
            matrices_close(self[p, q], other[p, q], self.backend)
            for p in range(k + 1)
            for q in range(k + 1 - p)
        )

    def is_identity(self) -> bool:
        return self.equals(BiSeries.identity(self.dim, self.order, self.backend))

    def max_deviation(self, other: "BiSeries") -> float:
        k = min(self.order, other.order)
        return max(max_abs(self[p, q] - other[p, q]) for p in range(k + 1) for q in range(k + 1 - p))

    def to_json(self) -> list:
        """Triangle coefficients as ``[p, q, matrix]`` rows."""
        rows = []
        for p in range(self.order + 1):
            for q in range(self.order + 1 - p):
                rows.append([p, q, [[self.backend.to_json(x) for x in r] for r in self.coeffs[p, q]]])
        return rows


def divided_difference(f: BiSeries) -> BiSeries:
    """Return ``W′`` with ``(z₁+z₂)·W′ = f − Id``.

    ``f − Id`` must vanish on the anti-diagonal ``z₂ = −z₁``; this is checked
    degree by degree and a :class:`SeriesError` is raised otherwise.  The
    result has order ``K−1`` (one total degree is consumed by the division).
    """
    bk, n, k_max = f.backend, f.dim, f.order
    g = f - BiSeries.identity(n, k_max, bk)
    residue = g.antidiagonal()
    for k in range(k_max + 1):
        if any(not bk.is_zero(x) for x in residue.coeffs[k].flat):
            raise SeriesError(f"f − Id does not vanish on z₂ = −z₁ (total degree {k})")
    order = max(k_max - 1, 0)
    w = zeros((order + 1, order + 1, n, n), bk)
    for total in range(1, k_max + 1):
        # g_{total−j, j} = w_{total−j−1, j} + w_{total−j, j−1}
        prev = zeros((n, n), bk)
        for j in range(total):
            cur = g.coeffs[total - j, j] - prev
            w[total - 1 - j, j] = cur
            prev = cur
    return BiSeries(w, bk)
