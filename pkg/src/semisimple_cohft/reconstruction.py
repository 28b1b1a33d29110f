"""Higher-genus reconstruction from a semi-simple point with Euler data.

Given the Frobenius algebra ``A`` at a semi-simple point, an Euler vector
``ξ₀``, a grading operator ``μ`` and a conformal weight ``d``, the recursion

    [(ξ₀·), E_{k+1}] + (μ + k)E_k = 0,   E₀ = Id

determines the series ``E(z)`` classifying the homogeneous CohFT with flat
identity.  In the normalized canonical frame ``(ξ₀·)`` is diagonal with
entries ``u_i`` and ``μ̄ = Π⁻¹μΠ`` is antisymmetric, so the off-diagonal part
of ``E_{k+1}`` is read off from ``E_k`` and its diagonal from the vanishing of
``diag((μ̄ + k + 1)E_{k+1})``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb
from typing import Any, Callable, Sequence

import numpy as np

from .core_algebra import (
    RATIONAL,
    Backend,
    ComplexBackend,
    EndSeries,
    identity,
    inverse,
    zeros,
)
from .correlator_engine import (
    CorrelatorTable,
    Key,
    Theory,
    _psi_total,
    build_cohft,
    keys_for,
    quantum_product,
    required_series_order,
    stable_signatures,
    string_dilaton_check,
    u_deform,
)
from .frobenius import (
    FrobeniusAlgebra,
    SemisimpleFrame,
    idempotent_decomposition,
    quantum_p1,
)
from .moduli_oracle import moduli_dim
from .nodal_series import check_symplectic, scalar_exp_series

__all__ = [
    "EulerDataError",
    "BlockConstraintError",
    "EulerData",
    "HodgeTwist",
    "CanonicalFrame",
    "validate_euler_data",
    "canonical_euler_frame",
    "solve_rmatrix",
    "recursion_residual",
    "hodge_ambiguity_apply",
    "HomogeneityReport",
    "euler_derivative",
    "check_homogeneity",
    "basic_weights",
    "OdeResidual",
    "verify_ode_u",
    "reconstruct_theory",
    "reconstruct_gw",
    "algebra_from_theory",
    "wdvv_genus0_oracle",
    "quantum_p1_euler_data",
    "quantum_p1_family",
    "rank_one_euler_data",
]

# The u-deformation sums (−1)^m/m! π_*Z(…, u^m); its first-order layer is
# therefore minus the derivative of the family along u.
DERIVATIVE_SIGN = -1


class EulerDataError(ValueError):
    """``μ(𝟏) ≠ −(d/2)𝟏`` or ``μ`` is not β-skew."""


class BlockConstraintError(ValueError):
    """A diagonal block of ``μ̄`` (repeated eigenvalue of ``ξ₀·``) does not vanish."""


# ---------------------------------------------------------------------------
# Euler data
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EulerData:
    """Constant part ``ξ₀`` of the Euler field, grading ``μ`` and weight ``d``."""

    xi0: np.ndarray
    mu: np.ndarray
    d: Any

    @classmethod
    def create(cls, xi0: Sequence[Any], mu: Sequence[Sequence[Any]], d: Any, backend: Backend = RATIONAL) -> "EulerData":
        v = np.array([backend.coerce(x) for x in xi0], dtype=object)
        m = np.array([[backend.coerce(x) for x in row] for row in mu], dtype=object)
        return cls(v, m, backend.coerce(d))

    @classmethod
    def from_json(cls, data: dict, backend: Backend = RATIONAL) -> "EulerData":
        missing = {"xi0", "mu", "d"} - set(data)
        if missing:
            raise EulerDataError(f"Euler data is missing {sorted(missing)}")
        return cls.create(
            [backend.from_json(x) for x in data["xi0"]],
            [[backend.from_json(x) for x in row] for row in data["mu"]],
            backend.from_json(data["d"]),
            backend,
        )

    def to_json(self, backend: Backend) -> dict:
        enc = backend.to_json
        return {
            "xi0": [enc(x) for x in self.xi0],
            "mu": [[enc(x) for x in row] for row in self.mu],
            "d": enc(self.d),
        }

    def with_backend(self, backend: Backend) -> "EulerData":
        return EulerData.create(self.xi0, self.mu, self.d, backend)

    def ad(self, backend: Backend) -> np.ndarray:
        """``ad_ξ = μ + (d/2 − 1)·Id`` on the flat frame."""
        n = self.mu.shape[0]
        shift = self.d * backend.coerce(Fraction(1, 2)) - backend.one
        return self.mu + identity(n, backend) * shift


@dataclass(frozen=True)
class HodgeTwist:
    """Odd coefficients ``h₁, h₃, h₅, …`` of ``E_h = exp(Σ h_{2j−1} z^{2j−1})``."""

    h: tuple

    def __post_init__(self) -> None:
        object.__setattr__(self, "h", tuple(self.h))

    def series_coeffs(self, order: int, backend: Backend) -> list:
        """Coefficients of ``Σ h_{2j−1}z^{2j−1}`` up to ``z^order``."""
        c = [backend.zero] * (order + 1)
        for j, hj in enumerate(self.h):
            k = 2 * j + 1
            if k <= order:
                c[k] = backend.coerce(hj)
        return c

    @property
    def is_zero(self) -> bool:
        return all(x == 0 for x in self.h)


def validate_euler_data(A: FrobeniusAlgebra, data: EulerData) -> list[str]:
    """Problems with ``(ξ₀, μ, d)`` on ``A`` (empty list when valid).

    Checks shapes, ``μ(𝟏) = −(d/2)·𝟏`` and β-skewness
    ``β(μx, y) + β(x, μy) = 0``.
    """
    bk, n = A.backend, A.dim
    problems: list[str] = []
    if data.xi0.shape != (n,) or data.mu.shape != (n, n):
        return [f"shape mismatch: ξ₀ {data.xi0.shape}, μ {data.mu.shape} for dimension {n}"]
    lhs = data.mu.dot(A.unit)
    rhs = A.unit * (-data.d * bk.coerce(Fraction(1, 2)))
    if any(not bk.eq(a, b) for a, b in zip(lhs, rhs)):
        problems.append("μ(𝟏) ≠ −(d/2)·𝟏")
    G = A.pairing
    skew = data.mu.T.dot(G) + G.dot(data.mu)
    if any(not bk.is_zero(x) for x in skew.ravel()):
        problems.append("μ is not β-skew: β(μx, y) + β(x, μy) ≠ 0")
    return problems


# ---------------------------------------------------------------------------
# Canonical frame and the R-matrix recursion
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class CanonicalFrame:
    """``(ξ₀·) = Π diag(u) Π⁻¹`` and ``μ̄ = Π⁻¹ μ Π`` in a normalized frame."""

    frame: SemisimpleFrame
    u: tuple
    mu_bar: np.ndarray
    blocks: tuple  # groups of indices with equal u_i

    @property
    def backend(self) -> Backend:
        return self.frame.backend

    @property
    def Pi(self) -> np.ndarray:
        return self.frame.Pi

    @property
    def Pi_inv(self) -> np.ndarray:
        return inverse(self.frame.Pi, self.backend)

    def block_of(self, i: int) -> int:
        for b, blk in enumerate(self.blocks):
            if i in blk:
                return b
        raise IndexError(i)


def canonical_euler_frame(frame: SemisimpleFrame, data: EulerData) -> CanonicalFrame:
    """Eigenvalues ``u_i`` of ``(ξ₀·)`` (its coordinates on the ``P_i``) and ``μ̄``."""
    frame = frame.require_normalized()
    bk = frame.backend
    xi0 = np.array([bk.coerce(x) for x in data.xi0], dtype=object)
    mu = np.array([[bk.coerce(x) for x in row] for row in data.mu], dtype=object)
    u = tuple(frame.coordinates.dot(xi0))
    Pi = frame.Pi
    mu_bar = inverse(Pi, bk).dot(mu).dot(Pi)
    blocks: list[list[int]] = []
    for i, ui in enumerate(u):
        for blk in blocks:
            if bk.eq(u[blk[0]], ui):
                blk.append(i)
                break
        else:
            blocks.append([i])
    return CanonicalFrame(frame, u, mu_bar, tuple(tuple(b) for b in blocks))


def _solve_canonical(cf: CanonicalFrame, order: int) -> list[np.ndarray]:
    bk = cf.backend
    n = len(cf.u)
    mu_bar = cf.mu_bar
    for blk in cf.blocks:
        for i in blk:
            for j in blk:
                if not bk.is_zero(mu_bar[i, j]):
                    raise BlockConstraintError(
                        f"μ̄ has a non-zero entry ({i},{j}) inside the block {list(blk)} of equal "
                        "eigenvalues of (ξ₀·); the recursion is not solvable there"
                    )
    block_id = [cf.block_of(i) for i in range(n)]
    coeffs = [identity(n, bk)]
    for k in range(order):
        prev = coeffs[-1]
        rhs = (mu_bar + identity(n, bk) * k).dot(prev)  # (μ̄ + k)Ê_k
        nxt = zeros((n, n), bk)
        for i in range(n):
            for j in range(n):
                if block_id[i] != block_id[j]:
                    nxt[i, j] = -rhs[i, j] / (cf.u[i] - cf.u[j])
        # diagonal blocks: ((μ̄ + k + 1)Ê_{k+1})_{ij} = 0 with μ̄ vanishing inside the block
        inv = bk.one / bk.coerce(k + 1)
        for i in range(n):
            for j in range(n):
                if block_id[i] != block_id[j]:
                    continue
                acc = bk.zero
                for l in range(n):
                    if block_id[l] != block_id[i]:
                        acc = acc + mu_bar[i, l] * nxt[l, j]
                nxt[i, j] = -acc * inv
        coeffs.append(nxt)
    return coeffs


def solve_rmatrix(
    frame: SemisimpleFrame,
    data: EulerData,
    order: int,
    canonical: bool = False,
) -> EndSeries:
    """Solve the homogeneity recursion to ``z^order``.

    Returns ``E`` in the user basis (``canonical=True``: ``Ê = Π⁻¹EΠ``).
    Raises :class:`BlockConstraintError` when ``(ξ₀·)`` has a repeated
    eigenvalue whose block of ``μ̄`` does not vanish.
    """
    if order < 0:
        raise ValueError("order must be non-negative")
    cf = canonical_euler_frame(frame, data)
    hat = _solve_canonical(cf, order)
    bk = cf.backend
    if canonical:
        return EndSeries(np.array(hat, dtype=object), bk)
    Pi, Pi_inv = cf.Pi, cf.Pi_inv
    return EndSeries(np.array([Pi.dot(m).dot(Pi_inv) for m in hat], dtype=object), bk)


def recursion_residual(frame: SemisimpleFrame, data: EulerData, E: EndSeries) -> float:
    """Largest entry of ``[(ξ₀·), E_{k+1}] + (μ+k)E_k`` (``k < K``), of ``E₀ − Id``,
    and of ``diag((μ̄+K)Ê_K)``, recomputed by substitution in the user basis."""
    frame = frame.require_normalized()
    bk = frame.backend
    data = data.with_backend(bk)
    A = frame.algebra
    X = A.mult_matrix(data.xi0)
    n, K = E.dim, E.order
    worst = max((bk.abs(x) for x in (E[0] - identity(n, bk)).ravel()), default=0.0)
    for k in range(K):
        r = X.dot(E[k + 1]) - E[k + 1].dot(X) + (data.mu + identity(n, bk) * k).dot(E[k])
        worst = max(worst, max(bk.abs(x) for x in r.ravel()))
    cf = canonical_euler_frame(frame, data)
    top = cf.Pi_inv.dot((data.mu + identity(n, bk) * K).dot(E[K])).dot(cf.Pi)
    for blk in cf.blocks:
        for i in blk:
            for j in blk:
                worst = max(worst, bk.abs(top[i, j]))
    return worst


def hodge_ambiguity_apply(E: EndSeries, h: HodgeTwist | Sequence[Any]) -> EndSeries:
    """``E·exp(Σ h_{2j−1} z^{2j−1})`` (a scalar, odd, hence symplectic factor)."""
    if not isinstance(h, HodgeTwist):
        h = HodgeTwist(tuple(h))
    bk = E.backend
    twist = scalar_exp_series(h.series_coeffs(E.order, bk), E.dim, E.order, bk)
    return E @ twist


# ---------------------------------------------------------------------------
# Homogeneity of the CohFT
# ---------------------------------------------------------------------------


def euler_derivative(T: Theory, data: EulerData) -> Callable[[int, Key], Any]:
    """``(g, key) ↦ ∂_{ξ₀}⟨key⟩_g`` from the first-order ``u``-deformation."""
    bk = T.backend
    D = u_deform(T, [bk.coerce(x) for x in data.xi0], order=1)
    sign = bk.coerce(DERIVATIVE_SIGN)
    return lambda g, key: sign * D.layer(1, g, key)


@dataclass
class HomogeneityReport:
    """Entry-wise balance ``∂_{ξ₀}S − Σ_i S∘ad^{(i)} = ((g−1)d + n − Δ)S``."""

    checked: int = 0
    failures: list = field(default_factory=list)
    max_defect: float = 0.0
    weights: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures and all(w["ok"] for w in self.weights.values())

    def to_json(self) -> dict:
        return {
            "checked": self.checked,
            "failures": [[str(x) for x in f] for f in self.failures[:20]],
            "max_defect": self.max_defect,
            "weights": self.weights,
            "ok": self.ok,
        }


def check_homogeneity(
    T: Theory,
    data: EulerData,
    max_genus: int,
    max_points: int,
    weights: bool = True,
) -> HomogeneityReport:
    """Verify ``ℒ⁺``-homogeneity of weight ``(g−1)d`` entry by entry.

    For insertions ``x_iψ^{a_i}`` the class has half-degree
    ``Δ = 3g−3+n−Σa``; the identity checked is

        ∂_{ξ₀}⟨x; a⟩_g − Σ_i ⟨…, ad_ξ(x_i), …⟩_g = ((g−1)d + n − Δ)·⟨x; a⟩_g

    with ``ad_ξ = μ + (d/2−1)``.  Entries need ``n+1`` points, so ``T`` must
    be exact up to moduli dimension ``dim M̄_{G, N+1}``.  With ``weights`` the
    basic weights of the product, ``β``, ``𝟏``, the projectors, ``θ_i``,
    ``θ`` and ``α`` are checked as well (see :func:`basic_weights`).
    """
    bk = T.backend
    data = data.with_backend(bk)
    ad = data.ad(bk)
    deriv = euler_derivative(T, data)
    rep = HomogeneityReport()
    n_dim = T.dim
    for g, n in stable_signatures(max_genus, max_points):
        for key in keys_for(g, n, n_dim):
            val = T.value(g, key)
            lhs = deriv(g, key)
            for idx, (b, a) in enumerate(key):
                for c in range(n_dim):
                    if bk.is_zero(ad[c, b]):
                        continue
                    rest = list(key)
                    rest[idx] = (c, a)
                    lhs = lhs - ad[c, b] * T.value(g, tuple(sorted(rest)))
            delta = moduli_dim(g, n) - _psi_total(key)
            rhs = val * (data.d * (g - 1) + n - delta)
            rep.checked += 1
            dev = bk.abs(lhs - rhs)
            rep.max_defect = max(rep.max_defect, dev)
            if not bk.eq(lhs, rhs):
                rep.failures.append((g, key, lhs, rhs))
    if weights:
        rep.weights = basic_weights(T, data)
    return rep


def basic_weights(T: Theory, data: EulerData) -> dict:
    """``ℒ``- and ``ℒ⁺``-weights of the basic objects at the base point.

    ``ℒ`` acts on a flat vector ``x`` by ``ad_ξ(x)`` and on tensors by the
    Leibniz rule plus ``∂_{ξ₀}``; ``ℒ⁺ = ℒ + (#outputs − #inputs)``.  The
    derivative of the product comes from the ``(0, 4)`` entries; that of a
    projector from ``(1 − 2P·)P′ = c′(P, P)``.
    """
    bk = T.backend
    A = T.frame.algebra
    n = A.dim
    data = data.with_backend(bk)
    ad = data.ad(bk)
    d = data.d
    qp = quantum_product(T, [bk.coerce(x) for x in data.xi0], order=1)
    c0 = qp.orders[0]
    dc = qp.orders[1] * bk.coerce(DERIVATIVE_SIGN)  # ∂_{ξ₀} c, shape (i, j, :)
    G = A.pairing
    unit = A.unit

    def mul(x: np.ndarray, y: np.ndarray, c: np.ndarray = c0) -> np.ndarray:
        out = zeros(n, bk)
        for i in range(n):
            for j in range(n):
                if not bk.is_zero(x[i]) and not bk.is_zero(y[j]):
                    out = out + c[i, j, :] * (x[i] * y[j])
        return out

    def close(a: np.ndarray, b: np.ndarray) -> bool:
        return all(bk.eq(x, y) for x, y in zip(np.ravel(a), np.ravel(b)))

    out: dict = {}

    def record(name: str, ok: bool, L: Any, Lplus: Any) -> None:
        enc = lambda x: bk.to_json(bk.coerce(x))  # noqa: E731
        out[name] = {"L": enc(L), "L+": enc(Lplus), "ok": bool(ok)}

    # product: (ℒc)(x, y) = ∂c(x,y) + ad c(x,y) − c(ad x, y) − c(x, ad y) = 1·c
    Lc = zeros((n, n, n), bk)
    for i in range(n):
        for j in range(n):
            ei, ej = A.basis_vector(i), A.basis_vector(j)
            v = dc[i, j, :] + ad.dot(c0[i, j, :]) - mul(ad[:, i], ej) - mul(ei, ad[:, j])
            Lc[i, j, :] = v
    record("product", close(Lc, c0), 1, 0)
    # pairing: (ℒβ)(x, y) = −β(ad x, y) − β(x, ad y) = (2−d)β
    Lb = -(ad.T.dot(G) + G.dot(ad))
    record("pairing", close(Lb, G * (2 - d)), 2 - d, -d)
    # unit: ℒ𝟏 = ad(𝟏) = −𝟏
    record("unit", close(ad.dot(unit), -unit), -1, 0)
    # projectors and θ_i
    frame = T.frame
    proj_ok, theta_ok = True, True
    alpha = zeros(n, bk)
    L_alpha = zeros(n, bk)
    for i in range(frame.dim):
        P = frame.idempotents[:, i]
        LP_mat = identity(n, bk) - A.mult_matrix(P) * 2
        dP = inverse(LP_mat, bk).dot(mul(P, P, dc))
        LP = dP + ad.dot(P)
        proj_ok &= close(LP, -P)
        th = A.beta(P, P)
        dth = 2 * A.beta(dP, P)
        theta_ok &= bk.eq(dth, -d * th)
        alpha = alpha + P * (bk.one / th)
        # ℒ(θ_i⁻¹P_i) = −θ_i⁻²(∂θ_i)P_i + θ_i⁻¹ℒP_i
        L_alpha = L_alpha + P * (-dth / (th * th)) + LP * (bk.one / th)
    record("projector", proj_ok, -1, 0)
    record("theta_i", theta_ok, -d, -d)
    # θ as a 1-form: (ℒθ)(x) = −θ(ad x) = (1−d)θ
    theta_form = G.dot(unit)
    record("theta", close(-ad.T.dot(theta_form), theta_form * (1 - d)), 1 - d, -d)
    record("alpha", close(L_alpha, alpha * (d - 1)), d - 1, d)
    # (α·): ℒ(α·) = (ℒα)· + [ad, α·] − (α·)∘ad + … reduces to (d−1+1)(α·) when c has weight 1
    Ma = A.mult_matrix(alpha)
    dMa = zeros((n, n), bk)
    for j in range(n):
        dMa[:, j] = mul(L_alpha, A.basis_vector(j)) + mul(alpha, A.basis_vector(j), Lc)
    record("alpha_mult", close(dMa, Ma * d), d, d)
    return out


# ---------------------------------------------------------------------------
# Variation along the Frobenius manifold
# ---------------------------------------------------------------------------


@dataclass
class OdeResidual:
    eps: Any
    per_order: list
    max_residual: float

    def to_json(self) -> dict:
        return {"eps": str(self.eps), "per_order": self.per_order, "max_residual": self.max_residual}


def _aligned_frame(A: FrobeniusAlgebra, base: SemisimpleFrame) -> SemisimpleFrame:
    """Normalized frame of ``A`` whose ``P_i`` and ``√θ_i`` continue those of ``base``."""
    bk = A.backend
    raw = idempotent_decomposition(A, normalize=False)
    n = A.dim
    perm: list[int] = []
    for i in range(n):
        target = base.idempotents[:, i]
        best = min(
            (j for j in range(n) if j not in perm),
            key=lambda j: max(bk.abs(x - y) for x, y in zip(raw.idempotents[:, j], target)),
        )
        perm.append(best)
    idem = raw.idempotents[:, perm]
    thetas = tuple(A.theta(idem[:, i]) for i in range(n))
    roots = []
    for i in range(n):
        r = bk.sqrt(thetas[i])
        if bk.abs(r - base.sqrt_thetas[i]) > bk.abs(-r - base.sqrt_thetas[i]):
            r = -r
        roots.append(r)
    Pi = zeros((n, n), bk)
    for i in range(n):
        Pi[:, i] = idem[:, i] * (bk.one / roots[i])
    return SemisimpleFrame(A, idem, thetas, tuple(roots), Pi, ())


def verify_ode_u(
    family: Callable[[Any], FrobeniusAlgebra],
    data: EulerData,
    direction: Sequence[Any],
    eps: Any,
    order: int = 6,
    base: Any = 0,
) -> OdeResidual:
    """Finite-difference residual of ``∂_v(E_uΠ_u)∘Π_u⁻¹ = [(v·_u), E_u(z)/z]``.

    The commutator is taken in the order compatible with the homogeneity
    recursion: along ``ξ`` the constant term reads ``∂_ξΠ∘Π⁻¹ = [(ξ·), E₁] = −μ``.

    ``family(t)`` is the algebra at the point ``u = t·v`` (``v = direction``);
    ``E_u`` is re-solved from the Euler data at ``t = base`` and
    ``t = base + eps``.  The residual at order ``z^k`` compares
    ``(E_kΠ)′Π⁻¹`` with ``[(v·), E_{k+1}]`` for ``k < order`` and is ``O(eps)``
    when the ODE holds.
    """
    A0 = family(base)
    bk = A0.backend
    v = np.array([bk.coerce(x) for x in direction], dtype=object)
    frame0 = idempotent_decomposition(A0).require_normalized()
    bk = frame0.backend
    data = data.with_backend(bk)
    v = np.array([bk.coerce(x) for x in v], dtype=object)
    E0 = solve_rmatrix(frame0, data, order)
    Vmul = frame0.algebra.mult_matrix(v)
    if bk.is_zero(bk.coerce(eps)):
        return OdeResidual(eps, [0.0] * order, 0.0)
    A1 = family(bk.coerce(base) + bk.coerce(eps)).with_backend(bk)
    frame1 = _aligned_frame(A1, frame0)
    E1 = solve_rmatrix(frame1, data, order)
    Pi0, Pi1 = frame0.Pi, frame1.Pi
    Pi0_inv = inverse(Pi0, bk)
    inv_eps = bk.one / bk.coerce(eps)
    per_order = []
    for k in range(order):
        lhs = (E1[k].dot(Pi1) - E0[k].dot(Pi0)).dot(Pi0_inv) * inv_eps
        rhs = Vmul.dot(E0[k + 1]) - E0[k + 1].dot(Vmul)
        per_order.append(max(bk.abs(x) for x in (lhs - rhs).ravel()))
    return OdeResidual(eps, per_order, max(per_order))


def quantum_p1_family(backend: Backend | None = None) -> Callable[[Any], FrobeniusAlgebra]:
    """``t ↦ QH(P¹)`` at ``q = e^t`` (the point ``u = t·h``)."""
    bk = backend or ComplexBackend()

    def fam(t: Any) -> FrobeniusAlgebra:
        q = bk.ctx.exp(bk.coerce(t)) if not bk.exact else _exact_exp(t)
        return quantum_p1(q, bk)

    return fam


def _exact_exp(t: Any) -> Any:
    if t != 0:
        raise ValueError("the rational backend can only evaluate the family at t = 0")
    return Fraction(1)


# ---------------------------------------------------------------------------
# The reconstruction pipeline
# ---------------------------------------------------------------------------


def reconstruct_theory(
    frame: SemisimpleFrame,
    data: EulerData,
    order: int,
    h: HodgeTwist | Sequence[Any] | None = None,
    check: bool = True,
) -> tuple[Theory, EndSeries]:
    """``solve_rmatrix`` → (optional Hodge twist) → ``build_cohft``; returns the lazy theory and ``E``."""
    frame = frame.require_normalized()
    problems = validate_euler_data(frame.algebra, data.with_backend(frame.backend))
    if problems:
        raise EulerDataError("; ".join(problems))
    E = solve_rmatrix(frame, data, order)
    if h is not None:
        E = hodge_ambiguity_apply(E, h)
    if check and not check_symplectic(frame, E):
        raise ValueError("solved E(z) is not symplectic to the requested order")
    T = build_cohft(frame, E, check=False)
    T.metadata["reconstruction"] = {
        "series_order": order,
        "hodge_twist": None if h is None else [str(x) for x in (h.h if isinstance(h, HodgeTwist) else h)],
    }
    return T, E


def reconstruct_gw(
    frame: SemisimpleFrame,
    data: EulerData,
    max_genus: int,
    max_points: int,
    h: HodgeTwist | Sequence[Any] | None = None,
    check: bool = True,
) -> CorrelatorTable:
    """All ancestor entries with ``g ≤ max_genus``, ``n ≤ max_points``.

    With ``check`` the output must pass the string/dilaton check (and, for
    ``h = None``, the homogeneity check); failures raise ``ValueError``.
    """
    order = required_series_order(max_genus, max_points + 1)
    T, E = reconstruct_theory(frame, data, order, h, check)
    table = CorrelatorTable.from_theory(T, max_genus, max_points)
    table.metadata["E"] = E.to_json()
    if check:
        sd = string_dilaton_check(T, max_genus, max_points)
        if not sd.ok:
            raise ValueError(f"reconstructed table fails the flat-identity check: {sd.to_json()}")
        if h is None or HodgeTwist(tuple(h.h if isinstance(h, HodgeTwist) else h)).is_zero:
            hr = check_homogeneity(T, data, max_genus, max_points)
            if not hr.ok:
                raise ValueError(f"reconstructed table is not homogeneous: {hr.to_json()}")
    return table


def algebra_from_theory(T: Theory, tol_backend: Backend | None = None) -> FrobeniusAlgebra:
    """Read ``A`` back off a theory: ``β(x,y) = ⟨𝟏,x,y⟩₀`` and the product from ``⟨x,y,w⟩₀``."""
    bk = T.backend
    A = T.frame.algebra
    n = A.dim
    unit = A.unit
    G = zeros((n, n), bk)
    for i in range(n):
        for j in range(n):
            acc = bk.zero
            for b in range(n):
                if not bk.is_zero(unit[b]):
                    acc = acc + unit[b] * T.value(0, tuple(sorted(((b, 0), (i, 0), (j, 0)))))
            G[i, j] = acc
    qp = quantum_product(T, None, order=0)
    mult = [[[qp.orders[0][i, j, k] for k in range(n)] for j in range(n)] for i in range(n)]
    return FrobeniusAlgebra.create(mult, list(unit), G.tolist(), A.basis_names, bk)


# ---------------------------------------------------------------------------
# Independent genus-zero source and standard data
# ---------------------------------------------------------------------------


def wdvv_genus0_oracle(max_degree: int = 4) -> list[int]:
    """Numbers ``N_d`` of rational plane curves of degree ``d`` through ``3d−1`` points.

    ``N_d = Σ_{d₁+d₂=d} N_{d₁}N_{d₂}[d₁²d₂² C(3d−4, 3d₁−2) − d₁³d₂ C(3d−4, 3d₁−1)]``
    with ``N₁ = 1``.
    """
    if max_degree < 1:
        return []
    N = [0, 1]
    for d in range(2, max_degree + 1):
        total = 0
        for d1 in range(1, d):
            d2 = d - d1
            total += N[d1] * N[d2] * (
                d1 * d1 * d2 * d2 * comb(3 * d - 4, 3 * d1 - 2) - d1**3 * d2 * comb(3 * d - 4, 3 * d1 - 1)
            )
        N.append(total)
    return N[1:]


def quantum_p1_euler_data(backend: Backend = RATIONAL) -> EulerData:
    """``ξ₀ = c₁ = 2h``, ``μ = diag(−1/2, 1/2)`` in the basis ``(1, h)``, ``d = 1``."""
    half = Fraction(1, 2)
    return EulerData.create([0, 2], [[-half, 0], [0, half]], 1, backend)


def rank_one_euler_data(xi0: Any = 0, backend: Backend = RATIONAL) -> EulerData:
    """Rank one: ``μ = 0``, ``d = 0`` (the only skew choice with ``μ(𝟏) = −d/2``)."""
    return EulerData.create([xi0], [[0]], 0, backend)
