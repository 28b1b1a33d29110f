"""Theories as correlator tables over Deligne–Mumford spaces, and the group acting on them.

An entry of a theory is the integral

    ⟨e_{b_1}ψ^{a_1}, …, e_{b_n}ψ^{a_n}⟩_g = ∫_{M̄_{g,n}} Z̄_g^n(e_{b_1}, …, e_{b_n}) ψ_1^{a_1}⋯ψ_n^{a_n}

with ``e_b`` the user basis of ``A``.  Keys are sorted tuples of ``(b, a)``
pairs.  Every operation returns a *lazy* :class:`Theory` that memoizes the
entries it is asked for and pulls what it needs from its parents; a
:class:`CorrelatorTable` is the finite materialization over given bounds.
"""
from __future__ import annotations

import hashlib
import json
import threading
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as iproduct
from math import comb, factorial
from typing import Any, Callable, Iterable, Iterator, Sequence

import numpy as np

from .core_algebra import Backend, EndSeries, VecSeries, parse_scalar, zeros
from .frobenius import SemisimpleFrame, frame_from_idempotents
from .moduli_oracle import UnstableError, is_stable, moduli_dim, wk_intersection
from .nodal_series import W_from_E, bivector, check_symplectic, zeta_from_E

__all__ = [
    "Key",
    "BoundsError",
    "Theory",
    "TrivialTheory",
    "TranslatedTheory",
    "GLTwistedTheory",
    "DeltaVelocity",
    "DeltaFlowTheory",
    "UDeformedTheory",
    "CorrelatorTable",
    "canonical_key",
    "keys_for",
    "stable_signatures",
    "evaluate",
    "trivial_theory",
    "translate",
    "rescaled_frame",
    "rescaled_trivial_theory",
    "zeta1_translation_coefficients",
    "gl_twist",
    "delta_step",
    "exp_delta",
    "build_cohft",
    "required_series_order",
    "u_deform",
    "quantum_product",
    "QuantumProduct",
    "potential_terms",
    "string_dilaton_check",
    "StringDilatonReport",
    "table_from_json",
]

Key = tuple  # tuple[tuple[int, int], ...], sorted


class BoundsError(ValueError):
    """A requested entry needs data beyond the available truncation orders."""


def canonical_key(pairs: Iterable[Sequence[int]]) -> Key:
    return tuple(sorted((int(b), int(a)) for b, a in pairs))


def _psi_total(key: Key) -> int:
    return sum(a for _, a in key)


def stable_signatures(max_genus: int, max_points: int) -> list[tuple[int, int]]:
    """Stable ``(g, n)`` with ``g ≤ max_genus``, ``n ≤ max_points``."""
    return [(g, n) for g in range(max_genus + 1) for n in range(max_points + 1) if is_stable(g, n)]


def keys_for(g: int, n: int, dim: int) -> Iterator[Key]:
    """All keys at ``(g, n)`` with ``Σa ≤ 3g−3+n`` (multisets of ``(b, a)``)."""
    top = moduli_dim(g, n)
    items = [(b, a) for a in range(top + 1) for b in range(dim)]
    items.sort()

    def rec(start: int, left: int, budget: int) -> Iterator[tuple]:
        if left == 0:
            yield ()
            return
        for idx in range(start, len(items)):
            b, a = items[idx]
            if a > budget:
                continue
            for tail in rec(idx, left - 1, budget - a):
                yield ((b, a),) + tail

    yield from rec(0, n, top)


def _sub_multisets(key: Key) -> Iterator[tuple[Key, Key, int]]:
    """Split a multiset into ``(I, I^c)`` over labelled positions, grouped with multiplicity."""
    counts = sorted(Counter(key).items())
    items = [c[0] for c in counts]
    mults = [c[1] for c in counts]
    for choice in iproduct(*(range(m + 1) for m in mults)):
        weight = 1
        left: list = []
        right: list = []
        for item, m, c in zip(items, mults, choice):
            weight *= comb(m, c)
            left += [item] * c
            right += [item] * (m - c)
        yield tuple(left), tuple(right), weight


# ---------------------------------------------------------------------------
# Lazy theories
# ---------------------------------------------------------------------------


class Theory:
    """A family of integrated classes, evaluated lazily and memoized."""

    def __init__(self, frame: SemisimpleFrame, label: str, parents: Sequence["Theory"] = ()):
        self.frame = frame
        self.backend: Backend = frame.backend
        self.dim = frame.dim
        self.label = label
        self.parents = tuple(parents)
        self.metadata: dict = {}
        self._cache: dict = {}
        self._lock = threading.Lock()
        self._max_points: dict[int, int] = {}

    # -- evaluation -------------------------------------------------------
    def value(self, g: int, key: Iterable[Sequence[int]]) -> Any:
        key = key if isinstance(key, tuple) and all(isinstance(p, tuple) for p in key) else canonical_key(key)
        key = tuple(sorted(key))
        n = len(key)
        if not is_stable(g, n):
            raise UnstableError(f"(g, n) = ({g}, {n}) is outside the stable range")
        if _psi_total(key) > moduli_dim(g, n):
            return self.backend.zero
        ck = (g, key)
        hit = self._cache.get(ck)
        if hit is not None:
            return hit
        val = self._compute(g, key)
        with self._lock:
            self._cache[ck] = val
            if n > self._max_points.get(g, -1):
                self._max_points[g] = n
        return val

    def _compute(self, g: int, key: Key) -> Any:  # pragma: no cover - interface
        raise NotImplementedError

    def __call__(self, g: int, *pairs: Sequence[int]) -> Any:
        return self.value(g, canonical_key(pairs))

    # -- bookkeeping --------------------------------------------------------
    def query_stats(self) -> dict:
        """Largest ``n`` queried per genus, for this stage and its ancestors."""
        out = {self.label: dict(sorted(self._max_points.items()))}
        for p in self.parents:
            for k, v in p.query_stats().items():
                out.setdefault(k, {}).update(v)
        return out

    def table(self, max_genus: int, max_points: int) -> "CorrelatorTable":
        return CorrelatorTable.from_theory(self, max_genus, max_points)


def evaluate(theory: Theory, g: int, insertions: Sequence[tuple[np.ndarray, int]]) -> Any:
    """Multilinear evaluation on vector insertions ``[(v, a), …]``."""
    bk = theory.backend
    supports = []
    for v, a in insertions:
        supports.append([(b, v[b]) for b in range(theory.dim) if not bk.is_zero(v[b])])
    total = bk.zero
    for choice in iproduct(*supports):
        coef = bk.one
        pairs = []
        for (b, c), (_, a) in zip(choice, insertions):
            coef = coef * c
            pairs.append((b, a))
        total = total + coef * theory.value(g, canonical_key(pairs))
    return total


class TrivialTheory(Theory):
    """``⟨P_i^{⊗n} ψ^a⟩_g = θ_i^{1−g}·⟨τ_a⟩_g``; mixed idempotent insertions vanish."""

    def __init__(self, frame: SemisimpleFrame):
        super().__init__(frame, "trivial")
        self._coords = frame.coordinates
        self._weights = {}

    def _theta_power(self, i: int, g: int) -> Any:
        k = (i, g)
        if k not in self._weights:
            self._weights[k] = self.frame.thetas[i] ** (1 - g)
        return self._weights[k]

    def _compute(self, g: int, key: Key) -> Any:
        bk = self.backend
        exps = [a for _, a in key]
        if sum(exps) != moduli_dim(g, len(key)):
            return bk.zero
        wk = wk_intersection(g, exps)
        if wk == 0:
            return bk.zero
        total = bk.zero
        for i in range(self.dim):
            w = self._theta_power(i, g)
            for b, _ in key:
                w = w * self._coords[i, b]
            total = total + w
        return total * bk.coerce(wk)


def trivial_theory(frame: SemisimpleFrame) -> TrivialTheory:
    return TrivialTheory(frame)


class TranslatedTheory(Theory):
    """``_aT = Σ_m (−1)^m/m! ∫ T^{n+m}(…, a(ψ_{n+1}), …, a(ψ_{n+m}))`` for ``a ∈ z²A[[z]]``."""

    def __init__(self, parent: Theory, a: VecSeries, truncated: bool = False):
        super().__init__(parent.frame, "translate", [parent])
        self._truncated = truncated
        bk = self.backend
        for k in (0, 1):
            if k <= a.order and any(not bk.is_zero(x) for x in a[k]):
                raise ValueError(
                    "translate() needs a ∈ z²A[[z]]; use rescaled_trivial_theory for a z-linear part"
                )
        self.a = a
        self._terms = [
            ((b, k), a[k][b]) for k in range(2, a.order + 1) for b in range(self.dim) if not bk.is_zero(a[k][b])
        ]

    def _compute(self, g: int, key: Key) -> Any:
        bk = self.backend
        parent = self.parents[0]
        budget = moduli_dim(g, len(key)) - _psi_total(key)
        if self._truncated and budget + 1 > self.a.order:
            raise BoundsError(
                f"translation series known to z^{self.a.order}; (g, n) = ({g}, {len(key)}) needs z^{budget + 1}"
            )
        terms = [t for t in self._terms if t[0][1] - 1 <= budget]
        total = bk.zero

        # multisets of extra insertions (b, k) with Σ(k−1) ≤ budget, weight Π c^m/m!
        def rec(idx: int, left: int, extra: tuple, coef: Any, denom: int) -> None:
            nonlocal total
            if idx == len(terms):
                sign = -1 if len(extra) % 2 else 1
                val = parent.value(g, tuple(sorted(key + extra)))
                if not bk.is_zero(val):
                    total = total + val * coef * bk.coerce(Fraction(sign, denom))
                return
            (b, k), c = terms[idx]
            mult = 0
            cur_coef, cur_extra, d = coef, extra, denom
            while (k - 1) * mult <= left:
                rec(idx + 1, left - (k - 1) * mult, cur_extra, cur_coef, d)
                mult += 1
                cur_coef = cur_coef * c
                cur_extra = cur_extra + ((b, k),)
                d = d * mult

        rec(0, budget, (), bk.one, 1)
        return total


def translate(T: Theory, a: VecSeries) -> TranslatedTheory:
    return TranslatedTheory(T, a)


# -- z-linear translations: algebra rescaling ---------------------------------


def rescaled_frame(frame: SemisimpleFrame, zeta1: np.ndarray) -> SemisimpleFrame:
    """Frame of ``A′`` with ``P′_i = (1+ζ₁^i)P_i`` and ``θ′_i = (1+ζ₁^i)²θ_i``.

    ``ζ₁^i`` are the idempotent coordinates of ``ζ₁``; ``(1+ζ₁)`` must be invertible.
    """
    bk = frame.backend
    z = frame.coordinates.dot(zeta1)
    scale = [bk.one + z[i] for i in range(frame.dim)]
    if any(bk.is_zero(s) for s in scale):
        raise ValueError("1 + ζ₁ is not invertible: the rescaled algebra is undefined")
    idem = frame.idempotents.copy()
    for i in range(frame.dim):
        idem[:, i] = idem[:, i] * scale[i]
    thetas = [s * s * t for s, t in zip(scale, frame.thetas)]
    sq = None
    if frame.sqrt_thetas is not None:
        sq = [s * r for s, r in zip(scale, frame.sqrt_thetas)]
    Pi = None if frame.Pi is None else frame.Pi.copy()
    return SemisimpleFrame(frame.algebra, idem, thetas, sq, Pi, frame.eigenvalues)


def rescaled_trivial_theory(frame: SemisimpleFrame, zeta1: np.ndarray) -> TrivialTheory:
    """Effect of translating the trivial theory by ``ζ₁z``: the trivial theory of ``A′``.

    Entries are taken on the *original* vector space (basis ``e_b``), so the
    ``(g, n)`` value on ``P_i^{⊗n}`` becomes ``(1+ζ₁^i)^{2−2g−n}θ_i^{1−g}⟨τ_a⟩_g``.
    """
    T = TrivialTheory(rescaled_frame(frame, zeta1))
    T.label = "rescaled-trivial"
    T.metadata["zeta1"] = [frame.backend.to_json(x) for x in zeta1]
    return T


def zeta1_translation_coefficients(
    T: Theory, zeta1: np.ndarray, g: int, key: Iterable[Sequence[int]], order: int
) -> list:
    """Coefficients of ``t^k`` (``k ≤ order``) in the formal translation of ``T`` by ``t·ζ₁z``.

    ``c_k = (−1)^k/k! · ⟨key, (ζ₁ψ)^k⟩_g`` — each power is a single finite
    entry, so the series is computed order by order without summation.
    """
    key = canonical_key(key)
    out = []
    for k in range(order + 1):
        ins = [(np.array([1 if b == bb else 0 for bb in range(T.dim)], dtype=object), a) for b, a in key]
        ins = [(T.backend.coerce(1) * v, a) for v, a in ins]
        ins += [(zeta1, 1)] * k
        val = evaluate(T, g, ins)
        out.append(val * T.backend.coerce(Fraction((-1) ** k, factorial(k))))
    return out


# -- GL⁺ twist ------------------------------------------------------------------


class GLTwistedTheory(Theory):
    """Each insertion ``(e_b, a)`` is replaced by ``Σ_k g⁻¹_k(e_b) ψ^{a+k}``."""

    def __init__(self, parent: Theory, g_series: EndSeries):
        super().__init__(parent.frame, "gl_twist", [parent])
        bk = self.backend
        if not g_series.equals(EndSeries.identity(g_series.dim, g_series.order, bk), upto=0):
            raise ValueError("gl_twist requires g(0) = Id")
        self.g = g_series
        inv = g_series.inverse()
        self.ginv = inv
        # expansion of a single slot: list of (c, k, coefficient)
        self._slot = {}
        for b in range(self.dim):
            terms = []
            for k in range(inv.order + 1):
                for c in range(self.dim):
                    v = inv[k][c, b]
                    if not bk.is_zero(v):
                        terms.append((c, k, v))
            self._slot[b] = terms

    def _compute(self, g: int, key: Key) -> Any:
        bk = self.backend
        parent = self.parents[0]
        top = moduli_dim(g, len(key))
        budget = top - _psi_total(key)
        if budget > self.ginv.order:
            raise BoundsError(
                f"gl_twist needs g⁻¹ to order {budget} for (g, n) = ({g}, {len(key)}); have {self.ginv.order}"
            )
        options = [[(c, a + k, v) for (c, k, v) in self._slot[b] if k <= budget] for b, a in key]
        total = bk.zero

        def rec(i: int, used: int, pairs: list, coef: Any) -> None:
            nonlocal total
            if i == len(options):
                val = parent.value(g, tuple(sorted(pairs)))
                if not bk.is_zero(val):
                    total = total + coef * val
                return
            a0 = key[i][1]
            for c, a, v in options[i]:
                extra = a - a0
                if used + extra > budget:
                    continue
                rec(i + 1, used + extra, pairs + [(c, a)], coef * v)

        rec(0, 0, [], bk.one)
        return total


def gl_twist(T: Theory, g_series: EndSeries) -> GLTwistedTheory:
    return GLTwistedTheory(T, g_series)


# -- exp(Δ) ---------------------------------------------------------------------


def _bivector_terms(V: np.ndarray, backend: Backend) -> list:
    terms = []
    K = V.shape[0] - 1
    n = V.shape[2]
    for p in range(K + 1):
        for q in range(K + 1 - p):
            for a in range(n):
                for b in range(n):
                    v = V[p, q, a, b]
                    if not backend.is_zero(v):
                        terms.append((p, q, a, b, v))
    return terms


def _check_bivector(V: np.ndarray, backend: Backend) -> None:
    K = V.shape[0] - 1
    for p in range(K + 1):
        for q in range(K + 1 - p):
            for a in range(V.shape[2]):
                for b in range(V.shape[3]):
                    if not backend.eq(V[p, q, a, b], V[q, p, b, a]):
                        raise ValueError("V must be symmetric: V[p,q,a,b] = V[q,p,b,a]")


class _Layered:
    """Helper for theories defined as ``Σ_m T_m`` with memoized layers."""

    def __init__(self) -> None:
        self._layers: dict = {}

    def layer(self, m: int, g: int, key: Key) -> Any:  # pragma: no cover - interface
        raise NotImplementedError


def _separating(
    g: int,
    key: Key,
    terms: list,
    left: Callable[[int, Key], Any],
    right: Callable[[int, Key], Any],
    left_shift: int,
    right_shift: int,
    backend: Backend,
) -> Any:
    """``Σ_{g′, I ⊆ key} Σ V^{ab}_{pq} left(g′, I+(a,p))·right(g−g′, I^c+(b,q))`` over ordered splits."""
    total = backend.zero
    n = len(key)
    for I, Ic, weight in _sub_multisets(key):
        for g1 in range(g + 1):
            g2 = g - g1
            n1, n2 = len(I) + 1, len(Ic) + 1
            if not (is_stable(g1, n1) and is_stable(g2, n2)):
                continue
            room1 = moduli_dim(g1, n1) - _psi_total(I) - left_shift
            room2 = moduli_dim(g2, n2) - _psi_total(Ic) - right_shift
            if room1 < 0 or room2 < 0:
                continue
            for p, q, a, b, v in terms:
                if p > room1 or q > room2:
                    continue
                x = left(g1, tuple(sorted(I + ((a, p),))))
                if backend.is_zero(x):
                    continue
                y = right(g2, tuple(sorted(Ic + ((b, q),))))
                if backend.is_zero(y):
                    continue
                total = total + v * x * y * weight
    return total


def _nonseparating(g: int, key: Key, terms: list, inner: Callable[[int, Key], Any], shift: int, backend: Backend) -> Any:
    total = backend.zero
    if g < 1 or not is_stable(g - 1, len(key) + 2):
        return total
    room = moduli_dim(g - 1, len(key) + 2) - _psi_total(key) - shift
    for p, q, a, b, v in terms:
        if p + q > room:
            continue
        x = inner(g - 1, tuple(sorted(key + ((a, p), (b, q)))))
        if not backend.is_zero(x):
            total = total + v * x
    return total


class DeltaVelocity(Theory):
    """Infinitesimal ``δ_V``-action: ``−½ Σ_{ordered separating} V·T·T − ½ Σ_{nonsep} V·T``."""

    def __init__(self, parent: Theory, V: np.ndarray):
        super().__init__(parent.frame, "delta_step", [parent])
        _check_bivector(V, self.backend)
        self.V = V
        self._terms = _bivector_terms(V, self.backend)

    def _compute(self, g: int, key: Key) -> Any:
        bk = self.backend
        T = self.parents[0]
        half = bk.coerce(Fraction(-1, 2))
        sep = _separating(g, key, self._terms, T.value, T.value, 0, 0, bk)
        non = _nonseparating(g, key, self._terms, T.value, 0, bk)
        return (sep + non) * half


def delta_step(T: Theory, V: np.ndarray) -> DeltaVelocity:
    return DeltaVelocity(T, V)


class DeltaFlowTheory(Theory, _Layered):
    """``exp(Δ_V)``: the time-1 flow ``Σ_m T_m`` with ``(m+1)T_{m+1} = Σ_{i+j=m}B(T_i,T_j) + L(T_m)``.

    ``T_m`` is supported in codimension ``≥ m``, so the sum stops at ``3g−3+n``.
    """

    def __init__(self, parent: Theory, V: np.ndarray):
        Theory.__init__(self, parent.frame, "exp_delta", [parent])
        _Layered.__init__(self)
        _check_bivector(V, self.backend)
        self.V = V
        self._terms = _bivector_terms(V, self.backend)

    def layer(self, m: int, g: int, key: Key) -> Any:
        bk = self.backend
        if m == 0:
            return self.parents[0].value(g, key)
        if _psi_total(key) > moduli_dim(g, len(key)) - m:
            return bk.zero
        ck = (m, g, key)
        hit = self._layers.get(ck)
        if hit is not None:
            return hit
        mm = m - 1
        total = bk.zero
        for i in range(mm + 1):
            j = mm - i
            total = total + _separating(
                g,
                key,
                self._terms,
                lambda gg, kk, i=i: self.layer(i, gg, kk),
                lambda gg, kk, j=j: self.layer(j, gg, kk),
                i,
                j,
                bk,
            )
        total = total + _nonseparating(g, key, self._terms, lambda gg, kk: self.layer(mm, gg, kk), mm, bk)
        val = total * bk.coerce(Fraction(-1, 2 * m))
        self._layers[ck] = val
        return val

    def _compute(self, g: int, key: Key) -> Any:
        bk = self.backend
        depth = moduli_dim(g, len(key)) - _psi_total(key)
        total = bk.zero
        for m in range(depth + 1):
            total = total + self.layer(m, g, key)
        return total


def exp_delta(T: Theory, V: np.ndarray) -> DeltaFlowTheory:
    return DeltaFlowTheory(T, V)


# -- the CohFT attached to E ----------------------------------------------------


def required_series_order(max_genus: int, max_points: int) -> int:
    """Order of ``E`` needed to build all entries with ``g ≤ G``, ``n ≤ N``."""
    sigs = stable_signatures(max_genus, max_points)
    return max((moduli_dim(g, n) for g, n in sigs), default=0)


def build_cohft(
    frame: SemisimpleFrame,
    E: EndSeries,
    include_translation: bool = True,
    check: bool = True,
) -> Theory:
    """Trivial theory → translation by ``ζ`` → ``exp(Δ_{W_E})`` → ``GL`` twist by ``E``.

    The result is the CohFT with flat identity classified by ``E``; entries
    are exact up to moduli dimension ``E.order``.  ``include_translation=False``
    drops the ``ζ`` stage (the flat identity then fails — a negative control).
    """
    if check and not check_symplectic(frame, E):
        raise ValueError("build_cohft needs a symplectic E: E(z)E*(−z) ≠ Id")
    T: Theory = TrivialTheory(frame)
    zd = zeta_from_E(frame, E)
    if include_translation:
        T = TranslatedTheory(T, zd.zeta)
    W = W_from_E(frame, E)
    V = bivector(frame, W)
    T = DeltaFlowTheory(T, V)
    T = GLTwistedTheory(T, E)
    T.label = "cohft"
    T.metadata.update(
        {
            "series_order": E.order,
            "max_moduli_dim": E.order,
            "translation": include_translation,
            "zeta": zd.zeta.to_json(),
            "kappa_exponents": zd.to_json()["a"],
        }
    )
    return T


# -- u-deformation --------------------------------------------------------------


class UDeformedTheory(Theory, _Layered):
    """``_uZ̄ = Σ_m (−1)^m/m! π_*Z̄(…, u, …, u)`` as a Taylor series in ``u``.

    Entries use ψ-classes pulled back from ``M̄_{g,n}``; layer ``S_k`` is the
    homogeneous degree-``k`` part in ``u`` and satisfies

        (k+1)S_{k+1}(x; a) = −[S_k(x, u; a, 0) − Σ_{i: a_i≥1} Σ_{j+l=k} S_l(…, x_i·^{(j)}u, ψ^{a_i−1}, …)]

    where ``x·^{(j)}u`` is the degree-``j`` part of the deformed product.
    """

    def __init__(self, parent: Theory, u: np.ndarray, order: int = 4):
        Theory.__init__(self, parent.frame, "u_deform", [parent])
        _Layered.__init__(self)
        self.u = np.array([self.backend.coerce(x) for x in u], dtype=object)
        self.order = order
        self._u_support = [(c, self.u[c]) for c in range(self.dim) if not self.backend.is_zero(self.u[c])]
        self._ginv = frame_ginv(self.frame)
        self._prod_cache: dict = {}

    def _product(self, j: int, b: int) -> np.ndarray:
        """Degree-``j`` part of ``e_b ·_u u`` as a vector."""
        ck = (j, b)
        if ck in self._prod_cache:
            return self._prod_cache[ck]
        bk = self.backend
        cov = zeros(self.dim, bk)
        for d in range(self.dim):
            acc = bk.zero
            for c, uc in self._u_support:
                acc = acc + uc * self.layer(j, 0, tuple(sorted(((b, 0), (c, 0), (d, 0)))))
            cov[d] = acc
        vec = self._ginv.dot(cov)
        self._prod_cache[ck] = vec
        return vec

    def layer(self, k: int, g: int, key: Key) -> Any:
        bk = self.backend
        if k == 0:
            return self.parents[0].value(g, key)
        if _psi_total(key) > moduli_dim(g, len(key)):
            return bk.zero
        ck = (k, g, key)
        hit = self._layers.get(ck)
        if hit is not None:
            return hit
        km = k - 1
        total = bk.zero
        for c, uc in self._u_support:
            total = total + uc * self.layer(km, g, tuple(sorted(key + ((c, 0),))))
        seen = set()
        for idx, (b, a) in enumerate(key):
            if a < 1 or (b, a) in seen:
                continue
            seen.add((b, a))
            mult = sum(1 for p in key if p == (b, a))
            rest = list(key)
            rest.remove((b, a))
            corr = bk.zero
            for j in range(km + 1):
                prod = self._product(j, b)
                for e in range(self.dim):
                    if bk.is_zero(prod[e]):
                        continue
                    corr = corr + prod[e] * self.layer(km - j, g, tuple(sorted(rest + [(e, a - 1)])))
            total = total - corr * mult
        val = total * bk.coerce(Fraction(-1, k))
        self._layers[ck] = val
        return val

    def _compute(self, g: int, key: Key) -> Any:
        bk = self.backend
        total = bk.zero
        for k in range(self.order + 1):
            total = total + self.layer(k, g, key)
        return total


def frame_ginv(frame: SemisimpleFrame) -> np.ndarray:
    return frame.algebra.pairing_inverse


def u_deform(T: Theory, u: Sequence[Any], order: int = 4) -> UDeformedTheory:
    return UDeformedTheory(T, np.asarray(u, dtype=object), order)


@dataclass
class QuantumProduct:
    """``x ·_u y`` as structure constants per ``u``-order, plus the associativity record."""

    orders: list  # list of (N, N, N) tensors: orders[k][i, j, :] = degree-k part of e_i·e_j
    associativity_defect: list  # per order, max |(xy)w − x(yw)|
    backend: Backend

    @property
    def total(self) -> np.ndarray:
        out = self.orders[0].copy()
        for t in self.orders[1:]:
            out = out + t
        return out

    @property
    def associative(self) -> bool:
        bk = self.backend
        return all(d == 0 if bk.exact else d <= bk.tolerance for d in self.associativity_defect)


def quantum_product(T: Theory, u: Sequence[Any] | None = None, order: int = 4) -> QuantumProduct:
    """u-dependent product from ``_uZ̄_0^3`` via β, checked associative order by order."""
    bk = T.backend
    n = T.dim
    if u is None:
        u = [bk.zero] * n
    D = u_deform(T, u, order)
    ginv = frame_ginv(T.frame)
    orders = []
    for k in range(order + 1):
        c = zeros((n, n, n), bk)
        for i in range(n):
            for j in range(n):
                cov = np.array(
                    [D.layer(k, 0, tuple(sorted(((i, 0), (j, 0), (d, 0))))) for d in range(n)], dtype=object
                )
                c[i, j, :] = ginv.dot(cov)
        orders.append(c)
    defects = []
    for k in range(order + 1):
        worst = 0.0
        for x in range(n):
            for y in range(n):
                for w in range(n):
                    lhs = zeros(n, bk)
                    rhs = zeros(n, bk)
                    for i in range(k + 1):
                        j = k - i
                        xy = orders[i][x, y, :]
                        yw = orders[i][y, w, :]
                        for e in range(n):
                            lhs = lhs + xy[e] * orders[j][e, w, :]
                            rhs = rhs + yw[e] * orders[j][x, e, :]
                    worst = max(worst, max(bk.abs(a - b) for a, b in zip(lhs, rhs)))
        defects.append(worst)
    return QuantumProduct(orders, defects, bk)


# -- potentials and flat-identity checks ----------------------------------------


def potential_terms(T: Theory, x: VecSeries, max_genus: int, max_points: int) -> list:
    """``F_g = Σ_n 1/n! ⟨x(ψ), …, x(ψ)⟩_g`` truncated at ``n ≤ max_points``; index ``g``.

    These are the inner sums of the ancestor potential ``exp Σ ħ^{g−1}F_g``;
    unstable ``(g, n)`` are excluded.
    """
    bk = T.backend
    support = [((b, k), x[k][b]) for k in range(x.order + 1) for b in range(T.dim) if not bk.is_zero(x[k][b])]
    out = []
    for g in range(max_genus + 1):
        total = bk.zero
        for n in range(max_points + 1):
            if not is_stable(g, n):
                continue
            top = moduli_dim(g, n)

            def rec(idx: int, left: int, budget: int, key: tuple, coef: Any, denom: int) -> None:
                nonlocal total
                if left == 0:
                    val = T.value(g, tuple(sorted(key)))
                    if not bk.is_zero(val):
                        total = total + val * coef * bk.coerce(Fraction(1, denom))
                    return
                if idx == len(support):
                    return
                (b, k), c = support[idx]
                mult = 0
                cur_key, cur_coef, d = key, coef, denom
                while mult <= left and k * mult <= budget:
                    rec(idx + 1, left - mult, budget - k * mult, cur_key, cur_coef, d)
                    mult += 1
                    cur_key = cur_key + ((b, k),)
                    cur_coef = cur_coef * c
                    d = d * mult

            rec(0, n, top, (), bk.one, 1)
        out.append(total)
    return out


@dataclass
class StringDilatonReport:
    checked: int
    string_failures: list = field(default_factory=list)
    dilaton_failures: list = field(default_factory=list)
    max_defect: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.string_failures and not self.dilaton_failures

    def to_json(self) -> dict:
        return {
            "checked": self.checked,
            "string_failures": [list(map(str, f)) for f in self.string_failures[:20]],
            "dilaton_failures": [list(map(str, f)) for f in self.dilaton_failures[:20]],
            "max_defect": self.max_defect,
            "ok": self.ok,
        }


def _unit_insert(T: Theory, g: int, key: Key, psi: int) -> Any:
    unit = T.frame.algebra.unit
    bk = T.backend
    total = bk.zero
    for b in range(T.dim):
        if bk.is_zero(unit[b]):
            continue
        total = total + unit[b] * T.value(g, tuple(sorted(key + ((b, psi),))))
    return total


def string_dilaton_check(T: Theory | "CorrelatorTable", max_genus: int | None = None, max_points: int | None = None) -> StringDilatonReport:
    """Integrated flat-identity relations on all keys with ``n+1 ≤ max_points``.

    String: ``⟨𝟏ψ⁰, K⟩_g = Σ_{a_i ≥ 1} ⟨K with a_i−1⟩_g`` (at ``(0,2)``: ``β``).
    Dilaton: ``⟨𝟏ψ¹, K⟩_g = (2g−2+n)⟨K⟩_g``.
    """
    if isinstance(T, CorrelatorTable):
        source = T.as_theory()
        max_genus = T.max_genus if max_genus is None else max_genus
        max_points = T.max_points if max_points is None else max_points
    else:
        source = T
    if max_genus is None or max_points is None:
        raise ValueError("bounds are required when checking a lazy theory")
    bk = source.backend
    G = source.frame.algebra.pairing
    rep = StringDilatonReport(0)
    for g in range(max_genus + 1):
        for n in range(max_points):
            if not is_stable(g, n + 1):
                continue
            for key in keys_for(g, n, source.dim):
                # string
                if (g, n) != (1, 0):
                    lhs = _unit_insert(source, g, key, 0)
                    if (g, n) == (0, 2):
                        rhs = G[key[0][0], key[1][0]] if _psi_total(key) == 0 else bk.zero
                    elif n == 0:
                        rhs = bk.zero
                    else:
                        rhs = bk.zero
                        for idx, (b, a) in enumerate(key):
                            if a >= 1:
                                rest = list(key)
                                rest[idx] = (b, a - 1)
                                rhs = rhs + source.value(g, tuple(sorted(rest)))
                    rep.checked += 1
                    d = bk.abs(lhs - rhs)
                    rep.max_defect = max(rep.max_defect, d)
                    if not bk.eq(lhs, rhs):
                        rep.string_failures.append((g, key, lhs, rhs))
                # dilaton
                if (g, n) in ((1, 0), (0, 2)):
                    continue
                lhs = _unit_insert(source, g, key, 1)
                rhs = source.value(g, key) * (2 * g - 2 + n)
                rep.checked += 1
                d = bk.abs(lhs - rhs)
                rep.max_defect = max(rep.max_defect, d)
                if not bk.eq(lhs, rhs):
                    rep.dilaton_failures.append((g, key, lhs, rhs))
    return rep


# ---------------------------------------------------------------------------
# Materialized tables
# ---------------------------------------------------------------------------


def _frame_hash(frame: SemisimpleFrame) -> str:
    A = frame.algebra
    payload = json.dumps(A.to_json(), sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


class _TableTheory(Theory):
    def __init__(self, table: "CorrelatorTable"):
        super().__init__(table.frame, "table")
        self._table = table

    def _compute(self, g: int, key: Key) -> Any:
        try:
            return self._table.entries[(g, key)]
        except KeyError:
            raise BoundsError(f"entry (g={g}, {list(key)}) is outside the table bounds") from None


@dataclass
class CorrelatorTable:
    """All entries with ``g ≤ max_genus``, ``n ≤ max_points`` and ``Σa ≤ 3g−3+n``."""

    frame: SemisimpleFrame
    max_genus: int
    max_points: int
    entries: dict
    metadata: dict = field(default_factory=dict)

    @property
    def backend(self) -> Backend:
        return self.frame.backend

    @classmethod
    def from_theory(cls, T: Theory, max_genus: int, max_points: int) -> "CorrelatorTable":
        entries = {}
        for g, n in stable_signatures(max_genus, max_points):
            for key in keys_for(g, n, T.dim):
                entries[(g, key)] = T.value(g, key)
        meta = dict(T.metadata)
        meta["stage"] = T.label
        meta["query_closure"] = {k: {str(g): n for g, n in v.items()} for k, v in T.query_stats().items()}
        return cls(T.frame, max_genus, max_points, entries, meta)

    def value(self, g: int, *pairs: Sequence[int]) -> Any:
        return self.entries[(g, canonical_key(pairs))]

    def as_theory(self) -> Theory:
        return _TableTheory(self)

    def equals(self, other: "CorrelatorTable") -> bool:
        if set(self.entries) != set(other.entries):
            return False
        bk = self.backend
        return all(bk.eq(v, other.entries[k]) for k, v in self.entries.items())

    def max_deviation(self, other: "CorrelatorTable") -> float:
        bk = self.backend
        return max((bk.abs(v - other.entries[k]) for k, v in self.entries.items()), default=0.0)

    def rows(self) -> list:
        bk = self.backend
        out = []
        for (g, key) in sorted(self.entries, key=lambda t: (t[0], len(t[1]), t[1])):
            out.append([g, len(key), [list(p) for p in key], bk.to_json(self.entries[(g, key)])])
        return out

    def to_json(self) -> dict:
        return {
            "header": {
                "format": "correlator-table",
                "version": 1,
                "bounds": {"max_genus": self.max_genus, "max_points": self.max_points},
                "dim": self.frame.dim,
                "frame_hash": _frame_hash(self.frame),
                "backend": self.backend.describe(),
                "algebra": self.frame.algebra.to_json(),
            },
            "metadata": _jsonable(self.metadata),
            "entries": self.rows(),
        }


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, Fraction):
        return f"{obj.numerator}/{obj.denominator}"
    if isinstance(obj, (str, int, float, bool)) or obj is None:
        return obj
    return str(obj)


def table_from_json(data: dict, backend: Backend | None = None) -> CorrelatorTable:
    """Inverse of :meth:`CorrelatorTable.to_json` (frame rebuilt from the stored algebra)."""
    from .core_algebra import backend_from_spec
    from .frobenius import FrobeniusAlgebra, idempotent_decomposition

    head = data["header"]
    bk = backend or backend_from_spec(head.get("backend"))
    A = FrobeniusAlgebra.from_json(head["algebra"], bk)
    frame = idempotent_decomposition(A, normalize=False)
    entries = {}
    for g, n, key, val in data["entries"]:
        k = canonical_key(key)
        if len(k) != n:
            raise ValueError(f"row arity mismatch at genus {g}: n={n} but key has {len(k)} pairs")
        entries[(int(g), k)] = parse_scalar(val, frame.backend)
    b = head["bounds"]
    return CorrelatorTable(frame, int(b["max_genus"]), int(b["max_points"]), entries, data.get("metadata", {}))
