"""Intersection numbers of ψ- and κ-classes on moduli spaces of stable curves.

``⟨τ_{a_1}⋯τ_{a_n}⟩_g = ∫_{M̄_{g,n}} ψ_1^{a_1}⋯ψ_n^{a_n}`` is computed with the
string equation and the DVV (Virasoro) recursion, memoized on the sorted
exponent tuple.  κ-classes (Arbarello–Cornalba convention,
``κ_j = π_*(ψ_{n+1}^{j+1})``) are reduced to ψ-integrals with extra points.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from math import factorial
from typing import Iterable, Sequence

__all__ = [
    "UnstableError",
    "OracleResult",
    "is_stable",
    "moduli_dim",
    "wk_intersection",
    "wk_query",
    "wk_table",
    "kappa_to_psi",
    "kappa_to_psi_iterated",
    "fiber_product_check",
    "set_partitions",
]

EXCLUDED = frozenset({(0, 0), (0, 1), (0, 2), (1, 0)})


class UnstableError(ValueError):
    """Raised for (g, n) outside the stable range."""


@dataclass(frozen=True)
class OracleResult:
    """Tagged oracle answer: ``status`` is ``"ok"``, ``"dimension"`` or ``"unstable"``."""

    value: Fraction
    status: str


def is_stable(g: int, n: int) -> bool:
    return g >= 0 and n >= 0 and 2 * g - 2 + n > 0


def moduli_dim(g: int, n: int) -> int:
    return 3 * g - 3 + n


def _double_factorial(n: int) -> int:
    out = 1
    while n > 1:
        out *= n
        n -= 2
    return out


_lock = threading.Lock()


@lru_cache(maxsize=None)
def _wk(g: int, exps: tuple[int, ...]) -> Fraction:
    n = len(exps)
    if sum(exps) != 3 * g - 3 + n:
        return Fraction(0)
    if g == 0 and exps == (0, 0, 0):
        return Fraction(1)
    if g == 1 and exps == (1,):
        return Fraction(1, 24)
    if 0 in exps:
        # string equation
        rest = list(exps)
        rest.remove(0)
        total = Fraction(0)
        for j, a in enumerate(rest):
            if a > 0:
                lowered = rest.copy()
                lowered[j] = a - 1
                total += _wk(g, tuple(sorted(lowered)))
        return total
    # DVV: distinguished insertion τ_{k+1} with the largest exponent
    k = exps[-1] - 1
    rest = exps[:-1]
    total = Fraction(0)
    for j, d in enumerate(rest):
        raised = list(rest)
        raised[j] = d + k
        total += Fraction(
            _double_factorial(2 * k + 2 * d + 1), _double_factorial(2 * d - 1)
        ) * _wk(g, tuple(sorted(raised)))
    half = Fraction(1, 2)
    m = len(rest)
    for r in range(k):
        s = k - 1 - r
        w = _double_factorial(2 * r + 1) * _double_factorial(2 * s + 1)
        if g >= 1:
            total += half * w * _wk(g - 1, tuple(sorted(rest + (r, s))))
        for g1 in range(g + 1):
            g2 = g - g1
            for size in range(m + 1):
                for idx in combinations(range(m), size):
                    left = tuple(sorted((r,) + tuple(rest[i] for i in idx)))
                    right = tuple(
                        sorted((s,) + tuple(rest[i] for i in range(m) if i not in idx))
                    )
                    if not (is_stable(g1, len(left)) and is_stable(g2, len(right))):
                        continue
                    total += half * w * _wk(g1, left) * _wk(g2, right)
    return total / _double_factorial(2 * k + 3)


def wk_query(g: int, exponents: Iterable[int]) -> OracleResult:
    """Tagged lookup: unstable and dimension-mismatched keys are flagged."""
    exps = tuple(sorted(int(a) for a in exponents))
    if any(a < 0 for a in exps):
        raise ValueError("ψ exponents must be non-negative")
    n = len(exps)
    if not is_stable(g, n):
        return OracleResult(Fraction(0), "unstable")
    if sum(exps) != moduli_dim(g, n):
        return OracleResult(Fraction(0), "dimension")
    with _lock:
        value = _wk(g, exps)
    return OracleResult(value, "ok")


def wk_intersection(g: int, exponents: Iterable[int]) -> Fraction:
    """``⟨τ_{a_1}⋯τ_{a_n}⟩_g`` (zero when the dimension does not balance).

    Raises :class:`UnstableError` for ``(g, n)`` in the excluded set.
    """
    res = wk_query(g, exponents)
    if res.status == "unstable":
        raise UnstableError(f"(g, n) = ({g}, {len(tuple(exponents))}) is not stable")
    return res.value


def _compositions_sum(total: int, parts: int) -> Iterable[tuple[int, ...]]:
    """Non-decreasing tuples of ``parts`` non-negative integers summing to ``total``."""

    def rec(remaining: int, k: int, lo: int) -> Iterable[tuple[int, ...]]:
        if k == 0:
            if remaining == 0:
                yield ()
            return
        for a in range(lo, remaining // k + 1):
            for tail in rec(remaining - a, k - 1, a):
                yield (a,) + tail

    return rec(total, parts, 0)


def wk_table(max_dim: int) -> dict[tuple[int, tuple[int, ...]], Fraction]:
    """All non-trivially-balanced keys with ``3g−3+n ≤ max_dim``."""
    out: dict[tuple[int, tuple[int, ...]], Fraction] = {}
    for g in range(max_dim // 3 + 2):
        for n in range(0, max_dim - 3 * g + 4):
            if not is_stable(g, n):
                continue
            dim = moduli_dim(g, n)
            if dim > max_dim:
                continue
            for exps in _compositions_sum(dim, n):
                out[(g, exps)] = wk_intersection(g, exps)
    return out


# ---------------------------------------------------------------------------
# κ-classes
# ---------------------------------------------------------------------------


def set_partitions(items: Sequence[int]) -> Iterable[list[list[int]]]:
    """All set partitions of ``items`` (as lists of blocks)."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for part in set_partitions(rest):
        yield [[first]] + part
        for i in range(len(part)):
            yield part[:i] + [[first] + part[i]] + part[i + 1 :]


def _check_kappa_key(g: int, kappas: Sequence[int], psis: Sequence[int]) -> None:
    if any(j < 0 for j in kappas) or any(a < 0 for a in psis):
        raise ValueError("exponents must be non-negative")
    if not is_stable(g, len(psis)):
        raise UnstableError(f"(g, n) = ({g}, {len(psis)}) is not stable")
    if sum(kappas) + sum(psis) != moduli_dim(g, len(psis)):
        raise ValueError(
            f"dimension mismatch: Σj + Σa = {sum(kappas) + sum(psis)} ≠ {moduli_dim(g, len(psis))}"
        )


def kappa_to_psi(g: int, kappas: Sequence[int], psis: Sequence[int]) -> Fraction:
    """``∫_{M̄_{g,n}} κ_{j_1}⋯κ_{j_m} ψ^{a}`` via the set-partition expansion.

    ``κ_{j_1}⋯κ_{j_m} = Σ_{P} (−1)^{m−|P|} · π_*(Π_{B∈P} ψ^{j(B)+1})``
    where ``j(B)`` is the sum of the exponents in block ``B``.  This inverts
    ``π_*(Π_i ψ^{j_i+1}) = Σ_{σ∈S_m} Π_{cycles c} κ_{j(c)}``: cycle weights
    ``(k−1)!`` have exponential generating function ``−log(1−x)``, whose
    compositional inverse ``1−e^{−x}`` gives block weights ``(−1)^{k−1}``.
    """
    _check_kappa_key(g, kappas, psis)
    total = Fraction(0)
    for part in set_partitions(list(range(len(kappas)))):
        coeff = 1
        extra = []
        for block in part:
            coeff *= (-1) ** (len(block) - 1)
            extra.append(sum(kappas[i] for i in block) + 1)
        total += coeff * wk_intersection(g, tuple(psis) + tuple(extra))
    return total


def _iterated(g: int, kappas: tuple[int, ...], psis: tuple[int, ...], order: tuple[int, ...]) -> Fraction:
    if not kappas:
        return wk_intersection(g, psis)
    # eliminate the κ named first in ``order``: κ_j = π_*(ψ_{new}^{j+1}); every
    # remaining κ pulls back as κ_b − ψ_{new}^b (the ψ_i pull-back corrections
    # are killed by the positive power of ψ_{new}).
    pos = order[0]
    j = kappas[pos]
    remaining = [kappas[i] for i in range(len(kappas)) if i != pos]
    rest_order = tuple(
        (o - 1 if o > pos else o) for o in order[1:]
    )
    total = Fraction(0)
    m = len(remaining)
    for mask in range(1 << m):
        chosen = [remaining[i] for i in range(m) if mask >> i & 1]
        kept = [remaining[i] for i in range(m) if not mask >> i & 1]
        sign = (-1) ** len(chosen)
        new_psi = j + 1 + sum(chosen)
        keep_idx = [i for i in range(m) if not mask >> i & 1]
        reindex = {old: new for new, old in enumerate(keep_idx)}
        sub_order = tuple(reindex[o] for o in rest_order if o in reindex)
        total += sign * _iterated(g, tuple(kept), psis + (new_psi,), sub_order)
    return total


def kappa_to_psi_iterated(
    g: int, kappas: Sequence[int], psis: Sequence[int], order: Sequence[int] | None = None
) -> Fraction:
    """Same integral as :func:`kappa_to_psi`, by adding one point at a time.

    ``order`` lists the κ factors in the order they are traded for a new
    marked point; the answer must not depend on it.
    """
    _check_kappa_key(g, kappas, psis)
    kappas = tuple(kappas)
    order = tuple(range(len(kappas))) if order is None else tuple(order)
    if sorted(order) != list(range(len(kappas))):
        raise ValueError("order must be a permutation of the κ positions")
    return _iterated(g, kappas, tuple(psis), order)


def fiber_product_check(g: int, order: int) -> dict:
    """Compare the ζ₁-translation of the rank-one trivial theory with ``(1+ζ₁)^{1−2g}``.

    The coefficient of ``ζ₁^k`` in the translated ``(g, 1)`` entry is
    ``(−1)^k/k! · ⟨τ_{3g−2} τ_1^k⟩_g``; divided by ``⟨τ_{3g−2}⟩_g`` it must equal
    ``binom(1−2g, k)``.
    """
    if g < 1:
        raise ValueError("fiber_product_check requires g ≥ 1")
    base = wk_intersection(g, (3 * g - 2,))
    coeffs, expected = [], []
    for k in range(order + 1):
        val = Fraction((-1) ** k, factorial(k)) * wk_intersection(g, (3 * g - 2,) + (1,) * k)
        coeffs.append(val / base)
        expected.append(_gen_binom(1 - 2 * g, k))
    return {
        "g": g,
        "order": order,
        "coefficients": coeffs,
        "expected": expected,
        "passed": coeffs == expected,
    }


def _gen_binom(top: int, k: int) -> Fraction:
    out = Fraction(1)
    for i in range(k):
        out = out * (top - i) / (i + 1)
    return out


def binomial_series(exponent: int, order: int) -> list[Fraction]:
    """Taylor coefficients of ``(1+x)^exponent`` up to ``x^order``."""
    return [_gen_binom(exponent, k) for k in range(order + 1)]

