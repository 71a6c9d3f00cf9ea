"""Numerical checks of the zeta-series route to the basic product identity.

Chain: the alternating zeta power series equals a rational series; that
yields ``1/b = sum_{k>=1} 1/((bk+1)(bk+1-b))``, whose integrated and
exponentiated form is ``2b/(b+1) = prod_{k>=2} k(bk+1)/((bk-b+1)(k+1))``;
substituting ``s = 2b/(b+1)`` recovers ``PROD-BASIC``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import bernoulli

from .catalog import Identity, ParamSet, get_identity
from .errors import DomainError, InvalidInputError
from .evaluator import EvaluationRequest, evaluate, partial_value
from .numerics import TolerancePolicy

__all__ = [
    "ZetaValue",
    "ChainLink",
    "ChainReport",
    "zeta_int",
    "alternating_zeta_series",
    "rational_series",
    "base_sum",
    "base_product",
    "verify_chain",
    "BASE_SUM",
    "BASE_PRODUCT",
    "RATIONAL_SERIES",
]

_BERNOULLI = bernoulli(40)


@dataclass(frozen=True)
class ZetaValue:
    n: int
    value: float
    tail_bound: float
    cutoff: int


@lru_cache(maxsize=None)
def zeta_int(n: int, tol: float = 1e-15) -> ZetaValue:
    """``zeta(n)`` for integer ``n >= 2``.

    Sums ``j**-n`` for ``j < M`` and closes the tail with the Euler-Maclaurin
    expansion (integral, half end term and Bernoulli corrections).  The
    cutoff ``M`` grows until the first omitted correction is below ``tol``;
    that magnitude is reported as ``tail_bound``.
    """
    if int(n) != n or n < 2:
        raise DomainError("zeta_int", "integer n ≥ 2")
    n = int(n)
    m = 8
    while True:
        head = math.fsum(j ** -float(n) for j in range(1, m))
        corr = [m ** (1.0 - n) / (n - 1), 0.5 * m ** -float(n)]
        rising = float(n)  # n (n+1) ... (n+2q-2)
        bound = math.inf
        for q in range(1, 20):
            t = _BERNOULLI[2 * q] / math.factorial(2 * q) * rising * m ** (-float(n) - 2 * q + 1)
            if abs(t) < tol:
                bound = float(abs(t))
                break
            corr.append(t)
            rising *= (n + 2 * q - 1) * (n + 2 * q)
        if bound < tol or m > 10**6:
            return ZetaValue(n, math.fsum([head, *corr]), bound, m)
        m *= 2


def alternating_zeta_series(s: complex, tol: float = 1e-12) -> complex:
    """``sum_{k>=1} (-1)^(k+1) s^(k+1) zeta(k+1)``, truncated once an addend < ``tol``."""
    s = complex(s)
    if abs(s) >= 1:
        raise DomainError("alternating_zeta_series", "|s| < 1")
    total, k = [], 1
    while True:
        addend = (-1) ** (k + 1) * s ** (k + 1) * zeta_int(k + 1).value
        total.append(addend)
        if abs(addend) < tol:
            break
        k += 1
    return complex(math.fsum(a.real for a in total), math.fsum(a.imag for a in total))


def _no_pole(p: ParamSet) -> bool:
    s = p.s
    return not (s.imag == 0 and s.real < 0 and s.real == int(s.real))


RATIONAL_SERIES = Identity(
    id="APPX-RATIONAL",
    kind="sum",
    equation="40",
    start_index=1,
    finite=False,
    params=("s",),
    lhs=lambda p: alternating_zeta_series(p.s),
    term=lambda k, p: p.s**2 / (k * (k + p.s)),
    denominators=lambda k, p: (k, k + p.s),
    constraints=(("s ∉ {-1, -2, ...}", _no_pole),),
    lhs_text="sum (-1)^(k+1) s^(k+1) zeta(k+1)",
    rhs_text="sum_{k>=1} s^2/(k(k+s))",
)


def rational_series(s: complex, tol: float = 1e-10, policy: TolerancePolicy | None = None) -> complex:
    """``sum_{k>=1} s^2/(k(k+s))`` evaluated to tolerance with acceleration."""
    p = ParamSet(s=s)
    RATIONAL_SERIES.domain_guard(p)
    if p.s == 0:
        return 0j
    policy = policy or TolerancePolicy(rel_tol=tol)
    return evaluate(EvaluationRequest(RATIONAL_SERIES, p, policy=policy)).value


def _positive_b(p: ParamSet) -> bool:
    return p.b.imag == 0 and p.b.real > 0


BASE_SUM = Identity(
    id="APPX-BASE-SUM",
    kind="sum",
    equation="41",
    start_index=1,
    finite=False,
    params=("b",),
    lhs=lambda p: 1 / p.b,
    term=lambda k, p: 1 / ((p.b * k + 1) * (p.b * k + 1 - p.b)),
    denominators=lambda k, p: (p.b * k + 1, p.b * k + 1 - p.b),
    partial_closed_form=lambda n, p: 1 / p.b - 1 / (p.b * (p.b * n + 1)),
    constraints=(("real b > 0", _positive_b),),
    lhs_text="1/b",
    rhs_text="sum_{k>=1} 1/((bk+1)(bk+1-b))",
)

BASE_PRODUCT = Identity(
    id="APPX-BASE-PRODUCT",
    kind="product",
    equation="43",
    start_index=2,
    finite=False,
    params=("b",),
    lhs=lambda p: 2 * p.b / (p.b + 1),
    term=lambda k, p: k * (p.b * k + 1) / ((p.b * k - p.b + 1) * (k + 1)),
    denominators=lambda k, p: (p.b * k - p.b + 1, k + 1),
    partial_closed_form=lambda n, p: 2 * (p.b * n + 1) / ((n + 1) * (p.b + 1)),
    constraints=(("real b > 0", _positive_b),),
    lhs_text="2b/(b+1)",
    rhs_text="prod_{k>=2} k(bk+1)/((bk-b+1)(k+1))",
)


def _appendix_value(ident: Identity, b: float, n: int | None, policy: TolerancePolicy | None):
    p = ParamSet(b=b)
    if n is not None:
        return partial_value(ident, p, n)
    return evaluate(EvaluationRequest(ident, p, policy=policy or TolerancePolicy())).value


def base_sum(b: float, n: int | None = None, policy: TolerancePolicy | None = None) -> complex:
    """Partial sum to ``n`` (``n >= 1``), or the converged value when ``n`` is None."""
    if n is not None and n < 1:
        raise InvalidInputError("base_sum needs N >= 1")
    return _appendix_value(BASE_SUM, b, n, policy)


def base_product(b: float, n: int | None = None, policy: TolerancePolicy | None = None) -> complex:
    """Partial product to ``n`` (``n >= 2``), or the converged value when ``n`` is None."""
    if n is not None and n < 2:
        raise InvalidInputError("base_product needs N >= 2")
    return _appendix_value(BASE_PRODUCT, b, n, policy)


@dataclass(frozen=True)
class ChainLink:
    name: str
    value: complex
    expected: complex
    error: float
    passed: bool


@dataclass(frozen=True)
class ChainReport:
    b: float
    s: complex
    links: tuple[ChainLink, ...]

    @property
    def passed(self) -> bool:
        return all(link.passed for link in self.links)

    @property
    def values(self) -> tuple[complex, ...]:
        return tuple(link.value for link in self.links)


def verify_chain(b: float, tol: float = 1e-8, policy: TolerancePolicy | None = None) -> ChainReport:
    """Check the three linked steps at ``b`` with ``s = 2b/(b+1)``.

    (i) the base sum converges to ``1/b``; (ii) the base product converges to
    ``2b/(b+1)``; (iii) ``PROD-BASIC`` at ``s`` agrees with the base product.
    """
    p = ParamSet(b=b)
    BASE_SUM.domain_guard(p)
    b_ = p.b
    s = 2 * b_ / (b_ + 1)
    policy = policy or TolerancePolicy()

    def link(name: str, value: complex, expected: complex) -> ChainLink:
        err = abs(value - expected)
        return ChainLink(name, value, expected, err, err <= tol * max(1.0, abs(expected)))

    sum_v = base_sum(b_.real, policy=policy)
    prod_v = base_product(b_.real, policy=policy)
    basic = evaluate(EvaluationRequest(get_identity("PROD-BASIC"), ParamSet(s=s), policy=policy)).value
    return ChainReport(
        float(b_.real),
        s,
        (
            link("base-sum", sum_v, 1 / b_),
            link("base-product", prod_v, 2 * b_ / (b_ + 1)),
            link("prod-basic", basic, prod_v),
        ),
    )
