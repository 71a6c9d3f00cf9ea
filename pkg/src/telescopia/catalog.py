"""Built-in telescoping product and sum identities.

Every entry is an :class:`Identity`: a per-index ``term`` (vectorised over a
float array of indices), the denominators that must stay away from zero, a
constant ``prefactor`` applied once after aggregation, and the closed-form left
side.  Where the partial product/sum telescopes, ``partial_closed_form`` gives
its exact value at any upper index.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace
from typing import Callable, Sequence

import numpy as np

from .errors import ApparentSingularityError, DomainError, InvalidInputError, UnknownIdentityError

__all__ = [
    "ParamSet",
    "Identity",
    "CATALOG",
    "get_identity",
    "list_catalog",
    "lhs_value",
    "term_value",
]

PARAM_NAMES = ("s", "alpha", "r", "n", "z", "b")


@dataclass(frozen=True)
class ParamSet:
    """Free parameters of the identities; unused fields are ignored."""

    s: complex = 1.0
    alpha: complex = 1.0
    r: float = 2.0
    n_terms: int | None = None
    z: complex = 0.5
    b: complex = 1.0

    def __post_init__(self) -> None:
        for name in ("s", "alpha", "z", "b"):
            object.__setattr__(self, name, complex(getattr(self, name)))
        r = getattr(self, "r")
        if isinstance(r, complex):
            if r.imag != 0:
                raise InvalidInputError("r must be real")
            r = r.real
        object.__setattr__(self, "r", float(r))
        if self.n_terms is not None:
            n = self.n_terms
            if isinstance(n, complex):
                n = n.real
            if int(n) != n:
                raise InvalidInputError(f"N must be an integer, got {n!r}")
            object.__setattr__(self, "n_terms", int(n))


def _real_view(p: ParamSet) -> SimpleNamespace | None:
    vals = {name: getattr(p, name) for name in ("s", "alpha", "z", "b")}
    if any(v.imag != 0 for v in vals.values()):
        return None
    return SimpleNamespace(
        **{name: v.real for name, v in vals.items()}, r=p.r, n_terms=p.n_terms
    )


Term = Callable[[np.ndarray, ParamSet], np.ndarray]
Denoms = Callable[[np.ndarray, ParamSet], Sequence[np.ndarray]]
Constraint = tuple[str, Callable[[ParamSet], bool]]


def _one(p: ParamSet) -> complex:
    return 1.0 + 0j


@dataclass(frozen=True)
class Identity:
    """A telescoping product (``kind='product'``) or sum (``kind='sum'``).

    The value of the right side up to index ``N`` is
    ``prefactor(p) * AGG_{k=start_index}^{N} term(k, p)`` with AGG the product
    or the sum.  ``lhs`` is the claimed limit (infinite identities) or the exact
    value at ``N = p.n_terms`` (finite identities).
    """

    id: str
    kind: str
    equation: str
    start_index: int
    finite: bool
    params: tuple[str, ...]
    lhs: Callable[[ParamSet], complex]
    term: Term
    denominators: Denoms
    prefactor: Callable[[ParamSet], complex] = _one
    partial_closed_form: Callable[[int, ParamSet], complex] | None = None
    constraints: tuple[Constraint, ...] = ()
    lhs_text: str = ""
    rhs_text: str = ""
    extra: dict = field(default_factory=dict, compare=False, hash=False)

    def domain_guard(self, p: ParamSet) -> None:
        """Raise :class:`DomainError` naming the first violated constraint."""
        if self.finite:
            if p.n_terms is None:
                raise DomainError(self.id, "N (finite identity needs an upper index)")
            if p.n_terms < self.start_index:
                raise DomainError(self.id, f"N >= {self.start_index}")
        for text, ok in self.constraints:
            if not ok(p):
                raise DomainError(self.id, text)

    def terms(self, k: np.ndarray, p: ParamSet) -> np.ndarray:
        """``term`` over an array of ``k`` as complex values.

        Real parameters are evaluated in real arithmetic first, since complex
        division is not exact even when both operands are real (PROD-BASIC at
        s=1 would otherwise drift from 1 by a few ulp).  Branch cuts such as a
        negative base under a fractional power fall back to complex.
        """
        with np.errstate(all="ignore"):
            view = _real_view(p)
            if view is not None:
                out = np.asarray(self.term(k, view))
                if np.all(np.isfinite(out)) and not np.any(np.imag(out)):
                    return np.broadcast_to(out.astype(complex), k.shape)
            return np.broadcast_to(np.asarray(self.term(k, p), dtype=complex), k.shape)

    def check_denominators(self, k: np.ndarray, p: ParamSet, abs_tol: float = 1e-14) -> None:
        for den in self.denominators(k, p):
            den = np.broadcast_to(np.asarray(den), k.shape)
            bad = np.abs(den) < abs_tol
            if bad.any():
                i = int(np.argmax(bad))
                raise ApparentSingularityError(self.id, int(k[i]), complex(den[i]))

    def describe(self) -> dict:
        return {
            "id": self.id,
            "kind": self.kind,
            "equation": self.equation,
            "start_index": self.start_index,
            "finite": self.finite,
            "params": list(self.params),
            "constraints": [text for text, _ in self.constraints],
            "lhs": self.lhs_text,
            "rhs": self.rhs_text,
        }


def _nonzero(name: str) -> Constraint:
    sym = {"alpha": "α"}.get(name, name)
    return (f"{sym} ≠ 0", lambda p: getattr(p, name) != 0)


def _n(p: ParamSet) -> int:
    return int(p.n_terms)


_R_POSITIVE: Constraint = ("r > 0", lambda p: p.r > 0)
_ALPHA, _S, _Z = _nonzero("alpha"), _nonzero("s"), _nonzero("z")


# --- products -------------------------------------------------------------

def _param_term(k, p, a):
    s = p.s
    return k * (s * (k - 1) + a) / ((k + 1) * (s * (k - 2) + a))


def _power_ratio_term(k, p):
    s, a, r = p.s, p.alpha, p.r
    sr = s**r
    ratio = k / (k + 1)
    return (
        ratio ** (r - 1)
        * (s * (k - 1) + a) ** r
        * (sr * (k - 2) + a)
        / ((sr * (k - 1) + a) * (s * (k - 2) + a) ** r)
    )


def _power_ratio_closed(n, p):
    s, a, r = p.s, p.alpha, p.r
    return (
        (2 / (n + 1)) ** (r - 1)
        * ((s * (n - 1) + a) / a) ** r
        * a
        / (s**r * (n - 1) + a)
    )


def _z_term(k, p):
    z, n = p.z, _n(p)
    return (k * (1 - z) + z * (n + 1) - 1) / (k * (1 - z) + n * z)


def _z_closed(m, p):
    z, n = p.z, _n(p)
    return n * z / (n * z + m * (1 - z))


def _power_term(k, p):
    s, a, r = p.s, p.alpha, p.r
    sr = s**r
    return (k / (k + 1)) ** r * (sr * (k - 1) ** r + a) / (sr * (k - 2) ** r + a)


def _power_closed(n, p):
    s, a, r = p.s, p.alpha, p.r
    return (s**r * (n - 1) ** r + a) / (n + 1) ** r


PRODUCTS = (
    Identity(
        id="PROD-BASIC", kind="product", equation="3", start_index=2, finite=False,
        params=("s",),
        lhs=lambda p: p.s,
        term=lambda k, p: _param_term(k, p, 2.0),
        denominators=lambda k, p: (k + 1, p.s * (k - 2) + 2),
        partial_closed_form=lambda n, p: (p.s * (n - 1) + 2) / (n + 1),
        lhs_text="s",
        rhs_text="prod_{k>=2} k(s(k-1)+2) / ((k+1)(s(k-2)+2))",
    ),
    Identity(
        id="PROD-PARAM", kind="product", equation="4", start_index=2, finite=False,
        params=("s", "alpha"),
        lhs=lambda p: p.s,
        term=lambda k, p: _param_term(k, p, p.alpha),
        denominators=lambda k, p: (k + 1, p.s * (k - 2) + p.alpha),
        prefactor=lambda p: p.alpha / 2,
        partial_closed_form=lambda n, p: (p.s * (n - 1) + p.alpha) / (n + 1),
        constraints=(_ALPHA,),
        lhs_text="s",
        rhs_text="(α/2) prod_{k>=2} k(s(k-1)+α) / ((k+1)(s(k-2)+α))",
    ),
    Identity(
        id="PROD-POWER-RATIO", kind="product", equation="5", start_index=2, finite=False,
        params=("s", "alpha", "r"),
        lhs=lambda p: (2 / p.alpha) ** (p.r - 1),
        term=_power_ratio_term,
        denominators=lambda k, p: (
            k + 1, p.s**p.r * (k - 1) + p.alpha, p.s * (k - 2) + p.alpha,
        ),
        partial_closed_form=_power_ratio_closed,
        constraints=(_S, _ALPHA),
        lhs_text="(2/α)^(r-1)",
        rhs_text="prod_{k>=2} k^(r-1)(s(k-1)+α)^r(s^r(k-2)+α) / ((k+1)^(r-1)(s^r(k-1)+α)(s(k-2)+α)^r)",
    ),
    Identity(
        id="PROD-FINITE", kind="product", equation="6", start_index=2, finite=True,
        params=("s", "alpha", "n"),
        lhs=lambda p: ((_n(p) - 1) * p.s + p.alpha) / (_n(p) + 1),
        term=lambda k, p: _param_term(k, p, p.alpha),
        denominators=lambda k, p: (k + 1, p.s * (k - 2) + p.alpha),
        prefactor=lambda p: p.alpha / 2,
        partial_closed_form=lambda m, p: ((m - 1) * p.s + p.alpha) / (m + 1),
        constraints=(_ALPHA,),
        lhs_text="((N-1)s+α)/(N+1)",
        rhs_text="(α/2) prod_{k=2}^{N} k(s(k-1)+α) / ((k+1)(s(k-2)+α))",
    ),
    Identity(
        id="PROD-TRIVIAL", kind="product", equation="7", start_index=1, finite=True,
        params=("s", "n"),
        lhs=lambda p: p.s / (p.s + _n(p)),
        term=lambda j, p: 1 - 1 / (p.s + j),
        denominators=lambda j, p: (p.s + j,),
        partial_closed_form=lambda m, p: p.s / (p.s + m),
        constraints=(("s + N ≠ 0", lambda p: p.s + _n(p) != 0),),
        lhs_text="s/(s+N)",
        rhs_text="prod_{j=1}^{N} (1 - 1/(s+j))",
    ),
    Identity(
        id="PROD-Z", kind="product", equation="9", start_index=1, finite=True,
        params=("z", "n"),
        lhs=lambda p: p.z,
        term=_z_term,
        denominators=lambda j, p: (j * (1 - p.z) + _n(p) * p.z,),
        partial_closed_form=_z_closed,
        constraints=(_Z, ("z ≠ 1", lambda p: p.z != 1)),
        lhs_text="z",
        rhs_text="prod_{j=1}^{N} (j(1-z)+z(N+1)-1) / (j(1-z)+Nz)",
    ),
    Identity(
        id="PROD-POWER", kind="product", equation="17", start_index=2, finite=False,
        params=("s", "alpha", "r"),
        lhs=lambda p: p.s**p.r,
        term=_power_term,
        denominators=lambda k, p: (k + 1, p.s**p.r * (k - 2) ** p.r + p.alpha),
        prefactor=lambda p: p.alpha / 2**p.r,
        partial_closed_form=_power_closed,
        constraints=(_S, _ALPHA, _R_POSITIVE),
        lhs_text="s^r",
        rhs_text="(α/2^r) prod_{k>=2} k^r(s^r(k-1)^r+α) / ((k+1)^r(s^r(k-2)^r+α))",
    ),
)


# --- sums -----------------------------------------------------------------

def _pair(k, p, a):
    s = p.s
    return s * (k - 1) + a, s * (k - 2) + a


def _param_sum_term(k, p):
    hi, lo = _pair(k, p, p.alpha)
    return p.s / (hi * lo)


def _param_sum_closed(n, p):
    return 1 / p.alpha - 1 / (p.s * (n - 1) + p.alpha)


def _power_ratio_sum_term(k, p):
    s, a, r = p.s, p.alpha, p.r
    sr = s**r
    hi, lo = _pair(k, p, a)
    return -r * s / (hi * lo) + sr / ((sr * (k - 1) + a) * (sr * (k - 2) + a))


def _power_ratio_sum_closed(n, p):
    s, a, r = p.s, p.alpha, p.r
    return -r * (1 / a - 1 / (s * (n - 1) + a)) + 1 / a - 1 / (s**r * (n - 1) + a)


def _z_sum_term(j, p):
    z, n = p.z, _n(p)
    return 1 / ((j * (1 - z) + z * (n + 1) - 1) * (j * (1 - z) + n * z))


def _z_sum_closed(m, p):
    z, n = p.z, _n(p)
    return m / (z * (n * z + m * (1 - z)))


def _power_sum_term(k, p):
    s, a, r = p.s, p.alpha, p.r
    sr = s**r
    hi, lo = (k - 1) ** r, (k - 2) ** r
    return (hi - lo) / ((sr * hi + a) * (sr * lo + a))


def _power_sum_closed(n, p):
    s, a, r = p.s, p.alpha, p.r
    return 1 / s - a / (s * (s**r * (n - 1) ** r + a))


SUMS = (
    Identity(
        id="SUM-BASIC", kind="sum", equation="11", start_index=2, finite=False,
        params=("s",),
        lhs=lambda p: 1 / p.s,
        term=lambda k, p: 1 / (_pair(k, p, 2.0)[0] * _pair(k, p, 2.0)[1]),
        denominators=lambda k, p: _pair(k, p, 2.0),
        prefactor=lambda p: 2.0 + 0j,
        partial_closed_form=lambda n, p: 1 / p.s - 2 / (p.s * (p.s * (n - 1) + 2)),
        constraints=(_S,),
        lhs_text="1/s",
        rhs_text="2 sum_{k>=2} 1/((s(k-1)+2)(s(k-2)+2))",
    ),
    Identity(
        id="SUM-PARAM", kind="sum", equation="12", start_index=2, finite=False,
        params=("s", "alpha"),
        lhs=lambda p: 1 / p.alpha,
        term=_param_sum_term,
        denominators=lambda k, p: _pair(k, p, p.alpha),
        partial_closed_form=_param_sum_closed,
        constraints=(_S, _ALPHA),
        lhs_text="1/α",
        rhs_text="sum_{k>=2} s/((s(k-1)+α)(s(k-2)+α))",
    ),
    Identity(
        id="SUM-POWER-RATIO", kind="sum", equation="13", start_index=2, finite=False,
        params=("s", "alpha", "r"),
        lhs=lambda p: (1 - p.r) / p.alpha,
        term=_power_ratio_sum_term,
        denominators=lambda k, p: (
            *_pair(k, p, p.alpha),
            p.s**p.r * (k - 1) + p.alpha,
            p.s**p.r * (k - 2) + p.alpha,
        ),
        partial_closed_form=_power_ratio_sum_closed,
        constraints=(_S, _ALPHA),
        lhs_text="(1-r)/α",
        rhs_text="sum_{k>=2} -rs/((s(k-1)+α)(s(k-2)+α)) + s^r/((s^r(k-1)+α)(s^r(k-2)+α))",
    ),
    Identity(
        id="SUM-FINITE", kind="sum", equation="14", start_index=2, finite=True,
        params=("s", "alpha", "n"),
        lhs=lambda p: _param_sum_closed(_n(p), p),
        term=_param_sum_term,
        denominators=lambda k, p: _pair(k, p, p.alpha),
        partial_closed_form=_param_sum_closed,
        constraints=(_S, _ALPHA, ("(N-1)s + α ≠ 0", lambda p: (_n(p) - 1) * p.s + p.alpha != 0)),
        lhs_text="1/α - 1/((N-1)s+α)",
        rhs_text="s sum_{k=2}^{N} 1/((s(k-1)+α)(s(k-2)+α))",
    ),
    Identity(
        id="SUM-Z", kind="sum", equation="15", start_index=1, finite=True,
        params=("z", "n"),
        lhs=lambda p: 1 / p.z,
        term=_z_sum_term,
        denominators=lambda j, p: (
            j * (1 - p.z) + p.z * (_n(p) + 1) - 1,
            j * (1 - p.z) + _n(p) * p.z,
        ),
        prefactor=lambda p: complex(_n(p)),
        partial_closed_form=_z_sum_closed,
        constraints=(_Z,),
        lhs_text="1/z",
        rhs_text="N sum_{j=1}^{N} 1/([j(1-z)+z(N+1)-1][j(1-z)+Nz])",
    ),
    Identity(
        id="SUM-TRIVIAL", kind="sum", equation="16", start_index=1, finite=True,
        params=("s", "n"),
        lhs=lambda p: _n(p) / ((p.s + _n(p)) * p.s),
        term=lambda k, p: 1 / ((p.s + k) * (p.s + k - 1)),
        denominators=lambda k, p: (p.s + k, p.s + k - 1),
        partial_closed_form=lambda m, p: m / ((p.s + m) * p.s),
        constraints=(_S, ("s + N ≠ 0", lambda p: p.s + _n(p) != 0)),
        lhs_text="N/((s+N)s)",
        rhs_text="sum_{k=1}^{N} 1/((s+k)(s+k-1))",
    ),
    Identity(
        id="SUM-POWER", kind="sum", equation="18", start_index=2, finite=False,
        params=("s", "alpha", "r"),
        lhs=lambda p: 1 / p.s,
        term=_power_sum_term,
        denominators=lambda k, p: (
            p.s**p.r * (k - 1) ** p.r + p.alpha,
            p.s**p.r * (k - 2) ** p.r + p.alpha,
        ),
        prefactor=lambda p: p.alpha * p.s ** (p.r - 1),
        partial_closed_form=_power_sum_closed,
        constraints=(_S, _ALPHA, _R_POSITIVE),
        lhs_text="1/s",
        rhs_text="α s^(r-1) sum_{k>=2} ((k-1)^r-(k-2)^r) / ((s^r(k-1)^r+α)(s^r(k-2)^r+α))",
    ),
)

CATALOG: dict[str, Identity] = {ident.id: ident for ident in PRODUCTS + SUMS}


def get_identity(identity_id: str) -> Identity:
    try:
        return CATALOG[identity_id]
    except KeyError:
        raise UnknownIdentityError(f"unknown identity {identity_id!r}") from None


def list_catalog() -> list[dict]:
    """Descriptor metadata for all catalog entries, products first."""
    return [ident.describe() for ident in CATALOG.values()]


def lhs_value(identity: str | Identity, params: ParamSet) -> complex:
    ident = get_identity(identity) if isinstance(identity, str) else identity
    ident.domain_guard(params)
    return complex(ident.lhs(params))


def term_value(
    identity: str | Identity, k: int, params: ParamSet, abs_tol: float = 1e-14
) -> complex:
    """The ``k``-th factor or addend, without the aggregation prefactor."""
    ident = get_identity(identity) if isinstance(identity, str) else identity
    ident.domain_guard(params)
    if k < ident.start_index:
        raise InvalidInputError(f"{ident.id}: k={k} is below start index {ident.start_index}")
    if ident.finite and k > params.n_terms:
        raise InvalidInputError(f"{ident.id}: k={k} exceeds N={params.n_terms}")
    ks = np.array([float(k)])
    ident.check_denominators(ks, params, abs_tol)
    return complex(ident.terms(ks, params)[0])
