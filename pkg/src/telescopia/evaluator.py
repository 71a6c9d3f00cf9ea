"""Partial and converged values of telescoping products and sums."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .catalog import Identity, ParamSet, get_identity
from .errors import InvalidInputError, NonFiniteError
from .numerics import ConvergenceResult, TolerancePolicy, estimate_tail, iterated_aitken

__all__ = [
    "EvaluationRequest",
    "partial_product",
    "partial_sum",
    "partial_value",
    "evaluate",
    "FIRST_CHECKPOINT",
]

FIRST_CHECKPOINT = 64
MODES = ("fixed-N", "to-tolerance")


def _resolve(identity: str | Identity) -> Identity:
    return get_identity(identity) if isinstance(identity, str) else identity


def _finite(value: complex, ident: Identity, n: int) -> complex:
    if not (math.isfinite(value.real) and math.isfinite(value.imag)):
        raise NonFiniteError(f"{ident.id}: non-finite value {value!r} at N={n}")
    return value


class _Accumulator:
    """Running left-to-right product or sum of an identity's terms."""

    def __init__(self, ident: Identity, params: ParamSet, abs_tol: float, compensated: bool):
        self.ident = ident
        self.params = params
        self.abs_tol = abs_tol
        self.is_product = ident.kind == "product"
        self.compensated = compensated and not self.is_product
        self.acc = complex(1.0 if self.is_product else 0.0)
        self.upto = ident.start_index - 1
        self._terms: list[np.ndarray] = []

    def advance(self, n: int) -> complex:
        if n > self.upto:
            k = np.arange(self.upto + 1, n + 1, dtype=float)
            self.ident.check_denominators(k, self.params, self.abs_tol)
            terms = self.ident.terms(k, self.params)
            chain = np.concatenate(([self.acc], terms))
            if self.is_product:
                self.acc = complex(np.cumprod(chain)[-1])
            elif self.compensated:
                self._terms.append(terms)
                allt = np.concatenate(self._terms)
                self.acc = complex(math.fsum(allt.real), math.fsum(allt.imag))
            else:
                self.acc = complex(np.cumsum(chain)[-1])
            self.upto = n
        value = complex(self.ident.prefactor(self.params)) * self.acc
        return _finite(value, self.ident, n)


def partial_value(
    identity: str | Identity,
    params: ParamSet,
    n: int,
    abs_tol: float = 1e-14,
    compensated: bool = False,
) -> complex:
    """``prefactor * AGG_{k=start}^{n} term(k)``, accumulated in increasing ``k``."""
    ident = _resolve(identity)
    ident.domain_guard(params)
    if n < ident.start_index:
        raise InvalidInputError(f"{ident.id}: N={n} is below start index {ident.start_index}")
    if ident.finite and n > params.n_terms:
        raise InvalidInputError(f"{ident.id}: N={n} exceeds the identity's N={params.n_terms}")
    return _Accumulator(ident, params, abs_tol, compensated).advance(int(n))


def partial_product(
    identity: str | Identity, params: ParamSet, n: int, abs_tol: float = 1e-14
) -> complex:
    ident = _resolve(identity)
    if ident.kind != "product":
        raise InvalidInputError(f"{ident.id} is a sum, not a product")
    return partial_value(ident, params, n, abs_tol)


def partial_sum(
    identity: str | Identity,
    params: ParamSet,
    n: int,
    abs_tol: float = 1e-14,
    compensated: bool = False,
) -> complex:
    ident = _resolve(identity)
    if ident.kind != "sum":
        raise InvalidInputError(f"{ident.id} is a product, not a sum")
    return partial_value(ident, params, n, abs_tol, compensated)


@dataclass(frozen=True)
class EvaluationRequest:
    identity: str | Identity
    params: ParamSet = field(default_factory=ParamSet)
    mode: str = "to-tolerance"
    n: int | None = None
    policy: TolerancePolicy = field(default_factory=TolerancePolicy)
    accelerate: bool = True
    compensated: bool = False
    depth: int = 2


def _checkpoints(max_terms: int) -> list[int]:
    if max_terms < FIRST_CHECKPOINT:
        return [max_terms]
    out = [FIRST_CHECKPOINT]
    while out[-1] * 2 <= max_terms:
        out.append(out[-1] * 2)
    return out


def _estimate(partials: list[complex], ns: list[int], req: EvaluationRequest):
    if req.accelerate:
        levels = iterated_aitken(partials, req.depth, req.policy.abs_tol)
        usable = [lev for lev in levels if lev.size >= 2]
        if not usable:
            return partials[-1], math.inf
        best = usable[-1]
        return complex(best[-1]), float(abs(best[-1] - best[-2]))
    if len(partials) < 3:
        return partials[-1], math.inf
    return partials[-1], estimate_tail(partials, "one-over-n-extrapolation", ns)


def evaluate(request: EvaluationRequest) -> ConvergenceResult:
    """Evaluate an identity's right side at fixed ``N`` or to tolerance.

    In ``to-tolerance`` mode the partial value is sampled at N = 64, 128, ...
    (doubling while ``N <= max_terms``).  With ``accelerate`` the samples are
    passed through repeated Aitken Δ² (``depth`` levels) and the error estimate
    is the last increment of the deepest level that has two entries; otherwise
    a ``C/N`` tail is fitted.  Running out of terms yields
    ``converged=False`` rather than an error.
    """
    ident = _resolve(request.identity)
    p, policy = request.params, request.policy
    if request.mode not in MODES:
        raise InvalidInputError(f"mode must be one of {MODES}, got {request.mode!r}")
    ident.domain_guard(p)

    if request.mode == "fixed-N" or ident.finite:
        if request.mode == "to-tolerance":
            raise InvalidInputError(
                f"{ident.id} is a finite identity; evaluate it in fixed-N mode"
            )
        n = request.n if request.n is not None else p.n_terms
        if n is None:
            raise InvalidInputError("fixed-N mode needs N")
        if n < ident.start_index:
            raise InvalidInputError(f"{ident.id}: N={n} is below start index {ident.start_index}")
        if ident.finite:
            value = partial_value(ident, p, n, policy.abs_tol, request.compensated)
            return ConvergenceResult(value, int(n), 0.0, True)
        acc = _Accumulator(ident, p, policy.abs_tol, request.compensated)
        if n - 2 >= ident.start_index:
            ns = [n - 2, n - 1, n]
            vals = [acc.advance(m) for m in ns]
            est = estimate_tail(vals, "one-over-n-extrapolation", ns)
        else:
            vals, est = [acc.advance(n)], math.inf
        return ConvergenceResult(vals[-1], int(n), est, est <= policy.target(vals[-1]))

    acc = _Accumulator(ident, p, policy.abs_tol, request.compensated)
    partials: list[complex] = []
    ns: list[int] = []
    value, est = complex("nan"), math.inf
    for n in _checkpoints(policy.max_terms):
        ns.append(n)
        partials.append(acc.advance(n))
        value, est = _estimate(partials, ns, request)
        if est <= policy.target(value):
            return ConvergenceResult(value, n, est, True)
    return ConvergenceResult(value, ns[-1], est, False)
