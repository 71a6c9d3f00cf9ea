"""Synthesis of telescoping products from a generator function ``f``.

For a function ``f`` and constants ``alpha``, ``beta`` the product

    beta * prod_{k>=2} f(k) (f(s(k-1)) + alpha) / (f(k+1) (f(s(k-2)) + alpha))

telescopes to ``beta f(2) (f(s(N-1)) + alpha) / ((f(0) + alpha) f(N+1))``.
Its limit is finite and nonzero when ``f`` is power-law (``f(sN)/f(N) -> C0 s^r``)
or saturating (``f(N) -> L``).  Summation identities follow by differentiating
the logarithm of the product in ``alpha`` or in ``s``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .catalog import Identity, ParamSet
from .errors import (
    CapabilityError,
    ClassificationConflictError,
    DomainError,
    InvalidInputError,
    UnknownIdentityError,
    UnsupportedFunctionError,
)

__all__ = [
    "PowerLaw",
    "Saturating",
    "GeneratorFunction",
    "GeneratedIdentity",
    "DerivedSum",
    "CrossCheck",
    "PRESETS",
    "PRINTED_TERMS",
    "get_preset",
    "classify",
    "solve_scale",
    "synthesize",
    "derive_sum",
    "cross_check_printed_terms",
    "finite_difference",
]

CLASSIFY_PROBES = (10**3, 10**4, 10**5, 10**6)
CLASSIFY_S = 2.0
STABILITY = 1e-3
SATURATION_PROBE = 10**6


@dataclass(frozen=True)
class PowerLaw:
    C0: complex = 1.0
    r: float = 1.0


@dataclass(frozen=True)
class Saturating:
    L: complex = 1.0


AsymptoticClass = Union[PowerLaw, Saturating]
ArrayFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class GeneratorFunction:
    """A generator ``f`` with optional analytic derivative.

    ``eval`` and ``deriv`` must accept numpy arrays (real or complex) and be
    pure; they are called concurrently during sweeps.
    """

    name: str
    eval: ArrayFn
    deriv: ArrayFn | None = None
    declared_class: AsymptoticClass | None = None
    formula: str = ""

    def __call__(self, x):
        with np.errstate(all="ignore"):
            return np.asarray(self.eval(np.asarray(x)))


def finite_difference(f: ArrayFn) -> ArrayFn:
    """Central difference with step ``1e-6 * max(1, |x|)``."""

    def fprime(x):
        x = np.asarray(x)
        h = 1e-6 * np.maximum(1.0, np.abs(x))
        with np.errstate(all="ignore"):
            return (np.asarray(f(x + h)) - np.asarray(f(x - h))) / (2 * h)

    return fprime


# --- presets ----------------------------------------------------------------

def _logistic(x):
    # 1/(1+exp(-x)) without overflow on either side of the real axis
    x = np.asarray(x)
    with np.errstate(all="ignore"):
        neg = np.real(x) < 0
        e = np.exp(np.where(neg, x, -x))
        return np.where(neg, e / (1 + e), 1 / (1 + e))


def _sech2(x):
    t = np.tanh(x)
    return 1 - t * t


PRESETS: dict[str, GeneratorFunction] = {
    g.name: g
    for g in (
        GeneratorFunction(
            "frac-square",
            eval=lambda x: x * x / (1 + x),
            deriv=lambda x: (2 * x + x * x) / ((1 + x) ** 2),
            declared_class=PowerLaw(1.0, 1.0),
            formula="x^2/(1+x)",
        ),
        GeneratorFunction(
            "tanh",
            eval=np.tanh,
            deriv=_sech2,
            declared_class=Saturating(1.0),
            formula="tanh(x)",
        ),
        GeneratorFunction(
            "x-tanh",
            eval=lambda x: x * np.tanh(x),
            deriv=lambda x: np.tanh(x) + x * _sech2(x),
            declared_class=PowerLaw(1.0, 1.0),
            formula="x tanh(x)",
        ),
        GeneratorFunction(
            "x-arctan",
            eval=lambda x: x * np.arctan(x),
            deriv=lambda x: np.arctan(x) + x / (1 + x * x),
            declared_class=PowerLaw(1.0, 1.0),
            formula="x arctan(x)",
        ),
        GeneratorFunction(
            "x-exp",
            eval=lambda x: x * _logistic(x),
            deriv=lambda x: _logistic(x) * (1 + x * _logistic(-x)),
            declared_class=PowerLaw(1.0, 1.0),
            formula="x e^x/(1+e^x)",
        ),
    )
}

# product and sum equation tags of each preset
PRESET_EQUATIONS = {
    "frac-square": ("24", "25"),
    "tanh": ("27", "28"),
    "x-tanh": ("30", "31"),
    "x-arctan": ("33", "34"),
    "x-exp": ("36", "37"),
}


def get_preset(name: str) -> GeneratorFunction:
    try:
        return PRESETS[name]
    except KeyError:
        raise UnknownIdentityError(f"unknown preset {name!r}") from None


# --- classification -----------------------------------------------------------

def _screen(f: GeneratorFunction) -> None:
    x = np.logspace(0, 6, 241)
    y = f(x)
    if not np.all(np.isfinite(y)):
        raise UnsupportedFunctionError(f"{f.name}: non-finite values on [1, 1e6]")
    if np.any(np.abs(np.imag(y)) > 1e-12 * np.maximum(1.0, np.abs(y))):
        raise UnsupportedFunctionError(f"{f.name}: complex values for real inputs")
    re = np.real(y)
    if not (np.all(re > 0) or np.all(re < 0)):
        raise UnsupportedFunctionError(f"{f.name}: changes sign or vanishes on [1, 1e6]")


def classify(
    f: GeneratorFunction,
    s_probe: float = CLASSIFY_S,
    n_probes=CLASSIFY_PROBES,
) -> AsymptoticClass:
    """Estimate the asymptotic class of ``f`` from probes at large ``N``.

    ``log(f(sN)/f(N))`` is fitted against ``log s`` for ``s`` in
    ``{1/s_probe, s_probe, s_probe**2}`` at each probe ``N``; the class is
    power-law when the fitted exponent settles (last two probes within 1e-3)
    at a nonzero value, saturating when ``f(N)`` itself settles.  A declared
    class that disagrees raises :class:`ClassificationConflictError`.
    """
    s_probe = float(s_probe)
    n_probes = sorted(int(n) for n in n_probes)
    if not (s_probe > 0 and s_probe != 1):
        raise InvalidInputError("s_probe must be real, positive and different from 1")
    if len(n_probes) < 2 or n_probes[-1] < 10**5:
        raise InvalidInputError("need at least two probes with the largest >= 1e5")
    _screen(f)

    svals = np.array([1 / s_probe, s_probe, s_probe**2])
    logs = np.log(svals)
    design = np.column_stack([np.ones_like(logs), logs])
    exps, c0s, levels = [], [], []
    for n in n_probes:
        fn = complex(f(np.array([float(n)]))[0])
        ratios = f(svals * n) / fn
        if not np.all(np.isfinite(ratios)) or np.any(np.real(ratios) <= 0):
            raise UnsupportedFunctionError(f"{f.name}: f(sN)/f(N) not finite and positive at N={n}")
        (logc, r), *_ = np.linalg.lstsq(design, np.log(np.real(ratios)), rcond=None)
        exps.append(float(r))
        c0s.append(math.exp(logc))
        levels.append(fn)

    r_stable = abs(exps[-1] - exps[-2]) < STABILITY
    f_stable = abs(levels[-1] - levels[-2]) < STABILITY * max(1.0, abs(levels[-1]))
    if r_stable and abs(exps[-1]) < STABILITY and f_stable:
        estimate: AsymptoticClass = Saturating(levels[-1])
    elif r_stable and abs(exps[-1]) >= STABILITY:
        estimate = PowerLaw(c0s[-1], exps[-1])
    else:
        raise UnsupportedFunctionError(
            f"{f.name}: growth ratio does not settle (exponent estimates {exps})"
        )
    _check_declared(f, estimate)
    return estimate


def _check_declared(f: GeneratorFunction, estimate: AsymptoticClass) -> None:
    declared = f.declared_class
    if declared is None:
        return
    if type(declared) is not type(estimate):
        raise ClassificationConflictError(
            f"{f.name}: declared {declared} but numerically {estimate}"
        )
    if isinstance(declared, PowerLaw):
        bad = abs(declared.r - estimate.r) > STABILITY or abs(declared.C0 - estimate.C0) > STABILITY
    else:
        bad = abs(declared.L - estimate.L) > STABILITY * max(1.0, abs(declared.L))
    if bad:
        raise ClassificationConflictError(
            f"{f.name}: declared {declared} but numerically {estimate}"
        )


def solve_scale(f: GeneratorFunction, alpha: complex, cls: AsymptoticClass) -> complex:
    """Scale ``beta`` normalising the infinite product.

    Power-law: ``beta = (f(0)+alpha)/f(2)`` so the product tends to ``C0 s^r``.
    Saturating: ``beta = (f(0)+alpha)/f(2) * L/(L+alpha)`` so it tends to 1.
    """
    alpha = complex(alpha)
    f0 = complex(f(np.array([0.0]))[0])
    f2 = complex(f(np.array([2.0]))[0])
    if f2 == 0:
        raise DomainError(f.name, "f(2) ≠ 0")
    if f0 + alpha == 0:
        raise DomainError(f.name, "f(0) + α ≠ 0")
    beta = (f0 + alpha) / f2
    if isinstance(cls, Saturating):
        if cls.L + alpha == 0:
            raise DomainError(f.name, "L + α ≠ 0")
        beta *= cls.L / (cls.L + alpha)
    return beta


# --- generated identities ---------------------------------------------------------

@dataclass(frozen=True)
class GeneratedIdentity:
    f: GeneratorFunction
    alpha: complex
    beta: complex
    asymptotic: AsymptoticClass
    start_index: int = 2

    def _f(self, x) -> np.ndarray:
        return self.f(x)

    def term(self, k, s) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        a = self.alpha
        return (
            self._f(k) * (self._f(s * (k - 1)) + a)
            / (self._f(k + 1) * (self._f(s * (k - 2)) + a))
        )

    def denominators(self, k, s):
        return (self._f(k + 1), self._f(s * (k - 2)) + self.alpha)

    def partial_closed_form(self, n: int, s: complex) -> complex:
        f = lambda x: complex(self._f(np.array([x]))[0])
        a = self.alpha
        return self.beta * f(2.0) * (f(s * (n - 1)) + a) / ((f(0.0) + a) * f(n + 1.0))

    def infinite_value(self, s: complex) -> complex:
        s = complex(s)
        f0 = complex(self._f(np.array([0.0]))[0])
        f2 = complex(self._f(np.array([2.0]))[0])
        base = self.beta * f2 / (f0 + self.alpha)
        if isinstance(self.asymptotic, PowerLaw):
            return base * self.asymptotic.C0 * s**self.asymptotic.r
        L = self.asymptotic.L
        return base * (L + self.alpha) / L

    def as_identity(self) -> Identity:
        prod_eq = PRESET_EQUATIONS.get(self.f.name, ("", ""))[0]
        return Identity(
            id=f"{self.f.name}:product",
            kind="product",
            equation=prod_eq,
            start_index=2,
            finite=False,
            params=("s", "alpha"),
            lhs=lambda p: self.infinite_value(p.s),
            term=lambda k, p: self.term(k, p.s),
            denominators=lambda k, p: self.denominators(k, p.s),
            prefactor=lambda p: self.beta,
            partial_closed_form=lambda n, p: self.partial_closed_form(n, p.s),
            constraints=_saturating_constraints(self.asymptotic),
            lhs_text="C0 s^r" if isinstance(self.asymptotic, PowerLaw) else "1",
            rhs_text=f"β prod_{{k>=2}} f(k)(f(s(k-1))+α)/(f(k+1)(f(s(k-2))+α)), f={self.f.formula}",
        )


def _saturating_constraints(cls: AsymptoticClass):
    if isinstance(cls, Saturating):
        # f(sN) -> L only along the positive real direction
        return (("Re(s) > 0", lambda p: p.s.real > 0),)
    return ()


def synthesize(f: GeneratorFunction | str, alpha: complex) -> GeneratedIdentity:
    """Classify ``f``, solve for ``beta`` and assemble the product identity.

    Exact declared class values are used once the numerical estimate agrees
    with them; undeclared functions use the estimate.
    """
    if isinstance(f, str):
        f = get_preset(f)
    estimate = classify(f)
    cls = f.declared_class or estimate
    beta = solve_scale(f, alpha, cls)
    return GeneratedIdentity(f=f, alpha=complex(alpha), beta=beta, asymptotic=cls)


@dataclass(frozen=True)
class DerivedSum:
    """Sum identity obtained by log-differentiating a generated product.

    ``wrt-alpha``: term ``1/(f(s(k-2))+α) - 1/(f(s(k-1))+α)``.
    ``wrt-s``: term ``h(k-1) - h(k-2)`` with ``h(j) = j f'(sj)/(f(sj)+α)``.
    """

    gen: GeneratedIdentity
    variant: str
    requires_deriv: bool
    fprime: ArrayFn | None = None
    finite_difference: bool = False
    tail_uncertainty: float = 0.0
    _tail: Callable[[complex], complex] = field(default=lambda s: 0j, repr=False)

    def _g(self, x):
        return self.gen.f(x) + self.gen.alpha

    def h(self, j, s) -> np.ndarray:
        j = np.asarray(j, dtype=float)
        x = s * j
        with np.errstate(all="ignore"):
            return j * np.asarray(self.fprime(x)) / self._g(x)

    def term(self, k, s) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if self.variant == "wrt-alpha":
            return 1 / self._g(s * (k - 2)) - 1 / self._g(s * (k - 1))
        return self.h(k - 1, s) - self.h(k - 2, s)

    def denominators(self, k, s):
        return (self._g(s * (k - 1)), self._g(s * (k - 2)))

    def partial_closed_form(self, n: int, s: complex) -> complex:
        if self.variant == "wrt-alpha":
            g = lambda x: complex(self._g(np.array([x]))[0])
            return 1 / g(0.0) - 1 / g(s * (n - 1))
        h = lambda j: complex(self.h(np.array([float(j)]), s)[0])
        return h(n - 1) - h(0)

    def lhs(self, s: complex) -> complex:
        s = complex(s)
        cls = self.gen.asymptotic
        if self.variant == "wrt-alpha":
            g0 = complex(self._g(np.array([0.0]))[0])
            tail = 0j if isinstance(cls, PowerLaw) else 1 / (cls.L + self.gen.alpha)
            return 1 / g0 - tail
        if isinstance(cls, PowerLaw):
            return cls.r / s
        return self._tail(s)

    def as_identity(self) -> Identity:
        sum_eq = PRESET_EQUATIONS.get(self.gen.f.name, ("", ""))[1]
        suffix = "-fd" if self.finite_difference else ""
        return Identity(
            id=f"{self.gen.f.name}:{self.variant}{suffix}",
            kind="sum",
            equation=sum_eq,
            start_index=2,
            finite=False,
            params=("s", "alpha"),
            lhs=lambda p: self.lhs(p.s),
            term=lambda k, p: self.term(k, p.s),
            denominators=lambda k, p: self.denominators(k, p.s),
            partial_closed_form=lambda n, p: self.partial_closed_form(n, p.s),
            constraints=_saturating_constraints(self.gen.asymptotic),
            lhs_text=self._lhs_text(),
            rhs_text=(
                "sum_{k>=2} 1/(f(s(k-2))+α) - 1/(f(s(k-1))+α)"
                if self.variant == "wrt-alpha"
                else "sum_{k>=2} h(k-1) - h(k-2), h(j) = j f'(sj)/(f(sj)+α)"
            ),
        )

    def _lhs_text(self) -> str:
        sat = isinstance(self.gen.asymptotic, Saturating)
        if self.variant == "wrt-alpha":
            return "1/(f(0)+α) - 1/(L+α)" if sat else "1/(f(0)+α)"
        return "lim h(N)" if sat else "r/s"


VARIANTS = ("wrt-alpha", "wrt-s")


def derive_sum(
    gen: GeneratedIdentity,
    variant: str,
    *,
    finite_difference: bool = False,
    abs_tol: float = 1e-14,
) -> DerivedSum:
    """Differentiate ``log`` of the generated product in ``alpha`` or ``s``.

    ``finite_difference=True`` replaces ``f'`` by a central difference; without
    it a missing analytic derivative raises :class:`CapabilityError`.
    """
    if variant not in VARIANTS:
        raise InvalidInputError(f"variant must be one of {VARIANTS}, got {variant!r}")
    if variant == "wrt-alpha":
        return DerivedSum(gen, variant, requires_deriv=False)
    if finite_difference:
        fprime = _fd(gen.f)
    elif gen.f.deriv is not None:
        fprime = gen.f.deriv
    else:
        raise CapabilityError(
            f"{gen.f.name}: wrt-s sum needs f' (pass finite_difference=True to approximate it)"
        )
    ds = DerivedSum(gen, variant, True, fprime, finite_difference)
    if isinstance(gen.asymptotic, Saturating):
        tail, unc = _saturating_h_limit(ds, abs_tol)
        ds = DerivedSum(gen, variant, True, fprime, finite_difference, unc, tail)
    return ds


def _fd(f: GeneratorFunction) -> ArrayFn:
    return finite_difference(f.eval)


def _saturating_h_limit(ds: DerivedSum, abs_tol: float):
    """``lim h(N)`` for a saturating ``f``: zero when ``h`` has died out by N = 1e6."""

    def h_at(n: float, s: complex) -> complex:
        return complex(ds.h(np.array([n]), s)[0])

    probe = h_at(float(SATURATION_PROBE), 1.0)
    if abs(probe) < abs_tol:
        return (lambda s: 0j), 0.0
    far = h_at(2.0 * SATURATION_PROBE, 1.0)
    return (lambda s: h_at(2.0 * SATURATION_PROBE, s)), float(abs(far - probe))


# --- printed sum terms, kept only as cross-check targets -------------------

def _printed_frac_square_wrt_s(k, s, a):
    def piece(j):
        return (2 * j**2 + j**3) / (s**2 * j**2 + s**3 * j**3 + a * (1 + s * j) ** 2)
    return s * (piece(k - 1) - piece(k - 2))


def _printed_tanh_wrt_alpha(k, s, a):
    return 1 / (np.tanh(s * (k - 2)) + a) - 1 / (np.tanh(s * (k - 1)) + a)


def _printed_x_tanh_wrt_s(k, s, a):
    def piece(j):
        x = s * j
        return (j * np.tanh(x) + s * j**2 / np.cosh(x) ** 2) / (x * np.tanh(x) + a)
    return piece(k - 1) - piece(k - 2)


def _printed_x_arctan_wrt_s(k, s, a):
    def piece(j):
        x = s * j
        at = np.arctan(x)
        return (j * at + s**2 * j**3 * at + s * j**2) / ((1 + x**2) * (x * at + a))
    return piece(k - 1) - piece(k - 2)


def _printed_x_exp_wrt_s(k, s, a):
    j1, j2 = k - 1, k - 2
    first = (
        j1 * np.exp(-s) + s * j1**2 * np.exp(-s)
        - s * j1**2 * np.exp(s * (k - 2)) / (1 + np.exp(s * j1))
    ) / ((a + s * j1) * np.exp(s * j1) + a)
    second = (
        j2 * np.exp(-2 * s) + s * j2**2 * np.exp(-2 * s)
        - s * j2**2 * np.exp(s * (k - 4)) / (1 + np.exp(s * j2))
    ) / ((a + s * j2) * np.exp(s * j2) + a)
    return np.exp(s * k) * (first - second)


@dataclass(frozen=True)
class PrintedTerm:
    tag: str
    preset: str
    variant: str
    term: Callable
    lhs: Callable


PRINTED_TERMS: dict[str, PrintedTerm] = {
    t.tag: t
    for t in (
        PrintedTerm("25", "frac-square", "wrt-s", _printed_frac_square_wrt_s, lambda s, a: 1 / s),
        PrintedTerm("28", "tanh", "wrt-alpha", _printed_tanh_wrt_alpha, lambda s, a: 1 / (a * (1 + a))),
        PrintedTerm("31", "x-tanh", "wrt-s", _printed_x_tanh_wrt_s, lambda s, a: 1 / s),
        PrintedTerm("34", "x-arctan", "wrt-s", _printed_x_arctan_wrt_s, lambda s, a: 1 / s),
        PrintedTerm("37", "x-exp", "wrt-s", _printed_x_exp_wrt_s, lambda s, a: 1 / s),
    )
}


@dataclass(frozen=True)
class CrossCheck:
    eq_tag: str
    preset: str
    k: int
    s: complex
    alpha: complex
    printed: complex
    derived: complex
    abs_diff: float
    rel_diff: float
    lhs_printed: complex
    lhs_derived: complex
    lhs_diff: float


def _rel(a: complex, b: complex) -> tuple[float, float]:
    d = abs(a - b)
    return d, d / abs(b) if b != 0 else d


def cross_check_printed_terms(
    preset: str, eq_tag: str, k: int, s: complex, alpha: complex
) -> CrossCheck:
    """Compare a printed sum term with the automatically derived one at ``(k, s, α)``."""
    try:
        printed_term = PRINTED_TERMS[eq_tag]
    except KeyError:
        raise UnknownIdentityError(f"no printed term registered for equation {eq_tag!r}") from None
    if printed_term.preset != preset:
        raise InvalidInputError(f"equation {eq_tag} belongs to preset {printed_term.preset!r}")
    s, alpha = complex(s), complex(alpha)
    gen = synthesize(preset, alpha)
    ds = derive_sum(gen, printed_term.variant)
    kk = np.array([float(k)])
    with np.errstate(all="ignore"):
        printed = complex(np.asarray(printed_term.term(kk, s, alpha), dtype=complex)[0])
        derived = complex(np.asarray(ds.term(kk, s), dtype=complex)[0])
    abs_d, rel_d = _rel(printed, derived)
    lhs_p, lhs_d = complex(printed_term.lhs(s, alpha)), ds.lhs(s)
    return CrossCheck(
        eq_tag, preset, int(k), s, alpha, printed, derived, abs_d, rel_d,
        lhs_p, lhs_d, abs(lhs_p - lhs_d),
    )
