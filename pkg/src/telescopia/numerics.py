"""Tolerance policy, tail estimation and Aitken acceleration.

Scalars are plain Python ``complex`` values (double precision); sequences are
handled as numpy ``complex128`` arrays.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .errors import InvalidInputError

__all__ = [
    "TolerancePolicy",
    "ConvergenceResult",
    "Accelerated",
    "aitken_accelerate",
    "iterated_aitken",
    "estimate_tail",
    "TAIL_MODELS",
    "MAX_TERMS_ENV",
]

MAX_TERMS_ENV = "TELESCOPIA_MAX_TERMS"
TAIL_MODELS = ("last-delta", "one-over-n-extrapolation")

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class TolerancePolicy:
    rel_tol: float = 1e-10
    abs_tol: float = 1e-14
    max_terms: int = 10**6

    def __post_init__(self) -> None:
        if not (self.rel_tol >= 0 and self.abs_tol >= 0):
            raise InvalidInputError("tolerances must be non-negative")
        if int(self.max_terms) != self.max_terms or self.max_terms < 2:
            raise InvalidInputError("max_terms must be an integer >= 2")

    @classmethod
    def from_env(cls, **overrides) -> "TolerancePolicy":
        """Default policy, with ``TELESCOPIA_MAX_TERMS`` capping ``max_terms``."""
        env = os.environ.get(MAX_TERMS_ENV)
        if env and "max_terms" not in overrides:
            try:
                overrides["max_terms"] = int(float(env))
            except ValueError as exc:
                raise InvalidInputError(f"{MAX_TERMS_ENV}={env!r} is not an integer") from exc
        return cls(**overrides)

    def target(self, value: complex) -> float:
        """Error budget for ``value``: ``max(abs_tol, rel_tol * |value|)``."""
        return max(self.abs_tol, self.rel_tol * abs(value))


@dataclass(frozen=True)
class ConvergenceResult:
    value: complex
    terms_used: int
    est_error: float
    converged: bool


class Accelerated(NamedTuple):
    values: np.ndarray
    passthrough: np.ndarray


def _as_sequence(partials: Sequence[complex], minimum: int, what: str) -> np.ndarray:
    x = np.asarray(partials, dtype=complex)
    if x.ndim != 1 or x.size < minimum:
        raise InvalidInputError(f"{what} needs at least {minimum} partial values, got {x.size}")
    return x


def aitken_accelerate(partials: Sequence[complex], abs_tol: float = 1e-14) -> Accelerated:
    """Aitken's Δ² transform of a sequence of partial values.

    Output entry ``n`` is built from ``x[n], x[n+1], x[n+2]``.  When the second
    difference is below ``abs_tol`` (or at the rounding-noise level of the
    inputs) the entry ``x[n+2]`` is passed through unchanged and flagged in
    ``passthrough``.
    """
    x = _as_sequence(partials, 3, "aitken_accelerate")
    x0, x1, x2 = x[:-2], x[1:-1], x[2:]
    d1 = x2 - x1
    d2 = d1 - (x1 - x0)
    noise = 8 * _EPS * (np.abs(x0) + 2 * np.abs(x1) + np.abs(x2))
    flat = np.abs(d2) <= np.maximum(abs_tol, noise)
    safe = np.where(flat, 1.0, d2)
    out = np.where(flat, x2, x2 - d1 * d1 / safe)
    return Accelerated(out, flat)


def iterated_aitken(
    partials: Sequence[complex], depth: int = 2, abs_tol: float = 1e-14
) -> list[np.ndarray]:
    """Apply Δ² repeatedly; returns the table of levels, level 0 being the input."""
    levels = [np.asarray(partials, dtype=complex)]
    while len(levels) <= depth and levels[-1].size >= 3:
        levels.append(aitken_accelerate(levels[-1], abs_tol).values)
    return levels


def estimate_tail(
    partials: Sequence[complex],
    model: str = "last-delta",
    ns: Sequence[float] | None = None,
) -> float:
    """Heuristic estimate of ``|limit - partials[-1]|``.

    ``last-delta`` returns the size of the final increment.  The
    ``one-over-n-extrapolation`` model assumes ``x_N = L + C/N`` and fits ``C``
    from each of the last two increments, reporting the larger ``|C| / N_last``.
    ``ns`` gives the index ``N`` of each partial (default ``1, 2, ...``).
    """
    x = _as_sequence(partials, 3, "estimate_tail")
    if model == "last-delta":
        return float(abs(x[-1] - x[-2]))
    if model != "one-over-n-extrapolation":
        raise InvalidInputError(f"unknown tail model {model!r}; expected one of {TAIL_MODELS}")
    n = np.arange(1, x.size + 1, dtype=float) if ns is None else np.asarray(ns, dtype=float)
    if n.shape != x.shape:
        raise InvalidInputError("ns must have one entry per partial value")
    if np.any(n[1:] <= n[:-1]) or n[0] <= 0:
        raise InvalidInputError("ns must be positive and strictly increasing")
    inv = 1.0 / n
    coeffs = [
        abs((x[i - 1] - x[i]) / (inv[i - 1] - inv[i])) for i in (x.size - 2, x.size - 1)
    ]
    return float(max(coeffs) / n[-1])
