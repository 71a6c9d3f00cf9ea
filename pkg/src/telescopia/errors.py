"""Exception hierarchy shared by every telescopia module."""

from __future__ import annotations


class TelescopiaError(Exception):
    """Base class for all library errors."""


class InvalidInputError(TelescopiaError, ValueError):
    """Malformed arguments (too-short sequences, bad modes, missing N)."""


class UnknownIdentityError(TelescopiaError, KeyError):
    """Identifier not present in the catalog or preset registry."""

    def __str__(self) -> str:
        return str(self.args[0]) if self.args else "unknown identity"


class DomainError(TelescopiaError, ValueError):
    """A parameter violates an identity's declared domain."""

    def __init__(self, identity: str, constraint: str) -> None:
        super().__init__(f"{identity}: parameter domain violated, requires {constraint}")
        self.identity = identity
        self.constraint = constraint


class ApparentSingularityError(DomainError):
    """A term denominator vanished (or fell below ``abs_tol``) at index ``k``."""

    def __init__(self, identity: str, k: int, factor: complex) -> None:
        TelescopiaError.__init__(
            self,
            f"{identity}: apparent singularity at k={k}, "
            f"denominator factor {factor!r} is numerically zero",
        )
        self.identity = identity
        self.constraint = "nonzero term denominators"
        self.k = k
        self.factor = factor


class NonFiniteError(TelescopiaError, ArithmeticError):
    """An intermediate or final value overflowed or became NaN."""


class ClassificationConflictError(TelescopiaError):
    """The numerically estimated asymptotic class disagrees with the declared one."""


class UnsupportedFunctionError(TelescopiaError):
    """Generator function oscillates, changes sign or grows too fast."""


class CapabilityError(TelescopiaError):
    """Requested derivation needs a derivative that is not available."""
