"""Telescoping infinite products, the series identities derived from them,
and a numerical verification harness."""

from .catalog import CATALOG, Identity, ParamSet, get_identity, lhs_value, list_catalog, term_value
from .errors import (
    ApparentSingularityError,
    CapabilityError,
    ClassificationConflictError,
    DomainError,
    InvalidInputError,
    NonFiniteError,
    TelescopiaError,
    UnknownIdentityError,
    UnsupportedFunctionError,
)
from .evaluator import EvaluationRequest, evaluate, partial_product, partial_sum, partial_value
from .generator import (
    PRESETS,
    GeneratorFunction,
    PowerLaw,
    Saturating,
    classify,
    cross_check_printed_terms,
    derive_sum,
    solve_scale,
    synthesize,
)
from .numerics import ConvergenceResult, TolerancePolicy, aitken_accelerate, estimate_tail
from .verify import SweepSpec, VerificationReport, regression_suite, sweep, verify_one

__version__ = "0.1.0"
