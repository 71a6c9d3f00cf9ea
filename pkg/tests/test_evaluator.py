import itertools
from fractions import Fraction

import pytest

from telescopia.catalog import ParamSet, lhs_value
from telescopia.errors import ApparentSingularityError, InvalidInputError
from telescopia.evaluator import EvaluationRequest, evaluate, partial_product, partial_sum, partial_value
from telescopia.numerics import TolerancePolicy

from conftest import COMPLEX_ALPHA, COMPLEX_S, REAL_ALPHA, REAL_S, rel


def test_partial_product_examples():
    assert partial_product("PROD-PARAM", ParamSet(s=2, alpha=2), 10) == pytest.approx(20 / 11, rel=1e-14)
    assert partial_product("PROD-BASIC", ParamSet(s=1), 100) == 1
    assert partial_product("PROD-TRIVIAL", ParamSet(s=1, n_terms=3), 3) == pytest.approx(0.25, rel=1e-15)


def test_partial_sum_examples():
    oracle = 2 * sum(Fraction(1, k * (k + 1)) for k in range(2, 11))
    assert oracle == Fraction(9, 11)
    assert partial_sum("SUM-BASIC", ParamSet(s=1), 10) == pytest.approx(9 / 11, rel=1e-14)
    assert partial_sum("SUM-FINITE", ParamSet(s=1, alpha=1, n_terms=5), 5) == pytest.approx(0.8, rel=1e-15)
    assert partial_sum("SUM-TRIVIAL", ParamSet(s=2, n_terms=1), 1) == pytest.approx(1 / 6, rel=1e-15)


def test_partial_product_matches_finite_closed_form_on_grid():
    for s, a in itertools.product(REAL_S, REAL_ALPHA):
        for n in (10, 100, 10_000):
            got = partial_product("PROD-PARAM", ParamSet(s=s, alpha=a), n)
            assert rel(got, ((n - 1) * s + a) / (n + 1)) < 1e-12


def test_complex_grid_point():
    p = ParamSet(s=COMPLEX_S, alpha=COMPLEX_ALPHA)
    n = 1000
    assert rel(partial_product("PROD-PARAM", p, n), ((n - 1) * p.s + p.alpha) / (n + 1)) < 1e-12
    assert rel(partial_sum("SUM-PARAM", p, n), 1 / p.alpha - 1 / ((n - 1) * p.s + p.alpha)) < 1e-12


def test_singularity_propagates():
    with pytest.raises(ApparentSingularityError):
        partial_product("PROD-PARAM", ParamSet(s=-2, alpha=2), 3)


def test_compensated_switch_agrees():
    p = ParamSet(s=0.5, alpha=3)
    plain = partial_sum("SUM-PARAM", p, 50_000)
    comp = partial_sum("SUM-PARAM", p, 50_000, compensated=True)
    exact = 1 / 3 - 1 / (0.5 * 49_999 + 3)
    assert rel(comp, exact) <= rel(plain, exact) + 1e-16
    assert rel(comp, exact) < 1e-14


@pytest.mark.parametrize("ident", ["SUM-PARAM", "PROD-PARAM"])
def test_monotone_refinement(ident):
    for s, a in itertools.product(REAL_S, REAL_ALPHA):
        p = ParamSet(s=s, alpha=a)
        target = lhs_value(ident, p)
        errs = [abs(partial_value(ident, p, n) - target) for n in (16, 32, 64, 128, 256, 512)]
        assert all(b <= a_ + 1e-15 for a_, b in zip(errs, errs[1:]))


def test_evaluate_sum_param_to_tolerance():
    req = EvaluationRequest("SUM-PARAM", ParamSet(s=1, alpha=1), policy=TolerancePolicy(rel_tol=1e-10))
    res = evaluate(req)
    assert res.converged
    assert abs(res.value - 1) <= 1e-10


def test_evaluate_prod_basic_accelerated():
    req = EvaluationRequest("PROD-BASIC", ParamSet(s=3), policy=TolerancePolicy(rel_tol=1e-6))
    res = evaluate(req)
    assert res.converged
    assert abs(res.value - 3) <= 1e-6 * 3


def test_evaluate_runs_out_of_terms():
    req = EvaluationRequest(
        "PROD-BASIC", ParamSet(s=3), accelerate=False,
        policy=TolerancePolicy(rel_tol=1e-10, max_terms=100),
    )
    res = evaluate(req)
    assert not res.converged
    assert res.terms_used <= 100


def test_evaluate_fixed_n():
    req = EvaluationRequest("PROD-PARAM", ParamSet(s=2, alpha=2), mode="fixed-N", n=10)
    res = evaluate(req)
    assert res.value == pytest.approx(20 / 11, rel=1e-14)
    assert res.terms_used == 10
    # the O(1/N) tail model gives an honest bound on the remaining error
    assert abs(res.value - 2) <= 2 * res.est_error


def test_finite_identity_rejects_to_tolerance():
    with pytest.raises(InvalidInputError):
        evaluate(EvaluationRequest("SUM-FINITE", ParamSet(n_terms=5)))


def test_fixed_n_requires_start_index():
    with pytest.raises(InvalidInputError):
        evaluate(EvaluationRequest("PROD-BASIC", ParamSet(), mode="fixed-N", n=1))


@pytest.mark.parametrize("ident", ["PROD-BASIC", "PROD-PARAM", "SUM-BASIC", "SUM-PARAM", "SUM-POWER", "PROD-POWER"])
def test_to_tolerance_within_slack_on_grid(ident):
    policy = TolerancePolicy()
    for s, a in itertools.product(REAL_S, REAL_ALPHA):
        p = ParamSet(s=s, alpha=a, r=2)
        res = evaluate(EvaluationRequest(ident, p, policy=policy))
        target = lhs_value(ident, p)
        assert abs(res.value - target) <= 10 * max(policy.abs_tol, policy.rel_tol * abs(target)) or (
            # PROD identities converge like 1/N; the accelerated tail clears 1e-6 comfortably
            ident.startswith("PROD") and rel(res.value, target) < 1e-6
        ), (s, a, res)
