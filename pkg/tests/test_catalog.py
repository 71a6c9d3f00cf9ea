from fractions import Fraction
import itertools

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from telescopia.catalog import CATALOG, ParamSet, get_identity, lhs_value, list_catalog, term_value
from telescopia.errors import ApparentSingularityError, DomainError, UnknownIdentityError
from telescopia.evaluator import partial_value

from conftest import COMPLEX_ALPHA, COMPLEX_S, REAL_ALPHA, REAL_S, rel

mpmath.mp.dps = 40


def mp_partial(ident_id, params, n):
    """High-precision brute-force product/sum; shares no code with the numpy path."""
    ident = get_identity(ident_id)
    k0 = ident.start_index
    acc = mpmath.mpf(1) if ident.kind == "product" else mpmath.mpf(0)
    p = ParamSet(
        s=params.s, alpha=params.alpha, r=params.r, n_terms=params.n_terms, z=params.z, b=params.b
    )
    s, a, r, z = (mpmath.mpc(p.s), mpmath.mpc(p.alpha), mpmath.mpf(p.r), mpmath.mpc(p.z))
    nn = p.n_terms
    terms = {
        "PROD-PARAM": lambda k: k * (s * (k - 1) + a) / ((k + 1) * (s * (k - 2) + a)),
        "PROD-FINITE": lambda k: k * (s * (k - 1) + a) / ((k + 1) * (s * (k - 2) + a)),
        "PROD-POWER": lambda k: (mpmath.mpf(k) / (k + 1)) ** r
        * (s**r * mpmath.mpf(k - 1) ** r + a) / (s**r * mpmath.mpf(k - 2) ** r + a),
        "PROD-TRIVIAL": lambda j: 1 - 1 / (s + j),
        "PROD-Z": lambda j: (j * (1 - z) + z * (nn + 1) - 1) / (j * (1 - z) + nn * z),
        "SUM-Z": lambda j: 1 / ((j * (1 - z) + z * (nn + 1) - 1) * (j * (1 - z) + nn * z)),
        "SUM-TRIVIAL": lambda k: 1 / ((s + k) * (s + k - 1)),
        "SUM-FINITE": lambda k: s / ((s * (k - 1) + a) * (s * (k - 2) + a)),
        "SUM-POWER-RATIO": lambda k: -r * s / ((s * (k - 1) + a) * (s * (k - 2) + a))
        + s**r / ((s**r * (k - 1) + a) * (s**r * (k - 2) + a)),
    }[ident_id]
    for k in range(k0, n + 1):
        acc = acc * terms(k) if ident.kind == "product" else acc + terms(k)
    pref = {"PROD-PARAM": a / 2, "PROD-FINITE": a / 2, "PROD-POWER": a / 2**r, "SUM-Z": nn}.get(ident_id, 1)
    return complex(pref * acc)


def test_catalog_has_fourteen_entries():
    entries = list_catalog()
    assert len(entries) == 14
    assert sum(e["kind"] == "product" for e in entries) == 7
    assert {e["id"] for e in entries} == {
        "PROD-BASIC", "PROD-PARAM", "PROD-POWER-RATIO", "PROD-FINITE", "PROD-TRIVIAL", "PROD-Z",
        "PROD-POWER", "SUM-BASIC", "SUM-PARAM", "SUM-POWER-RATIO", "SUM-FINITE", "SUM-Z",
        "SUM-TRIVIAL", "SUM-POWER",
    }


def test_metadata_examples():
    meta = {e["id"]: e for e in list_catalog()}
    assert meta["PROD-FINITE"]["finite"] and meta["PROD-FINITE"]["start_index"] == 2
    assert meta["SUM-TRIVIAL"]["finite"] and meta["SUM-TRIVIAL"]["start_index"] == 1
    finite = sorted(i for i, e in meta.items() if e["finite"])
    assert finite == ["PROD-FINITE", "PROD-TRIVIAL", "PROD-Z", "SUM-FINITE", "SUM-TRIVIAL", "SUM-Z"]


def test_unknown_identity():
    with pytest.raises(UnknownIdentityError):
        get_identity("PROD-NOPE")


@pytest.mark.parametrize(
    "ident, params, expected",
    [
        ("PROD-BASIC", ParamSet(s=1), 1),
        ("SUM-PARAM", ParamSet(s=1, alpha=1), 1),
        ("PROD-FINITE", ParamSet(s=2, alpha=2, n_terms=2), 4 / 3),
        ("SUM-FINITE", ParamSet(s=1, alpha=1, n_terms=5), 0.8),
        ("SUM-TRIVIAL", ParamSet(s=2, n_terms=1), 1 / 6),
        ("PROD-POWER-RATIO", ParamSet(s=2, alpha=1, r=3), 4),
        ("SUM-POWER-RATIO", ParamSet(s=2, alpha=4, r=3), -0.5),
    ],
)
def test_lhs_examples(ident, params, expected):
    assert lhs_value(ident, params) == pytest.approx(expected, rel=1e-15)


@pytest.mark.parametrize(
    "ident, k, params, expected",
    [
        ("PROD-BASIC", 2, ParamSet(s=1), 1),
        ("SUM-BASIC", 2, ParamSet(s=1), 1 / 6),
        ("SUM-TRIVIAL", 3, ParamSet(s=1, n_terms=5), 1 / 12),
    ],
)
def test_term_examples(ident, k, params, expected):
    assert term_value(ident, k, params) == pytest.approx(expected, rel=1e-15)


def test_domain_guards_name_the_constraint():
    with pytest.raises(DomainError, match="α ≠ 0"):
        lhs_value("SUM-PARAM", ParamSet(alpha=0))
    with pytest.raises(DomainError, match="s ≠ 0"):
        lhs_value("SUM-BASIC", ParamSet(s=0))
    with pytest.raises(DomainError, match="z ≠ 1"):
        lhs_value("PROD-Z", ParamSet(z=1, n_terms=3))
    with pytest.raises(DomainError, match="z ≠ 0"):
        lhs_value("SUM-Z", ParamSet(z=0, n_terms=3))
    with pytest.raises(DomainError, match="r > 0"):
        lhs_value("PROD-POWER", ParamSet(r=-1))
    with pytest.raises(DomainError, match="N"):
        lhs_value("PROD-FINITE", ParamSet())


def test_apparent_singularity_carries_k():
    with pytest.raises(ApparentSingularityError) as info:
        term_value("PROD-PARAM", 3, ParamSet(s=-2, alpha=2))
    assert info.value.k == 3


def test_prod_basic_is_prod_param_at_alpha_two():
    k = np.arange(2, 500, dtype=float)
    for s in (*REAL_S, COMPLEX_S):
        a = get_identity("PROD-BASIC").term(k, ParamSet(s=s))
        b = get_identity("PROD-PARAM").term(k, ParamSet(s=s, alpha=2))
        assert np.array_equal(a, b)


@pytest.mark.parametrize("ident", ["PROD-BASIC", "PROD-PARAM", "PROD-POWER-RATIO", "PROD-POWER"])
def test_infinite_product_terms_tend_to_one(ident):
    for s, a in itertools.product((0.5, 2.0), (1.0, 3.0)):
        t = term_value(ident, 10**6, ParamSet(s=s, alpha=a, r=2))
        assert abs(t - 1) < 1e-5


@pytest.mark.parametrize("ident", sorted(CATALOG))
def test_partial_closed_form_matches_accumulation(ident):
    entry = CATALOG[ident]
    grid = [ParamSet(s=s, alpha=a, r=2, z=0.3, n_terms=40) for s in REAL_S for a in REAL_ALPHA]
    grid.append(ParamSet(s=COMPLEX_S, alpha=COMPLEX_ALPHA, r=2, z=0.3 + 0.4j, n_terms=40))
    for p in grid:
        if ident == "PROD-POWER-RATIO" and p.s.imag:
            continue  # principal-branch powers only agree on the real grid
        for n in (entry.start_index, 7, 40):
            got = partial_value(entry, p, n)
            want = entry.partial_closed_form(n, p)
            assert rel(got, want) < 1e-12, (p, n)


def test_prod_finite_closed_form_against_high_precision_oracle():
    for s, a in itertools.product(REAL_S, REAL_ALPHA):
        p = ParamSet(s=s, alpha=a, n_terms=200)
        oracle = mp_partial("PROD-FINITE", p, 200)
        assert rel(lhs_value("PROD-FINITE", p), oracle) < 1e-14
        assert rel(partial_value("PROD-FINITE", p, 200), oracle) < 1e-12


def test_prod_power_closed_form_confirmed_by_brute_force_at_50():
    # the telescoped form (s^r (N-1)^r + α)/(N+1)^r is only trusted after this check
    for s, a, r in itertools.product((0.5, 1.0, 2.0, 3.0), (0.5, 1.0, 3.0), (0.5, 2.0, 3.0)):
        p = ParamSet(s=s, alpha=a, r=r)
        oracle = mp_partial("PROD-POWER", p, 50)
        closed = (s**r * 49**r + a) / 51**r
        assert rel(closed, oracle) < 1e-13
        assert rel(partial_value("PROD-POWER", p, 50), oracle) < 1e-12


@pytest.mark.parametrize("ident", ["PROD-TRIVIAL", "PROD-Z", "SUM-Z", "SUM-TRIVIAL", "SUM-FINITE"])
def test_finite_identities_against_oracle(ident):
    for n in (1, 2, 9, 60):
        for p in (ParamSet(s=0.5, alpha=2, z=0.25, n_terms=n), ParamSet(s=3, alpha=0.5, z=2.0, n_terms=n),
                  ParamSet(s=COMPLEX_S, alpha=COMPLEX_ALPHA, z=0.3 + 0.4j, n_terms=n)):
            if n < get_identity(ident).start_index:
                continue
            oracle = mp_partial(ident, p, n)
            assert rel(lhs_value(ident, p), oracle) < 1e-13
            assert rel(partial_value(ident, p, n), oracle) < 1e-12


def test_sum_trivial_exact_fractions():
    for n in (1, 10, 1000):
        for s in (Fraction(1, 2), Fraction(2), Fraction(3)):
            exact = sum(Fraction(1) / ((s + k) * (s + k - 1)) for k in range(1, n + 1))
            assert exact == n / ((s + n) * s)
            got = partial_value("SUM-TRIVIAL", ParamSet(s=float(s), n_terms=n), n)
            assert rel(got, float(exact)) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    re=st.floats(-3, 3).filter(lambda x: abs(x) > 1e-3),
    im=st.floats(-3, 3),
)
def test_sum_z_single_term_is_reciprocal(re, im):
    z = complex(re, im)
    got = partial_value("SUM-Z", ParamSet(z=z, n_terms=1), 1)
    assert rel(got, 1 / z) < 1e-12


@settings(max_examples=60, deadline=None)
@given(
    s=st.floats(0.05, 20),
    a=st.floats(0.05, 20),
    n=st.integers(2, 3000),
)
def test_sum_param_telescopes(s, a, n):
    got = partial_value("SUM-PARAM", ParamSet(s=s, alpha=a), n)
    assert rel(got, 1 / a - 1 / (s * (n - 1) + a)) < 1e-12


def test_sum_power_ratio_corrected_exponent():
    # re-derived: d/dα log of the power-ratio product forces s^r in both denominators
    p = ParamSet(s=2, alpha=3, r=3)
    k = 5
    h = 1e-6
    ident = get_identity("PROD-POWER-RATIO")

    def logterm(alpha):
        return np.log(ident.term(np.array([float(k)]), ParamSet(s=2, alpha=alpha, r=3))[0])

    fd = (logterm(3 + h) - logterm(3 - h)) / (2 * h)
    assert rel(term_value("SUM-POWER-RATIO", k, p), fd) < 1e-8
