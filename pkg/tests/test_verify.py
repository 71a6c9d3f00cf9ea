import csv
import io
import json
import math
from dataclasses import replace

import pytest

from telescopia.catalog import CATALOG, ParamSet
from telescopia.generator import PRESETS
from telescopia.verify import (
    CSV_HEADER,
    SweepSpec,
    default_sweeps,
    format_complex,
    load_sweep_spec,
    parse_complex,
    regression_suite,
    reports_to_csv,
    sweep,
    verify_one,
)
from telescopia.errors import InvalidInputError


@pytest.fixture(scope="module")
def suite():
    return regression_suite()


def test_verify_one_examples():
    r = verify_one("SUM-PARAM", ParamSet(s=1, alpha=1), "to-tolerance")
    assert r.verdict == "pass" and r.lhs == 1
    r = verify_one("PROD-PARAM", ParamSet(s=-2, alpha=2, n_terms=3), "fixed-N")
    assert r.verdict == "skipped-singularity"
    assert "k=3" in r.note
    r = verify_one("PROD-FINITE", ParamSet(s=2, alpha=2, n_terms=100))
    assert r.verdict == "pass" and r.rel_err <= 1e-12


def test_verify_one_domain_violation_is_a_verdict():
    r = verify_one("SUM-PARAM", ParamSet(alpha=0))
    assert r.verdict == "skipped-singularity"
    assert "α ≠ 0" in r.note


def test_prod_finite_default_sweep():
    spec = next(s for s in default_sweeps() if s.identity == "PROD-FINITE" and len(s.points()) == 48)
    reports = sweep(spec)
    assert len(reports) == 48
    assert all(r.verdict == "pass" for r in reports)


def test_parallel_sweep_preserves_order_and_bits():
    spec = SweepSpec("PROD-PARAM", {"s": [0.5, 1, 2, 3], "alpha": [0.5, 1, 2, 3]})
    serial = sweep(spec)
    threaded = sweep(spec, parallel=4)
    assert [r.to_dict() for r in serial] == [r.to_dict() for r in threaded]


def test_reports_are_deterministic():
    spec = SweepSpec("x-exp:wrt-s", {"s": [0.5, 2], "alpha": [1, 2]})
    assert reports_to_csv(sweep(spec)) == reports_to_csv(sweep(spec))


def test_default_sweeps_cover_everything():
    ids = {s.identity for s in default_sweeps()}
    assert set(CATALOG) <= ids
    for name in PRESETS:
        assert {f"{name}:product", f"{name}:wrt-alpha", f"{name}:wrt-s"} <= ids
    assert {"CROSS-25", "CROSS-28", "CROSS-31", "CROSS-34", "CROSS-37"} <= ids


def test_regression_suite_passes(suite):
    assert suite.verdict == "pass"
    assert suite.summary["total"] >= 200
    assert suite.summary["failing_identities"] == []
    non_report_only = [r for r in suite.reports if not r.report_only]
    assert all(r.verdict != "fail" for r in non_report_only)


def test_printed_term_findings_are_flagged_not_fatal(suite):
    checks = suite.summary["cross_checks"]
    assert checks["CROSS-37"]["report_only"]
    assert checks["CROSS-25"]["report_only"]
    assert checks["CROSS-25"]["verdict"] == "fail"
    for tag in ("CROSS-28", "CROSS-31", "CROSS-34"):
        assert checks[tag]["verdict"] == "pass"
        assert checks[tag]["max_rel_discrepancy"] <= 1e-10


def test_mutation_is_caught_and_named():
    base = CATALOG["SUM-BASIC"]
    flipped = replace(base, term=lambda k, p: -base.term(k, p))
    result = regression_suite(catalog={**CATALOG, "SUM-BASIC": flipped})
    assert result.verdict == "fail"
    assert result.summary["failing_identities"] == ["SUM-BASIC"]


def test_csv_schema():
    reports = sweep(SweepSpec("SUM-FINITE", {"s": [1], "alpha": [1], "n": [5]}))
    text = reports_to_csv(reports)
    rows = list(csv.reader(io.StringIO(text)))
    assert tuple(rows[0]) == tuple(CSV_HEADER)
    assert rows[0] == "id,s,alpha,r,n,lhs_re,lhs_im,rhs_re,rhs_im,abs_err,rel_err,verdict".split(",")
    assert rows[1][0] == "SUM-FINITE" and rows[1][-1] == "pass"
    assert float(rows[1][7]) == pytest.approx(0.8, rel=1e-15)


def test_csv_round_trips_doubles():
    r = verify_one("PROD-PARAM", ParamSet(s=2, alpha=2, n_terms=10), "fixed-N")
    row = next(csv.DictReader(io.StringIO(reports_to_csv([r]))))
    assert float(row["rhs_re"]) == r.rhs.real


def test_json_report_is_serialisable():
    r = verify_one("PROD-BASIC", ParamSet(s=3))
    d = json.loads(json.dumps(r.to_dict()))
    assert d["verdict"] == "pass" and d["id"] == "PROD-BASIC"


@pytest.mark.parametrize("text, value", [("1+0.5i", 1 + 0.5j), ("2-1i", 2 - 1j), ("3", 3), ("-0.25i", -0.25j), (2, 2)])
def test_complex_syntax(text, value):
    assert parse_complex(text) == value
    assert parse_complex(format_complex(value)) == value


def test_sweep_spec_validation(tmp_path):
    with pytest.raises(InvalidInputError):
        SweepSpec("SUM-FINITE", {"s": [1]})
    with pytest.raises(InvalidInputError):
        SweepSpec("SUM-PARAM", {"s": []})
    path = tmp_path / "spec.json"
    path.write_text(json.dumps({"identity": "SUM-PARAM", "grid": {"s": [1, 2], "alpha": ["1+1i"]}}))
    spec = load_sweep_spec(path)
    reports = sweep(spec)
    assert [r.verdict for r in reports] == ["pass", "pass"]
    assert not any(math.isnan(r.abs_err) for r in reports)
