"""Command-line interface: list, eval, synthesize, verify, sweep, appendix."""

from __future__ import annotations

import argparse
import json
import math
import sys
from typing import Any

import numpy as np

from . import appendix
from .catalog import CATALOG, ParamSet
from .errors import (
    ClassificationConflictError,
    DomainError,
    InvalidInputError,
    TelescopiaError,
    UnknownIdentityError,
    UnsupportedFunctionError,
)
from .evaluator import EvaluationRequest, evaluate
from .generator import (
    PRINTED_TERMS,
    PRESET_EQUATIONS,
    PRESETS,
    GeneratorFunction,
    PowerLaw,
    Saturating,
    cross_check_printed_terms,
    derive_sum,
    synthesize,
)
from .numerics import TolerancePolicy
from .verify import (
    format_complex,
    load_sweep_spec,
    parse_complex,
    regression_suite,
    reports_to_csv,
    resolve_identity,
    sweep,
    verify_one,
)

EXIT_PASS, EXIT_FAIL, EXIT_UNKNOWN, EXIT_DOMAIN, EXIT_CLASSIFICATION = 0, 1, 2, 3, 4

_EXPR_NAMESPACE = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "sinh", "cosh", "tanh", "arctan", "arcsinh", "exp", "log", "sqrt", "abs")
}
_EXPR_NAMESPACE.update(pi=np.pi, e=np.e)


# --- output helpers -----------------------------------------------------------------

def _fmt(args) -> str:
    if args.format:
        return args.format
    return "human" if sys.stdout.isatty() else "json"


def _emit_json(doc: Any) -> None:
    print(json.dumps(doc, indent=2, allow_nan=False))


def _cnum(z: complex) -> dict:
    z = complex(z)
    return {"re": _real(z.real), "im": _real(z.imag)}


def _real(x: float):
    x = float(x)
    return x if math.isfinite(x) else None


def _policy(args) -> TolerancePolicy:
    overrides = {}
    if getattr(args, "rel_tol", None) is not None:
        overrides["rel_tol"] = args.rel_tol
    if getattr(args, "tol", None) is not None:
        overrides["rel_tol"] = args.tol
    if getattr(args, "abs_tol", None) is not None:
        overrides["abs_tol"] = args.abs_tol
    if getattr(args, "max_terms", None) is not None:
        overrides["max_terms"] = args.max_terms
    return TolerancePolicy.from_env(**overrides)


def _params(args) -> ParamSet:
    kw: dict[str, Any] = {}
    for name in ("s", "alpha", "z", "b"):
        value = getattr(args, name, None)
        if value is not None:
            kw[name] = parse_complex(value)
    if getattr(args, "r", None) is not None:
        r = parse_complex(args.r)
        if r.imag:
            raise InvalidInputError("r must be real")
        kw["r"] = r.real
    if getattr(args, "n", None) is not None:
        kw["n_terms"] = args.n
    return ParamSet(**kw)


def _print_report_human(rep) -> None:
    params = " ".join(f"{k}={v}" for k, v in rep.params.items())
    print(
        f"{rep.verdict.upper():<8} {rep.identity:<22} {params:<34} "
        f"lhs={format_complex(rep.lhs)} rhs={format_complex(rep.rhs)} rel_err={rep.rel_err:.3g}"
    )
    if rep.report_only:
        print("         report-only finding")
    elif rep.note and rep.verdict != "pass":
        print(f"         {rep.note}")


def _emit_reports(reports, fmt: str, doc: dict | None = None) -> None:
    if fmt == "json":
        payload = dict(doc or {})
        payload["reports"] = [r.to_dict() for r in reports]
        _emit_json(payload)
    elif fmt == "csv":
        sys.stdout.write(reports_to_csv(reports))
    else:
        for rep in reports:
            _print_report_human(rep)
        if doc:
            for key, value in doc.items():
                if key != "reports":
                    print(f"{key}: {value}")


# --- subcommands ------------------------------------------------------------------

def _preset_descriptor(name: str) -> dict:
    g = PRESETS[name]
    cls = g.declared_class
    prod_eq, sum_eq = PRESET_EQUATIONS[name]
    return {
        "id": name,
        "kind": "preset",
        "formula": g.formula,
        "class": repr(cls),
        "finite": False,
        "product_equation": prod_eq,
        "sum_equation": sum_eq,
    }


def cmd_list(args) -> int:
    items = [ident.describe() for ident in CATALOG.values()]
    items += [_preset_descriptor(name) for name in PRESETS]
    flt = args.filter
    if flt == "finite":
        items = [d for d in items if d["finite"]]
    elif flt == "infinite":
        items = [d for d in items if not d["finite"]]
    elif flt in ("product", "sum", "preset"):
        items = [d for d in items if d["kind"] == flt]
    fmt = _fmt(args)
    if fmt == "json":
        _emit_json(items)
    elif fmt == "csv":
        print("id,kind,equation,finite")
        for d in items:
            eq = d.get("equation") or d.get("product_equation")
            print(f"{d['id']},{d['kind']},{eq},{str(d['finite']).lower()}")
    else:
        for d in items:
            if d["kind"] == "preset":
                print(f"{d['id']:<18} preset   Eq.{d['product_equation']}/{d['sum_equation']:<4} f(x) = {d['formula']}")
            else:
                tag = "finite" if d["finite"] else "infinite"
                print(f"{d['id']:<18} {d['kind']:<8} Eq.{d['equation']:<7} {tag:<8} {d['lhs']} = {d['rhs']}")
    return EXIT_PASS


def cmd_eval(args) -> int:
    policy = _policy(args)
    params = _params(args)
    ident = resolve_identity(args.id, params)
    ident.domain_guard(params)
    mode = "fixed-N" if (ident.finite or args.n is not None) else "to-tolerance"
    if args.no_accelerate:
        res = evaluate(EvaluationRequest(ident, params, mode, args.n, policy, accelerate=False))
        rep = None
    else:
        rep = verify_one(args.id, params, mode, policy)
        if rep.verdict == "skipped-singularity":
            print(f"error: {rep.note}", file=sys.stderr)
            return EXIT_DOMAIN
        res = None
    fmt = _fmt(args)
    if rep is None:
        doc = {
            "id": args.id, "mode": mode, "value": _cnum(res.value), "terms_used": res.terms_used,
            "est_error": _real(res.est_error), "converged": res.converged,
            "lhs": _cnum(ident.lhs(params)),
        }
        if fmt == "human":
            print(f"{args.id}: value={format_complex(res.value)} terms={res.terms_used} "
                  f"est_error={res.est_error:.3g} converged={res.converged}")
        else:
            _emit_json(doc)
        return EXIT_PASS if res.converged or ident.finite else EXIT_FAIL
    if fmt == "json":
        doc = rep.to_dict()
        doc["value"] = _cnum(rep.rhs)
        doc["terms_used"] = rep.n
        _emit_json(doc)
    elif fmt == "csv":
        sys.stdout.write(reports_to_csv([rep]))
    else:
        _print_report_human(rep)
        print(f"value = {format_complex(rep.rhs)}  (N = {rep.n}, converged = {rep.converged})")
    return EXIT_PASS if rep.verdict == "pass" else EXIT_FAIL


def _expr_function(expr: str, cls_text: str | None) -> GeneratorFunction:
    code = compile(expr, "<expr>", "eval")
    fn = lambda x: eval(code, {"__builtins__": {}}, {**_EXPR_NAMESPACE, "x": x})  # noqa: E731
    declared = None
    if cls_text:
        kind, _, value = cls_text.partition(":")
        if kind == "powerlaw":
            declared = PowerLaw(1.0, float(value or 1.0))
        elif kind == "saturating":
            declared = Saturating(parse_complex(value or 1.0))
        else:
            raise InvalidInputError("--class must be powerlaw:R or saturating:L")
    return GeneratorFunction("expr", fn, None, declared, expr)


def cmd_synthesize(args) -> int:
    s = parse_complex(args.s)
    alpha = parse_complex(args.alpha)
    policy = _policy(args)
    if args.expr:
        f = _expr_function(args.expr, args.declared_class)
    elif args.preset in PRESETS:
        f = PRESETS[args.preset]
    else:
        raise UnknownIdentityError(f"unknown preset {args.preset!r}")
    gen = synthesize(f, alpha)
    params = ParamSet(s=s, alpha=alpha)
    prod = gen.as_identity()
    prod.domain_guard(params)
    res = evaluate(EvaluationRequest(prod, params, policy=policy))
    ok = abs(res.value - prod.lhs(params)) <= 1e-6 * max(1.0, abs(prod.lhs(params)))
    doc: dict[str, Any] = {
        "generator": f.name,
        "f": f.formula,
        "class": repr(gen.asymptotic),
        "alpha": _cnum(alpha),
        "beta": _cnum(gen.beta),
        "s": _cnum(s),
        "product": {
            "closed_form_limit": _cnum(prod.lhs(params)),
            "evaluated": _cnum(res.value),
            "terms_used": res.terms_used,
            "converged": res.converged,
        },
        "sums": [],
    }
    variants = {"alpha": ["wrt-alpha"], "s": ["wrt-s"], "both": ["wrt-alpha", "wrt-s"]}.get(args.derive or "", [])
    for variant in variants:
        fd = args.fd or (variant == "wrt-s" and f.deriv is None)
        ds = derive_sum(gen, variant, finite_difference=fd)
        sid = ds.as_identity()
        sres = evaluate(EvaluationRequest(sid, params, policy=policy))
        lhs = sid.lhs(params)
        ok &= abs(sres.value - lhs) <= (1e-5 if fd else 1e-6) * max(1.0, abs(lhs))
        doc["sums"].append({
            "variant": variant, "finite_difference": fd, "lhs": _cnum(lhs),
            "evaluated": _cnum(sres.value), "terms_used": sres.terms_used, "converged": sres.converged,
        })
    if args.cross_check:
        rows = []
        for tag, printed_term in PRINTED_TERMS.items():
            if printed_term.preset != f.name:
                continue
            for k in range(2, 7):
                cc = cross_check_printed_terms(f.name, tag, k, s, alpha)
                rows.append({
                    "equation": tag, "k": k, "printed": _cnum(cc.printed), "derived": _cnum(cc.derived),
                    "abs_diff": _real(cc.abs_diff), "rel_diff": _real(cc.rel_diff),
                    "verdict": "pass" if cc.rel_diff <= 1e-10 or cc.abs_diff <= 1e-14 else "fail",
                })
        doc["cross_check"] = rows
    fmt = _fmt(args)
    if fmt == "human":
        print(f"{f.name}: f(x) = {f.formula}, class {gen.asymptotic}, beta = {format_complex(gen.beta)}")
        print(f"product at s={format_complex(s)}: limit {format_complex(prod.lhs(params))}, "
              f"evaluated {format_complex(res.value)} ({res.terms_used} terms)")
        for row in doc["sums"]:
            lhs = complex(row["lhs"]["re"], row["lhs"]["im"])
            val = complex(row["evaluated"]["re"], row["evaluated"]["im"])
            print(f"sum {row['variant']}: lhs {format_complex(lhs)}, evaluated {format_complex(val)} "
                  f"({row['terms_used']} terms)")
        for row in doc.get("cross_check", []):
            print(f"Eq.{row['equation']} k={row['k']}: rel_diff {row['rel_diff']:.3g} {row['verdict']}")
    else:
        _emit_json(doc)
    return EXIT_PASS if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    fmt = _fmt(args)
    if args.all or not args.id:
        result = regression_suite(parallel=args.parallel)
        if fmt == "json":
            _emit_json(result.to_dict())
        elif fmt == "csv":
            sys.stdout.write(reports_to_csv(result.reports))
        else:
            for rep in result.reports:
                if rep.verdict != "pass":
                    _print_report_human(rep)
            print(f"verdict: {result.verdict}")
            print(f"reports: {result.summary['total']} {result.summary['counts']}")
            for tag, info in result.summary["cross_checks"].items():
                flag = " (report-only)" if info["report_only"] else ""
                print(f"{tag}: max rel discrepancy {info['max_rel_discrepancy']:.3g} {info['verdict']}{flag}")
        return EXIT_PASS if result.verdict == "pass" else EXIT_FAIL
    params = _params(args)
    resolve_identity(args.id, params)
    rep = verify_one(args.id, params, "auto", _policy(args))
    _emit_reports([rep], fmt)
    if rep.verdict == "skipped-singularity":
        return EXIT_DOMAIN
    return EXIT_PASS if rep.verdict == "pass" else EXIT_FAIL


def cmd_sweep(args) -> int:
    spec = load_sweep_spec(args.spec, _policy(args))
    resolve_identity(spec.identity, ParamSet()) if not spec.identity.startswith("CROSS-") else None
    reports = sweep(spec, parallel=args.parallel)
    failed = [r for r in reports if r.verdict == "fail" and not r.report_only]
    _emit_reports(reports, _fmt(args), {"identity": spec.identity, "verdict": "fail" if failed else "pass"})
    return EXIT_FAIL if failed else EXIT_PASS


def cmd_appendix(args) -> int:
    policy = _policy(args)
    chain = appendix.verify_chain(args.b, args.tol, policy)
    eq40 = []
    for s in (0.2, -0.2, 0.5, -0.5, 0.8):
        lhs = appendix.alternating_zeta_series(s)
        rhs = appendix.rational_series(s)
        eq40.append({"s": s, "zeta_series": _cnum(lhs), "rational_series": _cnum(rhs),
                     "abs_diff": _real(abs(lhs - rhs)), "pass": abs(lhs - rhs) <= 1e-9})
    zetas = [appendix.zeta_int(n) for n in range(2, 9)]
    ok = chain.passed and all(row["pass"] for row in eq40)
    doc = {
        "b": chain.b,
        "s": _cnum(chain.s),
        "chain": [
            {"link": l.name, "value": _cnum(l.value), "expected": _cnum(l.expected),
             "error": _real(l.error), "pass": l.passed}
            for l in chain.links
        ],
        "eq40": eq40,
        "zeta": [{"n": z.n, "value": z.value, "tail_bound": _real(z.tail_bound)} for z in zetas],
        "verdict": "pass" if ok else "fail",
    }
    if _fmt(args) == "human":
        print(f"b = {chain.b}, s = 2b/(b+1) = {format_complex(chain.s)}")
        for l in chain.links:
            print(f"  {l.name:<13} {format_complex(l.value):<24} expected {format_complex(l.expected):<22} "
                  f"{'pass' if l.passed else 'FAIL'}")
        for row in eq40:
            print(f"  zeta series vs rational series at s={row['s']}: diff {row['abs_diff']:.3g}")
        for z in zetas:
            print(f"  zeta({z.n}) = {z.value!r}")
        print(f"verdict: {doc['verdict']}")
    else:
        _emit_json(doc)
    return EXIT_PASS if ok else EXIT_FAIL


# --- parser -----------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--format", choices=("json", "csv", "human"), default=None)
    p.add_argument("--rel-tol", type=float, default=None)
    p.add_argument("--abs-tol", type=float, default=None)
    p.add_argument("--max-terms", type=int, default=None)


def _add_params(p: argparse.ArgumentParser) -> None:
    for name in ("s", "alpha", "r", "z", "b"):
        p.add_argument(f"--{name}", type=str, default=None)
    p.add_argument("--n", type=int, default=None, help="upper index N")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="telescopia",
        description="Evaluate and verify telescoping product and series identities.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("list", help="list catalog identities and generator presets")
    _add_common(p)
    p.add_argument("--filter", choices=("finite", "infinite", "product", "sum", "preset"), default=None)
    p.set_defaults(func=cmd_list)

    p = sub.add_parser("eval", help="evaluate one identity")
    _add_common(p)
    p.add_argument("id")
    _add_params(p)
    p.add_argument("--tol", type=float, default=None, help="relative tolerance (alias of --rel-tol)")
    p.add_argument("--no-accelerate", action="store_true")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synthesize", help="build a product from a generator function")
    _add_common(p)
    p.add_argument("preset", nargs="?", default=None)
    p.add_argument("--expr", default=None, help="f(x) as a numpy expression in x, e.g. 'x*tanh(x)'")
    p.add_argument("--class", dest="declared_class", default=None, help="powerlaw:R or saturating:L")
    p.add_argument("--s", default="2")
    p.add_argument("--alpha", default="1")
    p.add_argument("--derive", choices=("alpha", "s", "both"), default=None)
    p.add_argument("--fd", action="store_true", help="finite-difference derivative for wrt-s sums")
    p.add_argument("--cross-check", action="store_true")
    p.set_defaults(func=cmd_synthesize)

    p = sub.add_parser("verify", help="verify one identity, or run the regression suite with --all")
    _add_common(p)
    p.add_argument("id", nargs="?", default=None)
    _add_params(p)
    p.add_argument("--all", action="store_true")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("sweep", help="run a parameter sweep from a JSON spec file")
    _add_common(p)
    p.add_argument("spec")
    p.add_argument("--parallel", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("appendix", help="zeta-series derivation chain checks")
    _add_common(p)
    p.add_argument("--b", type=float, default=3.0)
    p.add_argument("--tol", type=float, default=1e-8)
    p.set_defaults(func=cmd_appendix)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if getattr(args, "parallel", 1) < 1:
        parser.error("--parallel must be >= 1")
    if args.command == "synthesize" and not (args.preset or args.expr):
        parser.error("synthesize needs a preset name or --expr")
    try:
        return args.func(args)
    except UnknownIdentityError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except (ClassificationConflictError, UnsupportedFunctionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CLASSIFICATION
    except (InvalidInputError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_UNKNOWN
    except TelescopiaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
