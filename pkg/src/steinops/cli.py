"""Command-line surface: batch construction, verification, and mappings.

Exit codes: 0 success, 1 statistical failure or non-equivalence, 2 parse or
validation failure (the message names the offending field or flag).
"""
from __future__ import annotations

import argparse
import json
import sys

from .cumulants import (cumulant_sequence, delta_discrepancy, first_cumulant)
from .operators import (build_operator, operator_from_json, scalar_equivalent)
from .targets import (McKayI, MultivariateGammaProjection, SecondChaos,
                      derive_levy_decomposition, mckay_from_bivariate,
                      parse_spec)
from .verify import (DampedPolynomial, annihilation_test, mckay_recursion_test,
                     report_json_bytes)

MIN_VERIFY_SAMPLES = 10_000

ROUTES = ("fourier", "malliavin", "closed-form")


def _add_common(p: argparse.ArgumentParser, route: bool = True):
    p.add_argument("--spec", required=True, help="path to a target spec JSON file")
    if route:
        p.add_argument("--route", default="fourier", choices=ROUTES)
    p.add_argument("--output", default="json", choices=("json", "text"))
    p.add_argument("--out", default=None, help="write the document here instead of stdout")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steinops",
        description="Construct and certify differential operators for "
                    "gamma-type target laws")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build-operator", help="print the operator for a spec")
    _add_common(p)

    p = sub.add_parser("verify", help="Monte Carlo annihilation check")
    _add_common(p)
    p.add_argument("--n", type=int, default=1_000_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--degrees", default="0,1,2,3,4,5,6",
                   help="comma-separated test-function degrees")
    p.add_argument("--operator", default=None,
                   help="operator JSON file; overrides --route")

    p = sub.add_parser("compare", help="build via two routes, report the scalar")
    _add_common(p, route=False)
    p.add_argument("--routes", default="fourier,closed-form",
                   help="two comma-separated routes")

    p = sub.add_parser("mckay-map", help="bivariate matrix to McKay parameters")
    _add_common(p, route=False)

    p = sub.add_parser("levy-decompose", help="McKay law as two gamma factors")
    _add_common(p, route=False)

    p = sub.add_parser("cumulants", help="exact cumulant sequence")
    _add_common(p, route=False)
    p.add_argument("--order", type=int, default=8)

    return parser


def _load_spec(path: str):
    try:
        with open(path, encoding="utf-8") as f:
            doc = json.load(f)
    except OSError as e:
        raise ValueError(f"spec: cannot read {path}: {e.strerror}") from None
    except json.JSONDecodeError as e:
        raise ValueError(f"spec: invalid JSON in {path}: {e.msg}") from None
    return parse_spec(doc)


def _emit(doc, output: str, out_path, text_renderer=None) -> None:
    if output == "json":
        payload = report_json_bytes(doc).decode()
    else:
        payload = text_renderer(doc) if text_renderer else _render_text(doc)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(payload + "\n")
    else:
        print(payload)


def _render_text(doc, indent: str = "") -> str:
    lines = []
    if isinstance(doc, dict):
        for key in sorted(doc):
            value = doc[key]
            if isinstance(value, (dict, list)):
                lines.append(f"{indent}{key}:")
                lines.append(_render_text(value, indent + "  "))
            else:
                lines.append(f"{indent}{key}: {value}")
    elif isinstance(doc, list):
        for value in doc:
            if isinstance(value, (dict, list)):
                lines.append(_render_text(value, indent + "  "))
            else:
                lines.append(f"{indent}- {value}")
    else:
        lines.append(f"{indent}{doc}")
    return "\n".join(lines)


def _parse_degrees(raw: str) -> list[int]:
    try:
        degrees = [int(tok) for tok in raw.split(",") if tok.strip() != ""]
    except ValueError:
        raise ValueError("degrees: must be comma-separated integers") from None
    if not degrees or any(d < 0 for d in degrees):
        raise ValueError("degrees: must be nonnegative integers")
    return degrees


def _cmd_build(args) -> int:
    spec = _load_spec(args.spec)
    op = build_operator(spec, args.route)
    _emit(op.to_json(), args.output, args.out)
    return 0


def _cmd_verify(args) -> int:
    spec = _load_spec(args.spec)
    if args.n < MIN_VERIFY_SAMPLES:
        raise ValueError("n too small")
    degrees = _parse_degrees(args.degrees)
    if args.operator:
        try:
            with open(args.operator, encoding="utf-8") as f:
                op = operator_from_json(json.load(f))
        except OSError as e:
            raise ValueError(f"operator: cannot read {args.operator}: "
                             f"{e.strerror}") from None
        except json.JSONDecodeError as e:
            raise ValueError(f"operator: invalid JSON: {e.msg}") from None
    else:
        op = build_operator(spec, args.route)
    fns = [DampedPolynomial(d) for d in degrees]
    report = annihilation_test(op, spec, fns, args.n, args.seed)
    doc = report.to_json_dict()
    verdict = report.verdict
    if isinstance(spec, McKayI):
        rec = mckay_recursion_test(spec, 4, args.n, args.seed)
        doc["recursion"] = rec["recursion"]
        if rec["verdict"] == "fail":
            verdict = "fail"
        doc["verdict"] = verdict
    _emit(doc, args.output, args.out,
          text_renderer=(lambda d: report.to_text()) if "recursion" not in doc
          else None)
    return 0 if verdict == "pass" else 1


def _cmd_compare(args) -> int:
    spec = _load_spec(args.spec)
    routes = [r.strip() for r in args.routes.split(",")]
    if len(routes) != 2:
        raise ValueError("routes: exactly two comma-separated routes required")
    for r in routes:
        if r not in ROUTES:
            raise ValueError(f"routes: unknown route {r!r}")
    op1 = build_operator(spec, routes[0])
    op2 = build_operator(spec, routes[1])
    s = scalar_equivalent(op1, op2)
    doc = {"routes": routes, "scalar": s, "equivalent": s is not None}
    _emit(doc, args.output, args.out)
    return 0 if s is not None else 1


def _cmd_mckay_map(args) -> int:
    spec = _load_spec(args.spec)
    if not isinstance(spec, MultivariateGammaProjection) or spec.dim != 2:
        raise ValueError("spec: mckay-map requires a 2x2 multivariate_gamma spec")
    m = mckay_from_bivariate(spec.C_array(), spec.alpha)
    _emit({"a": m.a, "b": m.b, "c": m.c}, args.output, args.out)
    return 0


def _cmd_levy(args) -> int:
    spec = _load_spec(args.spec)
    if not isinstance(spec, McKayI):
        raise ValueError("spec: levy-decompose requires a mckay spec")
    shape, rate1, rate2 = derive_levy_decomposition(spec)
    doc = {
        "shape": shape,
        "rate1": rate1,
        "rate2": rate2,
        "levy_density": f"{shape!r}*(exp(-{rate1!r}*x)+exp(-{rate2!r}*x))/x",
    }
    _emit(doc, args.output, args.out)
    return 0


def _cmd_cumulants(args) -> int:
    spec = _load_spec(args.spec)
    if args.order < 2:
        raise ValueError("order: must be at least 2")
    seq = cumulant_sequence(spec, args.order)
    doc = {
        "kappa1": first_cumulant(spec),
        "orders": list(range(2, args.order + 1)),
        "values": list(seq.values),
    }
    if isinstance(spec, SecondChaos):
        d = len(spec.lambdas)
        full = cumulant_sequence(spec, max(args.order, 2 * (d + 1)))
        doc["delta"] = delta_discrepancy(full, spec.lambdas)
    _emit(doc, args.output, args.out)
    return 0


_HANDLERS = {
    "build-operator": _cmd_build,
    "verify": _cmd_verify,
    "compare": _cmd_compare,
    "mckay-map": _cmd_mckay_map,
    "levy-decompose": _cmd_levy,
    "cumulants": _cmd_cumulants,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
