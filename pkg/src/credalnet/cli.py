"""Command-line interface: ``credalnet {query,validate,sweep,oracle}``.

Exit codes: 0 success, 1 usage error, 2 input error, 3 computation error
(including an oracle mismatch).
"""

from __future__ import annotations

import argparse
import sys
from collections.abc import Sequence
from dataclasses import dataclass, replace

import numpy as np

from .approx import anneal_search, gradient_bounds, qem_bounds
from .ccm import apply_ccm
from .errors import CredalNetError, InvalidNetworkError
from .fileformat import InputError, Model, build_model, load_model
from .lavine import lavine_bracket
from .natural import NE_CAP, build_ne_program, charnes_cooper, ne_bounds
from .results import FORMATS, serialize_results
from .type1 import (
    ENUMERATION_CAP,
    BoundsResult,
    bounds_by_enumeration,
    bounds_by_joint_max,
    complement_values,
    expectation_bounds,
    variance_bounds,
)

METHODS = ("enum", "joint", "gradient", "qem", "anneal", "lavine", "ne-lp")
EXIT_OK, EXIT_USAGE, EXIT_INPUT, EXIT_COMPUTE = 0, 1, 2, 3
ORACLE_TOL = 1e-6
CONTAINMENT_SLACK = 1e-7


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


@dataclass
class MethodOptions:
    tol: float = 1e-6
    seed: int = 0
    restarts: int = 8
    cap: int = ENUMERATION_CAP
    ne_cap: int = NE_CAP
    steps: int = 5000


def compute_bounds(model: Model, q: int, a, e: dict[int, int], method: str,
                   opts: MethodOptions | None = None) -> BoundsResult:
    """Posterior bounds of ``x_q in a`` given ``e`` with the named method."""
    opts = opts or MethodOptions()
    if method == "ne-lp":
        return ne_bounds(model.net, model.specs, q, a, e, cap=opts.ne_cap)
    t = apply_ccm(model.net, model.specs)
    if method == "enum":
        return bounds_by_enumeration(t, q, a, e, cap=opts.cap)
    if method == "joint":
        return bounds_by_joint_max(t, q, a, e)
    if method == "gradient":
        return gradient_bounds(t, q, a, e, restarts=opts.restarts, seed=opts.seed)
    if method == "qem":
        return qem_bounds(t, q, a, e, restarts=opts.restarts, seed=opts.seed)
    if method == "anneal":
        return anneal_search(t, q, a, e, steps=opts.steps, seed=opts.seed)
    if method == "lavine":
        lo = lavine_bracket(t, q, a, e, tol=opts.tol, cap=opts.cap)
        rest = complement_values(model.net.variables[q].cardinality, a)
        hi = lavine_bracket(t, q, rest, e, tol=opts.tol, cap=opts.cap)
        return BoundsResult(lo.estimate, max(1.0 - hi.estimate, lo.estimate), method="lavine",
                            work={"evaluations": lo.evaluations + hi.evaluations},
                            detail={"lower_bracket": (lo.lo, lo.hi),
                                    "upper_bracket": (1.0 - hi.hi, 1.0 - hi.lo),
                                    "zero_mass_excluded": len(lo.zero_mass)})
    raise UsageError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# Argument helpers
# ---------------------------------------------------------------------------


def _value_index(model: Model, var: int, text: str) -> int:
    v = model.net.variables[var]
    labels = v.labels or tuple(str(k) for k in range(v.cardinality))
    if text in labels:
        return labels.index(text)
    try:
        k = int(text)
    except ValueError:
        k = -1
    if 0 <= k < v.cardinality:
        return k
    raise InputError(f"{text!r} is not a value of {v.name} (values: {', '.join(labels)})",
                     where="command line")


def _variable(model: Model, name: str) -> int:
    try:
        return model.net.index(name)
    except KeyError:
        raise InputError(f"unknown variable {name!r}", where="command line") from None


def _split_assignment(text: str) -> tuple[str, str | None]:
    name, sep, value = text.partition("=")
    if not name or (sep and not value):
        raise UsageError(f"expected VAR or VAR=VALUE, got {text!r}")
    return name, value if sep else None


def _targets(model: Model, target: str) -> tuple[int, list[int]]:
    name, value = _split_assignment(target)
    q = _variable(model, name)
    if value is None:
        return q, list(range(model.net.variables[q].cardinality))
    return q, [_value_index(model, q, value)]


def _evidence(model: Model, items: Sequence[str]) -> dict[int, int]:
    e = {}
    for item in items or []:
        name, value = _split_assignment(item)
        if value is None:
            raise UsageError(f"evidence needs VAR=VALUE, got {item!r}")
        var = _variable(model, name)
        if var in e:
            raise UsageError(f"evidence on {name} given twice")
        e[var] = _value_index(model, var, value)
    return e


def _label(model: Model, q: int, a: int, e: dict[int, int]) -> str:
    net = model.net
    text = f"p({net.variables[q].name}={net.variables[q].label(a)}"
    if e:
        text += " | " + ", ".join(f"{net.variables[v].name}={net.variables[v].label(k)}"
                                  for v, k in sorted(e.items()))
    return text + ")"


def _options(args) -> MethodOptions:
    if args.tol <= 0 or args.tol >= 1:
        raise UsageError("--tol must lie in (0, 1)")
    if args.restarts < 1:
        raise UsageError("--restarts must be at least 1")
    return MethodOptions(tol=args.tol, seed=args.seed, restarts=args.restarts)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def _cmd_query(args, out) -> int:
    model = load_model(args.net)
    opts = _options(args)
    e = _evidence(model, args.evidence)
    if args.utility:
        if args.target:
            raise UsageError("give either --target or --utility")
        if args.method != "enum":
            raise UsageError("utility bounds are computed by --method enum only")
        if args.utility not in model.utilities:
            raise InputError(f"unknown utility {args.utility!r}", where="command line")
        u = model.utilities[args.utility]
        t = apply_ccm(model.net, model.specs)
        r = (variance_bounds if args.stat == "variance" else expectation_bounds)(t, u, e)
        r.label = f"{args.stat}({u.name})"
        out.write(serialize_results(r, args.format))
        return EXIT_OK
    if not args.target:
        raise UsageError("--target (or --utility) is required")
    q, values = _targets(model, args.target)
    if q in e:
        raise UsageError("the target variable is also evidence")
    if args.dump_lp:
        if args.method != "ne-lp" or len(values) != 1:
            raise UsageError("--dump-lp needs --method ne-lp and a single target value")
        lp = charnes_cooper(build_ne_program(model.net, model.specs, q, values[0], e), "min")
        with open(args.dump_lp, "w", encoding="utf-8") as fh:
            fh.write(lp.dump())
    results = []
    for a in values:
        r = compute_bounds(model, q, a, e, args.method, opts)
        r.label = _label(model, q, a, e)
        results.append(r)
    out.write(serialize_results(results, args.format))
    return EXIT_OK


def _cmd_validate(args, out) -> int:
    model = load_model(args.net)
    net = model.net
    out.write(f"ok: {net.n} variables, {len(model.specs)} credal nodes, "
              f"{len(model.utilities)} utilities\n")
    return EXIT_OK


def _set_param(model: Model, node: str, param: str, value: float) -> Model:
    doc = model.document
    blocks = [b for b in doc.credals if b.name == node]
    if not blocks:
        raise InputError(f"no credal block for {node!r}", where="command line")
    block = blocks[0]
    hits = [k for k, e in enumerate(block.entries) if e.key == param]
    if not hits:
        raise InputError(f"credal {node} has no parameter {param!r}", where="command line")
    entries = list(block.entries)
    for k in hits:
        if len(entries[k].values) != 1:
            raise InputError(f"parameter {param!r} of {node} is not a scalar", where="command line")
        entries[k] = replace(entries[k], values=(float(value),))
    credals = [replace(b, entries=entries) if b is block else b for b in doc.credals]
    return build_model(replace(doc, credals=credals))


def _cmd_sweep(args, out) -> int:
    model = load_model(args.net)
    opts = _options(args)
    if args.steps < 1:
        raise UsageError("--steps must be at least 1")
    q, values = _targets(model, args.target)
    e = _evidence(model, args.evidence)
    grid = np.linspace(args.start, args.stop, args.steps + 1)
    results, extra = [], []
    for x in grid:
        m = _set_param(model, args.node, args.param, float(x))
        for a in values:
            r = compute_bounds(m, q, a, e, args.method, opts)
            r.label = _label(m, q, a, e)
            results.append(r)
            extra.append({args.param: f"{x:.12g}"})
    out.write(serialize_results(results, "csv", extra))
    return EXIT_OK


def _cmd_oracle(args, out) -> int:
    model = load_model(args.net)
    opts = _options(args)
    q, values = _targets(model, args.target)
    e = _evidence(model, args.evidence)
    failures = 0
    for a in values:
        t = apply_ccm(model.net, model.specs)
        exact = bounds_by_enumeration(t, q, a, e)
        r = compute_bounds(model, q, a, e, args.method, opts)
        label = _label(model, q, a, e)
        if args.method == "ne-lp":
            ok = (r.lower <= exact.lower + CONTAINMENT_SLACK
                  and r.upper >= exact.upper - CONTAINMENT_SLACK)
            check = "contains"
        else:
            ok = (abs(r.lower - exact.lower) <= args.oracle_tol
                  and abs(r.upper - exact.upper) <= args.oracle_tol)
            check = "matches"
        verdict = "ok" if ok else "MISMATCH"
        out.write(f"{label} enum=[{exact.lower:.9f}, {exact.upper:.9f}] "
                  f"{args.method}=[{r.lower:.9f}, {r.upper:.9f}] {check}: {verdict}\n")
        failures += not ok
    return EXIT_OK if failures == 0 else EXIT_COMPUTE


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="credalnet", description="Posterior bounds in credal networks.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, target=True, method=True):
        p.add_argument("--net", required=True, metavar="FILE")
        if target:
            p.add_argument("--target", metavar="VAR[=VALUE]")
            p.add_argument("--evidence", nargs="+", action="extend", default=[],
                           metavar="VAR=VALUE")
        if method:
            p.add_argument("--method", choices=METHODS, default="enum")
            p.add_argument("--tol", type=float, default=1e-6)
            p.add_argument("--seed", type=int, default=0)
            p.add_argument("--restarts", type=int, default=8)

    q = sub.add_parser("query", help="posterior or utility bounds")
    common(q)
    q.add_argument("--format", choices=FORMATS, default="plain")
    q.add_argument("--utility", metavar="NAME")
    q.add_argument("--stat", choices=("expectation", "variance"), default="expectation")
    q.add_argument("--dump-lp", metavar="FILE", help="write the natural-extension LP (min sense)")

    common(sub.add_parser("validate", help="parse and validate only"), target=False, method=False)

    s = sub.add_parser("sweep", help="vary a scalar credal parameter, emit csv")
    common(s)
    s.add_argument("--node", required=True)
    s.add_argument("--param", default="eps")
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--steps", type=int, default=10, help="number of intervals")

    o = sub.add_parser("oracle", help="cross-check a method against enumeration")
    common(o)
    o.add_argument("--oracle-tol", type=float, default=ORACLE_TOL)
    return parser


_COMMANDS = {"query": _cmd_query, "validate": _cmd_validate, "sweep": _cmd_sweep,
             "oracle": _cmd_oracle}


def main(argv: Sequence[str] | None = None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        if args.command in ("sweep", "oracle") and not args.target:
            raise UsageError("--target is required")
        return _COMMANDS[args.command](args, out)
    except UsageError as exc:
        err.write(f"credalnet: usage error: {exc}\n")
        return EXIT_USAGE
    except (InputError, InvalidNetworkError, OSError) as exc:
        err.write(f"credalnet: input error: {exc}\n")
        return EXIT_INPUT
    except (CredalNetError, ValueError, RuntimeError) as exc:
        err.write(f"credalnet: computation error: {exc}\n")
        return EXIT_COMPUTE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)


if __name__ == "__main__":
    sys.exit(main())
