"""Command-line front end.

Exit codes: 0 success, 1 a verification failed, 2 bad usage or arguments
outside the domain, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import os
import sys
from typing import Optional, Sequence

from . import __version__
from . import asymptotics as asy
from . import bubbles as bub
from . import constants as cst
from . import solutions as sols
from .errors import BubbleTowerError, DomainError

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


def _g(x) -> str:
    return format(float(x), ".17g")


def _emit(text: str, out: Optional[str]) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        try:
            sys.stdout.write(text)
            sys.stdout.flush()
        except BrokenPipeError:
            # reader closed early (e.g. `| head`); silence the flush at exit
            sys.stdout = open(os.devnull, "w")


def _table(header: Sequence[str], rows: Sequence[Sequence]) -> str:
    cells = [[str(h) for h in header]] + [
        [c if isinstance(c, str) else repr(float(c)) for c in row] for row in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(header))]
    lines = ["  ".join(c.rjust(w) for c, w in zip(r, widths)) for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def _schedule(args) -> list[float]:
    return asy.default_schedule(args.n, eps_start=args.eps_start,
                                factor=args.eps_factor, count=args.eps_count)


def _parse_quantity(text: str, bc, n: int, m: int) -> asy.QuantitySpec:
    kind, _, idx = text.partition(":")
    if kind in asy.WHOLE_SPACE_KINDS:
        return asy.QuantitySpec(kind, int(idx) if idx else m, bc, n, m)
    if not idx:
        raise UsageError(f"quantity {kind!r} needs an index, e.g. {kind}:1")
    index = float(idx) if kind == "pointwise_value" else int(idx)
    return asy.QuantitySpec(kind, index, bc, n, m)


def cmd_solve(args) -> int:
    if args.eps is None:
        raise UsageError("solve needs --eps")
    sol = sols.solve(args.bc, args.n, args.eps, args.m)
    record = sols.to_json_record(sol)
    if args.format == "json":
        _emit(sols.dumps_json(record) + "\n", args.out)
        return EXIT_OK
    rows = [("delta", k + 1, d, v) for k, (d, v) in
            enumerate(zip(sol.deltas, sol.delta_values))]
    rows += [("rho", k + 1, r, s) for k, (r, s) in
             enumerate(zip(sol.rhos, sol.rho_slopes))]
    if args.format == "csv":
        body = (f"# bc={sol.bc.value} n={sol.n} m={sol.m} eps={_g(sol.eps)}"
                f" rtol={_g(sol.base_profile.rtol)} version={__version__}\n"
                "feature,k,radius,value\n")
        body += "".join(f"{a},{b},{_g(c)},{_g(d)}\n" for a, b, c, d in rows)
        _emit(body, args.out)
        return EXIT_OK
    text = (f"{sol.bc.value} solution  n={sol.n}  m={sol.m}  eps={_g(sol.eps)}\n"
            + _table(["feature", "k", "radius", "u or u'"], rows))
    sys.stdout.write(text)
    if args.out:
        _emit(sols.dumps_json(record) + "\n", args.out)
    return EXIT_OK


def cmd_sweep(args) -> int:
    if not args.quantity:
        raise UsageError("sweep needs --quantity KIND:INDEX")
    spec = _parse_quantity(args.quantity, args.bc, args.n, args.m)
    res = asy.sweep(spec, _schedule(args))
    if args.format == "json":
        ex = res.extrapolation
        payload = {
            "quantity": spec.label, "n": spec.n, "m": spec.m,
            "bc": spec.bc.value, "exponent": str(spec.theoretical_exponent),
            "constant": spec.theoretical_constant,
            "rows": [r.__dict__ for r in res.rows],
            "fit": list(res.fit) if res.fit else None,
            "extrapolated": None if ex is None else ex.__dict__,
        }
        _emit(sols.dumps_json(payload) + "\n", args.out)
    else:
        tol = asy.tolerance_for(spec.m, args.tol)
        _emit(asy.sweep_csv(res, version=__version__, tolerance=tol), args.out)
    return EXIT_OK


def _print_report(args, payload: dict, rows, header) -> None:
    if args.format == "json":
        _emit(sols.dumps_json(payload) + "\n", args.out)
    else:
        _emit(_table(header, rows), args.out)


def _verify_constants(args) -> int:
    checks = []
    for n in range(3, args.n_max + 1):
        rec = cst.constants_via_recurrence(n, args.m_max)
        for m in range(1, args.m_max + 1):
            closed = cst.constants_table(n, m)
            names = ["D", "d", "Z", "z"] + (["Dt", "dt", "Zt", "zt"] if m >= 2 else [])
            worst = 0.0
            for name in names:
                a, b = closed.family(name), rec[m].family(name)
                for k in a:
                    worst = max(worst, abs(b[k] / a[k] - 1))
            checks.append({"n": n, "m": m, "max_relative_gap": worst,
                           "passed": worst <= 1e-12})
    ident = []
    for n in range(3, args.n_max + 1):
        for y in (float(n), n * (2 * n / (n - 2)) / 2):
            q = cst.profile_beta_integral(n, y)
            c = cst.profile_beta_closed_form(n, y)
            gap = abs(q / c - 1)
            ident.append({"n": n, "y": y, "relative_gap": gap,
                          "passed": gap <= 1e-8})
    ok = all(c["passed"] for c in checks + ident)
    rows = [(f"recurrence n={c['n']} m={c['m']}", c["max_relative_gap"],
             "pass" if c["passed"] else "FAIL") for c in checks]
    rows += [(f"beta integral n={c['n']} y={_g(c['y'])}", c["relative_gap"],
              "pass" if c["passed"] else "FAIL") for c in ident]
    _print_report(args, {"recurrence": checks, "beta_integral": ident,
                         "passed": ok}, rows, ["check", "gap", "verdict"])
    return EXIT_OK if ok else EXIT_FAIL


def _verify_identities(args) -> int:
    eps_list = [args.eps] if args.eps is not None else [0.5, 0.1]
    checks = []

    def add(name, value, limit):
        checks.append({"check": name, "value": value, "limit": limit,
                       "passed": bool(value <= limit)})

    for eps in eps_list:
        sol_d = sols.dirichlet_solution(args.n, eps, args.m)
        add(f"pohozaev dirichlet eps={eps:g}",
            sols.solution_pohozaev_residual(sol_d), 1e-8)
        g, lp = sols.energy(sol_d)
        add(f"energy dirichlet eps={eps:g}", abs(g / lp - 1), 1e-6)
        if args.m >= 2:
            sol_n = sols.neumann_solution(args.n, eps, args.m)
            add(f"pohozaev neumann eps={eps:g}",
                sols.solution_pohozaev_residual(sol_n), 1e-8)
            add(f"integral identity neumann eps={eps:g}",
                sols.check_neumann_integral_identity(sol_n), 1e-6)
            g, lp = sols.energy(sol_n)
            add(f"energy neumann eps={eps:g}", abs(g / lp - 1), 1e-6)
    ok = all(c["passed"] for c in checks)
    rows = [(c["check"], c["value"], c["limit"], "pass" if c["passed"] else "FAIL")
            for c in checks]
    _print_report(args, {"n": args.n, "m": args.m, "checks": checks,
                         "passed": ok}, rows,
                  ["check", "residual", "limit", "verdict"])
    return EXIT_OK if ok else EXIT_FAIL


def cmd_verify(args) -> int:
    if args.constants:
        return _verify_constants(args)
    if args.identities:
        return _verify_identities(args)
    sched = _schedule(args)
    report = asy.verify_theorem(args.n, args.m, args.bc, sched, tol=args.tol)
    rows = [(c.label, c.constant, "" if c.extrapolated is None else c.extrapolated,
             "" if c.relative_error is None else c.relative_error,
             "" if c.fitted_exponent is None else c.fitted_exponent,
             c.expected_exponent, "pass" if c.passed else "FAIL")
            for c in report.checks]
    _print_report(args, report.as_dict(), rows,
                  ["quantity", "constant", "extrapolated", "rel_error",
                   "fitted_exp", "expected_exp", "verdict"])
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_constants(args) -> int:
    table = cst.constants_table(args.n, args.m)
    data = table.as_dict()
    if args.format == "json":
        _emit(sols.dumps_json(data) + "\n", args.out)
        return EXIT_OK
    rows = [("kappa", "", table.kappa), ("gamma_n", "", table.gamma_n)]
    for name in ("D", "d", "Z", "z", "Dt", "dt", "Zt", "zt", "alpha", "beta"):
        for k, v in data.get(name, {}).items():
            rows.append((name, k, v))
    for key, v in data["whole_space"].items():
        if v is not None:
            rows.append((key, "", v))
    if args.format == "csv":
        body = f"# n={table.n} m={table.m} version={__version__}\nname,k,value\n"
        body += "".join(f"{a},{b},{_g(c)}\n" for a, b, c in rows)
        _emit(body, args.out)
    else:
        _emit(_table(["name", "k", "value"], rows), args.out)
    return EXIT_OK


def cmd_bubbles(args) -> int:
    if args.eps is None:
        raise UsageError("bubbles needs --eps")
    bc = sols.BoundaryCondition.parse(args.bc)
    if bc is sols.BoundaryCondition.DIRICHLET:
        rem = bub.dirichlet_remainder(args.n, args.eps, args.m)
    elif bc is sols.BoundaryCondition.NEUMANN:
        rem = bub.neumann_remainder(args.n, args.eps, args.m)
    else:
        rep = bub.whole_space_ansatz_check(args.n, args.eps, args.m)
        rows = [(f"gap k={k + 1}", s, g) for k, (s, g) in
                enumerate(zip(rep.critical_radii, rep.gaps))]
        rows.append(("tail sup", "", rep.tail_sup))
        rows.append(("tail bound", "", rep.tail_bound))
        _emit(_table(["item", "s_k", "value"], rows), args.out)
        return EXIT_OK
    _emit(bub.remainder_csv(rem, version=__version__), args.out)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bubbletower",
        description="Concentrating radial solutions of the slightly subcritical "
                    "Lane-Emden equation: construction and limit checks.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, *, need_m=True, default_fmt="pretty"):
        p.add_argument("--n", type=int, default=3, help="dimension (>= 3)")
        if need_m:
            p.add_argument("--m", type=int, default=1, help="nodal regions")
        p.add_argument("--bc", default="dirichlet",
                       choices=["dirichlet", "neumann", "whole-space"])
        p.add_argument("--format", default=default_fmt,
                       choices=["pretty", "csv", "json"])
        p.add_argument("--out", help="output file (default: stdout)")

    def schedule(p):
        p.add_argument("--eps-start", type=float, default=None)
        p.add_argument("--eps-factor", type=float, default=0.5)
        p.add_argument("--eps-count", type=int, default=10)

    p = sub.add_parser("solve", help="construct one solution")
    common(p)
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="tabulate one scaled feature along eps")
    common(p, default_fmt="csv")
    schedule(p)
    p.add_argument("--quantity", help="KIND:INDEX, e.g. zero_slope:1")
    p.add_argument("--tol", type=float, default=None,
                   help="pass tolerance recorded in the CSV metadata")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", help="check limits, constants or identities")
    common(p)
    schedule(p)
    p.add_argument("--eps", type=float, help="single eps for --identities")
    p.add_argument("--tol", type=float, default=None,
                   help="relative tolerance (default 0.02 for m <= 2, 0.05 above)")
    p.add_argument("--constants", action="store_true")
    p.add_argument("--identities", action="store_true")
    p.add_argument("--n-max", type=int, default=8)
    p.add_argument("--m-max", type=int, default=8)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("constants", help="print the limit constants")
    common(p)
    p.set_defaults(func=cmd_constants)

    p = sub.add_parser("bubbles", help="compare a bubble tower with the solution")
    common(p, default_fmt="csv")
    p.add_argument("--eps", type=float)
    p.set_defaults(func=cmd_bubbles)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (UsageError, DomainError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BubbleTowerError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ArithmeticError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    raise SystemExit(main())
