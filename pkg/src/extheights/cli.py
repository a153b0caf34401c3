"""Command-line front end.

Exit codes: 0 success, 1 input error, 2 invariant violation, 3 internal diagnostic.
"""
from __future__ import annotations

import argparse
import json
import sys

import mpmath

from .config import JobConfig
from .curve import EllipticCurve, NotOnCurve, Point
from .extension import ExtensionData, ExtPoint, change_function_value, change_reference
from .heights import SupportCollision, canonical_height, local_height_table, naive_height, nt_pairing
from .linefuncs import FunctionCollision
from .places import ExactLog, RealValue, as_rational, fmt_rational
from .relative import (
    Found,
    OracleDecayError,
    decompose,
    difference_identity_check,
    find_height_zero_lift,
    multiple_with_lift,
    relative_heights,
)

EXIT_OK, EXIT_INPUT, EXIT_INVARIANT, EXIT_INTERNAL = 0, 1, 2, 3


class InputError(ValueError):
    pass


def fmt_real(x: RealValue, digits: int = 20) -> str:
    return f"{mpmath.nstr(x.value, digits)} +- {mpmath.nstr(x.abs_error, 2)}"


def fmt_local(x, digits: int = 20) -> str:
    if isinstance(x, ExactLog):
        return f"{x.coeff} * log {x.p}  (= {mpmath.nstr(x.to_real().value, digits)}, exact)"
    return fmt_real(x, digits)


def _curve(s: str) -> EllipticCurve:
    try:
        E = EllipticCurve.parse(s)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad --curve: {e}") from None
    if E.discriminant == 0:
        raise InputError(f"singular curve {s}")
    return E


def _point(E: EllipticCurve, s: str, flag: str) -> Point:
    try:
        P = Point.parse(s)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad {flag}: {e}") from None
    return E.check(P)


def _extension(args, E: EllipticCurve, P: Point):
    """(default extension, extension used for the computation).

    Fiber coordinates on the command line always refer to the default reference
    R0 (first candidate); --r and the collision fallback only change the
    trivialization used internally.  If P lies on the support for R0 the
    coordinate is read against the computing R instead, and the default is None.
    """
    Q0 = _point(E, args.q0, "--q0")
    base = ExtensionData.build(E, Q0)
    frame = base if base.param.admits(P) else None
    if args.r:
        return frame, ExtensionData.build(E, Q0, _point(E, args.r, "--r"))
    if frame is not None:
        return frame, base
    # auto policy: first candidate whose divisor avoids the requested base
    for R in base.candidates:
        if base.with_R(R).param.admits(P):
            return frame, base.with_R(R)
    raise SupportCollision(f"no candidate reference point avoids {P}")


def _to_compute(frame, data: ExtensionData, X: ExtPoint) -> ExtPoint:
    if frame is None or frame.R == data.R:
        return X
    return change_reference(frame, data.R, X)[1]


def _to_frame(frame, data: ExtensionData, P: Point, t):
    if frame is None or frame.R == data.R or not frame.param.admits(P):
        return t
    return t / change_function_value(frame, data.R, P)


def _print_frame(frame, data: ExtensionData) -> None:
    print(f"reference R      {data.R}")
    print(f"t given against  {(frame or data).R}")


def _ext_point(args, E: EllipticCurve) -> ExtPoint:
    P = _point(E, args.point, "--point")
    try:
        t = as_rational(args.t)
    except (ValueError, ZeroDivisionError) as e:
        raise InputError(f"bad --t: {e}") from None
    if t == 0:
        raise InputError("--t must be nonzero")
    return ExtPoint(P, t)


# ---------------------------------------------------------------------------


def cmd_height(args, cfg: JobConfig) -> int:
    E = _curve(args.curve)
    P = _point(E, args.point, "--point")
    d = cfg.precision_digits
    print(f"curve            {E}")
    print(f"point            {P}")
    print(f"naive height     {fmt_real(naive_height(E, P, d))}")
    print(f"canonical height {fmt_real(canonical_height(E, P, d))}")
    for v, lam in local_height_table(E, P, d):
        print(f"  lambda_{v!s:<8} {fmt_local(lam)}")
    return EXIT_OK


def cmd_relheight(args, cfg: JobConfig) -> int:
    E = _curve(args.curve)
    X = _ext_point(args, E)
    frame, data = _extension(args, E, X.base)
    X = _to_compute(frame, data, X)
    d = cfg.precision_digits
    rh = relative_heights(data, X, d)
    pair = nt_pairing(E, X.base, data.Q0, d)
    cert = difference_identity_check(data, X, tol=max(cfg.tolerance, 1e-8), digits=d)
    total = canonical_height(E, X.base, d) + rh.deg_H0 + rh.deg_Hinf
    _print_frame(frame, data)
    print(f"deg_H0           {fmt_real(rh.deg_H0)}")
    print(f"deg_Hinf         {fmt_real(rh.deg_Hinf)}")
    print(f"base pairing     {fmt_real(pair)}")
    print(f"total height     {fmt_real(total)}")
    print(f"residual         {fmt_real(cert.residual)}")
    return EXIT_OK if cert.holds else EXIT_INVARIANT


def cmd_decompose(args, cfg: JobConfig) -> int:
    E = _curve(args.curve)
    X = _ext_point(args, E)
    frame, data = _extension(args, E, X.base)
    X = _to_compute(frame, data, X)
    rep = decompose(data, X, cfg.precision_digits, tol=cfg.tolerance)
    sys.stdout.write(rep.to_json() + "\n" if args.format == "json" else rep.to_tsv())
    return EXIT_OK


def cmd_lift(args, cfg: JobConfig) -> int:
    E = _curve(args.curve)
    P = _point(E, args.point, "--point")
    frame, data = _extension(args, E, P)
    d, tol = cfg.precision_digits, cfg.tolerance
    res = find_height_zero_lift(data, P, tol, d)
    _print_frame(frame, data)
    rc = EXIT_OK
    if isinstance(res, Found):
        print(f"lift over {P}: {Found(_to_frame(frame, data, P, res.t))}")
        rc = _report_zero(data, ExtPoint(P, res.t), cfg)
    else:
        print(f"lift over {P}: {res}")
    if args.multiples:
        m = multiple_with_lift(data, P, args.multiples, tol, d)
        if isinstance(m, Found):
            nP = E.mul(m.n, P)
            print(f"multiples up to {args.multiples}: {Found(_to_frame(frame, data, nP, m.t), m.n)}")
            rc = max(rc, _report_zero(data, ExtPoint(nP, m.t), cfg))
        else:
            print(f"multiples up to {args.multiples}: {m}")
    return rc


def _report_zero(data, X: ExtPoint, cfg: JobConfig) -> int:
    rh = relative_heights(data, X, cfg.precision_digits)
    print(f"  verified deg_H0 = {fmt_real(rh.deg_H0)}, deg_Hinf = {fmt_real(rh.deg_Hinf)}")
    ok = rh.deg_H0.contains(0, cfg.tolerance) and rh.deg_Hinf.contains(0, cfg.tolerance)
    return EXIT_OK if ok else EXIT_INVARIANT


def cmd_verify(args, cfg: JobConfig) -> int:
    from . import verify

    results = verify.run(args.suite, fault=args.fault)
    failed = [r for r in results if not r.passed]
    if args.json:
        print(json.dumps({"passed": not failed, "checks": [r.to_dict() for r in results]}, indent=2))
    else:
        for r in results:
            print(f"{'PASS' if r.passed else 'FAIL'}\t{r.suite}\t{r.name}\t{r.detail}")
    return EXIT_INVARIANT if failed else EXIT_OK


# ---------------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    # parse errors are input errors, not argparse's default exit status 2
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="extheights", description="Heights on extensions of elliptic curves by Gm.")
    ap.add_argument("--digits", type=int, default=None, help="working precision (default: $EXTHEIGHTS_PRECISION or 40)")
    ap.add_argument("--tol", type=float, default=1e-10)
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    h = sub.add_parser("height", help="naive and canonical height with local decomposition")
    h.add_argument("--curve", required=True)
    h.add_argument("--point", required=True)

    def ext_args(p):
        p.add_argument("--curve", required=True)
        p.add_argument("--q0", required=True)
        p.add_argument("--point", required=True)
        p.add_argument("--r", default=None, help="explicit reference point (default: deterministic search)")

    r = sub.add_parser("relheight", help="relative heights of (point, t)")
    ext_args(r)
    r.add_argument("--t", required=True)

    dc = sub.add_parser("decompose", help="per-place height report")
    ext_args(dc)
    dc.add_argument("--t", required=True)
    dc.add_argument("--format", choices=("json", "tsv"), default="json")

    lf = sub.add_parser("lift", help="search for a height-zero lift")
    ext_args(lf)
    lf.add_argument("--multiples", type=int, default=0)

    v = sub.add_parser("verify", help="run invariant suites")
    v.add_argument("--suite", choices=("core", "metric", "oracle", "all"), default="all")
    v.add_argument("--json", action="store_true")
    v.add_argument("--fault", choices=("cocycle",), default=None, help=argparse.SUPPRESS)
    return ap


COMMANDS = {"height": cmd_height, "relheight": cmd_relheight, "decompose": cmd_decompose,
            "lift": cmd_lift, "verify": cmd_verify}


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        kw = {} if args.digits is None else {"precision_digits": args.digits}
        cfg = JobConfig(tolerance=args.tol, **kw)
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    try:
        return COMMANDS[args.command](args, cfg)
    except NotOnCurve as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except (InputError, SupportCollision, FunctionCollision) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except OracleDecayError as e:
        print(f"diagnostic: {e}", file=sys.stderr)
        return EXIT_INTERNAL
    except ArithmeticError as e:
        print(f"diagnostic: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
