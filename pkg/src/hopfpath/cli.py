"""Command-line interface: one subcommand per library operation.

Exit codes: 0 on success, 1 when a check reports violations, 2 on usage or
parse errors.  Output is deterministic for fixed flags and seed; exact scalars
print as p/q, floats with 12 significant digits.
"""
from __future__ import annotations

import argparse
import json
import sys
from fractions import Fraction

from .hopf_core import check_axioms, get_instance
from .hopf_ck import enumerate_cuts, phi_hat_lin, phi_lin, psi_lin
from .linalg import (
    LinComb,
    format_lincomb,
    format_scalar,
    format_tensorcomb,
    lincomb_to_json,
    pair,
    tensorcomb_to_json,
)
from .model_rde import VectorField, picard_solve
from .roughpath import (
    PiecewiseLinearPath,
    RoughPathConfig,
    branched_lift_fn,
    branched_to_geo,
    check_rough_axioms,
    geo_to_branched,
    q_gamma,
    signature_lift,
)
from .series import TruncatedElement, bch, exp_trunc, homog_norm, log_trunc
from .symbols import ParseError, parse_expr

_KIND_BY_ALGEBRA = {
    "poly": "multiindex",
    "shuffle": "word",
    "concat": "word",
    "ck": "forest",
    "gl": "forest",
}


def _common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--dim", type=int, default=2, help="alphabet size d (default 2)")
    parser.add_argument(
        "--algebra",
        choices=sorted(_KIND_BY_ALGEBRA),
        default="shuffle",
        help="Hopf algebra instance",
    )
    parser.add_argument("--truncation", type=int, default=4, help="truncation level")
    parser.add_argument("--gamma", type=str, default="1/3", help="Hölder exponent")
    parser.add_argument("--seed", type=int, default=0, help="PRNG seed for checks")
    parser.add_argument("--format", choices=["text", "json"], default="text")
    parser.add_argument("--float", action="store_true", help="print scalars as floats")


def _parse(args, text: str) -> LinComb:
    return parse_expr(text, _KIND_BY_ALGEBRA[args.algebra], args.dim)


def _emit_lincomb(args, x: LinComb):
    if args.format == "json":
        print(json.dumps(lincomb_to_json(x, args.float), ensure_ascii=False))
    else:
        print(format_lincomb(x, args.float))


def _emit_tensor(args, x):
    if args.format == "json":
        print(json.dumps(tensorcomb_to_json(x, args.float), ensure_ascii=False))
    else:
        print(format_tensorcomb(x, args.float, descending=True))


def _gamma(args) -> Fraction:
    return Fraction(args.gamma)


def _grid(path: PiecewiseLinearPath, points: int) -> list[Fraction]:
    lo, hi = path.times[0], path.times[-1]
    return [lo + (hi - lo) * Fraction(i, points - 1) for i in range(points)]


def _truncated(args, x: LinComb) -> TruncatedElement:
    return TruncatedElement.make(x, args.truncation, get_instance(args.algebra, args.dim))


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hopfpath",
        description="Exact combinatorial Hopf algebras and rough-path calculus",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, **kwargs) -> argparse.ArgumentParser:
        p = sub.add_parser(name, **kwargs)
        _common_flags(p)
        return p

    p = add("product", help="product of two elements")
    p.add_argument("x")
    p.add_argument("y")

    p = add("coproduct", help="coproduct of an element")
    p.add_argument("x")

    p = add("antipode", help="antipode of an element")
    p.add_argument("x")
    p.add_argument("--engine", choices=["recursive", "closed"], default="recursive")

    p = add("pair", help="duality pairing of two elements")
    p.add_argument("x")
    p.add_argument("y")

    p = add("check-axioms", help="verify the Hopf axioms exactly")
    p.add_argument("--max-grade", type=int, default=4)
    p.add_argument("--samples", type=int, default=500)

    for name in ("exp", "log", "norm"):
        p = add(name, help=f"truncated {name}")
        p.add_argument("x")

    p = add("bch", help="Baker-Campbell-Hausdorff combination")
    p.add_argument("x")
    p.add_argument("y")

    p = add("cuts", help="admissible cuts of a forest with multiplicities")
    p.add_argument("forest")

    p = add("convert", help="map between word and forest expressions")
    p.add_argument("--via", choices=["phi", "phihat", "psi"], required=True)
    p.add_argument("x")

    for name in ("signature", "branched-lift"):
        p = add(name, help=f"{name} of a piecewise-linear path on [from, to]")
        p.add_argument("path", help="CSV file with header t,x1,...,xd")
        p.add_argument("--level", type=int, default=3)
        p.add_argument("--from", dest="t_from", type=str, default=None)
        p.add_argument("--to", dest="t_to", type=str, default=None)

    p = add("check-rough", help="character/Chen/inverse and Hölder report")
    p.add_argument("path")
    p.add_argument("--flavor", choices=["geometric", "branched"], default="geometric")
    p.add_argument("--grid", type=int, default=9)
    p.add_argument("--level", type=int, default=None)

    p = add("qgamma", help="growth weight q_gamma of a forest")
    p.add_argument("forest")

    p = add("convert-lift", help="translate a lift between flavors, print at (from, to)")
    p.add_argument("path")
    p.add_argument("--direction", choices=["g2b", "b2g"], required=True)
    p.add_argument("--level", type=int, default=3)
    p.add_argument("--grid", type=int, default=5)
    p.add_argument("--from", dest="t_from", type=str, default=None)
    p.add_argument("--to", dest="t_to", type=str, default=None)

    p = add("rde", help="solve dy = sum_i f_i(y) dx^i by truncated Picard steps")
    p.add_argument("path")
    p.add_argument("--f", dest="field", default="linear", help="const[:c]|linear|poly:c0,c1,...|sin")
    p.add_argument("--y0", type=str, default="0")
    p.add_argument("--level", type=int, default=4)
    p.add_argument("--step", type=str, default="1/100")
    p.add_argument("--T", type=str, default=None)
    p.add_argument("--out", choices=["csv"], default="csv")

    args = parser.parse_args(argv)
    try:
        return _dispatch(args)
    except ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, TypeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def _dispatch(args) -> int:
    cmd = args.command
    if cmd == "product":
        inst = get_instance(args.algebra, args.dim)
        _emit_lincomb(args, inst.product(_parse(args, args.x), _parse(args, args.y)))
        return 0
    if cmd == "coproduct":
        inst = get_instance(args.algebra, args.dim)
        _emit_tensor(args, inst.coproduct(_parse(args, args.x)))
        return 0
    if cmd == "antipode":
        inst = get_instance(args.algebra, args.dim)
        x = _parse(args, args.x)
        out = inst.antipode_closed(x) if args.engine == "closed" else inst.antipode(x)
        _emit_lincomb(args, out)
        return 0
    if cmd == "pair":
        value = pair(_parse(args, args.x), _parse(args, args.y))
        print(format_scalar(value, args.float))
        return 0
    if cmd == "check-axioms":
        inst = get_instance(args.algebra, args.dim)
        report = check_axioms(inst, args.max_grade, args.samples, args.seed)
        if report.passed:
            print("OK")
            return 0
        print(report.summary())
        return 1
    if cmd == "exp":
        _emit_lincomb(args, exp_trunc(_truncated(args, _parse(args, args.x))).value)
        return 0
    if cmd == "log":
        _emit_lincomb(args, log_trunc(_truncated(args, _parse(args, args.x))).value)
        return 0
    if cmd == "bch":
        out = bch(_truncated(args, _parse(args, args.x)), _truncated(args, _parse(args, args.y)))
        _emit_lincomb(args, out.value)
        return 0
    if cmd == "norm":
        print(f"{homog_norm(_truncated(args, _parse(args, args.x))):.12g}")
        return 0
    if cmd == "cuts":
        comb = parse_expr(args.forest, "forest", args.dim)
        if len(comb) != 1 or next(iter(comb))[1] != 1:
            raise ValueError("cuts expects a single forest, not a combination")
        forest = next(iter(comb))[0]
        rows = [
            {"crown": str(c.crown), "trunk": str(c.trunk), "multiplicity": c.multiplicity}
            for c in enumerate_cuts(forest)
        ]
        if args.format == "json":
            print(json.dumps(rows, ensure_ascii=False))
        else:
            for row in rows:
                print(f"{row['crown']} | {row['trunk']} | {row['multiplicity']}")
        return 0
    if cmd == "convert":
        if args.via == "phi":
            out = phi_lin(parse_expr(args.x, "forest", args.dim))
        elif args.via == "phihat":
            out = phi_hat_lin(parse_expr(args.x, "word", args.dim))
        else:
            out = psi_lin(parse_expr(args.x, "forest", args.dim))
        _emit_lincomb(args, out)
        return 0
    if cmd in ("signature", "branched-lift"):
        path = PiecewiseLinearPath.from_csv(args.path)
        make = signature_lift if cmd == "signature" else branched_lift_fn
        lift = make(path, args.level)
        s = Fraction(args.t_from) if args.t_from is not None else path.times[0]
        t = Fraction(args.t_to) if args.t_to is not None else path.times[-1]
        _emit_lincomb(args, lift.eval(s, t).value)
        return 0
    if cmd == "check-rough":
        path = PiecewiseLinearPath.from_csv(args.path)
        cfg = RoughPathConfig.make(_gamma(args), args.flavor)
        level = args.level if args.level is not None else cfg.level
        make = signature_lift if args.flavor == "geometric" else branched_lift_fn
        lift = make(path, level)
        report = check_rough_axioms(lift, cfg, _grid(path, args.grid))
        print(report.summary())
        return 0 if report.passed else 1
    if cmd == "qgamma":
        comb = parse_expr(args.forest, "forest", args.dim)
        forest = next(iter(comb))[0]
        print(f"{q_gamma(forest, _gamma(args)):.12g}")
        return 0
    if cmd == "convert-lift":
        path = PiecewiseLinearPath.from_csv(args.path)
        s = Fraction(args.t_from) if args.t_from is not None else path.times[0]
        t = Fraction(args.t_to) if args.t_to is not None else path.times[-1]
        if args.direction == "g2b":
            out = geo_to_branched(signature_lift(path, args.level))
        else:
            out = branched_to_geo(
                branched_lift_fn(path, args.level), _grid(path, args.grid)
            )
        _emit_lincomb(args, out.eval(s, t).value)
        return 0
    if cmd == "rde":
        path = PiecewiseLinearPath.from_csv(args.path)
        field = VectorField.from_spec(args.field, path.dim)
        samples = picard_solve(
            path,
            field,
            Fraction(args.y0),
            _gamma(args),
            args.level,
            Fraction(args.step),
            T=Fraction(args.T) if args.T is not None else None,
        )
        print("t,y")
        for t, y in samples:
            print(f"{float(t):.12g},{float(y):.12g}")
        return 0
    raise ValueError(f"unknown command {cmd!r}")


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
