"""Command-line front end.

Exit codes: 0 success, 1 negative verdict, 2 input error, 3 numerical failure.
"""

import argparse
import json
import math
import sys

import numpy as np

from .abel import AbelEquation, GroupCurve, flow_conjugacy_residual, pushforward
from .errors import (DimensionMismatch, Diverged, DomainError, InconsistencyError,
                     ParseError, ReductionError, SchemeError, UnsupportedBranch)
from .expr import as_tfunc
from .invariants import invariant_arrays
from .jetgeom import rank_report
from .numerics import integrate
from .reduction import canonical_form, check_CA, onedim_candidates, reduce_to_2d
from .vfalg import SchemeSpec, check_scheme, nilpotency_index, representation

EXIT_OK, EXIT_NEGATIVE, EXIT_INPUT, EXIT_NUMERIC = 0, 1, 2, 3


class InputError(Exception):
    pass


# -- serialisation ---------------------------------------------------------

def _fmt(obj):
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        text = format(x, ".17g")
        return text if any(ch in text for ch in ".en") else text + ".0"
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        return "{" + ", ".join(f"{json.dumps(str(k))}: {_fmt(v)}"
                               for k, v in obj.items()) + "}"
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, (list, tuple)):
        return "[" + ", ".join(_fmt(v) for v in obj) + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj):
    """JSON with every float written to 17 significant digits."""
    return _fmt(obj)


# -- inputs ----------------------------------------------------------------

def parse_grid(spec):
    try:
        t0, t1, n = spec.split(":")
        t0, t1, n = float(t0), float(t1), int(n)
    except ValueError as exc:
        raise InputError(f"bad --grid {spec!r}: expected t0:t1:n") from exc
    if n < 16:
        raise InputError("--grid needs n >= 16")
    if not t0 < t1:
        raise InputError("--grid needs t0 < t1")
    return np.linspace(t0, t1, n)


def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON ({exc})") from exc


def _load(path, loader):
    obj = _load_json(path)
    try:
        return loader(obj)
    except ParseError as exc:
        raise InputError(f"{path}: {exc}") from exc
    except (ValueError, KeyError, TypeError, DimensionMismatch, SchemeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_equation(path):
    return _load(path, AbelEquation.from_json)


def load_curve(path):
    return _load(path, GroupCurve.from_json)


def load_scheme(path):
    return _load(path, SchemeSpec.from_json)


def _floats(text, name, count=None):
    try:
        vals = [float(v) for v in text.split(",")]
    except ValueError as exc:
        raise InputError(f"bad {name} {text!r}") from exc
    if count is not None and len(vals) != count:
        raise InputError(f"{name} needs {count} comma-separated values")
    return vals


def _expr(text, name):
    try:
        return as_tfunc(text)
    except ParseError as exc:
        raise InputError(f"{name}: {exc}") from exc


# -- commands --------------------------------------------------------------

def cmd_transform(args, out):
    X = load_equation(args.equation)
    g = load_curve(args.curve)
    t = parse_grid(args.grid)
    Y = pushforward(X, g, grid=t)
    report = {"equation": Y.to_json(), "t": t,
              "coefficients": Y.coefficient_values(t)}
    if args.verify:
        report["flow_conjugacy_residual"] = flow_conjugacy_residual(
            X, g, args.x0, (t[0], t[-1]), max(len(t) - 1, 16))
    out.write(dumps(report) + "\n")
    return EXIT_OK


def cmd_invariant(args, out):
    X = load_equation(args.equation)
    t = parse_grid(args.grid)
    a = invariant_arrays(X, t)
    other = invariant_arrays(load_equation(args.compare), t) if args.compare else None
    worst = 0.0
    for i, ti in enumerate(t):
        F = a["F"][i]
        rec = {"t": ti, "phi3": a["phi3"][i], "dphi3": a["dphi3"][i],
               "phi5": a["phi5"][i], "F": None if np.isnan(F) else F}
        if other is not None:
            G = other["F"][i]
            rec["F_compare"] = None if np.isnan(G) else G
            dev = abs(F - G) / (1 + abs(F)) if not (np.isnan(F) or np.isnan(G)) else None
            if np.isnan(F) != np.isnan(G):
                dev = math.inf
            rec["deviation"] = dev
            if dev is not None:
                worst = max(worst, dev)
        out.write(dumps(rec) + "\n")
    if other is not None:
        ok = worst <= args.tol
        out.write(dumps({"max_deviation": worst if math.isfinite(worst) else None,
                         "agree": ok}) + "\n")
        return EXIT_OK if ok else EXIT_NEGATIVE
    return EXIT_OK


def cmd_reduce(args, out):
    X = load_equation(args.equation)
    t = parse_grid(args.grid)
    if args.c is not None:
        c = _floats(args.c, "--c", 4)
        rep = onedim_candidates(X, c, t, tol=args.branch_tol)
        report = rep.to_json()
        report["certificates"] = [cert.to_json() for cert in rep.certificates]
        out.write(dumps(report) + "\n")
        return EXIT_OK if rep.reducible else EXIT_NEGATIVE
    ca = check_CA(X, t, rtol=args.tol)
    report = {"CA_max_residual": ca.max_residual, "CA_relative_residual": ca.relative,
              "reducible_2d": False, "certificate": None}
    if not ca.passed:
        out.write(dumps(report) + "\n")
        return EXIT_NEGATIVE
    beta = _expr(args.beta, "--beta") if args.beta else None
    try:
        cert = reduce_to_2d(X, args.mu, beta, grid=t, tol=args.tol)
    except ReductionError as exc:
        report["error"] = str(exc)
        out.write(dumps(report) + "\n")
        return EXIT_NEGATIVE
    report["reducible_2d"] = True
    report["certificate"] = cert.to_json(samples=args.samples)
    out.write(dumps(report) + "\n")
    return EXIT_OK


def cmd_canonical(args, out):
    X = load_equation(args.equation)
    t = parse_grid(args.grid)
    if not args.beta:
        raise InputError("canonical needs --beta (a particular solution)")
    try:
        cf = canonical_form(X, _expr(args.beta, "--beta"), t, tol=args.tol)
    except ReductionError as exc:
        out.write(dumps({"error": str(exc), "residual": exc.residual}) + "\n")
        return EXIT_NEGATIVE
    out.write(dumps(cf.to_json()) + "\n")
    return EXIT_OK


def _matrix_json(M):
    return [[str(M[i, j]) for j in range(M.shape[1])] for i in range(M.shape[0])]


def cmd_scheme(args, out):
    s = load_scheme(args.scheme)
    rep = check_scheme(s)
    report = {"name": s.name, "dim_V": s.r, "dim_W": len(s.W_basis),
              "W_in_V": rep.w_in_v, "WW_closed": rep.ww_closed,
              "WV_closed": rep.wv_closed, "ok": rep.ok}
    if rep.witness:
        kind, i, j, br = rep.witness
        report["witness"] = {"kind": kind, "i": i, "j": j, "bracket": repr(br)}
    if rep.ok:
        mats = representation(s)
        report["ad_matrices"] = [_matrix_json(M) for M in mats]
        report["nilpotency_index"] = [nilpotency_index(M) for M in mats]
    out.write(dumps(report) + "\n")
    return EXIT_OK if rep.ok else EXIT_NEGATIVE


def cmd_rank(args, out):
    s = load_scheme(args.scheme)
    rep = rank_report(s, args.p, samples=args.samples, seed=args.seed)
    out.write(dumps(rep.to_json()) + "\n")
    return EXIT_OK


def cmd_solve(args, out):
    X = load_equation(args.equation)
    t = parse_grid(args.grid)
    sol = integrate(X, args.x0, (t[0], t[-1]), len(t) - 1)
    out.write(sol.as_csv())
    if sol.blowup:
        sys.stderr.write(f"blow-up near t={sol.blowup_time:.17g}\n")
        return EXIT_NUMERIC
    return EXIT_OK


# -- entry point -----------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--grid", default="0:1:257", help="t0:t1:n (n >= 16)")
    common.add_argument("--tol", type=float, default=1e-8)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--verify", action="store_true",
                        help="also run numerical verification where available")

    p = argparse.ArgumentParser(prog="quasilie", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("transform", parents=[common],
                        help="push an equation forward along a curve")
    sp.add_argument("equation")
    sp.add_argument("curve")
    sp.add_argument("--x0", type=float, default=0.1,
                    help="initial value for --verify")
    sp.set_defaults(func=cmd_transform)

    sp = sub.add_parser("invariant", parents=[common],
                        help="Liouville invariant on the grid (JSON lines)")
    sp.add_argument("equation")
    sp.add_argument("--compare", help="second equation to compare against")
    sp.set_defaults(func=cmd_invariant, tol=1e-7)

    sp = sub.add_parser("reduce", parents=[common],
                        help="integrability test and reduction certificate")
    sp.add_argument("equation")
    sp.add_argument("--mu", type=float, default=0.0)
    sp.add_argument("--beta", help="explicit beta(t) for mu != 0")
    sp.add_argument("--c", help="c0,c1,c2,c3 for a one-dimensional target")
    sp.add_argument("--branch-tol", type=float, default=1e-4)
    sp.add_argument("--samples", action="store_true",
                    help="include grid samples of the curve")
    sp.set_defaults(func=cmd_reduce)

    sp = sub.add_parser("canonical", parents=[common],
                        help="canonical form from a particular solution")
    sp.add_argument("equation")
    sp.add_argument("--beta", required=True)
    sp.set_defaults(func=cmd_canonical, tol=1e-7)

    sp = sub.add_parser("scheme", parents=[common], help="check scheme axioms")
    sp.add_argument("scheme")
    sp.set_defaults(func=cmd_scheme)

    sp = sub.add_parser("rank", parents=[common], help="jet-space distribution rank")
    sp.add_argument("scheme")
    sp.add_argument("--p", type=int, default=2, choices=(0, 1, 2))
    sp.add_argument("--samples", type=int, default=50)
    sp.set_defaults(func=cmd_rank)

    sp = sub.add_parser("solve", parents=[common], help="RK4 solution as CSV")
    sp.add_argument("equation")
    sp.add_argument("--x0", type=float, required=True)
    sp.set_defaults(func=cmd_solve)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    out = open(args.out, "w") if args.out else sys.stdout
    try:
        return args.func(args, out)
    except InputError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (ParseError, UnsupportedBranch) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except (Diverged, DomainError, InconsistencyError, ReductionError) as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NUMERIC
    finally:
        if args.out:
            out.close()


if __name__ == "__main__":
    sys.exit(main())
