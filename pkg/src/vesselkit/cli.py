"""Command-line front end.

Exit codes: 0 all checks pass, 2 a check failed, 3 I/O or parse error,
4 internal error.  Reports are JSON; timings are ``null`` in deterministic
mode so identical inputs give byte-identical reports.
"""

import argparse
import sys
import time
import warnings

import numpy as np

from . import __version__
from .dilation import (DilationOperatorConfig, bump_vector, commutativity_residual,
                       dilation_check, group_law_residual, isometry_residual,
                       minimality_diagnostics, smooth_state_vector)
from .exceptions import (NotInCone, NotVR, SingularSigma, SingularTransform,
                         VesselError)
from .fixtures import KIND_ALIASES, fixture_by_kind
from .io import ParseError, ProblemFile, SCHEMA_VERSION, decode_array, load_problem, write_json
from .series import (AnalyticInitialData, check_discrete_compat, evaluate_series,
                     solve_discrete)
from .system import energy_balance_residual, propagate_state, trajectory_residual
from .transport import GridSpec, SampledSignal
from .vessel import (DEFAULT_TOL, ConditionReport, ConditionResidual, Vessel,
                     check_vessel, check_vr, check_vr_star, make_strict_vessel,
                     normalize, pos_cone_margin, weakly_strict_report)

EXIT_OK, EXIT_FAIL, EXIT_IO, EXIT_INTERNAL = 0, 2, 3, 4
ROUNDOFF_FLOOR = 1e-10
MIN_ORDER = 1.8


class CheckFailed(Exception):
    """A precondition check failed before any experiment ran."""

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


# ---------------------------------------------------------------- parsing

def parse_floats(text, what="value"):
    try:
        return [float(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise ParseError(f"--{what}", f"cannot parse {text!r} as numbers") from None


def parse_complex_vector(text, dim, what="h"):
    """``e3`` for a unit vector or comma-separated Python complex literals."""
    text = text.strip()
    if text.startswith("e") and text[1:].isdigit():
        k = int(text[1:])
        if not 1 <= k <= dim:
            raise ParseError(f"--{what}", f"unit vector index must be in 1..{dim}")
        return np.eye(dim, dtype=complex)[k - 1]
    try:
        vals = [complex(x) for x in text.replace(" ", "").split(",") if x]
    except ValueError:
        raise ParseError(f"--{what}", f"cannot parse {text!r}") from None
    if len(vals) != dim:
        raise ParseError(f"--{what}", f"expected {dim} entries, got {len(vals)}")
    return np.array(vals)


def parse_times(text, d):
    """``t1;t2;...`` with comma-separated components; for ``d = 1`` a plain
    comma list is also accepted."""
    if d == 1 and ";" not in text:
        return [np.array([t]) for t in parse_floats(text, "times")]
    out = []
    for chunk in text.split(";"):
        if chunk.strip():
            t = parse_floats(chunk, "times")
            if len(t) != d:
                raise ParseError("--times", f"each time needs {d} components")
            out.append(np.array(t))
    return out


def parse_grid(text, fallback):
    if text is None:
        return GridSpec(*fallback)
    vals = parse_floats(text, "grid")
    if len(vals) != 2 or vals[0] != int(vals[0]):
        raise ParseError("--grid", "expected N,L")
    try:
        return GridSpec(int(vals[0]), vals[1])
    except ValueError as exc:
        raise ParseError("--grid", str(exc)) from None


def _vessel_of(problem):
    if problem.vessel is not None:
        return problem.vessel
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return make_strict_vessel(problem.A)


# ---------------------------------------------------------------- reports

class Reporter:
    def __init__(self, args, command):
        self.args = args
        self.doc = {"schema": "vesselkit/report", "version": SCHEMA_VERSION,
                    "tool": f"vesselkit {__version__}", "command": command,
                    "seed": args.seed, "tol_scale": args.tol_scale,
                    "deterministic": args.deterministic == "on",
                    "input_digest": None, "checks": [], "experiments": {},
                    "timings": None if args.deterministic == "on" else {}}
        self._t0 = {}

    def digest(self, d):
        self.doc["input_digest"] = d

    def check(self, report):
        self.doc["checks"].append(report.to_dict())
        return report.passed

    def table(self, name, rows):
        self.doc["experiments"][name] = rows

    def start(self, label):
        self._t0[label] = time.perf_counter()

    def stop(self, label):
        if self.doc["timings"] is not None:
            self.doc["timings"][label] = time.perf_counter() - self._t0[label]

    @property
    def passed(self):
        ok = all(c["pass"] for c in self.doc["checks"])
        for rows in self.doc["experiments"].values():
            for row in rows if isinstance(rows, list) else [rows]:
                if isinstance(row, dict) and "pass" in row and row["pass"] is not None:
                    ok = ok and bool(row["pass"])
        return ok

    def emit(self, default_stdout=True):
        self.doc["pass"] = self.passed
        if self.args.json_out:
            write_json(self.args.json_out, self.doc)
        elif default_stdout:
            sys.stdout.write(write_json(None, self.doc))
        return EXIT_OK if self.doc["pass"] else EXIT_FAIL


def measured(value, tol):
    return {"value": float(value), "tolerance": float(tol),
            "pass": bool(value <= tol)}


# ---------------------------------------------------------------- commands

def cmd_embed(args):
    rep = Reporter(args, "embed")
    problem, digest = load_problem(args.input)
    rep.digest(digest)
    tol = DEFAULT_TOL * args.tol_scale
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        try:
            v = make_strict_vessel(problem.A, rank_tol=args.rank_tol or tol,
                                   tol_commute=tol)
        except VesselError as exc:
            raise CheckFailed(f"{type(exc).__name__}: {exc}") from None
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)
    report = check_vessel(v, tol)
    rep.check(report)
    write_json(args.output, ProblemFile(problem.A, v, problem.grid, problem.tol).to_json())
    code = rep.emit(default_stdout=False)
    if code:
        print(report.summary(), file=sys.stderr)
    return code


def _named_failure(title, exc):
    return ConditionReport(title, (ConditionResidual(type(exc).__name__, float("inf"), 0.0),),
                           (str(exc),))


def cmd_check(args):
    rep = Reporter(args, "check")
    problem, digest = load_problem(args.vessel_path)
    rep.digest(digest)
    v = _vessel_of(problem)
    tol = problem.tol.get("vessel", DEFAULT_TOL) * args.tol_scale
    chosen = [f for f in ("vessel", "vr", "vrstar", "cone", "weakly_strict")
              if getattr(args, f)]
    chosen = chosen or ["vessel", "vr", "vrstar", "cone", "weakly_strict"]
    direction = (np.array(parse_floats(args.direction, "direction"))
                 if args.direction else None)
    if direction is not None and direction.shape != (v.d,):
        raise ParseError("--direction", f"expected {v.d} components")
    vr_dir = 0 if direction is None else direction
    for name in chosen:
        try:
            if name == "vessel":
                r = check_vessel(v, tol)
            elif name == "vr":
                r = check_vr(v, vr_dir, tol)
            elif name == "vrstar":
                r = check_vr_star(v, tol, vr_dir)
            elif name == "cone":
                xi = np.eye(v.d)[0] if direction is None else direction
                margin = pos_cone_margin(v, xi) if v.dim_e else 0.0
                r = ConditionReport("cone", (ConditionResidual(
                    "lambda_min sigma(xi) > 0", -float(margin), 0.0, strict=True),))
            else:
                ok, W = weakly_strict_report(v, tol)
                r = ConditionReport("weakly strict", (ConditionResidual(
                    "dim W", float(W.shape[1]), 0.0),))
        except (SingularSigma, SingularTransform) as exc:
            r = _named_failure(name, exc)
        rep.check(r)
        if not r.passed:
            print(r.summary(), file=sys.stderr)
    return rep.emit()


def cmd_fixture(args):
    dims = {"n": args.n, "d": args.d, "size": args.size, "coupling": args.coupling}
    obj = fixture_by_kind(args.kind, args.seed, **dims)
    prob = (ProblemFile.of_vessel(obj) if isinstance(obj, Vessel)
            else ProblemFile(np.array(obj.A)))
    text = write_json(args.output, prob.to_json())
    if args.output in (None, "-"):
        sys.stdout.write(text)
    return EXIT_OK


def _smooth_test_vector(cfg, rng):
    v = cfg.vessel
    h = rng.normal(size=v.dim_h) + 1j * rng.normal(size=v.dim_h)
    h /= np.linalg.norm(h)
    vec = smooth_state_vector(cfg, h)
    L = cfg.grid.L
    if v.dim_e and L >= 12:
        e = [rng.normal(size=v.dim_e) + 1j * rng.normal(size=v.dim_e) for _ in range(2)]
        vec = vec + bump_vector(cfg, [(L / 5, e[0]), (-L / 5, e[1])])
    return vec


def cmd_dilate(args):
    rep = Reporter(args, "dilate")
    problem, digest = load_problem(args.vessel_path)
    rep.digest(digest)
    v = _vessel_of(problem)
    grid = parse_grid(args.grid, problem.grid or (2048, 40.0))
    times = parse_times(args.times, v.d)
    tol = DEFAULT_TOL * args.tol_scale
    if not rep.check(check_vr(v, 0, tol)):
        raise CheckFailed("vessel fails VR; no experiment run", rep)
    try:
        cfg = DilationOperatorConfig.build(v, grid, tol=tol, require_vr=False)
    except NotInCone as exc:
        raise CheckFailed(f"NotInCone: {exc}", rep) from None
    comp_tol = (1e-6 if v.d == 1 else 5e-3) * args.tol_scale
    suite_tol = 1e-4 * args.tol_scale
    rows, prev = [], None
    rep.start("compression")
    for level in range(args.refine + 1):
        c = cfg.with_grid(grid.refine(2 ** level)) if level else cfg
        r = dilation_check(c, times, refine=False)
        err = r["max_error"]
        row = {"N": c.grid.N, "L": c.grid.L, "errors": r["errors"],
               **measured(err, comp_tol)}
        if prev is not None:
            floor = max(err, prev) <= ROUNDOFF_FLOOR
            order = None if floor or err == 0 else float(np.log2(prev / err))
            row.update(order=order, at_roundoff=floor, min_order=MIN_ORDER,
                       order_pass=bool(floor or (order is not None and order >= MIN_ORDER)))
            row["pass"] = row["pass"] and row["order_pass"]
        rows.append(row)
        prev = err
    rep.stop("compression")
    rep.table("compression", rows)

    rep.start("suite")
    rng = np.random.default_rng(args.seed)
    vec = _smooth_test_vector(cfg, rng)
    suite = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t in times:
            for s in (t, -t):
                in_cone = pos_cone_margin(cfg.vessel, cfg.local(s)) > 0 or \
                    pos_cone_margin(cfg.vessel, -cfg.local(s)) > 0
                if not np.any(s):
                    continue
                val = isometry_residual(cfg, s, vec)
                row = {"kind": "isometry", "t": s.tolist(), **measured(val, suite_tol)}
                if not in_cone:
                    row["pass"] = None
                    row["note"] = "outside Pos and -Pos; not claimed"
                suite.append(row)
        for a, b in zip(times, times[1:]):
            suite.append({"kind": "group law", "t": a.tolist(), "s": b.tolist(),
                          **measured(group_law_residual(cfg, a, b, vec), suite_tol)})
            suite.append({"kind": "commutativity", "t": a.tolist(), "s": b.tolist(),
                          **measured(commutativity_residual(cfg, a, b, vec), suite_tol)})
    rep.stop("suite")
    rep.table("suite", suite)
    rep.table("minimality", [{"verdict": minimality_diagnostics(cfg).verdict}])
    return rep.emit()


def _input_signal(kind, grid, m, rng):
    if kind == "zero":
        return SampledSignal(grid, np.zeros((grid.N, m), dtype=complex))
    if kind == "gaussian":
        w = rng.normal(size=m) + 1j * rng.normal(size=m)
        w /= np.linalg.norm(w) or 1.0
        return SampledSignal(grid, np.exp(-grid.nodes ** 2)[:, None] * w[None, :])
    if kind.startswith("file:"):
        import json
        from .io import read_text
        path = kind[5:]
        try:
            obj = json.loads(read_text(path))
        except ValueError as exc:
            raise ParseError(f"{path}: $", f"invalid JSON ({exc})") from None
        return SampledSignal(grid, decode_array(obj, f"{path}: $", (grid.N, m)))
    raise ParseError("--input", "expected gaussian, zero or file:PATH")


def cmd_simulate(args):
    rep = Reporter(args, "simulate")
    problem, digest = load_problem(args.vessel_path)
    rep.digest(digest)
    v = _vessel_of(problem)
    grid = parse_grid(args.grid, problem.grid or (1024, 0.5))
    parts = args.line.split(";")
    xi = np.array(parse_floats(parts[0], "line"))
    eta = np.array(parse_floats(parts[1], "line")) if len(parts) > 1 else np.zeros(v.d)
    if xi.shape != (v.d,) or eta.shape != (v.d,):
        raise ParseError("--line", f"direction and offset need {v.d} components")
    in_cone = v.dim_e == 0 or pos_cone_margin(v, xi) > 0
    if not in_cone and not args.force:
        raise CheckFailed("direction outside Pos; use --force to simulate anyway")
    rng = np.random.default_rng(args.seed)
    h = parse_complex_vector(args.h, v.dim_h) if args.h else np.zeros(v.dim_h, complex)
    u = _input_signal(args.input, grid, v.dim_e, rng)
    rep.start("simulate")
    traj = propagate_state(v, h, u, xi, eta, method=args.method)
    rep.stop("simulate")
    out = traj.to_json()
    if in_cone:
        out["energy_balance"] = measured(energy_balance_residual(traj, v),
                                         1e-6 * args.tol_scale)
    else:
        out["energy_balance"] = {"value": "n/a", "tolerance": "n/a", "pass": None,
                                 "note": "direction outside Pos"}
    out["equation_residual"] = trajectory_residual(traj, v)
    rep.table("trajectory", out)
    return rep.emit()


def cmd_solve(args):
    rep = Reporter(args, "solve")
    problem, digest = load_problem(args.vessel_path)
    rep.digest(digest)
    v = _vessel_of(problem)
    _, pencil = normalize(v)
    m = v.dim_e
    xi = parse_complex_vector(args.xi, m, "xi") if args.xi else np.ones(m, complex)
    init = AnalyticInitialData.geometric(xi, args.R, args.degree + 1)
    sol = solve_discrete(pencil, init, args.degree)
    res = check_discrete_compat(sol, pencil)
    if args.series:
        write_json(args.series, {"degree": args.degree, "coefficients": sol.to_json()})
    rep.table("series", {"degree": args.degree, "R": args.R,
                         "coefficients": sol.to_json(),
                         "compatibility": measured(res, 1e-12 * args.tol_scale)})
    if args.at:
        t = np.array(parse_floats(args.at, "at"))
        try:
            val, tail = evaluate_series(sol, t, pencil, init)
        except VesselError as exc:
            raise CheckFailed(f"{type(exc).__name__}: {exc}") from None
        rep.table("value", {"t": t.tolist(), "u": val, "tail_bound": tail})
    return rep.emit()


# ---------------------------------------------------------------- main

def _global_flags(p, suppress):
    default = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--tol-scale", type=float, default=default(1.0),
                   help="multiply every tolerance by this factor")
    p.add_argument("--seed", type=int, default=default(0), help="seed for all randomness")
    p.add_argument("--deterministic", choices=("on", "off"), default=default("on"),
                   help="'on' omits timings so reports are reproducible")
    p.add_argument("--json-out", metavar="PATH", default=default(None),
                   help="write the report here")


def build_parser():
    p = argparse.ArgumentParser(prog="vesselkit", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"vesselkit {__version__}")
    _global_flags(p, suppress=False)
    # the same flags are accepted after the command name
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("embed", parents=[common], help="strict vessel of a commuting dissipative tuple")
    s.add_argument("input")
    s.add_argument("output")
    s.add_argument("--rank-tol", type=float, default=None)
    s.set_defaults(func=cmd_embed)

    s = sub.add_parser("check", parents=[common], help="vessel, VR, VR*, cone and weak strictness checks")
    s.add_argument("vessel_path", metavar="vessel")
    for flag in ("vessel", "vr", "vrstar", "cone", "weakly-strict"):
        s.add_argument(f"--{flag}", action="store_true")
    s.add_argument("--direction", help="comma-separated direction xi")
    s.set_defaults(func=cmd_check)

    s = sub.add_parser("fixture", parents=[common], help="write a seeded fixture problem file")
    s.add_argument("kind", choices=sorted(KIND_ALIASES))
    s.add_argument("--n", type=int, default=3)
    s.add_argument("--d", type=int, default=2)
    s.add_argument("--size", type=int, default=2)
    s.add_argument("--coupling", action="store_true")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_fixture)

    s = sub.add_parser("dilate", parents=[common], help="discretized dilation experiments")
    s.add_argument("vessel_path", metavar="vessel")
    s.add_argument("--times", required=True, help="'t1,t2;...' (plain list for d = 1)")
    s.add_argument("--grid", help="N,L")
    s.add_argument("--refine", type=int, default=1)
    s.add_argument("--report", dest="json_out_cmd", help="alias of --json-out")
    s.set_defaults(func=cmd_dilate)

    s = sub.add_parser("simulate", parents=[common], help="trajectory of the system along a line")
    s.add_argument("vessel_path", metavar="vessel")
    s.add_argument("--line", required=True, help="'xi' or 'xi;eta', comma-separated")
    s.add_argument("--input", default="gaussian", help="gaussian | zero | file:PATH")
    s.add_argument("--h", help="initial state: e<k> or complex entries")
    s.add_argument("--grid", help="N,L")
    s.add_argument("--method", choices=("trapezoid", "exp4"), default="trapezoid")
    s.add_argument("--force", action="store_true", help="allow directions outside Pos")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("solve", parents=[common], help="power-series solution from geometric axis data")
    s.add_argument("vessel_path", metavar="vessel")
    s.add_argument("--degree", type=int, default=6)
    s.add_argument("--R", type=float, default=1.0)
    s.add_argument("--xi", help="axis vector, complex entries")
    s.add_argument("--at", help="evaluate the series at this point")
    s.add_argument("--series", metavar="PATH", help="also write the coefficient table here")
    s.set_defaults(func=cmd_solve)
    return p


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_IO if exc.code else EXIT_OK
    if getattr(args, "json_out_cmd", None):
        args.json_out = args.json_out_cmd
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        if exc.report is not None:
            exc.report.emit(default_stdout=False)
        return EXIT_FAIL
    except NotVR as exc:
        print(f"check failed: NotVR: {exc}", file=sys.stderr)
        return EXIT_FAIL
    except Exception as exc:  # noqa: BLE001  any other failure is internal
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
