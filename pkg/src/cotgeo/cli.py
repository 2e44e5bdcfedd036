"""geocli: check, evaluate and dualize geometric structures of a model file.

Exit status: 0 all checks pass, 1 a check failed, 2 the model or an
evaluation is invalid.
"""
from __future__ import annotations

import argparse
import re
import sys
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from . import dynamics as dyn
from . import structures as st
from .checks import Tolerances, overall_pass, prepare, run_checks, run_legendre
from .expr import ExprError
from .hamilton import LegendreError
from .model import ModelError, ModelFile, load_model
from .report import build_report, dumps, write_table
from .sampling import sample_points

EXIT_OK, EXIT_FAIL, EXIT_ERROR = 0, 1, 2

OBJECTS = ("connection", "curvature", "jacobi", "tension", "torsion", "strong_torsion", "almost_complex", "metric")


class UsageError(ValueError):
    pass


def _tolerances(args) -> Tolerances:
    return Tolerances(args.tol_algebraic, args.tol_identity, args.tol_symbolic, args.tol_numeric)


def _points(model: ModelFile, args) -> tuple[np.ndarray, int, int]:
    plan = model.sampling.replace(seed=args.seed, count=args.samples)
    return sample_points(plan), plan.seed, plan.count


def _emit(report: dict, path: str | None) -> None:
    text = dumps(report) + "\n"
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_check(args) -> int:
    model = load_model(args.model)
    pts, seed, count = _points(model, args)
    tol = _tolerances(args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        _, records = run_checks(model, pts, tol)
    report = build_report("check", model.name, seed, count, tol, records, timestamp=not args.no_timestamp)
    write_table(records, sys.stderr)
    _emit(report, args.report)
    return EXIT_OK if overall_pass(records) else EXIT_FAIL


def cmd_legendre(args) -> int:
    model = load_model(args.model)
    if model.hamiltonian is None:
        raise UsageError("the Legendre pipeline needs a hamiltonian")
    pts, seed, count = _points(model, args)
    tol = _tolerances(args)
    out = run_legendre(model, pts, tol, args.epsilon)
    extra = {"max_newton_iterations": out.max_iterations}
    if out.table:
        extra["perturbation"] = out.table
    report = build_report("legendre", model.name, seed, count, tol, out.records, extra,
                          timestamp=not args.no_timestamp)
    write_table(out.records, sys.stderr)
    for row in out.table:
        sys.stderr.write("eps={epsilon:.0e}  condition_b={condition_b:.6e}  expected={expected_condition_b:.6e}  "
                         "metric={metric:.6e}  symplectic={symplectic:.3e}\n".format(**row))
    _emit(report, args.report)
    return EXIT_OK if overall_pass(out.records) else EXIT_FAIL


def parse_point(text: str, n: int) -> np.ndarray:
    """'x=1,1;p=0,0.5' -> array (x1..xn, p1..pn)."""
    parts = {}
    for chunk in filter(None, (c.strip() for c in text.split(";"))):
        key, sep, vals = chunk.partition("=")
        key = key.strip()
        if not sep or key not in ("x", "p"):
            raise UsageError(f"bad point component {chunk!r}; expected x=... and p=...")
        try:
            parts[key] = [float(v) for v in re.split(r"[,\s]+", vals.strip()) if v]
        except ValueError as exc:
            raise UsageError(f"bad number in {chunk!r}") from exc
    for key in ("x", "p"):
        if len(parts.get(key, ())) != n:
            raise UsageError(f"point is off-chart: {key} needs {n} values")
    arr = np.array(parts["x"] + parts["p"], dtype=float)
    if not np.all(np.isfinite(arr)):
        raise UsageError("point is off-chart: non-finite coordinate")
    return arr


def evaluate_object(model: ModelFile, name: str, point: np.ndarray):
    if name not in OBJECTS:
        raise UsageError(f"unknown object {name!r}; valid names: {', '.join(OBJECTS)}")
    pts = point[None, :]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        s = prepare(model, pts)
        N, J, rho, n = s.N, s.J, s.rho, model.n
        if name == "connection":
            return N.evaluate(pts)[0]
        if name == "curvature":
            R = st.curvature_components(N)
            return np.array([[[R[i][j][k](point) for k in range(n)] for j in range(n)] for i in range(n)])
        if name == "jacobi":
            return dyn.JacobiEndomorphism(rho, N).evaluate(pts)[0]
        if name == "tension":
            return st.evaluate_matrix(st.tension(N), pts)[0]
        if name == "torsion":
            T = st.torsion(J, N)
            return np.array([[[T[i][j][k](point) for k in range(n)] for j in range(n)] for i in range(n)])
        if name == "strong_torsion":
            return st.evaluate_matrix(st.strong_torsion(rho, J, N), pts)[0]
        if name == "almost_complex":
            return dyn.almost_complex(s.field, N).evaluate(pts)[0]
        if s.hamilton is None:
            raise UsageError("metric needs a hamiltonian")
        return st.evaluate_matrix(s.hamilton.g_upper, pts)[0]


def cmd_eval(args) -> int:
    model = load_model(args.model)
    point = parse_point(args.at, model.n)
    value = evaluate_object(model, args.object, point)
    sys.stdout.write(dumps({"model": model.name, "object": args.object, "point": point.tolist(),
                            "shape": list(np.shape(value)), "value": np.asarray(value).tolist()}) + "\n")
    return EXIT_OK


def cmd_validate(args) -> int:
    model = load_model(args.model)
    pts, _, _ = _points(model, args)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        prepare(model, pts)
    parts = [k for k in ("hamiltonian", "lagrangian", "connection", "tangent_structure", "vector_field")
             if getattr(model, k) is not None]
    sys.stdout.write(f"{model.name}: valid (dimension {model.n}; {', '.join(parts)})\n")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="geocli", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"geocli {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def sampling_opts(p):
        p.add_argument("--seed", type=int, default=None, help="override the model's sampling seed")
        p.add_argument("--samples", type=int, default=None, help="override the number of sample points")

    def report_opts(p):
        p.add_argument("--report", default=None, help="write the JSON report here instead of stdout")
        p.add_argument("--no-timestamp", action="store_true", help="omit the timestamp field")
        p.add_argument("--tol-algebraic", type=float, default=1e-12)
        p.add_argument("--tol-identity", type=float, default=1e-10)
        p.add_argument("--tol-symbolic", type=float, default=1e-9)
        p.add_argument("--tol-numeric", type=float, default=1e-6)

    p = sub.add_parser("check", help="run the identity suite at sample points")
    p.add_argument("model")
    sampling_opts(p)
    report_opts(p)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("eval", help="evaluate one object at a point")
    p.add_argument("model")
    p.add_argument("--object", required=True, help=", ".join(OBJECTS))
    p.add_argument("--at", required=True, help='point as "x=1,1;p=0,0.5"')
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("legendre", help="Legendre round trip and spray duality")
    p.add_argument("model")
    p.add_argument("--epsilon", type=float, default=None, help="also run the perturbed-spray series")
    sampling_opts(p)
    report_opts(p)
    p.set_defaults(func=cmd_legendre)

    p = sub.add_parser("validate", help="parse and validate a model file")
    p.add_argument("model")
    sampling_opts(p)
    p.set_defaults(func=cmd_validate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ModelError, UsageError, ExprError, LegendreError, st.RegularityError, ValueError, ArithmeticError) as exc:
        sys.stderr.write(f"geocli: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
