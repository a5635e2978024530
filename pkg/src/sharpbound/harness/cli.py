"""Command-line front end.

Exit codes: 0 success, 1 parse or validation error, 2 empty ambiguity set,
3 solver failure (including a failed ``--verify`` cross-check).
"""

from __future__ import annotations

import argparse
import logging
import sys
import time

from ..compact import solve_boolean_higher_order, solve_dual_dro, solve_moment, solve_pod_bivariate
from ..core import (BooleanHigherOrder, GenericSubmodular, InfeasibleSpecError, LatticeTooLargeError, Moment,
                    PodBivariate, SolverError, SpecError, require_valid)
from ..genbound import dro_solve, sharp_bound_generic, to_generic
from ..oracle import check_membership, expectation, exponential_lp_bound
from . import problem_io
from .generators import gen_moment_instance, make_pod_instance
from .sweeps import MonotonicityError, run_moment_sweep, run_pod_sweep, write_csv

VERIFY_TOL = 1e-6
EXIT_PARSE, EXIT_INFEASIBLE, EXIT_SOLVER = 1, 2, 3

log = logging.getLogger("sharpbound")


def _compact(spec, obj):
    if isinstance(spec, PodBivariate):
        return solve_pod_bivariate(spec, obj)[0]
    if isinstance(spec, BooleanHigherOrder):
        return solve_boolean_higher_order(spec, obj)[0]
    if isinstance(spec, Moment):
        return solve_moment(spec, obj)[0]
    raise SpecError("no compact formulation for %s" % type(spec).__name__)


def solve_problem(problem: problem_io.Problem, method: str = "auto"):
    """Dispatch to a solver; returns ``(result, method actually used)``."""
    spec, obj = problem.spec, problem.objective
    require_valid(spec)
    if method == "auto":
        method = "generic" if isinstance(spec, GenericSubmodular) else "compact"
    if method == "compact":
        return _compact(spec, obj), method
    if method == "generic":
        return sharp_bound_generic(to_generic(spec), obj), method
    if method == "oracle":
        return exponential_lp_bound(spec, obj), method
    raise SpecError("unknown method %r" % method)


def _compute(args) -> dict:
    problem = problem_io.load_problem(args.problem)
    t0 = time.perf_counter()
    doc: dict = {}
    if problem.decision is not None:
        if isinstance(problem.spec, PodBivariate) and args.method in ("auto", "compact"):
            res, used = solve_dual_dro(problem.spec, problem.X, problem.decision), "compact"
        else:
            res, used = dro_solve(to_generic(problem.spec), problem.X, problem.decision), "generic"
        doc.update(method=used, value=res.value, x=res.x.tolist())
        doc["runtime_ms"] = 1000.0 * (time.perf_counter() - t0)
        return doc
    res, used = solve_problem(problem, args.method)
    doc.update(method=used, value=res.value, runtime_ms=1000.0 * (time.perf_counter() - t0))
    if args.extract:
        joint = res.extremal
        if joint is None:
            joint = exponential_lp_bound(problem.spec, problem.objective).extremal
        doc["extremal"] = problem_io.joint_to_list(joint)
        doc["extremal_value"] = expectation(joint, problem.objective)
        doc["extremal_member"] = check_membership(joint, problem.spec).ok
    if args.verify:
        oracle = res.value if used == "oracle" else exponential_lp_bound(problem.spec, problem.objective).value
        diff = abs(oracle - res.value)
        doc["verify"] = {"oracle_value": oracle, "difference": diff, "ok": diff <= VERIFY_TOL}
    return doc


def _gen(args) -> dict:
    if args.kind == "pod":
        inst = make_pod_instance(args.seed, args.n, args.a)
        prob = problem_io.Problem(inst.spec(args.m if args.m else args.n), inst.objective)
        doc = problem_io.problem_to_dict(prob)
        doc["seed"] = inst.seed
        return doc
    inst = gen_moment_instance(args.seed, args.n, args.k)
    prob = problem_io.Problem(inst.spec(args.l if args.l else 1, "power"), inst.objective)
    doc = problem_io.problem_to_dict(prob)
    doc["seed"] = inst.seed
    return doc


def _seeds(args):
    return range(args.seed, args.seed + args.count)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sharpbound", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    c = sub.add_parser("compute", help="solve a problem document")
    c.add_argument("problem")
    c.add_argument("--method", choices=("auto", "compact", "generic", "oracle"), default="auto")
    c.add_argument("--verify", action="store_true", help="cross-check against the full-lattice LP")
    c.add_argument("--extract", action="store_true", help="include an extremal distribution")
    c.add_argument("--out")

    v = sub.add_parser("verify", help="compare the chosen solver with the full-lattice LP")
    v.add_argument("problem")
    v.add_argument("--method", choices=("auto", "compact", "generic"), default="auto")
    v.add_argument("--out")

    g = sub.add_parser("gen", help="write a seeded random problem document")
    g.add_argument("kind", choices=("pod", "moment"))
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--n", type=int, default=6)
    g.add_argument("--m", type=int, help="order of dependence information (pod)")
    g.add_argument("--l", type=int, help="number of moments (moment)")
    g.add_argument("--a", type=float, default=0.5, help="marginal range [0, a] (pod)")
    g.add_argument("--k", type=int, default=3, help="number of pieces (moment)")
    g.add_argument("--out")

    sp = sub.add_parser("sweep-pod", help="bounds for M = 1..N on seeded instances")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--count", type=int, default=100)
    sp.add_argument("--n", type=int, default=6)
    sp.add_argument("--a", type=float, nargs="+", default=[0.5])
    sp.add_argument("--out")

    sm = sub.add_parser("sweep-moment", help="bounds for L = 1..Lmax on seeded instances")
    sm.add_argument("--seed", type=int, default=0)
    sm.add_argument("--count", type=int, default=100)
    sm.add_argument("--n", type=int, default=5)
    sm.add_argument("--l", type=int, default=10, help="largest number of moments")
    sm.add_argument("--k", type=int, default=3)
    sm.add_argument("--out")
    return ap


def _emit_doc(doc: dict, out) -> None:
    text = problem_io.dump_json(doc, out)
    if out is None:
        print(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command in ("compute", "verify"):
            if args.command == "verify":
                args.verify, args.extract = True, False
            doc = _compute(args)
            _emit_doc(doc, args.out)
            if "verify" in doc and not doc["verify"]["ok"]:
                log.error("oracle mismatch: %g", doc["verify"]["difference"])
                return EXIT_SOLVER
        elif args.command == "gen":
            _emit_doc(_gen(args), args.out)
        elif args.command == "sweep-pod":
            rows = run_pod_sweep(_seeds(args), args.n, args.a)
            write_csv(rows, args.out if args.out else sys.stdout)
        elif args.command == "sweep-moment":
            rows = run_moment_sweep(_seeds(args), args.n, args.l, args.k)
            write_csv(rows, args.out if args.out else sys.stdout)
    except problem_io.ParseError as exc:
        log.error("parse error: %s", exc)
        return EXIT_PARSE
    except InfeasibleSpecError as exc:
        log.error("infeasible: %s", exc)
        return EXIT_INFEASIBLE
    except (SpecError, LatticeTooLargeError) as exc:
        log.error("invalid problem: %s", exc)
        return EXIT_PARSE
    except (SolverError, MonotonicityError) as exc:
        log.error("solver failure: %s", exc)
        return EXIT_SOLVER
    return 0


if __name__ == "__main__":
    sys.exit(main())
