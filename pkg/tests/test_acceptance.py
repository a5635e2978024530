"""Acceptance criteria 1 to 9.

Each test prints one ``CRITERION n: PASS|FAIL`` line; the lines are repeated
in the pytest terminal summary.  ``python3 tests/test_acceptance.py`` runs
the same checks without pytest.
"""

from __future__ import annotations

import functools
import itertools
import statistics
import time
from fractions import Fraction

import numpy as np

from sharpbound import (AffineDecisionObjective, BooleanHigherOrder, DiscreteMarginal, LatticeFunction,
                        PodBivariate, Polyhedron, check_membership, choquet_expectation,
                        dro_solve, expand_rank_objective, expectation, exponential_lp_bound, frechet_spec,
                        hunter_worsley, sharp_bound_generic, solve_boolean_higher_order, solve_dual_dro,
                        solve_moment, solve_pod_bivariate, support_of, to_generic, verify_submodular,
                        verify_supermodular)
from sharpbound.harness import (gen_moment_instance, make_pod_instance, moment_instance_sweep, pod_instance_sweep,
                                run_moment_sweep, run_pod_sweep)
from sharpbound.lpsolve import EQ, GE, LE, LPModel, solve_lp

from instances import (random_boolean, random_generic, random_marginals, random_moment, random_objective,
                       random_pod, random_submodular_table)

TOL = 1e-6
MEMBER_TOL = 1e-8


# 1 and 4: compact LPs against the full-lattice LP, then extraction ------------


@functools.lru_cache(maxsize=None)
def _family_runs(count=200):
    rng = np.random.default_rng(20240101)
    runs = []
    for family in ("pod", "boolean", "moment"):
        for _ in range(count):
            n = int(rng.integers(1, 5))
            obj = random_objective(rng, n, max_k=4)
            if family == "pod":
                spec = random_pod(rng, n)
                res, _ = solve_pod_bivariate(spec, obj)
            elif family == "boolean":
                spec = random_boolean(rng, n, int(rng.integers(1, 4)))
                res, _ = solve_boolean_higher_order(spec, obj)
            else:
                spec = random_moment(rng, n, int(rng.integers(1, 4)))
                res, _ = solve_moment(spec, obj)
            runs.append((family, spec, obj, res))
    return runs


def criterion_1():
    t0 = time.perf_counter()
    worst = {"pod": 0.0, "boolean": 0.0, "moment": 0.0}
    for family, spec, obj, res in _family_runs():
        worst[family] = max(worst[family], abs(res.value - exponential_lp_bound(spec, obj).value))
    ok = max(worst.values()) <= TOL
    return ok, "600 instances, worst |compact - full LP| %s (%.1fs)" % (
        ", ".join("%s %.1e" % kv for kv in worst.items()), time.perf_counter() - t0)


def criterion_4():
    worst_slack, worst_gap, failures = 0.0, 0.0, 0
    for _, spec, obj, res in _family_runs():
        rep = check_membership(res.extremal, spec, tol=MEMBER_TOL)
        gap = abs(expectation(res.extremal, obj) - res.value)
        worst_slack = max(worst_slack, rep.worst)
        worst_gap = max(worst_gap, gap)
        failures += (not rep.ok) or gap > TOL
    return failures == 0, "600 extractions, %d failures, worst violation %.1e, worst value gap %.1e" % (
        failures, worst_slack, worst_gap)


# 2: generic row generation ----------------------------------------------------


def criterion_2():
    rng = np.random.default_rng(7)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        n = int(rng.integers(2, 5))
        spec = random_generic(rng, n)
        obj = random_objective(rng, n)
        worst = max(worst, abs(sharp_bound_generic(spec, obj).value - exponential_lp_bound(spec, obj).value))
    return worst <= TOL, "100 instances, worst |row generation - full LP| %.1e (%.1fs)" % (
        worst, time.perf_counter() - t0)


# 3: spanning-tree bound -------------------------------------------------------


def criterion_3():
    rng = np.random.default_rng(3)
    worst = 0.0
    for _ in range(100):
        N = int(rng.integers(2, 9))
        p = rng.uniform(0.01, 0.5, N)
        q = {(i, j): float(rng.uniform()) * min(p[i], p[j]) for i in range(N) for j in range(i + 1, N)}
        v = solve_boolean_higher_order(BooleanHigherOrder(p, 2, q), expand_rank_objective(N, 1),
                                       extract=False)[0].value
        worst = max(worst, abs(v - hunter_worsley(p, q)))
    return worst <= 1e-7, "100 instances N<=8, worst |LP - spanning-tree bound| %.1e" % worst


# 5: comonotone extremality ----------------------------------------------------


def criterion_5():
    rng = np.random.default_rng(5)
    worst, count = 0.0, 0
    while count < 50:
        margs = random_marginals(rng, int(rng.integers(2, 5)), max_size=4)
        sup = support_of(margs)
        if sup.size > 256:
            continue
        spec = frechet_spec(margs)
        g = random_submodular_table(rng, sup, "super")
        f = LatticeFunction.from_table(sup, -g.table())
        if not (verify_supermodular(g) and verify_submodular(f)):
            return False, "generated oracle failed its own modularity check"
        worst = max(worst, abs(choquet_expectation(g, margs) - exponential_lp_bound(spec, g, "max").value),
                    abs(choquet_expectation(f, margs) - exponential_lp_bound(spec, f, "min").value))
        count += 1
    return worst <= TOL, "50 supermodular and 50 submodular oracles, worst gap %.1e" % worst


# 6: robust decisions ------------------------------------------------------------

GRID = np.round(np.arange(0.0, 1.0 + 1e-9, 0.05), 10)


def _random_decision(rng, n):
    return AffineDecisionObjective(rng.uniform(-1, 1, (3, n, 2)), rng.uniform(-1, 1, (3, n)),
                                   rng.uniform(-1, 1, (3, 2)), rng.uniform(-1, 1, 3))


def _newsvendor(rng):
    """Two products; product i costs ``c_i x_i - r_i min(x_i, xi_i)``, each a maximum of two affine maps.

    Demand supports lie on the 0.05 grid, so each product's cost is piecewise
    linear in ``x_i`` with kinks on the grid and the grid contains a minimizer.
    """
    margs = []
    for _ in range(2):
        k = int(rng.integers(2, 5))
        v = np.sort(rng.choice(GRID, k, replace=False))
        w = rng.gamma(2.0, 1.0, k)
        margs.append(DiscreteMarginal(v, w / w.sum()))
    r = rng.uniform(0.5, 1.5, 2)
    c = rng.uniform(0.1, 0.9, 2) * r
    A, a0, cc = [], [], []
    for sold_x in itertools.product((False, True), repeat=2):
        a0.append([0.0 if s else -r[i] for i, s in enumerate(sold_x)])
        cc.append([c[i] - r[i] if s else c[i] for i, s in enumerate(sold_x)])
        A.append(np.zeros((2, 2)))
    return PodBivariate(margs), AffineDecisionObjective(np.array(A), a0, cc, np.zeros(4))


def criterion_6():
    rng = np.random.default_rng(6)
    worst_fixed = 0.0
    for _ in range(50):
        n = int(rng.integers(2, 4))
        spec = random_pod(rng, n)
        objective = _random_decision(rng, n)
        x0 = rng.uniform(0, 1, 2)
        dual = solve_dual_dro(spec, Polyhedron.point(x0), objective).value
        primal = solve_pod_bivariate(spec, objective.at(x0), extract=False)[0].value
        worst_fixed = max(worst_fixed, abs(dual - primal))
    worst_grid = worst_generic = 0.0
    box = Polyhedron.box([0, 0], [1, 1])
    for _ in range(10):
        spec, objective = _newsvendor(rng)
        res = solve_dual_dro(spec, box, objective)
        grid = min(solve_pod_bivariate(spec, objective.at([x, y]), extract=False)[0].value
                   for x in GRID for y in GRID)
        worst_grid = max(worst_grid, abs(res.value - grid))
        worst_generic = max(worst_generic, abs(res.value - dro_solve(to_generic(spec), box, objective).value))
    ok = worst_fixed <= TOL and worst_grid <= 1e-4 and worst_generic <= 1e-5
    return ok, ("50 fixed decisions worst |dual - primal| %.1e; 10 newsvendor instances worst |LP - 0.05 grid| %.1e, "
                "worst |compact - row generation| %.1e" % (worst_fixed, worst_grid, worst_generic))


# 7: monotone information ------------------------------------------------------

TABLE_SEED = 3


def _nonincreasing(vals):
    return all(b <= a + 1e-8 for a, b in zip(vals, vals[1:]))


def criterion_7():
    t0 = time.perf_counter()
    rng = np.random.default_rng(77)
    bad = []
    for N in range(2, 9):
        inst = make_pod_instance(int(rng.integers(10**6)), N, 0.5)
        if not _nonincreasing([r.value for r in pod_instance_sweep(inst)]):
            bad.append("M sweep seed %d" % inst.seed)
    for seed in range(10):
        if not _nonincreasing([r.value for r in moment_instance_sweep(gen_moment_instance(seed, 4), 10)]):
            bad.append("L sweep seed %d" % seed)
    # small probabilities and rank objectives min(sum xi, B)
    inst = make_pod_instance(TABLE_SEED, 8, 0.1)
    rows = {B: [r.value for r in pod_instance_sweep(inst, expand_rank_objective(8, B))] for B in (1, 2, 3)}
    drops = {B: [a - b for a, b in zip(v, v[1:])] for B, v in rows.items()}
    pattern = (min(drops[1]) > 1e-6 and min(drops[2]) > 1e-6 and min(drops[3][1:]) > 1e-6
               and all(abs(v[0] - rows[1][0]) <= 1e-9 for v in rows.values()))
    table = "; ".join("B=%d: %s" % (B, " ".join("%.5f" % x for x in v)) for B, v in rows.items())
    ok = not bad and pattern
    return ok, "7 M sweeps and 10 L sweeps monotone%s; seed %d table %s (%.1fs)" % (
        "" if not bad else " except " + ", ".join(bad), inst.seed, table, time.perf_counter() - t0)


# 8: quantitative bands --------------------------------------------------------


def criterion_8():
    t0 = time.perf_counter()
    pod = run_pod_sweep(range(100), 6, (0.5,))
    pod_med = statistics.median(r.pct_improvement for r in pod if r.M_or_L == 6)
    mom = run_moment_sweep(range(100), 5, 10, 3)
    by_seed: dict = {}
    for r in mom:
        by_seed.setdefault(r.seed, []).append(r)
    cumulative = [rows[-1].pct_improvement for rows in by_seed.values()]
    mom_med = statistics.median(cumulative)
    at_two = sum(max(rows[1:], key=lambda r: r.marginal_reduction).M_or_L == 2 for rows in by_seed.values())
    checks = [1.0 <= pod_med <= 12.0, 5.0 <= mom_med <= 20.0, at_two >= 70]
    detail = ("pod median improvement at M=6 %.2f%% [1, 12] %s; moment median cumulative improvement %.2f%% "
              "(range %.2f to %.2f) [5, 20] %s; largest marginal reduction at L=2 in %d/100 [>=70] %s (%.0fs)"
              % (pod_med, "ok" if checks[0] else "OUT", mom_med, min(cumulative), max(cumulative),
                 "ok" if checks[1] else "OUT", at_two, "ok" if checks[2] else "OUT", time.perf_counter() - t0))
    return all(checks), detail


# 9: LP kernel ---------------------------------------------------------------------


def _solve_square(rows, rhs):
    """Exact Gaussian elimination; None when singular."""
    n = len(rows)
    M = [list(r) + [b] for r, b in zip(rows, rhs)]
    for col in range(n):
        piv = next((r for r in range(col, n) if M[r][col] != 0), None)
        if piv is None:
            return None
        M[col], M[piv] = M[piv], M[col]
        inv = 1 / M[col][col]
        M[col] = [v * inv for v in M[col]]
        for r in range(n):
            if r != col and M[r][col] != 0:
                f = M[r][col]
                M[r] = [a - f * b for a, b in zip(M[r], M[col])]
    return [M[r][n] for r in range(n)]


def _vertex_max(c, eqs, les):
    """Maximum of ``c'x`` over vertices of ``{eqs hold, les hold}``; None if there is no vertex."""
    n = len(c)
    cons = eqs + les
    best = None
    for idx in itertools.combinations(range(len(cons)), n):
        x = _solve_square([cons[i][0] for i in idx], [cons[i][1] for i in idx])
        if x is None:
            continue
        if all(sum(a * v for a, v in zip(row, x)) == b for row, b in eqs) and \
                all(sum(a * v for a, v in zip(row, x)) <= b for row, b in les):
            val = sum(a * v for a, v in zip(c, x))
            best = val if best is None or val > best else best
    return best


def rational_status(c, A, senses, b):
    """Status and value of ``max c'x, A x (senses) b, x >= 0`` by exact vertex enumeration."""
    n = len(c)
    F = lambda row: [Fraction(int(v)) for v in row]  # noqa: E731
    eqs = [(F(r), Fraction(int(v))) for r, s, v in zip(A, senses, b) if s == EQ]
    les = [(F(r), Fraction(int(v))) for r, s, v in zip(A, senses, b) if s == LE]
    les += [([-a for a in F(r)], -Fraction(int(v))) for r, s, v in zip(A, senses, b) if s == GE]
    nonneg = [([Fraction(-1 if k == j else 0) for k in range(n)], Fraction(0)) for j in range(n)]
    best = _vertex_max(F(c), eqs, les + nonneg)
    if best is None:
        return "infeasible", None
    # recession directions d >= 0 with sum d = 1; unbounded iff one of them improves c
    ray_eqs = [(row, Fraction(0)) for row, _ in eqs] + [([Fraction(1)] * n, Fraction(1))]
    ray_les = [(row, Fraction(0)) for row, _ in les] + nonneg
    ray = _vertex_max(F(c), ray_eqs, ray_les)
    if ray is not None and ray > 0:
        return "unbounded", None
    return "optimal", best


def criterion_9():
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    worst_gap, mismatches, value_err = 0.0, 0, 0.0
    counts = {"optimal": 0, "infeasible": 0, "unbounded": 0}
    for _ in range(1000):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        A = rng.integers(-3, 4, (m, n))
        b = rng.integers(-1, 7, m)
        c = rng.integers(-3, 4, n)
        senses = list(rng.choice([LE, LE, LE, GE, EQ], m))
        if rng.uniform() < 0.5:
            # a nonnegative row bounds the feasible set, so optimal instances are common
            A[0], senses[0] = np.abs(A[0]) + 1, LE
        sol = solve_lp(LPModel.from_dense(c, A, senses, b, maximize=True), backend="simplex")
        status, exact = rational_status(c, A, senses, b)
        counts[status] += 1
        if sol.status != status:
            mismatches += 1
            continue
        if sol.optimal:
            worst_gap = max(worst_gap, sol.certificate["gap"] / (1 + abs(sol.objective)))
            value_err = max(value_err, abs(sol.objective - float(exact)))
    ok = mismatches == 0 and worst_gap <= 1e-6 and value_err <= 1e-7
    return ok, ("1000 LPs (%d optimal, %d infeasible, %d unbounded), %d status mismatches, worst relative gap %.1e, "
                "worst |value - exact| %.1e (%.1fs)" % (counts["optimal"], counts["infeasible"], counts["unbounded"],
                                                         mismatches, worst_gap, value_err, time.perf_counter() - t0))


CRITERIA = {1: criterion_1, 2: criterion_2, 3: criterion_3, 4: criterion_4, 5: criterion_5,
            6: criterion_6, 7: criterion_7, 8: criterion_8, 9: criterion_9}


def test_criterion_1_oracle_equivalence(acceptance):
    acceptance(1, *criterion_1())


def test_criterion_2_generic_row_generation(acceptance):
    acceptance(2, *criterion_2())


def test_criterion_3_spanning_tree_tightness(acceptance):
    acceptance(3, *criterion_3())


def test_criterion_4_extremal_attainment(acceptance):
    acceptance(4, *criterion_4())


def test_criterion_5_comonotone_extremality(acceptance):
    acceptance(5, *criterion_5())


def test_criterion_6_robust_decisions(acceptance):
    acceptance(6, *criterion_6())


def test_criterion_7_monotone_information(acceptance):
    acceptance(7, *criterion_7())


def test_criterion_8_quantitative_bands(acceptance):
    acceptance(8, *criterion_8())


def test_criterion_9_lp_kernel(acceptance):
    acceptance(9, *criterion_9())


if __name__ == "__main__":
    for number, fn in CRITERIA.items():
        ok, detail = fn()
        print("CRITERION %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail), flush=True)
