"""Row-generation solvers for generic submodular ambiguity sets.

The dual of the full-lattice LP has a handful of variables, ``y0`` and one
``y_j >= 0`` per constraint, and one row per lattice point.  Rows are added
lazily: the most violated row for each objective piece is found by
minimizing ``sum_j y_j f_j(xi) - g_k(xi)``.  That function is submodular
whenever every ``f_j`` is submodular and every ``g_k`` is supermodular.

The restricted dual is solved with ``y_j <= DUAL_BOX`` so it is bounded from
the first iteration.  If the box is still active at the end the set is either
empty (the full dual is unbounded) or the optimum needs larger multipliers;
the feasibility test decides which.
"""

from __future__ import annotations

import logging
from typing import Sequence

import numpy as np

from . import lpsolve
from .comonotone import comonotone_layers
from .core import (LATTICE_CAP, AffineDecisionObjective, BooleanHigherOrder, BoundResult, DiscreteMarginal,
                   DroResult, DualSolution, GenericSubmodular, InfeasibleSpecError, JointDistribution, Moment,
                   PiecewiseAffineObjective, PodBivariate, Polyhedron, ProductSupport, SolverError, SpecError,
                   SubmodularConstraint, support_of)
from .lattice import VERIFY_CAP, LatticeFunction, minimize_submodular, verify_submodular, verify_supermodular

log = logging.getLogger(__name__)

VIOLATION_TOL = 1e-8
CUT_CAP = 10**4
DUAL_BOX = 1e6
_BOX_GROWTH = 1e3
_BOX_MAX = 1e12
FEASIBILITY_TOL = 1e-8


# ---------------------------------------------------------------------------
# constraint builders


def _coordinate_indicator(i: int, v: float, sign: float):
    return (lambda xi: sign * float(xi[i] == v),
            lambda pts: sign * (pts[:, i] == v).astype(float))


def marginal_constraints(support: ProductSupport, marginals: Sequence[DiscreteMarginal]) -> list:
    """Pin every univariate pmf with two opposite modular constraints per atom.

    Atoms of ``support`` missing from a marginal get probability zero.
    """
    cons = []
    for i, m in enumerate(marginals):
        pm = dict(zip(m.values, m.probs))
        for v in support.dims[i]:
            p = pm.get(v, 0.0)
            for sign, tag in ((1.0, "<="), (-1.0, ">=")):
                fn, batch = _coordinate_indicator(i, v, sign)
                cons.append(SubmodularConstraint(LatticeFunction(support, fn, batch), sign * p,
                                                 "P(X%d = %g) %s %g" % (i, v, tag, p)))
    return cons


def product_lower_bound(support: ProductSupport, i: int, j: int, q: float) -> SubmodularConstraint:
    """``E[X_i X_j] >= q`` written as ``E[-X_i X_j] <= -q``."""
    f = LatticeFunction(support, lambda xi: -xi[i] * xi[j], lambda pts: -pts[:, i] * pts[:, j])
    return SubmodularConstraint(f, -q, "E[X%d X%d] >= %g" % (i, j, q))


def frechet_spec(marginals: Sequence[DiscreteMarginal], extra: Sequence[SubmodularConstraint] = ()) -> GenericSubmodular:
    """The set of couplings of ``marginals``, optionally cut down by ``extra``."""
    support = support_of(marginals)
    return GenericSubmodular(support, tuple(marginal_constraints(support, marginals)) + tuple(extra),
                             tuple(marginals))


def to_generic(spec) -> GenericSubmodular:
    """Rewrite a structured ambiguity set as submodular expectation bounds.

    Lower bounds on supermodular expectations (upper-tail indicators,
    products) become upper bounds on their negatives; equalities on
    univariate functions become two opposite modular bounds.
    """
    if isinstance(spec, GenericSubmodular):
        return spec
    if isinstance(spec, PodBivariate):
        sup = spec.support
        cons = marginal_constraints(sup, spec.marginals)
        for (i, j, s, t), T in spec.targets().items():
            f = LatticeFunction(sup, lambda xi, i=i, j=j, s=s, t=t: -float(xi[i] >= s and xi[j] >= t),
                                lambda pts, i=i, j=j, s=s, t=t: -((pts[:, i] >= s) & (pts[:, j] >= t)).astype(float))
            cons.append(SubmodularConstraint(f, -T, "P(X%d >= %g, X%d >= %g) >= %g" % (i, s, j, t, T)))
        return GenericSubmodular(sup, cons, spec.marginals)
    if isinstance(spec, BooleanHigherOrder):
        sup = spec.support
        cons = marginal_constraints(sup, spec.marginals)
        for I, q in spec.targets().items():
            f = LatticeFunction(sup, lambda xi, I=I: -float(np.prod([xi[i] for i in I])),
                                lambda pts, I=I: -np.prod(pts[:, list(I)], axis=1))
            cons.append(SubmodularConstraint(f, -q, "E[prod X%s] >= %g" % (I, q)))
        return GenericSubmodular(sup, cons, spec.marginals)
    if isinstance(spec, Moment):
        sup = spec.support
        cons = []
        for i in range(spec.n):
            tab = spec.table(i)
            for l, m in enumerate(spec.moments[i]):
                h = np.asarray(tab[l])
                for sign, tag in ((1.0, "<="), (-1.0, ">=")):
                    f = LatticeFunction(sup, lambda xi, i=i, h=h, sign=sign: sign * h[sup.value_index(i, xi[i])],
                                        lambda pts, i=i, h=h, sign=sign:
                                        sign * h[np.searchsorted(sup.dims[i], pts[:, i])])
                    cons.append(SubmodularConstraint(f, sign * m, "E[h%d(X%d)] %s %g" % (l + 1, i, tag, m)))
        for (i, j), q in spec.cross_moments.items():
            cons.append(product_lower_bound(sup, i, j, q))
        return GenericSubmodular(sup, cons)
    raise TypeError("unknown ambiguity set %s" % type(spec).__name__)


# ---------------------------------------------------------------------------
# shared machinery


def _table(f, support: ProductSupport, cap: int) -> np.ndarray:
    if not isinstance(f, LatticeFunction):
        f = LatticeFunction(support, f)
    return f.table(cap)


def _constraint_matrix(spec: GenericSubmodular, cap: int) -> tuple[np.ndarray, np.ndarray]:
    F = np.column_stack([_table(c.f, spec.support, cap) for c in spec.constraints]) \
        if spec.constraints else np.zeros((spec.support.size, 0))
    gam = np.array([c.gamma for c in spec.constraints], dtype=float)
    return F, gam


def _verify(spec: GenericSubmodular, pieces, verify: bool) -> None:
    if not verify or spec.support.size > VERIFY_CAP:
        return
    for j, c in enumerate(spec.constraints):
        f = c.f if isinstance(c.f, LatticeFunction) else LatticeFunction(spec.support, c.f)
        if not verify_submodular(f):
            raise SpecError("constraint %d (%s) is not submodular" % (j, c.name))
    for k, g in enumerate(pieces or ()):
        if not verify_supermodular(g):
            raise SpecError("objective piece %d is not supermodular" % k)


def _seed_indices(spec: GenericSubmodular) -> list[int]:
    sup = spec.support
    seeds = [sup.flat_index(sup.bottom), sup.flat_index(sup.top)]
    if spec.marginals is not None:
        for pt, _ in comonotone_layers(spec.marginals):
            if sup.contains(pt):
                seeds.append(sup.flat_index(pt))
    return list(dict.fromkeys(seeds))


def _separate(table: np.ndarray, support: ProductSupport, cap: int) -> tuple[int, float]:
    """Lexicographically first minimizer of a lattice table, as a flat index."""
    pt, val = minimize_submodular(LatticeFunction.from_table(support, table), cap)
    return support.flat_index(pt), val


def _row_generation(spec: GenericSubmodular, G: np.ndarray, cap: int, max_cuts: int) -> BoundResult:
    """Solve ``min y0 + gamma'y  s.t.  y0 + F y >= G[:, k]`` for all points and pieces."""
    sup = spec.support
    F, gam = _constraint_matrix(spec, cap)
    pts = sup.points(cap)
    gmax = G.max(axis=1)
    cuts = _seed_indices(spec)
    box = DUAL_BOX
    J = F.shape[1]
    iterations = 0
    while True:
        iterations += 1
        sol = _solve_restricted(F, gam, gmax, cuts, box)
        y0, y = sol.x[0], sol.x[1:]
        base = y0 + F @ y
        new = []
        worst = 0.0
        for k in range(G.shape[1]):
            idx, val = _separate(base - G[:, k], sup, cap)
            worst = min(worst, val)
            if val < -VIOLATION_TOL and idx not in cuts and idx not in new:
                new.append(idx)
        if not new:
            if J and (y >= box * (1 - 1e-9)).any():
                if not _feasible(F, gam, sup, cap, max_cuts):
                    raise InfeasibleSpecError("submodular ambiguity set is empty")
                if box >= _BOX_MAX:
                    raise SolverError("dual multipliers exceed %g" % _BOX_MAX)
                box *= _BOX_GROWTH
                continue
            break
        cuts.extend(new)
        if len(cuts) > max_cuts:
            raise SolverError("cut cap %d exceeded" % max_cuts)
    weights = np.maximum(sol.duals, 0.0)
    mass = {}
    for idx, w in zip(cuts, weights):
        if w > 0:
            mass[tuple(pts[idx])] = mass.get(tuple(pts[idx]), 0.0) + w
    total = sum(mass.values())
    extremal = JointDistribution(sup, {p: w / total for p, w in mass.items()}) if total > 0 else None
    cut_points = [tuple(float(v) for v in pts[i]) for i in cuts]
    return BoundResult(sol.objective, DualSolution(float(y0), tuple(float(v) for v in y)), cut_points,
                       extremal, {"iterations": iterations, "max_violation": worst, "dual_box": box})


def _solve_restricted(F, gam, gmax, cuts, box) -> lpsolve.LPSolution:
    b = lpsolve.LPBuilder(maximize=False)
    b.add_var("y0", -np.inf, np.inf, 1.0)
    for j, g in enumerate(gam):
        b.add_var("y%d" % (j + 1), 0.0, box, g)
    for idx in cuts:
        row = {0: 1.0}
        row.update({j + 1: v for j, v in enumerate(F[idx]) if v != 0.0})
        b.add_row(row, lpsolve.GE, gmax[idx], "cut%d" % idx)
    try:
        sol = lpsolve.solve_lp(b.build())
    except lpsolve.LPError as exc:
        raise SolverError(str(exc)) from exc
    if not sol.optimal:
        raise SolverError("restricted dual LP is %s" % sol.status)
    return sol


def _feasible(F, gam, sup, cap, max_cuts) -> bool:
    """Zero-objective dual with ``y <= 1``: the optimum is 0 iff the set is nonempty."""
    zero = np.zeros(F.shape[0])
    cuts = [sup.flat_index(sup.bottom), sup.flat_index(sup.top)]
    cuts = list(dict.fromkeys(cuts))
    while True:
        sol = _solve_restricted(F, gam, zero, cuts, 1.0)
        y0, y = sol.x[0], sol.x[1:]
        idx, val = _separate(y0 + F @ y, sup, cap)
        if val >= -VIOLATION_TOL or idx in cuts:
            break
        cuts.append(idx)
        if len(cuts) > max_cuts:
            raise SolverError("cut cap %d exceeded" % max_cuts)
    scale = 1.0 + np.abs(gam).sum()
    return sol.objective >= -FEASIBILITY_TOL * scale


# ---------------------------------------------------------------------------
# public operations


def sharp_bound_generic(spec: GenericSubmodular, obj: PiecewiseAffineObjective, verify: bool = False,
                        cap: int = LATTICE_CAP, max_cuts: int = CUT_CAP) -> BoundResult:
    """Sharp upper bound on ``E[max_k a_k'xi + b_k]`` over a submodular ambiguity set.

    With ``verify=True`` every constraint oracle is checked for submodularity
    first (only when the lattice has at most ``VERIFY_CAP`` points).
    """
    if obj.N != spec.support.n:
        raise SpecError("objective has dimension %d, support has %d" % (obj.N, spec.support.n))
    _verify(spec, None, verify)
    return _row_generation(spec, obj.piece_values(spec.support.points(cap)), cap, max_cuts)


def sharp_bound_supermodular_pieces(spec: GenericSubmodular, pieces: Sequence, verify: bool = False,
                                    cap: int = LATTICE_CAP, max_cuts: int = CUT_CAP) -> BoundResult:
    """Sharp upper bound on ``E[max_k g_k(xi)]`` for supermodular pieces ``g_k``.

    Pieces may be :class:`LatticeFunction` objects, plain callables or
    constants.
    """
    if not pieces:
        raise SpecError("need at least one piece")
    sup = spec.support
    fns = []
    for g in pieces:
        if isinstance(g, (int, float)):
            v = float(g)
            g = LatticeFunction(sup, lambda xi, v=v: v, lambda pts, v=v: np.full(len(pts), v))
        elif not isinstance(g, LatticeFunction):
            g = LatticeFunction(sup, g)
        fns.append(g)
    _verify(spec, fns, verify)
    G = np.column_stack([g.table(cap) for g in fns])
    return _row_generation(spec, G, cap, max_cuts)


def feasibility_test(spec: GenericSubmodular, cap: int = LATTICE_CAP, max_cuts: int = CUT_CAP) -> bool:
    """True iff some distribution on the lattice meets every constraint.

    When the spec embeds marginals the answer is compared with the
    comonotone criterion, which is exact for submodular constraints on a
    Frechet set; a disagreement is logged.
    """
    F, gam = _constraint_matrix(spec, cap)
    ok = _feasible(F, gam, spec.support, cap, max_cuts) if F.shape[1] else True
    if spec.marginals is not None:
        sup = spec.support
        layers = comonotone_layers(spec.marginals)
        if all(sup.contains(pt) for pt, _ in layers):
            w = np.zeros(sup.size)
            for pt, m in layers:
                w[sup.flat_index(pt)] += m
            como = bool((w @ F <= gam + FEASIBILITY_TOL * (1.0 + np.abs(gam))).all())
            if como != ok:
                log.warning("feasibility LP says %s, comonotone criterion says %s", ok, como)
    return ok


def dro_solve(spec: GenericSubmodular, X: Polyhedron, objective: AffineDecisionObjective,
              cap: int = LATTICE_CAP, max_cuts: int = CUT_CAP) -> DroResult:
    """Minimize over ``x`` in ``X`` the sharp bound of ``E[max_k a_k(x)'xi + b_k(x)]``.

    One LP in ``(x, y0, y)`` with a cut per generated ``(xi, k)`` pair:
    ``y0 + sum_j y_j f_j(xi) - (A_k' xi + c_k)' x >= a0_k' xi + b0_k``.
    """
    sup = spec.support
    if objective.N != sup.n or objective.d != X.d:
        raise SpecError("decision objective does not match the support or the decision space")
    if not (np.isfinite(X.lb).all() and np.isfinite(X.ub).all()):
        raise SpecError("the decision set must be a bounded box intersected with G x <= h")
    F, gam = _constraint_matrix(spec, cap)
    pts = sup.points(cap)
    K, d, J = objective.K, objective.d, F.shape[1]
    # coefficient of x and constant term of piece k at every lattice point
    xcoef = np.einsum("pn,knd->pkd", pts, objective.A) + objective.c[None, :, :]
    const = pts @ objective.a0.T + objective.b0[None, :]
    cuts = [(i, k) for i in _seed_indices(spec) for k in range(K)]
    box = DUAL_BOX
    while True:
        sol = _solve_dro_master(X, F, gam, xcoef, const, cuts, box)
        if sol.status == "infeasible":
            raise SpecError("decision set is empty")
        if not sol.optimal:
            raise SolverError("DRO master LP is %s" % sol.status)
        x, y0, y = sol.x[:d], sol.x[d], sol.x[d + 1:]
        base = y0 + F @ y
        new = []
        for k in range(K):
            idx, val = _separate(base - (xcoef[:, k, :] @ x + const[:, k]), sup, cap)
            if val < -VIOLATION_TOL and (idx, k) not in cuts:
                new.append((idx, k))
        if not new:
            if J and (y >= box * (1 - 1e-9)).any():
                if not _feasible(F, gam, sup, cap, max_cuts):
                    raise InfeasibleSpecError("submodular ambiguity set is empty")
                if box >= _BOX_MAX:
                    raise SolverError("dual multipliers exceed %g" % _BOX_MAX)
                box *= _BOX_GROWTH
                continue
            break
        cuts.extend(new)
        if len(cuts) > max_cuts:
            raise SolverError("cut cap %d exceeded" % max_cuts)
    bound = BoundResult(sol.objective, DualSolution(float(y0), tuple(float(v) for v in y)),
                        [(tuple(float(v) for v in pts[i]), k + 1) for i, k in cuts], None, {"dual_box": box})
    return DroResult(np.array(x), float(sol.objective), bound)


def _solve_dro_master(X, F, gam, xcoef, const, cuts, box) -> lpsolve.LPSolution:
    d = X.d
    b = lpsolve.LPBuilder(maximize=False)
    for t in range(d):
        b.add_var("x%d" % t, X.lb[t], X.ub[t], 0.0)
    b.add_var("y0", -np.inf, np.inf, 1.0)
    for j, g in enumerate(gam):
        b.add_var("y%d" % (j + 1), 0.0, box, g)
    for r in range(X.G.shape[0]):
        b.add_row({t: v for t, v in enumerate(X.G[r]) if v != 0.0}, lpsolve.LE, X.h[r], "X%d" % r)
    for idx, k in cuts:
        row = {t: -v for t, v in enumerate(xcoef[idx, k]) if v != 0.0}
        row[d] = 1.0
        row.update({d + 1 + j: v for j, v in enumerate(F[idx]) if v != 0.0})
        b.add_row(row, lpsolve.GE, const[idx, k], "cut%d_%d" % (idx, k))
    try:
        return lpsolve.solve_lp(b.build())
    except lpsolve.LPError as exc:
        raise SolverError(str(exc)) from exc
