"""Polynomial-size LPs for the structured ambiguity sets.

Each LP splits the probability space by the index ``k`` of the objective
piece that attains the maximum: ``lam[k]`` is the mass of that event and the
``gamma`` variables are joint probabilities with it.  Extraction reverses the
construction by coupling each conditional marginal comonotonically and
mixing over ``k``.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.sparse.csgraph import minimum_spanning_tree

from . import lpsolve
from .comonotone import comonotone_layers
from .core import (AffineDecisionObjective, BooleanHigherOrder, BoundResult, DiscreteMarginal, DroResult,
                   InfeasibleSpecError, JointDistribution, LatticeTooLargeError, Moment,
                   PiecewiseAffineObjective, PodBivariate, Polyhedron, SolverError, SpecError,
                   require_valid)

LAMBDA_TOL = 1e-10
COMPACT_VAR_CAP = 10**6
PIECE_CAP = 10**5
_INVARIANT_TOL = 1e-8


@dataclass
class CompactSolution:
    """Primal solution of a compact LP.

    ``gamma_uni[i]`` is a ``(K, |Xi_i|)`` array of ``P(X_i = v, piece k)``
    (a ``(K,)`` array of ``P(X_i = 1, piece k)`` in the Boolean case).
    ``gamma_pair`` maps ``(i, j, s, t)`` or a subset ``I`` to a ``(K,)``
    array; its meaning follows the LP that produced it.
    """

    kind: str
    lam: np.ndarray
    gamma_uni: list
    gamma_pair: dict = field(default_factory=dict)
    values: list = field(default_factory=list)

    def check(self, tol: float = _INVARIANT_TOL) -> list[str]:
        problems = []
        if abs(self.lam.sum() - 1.0) > tol:
            problems.append("lambda sums to %.12g" % self.lam.sum())
        arrays = [self.lam, *self.gamma_uni, *self.gamma_pair.values()]
        if min(float(np.min(a)) for a in arrays if np.size(a)) < -1e-9:
            problems.append("negative component")
        if self.kind != "boolean":
            for i, g in enumerate(self.gamma_uni):
                if np.abs(g.sum(axis=1) - self.lam).max() > tol:
                    problems.append("conditional marginal %d does not sum to lambda" % i)
        else:
            for i, g in enumerate(self.gamma_uni):
                if (g > self.lam + tol).any():
                    problems.append("gamma %d exceeds lambda" % i)
        return problems


def _check_objective(obj: PiecewiseAffineObjective, n: int) -> None:
    if obj.N != n:
        raise SpecError("objective has dimension %d, ambiguity set has %d" % (obj.N, n))


def _solve(b: lpsolve.LPBuilder, what: str, backend: str) -> lpsolve.LPSolution:
    model = b.build()
    if model.n_vars > COMPACT_VAR_CAP:
        raise LatticeTooLargeError("%s LP has %d variables, cap is %d" % (what, model.n_vars, COMPACT_VAR_CAP))
    try:
        sol = lpsolve.solve_lp(model, backend=backend)
    except lpsolve.LPError as exc:
        raise SolverError(str(exc)) from exc
    if sol.status == "infeasible":
        raise InfeasibleSpecError("%s ambiguity set is empty" % what)
    if not sol.optimal:
        raise SolverError("%s LP is %s" % (what, sol.status))
    sol.model = model
    return sol


def _result(spec, obj, sol, csol, extract: bool) -> tuple[BoundResult, CompactSolution]:
    info = {"lp": sol, "n_vars": sol.model.n_vars, "n_rows": sol.model.n_rows}
    res = BoundResult(sol.objective, info=info)
    if extract:
        res.extremal = extract_extremal(spec, obj, csol)
    return res, csol


# ---------------------------------------------------------------------------
# marginals plus bivariate upper-tail bounds


def solve_pod_bivariate(spec: PodBivariate, obj: PiecewiseAffineObjective, extract: bool = True,
                        backend: str = "auto") -> tuple[BoundResult, CompactSolution]:
    """Sharp bound over fixed marginals with lower bounds on bivariate upper tails.

    Pair variables stand for ``P(X_i >= s, X_j >= t, piece k)``; rows exist
    only for the pairs in ``spec.targets()``.
    """
    require_valid(spec)
    _check_objective(obj, spec.n)
    K, n = obj.K, spec.n
    vals = [m.values for m in spec.marginals]
    b = lpsolve.LPBuilder(maximize=True)
    lam = [b.add_var("lam%d" % k, obj=obj.b[k]) for k in range(K)]
    g = [[[b.add_var("g%d_%d_%d" % (i, k, s), obj=obj.a[k, i] * v) for s, v in enumerate(vals[i])]
          for k in range(K)] for i in range(n)]
    targets = spec.targets()
    gp = {key: [b.add_var("gp%d_%d_%g_%g_%d" % (*key, k)) for k in range(K)] for key in targets}
    b.add_row({v: 1.0 for v in lam}, lpsolve.EQ, 1.0, "lam")
    for i, m in enumerate(spec.marginals):
        for s, p in enumerate(m.probs):
            b.add_row({g[i][k][s]: 1.0 for k in range(K)}, lpsolve.EQ, p, "marg%d_%d" % (i, s))
    for i in range(n):
        for k in range(K):
            row = {v: 1.0 for v in g[i][k]}
            row[lam[k]] = -1.0
            b.add_row(row, lpsolve.EQ, 0.0, "cond%d_%d" % (i, k))
    for key, T in targets.items():
        i, j, s, t = key
        si, tj = vals[i].index(s), vals[j].index(t)
        for k in range(K):
            for idx, start in ((i, si), (j, tj)):
                row = {gp[key][k]: 1.0}
                row.update({v: -1.0 for v in g[idx][k][start:]})
                b.add_row(row, lpsolve.LE, 0.0, "tail%d" % idx)
        b.add_row({v: 1.0 for v in gp[key]}, lpsolve.GE, T, "target")
    sol = _solve(b, "bivariate", backend)
    x = sol.x
    csol = CompactSolution("pod", x[lam].copy(), [np.array([[x[v] for v in g[i][k]] for k in range(K)])
                                                  for i in range(n)],
                           {key: x[idx] for key, idx in gp.items()}, [list(v) for v in vals])
    return _result(spec, obj, sol, csol, extract)


# ---------------------------------------------------------------------------
# Boolean marginals plus higher-order product bounds


def solve_boolean_higher_order(spec: BooleanHigherOrder, obj: PiecewiseAffineObjective, extract: bool = True,
                               backend: str = "auto") -> tuple[BoundResult, CompactSolution]:
    require_valid(spec)
    _check_objective(obj, spec.n)
    K, n = obj.K, spec.n
    targets = spec.targets()
    if (n + len(targets) + 1) * K > COMPACT_VAR_CAP:
        raise LatticeTooLargeError("higher-order LP would exceed %d variables" % COMPACT_VAR_CAP)
    b = lpsolve.LPBuilder(maximize=True)
    lam = [b.add_var("lam%d" % k, obj=obj.b[k]) for k in range(K)]
    g = [[b.add_var("g%d_%d" % (i, k), obj=obj.a[k, i]) for k in range(K)] for i in range(n)]
    gI = {I: [b.add_var("gI%s_%d" % ("_".join(map(str, I)), k)) for k in range(K)] for I in targets}
    b.add_row({v: 1.0 for v in lam}, lpsolve.EQ, 1.0, "lam")
    for i, p in enumerate(spec.p):
        b.add_row({g[i][k]: 1.0 for k in range(K)}, lpsolve.EQ, p, "marg%d" % i)
    for i in range(n):
        for k in range(K):
            b.add_row({g[i][k]: 1.0, lam[k]: -1.0}, lpsolve.LE, 0.0, "cap%d_%d" % (i, k))
    for I, q in targets.items():
        for k in range(K):
            b.add_row({gI[I][k]: 1.0, lam[k]: -1.0}, lpsolve.LE, 0.0, "capI")
            for i in I:
                b.add_row({gI[I][k]: 1.0, g[i][k]: -1.0}, lpsolve.LE, 0.0, "sub")
        b.add_row({v: 1.0 for v in gI[I]}, lpsolve.GE, q, "target")
    sol = _solve(b, "higher-order", backend)
    x = sol.x
    csol = CompactSolution("boolean", x[lam].copy(), [x[g[i]].copy() for i in range(n)],
                           {I: x[idx] for I, idx in gI.items()}, [[0.0, 1.0]] * n)
    return _result(spec, obj, sol, csol, extract)


def expand_rank_objective(N: int, B: int, cap: int = PIECE_CAP) -> PiecewiseAffineObjective:
    """``min(sum xi, B)`` on Boolean points as a maximum of subset sums with ``|I| <= B``."""
    if not (1 <= B <= N):
        raise SpecError("need 1 <= B <= N")
    count = sum(math.comb(N, r) for r in range(B + 1))
    if count > cap:
        raise LatticeTooLargeError("rank objective needs %d pieces, cap is %d" % (count, cap))
    rows = []
    for r in range(B + 1):
        for I in itertools.combinations(range(N), r):
            a = np.zeros(N)
            a[list(I)] = 1.0
            rows.append(a)
    return PiecewiseAffineObjective(np.array(rows), np.zeros(len(rows)))


def hunter_worsley(p, p_pair=None) -> float:
    """``min(1, sum p - weight of a maximum spanning tree under p_ij)``.

    Missing pairs in ``p_pair`` count as zero; ``None`` means ``p_i p_j``.
    """
    p = [float(v) for v in p]
    n = len(p)
    if n < 1:
        raise SpecError("need at least one probability")
    W = np.zeros((n, n))
    for i in range(n):
        for j in range(i + 1, n):
            if p_pair is None:
                W[i, j] = p[i] * p[j]
            else:
                W[i, j] = float(p_pair.get((i, j), p_pair.get((j, i), 0.0)))
    # a maximum spanning tree is a minimum one under negated weights; zero edges add nothing
    tree = -minimum_spanning_tree(-W).toarray().sum() if n > 1 else 0.0
    return min(1.0, math.fsum(p) - tree)


# ---------------------------------------------------------------------------
# marginal moments plus cross-moment bounds


def solve_moment(spec: Moment, obj: PiecewiseAffineObjective, extract: bool = True,
                 backend: str = "auto") -> tuple[BoundResult, CompactSolution]:
    """Sharp bound under marginal moment equalities and cross-moment lower bounds.

    Pair variables here are point masses ``P(X_i = s, X_j = t, piece k)``,
    created only for pairs with a cross-moment bound.
    """
    require_valid(spec)
    _check_objective(obj, spec.n)
    K, n = obj.K, spec.n
    vals = spec.support.dims
    b = lpsolve.LPBuilder(maximize=True)
    lam = [b.add_var("lam%d" % k, obj=obj.b[k]) for k in range(K)]
    g = [[[b.add_var("g%d_%d_%d" % (i, k, s), obj=obj.a[k, i] * v) for s, v in enumerate(vals[i])]
          for k in range(K)] for i in range(n)]
    pairs = sorted(spec.cross_moments)
    gp = {(i, j): [[[b.add_var("gp%d_%d_%d_%d_%d" % (i, j, k, s, t)) for t in range(len(vals[j]))]
                    for s in range(len(vals[i]))] for k in range(K)] for i, j in pairs}
    b.add_row({v: 1.0 for v in lam}, lpsolve.EQ, 1.0, "lam")
    for i in range(n):
        tab = spec.table(i)
        for l, m in enumerate(spec.moments[i]):
            row = {g[i][k][s]: tab[l, s] for k in range(K) for s in range(len(vals[i])) if tab[l, s] != 0.0}
            b.add_row(row, lpsolve.EQ, m, "mom%d_%d" % (i, l))
    for i in range(n):
        for k in range(K):
            row = {v: 1.0 for v in g[i][k]}
            row[lam[k]] = -1.0
            b.add_row(row, lpsolve.EQ, 0.0, "cond%d_%d" % (i, k))
    for (i, j) in pairs:
        P = gp[(i, j)]
        for k in range(K):
            for t in range(len(vals[j])):
                row = {P[k][s][t]: 1.0 for s in range(len(vals[i]))}
                row[g[j][k][t]] = -1.0
                b.add_row(row, lpsolve.EQ, 0.0, "colsum")
            for s in range(len(vals[i])):
                row = {P[k][s][t]: 1.0 for t in range(len(vals[j]))}
                row[g[i][k][s]] = -1.0
                b.add_row(row, lpsolve.EQ, 0.0, "rowsum")
        row = {P[k][s][t]: vals[i][s] * vals[j][t] for k in range(K)
               for s in range(len(vals[i])) for t in range(len(vals[j])) if vals[i][s] * vals[j][t] != 0.0}
        b.add_row(row, lpsolve.GE, spec.cross_moments[(i, j)], "cross%d_%d" % (i, j))
    sol = _solve(b, "moment", backend)
    x = sol.x
    csol = CompactSolution("moment", x[lam].copy(),
                           [np.array([[x[v] for v in g[i][k]] for k in range(K)]) for i in range(n)],
                           {(i, j): np.array([[[x[v] for v in row] for row in P[k]] for k in range(K)])
                            for (i, j), P in gp.items()},
                           [list(v) for v in vals])
    return _result(spec, obj, sol, csol, extract)


# ---------------------------------------------------------------------------
# extraction


def extract_extremal(spec, obj: PiecewiseAffineObjective, sol: CompactSolution) -> JointDistribution:
    """Mixture over pieces of comonotone couplings of the conditional marginals.

    Components with ``lam[k] <= 1e-10`` are skipped and the remaining
    weights renormalized.
    """
    problems = sol.check()
    if problems:
        raise SpecError("inconsistent compact solution: " + "; ".join(problems))
    mass: dict = {}
    for k, lk in enumerate(sol.lam):
        if lk <= LAMBDA_TOL:
            continue
        conds = []
        for i, gi in enumerate(sol.gamma_uni):
            if sol.kind == "boolean":
                q = min(max(gi[k] / lk, 0.0), 1.0)
                probs = np.array([1.0 - q, q])
            else:
                probs = np.maximum(gi[k], 0.0)
                probs = probs / probs.sum() if probs.sum() > 0 else np.full(probs.size, 1.0 / probs.size)
            conds.append(DiscreteMarginal(sol.values[i], probs))
        for pt, w in comonotone_layers(conds):
            mass[pt] = mass.get(pt, 0.0) + lk * w
    total = math.fsum(mass.values())
    return JointDistribution(spec.support, {pt: w / total for pt, w in mass.items()})


# ---------------------------------------------------------------------------
# robust decisions over the bivariate set


@dataclass
class DualDroLayout:
    """Column indices of the decision variables and the epigraph variable."""

    x: list
    t: int
    n_vars: int


def build_dual_dro(spec: PodBivariate, X: Polyhedron,
                   objective: AffineDecisionObjective) -> tuple[lpsolve.LPModel, DualDroLayout]:
    """One LP in ``x`` and the dual multipliers of the bivariate compact LP.

    For fixed ``x`` it is the LP dual of :func:`solve_pod_bivariate` with
    ``a_k(x)`` and ``b_k(x)``, so minimizing jointly gives the robust decision.
    """
    require_valid(spec)
    if objective.N != spec.n or objective.d != X.d:
        raise SpecError("decision objective does not match the marginals or the decision space")
    K, n, d = objective.K, spec.n, objective.d
    vals = [m.values for m in spec.marginals]
    targets = spec.targets()
    bld = lpsolve.LPBuilder(maximize=False)
    xs = [bld.add_var("x%d" % r, X.lb[r], X.ub[r]) for r in range(d)]
    t = bld.add_var("t", -np.inf, np.inf, 1.0)
    y = [[bld.add_var("y%d_%d" % (i, s), -np.inf, np.inf, p) for s, p in enumerate(m.probs)]
         for i, m in enumerate(spec.marginals)]
    g = [[bld.add_var("g%d_%d" % (i, k), -np.inf, np.inf) for k in range(K)] for i in range(n)]
    h = {key: [bld.add_var("h%d_%d_%g_%g_%d" % (*key, k)) for k in range(K)] for key in targets}
    q = {key: [bld.add_var("q%d_%d_%g_%g_%d" % (*key, k)) for k in range(K)] for key in targets}
    l = {key: bld.add_var("l%d_%d_%g_%g" % key, 0.0, np.inf, -T) for key, T in targets.items()}
    for r in range(X.G.shape[0]):
        bld.add_row({xs[c]: v for c, v in enumerate(X.G[r]) if v != 0.0}, lpsolve.LE, X.h[r], "X%d" % r)
    for k in range(K):
        row = {t: 1.0}
        for i in range(n):
            row[g[i][k]] = -1.0
        for c in range(d):
            if objective.c[k, c] != 0.0:
                row[xs[c]] = -objective.c[k, c]
        bld.add_row(row, lpsolve.GE, objective.b0[k], "lam%d" % k)
    for key in targets:
        for k in range(K):
            bld.add_row({h[key][k]: 1.0, q[key][k]: 1.0, l[key]: -1.0}, lpsolve.GE, 0.0, "pair")
    for i in range(n):
        for s, v in enumerate(vals[i]):
            for k in range(K):
                row = {y[i][s]: 1.0, g[i][k]: 1.0}
                for key in targets:
                    a, bj, sa, tb = key
                    if a == i and sa <= v:
                        row[h[key][k]] = row.get(h[key][k], 0.0) - 1.0
                    if bj == i and tb <= v:
                        row[q[key][k]] = row.get(q[key][k], 0.0) - 1.0
                for c in range(d):
                    coef = objective.A[k, i, c] * v
                    if coef != 0.0:
                        row[xs[c]] = row.get(xs[c], 0.0) - coef
                bld.add_row(row, lpsolve.GE, objective.a0[k, i] * v, "gamma%d_%d_%d" % (i, s, k))
    model = bld.build()
    return model, DualDroLayout(xs, t, model.n_vars)


def solve_dual_dro(spec: PodBivariate, X: Polyhedron, objective: AffineDecisionObjective,
                   backend: str = "auto") -> DroResult:
    model, layout = build_dual_dro(spec, X, objective)
    try:
        sol = lpsolve.solve_lp(model, backend=backend)
    except lpsolve.LPError as exc:
        raise SolverError(str(exc)) from exc
    if sol.status == "infeasible":
        raise SpecError("decision set is empty")
    if sol.status == "unbounded":
        raise InfeasibleSpecError("bivariate ambiguity set is empty")
    if not sol.optimal:
        raise SolverError("robust LP is %s" % sol.status)
    return DroResult(sol.x[layout.x].copy(), sol.objective,
                     BoundResult(sol.objective, info={"lp": sol, "n_vars": model.n_vars, "n_rows": model.n_rows}))
