"""Brute-force ground truth: the full-lattice LP, expectations, membership."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from . import lpsolve
from .core import (LATTICE_CAP, AmbiguitySpec, BooleanHigherOrder, BoundResult, GenericSubmodular,
                   InfeasibleSpecError, JointDistribution, Moment, PiecewiseAffineObjective,
                   PodBivariate, SolverError, require_valid)
from .lattice import LatticeFunction

MEMBERSHIP_TOL = 1e-8


@dataclass(frozen=True)
class LatticeRow:
    """One linear constraint ``E[g(X)] (sense) rhs`` of an ambiguity set."""

    label: str
    g: Callable[[np.ndarray], np.ndarray]
    sense: str
    rhs: float


def _marginal_rows(marginals) -> list[LatticeRow]:
    rows = []
    for i, m in enumerate(marginals):
        for v, p in zip(m.values, m.probs):
            rows.append(LatticeRow("P(X%d = %g)" % (i, v),
                                   lambda pts, i=i, v=v: (pts[:, i] == v).astype(float),
                                   lpsolve.EQ, p))
    return rows


def spec_rows(spec: AmbiguitySpec) -> list[LatticeRow]:
    """The defining constraints of ``spec`` as functions on lattice points."""
    if isinstance(spec, GenericSubmodular):
        rows = []
        for j, con in enumerate(spec.constraints):
            f = con.f
            if isinstance(f, LatticeFunction) and f.batch is not None:
                g = lambda pts, f=f: np.asarray(f.batch(pts), dtype=float)
            else:
                g = lambda pts, f=f: np.fromiter((f(tuple(p)) for p in pts), float, len(pts))
            rows.append(LatticeRow(con.name or "E[f%d] <= gamma" % j, g, lpsolve.LE, con.gamma))
        return rows
    if isinstance(spec, PodBivariate):
        rows = _marginal_rows(spec.marginals)
        for (i, j, s, t), v in spec.targets().items():
            rows.append(LatticeRow("P(X%d >= %g, X%d >= %g)" % (i, s, j, t),
                                   lambda pts, i=i, j=j, s=s, t=t:
                                   ((pts[:, i] >= s) & (pts[:, j] >= t)).astype(float),
                                   lpsolve.GE, v))
        return rows
    if isinstance(spec, BooleanHigherOrder):
        rows = [LatticeRow("P(X%d = 1)" % i, lambda pts, i=i: (pts[:, i] == 1.0).astype(float),
                           lpsolve.EQ, p) for i, p in enumerate(spec.p)]
        for I, q in spec.targets().items():
            rows.append(LatticeRow("E[prod X%s]" % (I,),
                                   lambda pts, I=I: np.prod(pts[:, list(I)], axis=1),
                                   lpsolve.GE, q))
        return rows
    if isinstance(spec, Moment):
        rows = []
        for i in range(spec.n):
            tab = spec.table(i)
            vals = np.asarray(spec.support.dims[i])
            for l, m in enumerate(spec.moments[i]):
                def g(pts, i=i, h=tab[l], vals=vals):
                    k = np.searchsorted(vals, pts[:, i])
                    k = np.minimum(k, len(vals) - 1)
                    return np.where(vals[k] == pts[:, i], h[k], np.nan)
                rows.append(LatticeRow("E[h%d(X%d)]" % (l + 1, i), g, lpsolve.EQ, m))
        for (i, j), q in spec.cross_moments.items():
            rows.append(LatticeRow("E[X%d X%d]" % (i, j), lambda pts, i=i, j=j: pts[:, i] * pts[:, j],
                                   lpsolve.GE, q))
        return rows
    raise TypeError("unknown ambiguity set %s" % type(spec).__name__)


def _objective_values(obj, pts: np.ndarray) -> np.ndarray:
    if isinstance(obj, PiecewiseAffineObjective):
        return obj.values(pts)
    if isinstance(obj, LatticeFunction) and obj.batch is not None:
        return np.asarray(obj.batch(pts), dtype=float)
    return np.fromiter((obj(tuple(p)) for p in pts), float, len(pts))


def exponential_lp_bound(spec: AmbiguitySpec, obj, sense: str = "max", cap: int = LATTICE_CAP,
                         backend: str = "auto") -> BoundResult:
    """Optimize ``E[obj]`` over the ambiguity set with one variable per lattice point.

    ``obj`` may be a :class:`PiecewiseAffineObjective`, a
    :class:`LatticeFunction` or any callable on points.
    """
    if sense not in ("max", "min"):
        raise ValueError("sense must be 'max' or 'min'")
    require_valid(spec)
    support = spec.support
    pts = support.points(cap)
    P = len(pts)
    f = _objective_values(obj, pts)
    b = lpsolve.LPBuilder(maximize=(sense == "max"))
    for k in range(P):
        b.add_var("p%d" % k, 0.0, np.inf, f[k])
    b.add_row({k: 1.0 for k in range(P)}, lpsolve.EQ, 1.0, "normalization")
    for row in spec_rows(spec):
        coef = row.g(pts)
        b.add_row({k: c for k, c in enumerate(coef) if c != 0.0}, row.sense, row.rhs, row.label)
    model = b.build()
    try:
        sol = lpsolve.solve_lp(model, backend=backend)
    except lpsolve.LPError as exc:
        raise SolverError(str(exc)) from exc
    if sol.status == "infeasible":
        raise InfeasibleSpecError("ambiguity set is empty")
    if sol.status != "optimal":
        raise SolverError("full-lattice LP is %s" % sol.status)
    x = np.maximum(sol.x, 0.0)
    mass = {tuple(pts[k]): float(x[k]) for k in np.nonzero(x > 0)[0]}
    total = math.fsum(mass.values())
    mass = {pt: w / total for pt, w in mass.items()}
    joint = JointDistribution(support, mass)
    return BoundResult(sol.objective, extremal=joint,
                       info={"lp": sol, "n_vars": model.n_vars, "n_rows": model.n_rows, "sense": sense})


def expectation(joint: JointDistribution, f) -> float:
    """``sum f(xi) * mass(xi)`` over the support of ``joint``."""
    pts, w = joint.arrays()
    if len(w) == 0:
        return 0.0
    return math.fsum(_objective_values(f, pts) * w)


@dataclass
class MembershipReport:
    violations: list = field(default_factory=list)  # (label, magnitude)
    slacks: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def worst(self) -> float:
        return max((mag for _, mag in self.violations), default=0.0)

    def __bool__(self) -> bool:
        return self.ok


def check_membership(joint: JointDistribution, spec: AmbiguitySpec,
                     tol: float = MEMBERSHIP_TOL) -> MembershipReport:
    """Evaluate every defining constraint of ``spec`` on ``joint``.

    Equality rows must hold to ``tol``; inequality rows must have slack of at
    least ``-tol``.  ``slacks`` records the signed slack of every row.
    """
    report = MembershipReport()
    for problem in joint.validate():
        report.violations.append((problem, math.inf))
    pts, w = joint.arrays()
    if len(w) and not all(spec.support.contains(tuple(p)) for p in pts):
        report.violations.append(("distribution leaves the support of the ambiguity set", math.inf))
        return report
    for row in spec_rows(spec):
        val = math.fsum(row.g(pts) * w) if len(w) else 0.0
        if row.sense == lpsolve.EQ:
            slack = -abs(val - row.rhs)
        elif row.sense == lpsolve.GE:
            slack = val - row.rhs
        else:
            slack = row.rhs - val
        report.slacks[row.label] = slack
        if slack < -tol:
            report.violations.append((row.label, -slack))
    return report
