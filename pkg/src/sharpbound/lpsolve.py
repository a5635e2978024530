"""Dense linear programming kernel with primal and dual recovery.

The default engine is a two-phase primal simplex on a dense tableau. Models
too large for the dense tableau are routed to the HiGHS solver shipped with
scipy; both engines return the same :class:`LPSolution` contract and every
optimal answer is checked against its duality certificate before it is
returned.

Dual values follow the shadow-price convention: ``duals[r]`` is the rate of
change of the optimal objective with respect to the right-hand side of row
``r``, for both minimization and maximization models.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np
import scipy.sparse as sp

log = logging.getLogger(__name__)

LE, EQ, GE = "<=", "=", ">="
_SENSES = (LE, EQ, GE)

PIVOT_TOL = 1e-9
OPT_TOL = 1e-9
FEAS_TOL = 1e-9
RESIDUAL_TOL = 1e-7
CS_TOL = 1e-6
GAP_TOL = 1e-6
BLAND_AFTER = 50
DEFAULT_ITER_CAP = 10**6
# m * n above which "auto" hands the model to HiGHS
DENSE_CELL_CAP = 100_000
# m * n above which HiGHS runs its interior point method (with crossover) instead of dual simplex
IPM_CELL_CAP = 10**7


class LPError(Exception):
    """Base class for LP kernel failures."""


class LPNumericalError(LPError):
    """Pivoting stalled, hit the iteration cap, or a certificate check failed."""


@dataclass(frozen=True)
class LPModel:
    """A linear program ``opt c'x  s.t.  A x (sense) rhs,  lb <= x <= ub``."""

    c: np.ndarray
    A: sp.csr_matrix
    senses: tuple[str, ...]
    rhs: np.ndarray
    lb: np.ndarray
    ub: np.ndarray
    maximize: bool = False
    var_names: tuple[str, ...] | None = None
    row_names: tuple[str, ...] | None = None

    def __post_init__(self):
        m, n = self.A.shape
        if self.c.shape != (n,) or self.lb.shape != (n,) or self.ub.shape != (n,):
            raise ValueError("variable vectors must have length %d" % n)
        if self.rhs.shape != (m,) or len(self.senses) != m:
            raise ValueError("row data must have length %d" % m)
        if any(s not in _SENSES for s in self.senses):
            raise ValueError("unknown constraint sense")
        for arr in (self.c, self.rhs, self.lb, self.ub, self.A.data):
            if np.isnan(arr).any():
                raise ValueError("NaN in LP data")
        if np.isinf(self.c).any() or np.isinf(self.rhs).any() or np.isinf(self.A.data).any():
            raise ValueError("infinite coefficient in LP data")
        if (self.lb > self.ub).any():
            raise ValueError("lower bound exceeds upper bound")

    @property
    def n_vars(self) -> int:
        return self.A.shape[1]

    @property
    def n_rows(self) -> int:
        return self.A.shape[0]

    @classmethod
    def from_dense(cls, c, A, senses, rhs, lb=None, ub=None, maximize=False) -> "LPModel":
        c = np.asarray(c, dtype=float)
        n = c.shape[0]
        A = np.asarray(A, dtype=float).reshape(-1, n)
        lb = np.zeros(n) if lb is None else np.asarray(lb, dtype=float)
        ub = np.full(n, np.inf) if ub is None else np.asarray(ub, dtype=float)
        return cls(c, sp.csr_matrix(A), tuple(senses), np.asarray(rhs, dtype=float).reshape(-1),
                   lb, ub, maximize)

    def permute_rows(self, order: Sequence[int]) -> "LPModel":
        order = list(order)
        return LPModel(self.c, self.A[order], tuple(self.senses[i] for i in order),
                       self.rhs[order], self.lb, self.ub, self.maximize, self.var_names,
                       None if self.row_names is None else tuple(self.row_names[i] for i in order))


class LPBuilder:
    """Incremental construction of an :class:`LPModel` from named pieces."""

    def __init__(self, maximize: bool = False):
        self.maximize = maximize
        self._c: list[float] = []
        self._lb: list[float] = []
        self._ub: list[float] = []
        self._names: list[str] = []
        self._rows: list[int] = []
        self._cols: list[int] = []
        self._vals: list[float] = []
        self._senses: list[str] = []
        self._rhs: list[float] = []
        self._row_names: list[str] = []

    def add_var(self, name: str = "", lb: float = 0.0, ub: float = math.inf, obj: float = 0.0) -> int:
        self._c.append(float(obj))
        self._lb.append(float(lb))
        self._ub.append(float(ub))
        self._names.append(name)
        return len(self._c) - 1

    def add_row(self, coeffs: Mapping[int, float] | Iterable[tuple[int, float]], sense: str,
                rhs: float, name: str = "") -> int:
        if sense not in _SENSES:
            raise ValueError(sense)
        r = len(self._rhs)
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        for j, v in items:
            if v != 0.0:
                self._rows.append(r)
                self._cols.append(j)
                self._vals.append(float(v))
        self._senses.append(sense)
        self._rhs.append(float(rhs))
        self._row_names.append(name)
        return r

    @property
    def n_vars(self) -> int:
        return len(self._c)

    @property
    def n_rows(self) -> int:
        return len(self._rhs)

    def build(self) -> LPModel:
        A = sp.csr_matrix((self._vals, (self._rows, self._cols)),
                          shape=(len(self._rhs), len(self._c)))
        A.sum_duplicates()
        return LPModel(np.array(self._c, dtype=float), A, tuple(self._senses),
                       np.array(self._rhs, dtype=float), np.array(self._lb, dtype=float),
                       np.array(self._ub, dtype=float), self.maximize, tuple(self._names),
                       tuple(self._row_names))


@dataclass
class LPSolution:
    status: str  # "optimal" | "infeasible" | "unbounded"
    x: np.ndarray | None = None
    duals: np.ndarray | None = None
    objective: float = math.nan
    iterations: int = 0
    backend: str = ""
    certificate: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def check_certificate(model: LPModel, x: np.ndarray, y: np.ndarray) -> dict:
    """Primal residual, complementary-slackness residual and duality gap.

    ``y`` uses the shadow-price convention of :class:`LPSolution`.
    """
    sign = -1.0 if model.maximize else 1.0
    c = sign * model.c          # min form
    ymin = sign * y
    A = model.A
    ax = A @ x
    senses = np.array(model.senses)
    viol = np.zeros(model.n_rows)
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    viol[le] = np.maximum(ax[le] - model.rhs[le], 0.0)
    viol[ge] = np.maximum(model.rhs[ge] - ax[ge], 0.0)
    viol[eq] = np.abs(ax[eq] - model.rhs[eq])
    bviol = np.maximum(model.lb - x, 0.0) + np.maximum(x - model.ub, 0.0)
    primal_res = float(max(viol.max(initial=0.0), bviol.max(initial=0.0)))

    # row dual signs in min form: >= rows y >= 0, <= rows y <= 0
    dual_sign_viol = float(max(np.maximum(-ymin[ge], 0).max(initial=0.0),
                               np.maximum(ymin[le], 0).max(initial=0.0)))
    d = c - A.T @ ymin
    dplus = np.where(d > 0, d, 0.0)
    dminus = np.where(d < 0, -d, 0.0)
    # reduced cost pushing against an infinite bound is a dual infeasibility
    dual_inf = float(max(np.where(np.isinf(model.lb), dplus, 0).max(initial=0.0),
                         np.where(np.isinf(model.ub), dminus, 0).max(initial=0.0)))
    lbf = np.where(np.isinf(model.lb), 0.0, model.lb)
    ubf = np.where(np.isinf(model.ub), 0.0, model.ub)
    dual_obj = float(model.rhs @ ymin + dplus @ lbf - dminus @ ubf)
    primal_obj = float(c @ x)
    slack = ax - model.rhs
    cs_rows = np.abs(ymin * np.where(eq, 0.0, slack))
    cs_vars = dplus * np.abs(x - lbf) * np.isfinite(model.lb) + dminus * np.abs(ubf - x) * np.isfinite(model.ub)
    cs = float(max(cs_rows.max(initial=0.0), cs_vars.max(initial=0.0)))
    return {
        "primal_residual": primal_res,
        "dual_residual": max(dual_sign_viol, dual_inf),
        "complementarity": cs,
        "gap": abs(primal_obj - dual_obj),
        "primal_objective": sign * primal_obj,
        "dual_objective": sign * dual_obj,
    }


def certificate_ok(cert: dict, objective: float) -> bool:
    scale = 1.0 + abs(objective)
    return (cert["primal_residual"] <= RESIDUAL_TOL * scale
            and cert["dual_residual"] <= RESIDUAL_TOL * scale
            and cert["complementarity"] <= CS_TOL * scale
            and cert["gap"] <= GAP_TOL * scale)


def solve_lp(model: LPModel, backend: str = "auto", iter_cap: int = DEFAULT_ITER_CAP,
             check: bool = True) -> LPSolution:
    """Solve ``model``; ``backend`` is ``"simplex"``, ``"highs"`` or ``"auto"``.

    ``"auto"`` uses the dense simplex for small models and HiGHS otherwise;
    it also falls back to HiGHS when the simplex certificate fails.
    """
    if backend == "auto":
        if model.n_rows * model.n_vars > DENSE_CELL_CAP:
            return solve_lp(model, "highs", iter_cap, check)
        try:
            return solve_lp(model, "simplex", iter_cap, check)
        except LPNumericalError:
            return solve_lp(model, "highs", iter_cap, check)
    if backend == "simplex":
        sol = _DenseSimplex(model, iter_cap).solve()
    elif backend == "highs":
        sol = _solve_highs(model)
    else:
        raise ValueError("unknown LP backend %r" % backend)
    if sol.optimal:
        sol.certificate = check_certificate(model, sol.x, sol.duals)
        if check and not certificate_ok(sol.certificate, sol.objective):
            raise LPNumericalError("certificate check failed (%s): %s" % (backend, sol.certificate))
    return sol


# ---------------------------------------------------------------------------
# dense two-phase simplex


class _DenseSimplex:
    def __init__(self, model: LPModel, iter_cap: int):
        self.model = model
        self.iter_cap = iter_cap
        self.iterations = 0

    def _standard_form(self):
        """Map to ``min c's  s.t.  S s = b, s >= 0`` with ``b >= 0``."""
        mdl = self.model
        n = mdl.n_vars
        A = mdl.A.toarray()
        c = -mdl.c if mdl.maximize else mdl.c.copy()
        cols = []         # (orig j, multiplier) per standard column
        shift = np.zeros(n)
        extra_rows = []   # (std col, bound) for finite boxes
        for j in range(n):
            lo, hi = mdl.lb[j], mdl.ub[j]
            if np.isfinite(lo):
                shift[j] = lo
                cols.append((j, 1.0))
                if np.isfinite(hi):
                    extra_rows.append((len(cols) - 1, hi - lo))
            elif np.isfinite(hi):
                shift[j] = hi
                cols.append((j, -1.0))
            else:
                cols.append((j, 1.0))
                cols.append((j, -1.0))
        ns = len(cols)
        m0 = mdl.n_rows
        m = m0 + len(extra_rows)
        idx = np.array([j for j, _ in cols], dtype=int)
        mult = np.array([s for _, s in cols])
        S = np.zeros((m, ns))
        S[:m0] = A[:, idx] * mult
        b = np.empty(m)
        b[:m0] = mdl.rhs - A @ shift
        senses = list(mdl.senses)
        for r, (col, bound) in enumerate(extra_rows):
            S[m0 + r, col] = 1.0
            b[m0 + r] = bound
            senses.append(LE)
        cs = c[idx] * mult
        obj_const = float(c @ shift)
        return S, b, senses, cs, obj_const, idx, mult, shift, m0

    def solve(self) -> LPSolution:
        S, b, senses, cs, obj_const, idx, mult, shift, m0 = self._standard_form()
        m, ns = S.shape
        n_slack = sum(1 for s in senses if s != EQ)
        ncols = ns + n_slack + m  # structural, slack, artificial
        T = np.zeros((m, ncols + 1))
        T[:, :ns] = S
        k = ns
        slack_col = np.full(m, -1)
        for r, s in enumerate(senses):
            if s == LE:
                T[r, k] = 1.0
            elif s == GE:
                T[r, k] = -1.0
            if s != EQ:
                slack_col[r] = k
                k += 1
        T[:, -1] = b
        row_sign = np.where(b < 0, -1.0, 1.0)
        T *= row_sign[:, None]
        art0 = ns + n_slack
        basis = np.empty(m, dtype=int)
        init_col = np.empty(m, dtype=int)
        for r in range(m):
            sc = slack_col[r]
            if sc >= 0 and T[r, sc] > 0:
                basis[r] = sc
            else:
                basis[r] = art0 + r
            T[r, art0 + r] = 1.0
            init_col[r] = basis[r]
        art_rows = basis >= art0
        banned = np.zeros(ncols, dtype=bool)
        # artificial columns of slack-started rows never enter
        banned[art0:] = True
        banned[art0 + np.nonzero(art_rows)[0]] = False

        cost_full = np.zeros(ncols)
        cost_full[:ns] = cs

        # phase 1
        if art_rows.any():
            c1 = np.zeros(ncols)
            c1[art0:] = 1.0
            c1[banned] = 0.0
            status = self._run(T, basis, c1, banned)
            if T[:, -1] @ c1[basis] > FEAS_TOL * max(1.0, np.abs(b).max(initial=0.0)):
                return LPSolution("infeasible", iterations=self.iterations, backend="simplex")
            self._drive_out_artificials(T, basis, art0)
        banned[art0:] = True
        status = self._run(T, basis, cost_full, banned)
        if status == "unbounded":
            return LPSolution("unbounded", iterations=self.iterations, backend="simplex")

        xs, y_std = self._refine(T, basis, S, b, senses, row_sign, cost_full, art0, init_col)
        x = shift.copy()
        np.add.at(x, idx, mult * xs[:ns])
        y = y_std[:m0]
        if self.model.maximize:
            y = -y
        obj = float(self.model.c @ x)
        return LPSolution("optimal", x=x, duals=y, objective=obj,
                          iterations=self.iterations, backend="simplex")

    def _run(self, T, basis, cost, banned) -> str:
        ncols = T.shape[1] - 1
        d = cost - cost[basis] @ T[:, :ncols]
        degenerate_run = 0
        while True:
            if self.iterations >= self.iter_cap:
                raise LPNumericalError("simplex iteration cap %d exceeded" % self.iter_cap)
            cand = np.where(banned, 0.0, d)
            bland = degenerate_run >= BLAND_AFTER
            if bland:
                neg = np.nonzero(cand < -OPT_TOL)[0]
                if neg.size == 0:
                    return "optimal"
                j = int(neg[0])
            else:
                j = int(np.argmin(cand))
                if cand[j] >= -OPT_TOL:
                    return "optimal"
            col = T[:, j]
            pos = col > PIVOT_TOL
            if not pos.any():
                return "unbounded"
            rows = np.nonzero(pos)[0]
            ratios = T[rows, -1] / col[rows]
            rmin = ratios.min()
            ties = rows[ratios <= rmin + 1e-12 * max(1.0, abs(rmin))]
            if bland:
                r = int(ties[np.argmin(basis[ties])])
            else:
                r = int(ties[np.argmax(col[ties])])
            degenerate_run = degenerate_run + 1 if rmin <= 1e-12 else 0
            self._pivot(T, r, j)
            d -= d[j] * T[r, :ncols]
            basis[r] = j
            self.iterations += 1

    @staticmethod
    def _pivot(T, r, j):
        T[r] /= T[r, j]
        col = T[:, j].copy()
        col[r] = 0.0
        nz = np.nonzero(col)[0]
        if nz.size:
            T[nz] -= np.outer(col[nz], T[r])
        T[:, -1] = np.where(np.abs(T[:, -1]) < 1e-13, 0.0, T[:, -1])

    def _drive_out_artificials(self, T, basis, art0):
        for r in range(T.shape[0]):
            if basis[r] < art0:
                continue
            row = np.abs(T[r, :art0])
            j = int(np.argmax(row))
            if row[j] > PIVOT_TOL:
                self._pivot(T, r, j)
                basis[r] = j
                self.iterations += 1
            # otherwise the row is redundant; the artificial stays basic at zero

    @staticmethod
    def _refine(T, basis, S, b, senses, row_sign, cost, art0, init_col):
        """Recompute basic values and duals from the original columns."""
        m = T.shape[0]
        ncols = T.shape[1] - 1
        full = np.zeros((m, ncols))
        full[:, :S.shape[1]] = S
        k = S.shape[1]
        for r, s in enumerate(senses):
            if s == LE:
                full[r, k] = 1.0
                k += 1
            elif s == GE:
                full[r, k] = -1.0
                k += 1
        full *= row_sign[:, None]
        full[:, art0:] = np.eye(m)
        bb = b * row_sign
        B = full[:, basis]
        if m == 0:
            return np.zeros(ncols), np.zeros(0)
        try:
            xb = np.linalg.solve(B, bb)
            y = np.linalg.solve(B.T, cost[basis])
            ok = np.isfinite(xb).all() and np.isfinite(y).all()
        except np.linalg.LinAlgError:
            ok = False
        if not ok or np.abs(xb - T[:, -1]).max(initial=0.0) > 1e-6:
            xb = T[:, -1].copy()
            binv = T[:, init_col]
            y = cost[basis] @ binv
        xb = np.where(np.abs(xb) < 1e-14, 0.0, xb)
        xs = np.zeros(ncols)
        xs[basis] = np.maximum(xb, 0.0)
        return xs, y * row_sign


# ---------------------------------------------------------------------------
# HiGHS via scipy


def _solve_highs(model: LPModel) -> LPSolution:
    from scipy.optimize import linprog

    c = -model.c if model.maximize else model.c
    senses = np.array(model.senses)
    le, ge, eq = senses == LE, senses == GE, senses == EQ
    A = model.A.tocsr()
    ub_rows = np.nonzero(le | ge)[0]
    sgn = np.where(ge[ub_rows], -1.0, 1.0)
    A_ub = sp.diags(sgn) @ A[ub_rows] if ub_rows.size else None
    b_ub = sgn * model.rhs[ub_rows] if ub_rows.size else None
    eq_rows = np.nonzero(eq)[0]
    A_eq = A[eq_rows] if eq_rows.size else None
    b_eq = model.rhs[eq_rows] if eq_rows.size else None
    bounds = np.column_stack([np.where(np.isinf(model.lb), -np.inf, model.lb),
                              np.where(np.isinf(model.ub), np.inf, model.ub)])
    opts = {"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10}
    big = model.n_rows * model.n_vars > IPM_CELL_CAP
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds,
                  method="highs-ipm" if big else "highs", options=opts)
    if big and res.status == 4:
        res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq, bounds=bounds, method="highs", options=opts)
    if res.status == 2:
        return LPSolution("infeasible", backend="highs")
    if res.status == 3:
        return LPSolution("unbounded", backend="highs")
    if res.status != 0:
        raise LPNumericalError("HiGHS failed: %s" % res.message)
    y = np.zeros(model.n_rows)
    if ub_rows.size:
        y[ub_rows] = sgn * res.ineqlin.marginals
    if eq_rows.size:
        y[eq_rows] = res.eqlin.marginals
    if model.maximize:
        y = -y
    x = np.asarray(res.x, dtype=float)
    return LPSolution("optimal", x=x, duals=y, objective=float(model.c @ x),
                      iterations=int(getattr(res, "nit", 0)), backend="highs")


# ---------------------------------------------------------------------------
# debugging aid


def write_lp_file(model: LPModel, path) -> None:
    """Dump ``model`` in CPLEX LP text format for cross-checking elsewhere."""
    names = model.var_names or tuple("x%d" % j for j in range(model.n_vars))
    names = [_lp_name(nm, j) for j, nm in enumerate(names)]

    def expr(coefs):
        parts = []
        for j, v in coefs:
            parts.append("%s %.17g %s" % ("-" if v < 0 else "+", abs(v), names[j]))
        return " ".join(parts) if parts else "0 %s" % names[0]

    A = model.A.tocsr()
    lines = ["Maximize" if model.maximize else "Minimize",
             " obj: " + expr([(j, v) for j, v in enumerate(model.c) if v != 0]),
             "Subject To"]
    for r in range(model.n_rows):
        lo, hi = A.indptr[r], A.indptr[r + 1]
        row = list(zip(A.indices[lo:hi], A.data[lo:hi]))
        label = _lp_name(model.row_names[r], r, "r") if model.row_names else "r%d" % r
        lines.append(" %s: %s %s %.17g" % (label, expr(row), model.senses[r], model.rhs[r]))
    lines.append("Bounds")
    for j in range(model.n_vars):
        lo, hi = model.lb[j], model.ub[j]
        if np.isinf(lo) and np.isinf(hi):
            lines.append(" %s free" % names[j])
        else:
            lo_s = "-inf" if np.isinf(lo) else "%.17g" % lo
            hi_s = "+inf" if np.isinf(hi) else "%.17g" % hi
            lines.append(" %s <= %s <= %s" % (lo_s, names[j], hi_s))
    lines.append("End")
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _lp_name(name: str, j: int, prefix: str = "v") -> str:
    cleaned = "".join(ch if ch.isalnum() or ch in "_." else "_" for ch in name)
    return "%s%d_%s" % (prefix, j, cleaned) if cleaned else "%s%d" % (prefix, j)
