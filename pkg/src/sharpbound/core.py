"""Domain types shared by every bound solver.

Lattice points are plain tuples of floats.  Whenever a lattice is enumerated
the points come out in mixed-radix order with the last dimension varying
fastest, which is also lexicographic order on the points themselves.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Mapping, Sequence, Union

import numpy as np

PROB_TOL = 1e-9
LATTICE_CAP = 10**6

Point = tuple


class SpecError(ValueError):
    """A problem description violates a structural invariant."""


class InfeasibleSpecError(Exception):
    """The ambiguity set is empty."""


class LatticeTooLargeError(ValueError):
    """An operation would have to enumerate more lattice points than allowed."""


class SolverError(RuntimeError):
    """A bound solver failed to converge or its LP failed numerically."""


@dataclass(frozen=True)
class ProductSupport:
    """The product lattice ``Xi_1 x ... x Xi_N`` of finite value sets."""

    dims: tuple

    def __post_init__(self):
        dims = tuple(tuple(float(v) for v in d) for d in self.dims)
        if not dims:
            raise SpecError("support needs at least one dimension")
        for i, d in enumerate(dims):
            if not d:
                raise SpecError("support dimension %d is empty" % i)
            if not all(math.isfinite(v) for v in d):
                raise SpecError("support dimension %d has a non-finite value" % i)
            if any(b <= a for a, b in zip(d, d[1:])):
                raise SpecError("support dimension %d is not strictly increasing" % i)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def boolean(cls, n: int) -> "ProductSupport":
        return cls(((0.0, 1.0),) * n)

    @property
    def n(self) -> int:
        return len(self.dims)

    @property
    def sizes(self) -> tuple[int, ...]:
        return tuple(len(d) for d in self.dims)

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    def check_cap(self, cap: int = LATTICE_CAP) -> None:
        if self.size > cap:
            raise LatticeTooLargeError("lattice has %d points, cap is %d" % (self.size, cap))

    @cached_property
    def _points(self) -> np.ndarray:
        return np.array(list(itertools.product(*self.dims)), dtype=float).reshape(-1, self.n)

    def points(self, cap: int = LATTICE_CAP) -> np.ndarray:
        """All lattice points as a ``(size, N)`` array."""
        self.check_cap(cap)
        return self._points

    def iter_points(self, cap: int = LATTICE_CAP):
        self.check_cap(cap)
        return itertools.product(*self.dims)

    @cached_property
    def _lookup(self) -> tuple[dict, ...]:
        return tuple({v: k for k, v in enumerate(d)} for d in self.dims)

    def value_index(self, i: int, value: float) -> int:
        try:
            return self._lookup[i][float(value)]
        except KeyError:
            raise SpecError("value %r is not in support dimension %d" % (value, i)) from None

    def contains(self, point) -> bool:
        if len(point) != self.n:
            return False
        return all(float(v) in self._lookup[i] for i, v in enumerate(point))

    def flat_index(self, point) -> int:
        idx = 0
        for i, v in enumerate(point):
            idx = idx * len(self.dims[i]) + self.value_index(i, v)
        return idx

    def flat_indices(self, points) -> np.ndarray:
        """Vectorized :meth:`flat_index` for a ``(P, N)`` array."""
        pts = np.asarray(points, dtype=float).reshape(-1, self.n)
        idx = np.zeros(len(pts), dtype=np.int64)
        for i, d in enumerate(self.dims):
            vals = np.asarray(d)
            k = np.minimum(np.searchsorted(vals, pts[:, i]), len(vals) - 1)
            if not np.array_equal(vals[k], pts[:, i]):
                raise SpecError("a point is off support dimension %d" % i)
            idx = idx * len(d) + k
        return idx

    @property
    def bottom(self) -> Point:
        return tuple(d[0] for d in self.dims)

    @property
    def top(self) -> Point:
        return tuple(d[-1] for d in self.dims)


@dataclass(frozen=True)
class DiscreteMarginal:
    """A univariate pmf; zero-probability atoms are dropped on construction."""

    values: tuple
    probs: tuple

    def __post_init__(self):
        values = tuple(float(v) for v in self.values)
        probs = tuple(float(p) for p in self.probs)
        if len(values) != len(probs):
            raise SpecError("marginal values and probabilities differ in length")
        if not all(math.isfinite(v) for v in values + probs):
            raise SpecError("marginal has a non-finite entry")
        if any(b <= a for a, b in zip(values, values[1:])):
            raise SpecError("marginal values are not strictly increasing")
        if any(p < 0 for p in probs):
            raise SpecError("marginal has a negative probability")
        keep = [k for k, p in enumerate(probs) if p > 0]
        object.__setattr__(self, "values", tuple(values[k] for k in keep))
        object.__setattr__(self, "probs", tuple(probs[k] for k in keep))

    @classmethod
    def bernoulli(cls, p: float) -> "DiscreteMarginal":
        return cls((0.0, 1.0), (1.0 - p, p))

    @property
    def total(self) -> float:
        return math.fsum(self.probs)

    @property
    def mean(self) -> float:
        return math.fsum(v * p for v, p in zip(self.values, self.probs))

    def moment(self, order: int) -> float:
        return math.fsum(v**order * p for v, p in zip(self.values, self.probs))

    def upper_tail(self, value: float) -> float:
        """``P(X >= value)``."""
        return math.fsum(p for v, p in zip(self.values, self.probs) if v >= value)

    def lower_tail(self, value: float) -> float:
        """``P(X <= value)``."""
        return math.fsum(p for v, p in zip(self.values, self.probs) if v <= value)


def support_of(marginals: Sequence[DiscreteMarginal]) -> ProductSupport:
    return ProductSupport(tuple(m.values for m in marginals))


@dataclass(frozen=True)
class PiecewiseAffineObjective:
    """``f(xi) = max_k (a_k' xi + b_k)`` with ``a`` stored as a ``K x N`` array."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.a, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        if a.ndim != 2 or b.ndim != 1 or a.shape[0] != b.shape[0] or a.shape[0] < 1:
            raise SpecError("objective needs a K x N matrix and K offsets with K >= 1")
        if not (np.isfinite(a).all() and np.isfinite(b).all()):
            raise SpecError("objective has non-finite coefficients")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def K(self) -> int:
        return self.a.shape[0]

    @property
    def N(self) -> int:
        return self.a.shape[1]

    def piece_values(self, points: np.ndarray) -> np.ndarray:
        """``(P, K)`` array of every piece at every point."""
        return np.asarray(points, dtype=float) @ self.a.T + self.b

    def values(self, points: np.ndarray) -> np.ndarray:
        return self.piece_values(points).max(axis=1)

    def argmax(self, points: np.ndarray) -> np.ndarray:
        """0-based smallest maximizing piece at every point."""
        pv = self.piece_values(points)
        top = pv.max(axis=1, keepdims=True)
        return np.argmax(pv >= top - 1e-12 * (1.0 + np.abs(top)), axis=1)

    def __call__(self, xi) -> float:
        return evaluate_objective(self, xi)[0]


def evaluate_objective(obj: PiecewiseAffineObjective, xi) -> tuple[float, int]:
    """Value of ``obj`` at ``xi`` and the 1-based smallest maximizing piece."""
    xi = np.asarray(xi, dtype=float).reshape(-1)
    if xi.shape[0] != obj.N:
        raise SpecError("point has dimension %d, objective expects %d" % (xi.shape[0], obj.N))
    pts = xi[None, :]
    k = int(obj.argmax(pts)[0])
    return float(obj.piece_values(pts)[0, k]), k + 1


@dataclass(frozen=True)
class AffineDecisionObjective:
    """Pieces ``a_k(x)' xi + b_k(x)`` with ``a_k(x) = A[k] x + a0[k]`` and ``b_k(x) = c[k]' x + b0[k]``.

    Shapes: ``A`` is ``(K, N, d)``, ``a0`` is ``(K, N)``, ``c`` is ``(K, d)`` and
    ``b0`` is ``(K,)``.
    """

    A: np.ndarray
    a0: np.ndarray
    c: np.ndarray
    b0: np.ndarray

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        if A.ndim != 3:
            raise SpecError("A must have shape (K, N, d)")
        K, N, d = A.shape
        a0 = np.asarray(self.a0, dtype=float).reshape(K, N)
        c = np.asarray(self.c, dtype=float).reshape(K, d)
        b0 = np.asarray(self.b0, dtype=float).reshape(K)
        for arr in (A, a0, c, b0):
            if not np.isfinite(arr).all():
                raise SpecError("decision objective has non-finite coefficients")
            arr.setflags(write=False)
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "a0", a0)
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "b0", b0)

    @property
    def K(self) -> int:
        return self.A.shape[0]

    @property
    def N(self) -> int:
        return self.A.shape[1]

    @property
    def d(self) -> int:
        return self.A.shape[2]

    def at(self, x) -> PiecewiseAffineObjective:
        x = np.asarray(x, dtype=float).reshape(self.d)
        return PiecewiseAffineObjective(self.A @ x + self.a0, self.c @ x + self.b0)


@dataclass(frozen=True)
class Polyhedron:
    """``{x : G x <= h, lb <= x <= ub}``; ``G`` may have zero rows."""

    G: np.ndarray
    h: np.ndarray
    lb: np.ndarray
    ub: np.ndarray

    def __post_init__(self):
        lb = np.asarray(self.lb, dtype=float).reshape(-1)
        ub = np.asarray(self.ub, dtype=float).reshape(-1)
        d = lb.size
        G = np.asarray(self.G, dtype=float).reshape(-1, d)
        h = np.asarray(self.h, dtype=float).reshape(-1)
        if ub.size != d or h.size != G.shape[0]:
            raise SpecError("polyhedron blocks have inconsistent shapes")
        if np.isnan(lb).any() or np.isnan(ub).any() or not np.isfinite(G).all() or not np.isfinite(h).all():
            raise SpecError("polyhedron has invalid entries")
        if (lb > ub).any():
            raise SpecError("polyhedron has lb > ub")
        object.__setattr__(self, "G", G)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "lb", lb)
        object.__setattr__(self, "ub", ub)

    @classmethod
    def box(cls, lb, ub) -> "Polyhedron":
        lb = np.asarray(lb, dtype=float).reshape(-1)
        return cls(np.zeros((0, lb.size)), np.zeros(0), lb, ub)

    @classmethod
    def point(cls, x0) -> "Polyhedron":
        return cls.box(x0, x0)

    @property
    def d(self) -> int:
        return self.lb.size

    def contains(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float).reshape(self.d)
        return bool((x >= self.lb - tol).all() and (x <= self.ub + tol).all()
                    and (self.G @ x <= self.h + tol).all())


@dataclass(frozen=True)
class SubmodularConstraint:
    """``E[f(xi)] <= gamma`` for a submodular evaluation oracle ``f``."""

    f: Callable[[Point], float]
    gamma: float
    name: str = ""


# ---------------------------------------------------------------------------
# ambiguity sets


@dataclass(frozen=True)
class GenericSubmodular:
    """Distributions on ``support`` meeting upper bounds on submodular expectations.

    ``marginals`` is set when the constraints embed a Frechet set; solvers use
    it for warm starts and for the comonotone feasibility cross-check.
    """

    support: ProductSupport
    constraints: tuple = ()
    marginals: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "constraints", tuple(self.constraints))
        if self.marginals is not None:
            object.__setattr__(self, "marginals", tuple(self.marginals))


@dataclass(frozen=True)
class PodBivariate:
    """Fixed univariate marginals plus lower bounds on bivariate upper tails.

    ``pair_targets`` maps ``(i, j, xi_i, xi_j)`` with ``i < j`` to a lower bound
    on ``P(X_i >= xi_i, X_j >= xi_j)``.  ``None`` means the POD default: every
    grid pair with the product of the marginal tails as right-hand side.  Only
    the supplied keys generate constraints, which covers restricted grids and
    concordance targets.
    """

    marginals: tuple
    pair_targets: Mapping | None = None

    def __post_init__(self):
        object.__setattr__(self, "marginals", tuple(self.marginals))

    @property
    def support(self) -> ProductSupport:
        return support_of(self.marginals)

    @property
    def n(self) -> int:
        return len(self.marginals)

    def targets(self) -> dict:
        if self.pair_targets is None:
            return pod_default_targets(self.marginals)
        return {(int(i), int(j), float(s), float(t)): float(v)
                for (i, j, s, t), v in self.pair_targets.items()}


def pod_default_targets(marginals: Sequence[DiscreteMarginal], restrict: Mapping | None = None) -> dict:
    """Product-of-tails POD targets, optionally only on ``restrict[(i, j)]`` pairs."""
    out = {}
    n = len(marginals)
    for i in range(n):
        for j in range(i + 1, n):
            mi, mj = marginals[i], marginals[j]
            grid = (restrict.get((i, j), ()) if restrict is not None
                    else itertools.product(mi.values, mj.values))
            for s, t in grid:
                out[(i, j, float(s), float(t))] = mi.upper_tail(s) * mj.upper_tail(t)
    return out


@dataclass(frozen=True)
class BooleanHigherOrder:
    """Bernoulli marginals ``p`` plus lower bounds on ``E[prod_{i in I} X_i]``.

    ``q_targets`` maps sorted index tuples to bounds; entries with
    ``|I| > M`` are ignored so one target map can serve a whole sweep over M.
    ``None`` means the PUOD default ``prod_{i in I} p_i`` for all ``|I| <= M``.
    """

    p: tuple
    M: int
    q_targets: Mapping | None = None

    def __post_init__(self):
        object.__setattr__(self, "p", tuple(float(v) for v in self.p))
        object.__setattr__(self, "M", int(self.M))

    @property
    def n(self) -> int:
        return len(self.p)

    @property
    def support(self) -> ProductSupport:
        return ProductSupport.boolean(self.n)

    @property
    def marginals(self) -> tuple:
        return tuple(DiscreteMarginal.bernoulli(v) for v in self.p)

    def subsets(self) -> list[tuple[int, ...]]:
        """Subsets with ``1 < |I| <= M`` in size-then-lexicographic order."""
        out = []
        for size in range(2, min(self.M, self.n) + 1):
            out.extend(itertools.combinations(range(self.n), size))
        return out

    def targets(self) -> dict:
        if self.q_targets is None:
            return {I: math.prod(self.p[i] for i in I) for I in self.subsets()}
        out = {}
        for I, v in self.q_targets.items():
            I = tuple(sorted(int(i) for i in I))
            if 1 < len(I) <= self.M:
                out[I] = float(v)
        return dict(sorted(out.items(), key=lambda kv: (len(kv[0]), kv[0])))


@dataclass(frozen=True)
class Moment:
    """Marginal moment equalities and cross-moment lower bounds.

    ``moments[i][l]`` is ``E[h_l(X_i)]``; with ``functions=None`` the test
    functions are the raw powers ``x**(l+1)``.  Otherwise ``functions[i]`` is
    an ``(L, |Xi_i|)`` table of ``h_l`` evaluated on the support of ``X_i``.
    ``cross_moments`` maps ``(i, j)``, ``i < j``, to a lower bound on
    ``E[X_i X_j]``; only listed pairs are constrained.
    """

    support: ProductSupport
    moments: tuple
    cross_moments: Mapping = field(default_factory=dict)
    functions: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "moments", tuple(tuple(float(v) for v in row) for row in self.moments))
        object.__setattr__(self, "cross_moments",
                           {(int(i), int(j)): float(v) for (i, j), v in dict(self.cross_moments).items()})
        if self.functions is not None:
            object.__setattr__(self, "functions",
                               tuple(np.asarray(t, dtype=float).reshape(len(self.moments[i]), -1)
                                     for i, t in enumerate(self.functions)))

    @property
    def n(self) -> int:
        return self.support.n

    def table(self, i: int) -> np.ndarray:
        """``(L_i, |Xi_i|)`` values of the moment functions of coordinate ``i``."""
        if self.functions is not None:
            return self.functions[i]
        vals = np.asarray(self.support.dims[i])
        L = len(self.moments[i])
        return np.vstack([vals ** (l + 1) for l in range(L)]) if L else np.zeros((0, vals.size))


AmbiguitySpec = Union[GenericSubmodular, PodBivariate, BooleanHigherOrder, Moment]


def spec_support(spec: AmbiguitySpec) -> ProductSupport:
    return spec.support


# ---------------------------------------------------------------------------
# distributions and results


@dataclass(frozen=True)
class JointDistribution:
    """A sparse pmf over points of ``support``."""

    support: ProductSupport
    mass: Mapping

    def __post_init__(self):
        mass = {}
        for pt, w in dict(self.mass).items():
            pt = tuple(float(v) for v in pt)
            mass[pt] = mass.get(pt, 0.0) + float(w)
        object.__setattr__(self, "mass", dict(sorted(mass.items())))

    def validate(self) -> list[str]:
        problems = []
        for pt, w in self.mass.items():
            if not self.support.contains(pt):
                problems.append("point %r is not on the lattice" % (pt,))
            if w < -PROB_TOL:
                problems.append("negative mass %g at %r" % (w, pt))
        total = math.fsum(self.mass.values())
        if abs(total - 1.0) > PROB_TOL:
            problems.append("masses sum to %.12g" % total)
        return problems

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        pts = np.array(list(self.mass.keys()), dtype=float).reshape(-1, self.support.n)
        return pts, np.array(list(self.mass.values()), dtype=float)

    def marginal(self, i: int) -> DiscreteMarginal:
        acc = {v: 0.0 for v in self.support.dims[i]}
        for pt, w in self.mass.items():
            acc[pt[i]] += w
        vals = sorted(acc)
        return DiscreteMarginal(vals, [max(acc[v], 0.0) for v in vals])

    def pruned(self, tol: float = 0.0) -> "JointDistribution":
        return JointDistribution(self.support, {pt: w for pt, w in self.mass.items() if w > tol})


@dataclass(frozen=True)
class DualSolution:
    y0: float
    y: tuple


@dataclass
class BoundResult:
    value: float
    dual: DualSolution | None = None
    cuts: list = field(default_factory=list)
    extremal: JointDistribution | None = None
    info: dict = field(default_factory=dict)


@dataclass
class DroResult:
    """Optimal decision and worst-case value; unpacks as ``x, value``."""

    x: np.ndarray
    value: float
    bound: BoundResult | None = None

    def __iter__(self):
        return iter((self.x, self.value))


# ---------------------------------------------------------------------------
# validation


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def _check_marginal(i: int, m: DiscreteMarginal, out: list) -> None:
    if not m.values:
        out.append("marginal %d: no atom with positive probability" % i)
    elif abs(m.total - 1.0) > PROB_TOL:
        out.append("marginal %d: normalization, probabilities sum to %.12g" % (i, m.total))


def validate_spec(spec: AmbiguitySpec) -> ValidationReport:
    """Structural checks only; emptiness of the set is left to the solvers."""
    out: list[str] = []
    if isinstance(spec, GenericSubmodular):
        for j, con in enumerate(spec.constraints):
            if not callable(con.f):
                out.append("constraint %d: oracle is not callable" % j)
            if not math.isfinite(con.gamma):
                out.append("constraint %d: non-finite bound" % j)
        if spec.marginals is not None:
            for i, m in enumerate(spec.marginals):
                _check_marginal(i, m, out)
    elif isinstance(spec, PodBivariate):
        for i, m in enumerate(spec.marginals):
            _check_marginal(i, m, out)
        if not out:
            n = spec.n
            for (i, j, s, t), v in spec.targets().items():
                if not (0 <= i < j < n):
                    out.append("pair target (%d, %d): need 0 <= i < j < N" % (i, j))
                    continue
                mi, mj = spec.marginals[i], spec.marginals[j]
                if s not in mi.values or t not in mj.values:
                    out.append("pair target (%d, %d, %g, %g): value off the support" % (i, j, s, t))
                    continue
                cap = min(mi.upper_tail(s), mj.upper_tail(t))
                if v > cap + PROB_TOL:
                    out.append("pair target (%d, %d, %g, %g) = %g exceeds Frechet cap %g"
                               % (i, j, s, t, v, cap))
    elif isinstance(spec, BooleanHigherOrder):
        if spec.M < 1:
            out.append("M must be at least 1")
        for i, p in enumerate(spec.p):
            if not (0.0 < p < 1.0):
                out.append("p[%d] = %g is not in (0, 1)" % (i, p))
        for I, q in spec.targets().items():
            if any(not (0 <= i < spec.n) for i in I):
                out.append("q target %r: index out of range" % (I,))
                continue
            cap = min(spec.p[i] for i in I)
            if q > cap + PROB_TOL:
                out.append("q target %r = %g exceeds Frechet cap min(p) = %g" % (I, q, cap))
    elif isinstance(spec, Moment):
        n = spec.n
        if len(spec.moments) != n:
            out.append("moments given for %d coordinates, support has %d" % (len(spec.moments), n))
        else:
            for i in range(n):
                vals = spec.support.dims[i]
                if spec.functions is not None and spec.functions[i].shape[1] != len(vals):
                    out.append("moment table %d does not match the support" % i)
                if spec.functions is None and spec.moments[i]:
                    m1 = spec.moments[i][0]
                    if not (vals[0] - PROB_TOL <= m1 <= vals[-1] + PROB_TOL):
                        out.append("first moment of %d = %g outside [%g, %g]" % (i, m1, vals[0], vals[-1]))
        for (i, j), q in spec.cross_moments.items():
            if not (0 <= i < j < n):
                out.append("cross moment (%d, %d): need 0 <= i < j < N" % (i, j))
            if not math.isfinite(q):
                out.append("cross moment (%d, %d): non-finite" % (i, j))
    else:
        out.append("unknown ambiguity set type %s" % type(spec).__name__)
    return ValidationReport(out)


def require_valid(spec: AmbiguitySpec) -> None:
    report = validate_spec(spec)
    if not report.ok:
        raise SpecError("; ".join(report.violations))
