"""Seeded random instances for the two experiment protocols.

Every generator draws from ``numpy.random.default_rng(seed)`` (PCG64), so an
instance is a pure function of its seed and parameters.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ..compact import solve_boolean_higher_order
from ..core import (BooleanHigherOrder, DiscreteMarginal, InfeasibleSpecError, Moment, PiecewiseAffineObjective,
                    ProductSupport)

CONCORDANCE_ALPHA = (1.0, 0.165, 0.4, 1.2, 1.11, 1.13, 1.15, 1.16)
MOMENT_SUPPORT = (-5.0, -2.0, 0.0, 3.0, 6.0, 8.0, 11.0, 14.0, 17.0, 20.0)
DIRICHLET_SHAPE = 2.0


@dataclass(frozen=True)
class PodInstance:
    """Bernoulli marginals, a random objective and concordance targets."""

    seed: int
    p: tuple
    objective: PiecewiseAffineObjective
    q_targets: dict

    def spec(self, M: int) -> BooleanHigherOrder:
        return BooleanHigherOrder(self.p, M, self.q_targets)


def gen_pod_instance(seed: int, N: int, a: float) -> tuple[tuple, PiecewiseAffineObjective]:
    """``p`` uniform on ``[0, a]^N`` and ``K = N`` pieces with ``a_k`` in ``[-1, 1]^N``, ``b_k`` in ``[-1, 1]``."""
    rng = np.random.default_rng(seed)
    p = tuple(float(v) for v in rng.uniform(0.0, a, N))
    A = rng.uniform(-1.0, 1.0, (N, N))
    b = rng.uniform(-1.0, 1.0, N)
    return p, PiecewiseAffineObjective(A, b)


def gen_concordance_targets(p, M: int, alpha=CONCORDANCE_ALPHA) -> dict:
    """Capped recursion: pairs get ``alpha_2 min(p_i, p_j)``, larger sets scale the best subset.

    ``alpha`` is 1-based in the sense that ``alpha[s - 1]`` scales sets of
    size ``s``.  Every target is capped at ``min_{i in I} p_i``.
    """
    p = [float(v) for v in p]
    n = len(p)
    M = min(M, n)
    if len(alpha) < M:
        raise ValueError("need at least %d scaling factors" % M)
    q: dict = {}
    for size in range(2, M + 1):
        for I in itertools.combinations(range(n), size):
            if size == 2:
                raw = alpha[1] * min(p[I[0]], p[I[1]])
            else:
                raw = alpha[size - 1] * max(q[J] for J in itertools.combinations(I, size - 1))
            q[I] = min(raw, min(p[i] for i in I))
    return q


def make_pod_instance(seed: int, N: int, a: float, max_tries: int = 100) -> PodInstance:
    """A feasible instance, moving to the next seed when the targets are inconsistent."""
    zero = PiecewiseAffineObjective(np.zeros((1, N)), np.zeros(1))
    for s in range(seed, seed + max_tries):
        p, obj = gen_pod_instance(s, N, a)
        if min(p) <= 0.0:
            continue
        q = gen_concordance_targets(p, N)
        try:
            solve_boolean_higher_order(BooleanHigherOrder(p, N, q), zero, extract=False)
        except InfeasibleSpecError:
            continue
        return PodInstance(s, p, obj, q)
    raise RuntimeError("no feasible instance within %d seeds of %d" % (max_tries, seed))


@dataclass(frozen=True)
class MomentInstance:
    seed: int
    marginals: tuple
    objective: PiecewiseAffineObjective

    @property
    def support(self) -> ProductSupport:
        return ProductSupport(tuple(m.values for m in self.marginals))

    def spec(self, L: int, basis: str = "orthogonal") -> Moment:
        """Moment set with ``L`` moments per coordinate and independence cross moments.

        ``basis="power"`` uses raw powers.  ``"orthogonal"`` uses polynomials
        orthonormal on the support points, which span the same space as the
        first ``L`` powers and so define the same set; it stays well
        conditioned for large ``L``.  Beyond ``|Xi_i| - 1`` moments the
        marginal is pinned and further moments add nothing, so they are
        dropped.
        """
        n = len(self.marginals)
        cross = {(i, j): self.marginals[i].mean * self.marginals[j].mean
                 for i in range(n) for j in range(i + 1, n)}
        if basis == "power":
            moments = [[m.moment(l + 1) for l in range(L)] for m in self.marginals]
            return Moment(self.support, moments, cross)
        if basis != "orthogonal":
            raise ValueError("basis must be 'power' or 'orthogonal'")
        tables, moments = [], []
        for m in self.marginals:
            tab = orthogonal_basis(m.values, min(L, len(m.values) - 1))
            tables.append(tab)
            moments.append(list(tab @ np.asarray(m.probs)))
        return Moment(self.support, moments, cross, tables)


def orthogonal_basis(values, L: int) -> np.ndarray:
    """``(L, |values|)`` table of degree-1..L polynomials, orthonormal on ``values``.

    Row ``l`` has degree ``l + 1`` and rows ``0..l-1`` together with the
    constant span the same space as ``1, x, ..., x^l``.
    """
    v = np.asarray(values, dtype=float)
    t = (v - (v.max() + v.min()) / 2) / max((v.max() - v.min()) / 2, 1e-300)
    V = np.vander(t, L + 1, increasing=True)
    Q, _ = np.linalg.qr(V)
    return Q[:, 1:].T.copy()


def gen_moment_instance(seed: int, N: int, K: int = 3, support=MOMENT_SUPPORT) -> MomentInstance:
    """Dirichlet(2, ..., 2) marginals on a fixed support and pieces with ``a_k`` in ``[-5, 5]^N``, ``b_k`` in ``[-2, 2]``.

    Dirichlet draws are unit-scale gamma variates normalized to sum to one.
    """
    rng = np.random.default_rng(seed)
    margs = []
    for _ in range(N):
        g = rng.gamma(DIRICHLET_SHAPE, 1.0, len(support))
        margs.append(DiscreteMarginal(support, g / g.sum()))
    A = rng.uniform(-5.0, 5.0, (K, N))
    b = rng.uniform(-2.0, 2.0, K)
    return MomentInstance(seed, tuple(margs), PiecewiseAffineObjective(A, b))
