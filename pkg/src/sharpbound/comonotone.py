"""Comonotone and independent couplings of discrete marginals."""

from __future__ import annotations

import itertools
import math
from typing import Callable, Sequence

import numpy as np

from .core import LATTICE_CAP, DiscreteMarginal, JointDistribution, SpecError, support_of

_LEVEL_TOL = 1e-12


def _cdf_levels(m: DiscreteMarginal) -> np.ndarray:
    cum = np.cumsum(m.probs)
    cum = cum / cum[-1]
    cum[-1] = 1.0
    return cum


def comonotone_layers(marginals: Sequence[DiscreteMarginal]) -> list[tuple[tuple, float]]:
    """``(point, mass)`` pairs of the comonotone coupling, in increasing order.

    Every marginal's CDF levels split (0, 1]; each piece maps through all the
    generalized inverses at once.  Levels closer than 1e-12 are merged so
    floating-point noise does not create slivers of support.
    """
    if not marginals:
        raise SpecError("need at least one marginal")
    cdfs = [_cdf_levels(m) for m in marginals]
    levels = np.unique(np.concatenate(cdfs))
    merged = []
    for u in levels:
        if merged and u - merged[-1] <= _LEVEL_TOL:
            merged[-1] = u
        else:
            merged.append(u)
    merged[-1] = 1.0
    out = []
    prev = 0.0
    for u in merged:
        pt = tuple(m.values[min(int(np.searchsorted(c, u - _LEVEL_TOL, side="left")), len(c) - 1)]
                   for m, c in zip(marginals, cdfs))
        out.append((pt, float(u - prev)))
        prev = u
    return out


def comonotone_coupling(marginals: Sequence[DiscreteMarginal]) -> JointDistribution:
    """Joint law of ``(F_1^{-1}(U), ..., F_N^{-1}(U))`` for a single uniform ``U``."""
    return JointDistribution(support_of(marginals), dict(_accumulate(comonotone_layers(marginals))))


def _accumulate(pairs):
    acc = {}
    for pt, w in pairs:
        acc[pt] = acc.get(pt, 0.0) + w
    return acc


def independent_coupling(marginals: Sequence[DiscreteMarginal], cap: int = LATTICE_CAP) -> JointDistribution:
    """Product measure of the marginals."""
    support = support_of(marginals)
    support.check_cap(cap)
    mass = {}
    for combo in itertools.product(*(list(zip(m.values, m.probs)) for m in marginals)):
        mass[tuple(v for v, _ in combo)] = math.prod(p for _, p in combo)
    return JointDistribution(support, mass)


def choquet_expectation(f: Callable, marginals: Sequence[DiscreteMarginal]) -> float:
    """``E[f]`` under the comonotone coupling, with one oracle call per layer."""
    return math.fsum(w * float(f(pt)) for pt, w in comonotone_layers(marginals))


def orthant_prob(joint: JointDistribution, t, direction: str = "upper") -> float:
    """``P(X >= t)`` for ``"upper"`` or ``P(X <= t)`` for ``"lower"``, componentwise."""
    t = tuple(float(v) for v in t)
    if len(t) != joint.support.n:
        raise SpecError("threshold has the wrong dimension")
    if direction == "upper":
        hit = lambda pt: all(a >= b for a, b in zip(pt, t))
    elif direction == "lower":
        hit = lambda pt: all(a <= b for a, b in zip(pt, t))
    else:
        raise ValueError("direction must be 'upper' or 'lower'")
    return math.fsum(w for pt, w in joint.mass.items() if hit(pt))
