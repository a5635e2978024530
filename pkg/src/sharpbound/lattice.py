"""Lattice algebra, submodularity checks and exhaustive minimization."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .core import LATTICE_CAP, Point, ProductSupport, SpecError

SUBMOD_TOL = 1e-9
VERIFY_CAP = 10**4
_PAIR_CHUNK = 2**20


@dataclass(frozen=True)
class LatticeFunction:
    """A real-valued oracle on a product lattice.

    ``batch`` may be given as a vectorized twin of ``fn`` taking a ``(P, N)``
    array; it is only a speed-up and must agree with ``fn``.
    """

    support: ProductSupport
    fn: Callable[[Point], float]
    batch: Callable[[np.ndarray], np.ndarray] | None = None

    def __call__(self, xi) -> float:
        return float(self.fn(tuple(xi)))

    @cached_property
    def _table(self) -> np.ndarray:
        pts = self.support.points()
        if self.batch is not None:
            vals = np.asarray(self.batch(pts), dtype=float).reshape(-1)
        else:
            vals = np.fromiter((self.fn(tuple(p)) for p in pts), dtype=float, count=len(pts))
        if not np.isfinite(vals).all():
            raise SpecError("lattice function is not finite everywhere on the lattice")
        vals.setflags(write=False)
        return vals

    def table(self, cap: int = LATTICE_CAP) -> np.ndarray:
        """Values at every lattice point, in enumeration order."""
        self.support.check_cap(cap)
        return self._table

    @classmethod
    def from_table(cls, support: ProductSupport, values) -> "LatticeFunction":
        vals = np.asarray(values, dtype=float).reshape(-1)
        if vals.size != support.size:
            raise SpecError("table has %d entries, lattice has %d" % (vals.size, support.size))
        vals = vals.copy()
        vals.setflags(write=False)
        fn = lambda xi: float(vals[support.flat_index(xi)])
        return cls(support, fn, lambda pts: vals[support.flat_indices(pts)])

    def __neg__(self) -> "LatticeFunction":
        fn, batch = self.fn, self.batch
        return LatticeFunction(self.support, lambda xi: -fn(xi),
                               None if batch is None else (lambda pts: -np.asarray(batch(pts))))


def meet_join(xi, chi) -> tuple[Point, Point]:
    """Componentwise minimum and maximum of two points."""
    if len(xi) != len(chi):
        raise SpecError("points have different dimensions")
    return (tuple(min(a, b) for a, b in zip(xi, chi)),
            tuple(max(a, b) for a, b in zip(xi, chi)))


def _index_grid(support: ProductSupport) -> np.ndarray:
    return np.array(np.unravel_index(np.arange(support.size), support.sizes)).T


def submodularity_gaps(f: LatticeFunction, cap: int = VERIFY_CAP) -> np.ndarray:
    """Minimum over partners of ``f(x)+f(y)-f(x^y)-f(xvy)`` for every point ``x``."""
    sup = f.support
    sup.check_cap(cap)
    vals = f.table()
    idx = _index_grid(sup)
    S = len(vals)
    radix = np.array(sup.sizes)
    weights = np.concatenate([np.cumprod(radix[::-1])[::-1][1:], [1]])
    out = np.full(S, np.inf)
    rows_per_chunk = max(1, _PAIR_CHUNK // max(S, 1))
    for lo in range(0, S, rows_per_chunk):
        hi = min(S, lo + rows_per_chunk)
        a = idx[lo:hi, None, :]
        b = idx[None, :, :]
        meet = np.minimum(a, b) @ weights
        join = np.maximum(a, b) @ weights
        gap = vals[lo:hi, None] + vals[None, :] - vals[meet] - vals[join]
        out[lo:hi] = gap.min(axis=1)
    return out


def verify_submodular(f: LatticeFunction, cap: int = VERIFY_CAP, tol: float = SUBMOD_TOL) -> bool:
    """Exhaustive pairwise check of ``f(x)+f(y) >= f(x^y)+f(xvy)``."""
    return bool(submodularity_gaps(f, cap).min() >= -tol)


def verify_supermodular(f: LatticeFunction, cap: int = VERIFY_CAP, tol: float = SUBMOD_TOL) -> bool:
    return verify_submodular(-f, cap, tol)


def minimize_submodular(f: LatticeFunction, cap: int = LATTICE_CAP) -> tuple[Point, float]:
    """Global minimum by enumeration; ties go to the lexicographically smallest point.

    Enumeration order is lexicographic, so the first minimizer is the one
    we want.  Submodularity is not used here; a faster minimizer can replace
    this function without touching its callers.
    """
    vals = f.table(cap)
    k = int(np.argmin(vals))
    pt = tuple(float(v) for v in f.support.points(cap)[k])
    return pt, float(vals[k])
