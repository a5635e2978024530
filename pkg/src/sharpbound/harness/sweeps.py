"""Information sweeps: bounds as more dependence or moment information arrives."""

from __future__ import annotations

import csv
import time
from dataclasses import asdict, dataclass
from typing import Iterable

from ..compact import solve_boolean_higher_order, solve_moment
from .generators import gen_moment_instance, make_pod_instance

MONOTONE_SLACK = 1e-8
CSV_COLUMNS = ("seed", "N", "M_or_L", "value", "pct_improvement", "runtime_ms")


class MonotonicityError(AssertionError):
    """A bound increased when information was added."""


@dataclass
class SweepRow:
    seed: int
    N: int
    M_or_L: int
    value: float
    pct_improvement: float
    runtime_ms: float
    marginal_reduction: float | None = None
    a: float | None = None


def _pct(base: float, value: float) -> float:
    return 100.0 * (base - value) / abs(base) if base != 0 else 0.0


def _finish(rows: list[SweepRow], what: str) -> list[SweepRow]:
    for prev, row in zip(rows, rows[1:]):
        if row.value > prev.value + MONOTONE_SLACK * (1.0 + abs(prev.value)):
            raise MonotonicityError("seed %d: %s bound rose from %.12g to %.12g at %d"
                                    % (row.seed, what, prev.value, row.value, row.M_or_L))
        row.marginal_reduction = _pct(prev.value, row.value)
    base = rows[0].value
    for row in rows:
        row.pct_improvement = _pct(base, row.value)
    return rows


def pod_instance_sweep(instance, objective=None) -> list[SweepRow]:
    """Bounds for ``M = 1..N`` with targets fixed once for the full order."""
    obj = instance.objective if objective is None else objective
    N = len(instance.p)
    rows = []
    for M in range(1, N + 1):
        t0 = time.perf_counter()
        res, _ = solve_boolean_higher_order(instance.spec(M), obj, extract=False)
        rows.append(SweepRow(instance.seed, N, M, res.value, 0.0, 1000.0 * (time.perf_counter() - t0)))
    return _finish(rows, "M")


def run_pod_sweep(seeds: Iterable[int], N: int, a_list: Iterable[float] = (0.5,)) -> list[SweepRow]:
    out = []
    for a in a_list:
        for seed in seeds:
            rows = pod_instance_sweep(make_pod_instance(seed, N, a))
            for r in rows:
                r.a = a
            out.extend(rows)
    return out


def moment_instance_sweep(instance, Lmax: int, basis: str = "orthogonal") -> list[SweepRow]:
    N = len(instance.marginals)
    rows = []
    for L in range(1, Lmax + 1):
        t0 = time.perf_counter()
        res, _ = solve_moment(instance.spec(L, basis), instance.objective, extract=False)
        rows.append(SweepRow(instance.seed, N, L, res.value, 0.0, 1000.0 * (time.perf_counter() - t0)))
    return _finish(rows, "L")


def run_moment_sweep(seeds: Iterable[int], N: int, Lmax: int, K: int = 3,
                     basis: str = "orthogonal") -> list[SweepRow]:
    out = []
    for seed in seeds:
        out.extend(moment_instance_sweep(gen_moment_instance(seed, N, K), Lmax, basis))
    return out


def write_csv(rows: Iterable[SweepRow], path_or_file) -> None:
    """Flat table with the fixed column set; floats are written with ``repr``."""
    def emit(fh):
        w = csv.writer(fh)
        w.writerow(CSV_COLUMNS)
        for r in rows:
            d = asdict(r)
            w.writerow([repr(d[c]) if isinstance(d[c], float) else d[c] for c in CSV_COLUMNS])

    if hasattr(path_or_file, "write"):
        emit(path_or_file)
    else:
        with open(path_or_file, "w", newline="") as fh:
            emit(fh)
