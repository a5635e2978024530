import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from sharpbound import (LatticeFunction, LatticeTooLargeError, ProductSupport, SpecError, meet_join,
                        minimize_submodular, verify_submodular, verify_supermodular)

B2 = ProductSupport(((0, 1), (0, 1)))
T2 = ProductSupport(((0, 1, 2), (0, 1, 2)))


def fn(support, f):
    return LatticeFunction(support, f)


@pytest.mark.parametrize("a, b, meet, join", [
    ((0, 1), (1, 0), (0, 0), (1, 1)),
    ((2, 3), (2, 3), (2, 3), (2, 3)),
    ((0, 5, 1), (3, 2, 1), (0, 2, 1), (3, 5, 1)),
])
def test_meet_join(a, b, meet, join):
    assert meet_join(a, b) == (meet, join)


def test_meet_join_dimension_mismatch():
    with pytest.raises(SpecError):
        meet_join((0, 1), (0, 1, 2))


def test_verify_examples():
    assert verify_submodular(fn(B2, max))
    assert not verify_submodular(fn(B2, lambda x: x[0] * x[1]))
    assert verify_supermodular(fn(B2, lambda x: x[0] * x[1]))
    assert verify_submodular(fn(T2, lambda x: x[0] + 3 * x[1]))
    assert verify_supermodular(fn(T2, lambda x: x[0] + 3 * x[1]))


def test_minimize_examples():
    assert minimize_submodular(fn(B2, lambda x: max(x) - x[0] - x[1])) == ((1.0, 1.0), -1.0)
    assert minimize_submodular(fn(ProductSupport(((0, 1, 2), (0, 1))), lambda x: x[0])) == ((0.0, 0.0), 0.0)
    assert minimize_submodular(fn(T2, lambda x: -min(x))) == ((2.0, 2.0), -2.0)


def test_caps():
    big = ProductSupport(((0, 1),) * 15)
    with pytest.raises(LatticeTooLargeError):
        verify_submodular(fn(big, max))
    with pytest.raises(LatticeTooLargeError):
        minimize_submodular(fn(big, max), cap=100)


def test_table_round_trip_on_arbitrary_points():
    f = LatticeFunction.from_table(T2, np.arange(9.0))
    assert f((1, 2)) == 5.0
    assert list(f.batch(np.array([[2.0, 0.0], [0.0, 1.0]]))) == [6.0, 1.0]


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_minimum_below_random_points(seed):
    rng = np.random.default_rng(seed)
    sup = ProductSupport(tuple(tuple(range(int(k))) for k in rng.integers(1, 5, 3)))
    f = LatticeFunction.from_table(sup, rng.normal(size=sup.size))
    _, v = minimize_submodular(f)
    pts = sup.points()
    for k in rng.integers(0, sup.size, 100):
        assert v <= f(pts[k])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 10**6))
def test_closure_under_nonnegative_sums_plus_linear(seed):
    rng = np.random.default_rng(seed)
    sup = ProductSupport(((0, 1, 2), (0, 1), (0, 2, 3)))
    pts = sup.points()
    parts = [np.maximum.reduce(pts, axis=1), -pts[:, 0] * pts[:, 2], -(pts.sum(axis=1)) ** 2]
    y = rng.uniform(0, 2, len(parts))
    total = sum(w * p for w, p in zip(y, parts)) - pts @ rng.normal(size=3)
    for p in parts:
        assert verify_submodular(LatticeFunction.from_table(sup, p))
    assert verify_submodular(LatticeFunction.from_table(sup, total))


@settings(max_examples=40, deadline=None)
@given(st.lists(st.integers(0, 4), min_size=3, max_size=3), st.lists(st.integers(0, 4), min_size=3, max_size=3))
def test_absorption(a, b):
    meet, join = meet_join(a, b)
    assert meet_join(a, join)[0] == tuple(a)
    assert meet_join(a, meet)[1] == tuple(a)
