import numpy as np
import pytest

from sharpbound import (BooleanHigherOrder, DiscreteMarginal, JointDistribution, LatticeTooLargeError, Moment,
                        PiecewiseAffineObjective, PodBivariate, ProductSupport, SpecError, evaluate_objective,
                        pod_default_targets, validate_spec)

MAX2 = PiecewiseAffineObjective([[1, 0], [0, 1]], [0, 0])


@pytest.mark.parametrize("obj, xi, expected", [
    (MAX2, (0, 1), (1.0, 2)),
    (MAX2, (1, 1), (1.0, 1)),
    (PiecewiseAffineObjective([[2, -1]], [3]), (1, 2), (3.0, 1)),
])
def test_evaluate_objective(obj, xi, expected):
    assert evaluate_objective(obj, xi) == expected


def test_evaluate_objective_dimension_mismatch():
    with pytest.raises(SpecError):
        evaluate_objective(MAX2, (1, 2, 3))


def test_objective_matches_direct_evaluation_on_whole_lattice():
    rng = np.random.default_rng(0)
    obj = PiecewiseAffineObjective(rng.integers(-2, 3, (4, 3)), rng.integers(-2, 3, 4))
    sup = ProductSupport(((0, 1, 2), (-1, 0, 4), (0, 3)))
    for pt in sup.iter_points():
        vals = [float(np.dot(obj.a[k], pt) + obj.b[k]) for k in range(obj.K)]
        best = max(vals)
        assert evaluate_objective(obj, pt) == (best, vals.index(best) + 1)


def test_support_invariants():
    with pytest.raises(SpecError):
        ProductSupport(((0, 0, 1),))
    with pytest.raises(SpecError):
        ProductSupport(((0, float("inf")),))
    with pytest.raises(SpecError):
        ProductSupport(((),))
    big = ProductSupport(((0, 1),) * 21)
    with pytest.raises(LatticeTooLargeError):
        big.check_cap()


def test_marginal_prunes_zero_atoms_and_rejects_bad_input():
    m = DiscreteMarginal((0, 1, 2), (0.4, 0.0, 0.6))
    assert m.values == (0.0, 2.0) and m.probs == (0.4, 0.6)
    with pytest.raises(SpecError):
        DiscreteMarginal((0, 1), (1.2, -0.2))
    with pytest.raises(SpecError):
        DiscreteMarginal((1, 0), (0.5, 0.5))


def test_validate_normalization():
    spec = PodBivariate([DiscreteMarginal((0, 1), (0.5, 0.4)), DiscreteMarginal((0, 1), (0.5, 0.5))])
    rep = validate_spec(spec)
    assert not rep.ok and "normalization" in rep.violations[0]


def test_validate_q_above_frechet_cap():
    rep = validate_spec(BooleanHigherOrder((0.5, 0.5), 2, {(0, 1): 0.6}))
    assert not rep.ok and "min(p)" in rep.violations[0]


def test_validate_moment_mean_inside_support():
    sup = ProductSupport(((0, 1),))
    assert validate_spec(Moment(sup, ((0.5,),))).ok
    assert not validate_spec(Moment(sup, ((1.5,),))).ok


def test_validate_pair_target_above_cap():
    h = DiscreteMarginal((0, 1), (0.5, 0.5))
    assert not validate_spec(PodBivariate([h, h], {(0, 1, 1.0, 1.0): 0.7})).ok
    assert validate_spec(PodBivariate([h, h], {(0, 1, 1.0, 1.0): 0.5})).ok


def test_pod_default_targets_and_restriction():
    h = DiscreteMarginal((0, 1), (0.5, 0.5))
    full = pod_default_targets([h, h])
    assert full[(0, 1, 1.0, 1.0)] == pytest.approx(0.25)
    assert len(full) == 4
    part = pod_default_targets([h, h], {(0, 1): [(1.0, 1.0)]})
    assert list(part) == [(0, 1, 1.0, 1.0)]


def test_boolean_targets_filter_by_order():
    spec = BooleanHigherOrder((0.5, 0.4, 0.3), 2, {(0, 1): 0.2, (0, 1, 2): 0.06, (2, 1): 0.12})
    assert spec.targets() == {(0, 1): 0.2, (1, 2): 0.12}
    assert BooleanHigherOrder((0.5, 0.4, 0.3), 3).targets()[(0, 1, 2)] == pytest.approx(0.06)


def test_joint_distribution_validation():
    sup = ProductSupport(((0, 1), (0, 1)))
    assert JointDistribution(sup, {(0, 0): 0.5, (1, 1): 0.5}).validate() == []
    assert JointDistribution(sup, {(0, 0): 0.5, (2, 1): 0.5}).validate()
    assert JointDistribution(sup, {(0, 0): 0.9}).validate()
    j = JointDistribution(sup, {(0, 0): 0.25, (1, 0): 0.75})
    assert j.marginal(0).probs == (0.25, 0.75)
