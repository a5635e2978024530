"""Sharp upper bounds on expected piecewise-affine functions of discrete random vectors.

Ambiguity sets are families of distributions on a product lattice that share
some partial information: univariate marginals with positive dependence,
marginal moments with cross-moment bounds, or bounds on submodular
expectations.  Bounds come from compact LPs, from row generation with
lattice minimization, or from the full-lattice LP used as ground truth.
"""

from .comonotone import (choquet_expectation, comonotone_coupling, comonotone_layers, independent_coupling,
                         orthant_prob)
from .compact import (CompactSolution, build_dual_dro, expand_rank_objective, extract_extremal, hunter_worsley,
                      solve_boolean_higher_order, solve_dual_dro, solve_moment, solve_pod_bivariate)
from .core import (AffineDecisionObjective, BooleanHigherOrder, BoundResult, DiscreteMarginal, DroResult,
                   DualSolution, GenericSubmodular, InfeasibleSpecError, JointDistribution, LatticeTooLargeError,
                   Moment, PiecewiseAffineObjective, PodBivariate, Polyhedron, ProductSupport, SolverError,
                   SpecError, SubmodularConstraint, ValidationReport, evaluate_objective, pod_default_targets,
                   require_valid, support_of, validate_spec)
from .genbound import (dro_solve, feasibility_test, frechet_spec, marginal_constraints, product_lower_bound,
                       sharp_bound_generic, sharp_bound_supermodular_pieces, to_generic)
from .lattice import (LatticeFunction, meet_join, minimize_submodular, submodularity_gaps, verify_submodular,
                      verify_supermodular)
from .lpsolve import LPBuilder, LPModel, LPSolution, solve_lp
from .oracle import MembershipReport, check_membership, expectation, exponential_lp_bound

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
