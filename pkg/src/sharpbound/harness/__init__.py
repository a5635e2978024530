"""Problem documents, seeded instance generators, information sweeps and the CLI."""

from .generators import (CONCORDANCE_ALPHA, MOMENT_SUPPORT, MomentInstance, PodInstance, gen_concordance_targets,
                         gen_moment_instance, gen_pod_instance, make_pod_instance, orthogonal_basis)
from .problem_io import ParseError, Problem, load_problem, problem_from_dict, problem_to_dict
from .sweeps import (MonotonicityError, SweepRow, moment_instance_sweep, pod_instance_sweep, run_moment_sweep,
                     run_pod_sweep, write_csv)

__all__ = [
    "CONCORDANCE_ALPHA", "MOMENT_SUPPORT", "MomentInstance", "PodInstance", "gen_concordance_targets",
    "gen_moment_instance", "gen_pod_instance", "make_pod_instance", "orthogonal_basis",
    "ParseError", "Problem", "load_problem", "problem_from_dict", "problem_to_dict",
    "MonotonicityError", "SweepRow", "moment_instance_sweep", "pod_instance_sweep", "run_moment_sweep",
    "run_pod_sweep", "write_csv",
]
