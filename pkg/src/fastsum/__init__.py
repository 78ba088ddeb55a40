"""fastsum: fast kernel summation over large source point sets.

Three interchangeable evaluation methods — exact brute force, the
deterministic Barnes-Hut approximation, and an unbiased stochastic path
estimator that uses the Barnes-Hut aggregate hierarchy as control
variates — plus a benchmark harness for error/efficiency sweeps.
"""

from .types import (EstimatorConfig, KernelSpec, QuerySet, SourcePoint,
                    SourceSet, normalize_to_unit_cube)
from .octree import Octree, TreeNode, build_tree, far_field_ratio, validate_tree
from .kernels import (kernel_basis, node_contribution, point_contribution,
                      post_transform)
from .estimators import (FieldResult, barnes_hut, brute_force, contribution_swap,
                         evaluate_field, path_sample_estimate,
                         russian_roulette_prob, sample_path_index,
                         telescoping_exhaustive)
from .estimator_api import KernelSumEstimator

__version__ = "0.1.0"

__all__ = [
    "EstimatorConfig", "KernelSpec", "QuerySet", "SourcePoint", "SourceSet",
    "normalize_to_unit_cube",
    "Octree", "TreeNode", "build_tree", "far_field_ratio", "validate_tree",
    "kernel_basis", "node_contribution", "point_contribution", "post_transform",
    "FieldResult", "barnes_hut", "brute_force", "contribution_swap",
    "evaluate_field", "path_sample_estimate", "russian_roulette_prob",
    "sample_path_index", "telescoping_exhaustive",
    "KernelSumEstimator",
]
