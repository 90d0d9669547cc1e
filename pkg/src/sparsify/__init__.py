"""Provably safe edge elimination for rounded-Euclidean TSP instances.

Eliminates edges that cannot occur in any optimum tour of an EUC_2D or
CEIL_2D instance, preserving all optimum tours by construction.
"""

from .backtrack import PathSystem, SearchConfig, extensions, is_locally_minimal, refute_edge
from .certify import (
    ConeCover,
    ConeMembership,
    PotentialPoint,
    Rejection,
    certify_quadratic,
    certify_strong,
    circle_intersection_ok,
    gamma_r,
    in_cone,
)
from .compat import compatible, metric_excess, three_incompatible
from .eliminate import (
    Verdict,
    close_point_check,
    direct_eliminate,
    main_theorem_check,
    replay_verdict,
)
from .geometry import (
    DeltaRadii,
    DuplicatePoint,
    NeighborIndex,
    compute_deltas,
    cone_half_angles,
    dist,
    eps_theta_cosines,
    euclid,
    triangle_angle_cos,
)
from .oracle import (
    Tour,
    brute_min_path_system,
    enumerate_optimum_tours,
    exact_useless_edges,
    held_karp_value,
)
from .pipeline import (
    PipelineConfig,
    RunStats,
    run,
    step1_fast,
    step2_direct,
    step3_backtrack,
)
from .tsplib import Instance, ParseError, SparseEdgeSet, parse_edge_set, parse_instance, write_edge_set

__version__ = "0.1.0"

__all__ = [
    "ConeCover",
    "ConeMembership",
    "DeltaRadii",
    "DuplicatePoint",
    "Instance",
    "NeighborIndex",
    "ParseError",
    "PathSystem",
    "PipelineConfig",
    "PotentialPoint",
    "Rejection",
    "RunStats",
    "SearchConfig",
    "SparseEdgeSet",
    "Tour",
    "Verdict",
    "brute_min_path_system",
    "certify_quadratic",
    "certify_strong",
    "circle_intersection_ok",
    "close_point_check",
    "compatible",
    "compute_deltas",
    "cone_half_angles",
    "direct_eliminate",
    "dist",
    "enumerate_optimum_tours",
    "eps_theta_cosines",
    "euclid",
    "exact_useless_edges",
    "extensions",
    "gamma_r",
    "held_karp_value",
    "in_cone",
    "is_locally_minimal",
    "main_theorem_check",
    "metric_excess",
    "parse_edge_set",
    "parse_instance",
    "refute_edge",
    "replay_verdict",
    "run",
    "step1_fast",
    "step2_direct",
    "step3_backtrack",
    "three_incompatible",
    "triangle_angle_cos",
    "write_edge_set",
]
