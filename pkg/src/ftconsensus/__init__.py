"""Exact finite-time average-consensus sequences on directed graphs.

Everything is computed in exact rational arithmetic: constructions produce
stochastic update sequences whose product literally equals the (weighted)
averaging matrix, and every verification is an equality test, never a
tolerance check.
"""

from .analysis import (
    EvidenceReport,
    FeasibilityVerdict,
    InternalContractBreach,
    PartitionTrace,
    PreconditionError,
    SignWalk,
    assess_feasibility,
    check_sign_lemma,
    cycle_impossibility_evidence,
    extract_even_cycle_certificate,
    has_same_sign_pair,
    partition_bound_trace,
    random_consistent_matrix,
)
from .cli import (
    FileFormatError,
    Trajectory,
    VerificationFailure,
    VerificationReport,
    demo_graph,
    demo_sequence,
    load_graph,
    load_sequence,
    load_vector,
    main,
    run_demo,
    simulate,
    verify_sequence,
)
from .construction import (
    AbsorptionStage,
    CorrectionSchedule,
    MatrixSequence,
    NoBidirectionalSpanningTree,
    ScheduleCheck,
    absorption_plan,
    absorption_steps,
    construct_average_sequence,
    construct_weighted_sequence,
    verify_schedule,
)
from .graph import (
    CycleLimitExceeded,
    Graph,
    LayeringError,
    SpanningTree,
    TreeLayering,
    bidirectional_subgraph,
    connected_components,
    directed_cycle,
    enumerate_simple_cycles,
    find_spanning_tree,
    has_even_simple_cycle,
    is_simple_cycle_graph,
    is_strongly_connected,
    layer_decompose,
    tree_diameter,
)
from .ratlinalg import (
    DimensionMismatch,
    Rational,
    RationalMatrix,
    format_rational,
    has_positive_diagonal,
    is_average_matrix,
    is_consistent,
    is_rank_one_stochastic,
    is_stochastic,
    mat_mul,
    mat_vec,
    matrix_from_strings,
    matrix_to_strings,
    parse_rational,
    sequence_product,
)

__version__ = "0.1.0"

__all__ = [
    "AbsorptionStage",
    "CorrectionSchedule",
    "CycleLimitExceeded",
    "DimensionMismatch",
    "EvidenceReport",
    "FeasibilityVerdict",
    "FileFormatError",
    "Graph",
    "InternalContractBreach",
    "LayeringError",
    "MatrixSequence",
    "NoBidirectionalSpanningTree",
    "PartitionTrace",
    "PreconditionError",
    "Rational",
    "RationalMatrix",
    "ScheduleCheck",
    "SignWalk",
    "SpanningTree",
    "Trajectory",
    "TreeLayering",
    "VerificationFailure",
    "VerificationReport",
    "absorption_plan",
    "absorption_steps",
    "assess_feasibility",
    "bidirectional_subgraph",
    "check_sign_lemma",
    "connected_components",
    "construct_average_sequence",
    "construct_weighted_sequence",
    "cycle_impossibility_evidence",
    "demo_graph",
    "demo_sequence",
    "directed_cycle",
    "enumerate_simple_cycles",
    "extract_even_cycle_certificate",
    "find_spanning_tree",
    "format_rational",
    "has_even_simple_cycle",
    "has_positive_diagonal",
    "has_same_sign_pair",
    "is_average_matrix",
    "is_consistent",
    "is_rank_one_stochastic",
    "is_simple_cycle_graph",
    "is_stochastic",
    "is_strongly_connected",
    "layer_decompose",
    "load_graph",
    "load_sequence",
    "load_vector",
    "main",
    "mat_mul",
    "mat_vec",
    "matrix_from_strings",
    "matrix_to_strings",
    "parse_rational",
    "partition_bound_trace",
    "random_consistent_matrix",
    "run_demo",
    "sequence_product",
    "simulate",
    "tree_diameter",
    "verify_schedule",
    "verify_sequence",
]
