"""Block-model graphs, their hitting-time encodings, and the folding curve."""

from .curve import (
    CurveAssumptionError,
    CurveBundle,
    CurveInvariantError,
    EncodedComponent,
    build_curve,
    check_symmetry,
    composed_process,
    composed_processes,
    encode_components,
    level_hit_time,
    level_hit_times,
    special_case_curve,
    verify_encoding,
)
from .field import (
    ClockSet,
    Field,
    HittingProcess,
    HittingTime,
    build_field,
    encoded_jump,
    field_eval,
    field_eval_left,
    field_exploration,
    field_from_jumps,
    field_from_paths,
    hitting_process,
    hitting_time,
    rank_one_encoding,
    rank_one_walk,
    sample_clocks,
    solver_jump,
)
from .model import (
    BlockModel,
    Component,
    ExplorationTrace,
    Graph,
    KernelFactorization,
    build_q_parametrization,
    connected_components,
    edge_probability,
    factor_kernel,
    graph_exploration,
    normalize_kernel,
    sample_graph,
    scaled_mass,
    size_biased_order,
)
from .paths import (
    Breakpoint,
    CompatibilityReport,
    IncompatiblePairError,
    PathClassError,
    PathDomainError,
    PiecewisePath,
    add,
    check_compatible,
    compose,
    drift,
    excursions,
    generalized_inverse,
    identity,
    ord_lengths,
    past_infimum,
    path_from_json_obj,
    polyline,
    pure_jumps,
    scale,
    smooth_compose,
    step,
    sup_distance,
)

__version__ = "0.1.0"
