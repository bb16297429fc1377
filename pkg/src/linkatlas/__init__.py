"""Generation, simulation, curation and shape-based retrieval of 1-DOF
planar linkage mechanisms."""

from linkatlas.mechanism import (
    JointType,
    Mechanism,
    MobilityCount,
    StructuralError,
    apply_J,
    apply_Ng,
    apply_Ns,
    compute_mobility,
    initial_mechanism,
    validate,
)
from linkatlas.solver import (
    Locking,
    PlanError,
    SolutionPlan,
    Trajectory,
    check_feasible,
    compile_plan,
    dyad_solve,
    simulate,
    simulate_batch,
)
from linkatlas.curves import (
    DegeneratePathError,
    chamfer,
    curate,
    is_arc,
    is_circle,
    normalize,
    reduce_mechanism,
)
from linkatlas.generator import (
    GenerationConfig,
    GenerationError,
    GenerationRun,
    GenerationStats,
    NegativeSample,
    find_valid_variant,
    rejection_curve,
    sample_positions,
    sample_topology,
)
from linkatlas.atlas import Atlas, RetrievalHit

__all__ = [
    "JointType",
    "Mechanism",
    "MobilityCount",
    "StructuralError",
    "apply_J",
    "apply_Ng",
    "apply_Ns",
    "compute_mobility",
    "initial_mechanism",
    "validate",
    "Locking",
    "PlanError",
    "SolutionPlan",
    "Trajectory",
    "check_feasible",
    "compile_plan",
    "dyad_solve",
    "simulate",
    "simulate_batch",
    "DegeneratePathError",
    "chamfer",
    "curate",
    "is_arc",
    "is_circle",
    "normalize",
    "reduce_mechanism",
    "GenerationConfig",
    "GenerationError",
    "GenerationRun",
    "GenerationStats",
    "NegativeSample",
    "find_valid_variant",
    "rejection_curve",
    "sample_positions",
    "sample_topology",
    "Atlas",
    "RetrievalHit",
]
