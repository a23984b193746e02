"""Exact curve-flat quotients of finite segment complexes."""

from .metric import (
    DistortionError,
    DistortionPL,
    DomainError,
    PseudometricSpace,
    StructuralError,
    ValidationReport,
    Violation,
    ZeroClassPartition,
    apply_distortion,
    diameter,
    quotient_by_zero,
    validate,
)
from .complex import (
    AttachError,
    BendingError,
    BendingTriple,
    FrameChain,
    GappedEdge,
    SegmentComplex,
    Thread,
    arms,
    attach,
    bend,
    bend_sequential,
    bend_single_formula,
    flatten,
)
from .curveflat import (
    CurveFlatState,
    GapCostGraph,
    cf_index,
    cf_iterate,
    cf_oracle,
    cf_oracle_stages,
    cf_step,
    check_pair_bending_commutation,
    initial_state,
    recomplexify,
)

__version__ = "0.1.0"
