"""Projection-cost preserving sketches by leverage and ridge leverage row sampling."""

from .errors import (
    DegenerateDenominatorError,
    DegenerateLambdaError,
    DimensionError,
    NoValidSplitError,
    ParameterError,
    PCPError,
    SplitIndexError,
    ZeroRankError,
)
from .linalg import (
    OrthonormalBasis,
    RankSplit,
    ThinSVD,
    complement_basis,
    haar_orthonormal,
    norms,
    projector_from_complement,
    rank_split,
    thin_svd,
)
from .sketching import (
    ProbabilityVector,
    RidgeContext,
    SamplingPlan,
    apply_sketch,
    build_sampling_plan,
    leverage_mixed_probs,
    ridge_leverage_probs,
    sample_size_leverage,
    sample_size_ridge,
    uniform_probs,
)
from .verifier import (
    ConditionReport,
    SigmaTilde,
    evaluate_conditions,
    pcp_error,
    sigma_tilde_leverage,
    sigma_tilde_ridge,
    verify_theorem,
    worst_case_error,
)

__version__ = "0.1.0"
