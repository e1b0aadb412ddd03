"""Maximum likelihood fitting and one-sided inference for discrete
exponential-family GLMs whose MLE lies on the boundary of the convex
support of the canonical statistic."""

from .completion import (
    DirectionOfRecession,
    LcmFit,
    LcmSupport,
    TangentConeGenerators,
    dor_check,
    find_dor,
    iterate_to_lcm,
    lcm_support_from_null_basis,
    refit_lcm,
    restrict_model,
    tangent_cone_generators,
)
from .design import (
    DesignResult,
    ModelSpec,
    Predictor,
    build_design,
    ingest_csv,
    ingest_design,
    ingest_design_text,
)
from .errors import (
    BoundaryMleError,
    IterationLimit,
    NoDescentDirection,
    NonBoundaryTarget,
    NotSymmetric,
    ParseError,
    RankError,
    SingularStep,
    SolverFailure,
    TooLarge,
    ZeroDirection,
)
from .expfam import (
    BERNOULLI,
    POISSON,
    CanonicalPoint,
    Family,
    FisherInfo,
    GlmModel,
    canonical_statistic,
    cgf_check,
    cumulant,
    fisher_information,
    log_likelihood,
    mean_value,
    score,
    variance_value,
)
from .fitting import FitConfig, FitResult, fit_mle
from .inference import (
    CiProblem,
    OneSidedInterval,
    boundary_probability,
    one_sided_ci,
    target_description,
)
from .nullspace import (
    NullBasis,
    null_basis,
    select_epsilon,
    subspace_distance,
    symmetric_eigen,
)
from .oracle import (
    GridSpec,
    SupportEnumeration,
    enumerate_support,
    oracle_boundary_status,
    oracle_ci_grid,
    oracle_dor_verify,
)
from .pipeline import (
    PipelineOptions,
    Report,
    emit_plot_data,
    limiting_gamma,
    report_json,
    run_pipeline,
)

__version__ = "0.1.0"
