"""Noise-blind sparse recovery with heavy-tailed measurement ensembles.

Submodules: scalar laws (``distributions``), random matrices and planted
instances (``ensembles``), the clipped/dagger norm calculus (``norms``),
certified l1 decoders (``solvers``), quotient and inradius probes
(``geometry``), and the experiment runner (``harness``).
"""

from .distributions import (
    DistributionSpec,
    MomentReport,
    SuperGaussianReport,
    check_super_gaussian,
    check_weak_moment,
    default_tail_grid,
    exp_type,
    from_uniform,
    gaussian,
    lp_moment,
    normalize,
    parse_distribution,
    psi,
    rademacher,
    sample,
    sample_array,
    student_t,
    survival,
    weibull,
)
from .ensembles import (
    MeasurementMatrix,
    PlantedSignal,
    from_array,
    load_matrix,
    matrix_entries,
    sample_heavy_noise,
    sample_matrix,
    sample_matrix_rows,
    sample_sparse_vector,
    sample_spherical_noise,
    save_matrix,
)
from .errors import (
    DimensionError,
    EmptyCell,
    HarnessError,
    MomentDiverges,
    NoiseBlindError,
    ParamError,
    RankDeficient,
    SizeError,
)
from .geometry import (
    Clipped,
    InradiusEstimate,
    L2,
    NormKind,
    QuotientEstimate,
    SmallBallCheck,
    SmallBallReport,
    TailBoundCheck,
    empirical_Q,
    empirical_R,
    inradius_estimate,
    montgomery_smith_check,
    q_moment_functional,
    quotient_estimate,
    reference_constants_super_gaussian,
    reference_constants_weak_moment,
    small_ball_report,
    super_gaussian_small_ball_check,
)
from .harness import (
    BP,
    BPDN,
    CellSummary,
    DecoderSpec,
    ExperimentConfig,
    NoiseModel,
    Psi,
    Spherical,
    TrialRecord,
    desk_preset,
    emit_outputs,
    paper_preset,
    parse_config,
    parse_trials,
    read_config,
    run_experiment,
    summarize,
)
from .norms import (
    best_s_term_error,
    clipped_norm,
    dagger_norm_exact,
    dagger_norm_lower,
    dual_clipped_norm,
    lp_norm,
    s_star,
)
from .rng import derive_seed, stream
from .solvers import (
    DecodeProblem,
    DecodeResult,
    MatrixFactorization,
    decode,
    factorize,
    linear_least_norm,
    solve_bp,
    solve_bpdn,
)

__version__ = "0.1.0"

__all__ = [
    "BP",
    "BPDN",
    "CellSummary",
    "Clipped",
    "DecodeProblem",
    "DecodeResult",
    "DecoderSpec",
    "DimensionError",
    "DistributionSpec",
    "EmptyCell",
    "ExperimentConfig",
    "HarnessError",
    "InradiusEstimate",
    "L2",
    "MatrixFactorization",
    "MeasurementMatrix",
    "MomentDiverges",
    "MomentReport",
    "NoiseBlindError",
    "NoiseModel",
    "NormKind",
    "ParamError",
    "PlantedSignal",
    "Psi",
    "QuotientEstimate",
    "RankDeficient",
    "SizeError",
    "SmallBallCheck",
    "SmallBallReport",
    "Spherical",
    "SuperGaussianReport",
    "TailBoundCheck",
    "TrialRecord",
    "best_s_term_error",
    "check_super_gaussian",
    "check_weak_moment",
    "clipped_norm",
    "dagger_norm_exact",
    "dagger_norm_lower",
    "decode",
    "default_tail_grid",
    "derive_seed",
    "desk_preset",
    "dual_clipped_norm",
    "emit_outputs",
    "empirical_Q",
    "empirical_R",
    "exp_type",
    "factorize",
    "from_array",
    "from_uniform",
    "gaussian",
    "inradius_estimate",
    "linear_least_norm",
    "load_matrix",
    "lp_moment",
    "lp_norm",
    "matrix_entries",
    "montgomery_smith_check",
    "normalize",
    "paper_preset",
    "parse_config",
    "parse_distribution",
    "parse_trials",
    "psi",
    "q_moment_functional",
    "quotient_estimate",
    "rademacher",
    "read_config",
    "reference_constants_super_gaussian",
    "reference_constants_weak_moment",
    "run_experiment",
    "s_star",
    "sample",
    "sample_array",
    "sample_heavy_noise",
    "sample_matrix",
    "sample_matrix_rows",
    "sample_sparse_vector",
    "sample_spherical_noise",
    "save_matrix",
    "small_ball_report",
    "solve_bp",
    "solve_bpdn",
    "stream",
    "student_t",
    "summarize",
    "super_gaussian_small_ball_check",
    "survival",
    "weibull",
]
