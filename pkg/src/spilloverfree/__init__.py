"""Eigenvalue embedding for symmetric pencils with mass diag(M_u, 0).

Replace a chosen handful of finite eigenvalues of lambda*M + K while
provably keeping every other finite eigenpair, all eigenvalues at
infinity, symmetry, and the singular block structure of M. See the
README for the workflow; the CLI entry point is `spilloverfree`.
"""

from .embedding import (
    ParameterSet,
    UpdatedSystem,
    compute_gamma1,
    default_gamma_tilde,
    embed,
    embed_direct,
    embed_smw,
    gamma_free_params,
    reconstruct_theorem1,
    structured_gamma,
    verify_theorem1,
)
from .errors import (
    AsymmetricInput,
    DegenerateSpectrum,
    DimensionMismatch,
    DuplicateEigenvalue,
    GenerationFailed,
    IllDefined,
    MalformedBlocks,
    NoFeasiblePoint,
    NoMatch,
    NotConjugateClosed,
    Overlap,
    ParseError,
    RankDeficient,
    Singular,
    SingularBlock,
    SingularT,
    SpilloverError,
    StructureInfeasible,
    VerificationFailed,
    ZeroEigenvalue,
)
from .mmio import (
    read_matrix,
    read_report,
    read_spectral,
    sha256_file,
    write_matrix,
    write_report,
    write_spectral,
)
from .objective import (
    OptimizationResult,
    OptimizeConfig,
    ResidualReport,
    eigen_residual,
    evaluate_rec_mk,
    optimize_gamma_tilde,
    rec_mk,
    residual_report,
    retained_residual,
)
from .pencil import (
    CheckReport,
    ConditionCheck,
    JordanPairCandidate,
    SpectrumResult,
    StructuredPencil,
    check_jordan_pair,
    schur_reduce,
    solve_spectrum,
    validate_pencil,
)
from .probgen import ProblemSpec, generate_pencil, perturb_targets
from .spectral import (
    RealSpectralData,
    assemble_jordan_pair,
    block_eigenvalues,
    infer_pair_count,
    from_real_representation,
    real_lambda_from_eigenvalues,
    retained_eigendata,
    select_eigendata,
    to_real_representation,
)

__version__ = "0.1.0"

__all__ = [
    "AsymmetricInput",
    "CheckReport",
    "ConditionCheck",
    "DegenerateSpectrum",
    "DimensionMismatch",
    "DuplicateEigenvalue",
    "GenerationFailed",
    "IllDefined",
    "JordanPairCandidate",
    "MalformedBlocks",
    "NoFeasiblePoint",
    "NoMatch",
    "NotConjugateClosed",
    "OptimizationResult",
    "OptimizeConfig",
    "Overlap",
    "ParameterSet",
    "ParseError",
    "ProblemSpec",
    "RankDeficient",
    "RealSpectralData",
    "ResidualReport",
    "Singular",
    "SingularBlock",
    "SingularT",
    "SpectrumResult",
    "SpilloverError",
    "StructuredPencil",
    "StructureInfeasible",
    "UpdatedSystem",
    "VerificationFailed",
    "ZeroEigenvalue",
    "assemble_jordan_pair",
    "block_eigenvalues",
    "check_jordan_pair",
    "compute_gamma1",
    "default_gamma_tilde",
    "eigen_residual",
    "embed",
    "embed_direct",
    "embed_smw",
    "evaluate_rec_mk",
    "from_real_representation",
    "gamma_free_params",
    "generate_pencil",
    "infer_pair_count",
    "optimize_gamma_tilde",
    "perturb_targets",
    "read_matrix",
    "read_report",
    "read_spectral",
    "real_lambda_from_eigenvalues",
    "rec_mk",
    "reconstruct_theorem1",
    "residual_report",
    "retained_eigendata",
    "retained_residual",
    "schur_reduce",
    "select_eigendata",
    "sha256_file",
    "solve_spectrum",
    "structured_gamma",
    "to_real_representation",
    "validate_pencil",
    "verify_theorem1",
    "write_matrix",
    "write_report",
    "write_spectral",
]
