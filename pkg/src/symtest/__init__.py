"""Monte Carlo tests of distributional invariance and equivariance."""

__version__ = "0.1.0"

from .errors import (
    AllPointsIdentical,
    BadLandmarkCount,
    BadMonteCarloBudget,
    BadParameters,
    BadProjectionCount,
    ConfigInvalid,
    DataFileMissing,
    DegenerateDensity,
    DegenerateVariance,
    DimensionMismatch,
    EmptyGrid,
    EmptySample,
    InvalidRotation,
    IoError,
    NonCompactGroup,
    ParseError,
    RangeError,
    RankDeficientDesign,
    SampleTooSmall,
    SchemaMismatch,
    SingularSolve,
    SymtestError,
    TooFewValues,
    UnsupportedFamily,
    UnsupportedKind,
    VariantMismatch,
    ZeroVector,
)
from .groups import (
    GroupSpec,
    Permutation,
    ProductElement,
    Rotation,
    act,
    compose,
    discrete_rotations,
    inverse,
    inversion_kernel_sample,
    maximal_invariant,
    orbit_selector,
    paired_so2,
    parse_group,
    TransformBatch,
    element_apply,
    haar_rotations,
    identity,
    representative_inversion,
    sample_batch,
    sample_haar,
    so,
    so2xso2,
    sym,
    trivial,
)
from .kernels import (
    DiscreteDelta,
    GaussianRBF,
    RotationKernelSO3,
    center,
    eval_kernel,
    gram,
    median_heuristic,
    parse_kernel,
)
from .mmd import (
    MmdEstimate,
    equivariant_shortcut_stat,
    invariance_stat_u,
    invariance_stat_v,
    mmd_equivariant_shortcut,
    mmd_invariance_u,
    mmd_nystrom,
    mmd_u,
    mmd_v,
    nystrom_invariance_stat,
)
from .invariance import (
    PowerEstimate,
    TestResult,
    conditional_power_binomial,
    cw_statistic,
    cw_test,
    inversion_mc_test,
    ks_distance,
    mc_invariance_test,
    power_estimate,
    pvalue_from_nulls,
    transformation_two_sample_test,
    two_sample_mmd_test,
)
from .condsym import (
    KciConfig,
    PairedDataset,
    cp_test,
    kcde_swap_odds,
    kci_null_samples,
    kci_statistic,
    kci_test,
    kci_test_data,
    multiple_correlation_statistic,
    transform_responses,
)
from .synthdata import (
    Generator,
    chi_sample,
    exchangeable_cov,
    parse_generator,
    sample,
    vmf_sample,
)
from .harness import (
    ExperimentConfig,
    SimulationReport,
    emit_report,
    ingest_csv,
    preprocess_dijet,
    preprocess_swarm,
    pvalue_uniformity_check,
    run_power_estimate,
    run_replication,
    run_simulation,
    tune_bandwidths,
)
