"""Pairwise beam-splitter entanglement detection: states, purities, network
statistics, error channels, correctors and variance analysis."""

from .beamsplitter import (
    LossStage,
    PhysicalParams,
    loss_stage,
    qbs_approx,
    qbs_exact,
    two_qubit_bs_outcome,
)
from .channels import ErrorParams, JDistribution, gaussian_position_kernel
from .correction import CombinedCorrection, SingularCorrectionError, correct_combined
from .network import OutcomeDistribution, avpur_from_pj, singles_distribution
from .purity import (
    InequalityVerdict,
    PurityProfile,
    SubsetMask,
    average_purity,
    avpur_profile,
    check_subset_inequalities,
    macro_purity_closed_form,
    reduced_purity,
    werner_detection_threshold,
)
from .states import (
    QubitRegisterState,
    apply_dephasing,
    make_classical_correlated,
    make_cluster,
    make_ghz,
    make_macro_superposition,
    make_phi_state,
    make_werner,
    pure_state,
)
from .variance import (
    MonteCarloResult,
    VarianceReport,
    analytic_bounds,
    beta_fit,
    monte_carlo_estimate,
    state_variances,
    variance_vk,
    worst_case_variance,
)

__version__ = "0.1.0"
