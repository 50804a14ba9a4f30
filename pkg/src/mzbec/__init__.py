"""Two-mode BEC Mach-Zehnder interferometer simulator.

Phase sensitivity of an interacting double-well atom interferometer:
quantum and classical Fisher-information bounds, detection-error
degradation, and simulated Bayesian phase estimation, with scan
pipelines for N-scaling, accumulation-time, and squeezing studies.
"""

from .dynamics import (
    Propagator,
    SequenceParams,
    build_hamiltonian,
    dpsi_dtheta,
    ideal_mz,
    mz_sequence,
    phase_accumulate,
    propagate,
    propagator,
)
from .errors import BisectionError, ConfigurationError, EstimationFailure, NumericalFailure
from .estimation import (
    EstimationOutcome,
    EstimationRun,
    LikelihoodTable,
    bayesian_estimate,
    likelihood_table,
    monte_carlo_sensitivity,
    posterior_weights,
    sample_outcomes,
)
from .experiments import (
    HusimiMap,
    PrefactorFit,
    ProbabilityMap,
    ScanFailure,
    ScanSpec,
    ScanTable,
    TeScanResult,
    TransitionRow,
    count_local_maxima,
    fit_prefactor,
    husimi_map,
    input_state,
    probability_map,
    scan_scaling,
    scan_te_optimum,
    scan_xi_transition,
)
from .metrology import (
    DetectionErrorKernel,
    FisherRatioReport,
    SensitivityResult,
    cfi,
    detection_kernel,
    fisher_ratio_check,
    qfi_crlb,
)
from .spin import (
    CollectiveOperator,
    OperatorSet,
    OutcomeDistribution,
    StateVector,
    coherent_amplitudes,
    collective_operators,
    expectation,
    husimi_q,
    ladder_elements,
    mu_values,
    outcome_distribution,
    variance,
)
from .states import (
    SqueezingFactor,
    binomial_state,
    coupling_ground_state,
    number_squeezing,
    squeezed_ground_state,
    twin_fock,
)

__version__ = "0.1.0"
