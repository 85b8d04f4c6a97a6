"""Exact particle filters for linear-Gaussian continuous-time filtering.

Contrasts the stochastic feedback particle filter with its deterministic
optimal-transport counterpart and measures how much simulation variance
the latter removes.
"""

__version__ = "0.1.0"

from .ensembles import Ensemble, FilterKind, fpf_step, init_ensemble, mc_step, ot_fpf_step, run_filter
from .errors import (
    ConfigError,
    DegenerateEnsembleError,
    FilterError,
    InvalidInputError,
    NotPSDError,
    NumericalInstabilityError,
    ReplicationError,
    SingularMatrixError,
    UnsupportedReferenceError,
)
from .experiments import (
    ExperimentConfig,
    ExperimentReport,
    analytic_reference,
    run_filtering_comparison,
    run_variance_study,
)
from .matrixeq import solve_lyapunov, solve_skew_equation, spd_inv_sqrt, spd_sqrt
from .models import (
    GaussianBelief,
    LinearGaussianModel,
    ObservationPath,
    kalman_bucy_step,
    run_kalman_bucy,
    simulate_truth_and_observations,
)
from .transport import (
    AffineMap,
    gaussian_ot_map,
    lemma1_residual,
    time_stepping_process,
    wasserstein2_gaussians,
)
