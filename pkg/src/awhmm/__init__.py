"""Aggregated Wasserstein distances between Gaussian-emission HMMs."""

from .bench import (
    ExperimentConfig,
    RetrievalResult,
    ToyResult,
    generate_seeds,
    run_retrieval,
    select_alpha,
    toy_remark3,
)
from .distances import (
    DistanceReport,
    Registration,
    iaw,
    maw,
    register_iaw,
    register_maw,
    register_transition,
    registered_marginal_distance,
    transition_discrepancy,
)
from .errors import (
    AwhmmError,
    DegenerateDataError,
    DegenerateDensityError,
    InfeasibleError,
    InvalidInputError,
    NonConvergenceError,
)
from .gaussians import Gaussian, kl_gaussian, log_pdf, sample, sqrtm_psd, w2_gaussian
from .hmm import (
    EstimationOptions,
    Gmm,
    GmmHmm,
    TransitionMatrix,
    baum_welch,
    conditional_gmm,
    forward_loglik,
    marginal_gmm,
    simulate,
    stationary_distribution,
)
from .kl_baseline import kl_hmm
from .model_io import load_model, save_model
from .transport import CouplingMatrix, project_to_polytope, solve_exact, solve_sinkhorn

__version__ = "0.1.0"
