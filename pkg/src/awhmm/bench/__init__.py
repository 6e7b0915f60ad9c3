from .config import ExperimentConfig, substream
from .generators import (
    generate_seeds,
    seeds_mu_perturb,
    seeds_sigma_perturb,
    seeds_table1,
    seeds_trans_perturb,
)
from .retrieval import (
    RetrievalResult,
    auc_of_ranking,
    distance_matrix,
    estimate_instances,
    interpolated_precision,
    missing_dims_scenario,
    run_retrieval,
    select_alpha,
    time_methods,
)
from .toys import ToyResult, toy_remark3

__all__ = [
    "ExperimentConfig",
    "RetrievalResult",
    "ToyResult",
    "auc_of_ranking",
    "distance_matrix",
    "estimate_instances",
    "generate_seeds",
    "interpolated_precision",
    "missing_dims_scenario",
    "run_retrieval",
    "seeds_mu_perturb",
    "seeds_sigma_perturb",
    "seeds_table1",
    "seeds_trans_perturb",
    "select_alpha",
    "substream",
    "time_methods",
    "toy_remark3",
]
