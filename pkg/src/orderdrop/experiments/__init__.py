from .centralized import run_centralized, run_centralized_seed, train_centralized
from .config import ConfigError, ExperimentConfig, default_config, load_config, parse_config
from .cost_table import run_cost_table
from .federated import run_federated
from .linalg import best_rank_approx, jacobi_svd, numerical_rank
from .report import final_stats, write_report
from .svd_recovery import Divergence, SvdExperimentConfig, SvdResult, run_svd_experiment, run_svd_recovery, write_svd_report

__all__ = [
    "run_centralized",
    "run_centralized_seed",
    "train_centralized",
    "ConfigError",
    "ExperimentConfig",
    "default_config",
    "load_config",
    "parse_config",
    "run_cost_table",
    "run_federated",
    "best_rank_approx",
    "jacobi_svd",
    "numerical_rank",
    "final_stats",
    "write_report",
    "Divergence",
    "SvdExperimentConfig",
    "SvdResult",
    "run_svd_experiment",
    "run_svd_recovery",
    "write_svd_report",
]
