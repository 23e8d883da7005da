"""Training and evaluating recommendation policies on logged bandit feedback."""
from .agents import FitOptions, FitResult, PriorSpec, fit
from .core import BanditEvent, LogDataset, read_log, validate_dataset, write_log
from .estimators import empirical_ctr, ips_value, ips_value_clipped, jensen_lower_bound
from .features import greedy_action, kron_features, scores, softmax_policy
from .simulator import SimConfig, ab_test, generate_logs, new_env

__version__ = "0.1.0"

__all__ = [
    "BanditEvent",
    "FitOptions",
    "FitResult",
    "LogDataset",
    "PriorSpec",
    "SimConfig",
    "ab_test",
    "empirical_ctr",
    "fit",
    "generate_logs",
    "greedy_action",
    "ips_value",
    "ips_value_clipped",
    "jensen_lower_bound",
    "kron_features",
    "new_env",
    "read_log",
    "scores",
    "softmax_policy",
    "validate_dataset",
    "write_log",
]
