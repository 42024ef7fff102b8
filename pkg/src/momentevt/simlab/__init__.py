"""Monte Carlo laboratory: declarative experiments, deterministic seeding, CSV/JSON output."""

from .config import ExperimentConfig, load_config, parse_config
from .experiments import ReplicationRecord, run_replication, summarize
from .runner import emit, run_experiment, run_records
from .seeding import derive_seed

__all__ = [
    "ExperimentConfig",
    "ReplicationRecord",
    "derive_seed",
    "emit",
    "load_config",
    "parse_config",
    "run_experiment",
    "run_records",
    "run_replication",
    "summarize",
]
