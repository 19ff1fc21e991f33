from .config import ConfigError, ExperimentConfig, SweepPoint, build_config, load_config, parse_config
from .output import OutputError, read_results, side_path, write_experiment, write_results
from .runner import ExperimentError, ExperimentResult, run_experiment
