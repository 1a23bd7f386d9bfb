"""Command line, experiment configuration and run persistence."""
from .config import ConfigError, ExperimentConfig, SweepConfig, load_config, parse_config
from .experiments import (Dataset, cmd_fit, cmd_gen, cmd_spectrum, cmd_sweep, fit_batch, load_dataset,
                          loglog_slope, make_dataset, run_sweep)
