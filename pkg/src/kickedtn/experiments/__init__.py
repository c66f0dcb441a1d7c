"""Ensembles, sweeps, scaling collapse and result files."""

from .collapse import CollapseFit, Series, scaling_collapse
from .config import ConfigError, Disorder, ExperimentConfig, load_config
from .ensembles import disorder_average, entropy_ensemble
