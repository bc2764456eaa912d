"""Max-min two-way rate optimization for RIS-assisted multi-pair OFDM links."""

from .config import ConfigError, SystemConfig
from .harness import SCHEMES, TrialResult, monte_carlo, run_scheme

__all__ = ["ConfigError", "SystemConfig", "SCHEMES", "TrialResult", "monte_carlo", "run_scheme"]
__version__ = "0.1.0"
