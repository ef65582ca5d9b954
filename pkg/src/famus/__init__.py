"""Time-slotted simulator for fairness-aware task delegation in wireless
multi-server federated learning networks."""
from .config import ConfigError, SimConfig, config_from_dict, load_config
from .engine import RunResult, RunSummary, run, simulate, sweep

__all__ = ["ConfigError", "SimConfig", "config_from_dict", "load_config",
           "RunResult", "RunSummary", "run", "simulate", "sweep"]
__version__ = "0.1.0"
