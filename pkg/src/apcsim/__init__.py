"""Multi-AP channel-access simulation with a proportional-fair controller.

Deterministic slotted-MAC simulation of dense overlapping APs under DCF
basic, RTS/CTS, shared-TXOP, and learning-based channel access, plus a
fixed-point analytical throughput model for the handshake protocols.
"""

from .agent import DlcaAgent, Hyperparams
from .analytics import MetricsTrace, bianchi_fixed_point, channel_throughput
from .apc import AllocationPlan, FairnessLedger, fomaml_round, greedy_pf_allocate
from .engines import Perturbation, run_dcf_trial, run_dlca_trial, run_shtxop_trial
from .qnn import QnnParams, forward, semi_gradient_update
from .reports import emit_csv, emit_sweep_csv
from .runner import RunReport, run_scenario, run_sweep
from .scenarios import ConfigError, ScenarioConfig, load_config, preset, preset_names
from .simcore import ChannelModel, FadingMode, RngStream, TimingParams

__version__ = "0.1.0"

__all__ = [
    "AllocationPlan",
    "ChannelModel",
    "ConfigError",
    "DlcaAgent",
    "FadingMode",
    "FairnessLedger",
    "Hyperparams",
    "MetricsTrace",
    "Perturbation",
    "QnnParams",
    "RngStream",
    "RunReport",
    "ScenarioConfig",
    "TimingParams",
    "bianchi_fixed_point",
    "channel_throughput",
    "emit_csv",
    "emit_sweep_csv",
    "fomaml_round",
    "forward",
    "greedy_pf_allocate",
    "load_config",
    "preset",
    "preset_names",
    "run_dcf_trial",
    "run_dlca_trial",
    "run_scenario",
    "run_shtxop_trial",
    "run_sweep",
    "semi_gradient_update",
    "__version__",
]
