"""Secrecy-rate simulation and GA optimisation for RIS-aided indoor VLC downlinks."""

__version__ = "0.1.0"

from .channel import ChannelGeometry, ChannelState, assemble_channels, concentrator_gain, lambertian_order
from .optimizer import GaConfig, GaResult, ProblemSpec, brute_force_oracle, run_ga
from .rates import noma_coefficients, total_power
from .scenario import Scenario, SystemParameters, build_default_scenario

__all__ = [
    "ChannelGeometry", "ChannelState", "assemble_channels", "concentrator_gain", "lambertian_order",
    "GaConfig", "GaResult", "ProblemSpec", "brute_force_oracle", "run_ga",
    "noma_coefficients", "total_power", "Scenario", "SystemParameters", "build_default_scenario",
]
