"""Distributed detection with energy-harvesting sensors.

Library layout mirrors the model pipeline: ``specfun`` (detector special
functions), ``sensor`` (local energy detector), ``channel`` (fading,
channel inversion, energy constraint), ``battery`` (storage chain),
``fusion`` (fusion-center statistics and oracles), ``optimizer``
(threshold schemes), ``network`` (assembly), ``experiments``/``cli``
(reproduction harness).
"""

from .battery import (BatteryParams, SimulationResult, StationaryBattery, rho,
                      simulate_chain, stationary_pmf, transition_matrix)
from .channel import (ChannelParams, ConsumptionPmf, ZetaSolution,
                      consumption_pmf, energy_units, pav_formula, pav_oracle,
                      solve_zeta)
from .config import ExperimentConfig, default_config, load, parse_pav
from .errors import ConfigError, ConvergenceError
from .fusion import (ChannelDraw, ChannelDrawSet, ClosedFormRoc, FusionMoments,
                     OperatingPoint, RocTable, average_closed_form_pd,
                     closed_form_pf_pd, fusion_moments, kl_gaussian_approx,
                     kl_lowsnr_approx, kl_true, linearized_coeffs, lrt_exact,
                     monte_carlo_roc, operating_point)
from .network import NetworkModel, SensorLink, build_network
from .optimizer import (OptimizationResult, ThresholdGrid, common_threshold,
                        scheme1_max_pd, scheme2_max_kl)
from .sensor import SensorParams, local_pd, local_pf, sample_statistic
from .specfun import log_bessel_i, marcum_q, reg_upper_gamma

__version__ = "0.1.0"

__all__ = [
    "BatteryParams", "ChannelDraw", "ChannelDrawSet", "ChannelParams",
    "ClosedFormRoc", "ConfigError", "ConsumptionPmf", "ConvergenceError",
    "ExperimentConfig", "FusionMoments", "NetworkModel", "OperatingPoint",
    "OptimizationResult", "RocTable", "SensorLink", "SensorParams",
    "SimulationResult", "StationaryBattery", "ThresholdGrid", "ZetaSolution",
    "average_closed_form_pd", "build_network", "closed_form_pf_pd",
    "common_threshold", "consumption_pmf", "default_config", "energy_units",
    "fusion_moments", "kl_gaussian_approx", "kl_lowsnr_approx", "kl_true",
    "linearized_coeffs", "load", "local_pd", "local_pf", "log_bessel_i",
    "lrt_exact", "marcum_q", "monte_carlo_roc", "operating_point",
    "parse_pav", "pav_formula", "pav_oracle", "reg_upper_gamma", "rho",
    "sample_statistic", "scheme1_max_pd", "scheme2_max_kl", "simulate_chain",
    "solve_zeta", "stationary_pmf", "transition_matrix",
]
