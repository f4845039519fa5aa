import numpy as np
import pytest

from ehdetect.config import default_config, from_dict
from ehdetect.experiments import build_model, stream_rng


@pytest.fixture(scope="session")
def benchmark_cfg():
    return default_config()


@pytest.fixture(scope="session")
def benchmark_model(benchmark_cfg):
    return build_model(benchmark_cfg)


@pytest.fixture(scope="session")
def benchmark_draws(benchmark_cfg, benchmark_model):
    return benchmark_model.sample_draws(
        benchmark_cfg.n_channel_draws, stream_rng(benchmark_cfg.seed, 1))


@pytest.fixture(scope="session")
def tiny_cfg():
    """Two-sensor network sized so every runner finishes in seconds."""
    return from_dict({
        "seed": 321,
        "prior_h1": 0.5,
        "pav_target": "1 dB",
        "capacity": 8,
        "harvest_prob": 0.7,
        "false_alarm_grid": [0.3, 0.5, 0.7],
        "theta_grid_points": 15,
        "scheme1_grid_points": 10,
        "n_channel_draws": 50,
        "trials": 10_000,
        "validation_trials": 10_000,
        "sensors": [
            {"amplitude": 1.0, "n_samples": 20, "noise_var": 1.0, "gain_var": 1.5},
            {"amplitude": 1.0, "n_samples": 20, "noise_var": 1.0, "gain_var": 0.8},
        ],
        "channels": [
            {"gain_mean": 1.2, "fc_noise_var": 1.0, "power_const": 1.0},
            {"gain_mean": 0.9, "fc_noise_var": 0.8, "power_const": 1.0},
        ],
    })


@pytest.fixture(scope="session")
def tiny_model(tiny_cfg):
    return build_model(tiny_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
