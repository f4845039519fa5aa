"""Experiment configuration: JSON ingestion, validation, and hashing.

All physical quantities are linear except the average-energy target,
which may be given as a number (linear) or a string with a ``dB``
suffix; the decibel form is converted as ``10 ** (value / 10)`` on
ingestion. The raw form is preserved so parse -> serialize -> parse is
the identity.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import hashlib
import json
from pathlib import Path

from .channel import ChannelParams
from .errors import ConfigError
from .sensor import SensorParams

_SWEEP_AXES = ("pav", "capacity")


def parse_pav(value) -> float:
    """Linear average-energy target from a number or a 'x dB' string."""
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        if value <= 0:
            raise ConfigError(f"pav_target must be positive, got {value}")
        return float(value)
    if isinstance(value, str):
        text = value.strip()
        if text.lower().endswith("db"):
            try:
                db = float(text[:-2].strip())
            except ValueError as exc:
                raise ConfigError(f"cannot parse pav_target {value!r}") from exc
            return 10.0 ** (db / 10.0)
        try:
            lin = float(text)
        except ValueError as exc:
            raise ConfigError(f"cannot parse pav_target {value!r}") from exc
        if lin <= 0:
            raise ConfigError(f"pav_target must be positive, got {value}")
        return lin
    raise ConfigError(f"pav_target must be a number or 'x dB' string, got {value!r}")


@dataclass(frozen=True)
class SweepSpec:
    """One sweep axis with strictly increasing values.

    Values on the ``pav`` axis are in dB; on the ``capacity`` axis they
    are battery sizes in energy units.
    """

    axis: str
    values: tuple[float, ...]

    def __post_init__(self):
        if self.axis not in _SWEEP_AXES:
            raise ConfigError(f"sweep axis must be one of {_SWEEP_AXES}, got {self.axis}")
        if len(self.values) < 1:
            raise ConfigError("sweep needs at least one value")
        if any(b <= a for a, b in zip(self.values, self.values[1:])):
            raise ConfigError("sweep values must be strictly increasing")
        if self.axis == "capacity" and any(v != int(v) or v < 1 for v in self.values):
            raise ConfigError("capacity sweep values must be positive integers")


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a reproduction run needs, seed included."""

    sensors: tuple[SensorParams, ...]
    channels: tuple[ChannelParams, ...]
    capacity: int
    harvest_prob: float
    prior: float
    pav_target_raw: object  # as given; see parse_pav
    seed: int
    false_alarm_grid: tuple[float, ...] = tuple(round(0.1 * i, 1) for i in range(1, 10))
    theta_ref: tuple[float, ...] | None = None
    theta_grid_points: int = 200
    scheme1_grid_points: int = 60
    n_channel_draws: int = 500
    trials: int = 100_000
    validation_trials: int = 1_000_000
    sweep: SweepSpec | None = None
    battery_harvest_probs: tuple[float, ...] = (0.5, 0.75, 0.82)
    battery_alt: tuple[int, float] = (50, 0.8)  # (capacity, harvest prob) pmf panel

    def __post_init__(self):
        if len(self.sensors) == 0:
            raise ConfigError("need at least one sensor")
        if len(self.sensors) != len(self.channels):
            raise ConfigError(
                f"{len(self.sensors)} sensors but {len(self.channels)} channels")
        if self.theta_ref is not None and len(self.theta_ref) != len(self.sensors):
            raise ConfigError("theta_ref length must match the sensor count")
        if self.capacity < 1:
            raise ConfigError(f"capacity must be >= 1, got {self.capacity}")
        if not 0.0 <= self.harvest_prob <= 1.0:
            raise ConfigError(f"harvest_prob must be in [0,1], got {self.harvest_prob}")
        if not 0.0 < self.prior < 1.0:
            raise ConfigError(f"prior must be in (0,1), got {self.prior}")
        if not self.false_alarm_grid or any(
                not 0.0 < a < 1.0 for a in self.false_alarm_grid):
            raise ConfigError("false_alarm_grid values must be in (0,1)")
        if any(b <= a for a, b in zip(self.false_alarm_grid, self.false_alarm_grid[1:])):
            raise ConfigError("false_alarm_grid must be strictly increasing")
        for name, val in (("theta_grid_points", self.theta_grid_points),
                          ("scheme1_grid_points", self.scheme1_grid_points)):
            if val < 2:
                raise ConfigError(f"{name} must be >= 2, got {val}")
        if self.n_channel_draws < 1:
            raise ConfigError("n_channel_draws must be >= 1")
        if self.trials < 10_000 or self.validation_trials < 10_000:
            raise ConfigError("trial counts must be at least 1e4")
        if not isinstance(self.seed, int) or isinstance(self.seed, bool) or self.seed < 0:
            raise ConfigError(f"seed must be a nonnegative integer, got {self.seed!r}")
        parse_pav(self.pav_target_raw)  # validates

    @property
    def size(self) -> int:
        return len(self.sensors)

    @property
    def pav_target(self) -> float:
        return parse_pav(self.pav_target_raw)

    def to_dict(self) -> dict:
        out = {
            "seed": self.seed,
            "prior_h1": self.prior,
            "pav_target": self.pav_target_raw,
            "capacity": self.capacity,
            "harvest_prob": self.harvest_prob,
            "false_alarm_grid": list(self.false_alarm_grid),
            "theta_grid_points": self.theta_grid_points,
            "scheme1_grid_points": self.scheme1_grid_points,
            "n_channel_draws": self.n_channel_draws,
            "trials": self.trials,
            "validation_trials": self.validation_trials,
            "battery_harvest_probs": list(self.battery_harvest_probs),
            "battery_alt": list(self.battery_alt),
            "sensors": [
                {"amplitude": s.amplitude, "n_samples": s.n_samples,
                 "noise_var": s.noise_var, "gain_var": s.gain_var}
                for s in self.sensors
            ],
            "channels": [
                {"gain_mean": c.gain_mean, "fc_noise_var": c.fc_noise_var,
                 "power_const": c.power_const}
                for c in self.channels
            ],
        }
        if self.theta_ref is not None:
            out["theta_ref"] = list(self.theta_ref)
        if self.sweep is not None:
            out["sweep"] = {"axis": self.sweep.axis,
                            "values": list(self.sweep.values)}
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return from_dict({**self.to_dict(), "seed": seed})

    def with_updates(self, **updates) -> "ExperimentConfig":
        return from_dict({**self.to_dict(), **updates})


def from_dict(data: dict) -> ExperimentConfig:
    """Build and validate a configuration from parsed JSON."""
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    try:
        sensors = tuple(
            SensorParams(amplitude=s["amplitude"], n_samples=s["n_samples"],
                         noise_var=s["noise_var"], gain_var=s["gain_var"])
            for s in data["sensors"]
        )
        channels = tuple(
            ChannelParams(gain_mean=c["gain_mean"], fc_noise_var=c["fc_noise_var"],
                          power_const=c["power_const"])
            for c in data["channels"]
        )
    except KeyError as exc:
        raise ConfigError(f"missing required field: {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid sensor/channel block: {exc}") from exc
    if "seed" not in data:
        raise ConfigError("configuration must carry a seed")

    sweep = None
    if data.get("sweep") is not None:
        raw = data["sweep"]
        try:
            sweep = SweepSpec(axis=raw["axis"], values=tuple(raw["values"]))
        except KeyError as exc:
            raise ConfigError(f"sweep block missing field: {exc}") from exc

    kwargs = {}
    for key in ("false_alarm_grid", "theta_ref", "battery_harvest_probs"):
        if data.get(key) is not None:
            kwargs[key] = tuple(data[key])
    if data.get("battery_alt") is not None:
        alt = data["battery_alt"]
        kwargs["battery_alt"] = (int(alt[0]), float(alt[1]))
    for key in ("theta_grid_points", "scheme1_grid_points", "n_channel_draws",
                "trials", "validation_trials"):
        if data.get(key) is not None:
            kwargs[key] = int(data[key])
    try:
        return ExperimentConfig(
            sensors=sensors, channels=channels,
            capacity=int(data["capacity"]),
            harvest_prob=float(data["harvest_prob"]),
            prior=float(data.get("prior_h1", 0.5)),
            pav_target_raw=data.get("pav_target", "1 dB"),
            seed=data["seed"],
            sweep=sweep,
            **kwargs,
        )
    except KeyError as exc:
        raise ConfigError(f"missing required field: {exc}") from exc
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load(path: str | Path) -> ExperimentConfig:
    """Read and validate a JSON configuration file."""
    try:
        data = json.loads(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    return from_dict(data)


def default_config(seed: int = 20260809) -> ExperimentConfig:
    """The three-sensor heterogeneous benchmark network.

    Sensor amplitudes, sample counts, channel gain means, multiplicative
    noise variances, and fusion-center noise variances follow the
    standard benchmark; the additive observation-noise variance is 1.
    """
    return from_dict({
        "seed": seed,
        "prior_h1": 0.5,
        "pav_target": "1 dB",
        "capacity": 20,
        "harvest_prob": 0.75,
        "sensors": [
            {"amplitude": 1.0, "n_samples": 100, "noise_var": 1.0, "gain_var": 1.3},
            {"amplitude": 1.0, "n_samples": 100, "noise_var": 1.0, "gain_var": 2.0},
            {"amplitude": 1.0, "n_samples": 100, "noise_var": 1.0, "gain_var": 0.9},
        ],
        "channels": [
            {"gain_mean": 1.5, "fc_noise_var": 0.9, "power_const": 1.0},
            {"gain_mean": 0.8, "fc_noise_var": 1.2, "power_const": 1.0},
            {"gain_mean": 1.4, "fc_noise_var": 0.8, "power_const": 1.0},
        ],
    })
