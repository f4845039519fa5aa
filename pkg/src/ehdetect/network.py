"""Network assembly: solve the per-sensor truncation thresholds under
the average-energy constraint, close each battery chain, and expose the
operating factors the fusion closed forms and optimizers consume.

The truncation cutoffs are fixed before any threshold search, using the
detector evaluated at a declared reference threshold (``theta_ref``,
defaulting to the additive noise variance). The battery chain, by
contrast, is re-closed at whatever threshold an operating point is
requested for: the chain's transmit probability depends on the local
threshold, so the affordability factor follows the threshold under
optimization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .battery import BatteryParams, StationaryBattery, rho, stationary_pmf
from .channel import ChannelParams, ConsumptionPmf, consumption_pmf, solve_zeta
from .fusion import ChannelDrawSet, OperatingPoint, operating_point
from .sensor import SensorParams, local_pd, local_pf


@dataclass(frozen=True)
class SensorLink:
    """One sensor with its solved channel cutoff and battery factors."""

    sensor: SensorParams  # threshold field = the reference threshold
    channel: ChannelParams  # cutoff populated by the energy solve
    consumption: ConsumptionPmf
    stationary: StationaryBattery
    rho: float
    q: float
    transmit_prob: float
    zeta_slack: bool


@dataclass(frozen=True)
class NetworkModel:
    """Assembled detection network, ready for threshold search."""

    links: tuple[SensorLink, ...]
    capacity: int
    harvest_prob: float
    prior: float
    pav_target: float

    @property
    def size(self) -> int:
        return len(self.links)

    @property
    def sensors(self) -> list[SensorParams]:
        return [ln.sensor for ln in self.links]

    @property
    def channels(self) -> list[ChannelParams]:
        return [ln.channel for ln in self.links]

    @property
    def batteries(self) -> list[StationaryBattery]:
        return [ln.stationary for ln in self.links]

    @property
    def fc_noise_vars(self) -> np.ndarray:
        return np.array([ln.channel.fc_noise_var for ln in self.links])

    def chain_at(self, k: int, theta: float) -> tuple[StationaryBattery, float]:
        """Battery chain of sensor k re-closed at the given threshold."""
        ln = self.links[k]
        sen = ln.sensor.with_threshold(theta)
        tp = self.prior * local_pd(sen) + (1.0 - self.prior) * local_pf(sen)
        _, stat, rho_val = _chain_for(ln.channel, self.capacity,
                                      self.harvest_prob, tp,
                                      consumption=ln.consumption)
        return stat, rho_val

    def operating_point(self, k: int, theta: float) -> OperatingPoint:
        ln = self.links[k]
        _, rho_val = self.chain_at(k, theta)
        return operating_point(ln.sensor.with_threshold(theta), rho_val, ln.q)

    def operating_points(self, thetas: Sequence[float]) -> list[OperatingPoint]:
        return [self.operating_point(k, t) for k, t in enumerate(thetas)]

    def batteries_at(self, thetas: Sequence[float]) -> list[StationaryBattery]:
        return [self.chain_at(k, t)[0] for k, t in enumerate(thetas)]

    def alpha_beta_grid(self, k: int, thetas: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """alpha_k and beta_k over a threshold grid (chain re-closed per point)."""
        ln = self.links[k]
        pd = np.array([local_pd(ln.sensor.with_threshold(t)) for t in thetas])
        pf = np.array([local_pf(ln.sensor.with_threshold(t)) for t in thetas])
        tp = self.prior * pd + (1.0 - self.prior) * pf
        rho_vals = np.empty_like(pd)
        for i in range(len(thetas)):
            _, _, rho_vals[i] = _chain_for(ln.channel, self.capacity,
                                           self.harvest_prob, float(tp[i]),
                                           consumption=ln.consumption)
        return pd * rho_vals * ln.q, pf * rho_vals * ln.q

    def sample_draws(self, n_draws: int, rng: np.random.Generator) -> ChannelDrawSet:
        return ChannelDrawSet.sample(self.channels, n_draws, rng)


def _chain_for(channel: ChannelParams, capacity: int, harvest_prob: float,
               transmit_prob: float, consumption: ConsumptionPmf | None = None,
               ) -> tuple[ConsumptionPmf, StationaryBattery, float]:
    cons = consumption if consumption is not None \
        else consumption_pmf(channel, max_units=capacity)
    params = BatteryParams(capacity=capacity, harvest_prob=harvest_prob,
                           transmit_prob=transmit_prob, consumption=cons)
    stat = stationary_pmf(params)
    return cons, stat, rho(stat, cons)


def build_network(sensors: Sequence[SensorParams],
                  channels: Sequence[ChannelParams],
                  capacity: int,
                  harvest_prob: float,
                  prior: float,
                  pav_target: float,
                  theta_ref: Sequence[float] | None = None) -> NetworkModel:
    """Assemble the network for a given average-energy target.

    For every sensor the truncation cutoff is solved so that the
    printed average-energy sum meets ``pav_target``, with the transmit
    probability recomputed at each cutoff iterate (it feeds back through
    the clearing probability and the stationary battery). Detector
    probabilities are evaluated at the reference thresholds.
    """
    if len(sensors) != len(channels):
        raise ValueError("sensors and channels must have equal length")
    if not 0.0 < prior < 1.0:
        raise ValueError(f"prior must be in (0,1), got {prior}")
    refs = ([s.noise_var for s in sensors] if theta_ref is None
            else [float(t) for t in theta_ref])
    if len(refs) != len(sensors):
        raise ValueError("theta_ref length must match the sensor count")

    links = []
    for sen, ch, ref in zip(sensors, channels, refs):
        sen_ref = sen.with_threshold(ref)
        p_d = local_pd(sen_ref)
        p_f = local_pf(sen_ref)
        tp = prior * p_d + (1.0 - prior) * p_f

        def alpha_at(zeta: float) -> float:
            trial = ch.with_cutoff(zeta)
            _, _, rho_z = _chain_for(trial, capacity, harvest_prob, tp)
            return p_d * rho_z * trial.clear_prob

        sol = solve_zeta(ch, alpha_at, pav_target)
        solved = ch.with_cutoff(sol.zeta)
        cons, stat, rho_val = _chain_for(solved, capacity, harvest_prob, tp)
        links.append(SensorLink(
            sensor=sen_ref, channel=solved, consumption=cons, stationary=stat,
            rho=rho_val, q=solved.clear_prob, transmit_prob=tp,
            zeta_slack=sol.slack,
        ))
    return NetworkModel(links=tuple(links), capacity=capacity,
                        harvest_prob=harvest_prob, prior=prior,
                        pav_target=pav_target)
