"""Fusion-center statistics: transmit probabilities, exact and
linearized likelihood ratios, Gaussian closed-form ROC, Kullback-Leibler
objectives, and an end-to-end Monte Carlo ROC oracle.

Conditioned on a channel realization, the signal received from sensor k
is a two-component Gaussian mixture whose nonzero mean is
``c_k = ceil(power_const/|h_k|) * |h_k|`` and whose mixture weights are
the transmit probabilities ``alpha`` (under H1) and ``beta`` (under H0).
"""

from __future__ import annotations

from dataclasses import dataclass
import math
import warnings
from typing import Sequence

import numpy as np
import scipy.special as sc
from scipy import integrate

from .battery import StationaryBattery
from .channel import ChannelParams
from .sensor import SensorParams, local_pd, local_pf

_PROB_CLAMP = 1e-12


def _clamp(p):
    return np.clip(p, _PROB_CLAMP, 1.0 - _PROB_CLAMP)


def _qfunc(x):
    """Standard normal tail probability."""
    return sc.ndtr(-np.asarray(x, dtype=float))


def _qfunc_inv(a):
    return -sc.ndtri(a)


@dataclass(frozen=True)
class OperatingPoint:
    """Per-sensor probabilities entering the fusion rule."""

    p_f: float
    p_d: float
    rho: float
    q: float
    alpha: float
    beta: float


def operating_point(sensor: SensorParams, rho: float, q: float) -> OperatingPoint:
    """Bundle the detector, battery, and channel factors of one sensor.

    alpha = P_d * rho * q is the transmit probability under H1 and
    beta = P_f * rho * q the one under H0.
    """
    p_f = local_pf(sensor)
    p_d = local_pd(sensor)
    return OperatingPoint(p_f=p_f, p_d=p_d, rho=rho, q=q,
                          alpha=p_d * rho * q, beta=p_f * rho * q)


@dataclass(frozen=True)
class ChannelDraw:
    """One realization of the channel magnitudes across the network.

    h holds |h_k| and c the received means ceil(power_const/|h_k|)*|h_k|.
    """

    h: np.ndarray
    c: np.ndarray

    @classmethod
    def from_magnitudes(cls, h: np.ndarray,
                        channels: Sequence[ChannelParams]) -> "ChannelDraw":
        h = np.asarray(h, dtype=float)
        if np.any(h <= 0):
            raise ValueError("channel magnitudes must be positive")
        lam = np.array([ch.power_const for ch in channels])
        c = np.ceil(lam / h) * h
        return cls(h=h, c=c)


@dataclass(frozen=True)
class ChannelDrawSet:
    """A batch of independent channel realizations (rows are draws)."""

    h: np.ndarray  # (n_draws, K)
    c: np.ndarray  # (n_draws, K)

    @classmethod
    def sample(cls, channels: Sequence[ChannelParams], n_draws: int,
               rng: np.random.Generator) -> "ChannelDrawSet":
        gains = np.array([ch.gain_mean for ch in channels])
        lam = np.array([ch.power_const for ch in channels])
        h = np.sqrt(rng.exponential(gains, size=(n_draws, len(channels))))
        return cls(h=h, c=np.ceil(lam / h) * h)

    def __len__(self) -> int:
        return self.h.shape[0]

    def draw(self, i: int) -> ChannelDraw:
        return ChannelDraw(h=self.h[i], c=self.c[i])


@dataclass(frozen=True)
class FusionMoments:
    """Moments of the linearized fusion statistic for one channel draw."""

    mu0: np.ndarray
    mu1: np.ndarray
    var0: np.ndarray
    var1: np.ndarray
    nu: np.ndarray
    offset: float
    mu_delta_h0: float
    mu_delta_h1: float
    var_delta_h0: float
    var_delta_h1: float


def fusion_moments(draw: ChannelDraw, ops: Sequence[OperatingPoint],
                   sigma_n2: np.ndarray) -> FusionMoments:
    """Per-sensor received-signal moments and their aggregates."""
    alpha = np.array([op.alpha for op in ops])
    beta = np.array([op.beta for op in ops])
    s2 = np.asarray(sigma_n2, dtype=float)
    c = draw.c
    nu = c * (alpha - beta) / s2
    offset = float(np.sum(c * c * (alpha - beta) / (2.0 * s2)))
    mu0 = c * beta
    mu1 = c * alpha
    var0 = c * c * beta * (1.0 - beta) + s2
    var1 = c * c * alpha * (1.0 - alpha) + s2
    return FusionMoments(
        mu0=mu0, mu1=mu1, var0=var0, var1=var1, nu=nu, offset=offset,
        mu_delta_h0=float(-offset + np.sum(nu * mu0)),
        mu_delta_h1=float(-offset + np.sum(nu * mu1)),
        var_delta_h0=float(np.sum(nu * nu * var0)),
        var_delta_h1=float(np.sum(nu * nu * var1)),
    )


def lrt_exact(y: np.ndarray, draw: ChannelDraw, ops: Sequence[OperatingPoint],
              sigma_n2: np.ndarray) -> float | np.ndarray:
    """Exact log-likelihood ratio of the received vector.

    Accepts a single K-vector or an (n, K) batch sharing the draw.
    Mixture weights are clamped to [1e-12, 1 - 1e-12] so boundary
    operating points stay finite.
    """
    alpha = _clamp(np.array([op.alpha for op in ops]))
    beta = _clamp(np.array([op.beta for op in ops]))
    y = np.asarray(y, dtype=float)
    out = _lrt_core(y, draw.c, alpha, beta, np.asarray(sigma_n2, dtype=float))
    return float(out) if y.ndim == 1 else out


def _lrt_core(y, c, alpha, beta, s2):
    """Log-sum-exp evaluation of the per-sensor mixture log ratios."""
    e1 = -((y - c) ** 2) / (2.0 * s2)
    e0 = -(y * y) / (2.0 * s2)
    num = np.logaddexp(np.log(alpha) + e1, np.log1p(-alpha) + e0)
    den = np.logaddexp(np.log(beta) + e1, np.log1p(-beta) + e0)
    return np.sum(num - den, axis=-1)


def linearized_coeffs(draw: ChannelDraw, ops: Sequence[OperatingPoint],
                      sigma_n2: np.ndarray) -> tuple[float, np.ndarray]:
    """Offset and weights of the low-SNR linear fusion statistic.

    The statistic is ``-offset + nu . y`` with
    nu_k = c_k (alpha_k - beta_k) / sigma_n2_k.
    """
    m = fusion_moments(draw, ops, sigma_n2)
    return m.offset, m.nu


@dataclass(frozen=True)
class ClosedFormRoc:
    """Gaussian-approximation operating point of the fusion test."""

    p_f: float
    p_d: float
    tau: float
    degenerate: bool


def closed_form_pf_pd(draw: ChannelDraw, ops: Sequence[OperatingPoint],
                      sigma_n2: np.ndarray, a: float) -> ClosedFormRoc:
    """Closed-form (P_F, P_D) of the linearized test at budget ``a``.

    The threshold comes from inverting the Gaussian false-alarm
    constraint; the detection probability follows from the H1 moments.
    When every sensor is uninformative (all nu = 0) the statistic is
    degenerate and P_D is defined to equal the budget.
    """
    if not 0.0 < a < 1.0:
        raise ValueError(f"false-alarm budget must be in (0,1), got {a}")
    m = fusion_moments(draw, ops, sigma_n2)
    s0 = math.sqrt(m.var_delta_h0)
    s1 = math.sqrt(m.var_delta_h1)
    if s1 == 0.0:
        return ClosedFormRoc(p_f=a, p_d=a, tau=m.mu_delta_h0, degenerate=True)
    tau = _qfunc_inv(a) * s0 + m.mu_delta_h0
    p_d = float(_qfunc((tau - m.mu_delta_h1) / s1))
    return ClosedFormRoc(p_f=a, p_d=p_d, tau=float(tau), degenerate=False)


def closed_form_pd_terms(c, alpha, beta, sigma_n2):
    """Per-sensor moment pieces of the closed-form P_D, broadcastable.

    Returns (gap, v0, v1) where the network values are sums over the
    sensor axis: P_D = Q((Qinv(a) sqrt(sum v0) - sum gap) / sqrt(sum v1)).
    """
    nu = c * (alpha - beta) / sigma_n2
    gap = nu * c * (alpha - beta)
    v0 = nu * nu * (c * c * beta * (1.0 - beta) + sigma_n2)
    v1 = nu * nu * (c * c * alpha * (1.0 - alpha) + sigma_n2)
    return gap, v0, v1


def closed_form_pd_from_sums(gap_sum, v0_sum, v1_sum, a):
    """Network P_D from summed per-sensor pieces (see closed_form_pd_terms)."""
    s1 = np.sqrt(v1_sum)
    z = np.where(s1 > 0.0,
                 (_qfunc_inv(a) * np.sqrt(v0_sum) - gap_sum) / np.where(s1 > 0, s1, 1.0),
                 _qfunc_inv(a))
    return _qfunc(z)


def average_closed_form_pd(draws: ChannelDrawSet, ops: Sequence[OperatingPoint],
                           sigma_n2: np.ndarray, a: float) -> tuple[float, float]:
    """Closed-form P_D averaged over a set of channel draws.

    Returns the mean and the across-draw standard deviation, which is
    how a ROC over fading has to be read when the closed forms condition
    on the realized channel.
    """
    alpha = np.array([op.alpha for op in ops])
    beta = np.array([op.beta for op in ops])
    s2 = np.asarray(sigma_n2, dtype=float)
    gap, v0, v1 = closed_form_pd_terms(draws.c, alpha[None, :], beta[None, :],
                                       s2[None, :])
    pd = closed_form_pd_from_sums(gap.sum(axis=1), v0.sum(axis=1),
                                  v1.sum(axis=1), a)
    return float(pd.mean()), float(pd.std())


def kl_gaussian_approx(moments: FusionMoments, k: int) -> float:
    """Gaussian-vs-Gaussian approximation of sensor k's KL distance."""
    return float(_kl_gaussian(moments.mu0[k], moments.mu1[k],
                              moments.var0[k], moments.var1[k]))


def _kl_gaussian(mu0, mu1, var0, var1):
    return 0.5 * np.log(var0 / var1) + (var1 - var0 + (mu1 - mu0) ** 2) / (2.0 * var0)


def kl_gaussian_terms(c, alpha, beta, sigma_n2):
    """Array form of the Gaussian KL approximation, broadcastable."""
    mu0 = c * beta
    mu1 = c * alpha
    var0 = c * c * beta * (1.0 - beta) + sigma_n2
    var1 = c * c * alpha * (1.0 - alpha) + sigma_n2
    return _kl_gaussian(mu0, mu1, var0, var1)


def kl_lowsnr_approx(c, alpha, beta, sigma_n2, eval_point=None):
    """Low-SNR expansion of the per-sensor KL distance, broadcastable.

    The expansion leaves the received signal as a free symbol; it is
    bound to ``eval_point`` (the received mean ``c`` by default). The
    expression is signed, so callers maximizing it should treat it as a
    surrogate score rather than a distance.
    """
    c = np.asarray(c, dtype=float)
    y = c if eval_point is None else np.asarray(eval_point, dtype=float)
    sn = np.sqrt(sigma_n2)
    brace = (
        c * np.sqrt(np.pi / (2.0 * sigma_n2))
        * ((1.0 - alpha) * (_qfunc(y / sn) - 0.5) + alpha * _qfunc((y - c) / sn))
        + alpha * np.exp(-((c - y) ** 2) / (2.0 * sigma_n2))
        + (1.0 - alpha) * np.exp(-(y * y) / (2.0 * sigma_n2))
    )
    return c * (beta - alpha) * brace


def kl_true(c: float, alpha: float, beta: float, sigma_n2: float,
            abs_tol: float = 1e-9) -> float:
    """KL distance between the H1 and H0 received-signal mixtures.

    Adaptive quadrature of the defining integral over the two
    two-component Gaussian mixtures with means {0, c} and common
    variance ``sigma_n2``. Mixture weights are clamped away from 0 and 1
    (with a warning) because the divergence blows up at the boundary.
    """
    if sigma_n2 <= 0:
        raise ValueError(f"sigma_n2 must be positive, got {sigma_n2}")
    a_cl = float(_clamp(alpha))
    b_cl = float(_clamp(beta))
    if a_cl != alpha or b_cl != beta:
        warnings.warn(
            f"kl_true clamped mixture weights to ({a_cl:.3g}, {b_cl:.3g})",
            RuntimeWarning, stacklevel=2)
    if a_cl == b_cl:
        return 0.0
    sn = math.sqrt(sigma_n2)
    norm = 1.0 / (sn * math.sqrt(2.0 * math.pi))

    def integrand(y):
        g1 = norm * math.exp(-((y - c) ** 2) / (2.0 * sigma_n2))
        g0 = norm * math.exp(-(y * y) / (2.0 * sigma_n2))
        f1 = a_cl * g1 + (1.0 - a_cl) * g0
        f0 = b_cl * g1 + (1.0 - b_cl) * g0
        if f1 <= 0.0:
            return 0.0
        return f1 * (math.log(f1) - math.log(f0))

    lo = min(0.0, c) - 13.0 * sn
    hi = max(0.0, c) + 13.0 * sn
    val, _ = integrate.quad(integrand, lo, hi, points=[0.0, c],
                            epsabs=abs_tol * 0.1, epsrel=1e-10, limit=400)
    return max(val, 0.0)


@dataclass(frozen=True)
class RocTable:
    """Empirical ROC traced at a grid of false-alarm budgets."""

    a: np.ndarray
    pf_emp: np.ndarray
    pd_emp: np.ndarray
    stderr: np.ndarray
    n_h0: int
    n_h1: int


def monte_carlo_roc(sensors: Sequence[SensorParams],
                    channels: Sequence[ChannelParams],
                    batteries: Sequence[StationaryBattery],
                    ops: Sequence[OperatingPoint],
                    prior: float,
                    a_grid: np.ndarray,
                    trials: int,
                    rng: np.random.Generator,
                    statistic: str = "exact") -> RocTable:
    """End-to-end Monte Carlo ROC of the fusion test.

    Per trial: a hypothesis is drawn with prior ``prior``; each sensor
    draws its energy statistic (chi-square / noncentral chi-square, the
    exact law of the sampled periods), an independent channel magnitude,
    and a battery state from its stationary pmf; transmissions follow
    the threshold/affordability/cutoff rule, and the fusion statistic
    (exact mixture LRT or its linearization) is thresholded at the
    empirical H0 quantiles of the requested budgets.

    ``sensors`` must carry the thresholds the network operates at, and
    ``ops`` the matching marginal transmit probabilities.
    """
    if trials < 10_000:
        raise ValueError(f"need at least 1e4 trials, got {trials}")
    if statistic not in ("exact", "linearized"):
        raise ValueError(f"unknown statistic {statistic!r}")
    k_count = len(sensors)
    s2 = np.array([ch.fc_noise_var for ch in channels])
    alpha = _clamp(np.array([op.alpha for op in ops]))
    beta = _clamp(np.array([op.beta for op in ops]))

    h1 = rng.random(trials) < prior
    n1 = int(h1.sum())
    y = np.empty((trials, k_count))
    c_mat = np.empty((trials, k_count))
    for k, (sen, ch, bat) in enumerate(zip(sensors, channels, batteries)):
        stat = np.empty(trials)
        n = sen.n_samples
        stat[~h1] = rng.chisquare(n, trials - n1) * sen.noise_var / n
        nonc = sen.noncentrality / sen.noise_var
        if nonc > 0:
            stat[h1] = rng.noncentral_chisquare(n, nonc, n1) * sen.noise_var / n
        else:
            stat[h1] = rng.chisquare(n, n1) * sen.noise_var / n
        exceed = stat > sen.threshold

        hmag = np.sqrt(rng.exponential(ch.gain_mean, trials))
        units = np.ceil(ch.power_const / hmag)
        clear = hmag * hmag > ch.cutoff
        b_state = rng.choice(len(bat.pmf), size=trials, p=bat.pmf)
        afford = b_state > units
        tx = exceed & clear & afford
        c_mat[:, k] = units * hmag
        y[:, k] = np.where(tx, units * hmag, 0.0) \
            + math.sqrt(ch.fc_noise_var) * rng.standard_normal(trials)

    if statistic == "exact":
        delta = _lrt_core(y, c_mat, alpha, beta, s2)
    else:
        nu = c_mat * (alpha - beta) / s2
        offset = np.sum(c_mat * c_mat * (alpha - beta) / (2.0 * s2), axis=1)
        delta = np.sum(nu * y, axis=1) - offset

    d0 = np.sort(delta[~h1])
    d1 = delta[h1]
    a_grid = np.asarray(a_grid, dtype=float)
    pf = np.empty_like(a_grid)
    pd = np.empty_like(a_grid)
    se = np.empty_like(a_grid)
    for i, a in enumerate(a_grid):
        tau = np.quantile(d0, 1.0 - a)
        pf[i] = float(np.mean(d0 > tau))
        pd[i] = float(np.mean(d1 > tau))
        se[i] = math.sqrt(max(pd[i] * (1.0 - pd[i]), 1e-12) / max(len(d1), 1))
    return RocTable(a=a_grid, pf_emp=pf, pd_emp=pd, stderr=se,
                    n_h0=trials - n1, n_h1=n1)
