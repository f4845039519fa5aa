"""Reporting channel: Rayleigh fading, quantized channel inversion,
average-transmit-energy accounting, and the truncation-threshold solver.

The squared channel magnitude is exponential with mean ``gain_mean``. A
reporting sensor spends ``ceil(power_const / |h|)`` energy units, but
only transmits when ``|h|^2`` clears the truncation ``cutoff``.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
import math
from typing import Callable

import numpy as np
from scipy import integrate, optimize

_DEFAULT_MAX_UNITS = 10_000
_PAV_TERM_CAP = 50_000_000
_PAV_CHUNK = 1_000_000


@dataclass(frozen=True)
class ChannelParams:
    """Reporting channel of one sensor.

    gain_mean: mean of the squared channel magnitude (> 0).
    fc_noise_var: receiver noise variance at the fusion center (> 0).
    power_const: channel-inversion power regulation constant (> 0).
    cutoff: minimum squared magnitude required to transmit (>= 0).
    """

    gain_mean: float
    fc_noise_var: float
    power_const: float
    cutoff: float = 0.0

    def __post_init__(self):
        if self.gain_mean <= 0:
            raise ValueError(f"gain_mean must be positive, got {self.gain_mean}")
        if self.fc_noise_var <= 0:
            raise ValueError(f"fc_noise_var must be positive, got {self.fc_noise_var}")
        if self.power_const <= 0:
            raise ValueError(f"power_const must be positive, got {self.power_const}")
        if self.cutoff < 0:
            raise ValueError(f"cutoff must be >= 0, got {self.cutoff}")

    @property
    def clear_prob(self) -> float:
        """Probability that the squared magnitude clears the cutoff."""
        return math.exp(-self.cutoff / self.gain_mean)

    def with_cutoff(self, zeta: float) -> "ChannelParams":
        return replace(self, cutoff=float(zeta))

    def survival(self, x: float) -> float:
        """Pr(|h|^2 > x)."""
        return math.exp(-x / self.gain_mean) if x < math.inf else 0.0


def energy_units(h_mag: float, power_const: float) -> int:
    """Energy units needed to invert a channel with magnitude ``h_mag``.

    Rounds toward +inf, so the result is always >= 1.
    """
    if h_mag <= 0:
        raise ValueError(f"channel magnitude must be positive, got {h_mag}")
    if power_const <= 0:
        raise ValueError(f"power_const must be positive, got {power_const}")
    return max(1, math.ceil(power_const / h_mag))


@dataclass(frozen=True)
class ConsumptionPmf:
    """Distribution of required energy units, jointly with channel clearing.

    ``prob[i]`` is Pr(units == units[i] AND squared magnitude > cutoff);
    ``tail`` is the remaining clearing mass on units beyond ``units[-1]``,
    so ``prob.sum() + tail == clear_prob`` exactly.
    """

    units: np.ndarray
    prob: np.ndarray
    tail: float
    clear_prob: float

    def conditional(self) -> np.ndarray:
        """Per-entry probabilities given that the channel clears the cutoff."""
        if self.clear_prob <= 0.0:
            return np.zeros_like(self.prob)
        return self.prob / self.clear_prob

    def total(self) -> float:
        return float(self.prob.sum() + self.tail)


def consumption_pmf(c: ChannelParams, max_units: int | None = None) -> ConsumptionPmf:
    """Exact pmf of the required energy units intersected with clearing.

    ``units == i`` corresponds to the squared magnitude falling in
    [lam^2/i^2, lam^2/(i-1)^2) for i >= 2 and [lam^2, inf) for i = 1;
    probabilities come from the exponential survival function. Support is
    finite once lam^2/(i-1)^2 drops below the cutoff; for cutoff 0 the
    enumeration stops at ``max_units`` (default 10000) and the remainder
    is reported in ``tail``.
    """
    lam2 = c.power_const * c.power_const
    if c.cutoff > 0:
        natural = math.floor(c.power_const / math.sqrt(c.cutoff)) + 1
    else:
        natural = None
    cap = max_units if max_units is not None else _DEFAULT_MAX_UNITS
    n = cap if natural is None else min(natural, cap)
    n = max(n, 1)
    i = np.arange(1, n + 1, dtype=float)
    lower = np.maximum(c.cutoff, lam2 / (i * i))
    upper = np.empty_like(i)
    upper[0] = math.inf
    upper[1:] = np.maximum(c.cutoff, lam2 / ((i[1:] - 1.0) ** 2))
    with np.errstate(over="ignore"):
        prob = np.exp(-lower / c.gain_mean) - np.exp(-upper / c.gain_mean)
    prob = np.maximum(prob, 0.0)
    q = c.clear_prob
    tail = max(0.0, q - float(prob.sum()))
    if natural is not None and n >= natural:
        tail = 0.0
    nz = prob > 0.0
    nz[0] = True  # keep units=1 even when its mass is zero
    return ConsumptionPmf(units=np.arange(1, n + 1)[nz], prob=prob[nz],
                          tail=tail, clear_prob=q)


def pav_formula(c: ChannelParams, alpha: float) -> float:
    """Average transmit-symbol energy, evaluated term by term.

    Computes ``alpha * sum_i (i+1) * (exp(-max(cutoff, lam^2/(i+1))/gain)
    - exp(-lam^2/(i*gain))) * step(lam^2/i - cutoff)``. The step function
    truncates the sum at ``floor(lam^2 / cutoff)`` terms; with cutoff 0
    the series diverges (harmonically) and +inf is returned.
    """
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must be a probability, got {alpha}")
    if alpha == 0.0:
        return 0.0
    lam2 = c.power_const * c.power_const
    if c.cutoff == 0.0:
        return math.inf
    if c.cutoff > lam2:
        return 0.0
    i_max = math.floor(lam2 / c.cutoff)
    if i_max > _PAV_TERM_CAP:
        raise ValueError(
            f"cutoff {c.cutoff} makes the average-energy sum {i_max} terms long; "
            f"refusing beyond {_PAV_TERM_CAP}"
        )
    total = 0.0
    g = c.gain_mean
    start = 1
    while start <= i_max:
        stop = min(start + _PAV_CHUNK - 1, i_max)
        i = np.arange(start, stop + 1, dtype=float)
        inner = np.maximum(c.cutoff, lam2 / (i + 1.0))
        terms = (i + 1.0) * (np.exp(-inner / g) - np.exp(-lam2 / (i * g)))
        total += float(terms.sum())
        start = stop + 1
    return alpha * total


def pav_oracle(c: ChannelParams, alpha: float | None = None, exponent: int = 2,
               condition_on_transmit: bool = True) -> float:
    """Quadrature ground truth for the transmit-energy moments.

    Integrates ``ceil(power_const/|h|)^exponent`` against the exponential
    density of the squared magnitude over (cutoff, inf), splitting at the
    ceiling breakpoints so the adaptive rule sees each flat piece. The
    region where a single unit suffices is accumulated through the exact
    survival mass. Optionally conditions on clearing and/or scales by a
    transmit probability.
    """
    if exponent not in (1, 2):
        raise ValueError(f"exponent must be 1 or 2, got {exponent}")
    if c.cutoff <= 0:
        raise ValueError("oracle requires a positive cutoff")
    lam = c.power_const
    lam2 = lam * lam
    g = c.gain_mean

    def integrand(x):
        return math.ceil(lam / math.sqrt(x)) ** exponent * math.exp(-x / g) / g

    total = c.survival(max(c.cutoff, lam2))  # units == 1 region
    if c.cutoff < lam2:
        i_top = math.ceil(lam / math.sqrt(c.cutoff))
        if i_top > 100_000:
            raise ValueError("cutoff too small for breakpoint quadrature")
        points = [lam2 / (i * i) for i in range(2, i_top + 1)
                  if c.cutoff < lam2 / (i * i) < lam2]
        val, _ = integrate.quad(integrand, c.cutoff, lam2, points=points or None,
                                limit=max(200, 2 * len(points) + 50))
        total += val
    if condition_on_transmit:
        total /= c.clear_prob
    if alpha is not None:
        total *= alpha
    return total


@dataclass(frozen=True)
class ZetaSolution:
    """Result of the truncation-threshold solve."""

    zeta: float
    pav: float
    slack: bool
    evaluations: int


def solve_zeta(c: ChannelParams, alpha_of_zeta: Callable[[float], float],
               target_pav: float, rel_tol: float = 1e-6,
               allow_slack: bool = True) -> ZetaSolution:
    """Find the truncation threshold meeting an average-energy target.

    Brackets the root of ``pav_formula(zeta, alpha_of_zeta(zeta)) -
    target`` by scanning cutoff values downward from ``power_const^2``
    (where the energy sum is empty) and bisects inside the bracket. The
    transmit probability is re-evaluated at every iterate, so callers may
    couple it to the cutoff through the clearing probability.

    If even the smallest searchable cutoff cannot spend the target energy
    the constraint is slack: with ``allow_slack`` the result is zeta = 0
    (flagged), otherwise a ValueError is raised.
    """
    if target_pav <= 0:
        raise ValueError(f"target_pav must be positive, got {target_pav}")
    evals = 0

    def gap(zeta: float) -> float:
        nonlocal evals
        evals += 1
        ch = c.with_cutoff(zeta)
        return pav_formula(ch, alpha_of_zeta(zeta)) - target_pav

    lam2 = c.power_const * c.power_const
    hi = lam2
    gap_hi = gap(hi)  # empty sum: always -target
    lo = 0.5 * lam2
    floor = lam2 / _PAV_TERM_CAP * 2.0
    gap_lo = gap(lo)
    while gap_lo <= 0.0 and lo > floor:
        hi, gap_hi = lo, gap_lo
        lo *= 0.25
        gap_lo = gap(lo)
    if gap_lo <= 0.0:
        if allow_slack:
            return ZetaSolution(zeta=0.0, pav=gap_lo + target_pav, slack=True,
                                evaluations=evals)
        raise ValueError(
            f"average-energy target {target_pav} unreachable: maximum "
            f"attainable is {gap_lo + target_pav:.6g}"
        )
    zeta = float(optimize.brentq(gap, lo, hi, xtol=1e-15, rtol=8.9e-16,
                                 maxiter=200))
    pav = gap(zeta) + target_pav
    if abs(pav - target_pav) > rel_tol * target_pav:
        # brentq met its x-tolerance but the residual is still too big;
        # only possible if alpha_of_zeta is discontinuous.
        raise ValueError(
            f"no cutoff meets the energy target within rel tol {rel_tol}: "
            f"closest {pav:.9g} vs {target_pav:.9g}"
        )
    return ZetaSolution(zeta=zeta, pav=pav, slack=False, evaluations=evals)
