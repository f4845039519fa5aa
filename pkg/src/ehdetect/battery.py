"""Battery-state Markov chain: transition structure, stationary
distribution, affordability probability, and a trajectory simulator.

State is the number of stored energy units in {0, ..., capacity}. In a
period the sensor consumes ``c`` units when its statistic exceeds the
threshold, the channel clears the cutoff needing ``c`` units, and the
battery strictly exceeds ``c``; independently one unit is harvested with
probability ``harvest_prob``, and the result is clamped at capacity.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import ConsumptionPmf
from .errors import ConvergenceError

_POWER_TOL = 1e-12
_POWER_MAX_ITER = 1_000_000
_SIM_CHUNK = 1_000_000


@dataclass(frozen=True)
class BatteryParams:
    """Inputs that close the battery chain.

    capacity: maximum stored units (>= 1).
    harvest_prob: chance of harvesting one unit per period.
    transmit_prob: chance the local statistic exceeds the threshold,
        i.e. pi * P_d + (1 - pi) * P_f for hypothesis prior pi.
    consumption: joint pmf of required units and channel clearing.
    """

    capacity: int
    harvest_prob: float
    transmit_prob: float
    consumption: ConsumptionPmf

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError(f"capacity must be >= 1, got {self.capacity}")
        if not 0.0 <= self.harvest_prob <= 1.0:
            raise ValueError(f"harvest_prob must be in [0,1], got {self.harvest_prob}")
        if not 0.0 <= self.transmit_prob <= 1.0:
            raise ValueError(f"transmit_prob must be in [0,1], got {self.transmit_prob}")
        if self.consumption.tail > 0 and self.consumption.units[-1] < self.capacity - 1:
            raise ValueError(
                "consumption pmf leaves tail mass on unit counts below capacity; "
                "build it with max_units >= capacity"
            )


@dataclass(frozen=True)
class StationaryBattery:
    """Stationary distribution over battery states {0, ..., capacity}."""

    pmf: np.ndarray

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)

    @property
    def capacity(self) -> int:
        return len(self.pmf) - 1

    def prob_above(self, c: int) -> float:
        """Pr(state > c)."""
        if c >= self.capacity:
            return 0.0
        if c < 0:
            return 1.0
        return float(self.pmf[c + 1:].sum())


def transition_matrix(p: BatteryParams) -> np.ndarray:
    """One-period transition matrix of the battery chain.

    From state b, each feasible consumption c (c < b) fires with
    probability ``transmit_prob * Pr(consumption = c)`` and moves to
    ``min(b - c + harvest, capacity)``; all remaining probability keeps
    the battery at ``min(b + harvest, capacity)``. Rows sum to one by
    construction.
    """
    cap = p.capacity
    pe = p.harvest_prob
    units = p.consumption.units
    prob = p.consumption.prob
    mat = np.zeros((cap + 1, cap + 1))
    for b in range(cap + 1):
        stay_mass = 1.0
        for c, pc in zip(units, prob):
            if c >= b:
                break  # units are ascending; the rest is infeasible
            fire = p.transmit_prob * pc
            stay_mass -= fire
            after = b - int(c)
            mat[b, min(after + 1, cap)] += fire * pe
            mat[b, after] += fire * (1.0 - pe)
        mat[b, min(b + 1, cap)] += stay_mass * pe
        mat[b, b] += stay_mass * (1.0 - pe)
    return mat


def stationary_pmf(p: BatteryParams, tol: float = _POWER_TOL,
                   max_iter: int = _POWER_MAX_ITER) -> StationaryBattery:
    """Stationary pmf of the battery chain by power iteration.

    Iterates the row-vector fixed point from the uniform distribution
    until the L1 change drops below ``tol``. Uniqueness needs
    0 < harvest_prob < 1 (otherwise the chain can absorb).
    """
    mat = transition_matrix(p)
    pi = np.full(p.capacity + 1, 1.0 / (p.capacity + 1))
    for _ in range(max_iter):
        nxt = pi @ mat
        if float(np.abs(nxt - pi).sum()) < tol:
            nxt /= nxt.sum()
            return StationaryBattery(pmf=nxt)
        pi = nxt
    raise ConvergenceError(
        f"battery chain power iteration missed tol {tol} in {max_iter} steps"
    )


def rho(s: StationaryBattery, consumption: ConsumptionPmf) -> float:
    """Probability the stationary battery affords the required units.

    Averages Pr(state > c) over the consumption pmf conditioned on the
    channel clearing the cutoff. Units at or above the capacity never
    contribute, so the pmf's tail needs no enumeration.
    """
    if consumption.tail > 0 and consumption.units[-1] < s.capacity - 1:
        raise ValueError(
            "consumption pmf leaves tail mass on unit counts below capacity; "
            "build it with max_units >= capacity"
        )
    cond = consumption.conditional()
    total = 0.0
    for c, pc in zip(consumption.units, cond):
        if c >= s.capacity:
            break
        total += pc * s.prob_above(int(c))
    return total


@dataclass(frozen=True)
class SimulationResult:
    """Empirical summary of a simulated battery trajectory."""

    pmf: np.ndarray
    steps: int
    burn_in: int
    rho_hat: float
    transmit_rate: float
    final_state: int

    @property
    def cdf(self) -> np.ndarray:
        return np.cumsum(self.pmf)


def simulate_chain(p: BatteryParams, steps: int, burn_in: int,
                   rng: np.random.Generator,
                   initial_state: int | None = None) -> SimulationResult:
    """Simulate the battery recursion and tabulate the visited states.

    The consumption requirement is drawn jointly with the clearing event
    every period; a transmission happens only when the threshold is
    exceeded and the battery strictly exceeds the requirement, exactly as
    in the transition matrix. Deterministic for a fixed seed.

    ``rho_hat`` is the post-burn-in frequency of affordable requirements
    among periods whose channel cleared the cutoff.
    """
    if burn_in < 0 or steps <= burn_in:
        raise ValueError(f"need steps > burn_in >= 0, got {steps}, {burn_in}")
    cap = p.capacity
    b = cap // 2 if initial_state is None else int(initial_state)
    if not 0 <= b <= cap:
        raise ValueError(f"initial_state must be in [0,{cap}], got {b}")

    units = [int(u) for u in p.consumption.units]
    probs = list(map(float, p.consumption.prob))
    never = cap + 1  # requirement no battery state can strictly exceed
    # joint categories: each resolved unit count, then the clearing tail,
    # then channel truncated. need > cap encodes "cannot afford".
    needs = units + [never, never + 1]
    cum = np.cumsum(probs + [p.consumption.tail, 1.0 - p.consumption.total()])
    cum[-1] = 1.0

    counts = [0] * (cap + 1)
    cleared = afford = transmit = 0
    t = 0
    pe = p.harvest_prob
    tp = p.transmit_prob
    while t < steps:
        n = min(_SIM_CHUNK, steps - t)
        cat = np.searchsorted(cum, rng.random(n), side="right")
        need_arr = [needs[c] for c in cat.tolist()]
        omega = (rng.random(n) < pe).tolist()
        exceed = (rng.random(n) < tp).tolist()
        for j in range(n):
            nd = need_arr[j]
            if t >= burn_in:
                counts[b] += 1
                if nd <= never:  # channel cleared (resolved or tail)
                    cleared += 1
                    if b > nd:
                        afford += 1
            if exceed[j] and b > nd:
                transmit += 1 if t >= burn_in else 0
                b -= nd
            if omega[j]:
                b += 1
                if b > cap:
                    b = cap
            t += 1
    kept = steps - burn_in
    return SimulationResult(
        pmf=np.asarray(counts, dtype=float) / kept,
        steps=steps,
        burn_in=burn_in,
        rho_hat=afford / cleared if cleared else float("nan"),
        transmit_rate=transmit / kept,
        final_state=b,
    )
