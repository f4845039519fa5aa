"""Reproduction harness: battery-distribution, ROC, sweep, optimize, and
validation runs, each emitting a CSV table (with config hash and seed in
the header comments), a JSON metadata sidecar, and rendered figures.

Outputs are byte-identical for identical configuration and seed: all
randomness flows through derived seed streams, and no timestamps or
wall-clock measurements reach the emitted files.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Sequence

import numpy as np

from . import plotting
from .battery import BatteryParams, simulate_chain, stationary_pmf
from .channel import consumption_pmf, pav_formula, pav_oracle
from .config import ExperimentConfig
from .errors import ConfigError
from .fusion import (average_closed_form_pd, kl_gaussian_terms, kl_lowsnr_approx,
                     kl_true, monte_carlo_roc)
from .network import NetworkModel, build_network
from .optimizer import (OptimizationResult, ThresholdGrid, common_threshold,
                        scheme1_max_pd, scheme2_max_kl)
from .sensor import local_pd, local_pf, sample_statistic

# seed-stream tags; sweep points additionally XOR the point index into
# the base seed before deriving streams.
_TAG_DRAWS = 1
_TAG_MC = 2
_TAG_BATTERY = 3
_TAG_VALIDATION = 4

_SWEEP_BUDGET = 0.5
_DEFAULT_PAV_SWEEP_DB = (-2.0, -1.0, 0.0, 1.0, 2.0, 3.0, 4.0)
_DEFAULT_CAPACITY_SWEEP = (5, 10, 20, 30, 40, 60, 80)


def stream_rng(seed: int, *tags: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([int(seed), *map(int, tags)]))


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.12g}"
    return str(value)


def write_table(path: Path, header: Sequence[str], rows: Sequence[Sequence],
                cfg: ExperimentConfig, meta: dict) -> None:
    """CSV with config hash + seed comment lines, plus a JSON sidecar."""
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"# config_hash={cfg.config_hash()}", f"# seed={cfg.seed}",
             ",".join(header)]
    lines.extend(",".join(_fmt(v) for v in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")
    sidecar = {"config_hash": cfg.config_hash(), "seed": cfg.seed,
               "columns": list(header), **meta}
    path.with_suffix(".meta.json").write_text(
        json.dumps(sidecar, indent=2, sort_keys=True) + "\n")


def build_model(cfg: ExperimentConfig) -> NetworkModel:
    return build_network(
        sensors=cfg.sensors, channels=cfg.channels, capacity=cfg.capacity,
        harvest_prob=cfg.harvest_prob, prior=cfg.prior,
        pav_target=cfg.pav_target, theta_ref=cfg.theta_ref)


# ---------------------------------------------------------------------------
# battery distribution figure


def run_battery_figure(cfg: ExperimentConfig, out_dir: str | Path,
                       plots: bool = True, sim_steps: int | None = None):
    """Stationary battery CDFs across harvest rates plus one pmf panel.

    The chain is closed with the first sensor's reporting channel and
    reference-threshold transmit probability (the distribution panel is
    about battery behavior, not about a particular sensor). Emits
    battery_cdf.csv (primary capacity, each harvest probability) and
    battery_pmf.csv (alternate capacity panel).
    """
    out = Path(out_dir)
    model = build_model(cfg)
    link = model.links[0]

    def chain_rows(capacity: int, pe: float):
        cons = consumption_pmf(link.channel, max_units=capacity)
        params = BatteryParams(capacity=capacity, harvest_prob=pe,
                               transmit_prob=link.transmit_prob,
                               consumption=cons)
        stat = stationary_pmf(params)
        cdf = stat.cdf
        return [[capacity, pe, s, stat.pmf[s], cdf[s]]
                for s in range(capacity + 1)]

    cdf_rows = []
    for pe in cfg.battery_harvest_probs:
        cdf_rows.extend(chain_rows(cfg.capacity, pe))
    alt_cap, alt_pe = cfg.battery_alt
    pmf_rows = chain_rows(alt_cap, alt_pe)

    header = ["capacity", "harvest_prob", "state", "pmf", "cdf"]
    meta = {"channel_gain_mean": link.channel.gain_mean,
            "transmit_prob": link.transmit_prob,
            "cutoff": link.channel.cutoff}
    write_table(out / "battery_cdf.csv", header, cdf_rows, cfg,
                {**meta, "figure": "battery state CDF vs harvest probability"})
    write_table(out / "battery_pmf.csv", header, pmf_rows, cfg,
                {**meta, "figure": "battery state pmf, alternate capacity"})
    if plots:
        plotting.render_battery(cdf_rows, pmf_rows, out)
    if sim_steps:
        # optional cross-check trajectory for diagnostics
        cons = consumption_pmf(link.channel, max_units=cfg.capacity)
        params = BatteryParams(capacity=cfg.capacity, harvest_prob=cfg.harvest_prob,
                               transmit_prob=link.transmit_prob, consumption=cons)
        simulate_chain(params, sim_steps, sim_steps // 10,
                       stream_rng(cfg.seed, _TAG_BATTERY))
    return cdf_rows, pmf_rows


# ---------------------------------------------------------------------------
# ROC reproduction


def _theta_header(k: int) -> list[str]:
    return [f"theta_{i + 1}" for i in range(k)]


def _scheme_thetas(model: NetworkModel, cfg: ExperimentConfig, draws,
                   budgets: Sequence[float]) -> dict:
    """Optimized threshold vectors for every scheme (scheme1 per budget)."""
    grid2 = ThresholdGrid.default_for(model, cfg.theta_grid_points, shared=True)
    grid1 = ThresholdGrid.default_for(model, cfg.scheme1_grid_points, shared=True)
    out = {
        "scheme2-gauss": scheme2_max_kl(model, grid2, draws, kl="gauss"),
        "scheme2-lowsnr": scheme2_max_kl(model, grid2, draws, kl="lowsnr"),
        "scheme2-common": common_threshold(model, grid2, draws, objective="kl",
                                           kl="gauss"),
        "scheme1": {a: scheme1_max_pd(model, grid1, a, draws) for a in budgets},
        "scheme1-common": {a: common_threshold(model, grid1, draws,
                                               objective="pd", a=a)
                           for a in budgets},
    }
    return out


def _mc_curve(model: NetworkModel, thetas, a_grid, trials, rng, statistic="exact"):
    sensors = [ln.sensor.with_threshold(t) for ln, t in zip(model.links, thetas)]
    ops = model.operating_points(thetas)
    return monte_carlo_roc(sensors, model.channels, model.batteries_at(thetas),
                           ops, model.prior, np.asarray(a_grid, dtype=float),
                           trials, rng, statistic=statistic)


def run_roc(cfg: ExperimentConfig, out_dir: str | Path, plots: bool = True,
            trials: int | None = None):
    """Detection-vs-false-alarm table for every scheme and budget.

    Closed-form detection probabilities are channel-draw averages at the
    optimized thresholds; empirical columns come from the end-to-end
    Monte Carlo oracle thresholded at the empirical H0 quantile.
    """
    out = Path(out_dir)
    trials = trials or cfg.trials
    model = build_model(cfg)
    draws = model.sample_draws(cfg.n_channel_draws, stream_rng(cfg.seed, _TAG_DRAWS))
    budgets = cfg.false_alarm_grid
    schemes = _scheme_thetas(model, cfg, draws, budgets)

    rows = []
    s2 = model.fc_noise_vars

    # one Monte Carlo stream per budget, shared across schemes (paired
    # comparisons: scheme differences are not buried in trial noise)
    def add_rows(label: str, thetas: np.ndarray):
        ops = model.operating_points(thetas)
        table = _mc_curve(model, thetas, budgets, trials,
                          stream_rng(cfg.seed, _TAG_MC))
        for i, a in enumerate(budgets):
            pd_closed, spread = average_closed_form_pd(draws, ops, s2, a)
            rows.append([label, a, *thetas, pd_closed, spread,
                         table.pf_emp[i], table.pd_emp[i], table.stderr[i]])

    add_rows("scheme2-gauss", schemes["scheme2-gauss"].thetas)
    add_rows("scheme2-lowsnr", schemes["scheme2-lowsnr"].thetas)
    add_rows("scheme2-common", schemes["scheme2-common"].thetas)
    for j, a in enumerate(budgets):
        for label, res in (("scheme1", schemes["scheme1"][a]),
                           ("scheme1-common", schemes["scheme1-common"][a])):
            ops = model.operating_points(res.thetas)
            pd_closed, spread = average_closed_form_pd(draws, ops, s2, a)
            table = _mc_curve(model, res.thetas, [a], trials,
                              stream_rng(cfg.seed, _TAG_MC))
            rows.append([label, a, *res.thetas, pd_closed, spread,
                         table.pf_emp[0], table.pd_emp[0], table.stderr[0]])

    header = ["scheme", "a", *_theta_header(model.size),
              "pd_closed", "pd_closed_spread", "pf_emp", "pd_emp", "stderr"]
    write_table(out / "roc.csv", header, rows, cfg,
                {"trials": trials, "n_channel_draws": cfg.n_channel_draws,
                 "figure": "detection vs false-alarm budget by scheme"})
    if plots:
        plotting.render_roc(rows, model.size, out)
    return rows


# ---------------------------------------------------------------------------
# parameter sweeps


def sweep_values(cfg: ExperimentConfig, axis: str):
    if cfg.sweep is not None and cfg.sweep.axis == axis:
        return cfg.sweep.values
    return _DEFAULT_PAV_SWEEP_DB if axis == "pav" else _DEFAULT_CAPACITY_SWEEP


def run_sweep(cfg: ExperimentConfig, axis: str, out_dir: str | Path,
              plots: bool = True, trials: int | None = None):
    """Detection probability against average energy or battery capacity.

    The network (cutoffs, batteries) is re-solved at every sweep point;
    channel draws are shared across points (the fading law never changes
    along either axis) so the closed-form column varies only through the
    solved operating factors. Per-point Monte Carlo streams derive from
    the base seed XOR the point index.
    """
    if axis not in ("pav", "capacity"):
        raise ConfigError(f"sweep axis must be 'pav' or 'capacity', got {axis!r}")
    out = Path(out_dir)
    trials = trials or cfg.trials
    values = sweep_values(cfg, axis)
    draws_rng = stream_rng(cfg.seed, _TAG_DRAWS)
    rows = []
    budget = _SWEEP_BUDGET
    draws = None
    for idx, value in enumerate(values):
        if axis == "pav":
            point_cfg = cfg.with_updates(pav_target=f"{value} dB")
        else:
            point_cfg = cfg.with_updates(capacity=int(value))
        model = build_model(point_cfg)
        if draws is None:
            draws = model.sample_draws(cfg.n_channel_draws, draws_rng)
        point_seed = cfg.seed ^ idx
        grid2 = ThresholdGrid.default_for(model, cfg.theta_grid_points, shared=True)
        grid1 = ThresholdGrid.default_for(model, cfg.scheme1_grid_points, shared=True)
        results = {
            "scheme1": scheme1_max_pd(model, grid1, budget, draws),
            "scheme2-gauss": scheme2_max_kl(model, grid2, draws, kl="gauss"),
            "scheme1-common": common_threshold(model, grid1, draws,
                                               objective="pd", a=budget),
            "scheme2-common": common_threshold(model, grid2, draws,
                                               objective="kl", kl="gauss"),
        }
        for label, res in results.items():
            ops = model.operating_points(res.thetas)
            pd_closed, spread = average_closed_form_pd(
                draws, ops, model.fc_noise_vars, budget)
            # same per-point stream for every scheme: paired comparisons
            table = _mc_curve(model, res.thetas, [budget], trials,
                              stream_rng(point_seed, _TAG_MC))
            rows.append([axis, value, label, budget, *res.thetas, pd_closed,
                         spread, table.pf_emp[0], table.pd_emp[0],
                         table.stderr[0]])

    k = cfg.size
    header = ["axis", "value", "scheme", "a", *_theta_header(k),
              "pd_closed", "pd_closed_spread", "pf_emp", "pd_emp", "stderr"]
    write_table(out / f"sweep_{axis}.csv", header, rows, cfg,
                {"trials": trials, "axis": axis, "values": list(values),
                 "figure": f"detection probability vs {axis}"})
    if plots:
        plotting.render_sweep(rows, axis, out)
    return rows


# ---------------------------------------------------------------------------
# single optimization


def run_optimize(cfg: ExperimentConfig, scheme: str, out_dir: str | Path,
                 budget: float | None = None, kl: str = "gauss"):
    """One threshold search; emits a CSV row and a JSON summary.

    scheme: '1', '2', '1c', or '2c'.
    """
    out = Path(out_dir)
    model = build_model(cfg)
    draws = model.sample_draws(cfg.n_channel_draws, stream_rng(cfg.seed, _TAG_DRAWS))
    a = budget if budget is not None else _SWEEP_BUDGET
    if scheme == "1":
        grid = ThresholdGrid.default_for(model, cfg.scheme1_grid_points, shared=True)
        res = scheme1_max_pd(model, grid, a, draws)
    elif scheme == "2":
        grid = ThresholdGrid.default_for(model, cfg.theta_grid_points, shared=True)
        res = scheme2_max_kl(model, grid, draws, kl=kl)
    elif scheme == "1c":
        grid = ThresholdGrid.default_for(model, cfg.scheme1_grid_points, shared=True)
        res = common_threshold(model, grid, draws, objective="pd", a=a)
    elif scheme == "2c":
        grid = ThresholdGrid.default_for(model, cfg.theta_grid_points, shared=True)
        res = common_threshold(model, grid, draws, objective="kl", kl=kl)
    else:
        raise ConfigError(f"scheme must be one of 1, 2, 1c, 2c; got {scheme!r}")

    header = ["scheme", "a", *_theta_header(model.size), "objective"]
    row_a = res.budget if res.budget is not None else ""
    rows = [[res.scheme, row_a, *res.thetas, res.objective]]
    write_table(out / "optimize.csv", header, rows, cfg,
                {"scheme": res.scheme, "evaluations": res.evaluations,
                 "flags": list(res.flags)})
    summary = {
        "scheme": res.scheme,
        "budget": res.budget,
        "thetas": [float(t) for t in res.thetas],
        "objective": res.objective,
        "evaluations": res.evaluations,
        "flags": list(res.flags),
        "config_hash": cfg.config_hash(),
        "seed": cfg.seed,
        "zeta": [ln.channel.cutoff for ln in model.links],
        "rho": [ln.rho for ln in model.links],
        "q": [ln.q for ln in model.links],
    }
    (out / "optimize.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return res


# ---------------------------------------------------------------------------
# validation report


def _check(rows, group, name, observed, reference, tol) -> None:
    status = "pass" if abs(observed - reference) <= tol else "FAIL"
    rows.append([group, name, observed, reference, tol, status])


def _info(rows, group, name, observed, reference) -> None:
    rows.append([group, name, observed, reference, "", "info"])


def run_validation(cfg: ExperimentConfig, out_dir: str | Path,
                   trials: int | None = None, plots: bool = False):
    """Closed-form vs oracle diagnostics across every stage of the model.

    Emits validation.csv with pass/fail rows for checks that carry a
    tolerance and informational rows for the approximation gaps that are
    reported rather than asserted.
    """
    out = Path(out_dir)
    trials = trials or cfg.validation_trials
    model = build_model(cfg)
    rng = stream_rng(cfg.seed, _TAG_VALIDATION)
    rows = []

    # local detector closed forms vs sampled periods
    for k, ln in enumerate(model.links):
        upper = ln.sensor.noise_var + 3.0 * ln.sensor.noncentrality
        for theta in np.linspace(0.2 * upper, 0.8 * upper, 3):
            sen = ln.sensor.with_threshold(theta)
            for hyp, closed in (("H0", local_pf(sen)), ("H1", local_pd(sen))):
                stats = sample_statistic(sen, hyp, rng, size=trials)
                emp = float(np.mean(stats > theta))
                se = math.sqrt(max(closed * (1 - closed), 1e-12) / trials)
                _check(rows, "local-detector", f"sensor{k+1}_{hyp}_theta{theta:.3g}",
                       emp, closed, 3.0 * se)

    # battery chain vs simulated trajectory
    for k, ln in enumerate(model.links):
        params = BatteryParams(capacity=cfg.capacity, harvest_prob=cfg.harvest_prob,
                               transmit_prob=ln.transmit_prob,
                               consumption=ln.consumption)
        steps = max(1_000_000, trials)
        sim = simulate_chain(params, steps, steps // 10,
                             stream_rng(cfg.seed, _TAG_BATTERY, k))
        tv = 0.5 * float(np.abs(sim.pmf - ln.stationary.pmf).sum())
        _check(rows, "battery", f"sensor{k+1}_tv_stationary_vs_sim", tv, 0.0, 0.01)
        se = math.sqrt(max(ln.rho * (1 - ln.rho), 1e-12) /
                       max(1, int(steps * 0.9 * ln.q)))
        _check(rows, "battery", f"sensor{k+1}_rho_vs_sim", sim.rho_hat, ln.rho,
               4.0 * se)

    # average-energy constraint and oracle variants
    for k, ln in enumerate(model.links):
        pav = pav_formula(ln.channel, _alpha_of(ln))
        _check(rows, "energy", f"sensor{k+1}_pav_at_cutoff", pav,
               cfg.pav_target, 1e-6 * cfg.pav_target)
        for expo in (1, 2):
            for cond in (False, True):
                val = pav_oracle(ln.channel, alpha=_alpha_of(ln), exponent=expo,
                                 condition_on_transmit=cond)
                _info(rows, "energy",
                      f"sensor{k+1}_oracle_e{expo}_{'cond' if cond else 'joint'}",
                      val, pav)

    # fusion closed form vs end-to-end Monte Carlo at reference thresholds
    thetas = [ln.sensor.threshold for ln in model.links]
    ops = model.operating_points(thetas)
    draws = model.sample_draws(cfg.n_channel_draws, stream_rng(cfg.seed, _TAG_DRAWS))
    mc = _mc_curve(model, thetas, cfg.false_alarm_grid,
                   max(10_000, trials // 10), stream_rng(cfg.seed, _TAG_MC, 999))
    for i, a in enumerate(cfg.false_alarm_grid):
        pd_closed, _ = average_closed_form_pd(draws, ops, model.fc_noise_vars, a)
        _info(rows, "fusion", f"pd_closed_vs_emp_a{a:.1g}", pd_closed,
              float(mc.pd_emp[i]))

    # KL approximations against the quadrature distance on a few draws
    for k, ln in enumerate(model.links):
        op = ops[k]
        s2 = ln.channel.fc_noise_var
        c_vals = draws.c[:8, k]
        gauss = float(np.mean(kl_gaussian_terms(c_vals, op.alpha, op.beta, s2)))
        low = float(np.mean(kl_lowsnr_approx(c_vals, op.alpha, op.beta, s2)))
        true = float(np.mean([kl_true(c, op.alpha, op.beta, s2) for c in c_vals]))
        _info(rows, "kl", f"sensor{k+1}_gauss_vs_true", gauss, true)
        _info(rows, "kl", f"sensor{k+1}_lowsnr_vs_true", low, true)

    header = ["group", "check", "observed", "reference", "tolerance", "status"]
    write_table(out / "validation.csv", header, rows, cfg,
                {"trials": trials, "report": "closed-form vs oracle diagnostics"})
    return rows


def _alpha_of(link) -> float:
    return local_pd(link.sensor) * link.rho * link.q
