import numpy as np
import pytest

from ehdetect.config import from_dict
from ehdetect.experiments import build_model, stream_rng
from ehdetect.fusion import average_closed_form_pd, closed_form_pf_pd
from ehdetect.optimizer import (ThresholdGrid, common_threshold,
                                scheme1_max_pd, scheme2_max_kl)


def small_cfg(sensors, channels, seed=55, capacity=8, harvest=0.7):
    return from_dict({
        "seed": seed, "prior_h1": 0.5, "pav_target": "1 dB",
        "capacity": capacity, "harvest_prob": harvest,
        "sensors": sensors, "channels": channels,
    })


SENSOR = {"amplitude": 1.0, "n_samples": 20, "noise_var": 1.0, "gain_var": 1.5}
CHANNEL = {"gain_mean": 1.2, "fc_noise_var": 1.0, "power_const": 1.0}


@pytest.fixture(scope="module")
def single_model():
    return build_model(small_cfg([SENSOR], [CHANNEL]))


@pytest.fixture(scope="module")
def homogeneous_model():
    return build_model(small_cfg([SENSOR] * 3, [CHANNEL] * 3))


def grid_for(model, count=25):
    return ThresholdGrid.default_for(model, count=count, shared=True)


class TestGrid:
    def test_default_bounds(self, single_model):
        g = ThresholdGrid.default_for(single_model, count=50)
        s = single_model.sensors[0]
        assert g.lowers[0] == 0.0
        assert g.uppers[0] == pytest.approx(s.noise_var + 3.0 * s.noncentrality)
        assert len(g.values(0)) == 50

    def test_validation(self):
        with pytest.raises(ValueError):
            ThresholdGrid(lowers=np.array([0.0]), uppers=np.array([0.0]),
                          counts=np.array([10]))
        with pytest.raises(ValueError):
            ThresholdGrid(lowers=np.array([0.0]), uppers=np.array([1.0]),
                          counts=np.array([1]))


class TestScheme1:
    def test_single_sensor_equals_1d_scan(self, single_model):
        draws = single_model.sample_draws(100, stream_rng(7, 1))
        g = grid_for(single_model, 40)
        res = scheme1_max_pd(single_model, g, 0.4, draws)
        vals = []
        for t in g.values(0):
            ops = single_model.operating_points([t])
            pd, _ = average_closed_form_pd(draws, ops,
                                           single_model.fc_noise_vars, 0.4)
            vals.append(pd)
        j = int(np.argmax(vals))
        assert res.thetas[0] == pytest.approx(g.values(0)[j])
        assert res.objective == pytest.approx(vals[j], rel=1e-12)
        assert res.evaluations == 40

    def test_symmetric_network_symmetric_thetas(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(60, stream_rng(8, 1))
        res = scheme1_max_pd(homogeneous_model, grid_for(homogeneous_model, 12),
                             0.5, draws)
        assert res.thetas[0] == res.thetas[1] == res.thetas[2]

    def test_exhaustive_matches_bruteforce(self, homogeneous_model):
        # independent re-enumeration through the per-draw closed form
        model = homogeneous_model
        draws = model.sample_draws(10, stream_rng(9, 1))
        g = grid_for(model, 7)
        res = scheme1_max_pd(model, g, 0.3, draws)
        best, best_t = -1.0, None
        for t1 in g.values(0):
            for t2 in g.values(1):
                for t3 in g.values(2):
                    ops = model.operating_points([t1, t2, t3])
                    acc = 0.0
                    for i in range(len(draws)):
                        acc += closed_form_pf_pd(draws.draw(i), ops,
                                                 model.fc_noise_vars, 0.3).p_d
                    acc /= len(draws)
                    if acc > best:
                        best, best_t = acc, (t1, t2, t3)
        assert res.objective == pytest.approx(best, rel=1e-10)
        np.testing.assert_allclose(res.thetas, best_t, rtol=1e-12)

    def test_evaluation_count_is_grid_power_k(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(20, stream_rng(10, 1))
        res = scheme1_max_pd(homogeneous_model, grid_for(homogeneous_model, 9),
                             0.5, draws)
        assert res.evaluations == 9 ** 3

    def test_exhaustive_guard(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(10, stream_rng(11, 1))
        with pytest.raises(ValueError):
            scheme1_max_pd(homogeneous_model, grid_for(homogeneous_model, 5),
                           0.5, draws, mode="bogus")

    def test_coordinate_mode_agrees_here(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(30, stream_rng(12, 1))
        g = grid_for(homogeneous_model, 15)
        ex = scheme1_max_pd(homogeneous_model, g, 0.5, draws, mode="exhaustive")
        co = scheme1_max_pd(homogeneous_model, g, 0.5, draws, mode="coordinate")
        assert co.objective <= ex.objective + 1e-12
        assert co.objective == pytest.approx(ex.objective, abs=1e-9)

    def test_determinism(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(25, stream_rng(13, 1))
        a = scheme1_max_pd(homogeneous_model, grid_for(homogeneous_model, 8),
                           0.5, draws)
        b = scheme1_max_pd(homogeneous_model, grid_for(homogeneous_model, 8),
                           0.5, draws)
        np.testing.assert_array_equal(a.thetas, b.thetas)
        assert a.objective == b.objective


class TestScheme2:
    def test_evaluation_count_is_k_times_grid(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(20, stream_rng(14, 1))
        res = scheme2_max_kl(homogeneous_model, grid_for(homogeneous_model, 31),
                             draws)
        assert res.evaluations == 3 * 31

    def test_single_sensor_matches_1d_scan(self, single_model):
        from ehdetect.fusion import kl_gaussian_terms
        draws = single_model.sample_draws(80, stream_rng(15, 1))
        g = grid_for(single_model, 40)
        res = scheme2_max_kl(single_model, g, draws, kl="gauss")
        alpha, beta = single_model.alpha_beta_grid(0, g.values(0))
        curve = kl_gaussian_terms(draws.c[:, 0][None, :], alpha[:, None],
                                  beta[:, None],
                                  single_model.fc_noise_vars[0]).mean(axis=1)
        j = int(np.argmax(curve))
        assert res.thetas[0] == pytest.approx(g.values(0)[j])

    def test_dead_battery_flagged(self):
        # capacity 1 can never strictly exceed a one-unit requirement
        model = build_model(small_cfg([SENSOR], [CHANNEL], capacity=1))
        draws = model.sample_draws(20, stream_rng(16, 1))
        g = grid_for(model, 10)
        res = scheme2_max_kl(model, g, draws)
        assert res.flags == ("non-identifiable:0",)
        assert res.thetas[0] == g.values(0)[0]
        assert res.objective == 0.0

    def test_kl_variant_validation(self, single_model):
        draws = single_model.sample_draws(10, stream_rng(17, 1))
        with pytest.raises(ValueError):
            scheme2_max_kl(single_model, grid_for(single_model), draws, kl="nope")


class TestCommonThreshold:
    def test_homogeneous_equivalence(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(40, stream_rng(18, 1))
        g = grid_for(homogeneous_model, 20)
        per = scheme1_max_pd(homogeneous_model, g, 0.5, draws)
        com = common_threshold(homogeneous_model, g, draws, objective="pd", a=0.5)
        assert com.thetas[0] == pytest.approx(per.thetas[0])
        assert com.objective == pytest.approx(per.objective, rel=1e-12)

    def test_dominance_chain(self, benchmark_model, benchmark_draws):
        # shared grids with equal counts: scheme 1 searches a superset of
        # scheme 2's picks which search a superset of the common diagonal
        g = ThresholdGrid.default_for(benchmark_model, count=25, shared=True)
        s1 = scheme1_max_pd(benchmark_model, g, 0.5, benchmark_draws)
        s2 = scheme2_max_kl(benchmark_model, g, benchmark_draws)
        s2c = common_threshold(benchmark_model, g, benchmark_draws,
                               objective="kl")
        s2v = benchmark_model.fc_noise_vars

        def pd_at(thetas):
            ops = benchmark_model.operating_points(thetas)
            return average_closed_form_pd(benchmark_draws, ops, s2v, 0.5)[0]

        pd1, pd2, pd2c = s1.objective, pd_at(s2.thetas), pd_at(s2c.thetas)
        assert pd1 >= pd2 - 1e-9
        assert pd2 >= pd2c - 1e-9
        assert s2.objective >= s2c.objective - 1e-12  # KL dominance by construction

    def test_pd_objective_needs_budget(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(10, stream_rng(19, 1))
        with pytest.raises(ValueError):
            common_threshold(homogeneous_model, grid_for(homogeneous_model),
                             draws, objective="pd")

    def test_rejects_heterogeneous_grid(self, homogeneous_model):
        draws = homogeneous_model.sample_draws(10, stream_rng(20, 1))
        g = ThresholdGrid(lowers=np.zeros(3), uppers=np.array([1.0, 2.0, 3.0]),
                          counts=np.full(3, 10))
        with pytest.raises(ValueError):
            common_threshold(homogeneous_model, g, draws, objective="kl")
