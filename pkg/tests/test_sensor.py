import math

import numpy as np
import pytest

from ehdetect.sensor import SensorParams, local_pd, local_pf, sample_statistic


def make_sensor(amplitude=1.0, n_samples=100, noise_var=1.0, gain_var=1.3,
                threshold=1.0):
    return SensorParams(amplitude=amplitude, n_samples=n_samples,
                        noise_var=noise_var, gain_var=gain_var,
                        threshold=threshold)


class TestClosedForms:
    def test_zero_threshold_gives_one(self):
        s = make_sensor(threshold=0.0)
        assert local_pf(s) == 1.0
        assert local_pd(s) == 1.0

    def test_two_sample_closed_form(self):
        # with N=2 and unit noise the false-alarm rate is exp(-threshold)
        for t in (0.3, 1.0, 2.5):
            s = make_sensor(n_samples=2, threshold=t)
            assert local_pf(s) == pytest.approx(math.exp(-t), rel=1e-12)

    def test_zero_amplitude_collapses_hypotheses(self):
        s = make_sensor(amplitude=0.0, threshold=0.9)
        assert local_pd(s) == pytest.approx(local_pf(s), abs=1e-14)

    def test_roc_dominance_on_grid(self):
        for theta in np.linspace(0.0, 4.0, 100):
            s = make_sensor(threshold=theta)
            assert local_pd(s) >= local_pf(s) - 1e-12

    def test_far_threshold_limits(self):
        s = make_sensor()
        far = 50.0 * (s.noise_var + s.noncentrality)
        s_far = s.with_threshold(far)
        assert local_pf(s_far) <= 1e-6
        assert local_pd(s_far) <= 1e-6

    def test_strictly_decreasing_in_threshold(self):
        thetas = np.linspace(0.2, 3.0, 50)
        pf = [local_pf(make_sensor(threshold=t)) for t in thetas]
        assert all(b < a for a, b in zip(pf, pf[1:]))

    def test_invalid_params(self):
        with pytest.raises(ValueError):
            SensorParams(amplitude=1.0, n_samples=0, noise_var=1.0, gain_var=1.0)
        with pytest.raises(ValueError):
            SensorParams(amplitude=1.0, n_samples=10, noise_var=0.0, gain_var=1.0)
        with pytest.raises(ValueError):
            SensorParams(amplitude=1.0, n_samples=10, noise_var=1.0, gain_var=-1.0)
        with pytest.raises(ValueError):
            make_sensor(threshold=-0.1)


class TestSampling:
    def test_h0_mean(self, rng):
        s = make_sensor(n_samples=50)
        stats = sample_statistic(s, "H0", rng, size=100_000)
        # E[stat | H0] = noise_var, sd of the mean ~ sqrt(2/N)/sqrt(draws)
        assert stats.mean() == pytest.approx(1.0, abs=0.01)

    def test_h1_mean_matches_noncentral_law(self, rng):
        # under the noncentral sampling model E[stat | H1] = noise_var + eta/N
        s = make_sensor(amplitude=1.0, gain_var=2.0, n_samples=50)
        stats = sample_statistic(s, "H1", rng, size=100_000)
        expect = s.noise_var + s.noncentrality / s.n_samples
        se = stats.std(ddof=1) / math.sqrt(len(stats))
        assert abs(stats.mean() - expect) <= 3.0 * se

    def test_seed_determinism(self):
        s = make_sensor(n_samples=10)
        a = sample_statistic(s, "H1", np.random.default_rng(77), size=1000)
        b = sample_statistic(s, "H1", np.random.default_rng(77), size=1000)
        np.testing.assert_array_equal(a, b)

    def test_scalar_return(self, rng):
        s = make_sensor(n_samples=5)
        val = sample_statistic(s, "H0", rng)
        assert isinstance(val, float) and val >= 0.0

    def test_bad_hypothesis(self, rng):
        with pytest.raises(ValueError):
            sample_statistic(make_sensor(), "H2", rng)

    @pytest.mark.parametrize("params,theta", [
        (dict(n_samples=2, gain_var=1.0), 0.8),
        (dict(n_samples=10, gain_var=2.0), 1.1),
        (dict(n_samples=50, gain_var=0.9, noise_var=1.3), 1.4),
        (dict(n_samples=100, gain_var=1.3), 1.0),
        (dict(n_samples=100, gain_var=2.0, amplitude=1.2), 1.2),
    ])
    def test_exceedance_matches_closed_forms(self, params, theta):
        # Monte Carlo oracle for the closed forms, one million periods
        s = make_sensor(threshold=theta, **params)
        rng = np.random.default_rng(900 + s.n_samples)
        n = 1_000_000
        for hyp, closed in (("H0", local_pf(s)), ("H1", local_pd(s))):
            stats = sample_statistic(s, hyp, rng, size=n)
            emp = float(np.mean(stats > theta))
            se = math.sqrt(closed * (1.0 - closed) / n)
            assert abs(emp - closed) <= 3.0 * se, (hyp, emp, closed)
