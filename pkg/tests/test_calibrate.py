import math

import numpy as np
import pytest
from scipy.special import ndtri

from gumbelmark import (
    ARS,
    CalibrationResult,
    HigherCriticism,
    TrGoF,
    clt_critical,
    mc_critical,
    norm_quantile,
    tradeoff_curve,
)


class TestNormQuantile:
    def test_against_scipy(self):
        ps = np.concatenate([
            [1e-9, 1e-6, 1e-4, 0.001, 0.01],
            np.linspace(0.05, 0.95, 19),
            [0.99, 0.999, 1 - 1e-4, 1 - 1e-6, 1 - 1e-9],
        ])
        for p in ps:
            assert abs(norm_quantile(float(p)) - float(ndtri(p))) <= 1e-9

    def test_median(self):
        assert norm_quantile(0.5) == 0.0

    def test_domain(self):
        for bad in (0.0, 1.0, -0.1, 1.1):
            with pytest.raises(ValueError):
                norm_quantile(bad)


class TestCltCritical:
    def test_ars_400(self):
        # 400 + z(0.99) * 20 with z(0.99) = 2.3263478740408408
        assert clt_critical(ARS, 400, 0.01) == pytest.approx(446.5269574808168, abs=1e-6)

    def test_alpha_half_is_null_mean(self):
        assert clt_critical(ARS, 250, 0.5) == pytest.approx(250.0, abs=1e-12)


class TestMcCritical:
    def test_reproducible(self):
        det = TrGoF(s=2.0, c_plus=0.01)
        a = mc_critical(det, 50, 0.05, reps=400, outer=3, seed=7)
        b = mc_critical(det, 50, 0.05, reps=400, outer=3, seed=7)
        assert a.critical_value == b.critical_value

    def test_monotone_in_alpha(self):
        det = HigherCriticism(c_plus=0.01)
        strict = mc_critical(det, 80, 0.01, reps=1000, outer=2, seed=3)
        loose = mc_critical(det, 80, 0.05, reps=1000, outer=2, seed=3)
        assert strict.critical_value >= loose.critical_value

    def test_coverage_quick(self):
        # reduced-size version of the acceptance check
        n, alpha = 100, 0.05
        det = TrGoF(s=2.0, c_plus=1.0 / n)
        res = mc_critical(det, n, alpha, reps=2000, outer=3, seed=21)
        rng = np.random.default_rng(99)
        hits = np.mean([
            det.statistic(rng.random(n)) >= res.critical_value for _ in range(3000)
        ])
        assert abs(hits - alpha) <= 3 * math.sqrt(alpha * (1 - alpha) / 3000) + 0.005

    def test_alpha_domain(self):
        det = TrGoF(s=2.0, c_plus=0.0)
        for bad in (0.0, 1.0):
            with pytest.raises(ValueError):
                mc_critical(det, 50, bad, reps=200, outer=1, seed=0)

    def test_unstable_tail_warns(self):
        det = TrGoF(s=2.0, c_plus=0.0)
        with pytest.warns(UserWarning):
            mc_critical(det, 10, 0.01, reps=200, outer=1, seed=0)

    def test_json_and_cache_key(self):
        det = TrGoF(s=2.0, c_plus=0.01)
        res = mc_critical(det, 30, 0.1, reps=200, outer=1, seed=5)
        back = CalibrationResult.from_json(res.to_json())
        assert back == res
        assert len(res.cache_key()) == 16

    def test_fit_sets_fitted_value(self):
        det = TrGoF(s=2.0, c_plus=0.02).fit(40, alpha=0.1, reps=200, outer=1, seed=2)
        assert det.critical_value_ == det.calibration_.critical_value
        assert det.threshold == det.critical_value_


class TestTradeoffCurve:
    def test_indistinguishable(self):
        x = np.linspace(0.0, 1.0, 50)
        pairs = tradeoff_curve(x, x)
        assert np.allclose(pairs.sum(axis=1), 1.0)

    def test_separated(self):
        pairs = tradeoff_curve(np.zeros(10), np.ones(10))
        assert any(a == 0.0 and b == 0.0 for a, b in pairs)

    def test_monotone_and_count(self):
        rng = np.random.default_rng(6)
        s0, s1 = rng.normal(0, 1, 40), rng.normal(1, 1, 30)
        pairs = tradeoff_curve(s0, s1)
        assert len(pairs) <= 40 + 30 + 1
        alphas, betas = pairs[:, 0], pairs[:, 1]
        assert np.all(np.diff(alphas) <= 1e-12)
        assert np.all(np.diff(betas) >= -1e-12)
