import numpy as np
import pytest

from oracles import emd_lp
from siggraphgan import metrics as mt
from siggraphgan.errors import DegenerateInputError, SizeError


class TestKDayAggregate:
    def test_identity_at_one(self):
        r = np.array([0.1, -0.2, 0.3])
        assert mt.k_day_aggregate(r, 1) == pytest.approx(r)

    def test_rolling_sums(self):
        assert mt.k_day_aggregate(np.array([1.0, 2.0, 3.0]), 2) == pytest.approx(
            [3.0, 5.0]
        )

    def test_stride_k_slices_telescope(self):
        rng = np.random.default_rng(0)
        r = rng.standard_normal(40)
        agg = mt.k_day_aggregate(r, 5)
        assert np.sum(agg[::5]) == pytest.approx(np.sum(r))

    def test_horizon_too_long(self):
        with pytest.raises(SizeError):
            mt.k_day_aggregate(np.zeros(3), 4)


class TestEmd:
    def test_identical_samples(self):
        rng = np.random.default_rng(1)
        x = rng.standard_normal(100)
        assert mt.emd_1d(x, x.copy()) == 0.0

    def test_point_masses(self):
        assert mt.emd_1d([0.0], [1.0]) == pytest.approx(1.0)

    def test_sorted_pairing(self):
        assert mt.emd_1d([0.0, 1.0], [0.5, 1.5]) == pytest.approx(0.5)

    def test_empty_rejected(self):
        with pytest.raises(SizeError):
            mt.emd_1d([], [1.0])

    def test_matches_lp_oracle_equal_sizes(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = rng.integers(2, 11)
            x = rng.standard_normal(n)
            y = rng.standard_normal(n)
            assert mt.emd_1d(x, y) == pytest.approx(emd_lp(x, y), abs=1e-9)

    def test_matches_lp_oracle_unequal_sizes(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            n, m = rng.integers(1, 11, size=2)
            x = rng.standard_normal(n)
            y = rng.standard_normal(m)
            assert mt.emd_1d(x, y) == pytest.approx(emd_lp(x, y), abs=1e-9)

    def test_metric_axioms(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            x = rng.standard_normal(6)
            y = rng.standard_normal(6)
            z = rng.standard_normal(6)
            dxy = mt.emd_1d(x, y)
            assert dxy == pytest.approx(mt.emd_1d(y, x), abs=1e-12)
            assert dxy >= 0.0
            assert mt.emd_1d(x, np.random.permutation(x)) == pytest.approx(0.0)
            assert dxy <= mt.emd_1d(x, z) + mt.emd_1d(z, y) + 1e-12

    def test_scaling_linearity(self):
        rng = np.random.default_rng(5)
        x = rng.standard_normal(30)
        y = rng.standard_normal(30)
        base = mt.emd_1d(x, y)
        for c in (-2.0, 0.5, 10.0):
            assert mt.emd_1d(c * x, c * y) == pytest.approx(abs(c) * base, abs=1e-12)


class TestSigRmse:
    def test_identical_sets(self):
        rng = np.random.default_rng(6)
        w = rng.standard_normal((12, 25))
        assert mt.sig_rmse(w, w.copy(), k=1) == 0.0
        assert mt.sig_rmse(w, w.copy(), k=5) == 0.0

    def test_permutation_invariance(self):
        rng = np.random.default_rng(7)
        real = rng.standard_normal((10, 22))
        fake = rng.standard_normal((10, 22))
        base = mt.sig_rmse(real, fake, k=2)
        shuffled = fake[rng.permutation(10)]
        assert mt.sig_rmse(real, shuffled, k=2) == pytest.approx(base, abs=1e-14)

    def test_disjoint_halves_within_bootstrap_spread(self):
        rng = np.random.default_rng(8)
        windows = 0.01 * rng.standard_normal((400, 24))
        half = mt.sig_rmse(windows[:200], windows[200:], k=1)
        spreads = []
        for _ in range(30):
            pick = rng.permutation(400)
            spreads.append(
                mt.sig_rmse(windows[pick[:200]], windows[pick[200:]], k=1)
            )
        assert half <= 3.0 * max(spreads)

    def test_window_too_short_for_horizon(self):
        with pytest.raises(SizeError):
            mt.sig_rmse(np.zeros((3, 5)), np.zeros((3, 5)), k=5)


class TestLeverageEffect:
    def test_identical_series(self):
        rng = np.random.default_rng(9)
        r = rng.standard_normal(500)
        assert mt.leverage_effect_score(r, r.copy()) == 0.0

    def test_symmetry(self):
        rng = np.random.default_rng(10)
        a = rng.standard_normal(500)
        b = rng.standard_normal(500)
        assert mt.leverage_effect_score(a, b) == pytest.approx(
            mt.leverage_effect_score(b, a)
        )

    def test_independent_gaussians_near_zero(self):
        rng = np.random.default_rng(11)
        a = rng.standard_normal(5000)
        b = rng.standard_normal(5000)
        assert mt.leverage_effect_score(a, b) <= 0.1

    def test_detects_leverage(self):
        # negative return today -> much higher volatility for days after
        rng = np.random.default_rng(12)
        n = 4000
        shocks = rng.standard_normal(n)
        vol = np.ones(n)
        for t in range(1, n):
            vol[t] = 0.1 + 0.6 * vol[t - 1] + 2.0 * max(0.0, -shocks[t - 1])
        leveraged = shocks * vol
        plain = rng.standard_normal(n)
        assert mt.leverage_effect_score(leveraged, plain) > 0.1

    def test_too_short(self):
        with pytest.raises(SizeError):
            mt.leverage_effect_score(np.zeros(20), np.zeros(20))

    def test_constant_series_rejected(self):
        with pytest.raises(DegenerateInputError):
            mt.leverage_effect_score(np.ones(100), np.ones(100))


class TestReport:
    def test_identical_inputs_all_zero(self):
        rng = np.random.default_rng(13)
        r = 0.01 * rng.standard_normal(400)
        report = mt.build_report(r, r.copy())
        for label in mt.REPORT_LABELS:
            assert report.values[label] == 0.0

    def test_labels_match_contract(self):
        assert mt.REPORT_LABELS == (
            "EMD(1)",
            "EMD(5)",
            "EMD(20)",
            "EMD(100)",
            "Sig-RMSE(1)",
            "Sig-RMSE(5)",
            "Sig-RMSE(20)",
            "Sig-RMSE(100)",
            "Leverage Effect",
        )

    def test_display_scaling(self):
        rng = np.random.default_rng(14)
        real = 0.01 * rng.standard_normal(300)
        fake = 0.01 * rng.standard_normal(300)
        report = mt.build_report(real, fake)
        for label in mt.REPORT_LABELS:
            assert report.display_value(label) == pytest.approx(
                report.values[label] * 100.0
            )
        csv_text = report.to_csv_text()
        assert csv_text.startswith("metric,raw,display_x100\n")
        assert "EMD(1)," in csv_text

    def test_values_nonnegative_and_finite(self):
        rng = np.random.default_rng(15)
        real = 0.01 * rng.standard_normal(300)
        fake = 0.02 * rng.standard_normal(350) + 0.001
        report = mt.build_report(real, fake)
        for label in mt.REPORT_LABELS:
            assert report.values[label] >= 0.0
            assert np.isfinite(report.values[label])

    def test_too_short_rejected(self):
        with pytest.raises(SizeError):
            mt.build_report(np.zeros(50), np.zeros(50))
