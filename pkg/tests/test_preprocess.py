import datetime
import math

import numpy as np
import pytest
import scipy.special

from siggraphgan import preprocess as pp
from siggraphgan.errors import (
    DataError,
    DegenerateInputError,
    DomainError,
    OrderingError,
    SaturationError,
    SizeError,
)


def make_prices(closes):
    start = datetime.date(2020, 1, 1)
    dates = [start + datetime.timedelta(days=i) for i in range(len(closes))]
    return pp.PriceSeries(dates, np.asarray(closes, dtype=float))


class TestLogReturns:
    def test_unit_to_e(self):
        r = pp.log_returns(make_prices([1.0, math.e]))
        assert r.values == pytest.approx([1.0])

    def test_constant_closes(self):
        r = pp.log_returns(make_prices([5.0, 5.0, 5.0]))
        assert r.values == pytest.approx([0.0, 0.0])

    def test_direct_evaluation(self):
        r = pp.log_returns(make_prices([100.0, 110.0, 99.0]))
        assert r.values == pytest.approx([math.log(1.1), math.log(0.9)], abs=1e-12)

    def test_nonpositive_close_names_index(self):
        with pytest.raises(DomainError, match="index 2"):
            make_prices([1.0, 2.0, -3.0, 4.0])

    def test_recovers_from_exp_cumsum(self):
        rng = np.random.default_rng(0)
        r = rng.standard_normal(50) * 0.01
        prices = make_prices(np.exp(np.concatenate([[0.0], np.cumsum(r)])))
        assert np.max(np.abs(pp.log_returns(prices).values - r)) <= 1e-12


class TestNormalize:
    def test_centering(self):
        out = pp.normalize(pp.ReturnSeries(np.array([0.0, 0.0, 2.0])))
        assert out.source_mean == pytest.approx(2.0 / 3.0)
        assert np.sum(out.values) == pytest.approx(0.0, abs=1e-12)

    def test_idempotent_on_fixed_point(self):
        rng = np.random.default_rng(1)
        v = rng.standard_normal(500)
        v = (v - v.mean()) / v.std()
        out = pp.normalize(pp.ReturnSeries(v))
        assert np.max(np.abs(out.values - v)) <= 1e-12

    def test_population_std(self):
        out = pp.normalize(pp.ReturnSeries(np.array([1.0, 2.0, 3.0])))
        expected = np.array([-1.0, 0.0, 1.0]) / math.sqrt(2.0 / 3.0)
        assert out.values == pytest.approx(expected, abs=1e-4)
        assert out.source_std == pytest.approx(math.sqrt(2.0 / 3.0))

    def test_zero_variance_rejected(self):
        with pytest.raises(DegenerateInputError):
            pp.normalize(pp.ReturnSeries(np.full(10, 0.25)))


class TestLambertW:
    def test_fixed_points(self):
        assert pp.lambert_w0(0.0) == 0.0
        assert pp.lambert_w0(math.e) == pytest.approx(1.0, abs=1e-14)

    def test_at_one_matches_bisection(self):
        # independent bisection oracle on w * e^w = 1
        lo, hi = 0.0, 1.0
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if mid * math.exp(mid) < 1.0:
                lo = mid
            else:
                hi = mid
        assert pp.lambert_w0(1.0) == pytest.approx(0.5 * (lo + hi), abs=1e-12)

    def test_residual_grid(self):
        xs = np.concatenate(
            [
                np.array([-1.0 / math.e + 1e-6, -0.25, -0.05]),
                np.logspace(-6, 6, 200),
            ]
        )
        w = pp.lambert_w0(xs)
        residual = np.abs(w * np.exp(w) - xs)
        assert np.all(residual <= 1e-12 * np.maximum(1.0, np.abs(xs)))

    def test_matches_scipy(self):
        xs = np.logspace(-4, 4, 50)
        assert pp.lambert_w0(xs) == pytest.approx(
            np.real(scipy.special.lambertw(xs)), abs=1e-12
        )

    def test_domain_error(self):
        with pytest.raises(DomainError):
            pp.lambert_w0(-1.0)


class TestGaussianization:
    def test_zero_maps_to_zero(self):
        for delta in (0.0, 0.3, 2.0):
            assert pp.gaussianize(0.0, pp.LambertParams(delta)) == 0.0

    def test_identity_branch(self):
        assert pp.degaussianize(1.7, pp.LambertParams(0.0)) == 1.7
        assert pp.gaussianize(1.7, pp.LambertParams(0.0)) == 1.7

    def test_round_trip(self):
        zs = np.arange(-3.0, 3.5, 0.5)
        for delta in (0.1, 0.5, 1.0):
            params = pp.LambertParams(delta)
            back = pp.gaussianize(pp.degaussianize(zs, params), params)
            assert np.max(np.abs(back - zs)) <= 1e-9

    def test_heavy_tail_formula(self):
        assert pp.degaussianize(1.0, pp.LambertParams(0.2)) == pytest.approx(
            math.exp(0.1), abs=1e-14
        )

    def test_oddness(self):
        params = pp.LambertParams(0.4)
        zs = np.linspace(0.1, 4.0, 25)
        assert pp.gaussianize(-zs, params) == pytest.approx(-pp.gaussianize(zs, params))
        assert pp.degaussianize(-zs, params) == pytest.approx(
            -pp.degaussianize(zs, params)
        )

    def test_overflow_reports_inputs(self):
        with pytest.raises(SaturationError, match="delta"):
            pp.degaussianize(60.0, pp.LambertParams(1.0))


class TestFitDelta:
    def test_standard_normal_sample(self):
        sample = np.random.default_rng(42).standard_normal(10_000)
        assert pp.fit_delta(sample).delta <= 0.05

    def test_recovers_injected_tail_weight(self):
        rng = np.random.default_rng(7)
        heavy = pp.degaussianize(rng.standard_normal(10_000), pp.LambertParams(0.3))
        assert 0.2 <= pp.fit_delta(heavy).delta <= 0.4

    def test_light_tails_clamp_to_zero(self):
        sample = np.random.default_rng(5).uniform(-1.0, 1.0, 5000)
        assert pp.fit_delta(sample).delta == 0.0

    def test_too_short(self):
        with pytest.raises(SizeError):
            pp.fit_delta(np.zeros(50))

    def test_non_finite_rejected(self):
        bad = np.ones(200)
        bad[3] = np.nan
        with pytest.raises(DomainError):
            pp.fit_delta(bad)


class TestWindows:
    @pytest.mark.parametrize(
        "n,length,stride,expected",
        [(5, 5, 1, 1), (7, 5, 1, 3), (100, 100, 1, 1), (10, 4, 2, 4)],
    )
    def test_counts(self, n, length, stride, expected):
        values = np.arange(float(n))
        out = pp.windows(pp.ReturnSeries(values), pp.WindowSpec(length, stride))
        assert out.shape == (expected, length)

    def test_window_contents(self):
        out = pp.windows(pp.ReturnSeries(np.arange(6.0)), pp.WindowSpec(3, 2))
        assert out.tolist() == [[0, 1, 2], [2, 3, 4]]

    def test_too_short(self):
        with pytest.raises(SizeError):
            pp.windows(pp.ReturnSeries(np.arange(3.0)), pp.WindowSpec(4))


class TestFullPipeline:
    def test_round_trip_identity(self):
        rng = np.random.default_rng(11)
        returns = pp.degaussianize(rng.standard_normal(2000), pp.LambertParams(0.25))
        returns = returns * 0.01 + 0.0002
        normalized = pp.normalize(pp.ReturnSeries(returns))
        params = pp.fit_delta(normalized.values)
        gauss = pp.gaussianize(normalized.values, params)
        stats = pp.PreprocessStats(
            normalized.source_mean, normalized.source_std, params.delta
        )
        back = pp.invert_pipeline(gauss, stats)
        assert np.max(np.abs(back - returns)) <= 1e-9

    def test_prepare_training_returns(self):
        rng = np.random.default_rng(3)
        prices = make_prices(100 * np.exp(np.cumsum(rng.standard_normal(500) * 0.01)))
        gauss, stats = pp.prepare_training_returns(prices)
        assert gauss.shape == (499,)
        assert stats.std > 0
        back = pp.invert_pipeline(gauss, stats)
        assert back == pytest.approx(pp.log_returns(prices).values, abs=1e-9)


class TestPriceCsv:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "prices.csv"
        path.write_text("date,close\n2020-01-01,100.5\n2020-01-02,101.25\n")
        prices = pp.load_price_csv(path)
        assert prices.closes.tolist() == [100.5, 101.25]

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("time,price\n2020-01-01,1\n")
        with pytest.raises(DataError, match="header"):
            pp.load_price_csv(path)

    def test_descending_dates_rejected(self, tmp_path):
        path = tmp_path / "desc.csv"
        path.write_text("date,close\n2020-01-02,1\n2020-01-01,2\n")
        with pytest.raises(OrderingError, match=":3"):
            pp.load_price_csv(path)

    def test_bad_close_names_line(self, tmp_path):
        path = tmp_path / "badval.csv"
        path.write_text("date,close\n2020-01-01,1\n2020-01-02,abc\n")
        with pytest.raises(DataError, match=":3"):
            pp.load_price_csv(path)

    def test_missing_file(self):
        with pytest.raises(DataError):
            pp.load_price_csv("/nonexistent/prices.csv")
