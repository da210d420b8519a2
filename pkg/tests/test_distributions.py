import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mdyn.distributions import (
    custom,
    dist_from_dict,
    dist_to_dict,
    heterogeneity,
    normal_zero_mean,
)
from mdyn.errors import DegenerateDistributionError, InvalidParameterError


def _logistic():
    def cdf(x):
        return 1.0 / (1.0 + np.exp(-np.asarray(x, dtype=float)))

    def pdf(x):
        c = cdf(x)
        return c * (1.0 - c)

    return cdf, pdf


class TestNormal:
    def test_values_at_zero(self):
        d = normal_zero_mean(2.0)
        assert float(d.cdf(0.0)) == 0.5
        assert d.peak_density == pytest.approx(1.0 / (2.0 * math.sqrt(2.0 * math.pi)), rel=1e-15)
        assert float(d.pdf1(0.0)) == 0.0
        # pdf'' of N(0, s^2) at 0 is -1/(s^3 sqrt(2 pi))
        assert float(d.pdf2(0.0)) == pytest.approx(-1.0 / (8.0 * math.sqrt(2.0 * math.pi)), rel=1e-14)

    def test_derivatives_match_differences(self, std_normal):
        x = np.linspace(-3, 3, 13)
        h = 1e-5
        fd1 = (std_normal.pdf(x + h) - std_normal.pdf(x - h)) / (2 * h)
        fd2 = (std_normal.pdf1(x + h) - std_normal.pdf1(x - h)) / (2 * h)
        np.testing.assert_allclose(std_normal.pdf1(x), fd1, atol=1e-9)
        np.testing.assert_allclose(std_normal.pdf2(x), fd2, atol=1e-9)

    def test_unit_peak(self, unit_peak):
        assert unit_peak.peak_density == pytest.approx(1.0, abs=1e-15)
        assert heterogeneity(unit_peak) == pytest.approx(1.0, abs=1e-15)

    @pytest.mark.parametrize("sigma", [0.0, -1.0, math.inf, math.nan])
    def test_bad_sigma(self, sigma):
        with pytest.raises(InvalidParameterError):
            normal_zero_mean(sigma)

    def test_balance_keeps_relative_precision(self, std_normal):
        x = 1e-10
        expected = -2.0 * x / math.sqrt(2.0 * math.pi)
        assert float(std_normal.balance(x)) == pytest.approx(expected, rel=1e-12)

    def test_ppf_inverts_cdf(self, std_normal):
        q = np.array([1e-6, 0.1, 0.5, 0.9, 1 - 1e-6])
        np.testing.assert_allclose(std_normal.cdf(std_normal.ppf(q)), q, rtol=1e-12)

    def test_validates(self, std_normal):
        std_normal.validate()

    @settings(max_examples=50, deadline=None)
    @given(sigma=st.floats(0.05, 20.0), x=st.floats(-50.0, 50.0))
    def test_balance_odd_and_bounded(self, sigma, x):
        d = normal_zero_mean(sigma)
        b = float(d.balance(x))
        assert -1.0 <= b <= 1.0
        assert b == -float(d.balance(-x))
        assert b == pytest.approx(1.0 - 2.0 * float(d.cdf(x)), abs=1e-15)


class TestCustom:
    def test_logistic_finite_difference_derivatives(self):
        cdf, pdf = _logistic()
        d = custom(cdf, pdf)
        assert d.derivative_source == "finite-difference"
        x = np.linspace(-4, 4, 9)
        # logistic: pdf' = -pdf tanh(x/2), pdf'' = pdf (1 - 6 pdf)
        np.testing.assert_allclose(d.pdf1(x), -pdf(x) * np.tanh(x / 2), atol=1e-8)
        np.testing.assert_allclose(d.pdf2(x), pdf(x) * (1 - 6 * pdf(x)), atol=1e-6)
        assert d.peak_density == pytest.approx(0.25)

    def test_analytic_derivatives_kept(self):
        cdf, pdf = _logistic()
        d = custom(cdf, pdf, pdf1=lambda x: -pdf(x) * np.tanh(np.asarray(x) / 2),
                   pdf2=lambda x: pdf(x) * (1 - 6 * pdf(x)))
        assert d.derivative_source == "analytic"

    def test_bisection_ppf(self):
        cdf, pdf = _logistic()
        d = custom(cdf, pdf)
        q = np.array([0.01, 0.3, 0.5, 0.77])
        np.testing.assert_allclose(d.ppf(q), np.log(q / (1 - q)), atol=1e-12)

    def test_balance_defaults_to_cdf(self):
        cdf, pdf = _logistic()
        d = custom(cdf, pdf)
        assert float(d.balance(1.0)) == pytest.approx(1 - 2 * float(cdf(1.0)), abs=1e-16)

    def test_off_centre_rejected(self):
        with pytest.raises(InvalidParameterError, match="cdf"):
            custom(lambda x: normal_zero_mean(1.0).cdf(np.asarray(x) - 0.3),
                   lambda x: normal_zero_mean(1.0).pdf(np.asarray(x) - 0.3))

    def test_bimodal_rejected(self):
        n = normal_zero_mean(0.5)

        def cdf(x):
            x = np.asarray(x, dtype=float)
            return 0.5 * (n.cdf(x - 1) + n.cdf(x + 1))

        def pdf(x):
            x = np.asarray(x, dtype=float)
            return 0.5 * (n.pdf(x - 1) + n.pdf(x + 1))

        with pytest.raises(InvalidParameterError, match="density"):
            custom(cdf, pdf)

    def test_zero_density_rejected(self):
        with pytest.raises(DegenerateDistributionError):
            custom(lambda x: np.clip(0.5 + 0.0 * np.asarray(x), 0, 1), lambda x: 0.0 * np.asarray(x))


def test_dict_round_trip():
    d = normal_zero_mean(0.7)
    obj = json.loads(json.dumps(dist_to_dict(d)))
    assert dist_from_dict(obj).sigma == 0.7
    assert dist_from_dict({"dist": obj}).sigma == 0.7


def test_dict_rejects_unknown_kind():
    with pytest.raises(InvalidParameterError):
        dist_from_dict({"kind": "cauchy"})
