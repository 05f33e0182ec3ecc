"""Tests for the innovation distributions."""

import numpy as np
import pytest
from numpy.testing import assert_allclose
from scipy import integrate
from scipy.stats import norm, truncnorm

from sparch import (
    GaussianError,
    InvalidParameterError,
    TruncatedGaussianError,
    UniformError,
    UsageError,
    error_spec_from_config,
)


class TestGaussian:
    def test_matches_scipy_norm(self):
        err = GaussianError()
        x = np.linspace(-4.0, 4.0, 33)
        assert_allclose(err.pdf(x), norm.pdf(x), rtol=1e-13)
        assert_allclose(err.logpdf(x), norm.logpdf(x), rtol=1e-13)
        u = np.linspace(0.01, 0.99, 21)
        assert_allclose(err.ppf(u), norm.ppf(u), rtol=1e-12)

    def test_unbounded(self):
        err = GaussianError()
        assert not err.bounded()
        assert err.max_abs() == np.inf
        assert err.variance == 1.0


class TestTruncatedGaussian:
    def test_matches_scipy_truncnorm(self):
        a = 1.3
        err = TruncatedGaussianError(a)
        x = np.linspace(-a, a, 41)
        assert_allclose(err.pdf(x), truncnorm.pdf(x, -a, a), rtol=1e-12)
        assert_allclose(err.logpdf(x), truncnorm.logpdf(x, -a, a), rtol=1e-12)
        u = np.linspace(0.05, 0.95, 19)
        assert_allclose(err.ppf(u), truncnorm.ppf(u, -a, a), rtol=1e-10, atol=1e-14)

    def test_density_vanishes_outside_support(self):
        err = TruncatedGaussianError(0.8)
        assert err.pdf(np.array([0.81, -2.0])).tolist() == [0.0, 0.0]
        assert np.all(np.isneginf(err.logpdf(np.array([0.81, -2.0]))))

    def test_variance_below_one_by_default(self):
        err = TruncatedGaussianError(1.0)
        assert err.variance == pytest.approx(truncnorm.var(-1.0, 1.0), rel=1e-12)
        assert err.variance < 1.0
        assert err.support == (-1.0, 1.0)

    def test_unit_variance_rescaling(self):
        a = 1.0
        err = TruncatedGaussianError(a, unit_variance=True)
        # second moment by quadrature over the widened support
        lo, hi = err.support
        m2, _ = integrate.quad(lambda t: t * t * float(err.pdf(np.float64(t))), lo, hi)
        assert m2 == pytest.approx(1.0, abs=1e-9)
        assert hi == pytest.approx(a / np.sqrt(truncnorm.var(-a, a)))
        assert err.max_abs() == pytest.approx(hi)

    def test_samples_respect_support(self):
        err = TruncatedGaussianError(0.9)
        draws = err.sample(np.random.default_rng(1), 10000)
        assert np.max(np.abs(draws)) <= 0.9

    def test_rejects_bad_truncation(self):
        with pytest.raises(InvalidParameterError):
            TruncatedGaussianError(0.0)
        with pytest.raises(InvalidParameterError):
            TruncatedGaussianError(np.inf)


class TestUniform:
    def test_density_and_ppf(self):
        err = UniformError(2.0)
        assert err.pdf(np.array([0.0, 1.9, 2.1])).tolist() == [0.25, 0.25, 0.0]
        assert_allclose(err.ppf(np.array([0.0, 0.5, 1.0])), [-2.0, 0.0, 2.0])
        assert err.variance == pytest.approx(4.0 / 3.0)

    def test_flat_score(self):
        err = UniformError(1.0)
        assert np.all(err.score_ratio(np.linspace(-0.9, 0.9, 7)) == 0.0)


class TestSharedStream:
    def test_families_consume_the_stream_identically(self):
        # after n draws, both generators sit at the same stream position
        for err in (GaussianError(), TruncatedGaussianError(1.1), UniformError(0.5)):
            rng = np.random.default_rng(42)
            err.sample(rng, 7)
            assert rng.random() == np.random.default_rng(42).random(8)[-1]

    def test_sampling_is_deterministic(self):
        err = TruncatedGaussianError(1.5)
        a = err.sample(np.random.default_rng(9), 16)
        b = err.sample(np.random.default_rng(9), 16)
        assert_allclose(a, b, rtol=0)


class TestScoreRatio:
    @pytest.mark.parametrize(
        "err", [GaussianError(), TruncatedGaussianError(2.0), UniformError(1.5)]
    )
    def test_matches_logpdf_derivative(self, err):
        x = np.linspace(-1.2, 1.2, 9)
        step = 1e-6
        numeric = (err.logpdf(x + step) - err.logpdf(x - step)) / (2.0 * step)
        assert_allclose(err.score_ratio(x), numeric, atol=1e-6)


class TestConfigRoundTrip:
    @pytest.mark.parametrize(
        "err",
        [
            GaussianError(),
            TruncatedGaussianError(1.3),
            TruncatedGaussianError(0.7, unit_variance=True),
            UniformError(2.5),
        ],
    )
    def test_round_trip(self, err):
        back = error_spec_from_config(err.to_config())
        assert back.kind == err.kind
        assert back.support == err.support
        assert back.variance == pytest.approx(err.variance)

    def test_shorthand_and_passthrough(self):
        assert isinstance(error_spec_from_config("gaussian"), GaussianError)
        err = UniformError(1.0)
        assert error_spec_from_config(err) is err

    def test_rejects_unknown_specs(self):
        with pytest.raises(UsageError):
            error_spec_from_config("cauchy")
        with pytest.raises(UsageError):
            error_spec_from_config({"a": 1.0})
        with pytest.raises(UsageError):
            error_spec_from_config({"kind": "levy"})
        with pytest.raises(UsageError):
            error_spec_from_config({"kind": "uniform"})
