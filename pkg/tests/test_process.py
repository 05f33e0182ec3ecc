"""Tests for exact simulation of the squared-observation system."""

import numpy as np
import pytest
from numpy.testing import assert_allclose, assert_array_equal

from sparch import (
    GaussianError,
    InvalidModelError,
    NonnegativityViolationError,
    Realization,
    SarSpArchModel,
    SpArchModel,
    SparseWeights,
    TruncatedGaussianError,
    UniformError,
    build_A,
    build_arch_embedding,
    build_rook,
    closed_form_two_site,
    eta_vector,
    realize,
    simulate,
    simulate_sar_sparch,
    solve_y2,
    spgarch_h,
    support_bound,
    validate_model,
)
from sparch.process import _solve_general


def two_site_model(w12, w21, alpha=(1.0, 1.0)):
    w = SparseWeights(np.array([[0.0, w12], [w21, 0.0]]))
    return SpArchModel(alpha=np.asarray(alpha), weights=w, error=GaussianError())


class TestModelGuards:
    def test_alpha_scalar_broadcast(self):
        m = SpArchModel(alpha=2.0, weights=build_rook(3), error=GaussianError())
        assert_array_equal(m.alpha, np.full(9, 2.0))

    def test_rejects_negative_alpha(self):
        with pytest.raises(InvalidModelError, match="nonnegative"):
            SpArchModel(
                alpha=np.array([1.0, -0.1, 1.0, 1.0]),
                weights=build_rook(2),
                error=GaussianError(),
            )

    def test_rejects_wrong_types(self):
        with pytest.raises(InvalidModelError, match="SparseWeights"):
            SpArchModel(alpha=1.0, weights=np.zeros((2, 2)), error=GaussianError())
        with pytest.raises(InvalidModelError, match="ErrorSpec"):
            SpArchModel(alpha=1.0, weights=build_rook(2), error="gaussian")


class TestTwoSiteClosedForm:
    def test_matches_general_solver(self, rng):
        model = two_site_model(0.5, 0.3, alpha=(1.2, 0.7))
        for _ in range(200):
            eps = rng.uniform(-1.1, 1.1, size=2)
            expected, admissible = closed_form_two_site(
                model.alpha, 0.5, 0.3, eps
            )
            assert admissible
            y2, h = solve_y2(model, eps)
            assert_allclose(y2, expected, rtol=1e-12)
            assert_allclose(h, model.alpha + model.weights.matrix @ y2, rtol=1e-12)

    def test_admissibility_boundary(self):
        # w12 w21 e1^2 e2^2 = 0.25 * 16 > 1: no real-valued solution
        _, admissible = closed_form_two_site([1.0, 1.0], 0.5, 0.5, [2.0, 2.0])
        assert not admissible
        model = two_site_model(0.5, 0.5)
        with pytest.raises(NonnegativityViolationError):
            realize(model, np.array([2.0, 2.0]))

    def test_rejects_negative_parameters(self):
        with pytest.raises(InvalidModelError):
            closed_form_two_site([1.0, -1.0], 0.5, 0.5, [0.1, 0.1])


class TestSolverPaths:
    def test_triangular_and_general_agree(self, oriented8, rng):
        model = SpArchModel(
            alpha=1.0, weights=oriented8.scaled(0.8), error=GaussianError()
        )
        assert model.weights.solve_order() is not None
        for _ in range(20):
            eps = rng.standard_normal(model.n)
            y2_tri, h_tri = solve_y2(model, eps)
            y2_gen, h_gen = _solve_general(model, eps)
            assert_allclose(y2_tri, y2_gen, rtol=1e-10, atol=1e-12)
            assert_allclose(h_tri, h_gen, rtol=1e-10, atol=1e-12)

    def test_solution_satisfies_the_linear_system(self, rng):
        w = build_rook(4).scaled(0.4)
        model = SpArchModel(
            alpha=2.0, weights=w, error=TruncatedGaussianError(1.0)
        )
        eps = model.error.sample(rng, model.n)
        y2, h = solve_y2(model, eps)
        A = build_A(w, eps)
        lhs = y2 - A @ (A @ y2)
        assert_allclose(lhs, eta_vector(model, eps), rtol=1e-10, atol=1e-12)
        assert_allclose(h, model.alpha + w.matrix @ y2, rtol=1e-12)

    def test_three_site_chain_by_hand(self):
        w = SparseWeights(np.array([[0, 0, 0], [0.5, 0, 0], [0, 0.5, 0.0]]))
        model = SpArchModel(alpha=1.0, weights=w, error=GaussianError())
        y2, h = solve_y2(model, np.array([1.0, -1.0, 1.0]))
        assert_allclose(h, [1.0, 1.5, 1.75], rtol=1e-15)
        assert_allclose(y2, [1.0, 1.5, 1.75], rtol=1e-15)

    def test_zero_innovation_pins_site_to_zero(self):
        model = two_site_model(0.4, 0.4)
        y2, h = solve_y2(model, np.array([0.0, 0.7]))
        assert y2[0] == 0.0
        assert h[1] == pytest.approx(1.0)  # no feedback from the silent site

    def test_no_weights_reduces_to_scaled_noise(self, rng):
        w = SparseWeights(np.zeros((6, 6)))
        alpha = np.array([1.0, 2.0, 0.5, 4.0, 1.5, 3.0])
        model = SpArchModel(alpha=alpha, weights=w, error=GaussianError())
        eps = rng.standard_normal(6)
        real = realize(model, eps)
        assert_allclose(real.y, eps * np.sqrt(alpha), rtol=1e-15)
        assert_allclose(real.h, alpha, rtol=0)

    def test_sign_symmetry(self, rng):
        model = SpArchModel(
            alpha=1.5, weights=build_rook(3).scaled(0.3), error=GaussianError()
        )
        eps = rng.uniform(-0.9, 0.9, 9)
        plus = realize(model, eps)
        minus = realize(model, -eps)
        assert_allclose(minus.y2, plus.y2, rtol=1e-12)
        assert_allclose(minus.h, plus.h, rtol=1e-12)
        assert_allclose(minus.y, -plus.y, rtol=1e-12)

    def test_arch_embedding_reproduces_the_time_recursion(self, rng):
        a0, coefs = 0.3, np.array([0.4, 0.2])
        n = 40
        model = SpArchModel(
            alpha=a0, weights=build_arch_embedding(n, coefs), error=GaussianError()
        )
        eps = rng.standard_normal(n)
        real = realize(model, eps)
        h = np.empty(n)
        y2 = np.empty(n)
        for t in range(n):
            h[t] = a0
            for k, ak in enumerate(coefs, start=1):
                if t - k >= 0:
                    h[t] += ak * y2[t - k]
            y2[t] = eps[t] ** 2 * h[t]
        assert_allclose(real.h, h, rtol=1e-12)
        assert_allclose(real.y2, y2, rtol=1e-12)


class TestRealization:
    def test_internal_consistency(self, oriented8):
        model = SpArchModel(alpha=1.0, weights=oriented8, error=GaussianError())
        real = simulate(model, seed=5)
        assert_allclose(real.y * real.y, real.y2, rtol=1e-12)
        assert_allclose(real.y, real.eps * np.sqrt(real.h), rtol=1e-12)
        assert real.seed == 5

    def test_simulation_is_deterministic(self, oriented8):
        model = SpArchModel(alpha=1.0, weights=oriented8, error=GaussianError())
        a = simulate(model, seed=11)
        b = simulate(model, seed=11)
        c = simulate(model, seed=12)
        assert_array_equal(a.y, b.y)
        assert not np.array_equal(a.y, c.y)

    def test_innovations_respect_truncation(self):
        model = SpArchModel(
            alpha=5.0,
            weights=build_rook(7).scaled(0.5),
            error=TruncatedGaussianError(1.3),
        )
        real = simulate(model, seed=2)
        assert np.max(np.abs(real.eps)) <= 1.3

    def test_csv_round_trip(self, tmp_path, oriented8):
        model = SpArchModel(alpha=1.0, weights=oriented8, error=GaussianError())
        real = simulate(model, seed=3)
        path = tmp_path / "real.csv"
        real.to_csv(path)
        back = Realization.from_csv(path)
        assert_array_equal(back.y, real.y)
        assert_array_equal(back.h, real.h)
        assert_array_equal(back.eps, real.eps)


class TestValidityReport:
    def test_triangular_certificate(self, oriented8):
        model = SpArchModel(alpha=1.0, weights=oriented8, error=GaussianError())
        report = validate_model(model)
        assert report.certificate == "triangular"
        assert report.always_valid

    def test_bounded_support_certificate(self):
        w = build_rook(5).scaled(0.5)
        bound = support_bound(w)
        model = SpArchModel(
            alpha=5.0, weights=w, error=TruncatedGaussianError(0.999 * bound)
        )
        report = validate_model(model)
        assert report.certificate == "bounded-support"
        assert report.always_valid
        assert report.max_abs_innovation < report.bound

    def test_unverified(self):
        model = SpArchModel(
            alpha=5.0, weights=build_rook(5).scaled(0.5), error=GaussianError()
        )
        report = validate_model(model)
        assert report.certificate == "unverified"
        assert not report.always_valid


class TestSarSpArch:
    def make_model(self, d=5, lambdas=(0.3,), rho=0.5):
        from sparch import build_queen_lag

        n = d * d
        sar = [build_queen_lag(d, k) for k in range(1, len(lambdas) + 1)]
        noise = SpArchModel(
            alpha=0.5,
            weights=build_rook(d).scaled(rho),
            error=TruncatedGaussianError(1.0),
        )
        X = np.column_stack([np.ones(n), np.linspace(0.0, 1.0, n)])
        return SarSpArchModel(
            X=X,
            beta=np.array([1.0, -2.0]),
            lambdas=np.asarray(lambdas),
            sar_weights=sar,
            noise=noise,
        )

    def test_solution_satisfies_the_sar_system(self):
        model = self.make_model(lambdas=(0.3, 0.2))
        real = simulate_sar_sparch(model, seed=8)
        lhs = real.y.copy()
        for lam, B in zip(model.lambdas, model.sar_weights):
            lhs -= lam * (B.matrix @ real.y)
        assert_allclose(lhs, model.X @ model.beta + real.xi, rtol=1e-10)

    def test_zero_lambda_is_regression_plus_disturbance(self):
        model = self.make_model(lambdas=(0.0,))
        real = simulate_sar_sparch(model, seed=8)
        assert_allclose(real.y, model.X @ model.beta + real.xi, rtol=1e-12)

    def test_disturbances_follow_the_noise_process(self):
        model = self.make_model()
        real = simulate_sar_sparch(model, seed=4)
        direct = simulate(model.noise, seed=4)
        assert_array_equal(real.xi, direct.y)
        assert_array_equal(real.h, direct.h)

    def test_requires_intercept_column(self):
        noise = SpArchModel(
            alpha=1.0, weights=build_rook(2), error=GaussianError()
        )
        with pytest.raises(InvalidModelError, match="ones"):
            SarSpArchModel(
                X=np.full((4, 1), 2.0),
                beta=np.array([1.0]),
                lambdas=np.array([0.1]),
                sar_weights=[build_rook(2)],
                noise=noise,
            )

    def test_csv_layout(self, tmp_path):
        real = simulate_sar_sparch(self.make_model(), seed=1)
        path = tmp_path / "sar.csv"
        real.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header == "site_index,y,h,eps,xi"


class TestSpGarchHelper:
    def test_reduces_to_arch_when_w2_is_zero(self, rng):
        w1 = build_rook(3).scaled(0.4)
        zero = SparseWeights(np.zeros((9, 9)))
        y2 = rng.random(9)
        h = spgarch_h(y2, 1.0, w1, zero)
        assert_allclose(h, 1.0 + w1.matrix @ y2, rtol=1e-14)

    def test_solves_the_implicit_system(self, rng):
        w1 = build_rook(3).scaled(0.4)
        w2 = build_rook(3).scaled(0.2)
        y2 = rng.random(9)
        h = spgarch_h(y2, 0.5, w1, w2)
        assert_allclose(h - w2.matrix @ h, 0.5 + w1.matrix @ y2, rtol=1e-12)


class TestUniformInnovations:
    def test_uniform_simulation_within_bound_is_always_valid(self):
        w = build_rook(4).scaled(1.0)
        bound = support_bound(w)
        model = SpArchModel(
            alpha=1.0, weights=w, error=UniformError(0.99 * bound)
        )
        assert validate_model(model).always_valid
        for seed in range(25):
            real = simulate(model, seed=seed)
            assert np.all(real.h > 0.0)
            assert np.all(np.isfinite(real.y))
