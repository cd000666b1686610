import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from kernellab import estimators as es
from kernellab.data import make_rng, sample, standard_model
from kernellab.kernels import ScaledKernel, eval_kernel, exp_inner, gaussian, gram, laplace, ntk
from kernellab.numerics import SingularMatrixError


def instance(seed, n=40, d=8):
    r = make_rng(seed)
    X = r.standard_normal((n, d))
    return X, r.standard_normal(n)


class TestRidge:
    def test_n1_closed_form(self):
        k = ScaledKernel(gaussian(), 2.0)
        x1, y1, lam = np.array([[0.3, -1.0]]), np.array([1.7]), 0.4
        est = es.fit_ridge(k, x1, y1, lam)
        x = np.array([1.0, 0.5])
        ref = y1[0] * eval_kernel(k, x1[0], x) / (eval_kernel(k, x1[0], x1[0]) + lam)
        assert es.predict(est, x[None, :])[0] == pytest.approx(ref, rel=1e-14)

    def test_huge_lambda_shrinks_to_zero(self):
        X, y = instance(1)
        K = gram(ScaledKernel(laplace(), 8.0), X)
        est = es.fit_ridge(ScaledKernel(laplace(), 8.0), X, y, 1e12 * np.trace(K))
        assert np.abs(es.predict_in_sample(est)).max() <= 1e-6 * np.abs(y).max()

    def test_laplace_interpolates(self):
        X, y = instance(2, n=50)
        est = es.fit_ridge(ScaledKernel(laplace(), 8.0), X, y, 0.0)
        assert est.jitter_used == 0.0
        assert np.abs(es.predict(est, X) - y).max() <= 1e-6 * np.abs(y).max()

    def test_linearity(self):
        X, y1 = instance(3)
        y2 = make_rng(33).standard_normal(len(y1))
        k = ScaledKernel(gaussian(), 8.0)
        Xt = make_rng(34).standard_normal((10, 8))
        p = es.predict(es.fit_ridge(k, X, y1 + y2, 0.1), Xt)
        q = es.predict(es.fit_ridge(k, X, y1, 0.1), Xt) + es.predict(es.fit_ridge(k, X, y2, 0.1), Xt)
        assert np.abs(p - q).max() <= 1e-9 * np.abs(p).max()

    def test_two_symmetric_points(self):
        a = 0.6
        X = np.array([[-a, 0.0], [a, 0.0]])
        y = np.array([2.0, 2.0])
        k = ScaledKernel(gaussian(), 1.0)
        est = es.fit_ridge(k, X, y, 0.0)
        k12, k1m = math.exp(-4 * a * a), math.exp(-a * a)
        # direct 2x2 solve: dual = y / (1 + k12) per point
        mid = es.predict(est, np.zeros((1, 2)))[0]
        assert mid == pytest.approx(2.0 * 2.0 * k1m / (1.0 + k12), rel=1e-12)
        p = es.predict(est, np.array([[0.1, 0.7], [-0.1, 0.7]]))
        assert p[0] == pytest.approx(p[1], rel=1e-13)

    def test_multi_column_targets(self):
        X, y = instance(4)
        Y = np.column_stack([y, 2 * y])
        est = es.fit_ridge(ScaledKernel(laplace(), 8.0), X, Y, 0.01)
        np.testing.assert_allclose(est.dual[:, 1], 2 * est.dual[:, 0], rtol=1e-12)

    def test_input_validation(self):
        X, y = instance(5)
        k = ScaledKernel(laplace(), 8.0)
        with pytest.raises(ValueError):
            es.fit_ridge(k, X, y, -1.0)
        with pytest.raises(ValueError):
            es.fit_ridge(k, X, y[:-1], 0.0)
        est = es.fit_ridge(k, X, y, 0.0)
        with pytest.raises(ValueError):
            es.predict(est, np.ones((2, 3)))

    def test_singular_gram_beyond_jitter(self):
        X = np.ones((3, 2))  # identical rows: rank-one Gram with a floor of 1e-6 relative
        k = ScaledKernel(exp_inner(), 1.0)
        est = es.fit_ridge(k, X, np.array([1.0, 1.0, 1.0]), 0.0)
        assert est.jitter_used > 0  # surfaced, not silent
        with pytest.raises(SingularMatrixError):
            es.fit_ridge(ScaledKernel(laplace(), 1.0), np.zeros((2, 2)) * 0, np.array([1.0, -1.0]), 0.0,
                         K=np.zeros((2, 2)))

    @given(loglam=st.floats(-6, 3))
    def test_shrinkage(self, loglam):
        X, y = instance(6)
        est = es.fit_ridge(ScaledKernel(gaussian(), 8.0), X, y, 10.0**loglam)
        assert np.linalg.norm(es.predict_in_sample(est)) <= np.linalg.norm(y) * (1 + 1e-12)

    @pytest.mark.parametrize("spec", [gaussian(), laplace(), exp_inner(), ntk(2)], ids=lambda s: s.label)
    def test_interpolation_invariant(self, spec):
        X, y = instance(7, n=60, d=20)
        est = es.fit_ridge(ScaledKernel(spec, 20.0), X, y, 0.0)
        assert est.jitter_used == 0.0
        assert np.abs(es.predict_in_sample(est) - y).max() <= 1e-6 * np.abs(y).max()


class TestRKHSNorm:
    def test_n1(self):
        k = ScaledKernel(exp_inner(), 1.0)
        x = np.array([[0.5, 0.5]])
        est = es.fit_ridge(k, x, np.array([3.0]), 0.0)
        assert es.rkhs_norm(est) == pytest.approx(9.0 / math.exp(0.5), rel=1e-14)

    def test_zero_targets(self):
        X, _ = instance(8)
        assert es.rkhs_norm(es.fit_ridge(ScaledKernel(laplace(), 8.0), X, np.zeros(40), 0.0)) == 0.0

    def test_formula(self):
        X, y = instance(9)
        k = ScaledKernel(laplace(), 8.0)
        lam = 0.3
        K = gram(k, X)
        A = np.linalg.inv(K + lam * np.eye(40))
        assert es.rkhs_norm(es.fit_ridge(k, X, y, lam)) == pytest.approx(y @ A @ K @ A @ y, rel=1e-10)

    def test_quadratic_scaling(self):
        X, y = instance(10)
        k = ScaledKernel(laplace(), 8.0)
        a = es.rkhs_norm(es.fit_ridge(k, X, y, 0.0))
        b = es.rkhs_norm(es.fit_ridge(k, X, 3.0 * y, 0.0))
        assert b == pytest.approx(9.0 * a, rel=1e-10)

    def test_nonincreasing_in_lambda(self):
        X, y = instance(11)
        k = ScaledKernel(gaussian(), 8.0)
        norms = [es.rkhs_norm(es.fit_ridge(k, X, y, lam)) for lam in np.logspace(-4, 2, 13)]
        assert all(b <= a * (1 + 1e-10) for a, b in zip(norms, norms[1:]))


class TestFlatLimit:
    def test_n1_constant(self):
        sp = es.fit_flat_limit(1.0, np.array([[1.0, 2.0]]), np.array([4.5]))
        assert sp.weights[0] == 0.0
        np.testing.assert_allclose(sp.predict(np.array([[0.0, 0.0], [9.0, -3.0]])), 4.5)

    def test_constant_targets(self):
        X, _ = instance(12, n=20)
        sp = es.fit_flat_limit(1.0, X, np.full(20, -2.0))
        assert np.abs(sp.weights).max() <= 1e-10
        np.testing.assert_allclose(sp.predict(make_rng(1).standard_normal((5, 8))), -2.0, atol=1e-9)

    def test_interpolation_and_side_condition(self):
        X, y = instance(13, n=30)
        sp = es.fit_flat_limit(1.3, X, y)
        assert abs(sp.weights.sum()) <= 1e-9 * np.abs(sp.weights).sum()
        assert np.abs(sp.predict(X) - y).max() <= 1e-6 * np.abs(y).max()

    def test_matches_large_tau_laplace(self):
        X, y = instance(14, n=30, d=5)
        Xt = make_rng(140).standard_normal((20, 5))
        sp = es.fit_flat_limit(1.0, X, y)
        lap = es.fit_ridge(ScaledKernel(laplace(), 1e8), X, y, 0.0)
        a, b = sp.predict(Xt), es.predict(lap, Xt)
        assert np.abs(a - b).max() <= 1e-3 * np.abs(b).max()

    @given(s=st.floats(1e-3, 1e3))
    def test_scale_invariance(self, s):
        X, y = instance(15, n=25, d=4)
        Xt = make_rng(150).standard_normal((6, 4))
        a = es.fit_flat_limit(1.0, X, y).predict(Xt)
        b = es.fit_flat_limit(1.0, s * X, y).predict(s * Xt)
        assert np.abs(a - b).max() <= 1e-8 * np.abs(a).max()

    def test_duplicate_rows(self):
        X = np.array([[0.0, 1.0], [2.0, 2.0], [0.0, 1.0]])
        with pytest.raises(SingularMatrixError):
            es.fit_flat_limit(1.0, X, np.ones(3))

    @pytest.mark.parametrize("alpha", [0.0, 2.0, -1.0, 2.5])
    def test_alpha_range(self, alpha):
        with pytest.raises(ValueError):
            es.fit_flat_limit(alpha, np.eye(3), np.ones(3))


class TestBandwidthLimits:
    @pytest.fixture
    def p1(self):
        spec = standard_model("P1", 200, 0.5)
        X = sample(spec, 200, seed=5)
        return spec, X, X[:, 0] ** 2

    def test_small_tau(self, p1):
        spec, X, y = p1
        rep = es.bandwidth_limits_check(ScaledKernel(laplace(), spec.d_eff), X, y,
                                        spec.d_eff * 1e-6, spec.d_eff * 1e12)
        assert rep.max_offdiag_small <= 1e-10
        assert rep.collapses_to_zero
        assert rep.rank_one_gap <= 1e-3 and rep.rank_one
        assert rep.large_prediction_spread < 0.1

    def test_standard_tau(self, p1):
        spec, X, y = p1
        rep = es.bandwidth_limits_check(ScaledKernel(laplace(), spec.d_eff), X, y, spec.d_eff, spec.d_eff)
        assert not rep.collapses_to_zero and not rep.rank_one

    def test_requires_distance_kernel(self, p1):
        spec, X, y = p1
        with pytest.raises(ValueError):
            es.bandwidth_limits_check(ScaledKernel(exp_inner(), 1.0), X, y, 1.0, 2.0)
