import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given
from hypothesis import strategies as st

from kernellab import barrier as br
from kernellab.data import GroundTruth, make_rng, monomial
from kernellab.estimators import fit_ridge, predict
from kernellab.kernels import ScaledKernel, exp_inner, gaussian, gram, laplace, ntk


class TestBarrierDegree:
    @pytest.mark.parametrize("beta,domain,m", [(0.5, "covariance", 8), (0.9, "sphere", 2), (1.0, "covariance", 4),
                                               (2.0, "sphere", 1), (0.1, "covariance", 40)])
    def test_examples(self, beta, domain, m):
        assert br.barrier_degree(beta, domain) == m
        assert br.barrier(beta, domain).m == m

    @pytest.mark.parametrize("beta", [0.0, -0.5])
    def test_nonpositive_beta(self, beta):
        with pytest.raises(ValueError):
            br.barrier_degree(beta)

    def test_unknown_domain(self):
        with pytest.raises(ValueError):
            br.barrier_degree(0.5, "torus")

    @given(b1=st.floats(0.01, 2.0), b2=st.floats(0.01, 2.0))
    def test_nonincreasing(self, b1, b2):
        lo, hi = min(b1, b2), max(b1, b2)
        for dom in br.DOMAINS:
            assert br.barrier_degree(hi, dom) <= br.barrier_degree(lo, dom)


def symbolic_taylor_gram(expr, u, v, t, Z, m, c):
    """Entrywise expansion of g(u, v, t) taken straight from the symbolic expression."""
    n = Z.shape[0]
    sq = [float(z @ z) for z in Z]
    M = np.zeros((n, n))
    for q in range(m + 1):
        gq = sp.diff(expr, t, q).subs(t, 0) / sp.factorial(q)
        for l1 in range(m - q + 1):
            for l2 in range(m - q - l1 + 1):
                coef = float(sp.diff(gq, u, l1, v, l2).subs({u: c, v: c})) / (math.factorial(l1) * math.factorial(l2))
                for i in range(n):
                    for j in range(n):
                        M[i, j] += coef * float(Z[i] @ Z[j]) ** q * (sq[i] - c) ** l1 * (sq[j] - c) ** l2
    diag = float(expr.subs({u: c, v: c, t: c})) - sum(
        c**q * float((sp.diff(expr, t, q).subs(t, 0) / sp.factorial(q)).subs({u: c, v: c})) for q in range(m + 1))
    return M + diag * np.eye(n)


class TestTaylorGram:
    def test_n1_exp_inner_reproduces_k(self):
        z = np.array([[0.6, 0.8]])
        M = br.taylor_gram(exp_inner(), z, 3, c=1.0)
        assert M.shape == (1, 1)
        assert M[0, 0] == pytest.approx(math.e, rel=1e-14)

    @pytest.mark.parametrize("name", ["gaussian", "exp_inner"])
    def test_symbolic_three_points(self, name):
        u, v, t = sp.symbols("u v t")
        expr = sp.exp(-u - v + 2 * t) if name == "gaussian" else sp.exp(t)
        spec = gaussian() if name == "gaussian" else exp_inner()
        Z = make_rng(3).standard_normal((3, 4)) / 2.0
        c = float(np.mean(np.sum(Z**2, axis=1)))
        ref = symbolic_taylor_gram(expr, u, v, t, Z, 4, c)
        np.testing.assert_allclose(br.taylor_gram(spec, Z, 4), ref, rtol=0, atol=1e-10)

    @pytest.mark.parametrize("spec", [gaussian(), exp_inner()], ids=lambda s: s.label)
    def test_exact_symmetry(self, spec):
        Z = make_rng(4).standard_normal((25, 30)) / math.sqrt(30)
        M = br.taylor_gram(spec, Z, 6)
        assert np.array_equal(M, M.T)

    @pytest.mark.parametrize("spec", [gaussian(), exp_inner()], ids=lambda s: s.label)
    def test_gap_shrinks_with_order(self, spec):
        Z = make_rng(5).standard_normal((40, 200)) / math.sqrt(200)
        gaps = [br.taylor_gram_gap(spec, Z, m) for m in (1, 3, 6)]
        assert gaps[0] > gaps[1] > gaps[2]

    @pytest.mark.parametrize("spec", [laplace(), ntk(1)], ids=lambda s: s.label)
    def test_unsupported(self, spec):
        with pytest.raises(ValueError):
            br.taylor_gram(spec, np.eye(2), 2)

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            br.taylor_gram(exp_inner(), np.eye(2), -1)


class TestMinEigBound:
    def test_example(self):
        assert br.min_eig_bound(exp_inner(), 2, 1.0) == pytest.approx(math.e - 2.5, rel=1e-13)

    def test_limit(self):
        b = br.min_eig_bound(exp_inner(), 25, 1.0)
        assert 0 <= b <= 1e-20

    def test_nonincreasing(self):
        vals = [br.min_eig_bound(exp_inner(), m, 0.9) for m in range(12)]
        assert all(b <= a for a, b in zip(vals, vals[1:]))

    def test_rejects(self):
        with pytest.raises(ValueError):
            br.min_eig_bound(exp_inner(), 2, 0.0)
        with pytest.raises(ValueError):
            br.min_eig_bound(laplace(), 2, 1.0)


class TestSurrogate:
    @pytest.fixture
    def setup(self):
        r = make_rng(6)
        Z = r.standard_normal((30, 50)) / math.sqrt(50)
        return Z, r.standard_normal(30), r.standard_normal((5, 50)) / math.sqrt(50)

    def test_zero_targets(self, setup):
        Z, _, Zt = setup
        model = br.build_surrogate(exp_inner(), Z, 4)
        np.testing.assert_array_equal(br.surrogate_predict(model, np.zeros(30), 0.1, Zt), 0.0)

    def test_linear(self, setup):
        Z, f, Zt = setup
        model = br.build_surrogate(gaussian(), Z, 4)
        g = np.cos(np.arange(30.0))
        a = br.surrogate_predict(model, f + 2 * g, 0.1, Zt)
        b = br.surrogate_predict(model, f, 0.1, Zt) + 2 * br.surrogate_predict(model, g, 0.1, Zt)
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)

    @pytest.mark.parametrize("spec", [gaussian(), exp_inner()], ids=lambda s: s.label)
    def test_matches_estimator_at_training_points(self, spec, setup):
        Z, f, _ = setup
        model = br.build_surrogate(spec, Z, 20)
        est = fit_ridge(ScaledKernel(spec, 1.0), Z, f, 0.1)
        np.testing.assert_allclose(br.surrogate_predict(model, f, 0.1, Z[:5]), predict(est, Z[:5]), atol=1e-3)

    def test_polynomial_degree_in_test_point(self, setup):
        # p(s z) is a polynomial of degree <= m in s: finite differences of order m+1 vanish
        Z, f, Zt = setup
        m = 3
        model = br.build_surrogate(exp_inner(), Z, m)
        dual = make_rng(7).standard_normal(30)
        s = np.arange(m + 2, dtype=float)
        vals = np.array([br.surrogate_predict_dual(model, dual, si * Zt[:1])[0] for si in s])
        assert abs(np.diff(vals, m + 1)[0]) <= 1e-8 * np.abs(vals).max()

    def test_dimension_mismatch(self, setup):
        Z, f, _ = setup
        with pytest.raises(ValueError):
            br.surrogate_predict(br.build_surrogate(exp_inner(), Z, 2), f, 0.1, np.ones((2, 3)))
        with pytest.raises(ValueError):
            br.surrogate_predict(br.build_surrogate(exp_inner(), Z, 2), f[:-1], 0.1, Z)


class TestBestPolyError:
    def test_exact_degree_one(self):
        X = make_rng(8).standard_normal((1000, 3))
        f = monomial(1.0, 0, 1)
        assert br.best_poly_error(f, X, 1) <= 1e-6 * np.mean(f(X) ** 2)

    def test_cubic_at_degree_two(self):
        X = make_rng(9).standard_normal((1_000_000, 1))
        assert br.best_poly_error(monomial(2.0, 0, 3), X, 2) == pytest.approx(24.0, abs=2.0)

    def test_odd_degree_zero(self):
        X = make_rng(10).standard_normal((200_000, 2))
        f = monomial(2.0, 1, 3)
        assert br.best_poly_error(f, X, 0) == pytest.approx(60.0, rel=0.05)

    def test_nonincreasing_in_degree(self):
        X = make_rng(11).uniform(size=(5000, 2))
        f = GroundTruth("sine")
        errs = [br.best_poly_error(f, X, k) for k in range(6)]
        assert all(b <= a * (1 + 1e-12) + 1e-15 for a, b in zip(errs, errs[1:]))
        assert max(errs) == errs[0]

    def test_basis_cap(self):
        f = GroundTruth("sparse_quad_lin")
        with pytest.raises(ValueError):
            br.best_poly_error(f, np.zeros((10, 9)), 10)

    def test_rank_deficient_design_reported(self, caplog):
        X = np.ones((50, 1))
        val = br.best_poly_error(monomial(1.0, 0, 2), X, 3)
        assert "rank-deficient" in caplog.text
        assert val == pytest.approx(0.0, abs=1e-6)

    def test_negative_degree(self):
        with pytest.raises(ValueError):
            br.best_poly_error(monomial(1.0, 0, 1), np.zeros((3, 1)), -1)
