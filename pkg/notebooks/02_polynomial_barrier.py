"""
The polynomial barrier
======================

When ``d_eff ~ n^beta`` the kernel matrix is close to a low-degree
polynomial in the inner products. We measure how close, and check the
floor on its smallest eigenvalue.
"""

# %%
import math

import numpy as np

from kernellab import ScaledKernel, exp_inner, fit_ridge, gram, predict, sample, standard_model
from kernellab.barrier import (barrier_degree, build_surrogate, min_eig_bound, surrogate_predict,
                               taylor_gram_gap)
from kernellab.data import monomial
from kernellab.numerics import min_eigenvalue

# %%
for beta in (0.25, 0.5, 0.9, 1.0, 1.5):
    print(f"beta={beta:<5} degree (covariance) {barrier_degree(beta):2d}  (sphere) {barrier_degree(beta, 'sphere'):2d}")

# %% [markdown]
# Distance between the exponential inner-product Gram matrix and its Taylor
# surrogate, for identity covariance with ``d = floor(sqrt n)``.

# %%
spec, beta = exp_inner(), 0.5
f = monomial(2.0, 0, 3)
for n in (250, 500, 1000, 2000):
    dist = standard_model("P1", n, beta)
    X = sample(dist, n, seed=(1, n))
    Z = X / math.sqrt(dist.d_eff)
    gaps = [taylor_gram_gap(spec, Z, m) for m in (2, 4, 8)]
    print(f"n={n:5d} d={dist.d:3d}  |K-M|_op for m=2,4,8: " + "  ".join(f"{g:.4f}" for g in gaps))

# %% [markdown]
# The estimator and its surrogate polynomial agree on fresh points, and the
# smallest eigenvalue stays above the analytic floor.

# %%
n = 1000
dist = standard_model("P1", n, beta)
X, Xt = sample(dist, n, seed=(2, 0)), sample(dist, 100, seed=(2, 1))
Z, Zt = X / math.sqrt(dist.d_eff), Xt / math.sqrt(dist.d_eff)
K = gram(ScaledKernel(spec, 1.0), Z)
est = fit_ridge(ScaledKernel(spec, 1.0), Z, f(X), 0.0, K=K)
model = build_surrogate(spec, Z, 4)
gap = np.abs(predict(est, Zt) - surrogate_predict(model, f(X), 0.0, Zt, K=K)).max()
print(f"max |f_hat - p_hat| on 100 test points: {gap:.4f} (|f*|_inf on train {np.abs(f(X)).max():.1f})")
print(f"lambda_min(K) {min_eigenvalue(K):.4f}  floor {min_eig_bound(spec, 4, model.c):.4f}")
