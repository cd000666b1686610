"""
Scaled kernels and the three estimators
=======================================

Every kernel here is a function of ``|x|^2/tau``, ``|x'|^2/tau`` and
``x.x'/tau``. We fit ridge, ridgeless and flat-limit estimators on one
small problem and compare them.
"""

# %%
import numpy as np

from kernellab import (ScaledKernel, exp_inner, fit_flat_limit, fit_ridge, gaussian, gram, laplace, ntk,
                       predict, rkhs_norm)
from kernellab.estimators import predict_in_sample
from kernellab.data import make_rng

rng = make_rng(0)
n, d = 40, 6
X = rng.standard_normal((n, d))
y = np.sin(X[:, 0]) + 0.5 * X[:, 1] ** 2
X_test = rng.standard_normal((200, d))
f_test = np.sin(X_test[:, 0]) + 0.5 * X_test[:, 1] ** 2

# %% [markdown]
# Gram matrices of all families at ``tau = d``. The spectrum shows how
# strongly each family is dominated by its leading (near rank-one) part.

# %%
for spec in (gaussian(), laplace(), exp_inner(), ntk(2)):
    K = gram(ScaledKernel(spec, float(d)), X)
    w = np.linalg.eigvalsh(K)
    print(f"{spec.label:10s} lambda_min {w[0]:.3e}  lambda_max {w[-1]:.2f}  trace/n {np.trace(K) / n:.2f}")

# %% [markdown]
# Ridge versus ridgeless. With ``lam = 0`` the fit interpolates; the
# RKHS norm of the fit shrinks as ``lam`` grows.

# %%
k = ScaledKernel(laplace(), float(d))
for lam in (0.0, 1e-3, 1e-1, 1.0):
    est = fit_ridge(k, X, y, lam)
    train_err = np.abs(predict_in_sample(est) - y).max()
    test_mse = np.mean((predict(est, X_test) - f_test) ** 2)
    print(f"lam={lam:<6g} train max err {train_err:.1e}  test mse {test_mse:.4f}  norm {rkhs_norm(est):.3f}")

# %% [markdown]
# The flat limit: as ``tau`` grows the Laplace interpolant approaches the
# polyharmonic spline with exponent 1.

# %%
spline = fit_flat_limit(1.0, X, y)
p_spline = spline.predict(X_test)
for tau in (1e1, 1e3, 1e5, 1e8):
    p = predict(fit_ridge(ScaledKernel(laplace(), tau), X, y, 0.0), X_test)
    print(f"tau={tau:.0e}  max |laplace - spline| / max|spline| = {np.abs(p - p_spline).max() / np.abs(p_spline).max():.2e}")
