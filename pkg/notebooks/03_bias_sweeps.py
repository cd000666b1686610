"""
Bias against the growth rate of the dimension
=============================================

A reduced version of the beta sweep and the slice: the bias of the
ridgeless Laplace estimator on a cubic target, and the shape of the fit
along one coordinate as ``d`` grows.
"""

# %%
from kernellab.lab import beta_sweep, parse_config, slice_trace
from kernellab.lab.experiments import fit_r2

cfg = parse_config({
    "kind": "beta_sweep", "n": 500, "n_test": 2000,
    "kernel": {"family": "alpha_exp", "alpha": 1.0},
    "distributions": [{"model": "P1"}, {"model": "P3"}],
    "ground_truth": {"kind": "monomial", "coeff": 2.0, "power": 3},
    "grid": {"beta": [0.2, 0.4, 0.6, 0.8, 1.0]},
})
for r in beta_sweep(cfg):
    print(f"{r.point['series']:12s} beta={r.point['beta']:.1f} d={r.point['d']:4d}  bias/B(0) {r.bias_norm:.3f} +/- {r.se / r.b0:.3f}")

# %% [markdown]
# Slice through ``(a, 1/2, ..., 1/2)`` for the target ``sin(2 pi x_1)``: the
# fit tracks the sine in low dimension and is nearly linear in high dimension.

# %%
cfg = parse_config({
    "kind": "slice", "n": 100, "distribution": {"model": "cube"},
    "ground_truth": {"kind": "sine"}, "grid": {"dims": [2, 10, 100, 1000], "offsets": 51},
})
rows = slice_trace(cfg)
for d in (2, 10, 100, 1000):
    a = [r["alpha"] for r in rows if r["d"] == d]
    v = [r["fhat"] for r in rows if r["d"] == d]
    print(f"d={d:5d}  R^2 sine {fit_r2(a, v, 'sine'):.3f}  R^2 linear {fit_r2(a, v, 'linear'):.3f}")
