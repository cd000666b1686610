"""
RKHS norms, irrelevant features and greedy selection
====================================================

The norm needed to interpolate ``x_1`` grows with ``d``; adding irrelevant
coordinates raises the bias while lowering the variance; greedy forward
selection finds the relevant coordinates.
"""

# %%
from kernellab.lab import bias_variance, greedy_feature_selection, parse_config, rkhs_growth

cfg = parse_config({
    "kind": "rkhs_growth", "n": 500, "distribution": {"model": "cube"},
    "kernels": [{"family": "alpha_exp", "alpha": 1.0}, {"family": "exp_inner"}],
    "ground_truth": {"kind": "monomial", "coeff": 1.0, "power": 1}, "grid": {"dims": [5, 20, 80]},
})
for r in rkhs_growth(cfg):
    print(f"{r['kernel']:10s} d={r['d']:3d}  norm {r['norm']:.3f}")

# %%
cfg = parse_config({
    "kind": "bias_variance", "n": 300, "n_test": 1000, "distribution": {"model": "P1"},
    "ground_truth": {"kind": "sparse_quad_lin"}, "grid": {"dims": [3, 9, 29, 109]},
    "noise": {"kind": "uniform", "scale": 10.0}, "repeats": 20,
})
for r in bias_variance(cfg):
    print(f"d={r['d']:4d}  bias {r['bias']:.3f}  variance {r['variance']:.3f}")

# %% [markdown]
# Coordinates are 0-based: the target uses squares of 2, 4, 6, 8 and linear
# terms in 1, 3, 5, 7.

# %%
cfg = parse_config({
    "kind": "featsel", "n": 300, "distribution": {"model": "P1"},
    "ground_truth": {"kind": "sparse_quad_lin"}, "grid": {"budget": 8, "features": 12},
})
res = greedy_feature_selection(cfg)
for step, (j, risk) in enumerate(zip(res.order, res.risks), 1):
    print(f"step {step}: feature {j:2d}  cv risk {risk:.3e}")
