"""Rotationally invariant kernel families.

Every family is written as a function ``g(u, v, t)`` of the scaled squared
norms ``u = |x|^2 / tau``, ``v = |x'|^2 / tau`` and the scaled inner product
``t = x.x' / tau``. Evaluation always divides the inputs by ``sqrt(tau)``
first and then applies the family formula.

Families
--------
- ``gaussian``   exp(-|x - x'|^2)          = exp(-u - v + 2t)
- ``alpha_exp``  exp(-|x - x'|^alpha)      (alpha in (0, 2]; alpha=1 is Laplace)
- ``exp_inner``  exp(x.x')                 = exp(t)
- ``ntk``        fully connected ReLU NTK of the given depth
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

FAMILIES = ("gaussian", "alpha_exp", "exp_inner", "ntk")

# below this many multiply-adds the distance families use direct differences
_DIRECT_DISTANCE_WORK = 2_000_000

# ReLU normalisation constants and duals
C_SIGMA = 2.0
C_SIGMA_DOT = 2.0


@dataclass(frozen=True)
class KernelSpec:
    """A kernel family with its shape parameters (no scale)."""

    family: str
    alpha: float | None = None
    depth: int | None = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown kernel family {self.family!r}; expected one of {FAMILIES}")
        if self.family == "alpha_exp":
            if self.alpha is None or not (0.0 < self.alpha <= 2.0):
                raise ValueError(f"alpha must lie in (0, 2], got {self.alpha}")
        if self.family == "ntk":
            if self.depth is None or int(self.depth) != self.depth or self.depth < 1:
                raise ValueError(f"NTK depth must be a positive integer, got {self.depth}")

    @property
    def is_gaussian(self) -> bool:
        return self.family == "gaussian" or (self.family == "alpha_exp" and self.alpha == 2.0)

    @property
    def label(self) -> str:
        if self.family == "alpha_exp":
            return "laplace" if self.alpha == 1.0 else f"alpha_exp({self.alpha:g})"
        if self.family == "ntk":
            return f"ntk(L={self.depth})"
        return self.family


def gaussian() -> KernelSpec:
    return KernelSpec("gaussian")


def laplace() -> KernelSpec:
    return KernelSpec("alpha_exp", alpha=1.0)


def alpha_exponential(alpha: float) -> KernelSpec:
    return KernelSpec("alpha_exp", alpha=float(alpha))


def exp_inner() -> KernelSpec:
    return KernelSpec("exp_inner")


def ntk(depth: int) -> KernelSpec:
    return KernelSpec("ntk", depth=int(depth))


@dataclass(frozen=True)
class ScaledKernel:
    """A kernel family together with its normalisation constant ``tau``."""

    spec: KernelSpec
    tau: float = 1.0

    def __post_init__(self):
        if not (np.isfinite(self.tau) and self.tau > 0):
            raise ValueError(f"tau must be a positive finite number, got {self.tau}")

    def with_tau(self, tau: float) -> "ScaledKernel":
        return ScaledKernel(self.spec, float(tau))

    def to_config(self) -> dict[str, Any]:
        out: dict[str, Any] = {"family": self.spec.family, "tau": float(self.tau)}
        if self.spec.alpha is not None:
            out["alpha"] = float(self.spec.alpha)
        if self.spec.depth is not None:
            out["depth"] = int(self.spec.depth)
        return out

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "ScaledKernel":
        spec = KernelSpec(cfg["family"], alpha=cfg.get("alpha"), depth=cfg.get("depth"))
        return cls(spec, float(cfg.get("tau", 1.0)))


def _as_points(x, name="x") -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise ValueError(f"{name} contains non-finite entries")
    return x


# ---------------------------------------------------------------------------
# ReLU NTK


def relu_dual(rho):
    """Dual of the ReLU activation, ``(sqrt(1 - rho^2) + rho*arcsin(rho)) / pi``."""
    rho = np.clip(rho, -1.0, 1.0)
    return (np.sqrt(1.0 - rho * rho) + rho * np.arcsin(rho)) / np.pi


def relu_derivative_dual(rho):
    """Dual of the ReLU derivative (step function), ``1/2 + arcsin(rho)/pi``."""
    rho = np.clip(rho, -1.0, 1.0)
    return 0.5 + np.arcsin(rho) / np.pi


def ntk_from_inner(sxx, syy, sxy, depth: int):
    """Run the NTK recursion on (broadcastable) arrays of the base quantities.

    ``sxx``, ``syy`` are squared norms and ``sxy`` the inner product. With
    ``Sigma^(0) = x.x'``::

        rho_i        = Sigma^(i-1)(x,x') / sqrt(Sigma^(i-1)(x,x) Sigma^(i-1)(x',x'))
        Sigma^(i)    = c_sigma     * sqrt(Sigma^(i-1)(x,x) Sigma^(i-1)(x',x')) * t(rho_i)
        dSigma^(i)   = c_sigma_dot * t_dot(rho_i)
        dSigma^(L+1) = 1
        k = sum_{i=1}^{L+1} Sigma^(i-1) prod_{j=i}^{L+1} dSigma^(j)
    """
    sxx = np.asarray(sxx, dtype=float)
    syy = np.asarray(syy, dtype=float)
    sxy = np.asarray(sxy, dtype=float)
    if np.any(sxx <= 0) or np.any(syy <= 0):
        raise ValueError("NTK is undefined for zero-norm inputs")
    sigmas = [sxy]
    dots = []
    cur_xx, cur_yy, cur_xy = sxx, syy, sxy
    for _ in range(depth):
        scale = np.sqrt(cur_xx * cur_yy)
        rho = np.clip(cur_xy / scale, -1.0, 1.0)
        dots.append(C_SIGMA_DOT * relu_derivative_dual(rho))
        cur_xy = C_SIGMA * scale * relu_dual(rho)
        # diagonal: rho = 1, t(1) = 1/2
        cur_xx = C_SIGMA * cur_xx * relu_dual(1.0)
        cur_yy = C_SIGMA * cur_yy * relu_dual(1.0)
        sigmas.append(cur_xy)
    dots.append(np.ones_like(sxy))  # dSigma^(L+1)

    # suffix products prod_{j=i}^{L+1} dSigma^(j); dots[i-1] holds dSigma^(i)
    total = np.zeros(np.broadcast(sxx, syy, sxy).shape)
    suffix = np.ones_like(total)
    for i in range(depth + 1, 0, -1):
        suffix = suffix * dots[i - 1]
        total = total + sigmas[i - 1] * suffix
    return total


def ntk_eval(depth: int, x, x_prime) -> float:
    """Unscaled ReLU NTK between two nonzero vectors."""
    x = _as_points(x)
    x_prime = _as_points(x_prime, "x'")
    if x.shape != x_prime.shape:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_prime.shape}")
    if depth < 1:
        raise ValueError("depth must be >= 1")
    return float(ntk_from_inner(x @ x, x_prime @ x_prime, x @ x_prime, depth))


# ---------------------------------------------------------------------------
# family formulas


def kernel_g(spec: KernelSpec, u, v, t):
    """Evaluate the family formula from scaled norms ``u, v`` and inner product ``t``."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    t = np.asarray(t, dtype=float)
    if spec.family == "exp_inner":
        return np.exp(t)
    if spec.family == "ntk":
        return ntk_from_inner(u, v, t, spec.depth)
    sq = np.maximum(u + v - 2.0 * t, 0.0)
    return _radial(spec, sq)


def _radial(spec: KernelSpec, sqdist):
    if spec.is_gaussian:
        return np.exp(-sqdist)
    return np.exp(-np.power(sqdist, spec.alpha / 2.0))


def eval_kernel(kernel: ScaledKernel, x, x_prime) -> float:
    """Evaluate ``k_tau(x, x')`` for two vectors."""
    x = _as_points(x)
    x_prime = _as_points(x_prime, "x'")
    if x.ndim != 1 or x.shape != x_prime.shape or x.size == 0:
        raise ValueError(f"dimension mismatch: {x.shape} vs {x_prime.shape}")
    s = 1.0 / np.sqrt(kernel.tau)
    z, zp = x * s, x_prime * s
    spec = kernel.spec
    if spec.family in ("gaussian", "alpha_exp"):
        diff = z - zp
        return float(_radial(spec, diff @ diff))
    # symmetric evaluation order so that k(x, x') == k(x', x) bit for bit
    return float(kernel_g(spec, z @ z, zp @ zp, 0.5 * (z @ zp + zp @ z)))


def _sq_dists(Z1, Z2=None):
    if Z2 is None:
        n, d = Z1.shape
        if n * n * d <= _DIRECT_DISTANCE_WORK:
            return squareform(pdist(Z1, "sqeuclidean"))
        sq = np.einsum("ij,ij->i", Z1, Z1)
        D = sq[:, None] + sq[None, :] - 2.0 * (Z1 @ Z1.T)
        np.maximum(D, 0.0, out=D)
        np.fill_diagonal(D, 0.0)
        return D
    n, d = Z1.shape
    if n * Z2.shape[0] * d <= _DIRECT_DISTANCE_WORK:
        return cdist(Z1, Z2, "sqeuclidean")
    s1 = np.einsum("ij,ij->i", Z1, Z1)
    s2 = np.einsum("ij,ij->i", Z2, Z2)
    D = s1[:, None] + s2[None, :] - 2.0 * (Z1 @ Z2.T)
    return np.maximum(D, 0.0, out=D)


def _check_matrix(X, name="X") -> np.ndarray:
    X = _as_points(X, name)
    if X.ndim != 2 or X.shape[0] < 1 or X.shape[1] < 1:
        raise ValueError(f"{name} must be a non-empty 2-d array, got shape {X.shape}")
    return X


def gram(kernel: ScaledKernel, X) -> np.ndarray:
    """Empirical kernel matrix, exactly symmetric (upper triangle mirrored)."""
    X = _check_matrix(X)
    Z = X / np.sqrt(kernel.tau)
    spec = kernel.spec
    if spec.family in ("gaussian", "alpha_exp"):
        K = _radial(spec, _sq_dists(Z))
    else:
        G = Z @ Z.T
        sq = np.diag(G).copy()
        K = kernel_g(spec, sq[:, None], sq[None, :], G)
    iu = np.triu_indices(K.shape[0], 1)
    K[(iu[1], iu[0])] = K[iu]
    return K


def cross_gram(kernel: ScaledKernel, X_test, X_train) -> np.ndarray:
    """Kernel matrix between test rows and training rows, shape (m, n)."""
    X_test = _check_matrix(X_test, "X_test")
    X_train = _check_matrix(X_train, "X_train")
    if X_test.shape[1] != X_train.shape[1]:
        raise ValueError(f"dimension mismatch: {X_test.shape[1]} vs {X_train.shape[1]}")
    s = 1.0 / np.sqrt(kernel.tau)
    Z1, Z2 = X_test * s, X_train * s
    spec = kernel.spec
    if spec.family in ("gaussian", "alpha_exp"):
        return _radial(spec, _sq_dists(Z1, Z2))
    u = np.einsum("ij,ij->i", Z1, Z1)
    v = np.einsum("ij,ij->i", Z2, Z2)
    return kernel_g(spec, u[:, None], v[None, :], Z1 @ Z2.T)


# ---------------------------------------------------------------------------
# local power expansion k = sum_j g_j(u, v) t^j


def _series_family(spec: KernelSpec) -> str:
    if spec.family == "exp_inner":
        return "exp_inner"
    if spec.is_gaussian:
        return "gaussian"
    raise ValueError(f"no closed-form power series for kernel {spec.label}")


def series_coeff(spec: KernelSpec, j: int, u: float, v: float) -> float:
    """Coefficient ``g_j(u, v)`` of ``(x.x')^j`` in the local power expansion."""
    return series_coeff_derivative(spec, j, 0, 0, u, v)


def series_coeff_derivative(spec: KernelSpec, j: int, l1: int, l2: int, u: float, v: float) -> float:
    """Partial derivative ``d^{l1+l2} g_j / du^{l1} dv^{l2}`` at ``(u, v)``."""
    fam = _series_family(spec)
    if j < 0 or l1 < 0 or l2 < 0:
        raise ValueError("orders must be nonnegative")
    if fam == "exp_inner":
        return 1.0 / math.factorial(j) if l1 == 0 and l2 == 0 else 0.0
    sign = -1.0 if (l1 + l2) % 2 else 1.0
    return sign * (2.0**j / math.factorial(j)) * math.exp(-u - v)


def series_partial_sum(spec: KernelSpec, u: float, v: float, t: float, order: int = 30) -> float:
    """Truncated expansion ``sum_{j <= order} g_j(u, v) t^j``."""
    return float(sum(series_coeff(spec, j, u, v) * t**j for j in range(order + 1)))


def psd_floor(K: np.ndarray) -> float:
    """Tolerance used for 'PSD up to rounding': ``-1e-8 * n * max diag``."""
    return -1e-8 * K.shape[0] * float(np.max(np.diag(K)))


__all__ = [
    "FAMILIES",
    "KernelSpec",
    "ScaledKernel",
    "gaussian",
    "laplace",
    "alpha_exponential",
    "exp_inner",
    "ntk",
    "kernel_g",
    "eval_kernel",
    "gram",
    "cross_gram",
    "ntk_eval",
    "ntk_from_inner",
    "relu_dual",
    "relu_derivative_dual",
    "series_coeff",
    "series_coeff_derivative",
    "series_partial_sum",
    "psd_floor",
]
