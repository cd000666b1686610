"""Kernel ridge regression, the minimum-norm interpolant and the flat-limit spline."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.spatial.distance import cdist, pdist, squareform

from .kernels import ScaledKernel, cross_gram, gram
from .numerics import SingularMatrixError, op_norm_symmetric, solve_spd, solve_symmetric_indefinite

# test rows per block when forming cross-kernel matrices
PREDICT_CHUNK = 4096


@dataclass(frozen=True)
class FittedEstimator:
    """``dual = (K + lam I)^{-1} y``; ``jitter_used`` is any extra diagonal shift."""

    kernel: ScaledKernel
    X_train: np.ndarray
    dual: np.ndarray
    lam: float
    jitter_used: float
    K: np.ndarray = field(repr=False, compare=False, default=None)

    @property
    def effective_lambda(self) -> float:
        return self.lam + self.jitter_used


def _check_xy(X, y):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] < 1:
        raise ValueError(f"X must be a non-empty 2-d array, got shape {X.shape}")
    if y.shape[0] != X.shape[0]:
        raise ValueError(f"y has {y.shape[0]} rows but X has {X.shape[0]}")
    if y.ndim not in (1, 2):
        raise ValueError("y must be a vector or a matrix of target columns")
    return X, y


def fit_ridge(kernel: ScaledKernel, X, y, lam: float = 0.0, K=None) -> FittedEstimator:
    """Kernel ridge regression; ``lam = 0`` gives the minimum-norm interpolant.

    ``y`` may hold several target columns, which share one factorization.
    A precomputed Gram matrix can be passed as ``K``.
    """
    X, y = _check_xy(X, y)
    if not (np.isfinite(lam) and lam >= 0):
        raise ValueError(f"lambda must be a nonnegative finite number, got {lam}")
    if K is None:
        K = gram(kernel, X)
    A = K + lam * np.eye(K.shape[0]) if lam > 0 else K
    dual, jitter = solve_spd(A, y)
    return FittedEstimator(kernel, X, dual, float(lam), float(jitter), K)


def predict(est: FittedEstimator, X_test) -> np.ndarray:
    """``k(x*, X_train) @ dual`` for every test row."""
    X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
    if X_test.shape[1] != est.X_train.shape[1]:
        raise ValueError(f"dimension mismatch: test has {X_test.shape[1]} columns, training {est.X_train.shape[1]}")
    out = np.empty((X_test.shape[0],) + est.dual.shape[1:])
    for start in range(0, X_test.shape[0], PREDICT_CHUNK):
        block = X_test[start:start + PREDICT_CHUNK]
        out[start:start + PREDICT_CHUNK] = cross_gram(est.kernel, block, est.X_train) @ est.dual
    return out


def predict_in_sample(est: FittedEstimator) -> np.ndarray:
    K = est.K if est.K is not None else gram(est.kernel, est.X_train)
    return K @ est.dual


def rkhs_norm(est: FittedEstimator) -> float:
    """Squared RKHS norm ``dual' K dual`` (summed over target columns)."""
    K = est.K if est.K is not None else gram(est.kernel, est.X_train)
    return float(np.sum(est.dual * (K @ est.dual)))


# ---------------------------------------------------------------------------
# flat-limit spline


@dataclass(frozen=True)
class SplineEstimator:
    """``f(x) = -sum_i w_i |x_i - x|^alpha + constant`` with ``sum_i w_i = 0``."""

    X_train: np.ndarray
    alpha: float
    weights: np.ndarray
    constant: float | np.ndarray

    def predict(self, X_test) -> np.ndarray:
        X_test = np.atleast_2d(np.asarray(X_test, dtype=float))
        if X_test.shape[1] != self.X_train.shape[1]:
            raise ValueError("dimension mismatch")
        D = cdist(X_test, self.X_train) ** self.alpha
        return -(D @ self.weights) + self.constant


def fit_flat_limit(alpha: float, X, y) -> SplineEstimator:
    """Solve ``[-D^alpha, 1; 1', 0] [w; c] = [y; 0]`` with ``D_ij = |x_i - x_j|``."""
    if not (0.0 < alpha < 2.0):
        raise ValueError(f"alpha must lie in (0, 2), got {alpha}")
    X, y = _check_xy(X, y)
    n = X.shape[0]
    dists = pdist(X)
    if n > 1 and dists.min() == 0.0:
        raise SingularMatrixError("duplicate training rows make the distance matrix singular")
    A = np.zeros((n + 1, n + 1))
    A[:n, :n] = -squareform(dists**alpha)
    A[:n, n] = 1.0
    A[n, :n] = 1.0
    rhs = np.zeros((n + 1,) + y.shape[1:])
    rhs[:n] = y
    sol = solve_symmetric_indefinite(A, rhs)
    const = sol[n] if y.ndim == 2 else float(sol[n])
    return SplineEstimator(X, float(alpha), sol[:n], const)


# ---------------------------------------------------------------------------
# degenerate bandwidth regimes


@dataclass(frozen=True)
class BandwidthReport:
    tau_small: float
    tau_large: float
    max_offdiag_small: float       # largest off-diagonal Gram entry at tau_small
    far_prediction_ratio: float    # max |f(x_far)| / |y|_inf at tau_small
    rank_one_gap: float            # |K - 11'|_op at tau_large
    large_prediction_spread: float # (max - min) of in-sample ridge fit at tau_large, over |y|_inf
    delta_small: float
    delta_large: float
    collapses_to_zero: bool
    rank_one: bool


def bandwidth_limits_check(
    kernel: ScaledKernel,
    X,
    y,
    tau_small: float,
    tau_large: float,
    lam: float = 1.0,
    delta_small: float = 1e-10,
    delta_large: float = 1e-3,
    X_far=None,
) -> BandwidthReport:
    """Detect the two degenerate regimes of a distance kernel.

    At ``tau_small`` the Gram matrix tends to the identity and predictions away
    from the data vanish. At ``tau_large`` it tends to the all-ones matrix.
    Far test points default to midpoints of consecutive training rows.
    """
    if kernel.spec.family not in ("alpha_exp", "gaussian"):
        raise ValueError("bandwidth limits are defined for exponential distance kernels")
    X, y = _check_xy(X, y)
    n = X.shape[0]
    if X_far is None:
        X_far = 0.5 * (X + np.roll(X, 1, axis=0)) if n > 1 else X + 1.0

    small = kernel.with_tau(tau_small)
    K_small = gram(small, X)
    off = K_small - np.diag(np.diag(K_small))
    max_off = float(np.abs(off).max()) if n > 1 else 0.0
    est = fit_ridge(small, X, y, 0.0, K=K_small)
    scale = max(float(np.abs(y).max()), np.finfo(float).tiny)
    far_ratio = float(np.abs(predict(est, X_far)).max()) / scale

    large = kernel.with_tau(tau_large)
    K_large = gram(large, X)
    gap = op_norm_symmetric(K_large - 1.0)
    fitted = predict_in_sample(fit_ridge(large, X, y, lam, K=K_large))
    spread = float(fitted.max() - fitted.min()) / scale

    collapses = max_off <= delta_small and far_ratio <= delta_small
    return BandwidthReport(
        float(tau_small), float(tau_large), max_off, far_ratio, gap, spread,
        delta_small, delta_large, collapses, gap <= delta_large,
    )
