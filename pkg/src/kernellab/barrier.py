"""Polynomial approximation barrier: degree formula, Taylor Gram surrogate,
eigenvalue floor and the best-polynomial oracle.

Inputs ``Z`` to the surrogate routines are already divided by ``sqrt(tau)``.
The expansion centre ``c`` defaults to the mean squared row norm of ``Z``.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammainc

from .data import GroundTruth
from .kernels import KernelSpec, ScaledKernel, gram, kernel_g, series_coeff, series_coeff_derivative
from .numerics import op_norm_symmetric, solve_spd

logger = logging.getLogger(__name__)

DOMAINS = ("covariance", "sphere")
MAX_BASIS = 2000
RANK_DEFICIENT_RIDGE = 1e-10


@dataclass(frozen=True)
class BarrierDegree:
    beta: float
    domain: str
    m: int


def barrier_degree(beta: float, domain: str = "covariance") -> int:
    """``2 floor(2/beta)`` on covariance data, ``floor(2/beta)`` on the sphere."""
    if not beta > 0:
        raise ValueError(f"beta must be positive, got {beta}")
    domain = domain.lower()
    if domain not in DOMAINS:
        raise ValueError(f"domain must be one of {DOMAINS}, got {domain!r}")
    base = math.floor(2.0 / beta + 1e-12)
    return 2 * base if domain == "covariance" else base


def barrier(beta: float, domain: str = "covariance") -> BarrierDegree:
    return BarrierDegree(float(beta), domain.lower(), barrier_degree(beta, domain))


def _check_family(spec: KernelSpec):
    if not (spec.family == "exp_inner" or spec.is_gaussian):
        raise ValueError(f"Taylor surrogate needs closed-form coefficients; {spec.label} is unsupported")


def coefficient_table(spec: KernelSpec, m: int, c: float) -> np.ndarray:
    """``A[q, l1, l2] = g_q^{(l1,l2)}(c, c) / (l1! l2!)`` for ``q + l1 + l2 <= m``, zero elsewhere."""
    _check_family(spec)
    A = np.zeros((m + 1, m + 1, m + 1))
    for q in range(m + 1):
        for l1 in range(m - q + 1):
            for l2 in range(m - q - l1 + 1):
                A[q, l1, l2] = series_coeff_derivative(spec, q, l1, l2, c, c) / (
                    math.factorial(l1) * math.factorial(l2)
                )
    return A


def _diagonal_shift(spec: KernelSpec, m: int, c: float) -> float:
    """``g(c,c,c) - sum_{q<=m} c^q g_q(c,c)`` as the exponential-series tail, free of cancellation."""
    _check_family(spec)
    if c <= 0:
        return float(kernel_g(spec, c, c, c)) - sum(c**q * series_coeff(spec, q, c, c) for q in range(m + 1))
    # exp_inner: e^c P(Poisson(c) > m); gaussian: P(Poisson(2c) > m)
    if spec.family == "exp_inner":
        return math.exp(c) * float(gammainc(m + 1, c))
    return float(gammainc(m + 1, 2.0 * c))


def _psi_powers(psi: np.ndarray, m: int) -> np.ndarray:
    return psi[:, None] ** np.arange(m + 1)[None, :]


def _center(Z: np.ndarray, c: float | None) -> float:
    return float(np.mean(np.einsum("ij,ij->i", Z, Z))) if c is None else float(c)


def taylor_gram(spec: KernelSpec, Z, m: int, c: float | None = None) -> np.ndarray:
    """Asymptotic surrogate ``M`` of the kernel matrix of the (pre-scaled) rows of ``Z``.

    ``M = (g(c,c,c) - sum_q c^q g_q(c,c)) I + sum_{q<=m} (Z Z')^q o C_q`` with
    ``C_q[i,j] = sum_{l1+l2<=m-q} A[q,l1,l2] psi_i^l1 psi_j^l2`` and
    ``psi_i = |z_i|^2 - c``.
    """
    _check_family(spec)
    Z = np.asarray(Z, dtype=float)
    if m < 0 or int(m) != m:
        raise ValueError("m must be a nonnegative integer")
    m = int(m)
    c = _center(Z, c)
    G = Z @ Z.T
    psi = np.diag(G).copy() - c
    P = _psi_powers(psi, m)
    A = coefficient_table(spec, m, c)
    M = np.zeros_like(G)
    Gq = np.ones_like(G)
    for q in range(m + 1):
        M += Gq * (P @ A[q] @ P.T)
        if q < m:
            Gq *= G
    M[np.diag_indices_from(M)] += _diagonal_shift(spec, m, c)
    iu = np.triu_indices(M.shape[0], 1)
    M[(iu[1], iu[0])] = M[iu]
    return M


def taylor_gram_gap(spec: KernelSpec, Z, m: int, c: float | None = None) -> float:
    """``|K - M|_op`` with ``K`` the unit-scale kernel matrix of ``Z``."""
    K = gram(ScaledKernel(spec, 1.0), Z)
    K -= taylor_gram(spec, Z, m, c)
    return op_norm_symmetric(K)


def min_eig_bound(spec: KernelSpec, m: int, c: float) -> float:
    """Analytic floor ``g(c,c,c) - sum_{i<=m} c^i g_i(c,c)`` on the smallest Gram eigenvalue."""
    _check_family(spec)
    if not c > 0:
        raise ValueError("c must be positive")
    return _diagonal_shift(spec, int(m), float(c))


# ---------------------------------------------------------------------------
# surrogate predictions


@dataclass(frozen=True)
class SurrogateModel:
    spec: KernelSpec
    m: int
    Z: np.ndarray
    c: float
    table: np.ndarray


def build_surrogate(spec: KernelSpec, Z, m: int, c: float | None = None) -> SurrogateModel:
    Z = np.asarray(Z, dtype=float)
    c = _center(Z, c)
    return SurrogateModel(spec, int(m), Z, c, coefficient_table(spec, int(m), c))


def surrogate_features(model: SurrogateModel, Z_test) -> np.ndarray:
    """Taylor surrogate ``M*`` of the test-by-train kernel matrix, shape (n_test, n)."""
    Z_test = np.atleast_2d(np.asarray(Z_test, dtype=float))
    if Z_test.shape[1] != model.Z.shape[1]:
        raise ValueError(f"dimension mismatch: {Z_test.shape[1]} vs {model.Z.shape[1]}")
    m = model.m
    G = Z_test @ model.Z.T
    P_tr = _psi_powers(np.einsum("ij,ij->i", model.Z, model.Z) - model.c, m)
    P_te = _psi_powers(np.einsum("ij,ij->i", Z_test, Z_test) - model.c, m)
    out = np.zeros_like(G)
    Gq = np.ones_like(G)
    for q in range(m + 1):
        # l1 belongs to the training row, l2 to the test row
        out += Gq * (P_te @ model.table[q].T @ P_tr.T)
        if q < m:
            Gq *= G
    return out


def surrogate_predict_dual(model: SurrogateModel, dual, Z_test) -> np.ndarray:
    return surrogate_features(model, Z_test) @ np.asarray(dual, dtype=float)


def surrogate_predict(model: SurrogateModel, f_train, lam: float, Z_test, K=None) -> np.ndarray:
    """``p(z*) = f_train' (K + lam I)^{-1} M*(z*)`` with ``K`` the exact unit-scale Gram."""
    f_train = np.asarray(f_train, dtype=float)
    if f_train.shape[0] != model.Z.shape[0]:
        raise ValueError("f_train length must match the training set")
    if K is None:
        K = gram(ScaledKernel(model.spec, 1.0), model.Z)
    A = K + lam * np.eye(K.shape[0]) if lam > 0 else K
    dual, _ = solve_spd(A, f_train)
    return surrogate_predict_dual(model, dual, Z_test)


# ---------------------------------------------------------------------------
# best polynomial approximation


def monomial_exponents(n_vars: int, degree: int) -> list[tuple[int, ...]]:
    """All multisets of variable indices with size <= degree (one per monomial)."""
    out = []
    for k in range(degree + 1):
        out.extend(itertools.combinations_with_replacement(range(n_vars), k))
    return out


def best_poly_error(f_star: GroundTruth, samples, degree: int, active_coords=None, cap: int = MAX_BASIS) -> float:
    """Monte Carlo ``inf_p E[(f* - p)^2]`` over polynomials of total degree <= ``degree``
    in the active coordinates, via least squares."""
    if degree < 0 or int(degree) != degree:
        raise ValueError("degree must be a nonnegative integer")
    X = np.asarray(samples, dtype=float)
    coords = tuple(f_star.active_coords if active_coords is None else active_coords)
    n_basis = math.comb(len(coords) + degree, degree)
    if n_basis > cap:
        raise ValueError(f"monomial basis has {n_basis} terms, above the cap of {cap}")
    y = f_star(X)
    Xa = X[:, list(coords)]
    basis = monomial_exponents(len(coords), int(degree))
    Phi = np.empty((X.shape[0], len(basis)))
    for j, mono in enumerate(basis):
        col = np.ones(X.shape[0])
        for v in mono:
            col = col * Xa[:, v]
        Phi[:, j] = col
    coef, _, rank, _ = np.linalg.lstsq(Phi, y, rcond=None)
    if rank < len(basis):
        logger.warning("rank-deficient monomial design (%d of %d); using ridge %.0e", rank, len(basis),
                       RANK_DEFICIENT_RIDGE)
        gramm = Phi.T @ Phi + RANK_DEFICIENT_RIDGE * np.eye(len(basis))
        coef = np.linalg.solve(gramm, Phi.T @ y)
    resid = y - Phi @ coef
    return float(np.mean(resid**2))
