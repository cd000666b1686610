"""Dense symmetric linear algebra used by the estimators."""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
import scipy.sparse.linalg as spla

logger = logging.getLogger(__name__)

JITTER_START = 1e-12
JITTER_MAX = 1e-6


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a factorization fails even with the maximal jitter."""


@dataclass(frozen=True)
class SymmetricFactorization:
    """Cholesky factor of ``A + jitter * I``."""

    n: int
    factor: tuple
    jitter_applied: float

    def solve(self, b):
        return sla.cho_solve(self.factor, b, check_finite=False)


def _jitter_ladder(scale: float):
    yield 0.0
    j = JITTER_START * scale
    top = JITTER_MAX * scale * (1 + 1e-12)
    while j <= top:
        yield j
        j *= 2.0


def factor_spd(A) -> SymmetricFactorization:
    """Cholesky with escalating diagonal jitter.

    Tries jitter 0 first, then ``1e-12 * trace(A)/n`` doubling up to
    ``1e-6 * trace(A)/n``. Raises :class:`SingularMatrixError` if every rung fails.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    n = A.shape[0]
    scale = float(np.trace(A)) / n
    if not np.isfinite(scale) or scale <= 0:
        raise SingularMatrixError("matrix has nonpositive trace; not positive definite")
    for jitter in _jitter_ladder(scale):
        M = A if jitter == 0.0 else A + jitter * np.eye(n)
        try:
            c = sla.cho_factor(M, lower=True, check_finite=False)
        except np.linalg.LinAlgError:
            continue
        if jitter > 0:
            logger.info("Cholesky needed jitter %.3e (trace/n = %.3e)", jitter, scale)
        return SymmetricFactorization(n, c, jitter)
    raise SingularMatrixError(f"Cholesky failed at maximal jitter {JITTER_MAX * scale:.3e}")


def solve_spd(A, B):
    """Solve ``A x = B`` for symmetric positive definite ``A``.

    Returns ``(x, jitter)`` where ``jitter`` is the diagonal shift that was
    needed for the factorization to succeed (0 when none was).
    """
    fac = factor_spd(A)
    B = np.asarray(B, dtype=float)
    if B.shape[0] != fac.n:
        raise ValueError(f"right-hand side has {B.shape[0]} rows, matrix has {fac.n}")
    return fac.solve(B), fac.jitter_applied


def solve_symmetric_indefinite(A, b) -> np.ndarray:
    """Pivoted (Bunch-Kaufman) solve for a symmetric, possibly indefinite system."""
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    with warnings.catch_warnings():
        warnings.simplefilter("error", sla.LinAlgWarning)
        try:
            return sla.solve(A, b, assume_a="sym", check_finite=False)
        except (np.linalg.LinAlgError, sla.LinAlgWarning) as exc:
            raise SingularMatrixError(f"symmetric system is numerically singular: {exc}") from exc


def eig_symmetric(A, eigenvectors: bool = False):
    """Ascending eigenvalues (and optionally eigenvectors) of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if eigenvectors:
        return sla.eigh(A, check_finite=False)
    return sla.eigvalsh(A, check_finite=False)


def min_eigenvalue(A) -> float:
    return float(sla.eigvalsh(A, subset_by_index=[0, 0], check_finite=False)[0])


# above this size the spectral norm uses Lanczos instead of a full eigensolve
_LANCZOS_MIN_N = 600


def op_norm_symmetric(A) -> float:
    """Spectral norm of a symmetric matrix."""
    A = np.asarray(A, dtype=float)
    if A.shape[0] >= _LANCZOS_MIN_N:
        try:
            w = spla.eigsh(A, k=1, which="LM", return_eigenvectors=False, maxiter=20 * A.shape[0])
            return float(abs(w[0]))
        except spla.ArpackNoConvergence:
            pass
    w = sla.eigvalsh(A, check_finite=False)
    return float(max(abs(w[0]), abs(w[-1])))


def hadamard_power(A, i: int) -> np.ndarray:
    """Entrywise ``i``-th power; ``i = 0`` gives the all-ones matrix."""
    if int(i) != i or i < 0:
        raise ValueError(f"Hadamard power must be a nonnegative integer, got {i}")
    A = np.asarray(A, dtype=float)
    if i == 0:
        return np.ones_like(A)
    return A ** int(i)
