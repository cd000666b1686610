"""Synthetic input distributions, ground truths and concentration diagnostics.

Inputs are generated as ``X = Sigma^{1/2} W`` with ``W`` having i.i.d.
standard-normal or unit-variance uniform entries and ``Sigma`` diagonal with
largest entry 1, optionally projected onto the sphere of radius
``sqrt(d_eff)``. A non-centred ``unit_cube`` law (uniform on [0, 1]^d) is also
provided for the slice and RKHS-norm experiments.

Coordinates are 0-based throughout: ``coordinate=0`` is the first input.
All sampling goes through a Philox counter-based generator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np
from scipy.optimize import brentq

ENTRY_LAWS = ("normal", "uniform", "unit_cube")
PROJECTIONS = ("none", "sphere")
KAPPA_MIN, KAPPA_MAX = 1e-6, 1e6


def make_rng(seed) -> np.random.Generator:
    """Philox generator from an int or a sequence of ints (e.g. ``(seed, job)``)."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed)))


# ---------------------------------------------------------------------------
# covariance models


def power_law_diagonal(d: int, kappa: float) -> np.ndarray:
    """Entries ``(1 - ((i-1)/d)^kappa)^(1/kappa)`` for ``i = 1..d``, computed in log space."""
    r = np.arange(d, dtype=float) / d
    out = np.ones(d)
    with np.errstate(divide="ignore"):
        logr = np.log(r[1:])
        one_minus = -np.expm1(kappa * logr)
        out[1:] = np.exp(np.log(one_minus) / kappa)
    return out


@dataclass(frozen=True)
class CovarianceModel:
    """Diagonal covariance with operator norm 1.

    ``kind`` is ``identity`` (``d``), ``power_law`` (``d``, ``kappa``) or
    ``explicit`` (``diagonal``).
    """

    kind: str
    d: int
    kappa: float | None = None
    explicit: tuple[float, ...] | None = None

    def __post_init__(self):
        if self.kind not in ("identity", "power_law", "explicit"):
            raise ValueError(f"unknown covariance kind {self.kind!r}")
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if self.kind == "power_law" and (self.kappa is None or not self.kappa > 0):
            raise ValueError("power_law needs kappa > 0")
        if self.kind == "explicit":
            diag = np.asarray(self.explicit, dtype=float)
            if diag.shape != (self.d,):
                raise ValueError("explicit diagonal length must equal d")
            if np.any(diag <= 0) or np.any(diag > 1) or not np.isclose(diag.max(), 1.0):
                raise ValueError("explicit diagonal entries must lie in (0, 1] with maximum 1")

    @classmethod
    def identity(cls, d: int) -> "CovarianceModel":
        return cls("identity", int(d))

    @classmethod
    def power_law(cls, d: int, kappa: float) -> "CovarianceModel":
        return cls("power_law", int(d), kappa=float(kappa))

    @classmethod
    def from_diagonal(cls, diagonal: Sequence[float]) -> "CovarianceModel":
        diagonal = tuple(float(x) for x in diagonal)
        return cls("explicit", len(diagonal), explicit=diagonal)

    @property
    def diagonal(self) -> np.ndarray:
        if self.kind == "identity":
            return np.ones(self.d)
        if self.kind == "power_law":
            return power_law_diagonal(self.d, self.kappa)
        return np.asarray(self.explicit, dtype=float)

    def to_config(self) -> dict[str, Any]:
        if self.kind == "identity":
            return {"kind": "identity", "d": self.d}
        if self.kind == "power_law":
            return {"kind": "power_law", "d": self.d, "kappa": self.kappa}
        return {"kind": "explicit", "diagonal": list(self.explicit)}

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "CovarianceModel":
        kind = cfg["kind"]
        if kind == "identity":
            return cls.identity(cfg["d"])
        if kind == "power_law":
            return cls.power_law(cfg["d"], cfg["kappa"])
        if kind == "explicit":
            return cls.from_diagonal(cfg["diagonal"])
        raise ValueError(f"unknown covariance kind {kind!r}")


def effective_dimension(cov: CovarianceModel) -> float:
    """``trace(Sigma) / |Sigma|_op``."""
    diag = cov.diagonal
    return float(diag.sum() / diag.max())


def kappa_solve(d: int, target_trace: float, rtol: float = 1e-6) -> float:
    """Find ``kappa`` with ``trace(power_law(d, kappa)) = target_trace``.

    Brent's method in ``log kappa`` on ``[1e-6, 1e6]``; the trace increases with
    kappa from 1 (kappa -> 0) to d (kappa -> inf).
    """
    if not (1.0 <= target_trace <= d):
        raise ValueError(f"target trace {target_trace} outside attainable range [1, {d}]")
    tol = rtol * target_trace

    def trace(logk):
        return power_law_diagonal(d, math.exp(logk)).sum()

    lo, hi = math.log(KAPPA_MIN), math.log(KAPPA_MAX)
    t_lo, t_hi = trace(lo), trace(hi)
    if abs(t_lo - target_trace) <= tol:
        return KAPPA_MIN
    if abs(t_hi - target_trace) <= tol:
        return KAPPA_MAX
    if not (t_lo < target_trace < t_hi):
        raise ValueError(f"target trace {target_trace} not bracketed by kappa caps ({t_lo}, {t_hi})")
    logk = brentq(lambda lk: trace(lk) - target_trace, lo, hi, xtol=1e-13, rtol=4 * np.finfo(float).eps)
    return math.exp(logk)


# ---------------------------------------------------------------------------
# distributions


@dataclass(frozen=True)
class DistributionSpec:
    covariance: CovarianceModel
    entry_law: str = "normal"
    projection: str = "none"
    beta: float = 0.5

    def __post_init__(self):
        if self.entry_law not in ENTRY_LAWS:
            raise ValueError(f"unknown entry law {self.entry_law!r}")
        if self.projection not in PROJECTIONS:
            raise ValueError(f"unknown projection {self.projection!r}")
        if not (0.0 < self.beta <= 2.0):
            raise ValueError(f"beta must lie in (0, 2], got {self.beta}")

    @property
    def d(self) -> int:
        return self.covariance.d

    @property
    def d_eff(self) -> float:
        if self.entry_law == "unit_cube":
            return float(self.d)
        return effective_dimension(self.covariance)

    @property
    def domain(self) -> str:
        return "sphere" if self.projection == "sphere" else "covariance"

    def to_config(self) -> dict[str, Any]:
        return {
            "cov": self.covariance.to_config(),
            "entry_law": self.entry_law,
            "projection": self.projection,
            "beta": self.beta,
        }

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "DistributionSpec":
        return cls(
            CovarianceModel.from_config(cfg["cov"]),
            cfg.get("entry_law", "normal"),
            cfg.get("projection", "none"),
            float(cfg.get("beta", 0.5)),
        )


def standard_model(name: str, n: int, beta: float, d: int | None = None) -> DistributionSpec:
    """The benchmark input models.

    - ``P1``: isotropic Gaussian, ``d = floor(n^beta)``
    - ``P2``: P1 projected onto the sphere of radius ``sqrt(d)``
    - ``P3``: uniform unit-variance entries, ``d = n``, power-law covariance
      with ``trace = n^beta``
    - ``cube``: uniform on ``[0, 1]^d`` (``d`` required)
    """
    name = name.upper() if name.lower() != "cube" else "cube"
    if name in ("P1", "P2"):
        dim = int(math.floor(n**beta + 1e-9)) if d is None else int(d)
        cov = CovarianceModel.identity(max(dim, 1))
        return DistributionSpec(cov, "normal", "sphere" if name == "P2" else "none", beta)
    if name == "P3":
        dim = n if d is None else int(d)
        target = min(max(n**beta, 1.0), dim)
        cov = CovarianceModel.power_law(dim, kappa_solve(dim, target))
        return DistributionSpec(cov, "uniform", "none", beta)
    if name == "cube":
        if d is None:
            raise ValueError("the cube model needs an explicit dimension")
        return DistributionSpec(CovarianceModel.identity(d), "unit_cube", "none", beta)
    raise ValueError(f"unknown model {name!r}")


def sample(spec: DistributionSpec, n: int, d: int | None = None, seed=0) -> np.ndarray:
    """Draw ``n`` i.i.d. rows from ``spec``; deterministic given ``seed``."""
    if d is None:
        d = spec.d
    if d != spec.d:
        raise ValueError(f"requested d={d} but covariance has d={spec.d}")
    if n < 1:
        raise ValueError("n must be >= 1")
    rng = make_rng(seed)
    if spec.entry_law == "unit_cube":
        return rng.random((n, d))
    if spec.entry_law == "normal":
        W = rng.standard_normal((n, d))
    else:
        W = rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(n, d))
    X = W * np.sqrt(spec.covariance.diagonal)
    if spec.projection == "sphere":
        X *= math.sqrt(spec.d_eff) / np.linalg.norm(X, axis=1, keepdims=True)
    return X


# ---------------------------------------------------------------------------
# ground truths


@dataclass(frozen=True)
class GroundTruth:
    """Target function ``f*``.

    kinds: ``monomial`` (coeff * x[coordinate]**power), ``sine``
    (sin(2 pi frequency x[0])), ``sparse_quad_lin``
    (0.5 sum_i x[2i]^2 - sum_i x[2i-1], i = 1..terms, 0-based) and ``custom``.
    """

    kind: str
    coeff: float = 1.0
    coordinate: int = 0
    power: int = 1
    frequency: float = 1.0
    terms: int = 4
    func: Callable[[np.ndarray], np.ndarray] | None = field(default=None, compare=False)

    def __call__(self, X) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.kind == "monomial":
            return self.coeff * X[:, self.coordinate] ** self.power
        if self.kind == "sine":
            return np.sin(2.0 * np.pi * self.frequency * X[:, 0])
        if self.kind == "sparse_quad_lin":
            idx = np.arange(1, self.terms + 1)
            return 0.5 * np.sum(X[:, 2 * idx] ** 2, axis=1) - np.sum(X[:, 2 * idx - 1], axis=1)
        if self.kind == "custom":
            return np.asarray(self.func(X), dtype=float)
        raise ValueError(f"unknown ground truth {self.kind!r}")

    @property
    def active_coords(self) -> tuple[int, ...]:
        if self.kind == "monomial":
            return (self.coordinate,)
        if self.kind == "sine":
            return (0,)
        if self.kind == "sparse_quad_lin":
            return tuple(range(1, 2 * self.terms + 1))
        raise ValueError("custom ground truths have no declared active coordinates")

    @property
    def min_dim(self) -> int:
        return max(self.active_coords) + 1

    def to_config(self) -> dict[str, Any]:
        if self.kind == "monomial":
            return {"kind": "monomial", "coeff": self.coeff, "coordinate": self.coordinate, "power": self.power}
        if self.kind == "sine":
            return {"kind": "sine", "frequency": self.frequency}
        if self.kind == "sparse_quad_lin":
            return {"kind": "sparse_quad_lin", "terms": self.terms}
        raise ValueError("custom ground truths are not serializable")

    @classmethod
    def from_config(cls, cfg: dict[str, Any]) -> "GroundTruth":
        kind = cfg["kind"]
        if kind == "monomial":
            return cls("monomial", coeff=float(cfg.get("coeff", 1.0)), coordinate=int(cfg.get("coordinate", 0)),
                       power=int(cfg.get("power", 1)))
        if kind == "sine":
            return cls("sine", frequency=float(cfg.get("frequency", 1.0)))
        if kind == "sparse_quad_lin":
            return cls("sparse_quad_lin", terms=int(cfg.get("terms", 4)))
        raise ValueError(f"unknown ground truth kind {kind!r}")

    def scaled(self, s: float) -> "GroundTruth":
        return GroundTruth("custom", func=lambda X, f=self: s * f(X))


def monomial(coeff: float, coordinate: int, power: int) -> GroundTruth:
    return GroundTruth("monomial", coeff=coeff, coordinate=coordinate, power=power)


# ---------------------------------------------------------------------------
# concentration


def concentration_bound(n: int, beta: float, epsilon: float = 1.0) -> float:
    return n ** (-beta / 2.0) * math.log(n) ** ((1.0 + epsilon) / 2.0)


@dataclass(frozen=True)
class ConcentrationReport:
    max_offdiag_inner: float
    max_norm_dev: float
    bound: float
    epsilon: float
    satisfied: bool


def concentration_check(X, beta: float, epsilon: float = 1.0, trace: float | None = None) -> ConcentrationReport:
    """Compare scaled inner products and norm deviations to ``n^(-beta/2) (log n)^((1+eps)/2)``.

    ``trace`` is the analytic trace of the generating covariance; it defaults to
    the number of columns (identity covariance).
    """
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    if n < 2:
        raise ValueError("concentration check needs at least two samples")
    tr = float(X.shape[1]) if trace is None else float(trace)
    G = X @ X.T
    norms = np.diag(G).copy()
    np.fill_diagonal(G, 0.0)
    max_inner = float(np.abs(G).max() / tr)
    max_dev = float(np.abs(norms / tr - 1.0).max())
    bound = concentration_bound(n, beta, epsilon)
    return ConcentrationReport(max_inner, max_dev, bound, epsilon, max_inner <= bound and max_dev <= bound)
