"""Monte Carlo experiments: bias sweeps, slices, bias/variance, feature selection,
RKHS-norm growth and regime diagnostics.

Every job draws its randomness from ``(seed, distribution index, grid index,
repeat, stream)`` so results are pure functions of the configuration and
identical whether grid points run serially or in parallel. The kernel index
is deliberately not part of the key: kernels compared within one config see
the same samples.
"""

from __future__ import annotations

import itertools
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

import numpy as np

from ..barrier import barrier_degree, min_eig_bound, taylor_gram_gap
from ..data import DistributionSpec, concentration_check, make_rng, sample
from ..estimators import FittedEstimator, fit_ridge, predict, rkhs_norm
from ..kernels import ScaledKernel, gram
from ..numerics import min_eigenvalue, solve_spd
from .config import ExperimentConfig, KernelChoice, LambdaPolicy

logger = logging.getLogger(__name__)

TRAIN, TEST, NOISE, FOLDS = 0, 1, 2, 3


def _rng(cfg: ExperimentConfig, dist_idx: int, grid_idx: int, repeat: int, stream: int):
    return make_rng((cfg.seed, dist_idx, grid_idx, repeat, stream))


def _error_text(exc: BaseException) -> str:
    return f"{type(exc).__name__}: {exc}".replace("\n", " ")


# ---------------------------------------------------------------------------
# lambda policies


def cv_fold_ids(n: int, folds: int, rng) -> np.ndarray:
    ids = np.empty(n, dtype=int)
    ids[rng.permutation(n)] = np.arange(n) % folds
    return ids


def cv_risk(K: np.ndarray, y: np.ndarray, lam: float, fold_ids: np.ndarray) -> float:
    """Mean squared k-fold prediction error of kernel ridge with a precomputed Gram matrix."""
    sq = 0.0
    for f in np.unique(fold_ids):
        test = fold_ids == f
        train = ~test
        Ktr = K[np.ix_(train, train)]
        A = Ktr + lam * np.eye(Ktr.shape[0]) if lam > 0 else Ktr
        dual, _ = solve_spd(A, y[train])
        resid = K[np.ix_(test, train)] @ dual - y[test]
        sq += float(np.sum(resid**2))
    return sq / len(y)


def select_lambda(K: np.ndarray, y: np.ndarray, policy: LambdaPolicy, folds: int, rng) -> float:
    """Resolve the lambda policy; ``cv`` scans ``grid * trace(K)/n`` by k-fold CV."""
    if policy.policy == "zero":
        return 0.0
    if policy.policy == "fixed":
        return float(policy.value)
    scale = float(np.trace(K)) / K.shape[0]
    ids = cv_fold_ids(K.shape[0], folds, rng)
    y1 = y if y.ndim == 1 else y[:, 0]
    best, best_risk = None, math.inf
    for mult in policy.grid:
        try:
            r = cv_risk(K, y1, mult * scale, ids)
        except np.linalg.LinAlgError:
            continue
        if r < best_risk:
            best, best_risk = mult * scale, r
    if best is None:
        raise np.linalg.LinAlgError("every lambda on the CV grid failed")
    return best


def fit_with_policy(kernel: ScaledKernel, X, y, cfg: ExperimentConfig, rng) -> FittedEstimator:
    K = gram(kernel, X)
    lam = select_lambda(K, np.asarray(y, dtype=float), cfg.lam, cfg.folds, rng)
    return fit_ridge(kernel, X, y, lam, K=K)


def _tau_for(choice: KernelChoice, dist: DistributionSpec, tau=None, relative=True) -> float:
    if tau is None:
        return choice.resolve_tau(dist.d_eff)
    return float(tau) * dist.d_eff if relative else float(tau)


# ---------------------------------------------------------------------------
# bias estimation


@dataclass
class BiasResult:
    point: dict[str, Any]
    bias: float = math.nan
    bias_norm: float = math.nan
    variance: float = math.nan
    b0: float = math.nan
    se: float = math.nan
    lam: float = math.nan
    jitter: float = math.nan
    runtime: float = 0.0
    error: str = ""

    def row(self) -> dict[str, Any]:
        out = dict(self.point)
        out.update(bias=self.bias, bias_norm=self.bias_norm, b0=self.b0, variance=self.variance, se=self.se,
                   **{"lambda": self.lam}, jitter=self.jitter, error=self.error)
        return out


BIAS_COLUMNS = ["series", "kernel", "model", "beta", "d", "d_eff", "tau",
                "bias", "bias_norm", "b0", "variance", "se", "lambda", "jitter", "error"]


def estimate_bias(
    cfg: ExperimentConfig,
    kernel_idx: int = 0,
    dist_idx: int = 0,
    grid_idx: int = 0,
    beta: float | None = None,
    tau: float | None = None,
    tau_relative: bool = True,
    data_grid_idx: int | None = None,
) -> BiasResult:
    """Noiseless bias ``mean (f_hat - f*)^2`` and ``B(0) = mean f*^2`` on one test sample.

    Averages over ``cfg.repeats`` independent data draws. With a noise model,
    the variance is estimated on the first draw from ``cfg.repeats`` noisy fits.
    Errors are recorded in the result instead of raised.
    """
    t0 = time.perf_counter()
    choice = cfg.kernels[kernel_idx]
    model = cfg.distributions[dist_idx]
    point: dict[str, Any] = {"series": f"{choice.label}/{model.label}", "kernel": choice.label,
                             "model": model.label, "beta": model.beta if beta is None else beta}
    res = BiasResult(point)
    try:
        dist = model.build(cfg.n, beta=beta)
        point.update(d=dist.d, d_eff=dist.d_eff)
        f = cfg.ground_truth
        if f.kind != "custom" and f.min_dim > dist.d:
            raise ValueError(f"ground truth needs {f.min_dim} coordinates, distribution has {dist.d}")
        kernel = ScaledKernel(choice.spec, _tau_for(choice, dist, tau, tau_relative))
        point["tau"] = kernel.tau
        gidx = grid_idx if data_grid_idx is None else data_grid_idx
        errs, f2 = [], []
        for r in range(cfg.repeats):
            X = sample(dist, cfg.n, seed=(cfg.seed, dist_idx, gidx, r, TRAIN))
            Xt = sample(dist, cfg.n_test, seed=(cfg.seed, dist_idx, gidx, r, TEST))
            y, ft = f(X), f(Xt)
            est = fit_with_policy(kernel, X, y, cfg, _rng(cfg, dist_idx, gidx, r, FOLDS))
            errs.append((predict(est, Xt) - ft) ** 2)
            f2.append(ft**2)
            if r == 0:
                res.lam, res.jitter = est.lam, est.jitter_used
                if cfg.noise.kind != "none" and cfg.repeats > 1:
                    E = cfg.noise.draw(_rng(cfg, dist_idx, gidx, 0, NOISE), (cfg.n, cfg.repeats))
                    noisy = fit_ridge(kernel, X, y[:, None] + E, est.lam, K=est.K)
                    res.variance = float(np.mean(np.var(predict(noisy, Xt), axis=1)))
        errs_all = np.concatenate(errs)
        res.bias = float(errs_all.mean())
        res.se = float(errs_all.std(ddof=1) / math.sqrt(errs_all.size)) if errs_all.size > 1 else math.nan
        res.b0 = float(np.concatenate(f2).mean())
        res.bias_norm = res.bias / res.b0 if res.b0 > 0 else math.nan
    except Exception as exc:  # per-point failures never abort a sweep
        res.error = _error_text(exc)
        logger.warning("grid point %s failed: %s", point, res.error)
    res.runtime = time.perf_counter() - t0
    return res


def _series(cfg: ExperimentConfig):
    return list(itertools.product(range(len(cfg.kernels)), range(len(cfg.distributions))))


def run_jobs(fn: Callable, tasks: list[tuple], jobs: int = 1) -> list:
    """Run ``fn(*task)`` for every task, results in task order."""
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        futures = [ex.submit(fn, *t) for t in tasks]
        return [fu.result() for fu in futures]


def beta_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[BiasResult]:
    """Bias against beta; ``d = floor(n^beta)`` (P1/P2) or trace ``n^beta`` (P3)."""
    tasks = [(cfg, k, s, g, b) for k, s in _series(cfg) for g, b in enumerate(cfg.grid["beta"])]
    return run_jobs(estimate_bias, tasks, jobs)


def tau_sweep(cfg: ExperimentConfig, jobs: int = 1) -> list[BiasResult]:
    """Bias against tau on fixed data; tau values are multiples of d_eff unless ``tau_relative`` is false."""
    rel = bool(cfg.grid.get("tau_relative", True))
    tasks = [(cfg, k, s, g, None, t, rel, 0) for k, s in _series(cfg) for g, t in enumerate(cfg.grid["tau"])]
    return run_jobs(estimate_bias, tasks, jobs)


# ---------------------------------------------------------------------------
# slice through the unit cube

SLICE_COLUMNS = ["kernel", "d", "tau", "alpha", "fhat", "fstar", "error"]


def _slice_point(cfg: ExperimentConfig, kernel_idx: int, dist_idx: int, grid_idx: int, d: int) -> list[dict]:
    choice = cfg.kernels[kernel_idx]
    model = cfg.distributions[dist_idx]
    m = int(cfg.grid.get("offsets", 101))
    alphas = np.linspace(0.0, 1.0, m)
    base = {"kernel": choice.label, "d": d}
    try:
        dist = model.build(cfg.n, d=d)
        X = sample(dist, cfg.n, seed=(cfg.seed, dist_idx, grid_idx, 0, TRAIN))
        kernel = ScaledKernel(choice.spec, choice.resolve_tau(dist.d_eff))
        est = fit_with_policy(kernel, X, cfg.ground_truth(X), cfg, _rng(cfg, dist_idx, grid_idx, 0, FOLDS))
        S = slice_points(alphas, d)
        fhat, fstar = predict(est, S), cfg.ground_truth(S)
    except Exception as exc:
        logger.warning("slice at d=%d failed: %s", d, exc)
        return [dict(base, alpha=float(a), fhat=math.nan, fstar=math.nan, error=_error_text(exc)) for a in alphas]
    return [dict(base, tau=kernel.tau, alpha=float(a), fhat=float(fh), fstar=float(fs), error="")
            for a, fh, fs in zip(alphas, fhat, fstar)]


def slice_points(alphas, d: int) -> np.ndarray:
    """Points ``(alpha, 1/2, ..., 1/2)``."""
    S = np.full((len(alphas), d), 0.5)
    S[:, 0] = alphas
    return S


def slice_trace(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    dims = cfg.grid.get("dims") or [cfg.distributions[0].d]
    tasks = [(cfg, k, s, g, int(d)) for k, s in _series(cfg) for g, d in enumerate(dims)]
    return [row for rows in run_jobs(_slice_point, tasks, jobs) for row in rows]


def fit_r2(x, y, basis: str = "linear") -> float:
    """R^2 of least squares of ``y`` on ``{1, x}`` (linear) or ``{1, sin 2 pi x}`` (sine)."""
    x, y = np.asarray(x, dtype=float), np.asarray(y, dtype=float)
    feat = x if basis == "linear" else np.sin(2 * np.pi * x)
    B = np.column_stack([np.ones_like(x), feat])
    coef, *_ = np.linalg.lstsq(B, y, rcond=None)
    resid = y - B @ coef
    tss = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - float(resid @ resid) / tss if tss > 0 else 1.0


# ---------------------------------------------------------------------------
# bias / variance under added irrelevant coordinates

BV_COLUMNS = ["kernel", "model", "d", "tau", "bias", "variance", "b0", "bias_norm", "variance_norm",
              "lambda", "jitter", "error"]


def _bv_point(cfg: ExperimentConfig, kernel_idx: int, dist_idx: int, d: int) -> dict:
    choice = cfg.kernels[kernel_idx]
    model = cfg.distributions[dist_idx]
    row: dict[str, Any] = {"kernel": choice.label, "model": model.label, "d": d}
    try:
        d_max = max(cfg.grid["dims"])
        dist = model.build(cfg.n, d=d_max)
        X = sample(dist, cfg.n, seed=(cfg.seed, dist_idx, 0, 0, TRAIN))
        Xt = sample(dist, cfg.n_test, seed=(cfg.seed, dist_idx, 0, 0, TEST))
        f = cfg.ground_truth
        fX, ft = f(X), f(Xt)
        Y = fX[:, None] + cfg.noise.draw(_rng(cfg, dist_idx, 0, 0, NOISE), (cfg.n, cfg.repeats))
        diag = dist.covariance.diagonal[:d]
        d_eff = float(d) if dist.entry_law == "unit_cube" else float(diag.sum() / diag.max())
        kernel = ScaledKernel(choice.spec, choice.resolve_tau(d_eff))
        est = fit_with_policy(kernel, X[:, :d], Y, cfg, _rng(cfg, dist_idx, 0, 0, FOLDS))
        P = predict(est, Xt[:, :d])
        bias = float(np.mean((P.mean(axis=1) - ft) ** 2))
        var = float(np.mean(P.var(axis=1)))
        b0 = float(np.mean(ft**2))
        row.update(tau=kernel.tau, bias=bias, variance=var, b0=b0, bias_norm=bias / b0, variance_norm=var / b0,
                   **{"lambda": est.lam}, jitter=est.jitter_used, error="")
    except Exception as exc:
        row["error"] = _error_text(exc)
        logger.warning("bias/variance at d=%d failed: %s", d, row["error"])
    return row


def bias_variance(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Fixed inputs; ``repeats`` noise draws; the first ``d`` columns are fed to the estimator."""
    tasks = [(cfg, k, s, int(d)) for k, s in _series(cfg) for d in cfg.grid["dims"]]
    return run_jobs(_bv_point, tasks, jobs)


# ---------------------------------------------------------------------------
# greedy forward feature selection

FEATSEL_COLUMNS = ["kernel", "step", "feature", "cv_risk"]


@dataclass
class SelectionResult:
    kernel: str
    order: list[int] = field(default_factory=list)
    risks: list[float] = field(default_factory=list)

    def rows(self) -> list[dict]:
        return [{"kernel": self.kernel, "step": i + 1, "feature": j, "cv_risk": r}
                for i, (j, r) in enumerate(zip(self.order, self.risks))]


def l1_normalize(A: np.ndarray) -> np.ndarray:
    norms = np.sum(np.abs(A), axis=0)
    return A / np.where(norms > 0, norms, 1.0)


def _subset_cv_risk(choice: KernelChoice, Xs: np.ndarray, y: np.ndarray, cfg: ExperimentConfig,
                    fold_ids: np.ndarray, rng) -> float:
    # tau defaults to the mean squared row norm of the selected columns
    tau = float(np.mean(np.sum(Xs**2, axis=1))) if choice.tau == "d_eff" else float(choice.tau)
    K = gram(ScaledKernel(choice.spec, tau), Xs)
    sq = 0.0
    for f in range(cfg.folds):
        test = fold_ids == f
        train = ~test
        Ktr = K[np.ix_(train, train)]
        lam = select_lambda(Ktr, y[train], cfg.lam, cfg.folds, rng)
        A = Ktr + lam * np.eye(Ktr.shape[0]) if lam > 0 else Ktr
        dual, _ = solve_spd(A, y[train])
        sq += float(np.sum((K[np.ix_(test, train)] @ dual - y[test]) ** 2))
    return sq / len(y)


def greedy_feature_selection(cfg: ExperimentConfig, kernel_idx: int = 0, dist_idx: int = 0) -> SelectionResult:
    """Forward selection by k-fold CV risk on l1-normalised columns and target."""
    choice = cfg.kernels[kernel_idx]
    model = cfg.distributions[dist_idx]
    total = int(cfg.grid.get("features", model.d or 0))
    budget = int(cfg.grid["budget"])
    if budget > total:
        raise ValueError(f"feature budget {budget} exceeds the {total} available features")
    dist = model.build(cfg.n, d=total)
    X = sample(dist, cfg.n, seed=(cfg.seed, dist_idx, 0, 0, TRAIN))
    y = cfg.ground_truth(X) + cfg.noise.draw(_rng(cfg, dist_idx, 0, 0, NOISE), cfg.n)
    Xn = l1_normalize(X)
    yn = y / max(float(np.sum(np.abs(y))), np.finfo(float).tiny)
    fold_ids = cv_fold_ids(cfg.n, cfg.folds, _rng(cfg, dist_idx, 0, 0, FOLDS))
    out = SelectionResult(choice.label)
    remaining = list(range(total))
    for step in range(budget):
        best_j, best_r = None, math.inf
        for j in remaining:
            cols = out.order + [j]
            try:
                r = _subset_cv_risk(choice, Xn[:, cols], yn, cfg, fold_ids, _rng(cfg, dist_idx, step, j, FOLDS))
            except np.linalg.LinAlgError as exc:
                logger.warning("candidate %d at step %d failed: %s", j, step + 1, exc)
                continue
            if r < best_r:
                best_j, best_r = j, r
        if best_j is None:
            raise np.linalg.LinAlgError(f"every candidate failed at step {step + 1}")
        out.order.append(best_j)
        out.risks.append(best_r)
        remaining.remove(best_j)
    return out


# ---------------------------------------------------------------------------
# RKHS norm of the interpolant

RKHS_COLUMNS = ["kernel", "model", "d", "tau", "norm", "lambda", "jitter", "error"]


def _rkhs_point(cfg: ExperimentConfig, kernel_idx: int, dist_idx: int, grid_idx: int, d: int) -> dict:
    choice = cfg.kernels[kernel_idx]
    model = cfg.distributions[dist_idx]
    row: dict[str, Any] = {"kernel": choice.label, "model": model.label, "d": d}
    try:
        dist = model.build(cfg.n, d=d)
        X = sample(dist, cfg.n, seed=(cfg.seed, dist_idx, grid_idx, 0, TRAIN))
        kernel = ScaledKernel(choice.spec, choice.resolve_tau(dist.d_eff))
        est = fit_with_policy(kernel, X, cfg.ground_truth(X), cfg, _rng(cfg, dist_idx, grid_idx, 0, FOLDS))
        row.update(tau=kernel.tau, norm=rkhs_norm(est), **{"lambda": est.lam}, jitter=est.jitter_used, error="")
    except Exception as exc:
        row["error"] = _error_text(exc)
        logger.warning("rkhs norm at d=%d failed: %s", d, row["error"])
    return row


def rkhs_growth(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    tasks = [(cfg, k, s, g, int(d)) for k, s in _series(cfg) for g, d in enumerate(cfg.grid["dims"])]
    return run_jobs(_rkhs_point, tasks, jobs)


# ---------------------------------------------------------------------------
# regime diagnostics

DIAGNOSE_COLUMNS = ["kernel", "model", "beta", "d", "d_eff", "tau", "max_inner", "max_norm_dev", "conc_bound",
                    "conc_ok", "lambda_min", "m_eig", "eig_bound", "m_taylor", "center", "gram_gap", "error"]


def _diagnose_point(cfg: ExperimentConfig, kernel_idx: int, dist_idx: int, grid_idx: int, beta: float) -> dict:
    choice = cfg.kernels[kernel_idx]
    model = cfg.distributions[dist_idx]
    row: dict[str, Any] = {"kernel": choice.label, "model": model.label, "beta": beta}
    try:
        dist = model.build(cfg.n, beta=beta)
        X = sample(dist, cfg.n, seed=(cfg.seed, dist_idx, grid_idx, 0, TRAIN))
        trace = float(dist.covariance.diagonal.sum())
        rep = concentration_check(X, beta, cfg.epsilon, trace=trace)
        kernel = ScaledKernel(choice.spec, choice.resolve_tau(dist.d_eff))
        K = gram(kernel, X)
        Z = X / math.sqrt(kernel.tau)
        c = float(np.mean(np.sum(Z**2, axis=1)))
        row.update(d=dist.d, d_eff=dist.d_eff, tau=kernel.tau, max_inner=rep.max_offdiag_inner,
                   max_norm_dev=rep.max_norm_dev, conc_bound=rep.bound, conc_ok=int(rep.satisfied),
                   lambda_min=min_eigenvalue(K), center=c, error="")
        if choice.spec.family == "exp_inner" or choice.spec.is_gaussian:
            m_eig = math.floor(2.0 / beta + 1e-12)
            m_tay = cfg.m if cfg.m is not None else barrier_degree(beta, dist.domain)
            row.update(m_eig=m_eig, eig_bound=min_eig_bound(choice.spec, m_eig, c), m_taylor=m_tay,
                       gram_gap=taylor_gram_gap(choice.spec, Z, m_tay, c))
    except Exception as exc:
        row["error"] = _error_text(exc)
        logger.warning("diagnose at beta=%s failed: %s", beta, row["error"])
    return row


def diagnose(cfg: ExperimentConfig, jobs: int = 1) -> list[dict]:
    """Concentration check, smallest Gram eigenvalue against its floor, and ``|K - M|``."""
    tasks = []
    for k, s in _series(cfg):
        betas = cfg.grid.get("beta") or [cfg.distributions[s].beta]
        tasks.extend((cfg, k, s, g, float(b)) for g, b in enumerate(betas))
    return run_jobs(_diagnose_point, tasks, jobs)
