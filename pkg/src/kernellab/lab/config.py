"""Experiment configuration: JSON schema validation and typed access."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Any

import jsonschema
import numpy as np

from ..data import DistributionSpec, GroundTruth, standard_model
from ..kernels import KernelSpec

KINDS = ("beta_sweep", "tau_sweep", "slice", "bias_variance", "featsel", "rkhs_growth", "diagnose")

# required grid key per experiment kind
_GRID_KEY = {
    "beta_sweep": "beta",
    "tau_sweep": "tau",
    "bias_variance": "dims",
    "featsel": "budget",
    "rkhs_growth": "dims",
}

DEFAULT_CV_GRID = (0.0,) + tuple(10.0**k for k in range(-8, 3))


class ConfigError(ValueError):
    """Invalid experiment configuration."""


def load_schema() -> dict:
    text = resources.files("kernellab.lab").joinpath("config.schema.json").read_text(encoding="utf-8")
    return json.loads(text)


@dataclass(frozen=True)
class KernelChoice:
    spec: KernelSpec
    tau: float | str = "d_eff"  # a number, or "d_eff" to use the effective dimension

    def resolve_tau(self, d_eff: float) -> float:
        return float(d_eff) if self.tau == "d_eff" else float(self.tau)

    @property
    def label(self) -> str:
        return self.spec.label


@dataclass(frozen=True)
class ModelChoice:
    model: str
    beta: float = 0.5
    d: int | None = None

    def build(self, n: int, beta: float | None = None, d: int | None = None) -> DistributionSpec:
        return standard_model(self.model, n, self.beta if beta is None else beta, self.d if d is None else d)

    @property
    def label(self) -> str:
        return self.model


@dataclass(frozen=True)
class LambdaPolicy:
    policy: str = "zero"
    value: float = 0.0
    grid: tuple[float, ...] = DEFAULT_CV_GRID  # multiples of trace(K)/n


@dataclass(frozen=True)
class NoiseSpec:
    kind: str = "none"
    scale: float = 0.0

    def draw(self, rng, shape):
        if self.kind == "none" or self.scale == 0:
            return np.zeros(shape)
        if self.kind == "uniform":
            return rng.uniform(-self.scale, self.scale, size=shape)
        return self.scale * rng.standard_normal(shape)


@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    kernels: tuple[KernelChoice, ...]
    distributions: tuple[ModelChoice, ...]
    ground_truth: GroundTruth
    n: int
    n_test: int
    grid: dict[str, Any] = field(default_factory=dict)
    lam: LambdaPolicy = LambdaPolicy()
    noise: NoiseSpec = NoiseSpec()
    repeats: int = 1
    folds: int = 5
    epsilon: float = 1.0
    m: int | None = None
    seed: int = 0
    plot: bool = True

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return replace(self, seed=int(seed))


def _kernel_choice(raw: dict) -> KernelChoice:
    spec = KernelSpec(raw["family"], alpha=raw.get("alpha"), depth=raw.get("depth"))
    return KernelChoice(spec, raw.get("tau", "d_eff"))


def parse_config(raw: dict, kind: str | None = None) -> ExperimentConfig:
    """Validate ``raw`` against the schema and the per-kind rules.

    ``kind`` (e.g. from the CLI subcommand) must agree with ``raw['kind']``
    when both are given.
    """
    try:
        jsonschema.validate(raw, load_schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"{path}: {exc.message}") from None
    cfg_kind = raw.get("kind", kind)
    if cfg_kind is None:
        raise ConfigError("experiment kind missing")
    if kind is not None and cfg_kind != kind:
        raise ConfigError(f"config kind {cfg_kind!r} does not match subcommand {kind!r}")
    try:
        kernels = [_kernel_choice(k) for k in raw.get("kernels", [])]
        if "kernel" in raw:
            kernels.insert(0, _kernel_choice(raw["kernel"]))
        if not kernels:
            kernels = [KernelChoice(KernelSpec("alpha_exp", alpha=1.0))]
        dists = [ModelChoice(**d) for d in raw.get("distributions", [])]
        if "distribution" in raw:
            dists.insert(0, ModelChoice(**raw["distribution"]))
        if not dists:
            dists = [ModelChoice("P1")]
        gt = GroundTruth.from_config(raw.get("ground_truth", {"kind": "monomial"}))
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    grid = dict(raw.get("grid", {}))
    key = _GRID_KEY.get(cfg_kind)
    if key is not None and key not in grid:
        raise ConfigError(f"{cfg_kind} needs grid.{key}")
    lam_raw = raw.get("lambda", {"policy": "zero"})
    if lam_raw["policy"] == "fixed" and "value" not in lam_raw:
        raise ConfigError("lambda policy 'fixed' needs a value")
    lam = LambdaPolicy(lam_raw["policy"], float(lam_raw.get("value", 0.0)),
                       tuple(float(v) for v in lam_raw.get("grid", DEFAULT_CV_GRID)))
    noise_raw = raw.get("noise", {"kind": "none"})
    noise = NoiseSpec(noise_raw["kind"], float(noise_raw.get("scale", 0.0)))
    if noise.kind != "none" and "scale" not in noise_raw:
        raise ConfigError(f"{noise.kind} noise needs a scale")

    n = int(raw["n"])
    cfg = ExperimentConfig(
        kind=cfg_kind,
        kernels=tuple(kernels),
        distributions=tuple(dists),
        ground_truth=gt,
        n=n,
        n_test=int(raw.get("n_test", 5 * n)),
        grid=grid,
        lam=lam,
        noise=noise,
        repeats=int(raw.get("repeats", 1)),
        folds=int(raw.get("folds", 5)),
        epsilon=float(raw.get("epsilon", 1.0)),
        m=raw.get("m"),
        seed=int(raw.get("seed", 0)),
        plot=bool(raw.get("plot", True)),
    )
    _check_kind_rules(cfg)
    return cfg


def _check_kind_rules(cfg: ExperimentConfig):
    if cfg.kind == "bias_variance" and cfg.repeats < 2:
        raise ConfigError("bias_variance needs repeats >= 2")
    width = None
    if cfg.kind == "bias_variance":
        width = max(cfg.grid["dims"])
    if cfg.kind == "featsel":
        width = cfg.grid.get("features", cfg.distributions[0].d)
        if width is None:
            raise ConfigError("featsel needs grid.features or distribution.d")
        if cfg.grid["budget"] > width:
            raise ConfigError(f"feature budget {cfg.grid['budget']} exceeds the {width} available features")
    if width is not None and width < cfg.ground_truth.min_dim:
        raise ConfigError(f"ground truth needs at least {cfg.ground_truth.min_dim} input coordinates")
    if cfg.folds > cfg.n and (cfg.kind == "featsel" or cfg.lam.policy == "cv"):
        raise ConfigError("more folds than training samples")


def load_config(path: str | Path, kind: str | None = None) -> ExperimentConfig:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object")
    return parse_config(raw, kind)
