"""Command-line entry point: ``kernellab <subcommand> --config FILE --out DIR``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .lab import experiments as ex
from .lab.config import ConfigError, ExperimentConfig, load_config
from .lab.output import write_csv, write_svg

EXIT_OK, EXIT_CONFIG, EXIT_ALL_FAILED = 0, 1, 2

SUBCOMMANDS = {
    "beta-sweep": "beta_sweep",
    "tau-sweep": "tau_sweep",
    "slice": "slice",
    "bias-variance": "bias_variance",
    "featsel": "featsel",
    "rkhs-growth": "rkhs_growth",
    "diagnose": "diagnose",
}


def _featsel_rows(cfg: ExperimentConfig, jobs: int) -> list[dict]:
    rows = []
    for k, s in ex._series(cfg):
        try:
            rows.extend(ex.greedy_feature_selection(cfg, k, s).rows())
        except Exception as exc:
            rows.append({"kernel": cfg.kernels[k].label, "error": ex._error_text(exc)})
    return rows


# kind -> (runner, columns, plot x, plot y, plot series)
_RUNNERS = {
    "beta_sweep": (lambda c, j: [r.row() for r in ex.beta_sweep(c, j)], ex.BIAS_COLUMNS,
                   "beta", "bias_norm", "series"),
    "tau_sweep": (lambda c, j: [r.row() for r in ex.tau_sweep(c, j)], ex.BIAS_COLUMNS,
                  "tau", "bias_norm", "series"),
    "slice": (ex.slice_trace, ex.SLICE_COLUMNS, "alpha", "fhat", "d"),
    "bias_variance": (ex.bias_variance, ex.BV_COLUMNS, "d", "bias_norm", "kernel"),
    "featsel": (_featsel_rows, ex.FEATSEL_COLUMNS + ["error"], "step", "cv_risk", "kernel"),
    "rkhs_growth": (ex.rkhs_growth, ex.RKHS_COLUMNS, "d", "norm", "kernel"),
    "diagnose": (ex.diagnose, ex.DIAGNOSE_COLUMNS, "beta", "lambda_min", "kernel"),
}


def run(kind: str, cfg: ExperimentConfig, out_dir: Path, jobs: int = 1, name: str | None = None) -> int:
    runner, columns, px, py, series = _RUNNERS[kind]
    rows = runner(cfg, jobs)
    stem = name or kind.replace("_", "-")
    write_csv(out_dir / f"{stem}.csv", rows, columns)
    if cfg.plot:
        write_svg(out_dir / f"{stem}.svg", rows, px, py, series, title=stem)
    failed = [r for r in rows if r.get("error")]
    for r in failed:
        logging.getLogger("kernellab").error("failed point: %s", r["error"])
    if not rows or len(failed) == len(rows):
        return EXIT_ALL_FAILED
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="kernellab", description="Kernel regression experiments in high dimensions.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in SUBCOMMANDS:
        s = sub.add_parser(name)
        s.add_argument("--config", required=True, type=Path, help="JSON experiment configuration")
        s.add_argument("--out", required=True, type=Path, help="output directory")
        s.add_argument("--seed", type=int, default=None, help="override the config seed")
        s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
        s.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    kind = SUBCOMMANDS[args.command]
    try:
        cfg = load_config(args.config, kind)
        if args.seed is not None:
            if args.seed < 0:
                raise ConfigError("seed must be nonnegative")
            cfg = cfg.with_seed(args.seed)
        if args.jobs < 1:
            raise ConfigError("--jobs must be >= 1")
    except ConfigError as exc:
        print(f"kernellab: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    args.out.mkdir(parents=True, exist_ok=True)
    code = run(kind, cfg, args.out, args.jobs, name=args.command)
    if code == EXIT_ALL_FAILED:
        print("kernellab: every grid point failed", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
