# Copyright 2024 The Locovx Authors.

# Licensed to the Apache Software Foundation (ASF) under one
# or more contributor license agreements.  See the NOTICE file
# distributed with this work for additional information
# regarding copyright ownership.  The ASF licenses this file
# to you under the Apache License, Version 2.0 (the
# "License"); you may not use this file except in compliance
# with the License.  You may obtain a copy of the License at

#   http://www.apache.org/licenses/LICENSE-2.0

# Unless required by applicable law or agreed to in writing,
# software distributed under the License is distributed on an
# "AS IS" BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
# KIND, either express or implied.  See the License for the
# specific language governing permissions and limitations
# under the License.
"""Command line interface.

    locovx simulate --preset fig1 --seed 7
    locovx estimate returns.csv --estimator locov2
    locovx sweep --p 30 --n-grid 60,240,960,3840 --trials 200 --seed 3

Exit codes are 0 on success, 1 on usage errors, 2 on data errors and 3 on
numerical failures."""
from __future__ import annotations
from dataclasses import dataclass
from datetime import datetime, timezone
import logging
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Sequence, Tuple, Union

import jax
import tyro
from typing_extensions import Annotated
from flax import struct

from . import presets
from ._version import __version__
from .covmodel import center_returns, sample_covariance
from .errors import (
    EXIT_NUMERICAL,
    EXIT_OK,
    EXIT_USAGE,
    LocovError,
    NonInvertibleCovarianceError,
    UsageError,
    raise_for_status,
)
from .estimators import make as make_estimator
from .experiment import TrialConfig, rank_estimators, run_experiment, scaling_sweep
from .io import (
    read_returns_csv,
    write_json,
    write_scaling_csv,
    write_spread_csv,
    write_trials_csv,
    write_weights_csv,
)
from .locov import locov2_result, locovk_result
from .minvar import PortfolioWeight, min_variance_portfolio, portfolio_risk


logger = logging.getLogger("locovx")

SEED_ENV_VAR = "LOCOV_SEED"


class RunManifest(struct.PyTreeNode):
    """Everything needed to re-derive an output file.

    Timestamps are kept out of the data files, which are byte-reproducible, and
    only written to `manifest.json`."""

    command: str = struct.field(pytree_node=False)
    config: Dict[str, Any] = struct.field(pytree_node=False)
    seed: int = struct.field(pytree_node=False)
    version: str = struct.field(pytree_node=False, default=__version__)
    started_at: str = struct.field(pytree_node=False, default="")
    finished_at: str = struct.field(pytree_node=False, default="")

    def to_dict(self, timestamps: bool = True) -> Dict[str, Any]:
        manifest = {
            "command": self.command,
            "version": self.version,
            "seed": self.seed,
            "config": self.config,
        }
        if timestamps:
            manifest.update(started_at=self.started_at, finished_at=self.finished_at)
        return manifest

    def write(self, out: Path) -> None:
        finished = self.replace(finished_at=_now())
        write_json(out / "manifest.json", finished.to_dict())


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def resolve_seed(flag: Optional[int]) -> Optional[int]:
    """The `--seed` flag wins over the `LOCOV_SEED` environment variable."""
    if flag is not None:
        return flag
    env = os.environ.get(SEED_ENV_VAR)
    if env is None or not env.strip():
        return None
    try:
        return int(env)
    except ValueError:
        raise UsageError(f"{SEED_ENV_VAR}={env!r} is not an integer")


def parse_ints(value: str, flag: str) -> Tuple[int, ...]:
    try:
        values = tuple(int(v) for v in value.split(",") if v.strip())
    except ValueError:
        raise UsageError(f"{flag} expects comma separated integers, got {value!r}")
    if not values:
        raise UsageError(f"{flag} is empty")
    return values


def _check_threshold(fail_threshold: float) -> None:
    if not 0.0 <= fail_threshold <= 1.0:
        raise UsageError(f"--fail-threshold must be in [0, 1], got {fail_threshold}")


def _prepare_out(out: Path) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    return out


@dataclass
class Simulate:
    """Run Monte Carlo trials, writing trials.csv, spread.csv and summary.json."""

    preset: Optional[Literal["fig1", "fig2", "fig3", "fig4", "fig5"]] = None
    """Named experiment setting, explicit flags override its fields."""
    p: Optional[int] = None
    """Number of assets."""
    n: Optional[str] = None
    """Observations per trial, comma separated for several runs."""
    trials: Optional[int] = None
    seed: Optional[int] = None
    """Master seed, falls back to the LOCOV_SEED environment variable."""
    sigma: Optional[str] = None
    """Eigenvalues of the true covariance: identity, linspace:lo:hi or list:v1,v2,..."""
    basis: Optional[Literal["identity", "haar"]] = None
    noise: Optional[Literal["gaussian", "rademacher", "uniform"]] = None
    estimators: Optional[str] = None
    """Comma separated: sample, locov2, locovk:<k>, locovk-rm:<k>."""
    out: Path = Path("results")
    fail_threshold: float = 0.1
    """Exit with a numerical failure when more trials than this fraction fail."""
    batch_size: Optional[int] = None
    """Trials evaluated together in one vmapped call, results do not depend on it."""
    wandb_project: Optional[str] = None
    """Log the summaries to this wandb project."""
    verbose: bool = False

    def configs(self) -> Tuple[TrialConfig, ...]:
        overrides: Dict[str, Any] = {
            k: v
            for k, v in dict(
                p=self.p,
                trials=self.trials,
                sigma=self.sigma,
                basis=self.basis,
                noise=self.noise,
            ).items()
            if v is not None
        }
        if self.estimators is not None:
            overrides["estimators"] = tuple(
                t.strip() for t in self.estimators.split(",") if t.strip()
            )
        seed = resolve_seed(self.seed)
        if seed is not None:
            overrides["seed"] = seed
        n_values = parse_ints(self.n, "--n") if self.n is not None else None

        if self.preset is not None:
            if n_values is not None:
                overrides["n"] = n_values
            return presets.make(self.preset, **overrides)
        if self.p is None or n_values is None:
            raise UsageError("--p and --n are required without --preset")
        return tuple(TrialConfig(**overrides, n=n) for n in n_values)

    def run(self) -> int:
        _check_threshold(self.fail_threshold)
        configs = self.configs()
        for trial_config in configs:
            trial_config.validate()
        out = _prepare_out(self.out)
        manifest = RunManifest(
            command="simulate",
            config={
                "preset": self.preset,
                "runs": [c.to_dict() for c in configs],
                "fail_threshold": self.fail_threshold,
            },
            seed=configs[0].seed,
            started_at=_now(),
        )

        trial_runs, summary_runs, comparisons = [], [], []
        worst_failure_rate = 0.0
        for trial_config in configs:
            records, summaries = run_experiment(
                trial_config,
                batch_size=self.batch_size,
                wandb_project=self.wandb_project,
            )
            trial_runs.append((trial_config.n, records))
            summary_runs.append((trial_config.n, summaries))
            comparisons.append(
                rank_estimators(records, summaries) if len(summaries) > 1 else None
            )
            for tag, summary in summaries.items():
                logger.info(
                    "n=%d %s: mse=%.4g, mean |error|=%.4g, underestimates %.1f%%",
                    trial_config.n,
                    tag,
                    summary.mse,
                    summary.mean_abs_error,
                    100 * summary.risk_underestimate_freq,
                )
                worst_failure_rate = max(worst_failure_rate, summary.failure_rate)

        write_trials_csv(out / "trials.csv", trial_runs)
        write_spread_csv(out / "spread.csv", summary_runs)
        runs = []
        for (n, summaries), comparison in zip(summary_runs, comparisons):
            run = {
                "n": n,
                "summaries": {tag: s.to_dict() for tag, s in summaries.items()},
            }
            if comparison is not None:
                run["comparison"] = comparison.to_dict()
            runs.append(run)
        write_json(
            out / "summary.json",
            {"manifest": manifest.to_dict(timestamps=False), "runs": runs},
        )
        manifest.write(out)

        if worst_failure_rate > self.fail_threshold:
            logger.error(
                "Failure rate %.1f%% exceeds the threshold %.1f%%",
                100 * worst_failure_rate,
                100 * self.fail_threshold,
            )
            return EXIT_NUMERICAL
        return EXIT_OK


@dataclass
class Estimate:
    """Estimate a portfolio from a CSV of returns, writing weights.csv and
    summary.json. Columns are sample-centred first."""

    csv: tyro.conf.Positional[Path]
    """Returns, one row per observation and one column per asset."""
    estimator: str = "sample"
    """sample, locov2, locovk or locovk-rm."""
    k: Optional[int] = None
    """Index set size of locovk and locovk-rm."""
    repetitions: Optional[int] = None
    """Index sets drawn per asset by locovk, defaults to the number of assets."""
    seed: Optional[int] = None
    out: Path = Path("results")
    verbose: bool = False

    def tag(self) -> str:
        if self.k is not None and ":" not in self.estimator:
            return f"{self.estimator}:{self.k}"
        return self.estimator

    def run(self) -> int:
        estimator = make_estimator(self.tag())
        seed = resolve_seed(self.seed)
        seed = 0 if seed is None else seed
        manifest = RunManifest(
            command="estimate",
            config={
                "csv": str(self.csv),
                "estimator": estimator.tag,
                "repetitions": self.repetitions,
            },
            seed=seed,
            started_at=_now(),
        )

        returns, names = read_returns_csv(self.csv)
        cov = sample_covariance(center_returns(returns))
        skips, resamples = 0, 0
        if estimator.name == "sample":
            try:
                weights, _ = min_variance_portfolio(cov)
            except NonInvertibleCovarianceError as e:
                raise NonInvertibleCovarianceError(
                    e.condition, hint="Try --estimator locov2"
                )
        else:
            if estimator.name == "locov2":
                result = locov2_result(cov)
            else:
                result = locovk_result(
                    cov,
                    estimator.k,
                    jax.random.PRNGKey(seed),
                    repetitions=self.repetitions,
                    running_mean=estimator.name == "locovk-rm",
                )
            skips, resamples = int(result.skips), int(result.resamples)
            raise_for_status(result.status, signed_sum=float(result.votes.values.sum()))
            weights = PortfolioWeight.create(result.weights)
        risk = portfolio_risk(weights, cov)
        logger.info(
            "%s in-sample risk %.6g, %d skipped", estimator.tag, float(risk), skips
        )

        out = _prepare_out(self.out)
        write_weights_csv(out / "weights.csv", names, weights.values)
        write_json(
            out / "summary.json",
            {
                "manifest": manifest.to_dict(timestamps=False),
                "n_samples": returns.n_samples,
                "n_assets": returns.dim,
                "in_sample_risk": float(risk),
                "skips": skips,
                "resamples": resamples,
            },
        )
        manifest.write(out)
        return EXIT_OK


@dataclass
class Sweep:
    """Fit the log-log decay of the weight error over a grid of n, writing
    scaling.json and scaling.csv."""

    n_grid: str
    """Comma separated, at least 3 increasing values spanning a decade."""
    p: int = 30
    trials: int = 200
    seed: Optional[int] = None
    sigma: str = "identity"
    basis: Literal["identity", "haar"] = "identity"
    noise: Literal["gaussian", "rademacher", "uniform"] = "gaussian"
    estimator: str = "sample"
    out: Path = Path("results")
    fail_threshold: float = 0.1
    batch_size: Optional[int] = None
    verbose: bool = False

    def run(self) -> int:
        _check_threshold(self.fail_threshold)
        n_grid = parse_ints(self.n_grid, "--n-grid")
        seed = resolve_seed(self.seed)
        trial_config = TrialConfig(
            p=self.p,
            n=n_grid[0],
            sigma=self.sigma,
            basis=self.basis,
            noise=self.noise,
            trials=self.trials,
            seed=0 if seed is None else seed,
            estimators=(self.estimator,),
        )
        trial_config.validate()
        manifest = RunManifest(
            command="sweep",
            config={**trial_config.to_dict(), "n_grid": list(n_grid)},
            seed=trial_config.seed,
            started_at=_now(),
        )
        fit = scaling_sweep(
            trial_config,
            n_grid,
            batch_size=self.batch_size,
            fail_threshold=self.fail_threshold,
        )
        logger.info("log-log slope %.4f +/- %.4f", fit.loglog_slope, fit.slope_stderr)

        out = _prepare_out(self.out)
        write_json(
            out / "scaling.json",
            {"manifest": manifest.to_dict(timestamps=False), **fit.to_dict()},
        )
        write_scaling_csv(out / "scaling.csv", fit)
        manifest.write(out)
        return EXIT_OK


Command = Union[
    Annotated[Simulate, tyro.conf.subcommand("simulate")],
    Annotated[Estimate, tyro.conf.subcommand("estimate")],
    Annotated[Sweep, tyro.conf.subcommand("sweep")],
]


def main(args: Optional[Sequence[str]] = None) -> int:
    """Parses `args` and runs the command, returning the exit code."""
    try:
        command = tyro.cli(Command, args=args, prog="locovx")
    except SystemExit as e:
        return EXIT_OK if e.code in (0, None) else EXIT_USAGE

    logging.basicConfig(
        level=logging.DEBUG if command.verbose else logging.INFO,
        format="%(asctime)s %(name)s %(levelname)s: %(message)s",
    )
    try:
        return command.run()
    except LocovError as e:
        logger.error("%s", e)
        return e.exit_code


def entrypoint() -> None:
    raise SystemExit(main())


__all__: List[str] = [
    "main",
    "entrypoint",
    "RunManifest",
    "Simulate",
    "Estimate",
    "Sweep",
]
