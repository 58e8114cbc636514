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
"""Monte Carlo harness for sample-covariance portfolios.

A run fixes a ground truth $\\Sigma = P^T D^2 P$, then for each trial samples
returns, forms $\\hat{\\Sigma}$ and applies every configured estimator. Errors are
measured against the analytic optimum $w^*$ and $R(w^*)$."""
from __future__ import annotations
from dataclasses import asdict
import logging
import math
import time
from typing import Any, Callable, Dict, List, Literal, Sequence, Tuple
import zlib

import numpy as np
import jax
import jax.numpy as jnp
from jax import Array
from flax import struct
import wandb

from .config import config
from .covmodel import (
    NOISE_DISTS,
    NoiseDist,
    SpectralModel,
    build_covariance,
    marchenko_pastur_edges,
    returns_from_noise,
    sample_covariance,
    sample_haar_orthogonal,
    sample_noise,
    whitened_spectrum,
)
from .errors import InputError, Status, SweepError
from .estimators import Estimator, parse_estimators
from .minvar import (
    PortfolioWeight,
    RiskValue,
    free_optimal_weight,
    min_variance_portfolio,
    solve_free_weight,
)


logger = logging.getLogger(__name__)

THEOREM_BAND_CONSTANT = 10.0
"""Constant `C` of the band
$\\|S_{\\hat\\Sigma} - S_\\Sigma\\|_2 \\le C \\|S_\\Sigma\\|_2
(\\sigma_{max}/\\sigma_{min}) \\sqrt{p/n}$."""
MP_SLACK = 0.5
"""Relative slack around the Marchenko-Pastur edges."""


class TrialConfig(struct.PyTreeNode):
    """Configuration of a Monte Carlo run.

    Attributes:
        p (int): Number of assets, at least 2.
        n (int): Number of observations per trial, at least 1.
        sigma (str): Eigenvalues $\\sigma_k^2$ of $\\Sigma$: `identity`,
            `linspace:<lo>:<hi>` or `list:<v1>,<v2>,...`.
        basis (str): `identity` or `haar`. A Haar basis is drawn once per run.
        noise (str): Noise distribution, `gaussian`, `rademacher` or `uniform`.
        trials (int): Number of trials, at least 1.
        seed (int): 64-bit master seed.
        estimators (Tuple[str, ...]): Estimator tags, see `estimators.make`."""

    p: int = struct.field(pytree_node=False, default=30)
    n: int = struct.field(pytree_node=False, default=30)
    sigma: str = struct.field(pytree_node=False, default="identity")
    basis: Literal["identity", "haar"] = struct.field(
        pytree_node=False, default="identity"
    )
    noise: NoiseDist = struct.field(pytree_node=False, default="gaussian")
    trials: int = struct.field(pytree_node=False, default=300)
    seed: int = struct.field(pytree_node=False, default=0)
    estimators: Tuple[str, ...] = struct.field(
        pytree_node=False, default=("sample",)
    )

    def validate(self) -> Tuple[Estimator, ...]:
        """Checks the configuration and parses its estimators.

        Raises:
            InputError: on any invalid field."""
        if self.p < 2:
            raise InputError(f"p must be at least 2, got {self.p}")
        if self.n < 1:
            raise InputError(f"n must be at least 1, got {self.n}")
        if self.trials < 1:
            raise InputError(f"trials must be at least 1, got {self.trials}")
        if self.basis not in ("identity", "haar"):
            raise InputError(f"basis must be identity or haar, got {self.basis}")
        if self.noise not in NOISE_DISTS:
            raise InputError(f"noise must be one of {NOISE_DISTS}, got {self.noise}")
        if not -(2**63) <= self.seed < 2**63:
            raise InputError(f"seed must fit in 64 bits, got {self.seed}")
        parse_sigma(self.sigma, self.p)
        estimators = parse_estimators(self.estimators)
        for estimator in estimators:
            if estimator.k > self.p:
                raise InputError(
                    f"Estimator {estimator.tag} needs k <= p, got p={self.p}"
                )
        return estimators

    def to_dict(self) -> Dict[str, Any]:
        config_dict = asdict(self)
        config_dict["estimators"] = list(self.estimators)
        return config_dict


class TrialRecord(struct.PyTreeNode):
    """The output of one estimator on one trial.

    Failed trials keep their `status` and are excluded from the summaries.

    Attributes:
        trial_id (int): The trial index.
        estimator (str): The estimator tag.
        weights (np.ndarray): The estimated portfolio $\\hat{w}$.
        sample_risk (float): $\\hat{w}^T \\hat{\\Sigma} \\hat{w}$.
        oracle_risk (float): $\\hat{w}^T \\Sigma \\hat{w}$.
        weight_error (np.ndarray): $\\hat{w} - w^*$.
        mean_abs_error (float): Mean over assets of $|\\hat{w}_k - w^*_k|$.
        free_weight_error (float): $\\|S_{\\hat\\Sigma} - S_\\Sigma\\|_2$, shared
            by all estimators of a trial.
        status (int): A `Status` code.
        skips (int): Sub-problems dropped by LoCoV."""

    trial_id: int = struct.field(pytree_node=False)
    estimator: str = struct.field(pytree_node=False)
    weights: np.ndarray
    sample_risk: float
    oracle_risk: float
    weight_error: np.ndarray
    mean_abs_error: float
    free_weight_error: float
    status: int = struct.field(pytree_node=False, default=Status.OK)
    skips: int = struct.field(pytree_node=False, default=0)

    @property
    def ok(self) -> bool:
        return self.status == Status.OK


class ErrorSummary(struct.PyTreeNode):
    """Error statistics of one estimator over the successful trials of a run."""

    estimator: str = struct.field(pytree_node=False)
    n_trials: int = struct.field(pytree_node=False)
    n_failures: int = struct.field(pytree_node=False)
    true_weights: np.ndarray
    true_risk: float
    mean_weights: np.ndarray
    std_weights: np.ndarray
    per_asset_mean_error: np.ndarray
    per_asset_std_error: np.ndarray
    mse: float
    mean_abs_error: float
    median_abs_error: float
    risk_underestimate_freq: float
    risk_ratio_mean: float
    risk_ratio_std: float
    oracle_risk_mean: float
    theorem_band_freq: float
    mp_within_freq: float

    @property
    def failure_rate(self) -> float:
        return self.n_failures / self.n_trials

    def to_dict(self) -> Dict[str, Any]:
        return {
            k: (v.tolist() if isinstance(v, np.ndarray) else v)
            for k, v in asdict(self).items()
        }


class ScalingFit(struct.PyTreeNode):
    """A least-squares fit of log median error against log n."""

    estimator: str = struct.field(pytree_node=False)
    p: int = struct.field(pytree_node=False)
    n_grid: Tuple[int, ...] = struct.field(pytree_node=False)
    median_errors: Tuple[float, ...] = struct.field(pytree_node=False)
    loglog_slope: float = struct.field(pytree_node=False)
    slope_stderr: float = struct.field(pytree_node=False)
    band_freqs: Tuple[float, ...] = struct.field(pytree_node=False)
    failure_rates: Tuple[float, ...] = struct.field(pytree_node=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            k: (list(v) if isinstance(v, tuple) else v)
            for k, v in asdict(self).items()
        }


class Comparison(struct.PyTreeNode):
    """Summaries of several estimators with their pairwise win rates.

    Attributes:
        summaries (Dict[str, ErrorSummary]): One summary per estimator tag.
        win_rates (Dict[Tuple[str, str], float]): Fraction of trials, among those
            where both succeeded, in which the first estimator has a lower mean
            absolute weight error than the second.
        ranking (Tuple[str, ...]): Tags sorted by increasing MSE."""

    summaries: Dict[str, ErrorSummary] = struct.field(pytree_node=False)
    win_rates: Dict[Tuple[str, str], float] = struct.field(pytree_node=False)
    ranking: Tuple[str, ...] = struct.field(pytree_node=False)

    def to_dict(self) -> Dict[str, Any]:
        """The ranking and the win rates, nested as `win_rates[a][b]`."""
        win_rates: Dict[str, Dict[str, float]] = {}
        for (a, b), rate in self.win_rates.items():
            win_rates.setdefault(a, {})[b] = rate
        return {"ranking": list(self.ranking), "win_rates": win_rates}


def parse_sigma(spec: str, p: int) -> Array:
    """Parses the eigenvalues of $\\Sigma$ from `identity`, `linspace:<lo>:<hi>` or
    `list:<v1>,...,<vp>`.

    Raises:
        InputError: if the spec is malformed, of the wrong length or not positive."""
    kind, _, arg = spec.strip().partition(":")
    try:
        if kind == "identity" and not arg:
            eigenvalues = np.ones(p)
        elif kind == "linspace":
            lo, hi = (float(v) for v in arg.split(":"))
            eigenvalues = np.linspace(lo, hi, p)
        elif kind == "list":
            eigenvalues = np.asarray([float(v) for v in arg.split(",")])
        else:
            raise InputError(
                f"Unknown sigma {spec}, expected identity, linspace:lo:hi or list:..."
            )
    except ValueError:
        raise InputError(f"Malformed sigma {spec}")
    if eigenvalues.shape != (p,):
        raise InputError(f"sigma {spec} gives {eigenvalues.size} values for p={p}")
    if not np.all(eigenvalues > 0):
        raise InputError(f"sigma {spec} has non-positive eigenvalues")
    return jnp.asarray(eigenvalues, dtype=jnp.float64)


def spectral_model(config_: TrialConfig) -> SpectralModel:
    """The ground truth of a run. A Haar basis is drawn from a stream of its own,
    so it is fixed across trials and independent of the trial streams."""
    eigenvalues = parse_sigma(config_.sigma, config_.p)
    basis = None
    if config_.basis == "haar":
        basis_key = jax.random.fold_in(jax.random.PRNGKey(config_.seed), 0)
        basis = sample_haar_orthogonal(config_.p, basis_key)
    return SpectralModel.from_eigenvalues(eigenvalues, basis)


def true_portfolio(model: SpectralModel) -> Tuple[PortfolioWeight, RiskValue]:
    """The analytic optimum $w^*$ and $R(w^*)$ of a model."""
    return min_variance_portfolio(build_covariance(model))


def trial_keys(seed: int, trials: int) -> Array:
    """One key per trial, `fold_in(fold_in(PRNGKey(seed), 1), trial_id)`."""
    root = jax.random.fold_in(jax.random.PRNGKey(seed), 1)
    return jax.vmap(lambda t: jax.random.fold_in(root, t))(jnp.arange(trials))


def estimator_stream(tag: str) -> int:
    """A stable sub-stream id for an estimator tag; stream 0 is the noise."""
    return 1 + (zlib.crc32(tag.encode()) & 0x3FFFFFFF)


def _make_trial(
    model: SpectralModel,
    n: int,
    noise: NoiseDist,
    estimators: Sequence[Estimator],
) -> Callable[[Array], Dict[str, Any]]:
    p = model.dim
    true_cov = build_covariance(model)
    cov = true_cov.entries
    true_free_weight = free_optimal_weight(true_cov).values
    ratio = model.eigen_sds.max() / model.eigen_sds.min()
    band = (
        THEOREM_BAND_CONSTANT
        * jnp.linalg.norm(true_free_weight)
        * ratio
        * math.sqrt(p / n)
    )
    mp_lower, mp_upper = marchenko_pastur_edges(p, n)
    degeneracy_tol = config.DEGENERACY_TOL

    def trial(key: Array) -> Dict[str, Any]:
        noise_matrix = sample_noise(jax.random.fold_in(key, 0), (n, p), noise)
        returns = returns_from_noise(model, noise_matrix)
        estimate = sample_covariance(returns).entries

        free_weight, invertible, _ = solve_free_weight(estimate, degeneracy_tol)
        free_weight_error = jnp.where(
            invertible, jnp.linalg.norm(free_weight - true_free_weight), jnp.nan
        )
        spectrum = whitened_spectrum(returns, model)
        mp_within = spectrum[-1] <= mp_upper * (1.0 + MP_SLACK)
        if mp_lower > 0:
            mp_within = jnp.logical_and(
                mp_within, spectrum[0] >= mp_lower * (1.0 - MP_SLACK)
            )
        out = {
            "free_weight_error": free_weight_error,
            "within_band": jnp.logical_and(invertible, free_weight_error <= band),
            "invertible": invertible,
            "mp_within": mp_within,
        }
        for estimator in estimators:
            subkey = jax.random.fold_in(key, estimator_stream(estimator.tag))
            weights, status, skips = estimator(estimate, subkey)
            out[estimator.tag] = {
                "weights": weights,
                "status": status,
                "skips": skips,
                "sample_risk": weights @ estimate @ weights,
                "oracle_risk": weights @ cov @ weights,
            }
        return out

    return trial


def _summarize(
    tag: str,
    records: List[TrialRecord],
    true_weights: np.ndarray,
    true_risk: float,
    within_band: np.ndarray,
    invertible: np.ndarray,
    mp_within: np.ndarray,
) -> ErrorSummary:
    ok = [r for r in records if r.ok]
    n_failures = len(records) - len(ok)
    p = true_weights.shape[0]
    if ok:
        weights = np.stack([r.weights for r in ok])
        errors = weights - true_weights[None, :]
        sample_risks = np.asarray([r.sample_risk for r in ok])
        oracle_risks = np.asarray([r.oracle_risk for r in ok])
        abs_errors = np.asarray([r.mean_abs_error for r in ok])
        ratios = sample_risks / true_risk
        stats = dict(
            mean_weights=weights.mean(axis=0),
            std_weights=weights.std(axis=0),
            per_asset_mean_error=errors.mean(axis=0),
            per_asset_std_error=errors.std(axis=0),
            mse=float(np.mean(errors**2)),
            mean_abs_error=float(np.mean(np.abs(errors))),
            median_abs_error=float(np.median(abs_errors)),
            # ties count as no underestimate
            risk_underestimate_freq=float(np.mean(sample_risks < true_risk)),
            risk_ratio_mean=float(np.mean(ratios)),
            risk_ratio_std=float(np.std(ratios)),
            oracle_risk_mean=float(np.mean(oracle_risks)),
        )
    else:
        nan_vector = np.full(p, np.nan)
        stats = dict(
            mean_weights=nan_vector,
            std_weights=nan_vector,
            per_asset_mean_error=nan_vector,
            per_asset_std_error=nan_vector,
            mse=math.nan,
            mean_abs_error=math.nan,
            median_abs_error=math.nan,
            risk_underestimate_freq=math.nan,
            risk_ratio_mean=math.nan,
            risk_ratio_std=math.nan,
            oracle_risk_mean=math.nan,
        )
    band_freq = math.nan
    if tag == "sample" and invertible.any():
        band_freq = float(np.mean(within_band[invertible]))
    return ErrorSummary(
        estimator=tag,
        n_trials=len(records),
        n_failures=n_failures,
        true_weights=true_weights,
        true_risk=true_risk,
        theorem_band_freq=band_freq,
        mp_within_freq=float(np.mean(mp_within)),
        **stats,
    )


def run_experiment(
    config_: TrialConfig,
    batch_size: int | None = None,
    wandb_project: str | None = None,
) -> Tuple[List[TrialRecord], Dict[str, ErrorSummary]]:
    """Runs `config_.trials` independent trials of every configured estimator.

    Each trial draws from `trial_keys(seed)[trial_id]`, and each estimator from
    its own sub-stream of it. Trials are vmapped in batches of `batch_size`,
    the last batch padded to full size, so every batch runs the same compiled
    executable and the output does not depend on `batch_size`.

    Args:
        config_ (TrialConfig): The run configuration.
        batch_size (int | None): Trials evaluated together in one vmapped call,
            defaults to `config.TRIAL_BATCH`.
        wandb_project (str | None): If given, log the summaries to this
            `wandb` project.

    Returns:
        Tuple[List[TrialRecord], Dict[str, ErrorSummary]]: `trials x estimators`
        records, ordered by trial then estimator, and one summary per estimator.

    Raises:
        InputError: if the configuration is invalid."""
    estimators = config_.validate()
    batch_size = config.TRIAL_BATCH if batch_size is None else batch_size
    if batch_size < 1:
        raise InputError(f"batch_size must be at least 1, got {batch_size}")
    batch_size = min(batch_size, config_.trials)
    logger.info("Running experiment with configuration %s", config_.to_dict())

    model = spectral_model(config_)
    true_weights, true_risk = true_portfolio(model)
    true_weights = np.asarray(true_weights.values)
    true_risk = float(true_risk)
    keys = trial_keys(config_.seed, config_.trials)

    start_time = time.time()
    trial_fn = jax.jit(
        jax.vmap(_make_trial(model, config_.n, config_.noise, estimators))
    )
    trial_fn = trial_fn.lower(keys[:batch_size]).compile()
    compilation_time = time.time() - start_time
    logger.debug("Compilation time cost: %.3fs", compilation_time)

    start_time = time.time()
    batches = []
    for start in range(0, config_.trials, batch_size):
        batch = keys[start : start + batch_size]
        missing = batch_size - batch.shape[0]
        if missing:
            # padded trials repeat the last key and are dropped below
            batch = jnp.concatenate([batch, jnp.repeat(batch[-1:], missing, axis=0)])
        batches.append(jax.device_get(trial_fn(batch)))
    outputs = jax.tree.map(
        lambda *leaves: np.concatenate(leaves)[: config_.trials], *batches
    )
    simulation_time = time.time() - start_time
    logger.debug("Simulation time cost: %.3fs", simulation_time)

    records: List[TrialRecord] = []
    for trial_id in range(config_.trials):
        for estimator in estimators:
            result = outputs[estimator.tag]
            weights = np.asarray(result["weights"][trial_id])
            error = weights - true_weights
            records.append(
                TrialRecord(
                    trial_id=trial_id,
                    estimator=estimator.tag,
                    weights=weights,
                    sample_risk=float(result["sample_risk"][trial_id]),
                    oracle_risk=float(result["oracle_risk"][trial_id]),
                    weight_error=error,
                    mean_abs_error=float(np.mean(np.abs(error))),
                    free_weight_error=float(outputs["free_weight_error"][trial_id]),
                    status=int(result["status"][trial_id]),
                    skips=int(result["skips"][trial_id]),
                )
            )

    within_band = np.asarray(outputs["within_band"], dtype=bool)
    invertible = np.asarray(outputs["invertible"], dtype=bool)
    mp_within = np.asarray(outputs["mp_within"], dtype=bool)
    summaries = {}
    for estimator in estimators:
        tag = estimator.tag
        summaries[tag] = _summarize(
            tag,
            [r for r in records if r.estimator == tag],
            true_weights,
            true_risk,
            within_band,
            invertible,
            mp_within,
        )
        if summaries[tag].n_failures:
            logger.warning(
                "%s failed in %d of %d trials",
                tag,
                summaries[tag].n_failures,
                config_.trials,
            )
    logger.info(
        "Experiment done in %.3fs (compilation %.3fs)",
        compilation_time + simulation_time,
        compilation_time,
    )

    if wandb_project is not None:
        log_to_wandb(wandb_project, config_, summaries)
    return records, summaries


def log_to_wandb(
    project: str, config_: TrialConfig, summaries: Dict[str, ErrorSummary]
) -> None:
    """Logs the scalar fields of each summary to a new `wandb` run.

    !!! Warning
        Logging to `wandb` is usually much slower than the experiment itself."""
    wandb.init(project=project, config=config_.to_dict())
    logs = {}
    for tag, summary in summaries.items():
        for name, value in summary.to_dict().items():
            if isinstance(value, (int, float)) and not isinstance(value, bool):
                logs[f"{tag}/{name}"] = value
    wandb.log(logs)
    wandb.finish()


def compare_estimators(
    config_: TrialConfig, batch_size: int | None = None
) -> Comparison:
    """Runs an experiment and ranks its estimators.

    Raises:
        InputError: if fewer than 2 estimators are configured."""
    if len(config_.estimators) < 2:
        raise InputError("Comparing estimators needs at least 2 of them")
    records, summaries = run_experiment(config_, batch_size=batch_size)
    return rank_estimators(records, summaries)


def rank_estimators(
    records: Sequence[TrialRecord], summaries: Dict[str, ErrorSummary]
) -> Comparison:
    """Pairwise win rates and the MSE ranking of an experiment's estimators.
    Estimators that never succeeded rank last."""
    errors: Dict[str, np.ndarray] = {}
    for tag in summaries:
        errors[tag] = np.asarray(
            [
                r.mean_abs_error if r.ok else np.nan
                for r in records
                if r.estimator == tag
            ]
        )

    win_rates = {}
    for a in summaries:
        for b in summaries:
            if a == b:
                continue
            both = np.isfinite(errors[a]) & np.isfinite(errors[b])
            win_rates[(a, b)] = math.nan
            if both.any():
                win_rates[(a, b)] = float(np.mean(errors[a][both] < errors[b][both]))
    ranking = tuple(
        sorted(
            summaries,
            key=lambda tag: (math.isnan(summaries[tag].mse), summaries[tag].mse),
        )
    )
    return Comparison(summaries=summaries, win_rates=win_rates, ranking=ranking)


def fit_loglog(n_grid: Sequence[int], errors: Sequence[float]) -> Tuple[float, float]:
    """Least-squares slope of `log(errors)` against `log(n_grid)` and its standard
    error (0 for a two-point fit)."""
    x = np.log(np.asarray(n_grid, dtype=np.float64))
    y = np.log(np.asarray(errors, dtype=np.float64))
    dx = x - x.mean()
    sxx = float(np.sum(dx**2))
    slope = float(np.sum(dx * (y - y.mean())) / sxx)
    intercept = y.mean() - slope * x.mean()
    residuals = y - (intercept + slope * x)
    dof = len(x) - 2
    stderr = math.sqrt(float(np.sum(residuals**2)) / dof / sxx) if dof > 0 else 0.0
    return slope, stderr


def scaling_sweep(
    config_: TrialConfig,
    n_grid: Sequence[int],
    batch_size: int | None = None,
    fail_threshold: float | None = None,
) -> ScalingFit:
    """Fits the decay of the weight error with the number of observations.

    For each `n`, runs the first configured estimator and records the median over
    trials of the mean absolute weight error, then fits the log-log slope.

    Args:
        config_ (TrialConfig): The run configuration, `n` is ignored.
        n_grid (Sequence[int]): At least 3 increasing values spanning a decade,
            all `>= p`.
        batch_size (int | None): Trials evaluated together per vmapped call.
        fail_threshold (float | None): Tolerated failure fraction per point,
            defaults to `config.FAIL_THRESHOLD`.

    Raises:
        InputError: if the grid is invalid.
        SweepError: if more than `fail_threshold` of the trials fail at
            some grid point."""
    n_grid = tuple(int(n) for n in n_grid)
    if len(n_grid) < 3:
        raise InputError(f"A sweep needs at least 3 grid points, got {len(n_grid)}")
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise InputError(f"Grid {n_grid} must be strictly increasing")
    if n_grid[-1] < 10 * n_grid[0]:
        raise InputError(f"Grid {n_grid} must span at least one decade")
    if n_grid[0] < config_.p:
        raise InputError(f"Every n must be at least p={config_.p}, got {n_grid[0]}")
    if n_grid[0] < 2 * config_.p:
        logger.warning(
            "Grid starts below n = 2p, singular trials may bias the fitted slope"
        )

    if fail_threshold is None:
        fail_threshold = config.FAIL_THRESHOLD
    tag = parse_estimators(config_.estimators)[0].tag
    medians, band_freqs, failure_rates = [], [], []
    for n in n_grid:
        logger.info("Sweeping n=%d", n)
        _, summaries = run_experiment(
            config_.replace(n=n, estimators=(tag,)), batch_size=batch_size
        )
        summary = summaries[tag]
        if summary.failure_rate > fail_threshold:
            raise SweepError(n, summary.failure_rate)
        medians.append(summary.median_abs_error)
        band_freqs.append(summary.theorem_band_freq)
        failure_rates.append(summary.failure_rate)

    slope, stderr = fit_loglog(n_grid, medians)
    logger.info("Fitted log-log slope %.4f +/- %.4f", slope, stderr)
    return ScalingFit(
        estimator=tag,
        p=config_.p,
        n_grid=n_grid,
        median_errors=tuple(medians),
        loglog_slope=slope,
        slope_stderr=stderr,
        band_freqs=tuple(band_freqs),
        failure_rates=tuple(failure_rates),
    )
