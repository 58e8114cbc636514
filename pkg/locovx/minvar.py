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
"""Closed-form minimum-variance portfolios.

For an invertible covariance $A$, the problem $\\min_w w^T A w$ s.t.
$w^T \\mathbb{1} = 1$ is solved by the free optimal weight $S = A^{-1}\\mathbb{1}$,
normalised as $w^* = S / \\|S\\|_s$ where $\\|S\\|_s = \\sum_k s_k$. The minimum
risk is $R(w^*) = \\|S\\|_s^{-1}$.

The functions `solve_free_weight` and `solve_min_variance` are traceable and
return a `Status` code instead of raising. The remaining functions are the
host-level API."""
from __future__ import annotations
from typing import Tuple

import jax
import jax.numpy as jnp
from jax import Array
from jax.scipy.linalg import cho_factor, cho_solve
from flax import struct

from .config import config
from .covmodel import CovarianceMatrix
from .errors import (
    AmbiguousPortfolioError,
    InputError,
    NonInvertibleCovarianceError,
    Status,
)


class FreeWeight(struct.PyTreeNode):
    """The unnormalised solution $S$ of the first-order conditions.

    Attributes:
        values (Array): The free weights $s_1, \\dots, s_p$.
        signed_sum (Array): $\\|S\\|_s = \\sum_k s_k$."""

    values: Array
    signed_sum: Array

    @classmethod
    def create(cls, values: Array) -> FreeWeight:
        values = jnp.asarray(values, dtype=jnp.float64)
        return cls(values=values, signed_sum=jnp.sum(values))


class PortfolioWeight(struct.PyTreeNode):
    """Portfolio weights summing to one. Entries may be negative, shorting is
    allowed."""

    values: Array

    @classmethod
    def create(cls, values: Array) -> PortfolioWeight:
        values = jnp.asarray(values, dtype=jnp.float64)
        if config.ARRAY_CHECKS_ENABLED:
            total = float(jnp.sum(values))
            if abs(total - 1.0) > 1e-10:
                raise InputError(f"Portfolio weights must sum to 1, got {total}")
        return cls(values=values)

    @property
    def dim(self) -> int:
        return self.values.shape[0]


class RiskValue(struct.PyTreeNode):
    """A portfolio variance, in units of squared returns."""

    value: Array

    def __float__(self) -> float:
        return float(self.value)


def solve_free_weight(
    entries: Array, degeneracy_tol: float
) -> Tuple[Array, Array, Array]:
    """Solves $A S = \\mathbb{1}$ with a Cholesky factorisation.

    Args:
        entries (Array): A symmetric `p x p` matrix.
        degeneracy_tol (float): The relative smallest-eigenvalue threshold.

    Returns:
        Tuple[Array, Array, Array]: The free weight (NaN where not invertible), a
        boolean flag of invertibility and the condition estimate."""
    eigenvalues = jnp.linalg.eigvalsh(entries)
    lowest, highest = eigenvalues[0], eigenvalues[-1]
    invertible = lowest > degeneracy_tol * highest
    condition = jnp.where(
        lowest > 0, highest / jnp.where(lowest > 0, lowest, 1.0), jnp.inf
    )
    # factorise a well-posed matrix in the degenerate branch to keep NaNs out
    identity = jnp.eye(entries.shape[0], dtype=entries.dtype)
    safe = jnp.where(invertible, entries, identity)
    factor = cho_factor(safe, lower=True)
    values = cho_solve(factor, jnp.ones(entries.shape[0], dtype=entries.dtype))
    values = jnp.where(invertible, values, jnp.nan)
    return values, invertible, condition


def is_normalizable(values: Array, normalization_tol: float) -> Array:
    """Whether $|\\|S\\|_s| > tol \\cdot \\|S\\|_2 \\cdot p$."""
    p = values.shape[0]
    return jnp.abs(jnp.sum(values)) > normalization_tol * jnp.linalg.norm(values) * p


def solve_min_variance(
    entries: Array, degeneracy_tol: float, normalization_tol: float
) -> Tuple[Array, Array, Array]:
    """Traceable minimum-variance solve.

    Args:
        entries (Array): A symmetric `p x p` covariance.
        degeneracy_tol (float): The relative smallest-eigenvalue threshold.
        normalization_tol (float): The signed-sum ambiguity threshold.

    Returns:
        Tuple[Array, Array, Array]: The normalised weight $w$, the free weight $S$,
        and a `Status` code."""
    values, invertible, _ = solve_free_weight(entries, degeneracy_tol)
    normalizable = is_normalizable(values, normalization_tol)
    status = jnp.where(
        invertible,
        jnp.where(normalizable, Status.OK, Status.AMBIGUOUS),
        Status.SINGULAR,
    )
    weights = values / jnp.sum(values)
    return weights, values, status


_solve_free_weight = jax.jit(solve_free_weight)


def free_optimal_weight(cov: CovarianceMatrix) -> FreeWeight:
    """Computes the free optimal weight $S = A^{-1} \\mathbb{1}$ without forming the
    inverse.

    Args:
        cov (CovarianceMatrix): An invertible covariance.

    Returns:
        FreeWeight: The free weight and its signed sum.

    Raises:
        NonInvertibleCovarianceError: if the smallest eigenvalue of `cov` is not
            above `config.DEGENERACY_TOL` times the largest."""
    values, invertible, condition = _solve_free_weight(
        cov.entries, config.DEGENERACY_TOL
    )
    if not bool(invertible):
        raise NonInvertibleCovarianceError(float(condition))
    return FreeWeight.create(values)


def _check_signed_sum(free_weight: FreeWeight) -> None:
    if not bool(is_normalizable(free_weight.values, config.NORMALIZATION_TOL)):
        raise AmbiguousPortfolioError(float(free_weight.signed_sum))


def normalize(free_weight: FreeWeight) -> PortfolioWeight:
    """Rescales a free weight to the optimal portfolio $w^* = S / \\|S\\|_s$.

    Raises:
        AmbiguousPortfolioError: if the signed sum is within tolerance of zero."""
    _check_signed_sum(free_weight)
    return PortfolioWeight.create(free_weight.values / free_weight.signed_sum)


def optimal_risk(free_weight: FreeWeight) -> RiskValue:
    """The minimum portfolio risk $R(w^*) = \\|S\\|_s^{-1}$.

    Raises:
        AmbiguousPortfolioError: if the signed sum is not positive beyond
            tolerance. A negative sum from a PSD covariance signals a breakdown."""
    _check_signed_sum(free_weight)
    if float(free_weight.signed_sum) <= 0:
        raise AmbiguousPortfolioError(float(free_weight.signed_sum))
    return RiskValue(value=1.0 / free_weight.signed_sum)


def portfolio_risk(weights: PortfolioWeight, cov: CovarianceMatrix) -> RiskValue:
    """Evaluates $w^T A w$ for any weight vector and covariance.

    Raises:
        InputError: if the dimensions do not match."""
    if weights.dim != cov.dim:
        raise InputError(
            f"Weights have {weights.dim} assets but covariance has {cov.dim}"
        )
    w = weights.values
    return RiskValue(value=w @ cov.entries @ w)


def min_variance_portfolio(cov: CovarianceMatrix) -> Tuple[PortfolioWeight, RiskValue]:
    """Shortcut for `normalize` and `optimal_risk` of `free_optimal_weight(cov)`."""
    free_weight = free_optimal_weight(cov)
    return normalize(free_weight), optimal_risk(free_weight)
