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
"""Low dimension covariance voting (LoCoV).

Instead of inverting the full `p x p` sample covariance, LoCoV solves many small
minimum-variance problems on `k x k` sub-blocks, whose feature-to-sample ratio
`k / n` is small, and lets the resulting relative weights vote on each asset.

Votes are recorded in a relative-weight matrix $U$, where row `i` collects the
weights asset `i` received. The free weight $V_i$ is the mean of row `i`, and the
portfolio is $V / \\|V\\|_s$."""
from __future__ import annotations
from functools import partial
import logging
from typing import Sequence, Tuple

import jax
import jax.numpy as jnp
from jax import Array
from flax import struct

from .config import config
from .covmodel import CovarianceMatrix
from .errors import InputError, Status, raise_for_status
from .minvar import PortfolioWeight, is_normalizable, solve_min_variance


logger = logging.getLogger(__name__)


class RelativeWeightMatrix(struct.PyTreeNode):
    """The `p x p` vote ledger $U$. Initialised to $I/2$ for LoCoV-2 and to
    $\\mathbb{1}\\mathbb{1}^T / k$ for LoCoV-k."""

    entries: Array

    @property
    def dim(self) -> int:
        return self.entries.shape[0]


class VoteVector(struct.PyTreeNode):
    """The free weights $V$ obtained by uniform voting over the rows of $U$."""

    values: Array


class VotingResult(struct.PyTreeNode):
    """The full outcome of a LoCoV run.

    Attributes:
        weights (Array): The normalised portfolio $V / \\|V\\|_s$.
        votes (VoteVector): The free weights $V$.
        relative_weights (RelativeWeightMatrix): The final ledger $U$.
        skips (Array): Number of sub-problems dropped because their block was
            singular (after retries, for LoCoV-k).
        resamples (Array): Number of LoCoV-k index sets redrawn after a singular
            block. Always 0 for LoCoV-2.
        status (Array): A `Status` code."""

    weights: Array
    votes: VoteVector
    relative_weights: RelativeWeightMatrix
    skips: Array
    resamples: Array
    status: Array


def solve_subproblem(
    entries: Array,
    index_set: Array,
    degeneracy_tol: float,
    normalization_tol: float,
) -> Tuple[Array, Array]:
    """Traceable sub-portfolio solve on the block of `index_set`.

    Returns:
        Tuple[Array, Array]: The normalised relative weights of the block and a
        flag that is False when the block is singular or ambiguous."""
    block = entries[index_set[:, None], index_set[None, :]]
    weights, _, status = solve_min_variance(block, degeneracy_tol, normalization_tol)
    return weights, status == Status.OK


def subproblem_weights(
    cov: CovarianceMatrix, index_set: Sequence[int]
) -> Array | None:
    """Solves the minimum-variance problem restricted to the assets in `index_set`.

    Args:
        cov (CovarianceMatrix): The full covariance.
        index_set (Sequence[int]): At least 2 distinct asset indices.

    Returns:
        Array | None: The normalised weights of the sub-portfolio, in the order of
        `index_set`, or None when the sub-block is singular and the vote must be
        dropped.

    Raises:
        InputError: if `index_set` has fewer than 2 entries, repeats an index, or
            refers to an asset outside the covariance."""
    indices = [int(i) for i in index_set]
    if len(indices) < 2:
        raise InputError(f"A sub-problem needs at least 2 assets, got {len(indices)}")
    if len(set(indices)) != len(indices):
        raise InputError(f"Index set {indices} repeats an asset")
    if min(indices) < 0 or max(indices) >= cov.dim:
        raise InputError(f"Index set {indices} out of range for {cov.dim} assets")
    weights, ok = _solve_subproblem(
        cov.entries,
        jnp.asarray(indices),
        config.DEGENERACY_TOL,
        config.NORMALIZATION_TOL,
    )
    if not bool(ok):
        return None
    return weights


_solve_subproblem = jax.jit(solve_subproblem)


def normalize_votes(
    votes: Array, normalization_tol: float
) -> Tuple[Array, Array]:
    ok = is_normalizable(votes, normalization_tol)
    return votes / jnp.sum(votes), jnp.where(ok, Status.OK, Status.AMBIGUOUS)


def vote2(
    entries: Array, degeneracy_tol: float, normalization_tol: float
) -> VotingResult:
    """Traceable LoCoV-2.

    Every pair `i < j` is solved independently, so the pair solves are batched.
    A singular pair leaves its two entries of $U$ at their initial value, zero."""
    p = entries.shape[0]
    rows, cols = jnp.triu_indices(p, k=1)
    pairs = jnp.stack([rows, cols], axis=1)
    u, ok = jax.vmap(solve_subproblem, in_axes=(None, 0, None, None))(
        entries, pairs, degeneracy_tol, normalization_tol
    )

    relative = 0.5 * jnp.eye(p, dtype=entries.dtype)
    # invest u_1 in asset i and u_2 in asset j
    relative = relative.at[rows, cols].set(jnp.where(ok, u[:, 0], 0.0))
    relative = relative.at[cols, rows].set(jnp.where(ok, u[:, 1], 0.0))
    votes = jnp.mean(relative, axis=1)

    solved = ok.astype(jnp.int32)
    solved_pairs = jnp.zeros(p, dtype=jnp.int32)
    solved_pairs = solved_pairs.at[rows].add(solved).at[cols].add(solved)
    degenerate = jnp.any(solved_pairs == 0)
    weights, status = normalize_votes(votes, normalization_tol)
    status = jnp.where(degenerate, Status.DEGENERATE_ASSET, status)
    return VotingResult(
        weights=weights,
        votes=VoteVector(values=votes),
        relative_weights=RelativeWeightMatrix(entries=relative),
        skips=jnp.sum(~ok),
        resamples=jnp.asarray(0),
        status=status,
    )


def draw_index_set(key: Array, asset: Array, p: int, k: int) -> Array:
    """Draws $\\{i, l_1, \\dots, l_{k-1}\\}$ with the $l_t$ distinct and uniform in
    $\\{0, \\dots, p-1\\} \\setminus \\{i\\}$."""
    others = jax.random.choice(key, p - 1, (k - 1,), replace=False)
    # shift past `asset` to skip it
    others = others + (others >= asset)
    return jnp.concatenate([asset[None], others]).astype(jnp.int32)


def _update_ledger(
    relative: Array,
    counts: Array,
    rows: Array,
    cols: Array,
    values: Array,
    ok: Array,
    running_mean: bool,
) -> Tuple[Array, Array]:
    old = relative[rows, cols]
    seen = counts[rows, cols]
    if running_mean:
        new = (old * seen + values) / (seen + 1.0)
    else:
        new = 0.5 * values + 0.5 * old
    relative = relative.at[rows, cols].set(jnp.where(ok, new, old))
    counts = counts.at[rows, cols].add(jnp.where(ok, 1.0, 0.0))
    return relative, counts


@partial(
    jax.jit, static_argnames=("k", "repetitions", "running_mean", "vote_in_loop")
)
def votek(
    entries: Array,
    key: Array,
    k: int,
    repetitions: int,
    running_mean: bool,
    degeneracy_tol: float,
    normalization_tol: float,
    max_resamples: int,
    vote_in_loop: bool = False,
) -> VotingResult:
    """Traceable LoCoV-k.

    For each asset `i` and repetition `j`, an index set led by `i` is drawn and its
    `k x k` block solved. The leading weight updates $U_{i,j}$ and the others
    update $U_{l_t,i}$. A singular block is redrawn up to `max_resamples` times,
    then the draw is skipped. $V_i$ is the mean of row `i` of the final ledger,
    so updates written by later assets count too. With `vote_in_loop`, $V_i$ is
    instead read as soon as asset `i` finishes its repetitions.

    With `running_mean`, each entry of $U$ stores the mean of all the weights it
    ever received, its initial value counting as one; otherwise every update
    averages the new weight with the old entry.

    Keys are derived as `fold_in(fold_in(key, i), j)`."""
    p = entries.shape[0]
    relative = jnp.full((p, p), 1.0 / k, dtype=entries.dtype)
    counts = jnp.ones((p, p), dtype=entries.dtype)

    def draw_and_solve(draw_key: Array, asset: Array):
        def keep_drawing(carry):
            attempt, _, _, _, ok = carry
            return jnp.logical_and(~ok, attempt <= max_resamples)

        def attempt_draw(carry):
            attempt, draw_key, _, _, _ = carry
            draw_key, subkey = jax.random.split(draw_key)
            index_set = draw_index_set(subkey, asset, p, k)
            u, ok = solve_subproblem(
                entries, index_set, degeneracy_tol, normalization_tol
            )
            return attempt + 1, draw_key, index_set, u, ok

        init = (
            jnp.asarray(0),
            draw_key,
            jnp.zeros(k, dtype=jnp.int32),
            jnp.zeros(k, dtype=entries.dtype),
            jnp.asarray(False),
        )
        attempts, _, index_set, u, ok = jax.lax.while_loop(
            keep_drawing, attempt_draw, init
        )
        return index_set, u, ok, attempts - 1

    def asset_step(carry, asset):
        asset_key = jax.random.fold_in(key, asset)

        def repetition(j, carry):
            relative, counts, skips, resamples = carry
            index_set, u, ok, redraws = draw_and_solve(
                jax.random.fold_in(asset_key, j), asset
            )
            # U_{i,j} with j the repetition counter, then U_{l_t,i}
            rows = jnp.concatenate([asset[None], index_set[1:]])
            cols = jnp.concatenate(
                [jnp.reshape(j % p, (1,)), jnp.full((k - 1,), asset)]
            ).astype(rows.dtype)
            relative, counts = _update_ledger(
                relative, counts, rows, cols, u, ok, running_mean
            )
            return relative, counts, skips + (~ok), resamples + redraws

        carry = jax.lax.fori_loop(0, repetitions, repetition, carry)
        vote = jnp.mean(carry[0][asset])
        return carry, vote

    init = (relative, counts, jnp.asarray(0), jnp.asarray(0))
    (relative, _, skips, resamples), loop_votes = jax.lax.scan(
        asset_step, init, jnp.arange(p)
    )
    votes = loop_votes if vote_in_loop else jnp.mean(relative, axis=1)
    weights, status = normalize_votes(votes, normalization_tol)
    return VotingResult(
        weights=weights,
        votes=VoteVector(values=votes),
        relative_weights=RelativeWeightMatrix(entries=relative),
        skips=skips,
        resamples=resamples,
        status=status,
    )


_vote2 = jax.jit(vote2)


def locov2_result(cov: CovarianceMatrix) -> VotingResult:
    """Runs LoCoV-2 and returns the full `VotingResult` without raising."""
    if cov.dim < 2:
        raise InputError(f"LoCoV-2 needs at least 2 assets, got {cov.dim}")
    result = _vote2(cov.entries, config.DEGENERACY_TOL, config.NORMALIZATION_TOL)
    if int(result.skips) > 0:
        logger.info("LoCoV-2 skipped %d singular pairs", int(result.skips))
    return result


def locov2(cov: CovarianceMatrix) -> PortfolioWeight:
    """LoCoV-2: votes with every pair of assets. Deterministic.

    Args:
        cov (CovarianceMatrix): A symmetric covariance, usually a sample estimate.

    Returns:
        PortfolioWeight: The voted portfolio.

    Raises:
        DegenerateAssetError: if every pair containing some asset is singular.
        AmbiguousPortfolioError: if the votes sum to (nearly) zero."""
    result = locov2_result(cov)
    raise_for_status(result.status, signed_sum=float(jnp.sum(result.votes.values)))
    return PortfolioWeight.create(result.weights)


def locovk_result(
    cov: CovarianceMatrix,
    k: int,
    key: Array,
    repetitions: int | None = None,
    running_mean: bool = False,
    vote_in_loop: bool = False,
) -> VotingResult:
    """Runs LoCoV-k and returns the full `VotingResult` without raising.

    Args:
        cov (CovarianceMatrix): A symmetric covariance.
        k (int): The size of the index sets, `3 <= k <= p`.
        key (Array): A random key.
        repetitions (int | None): Index sets drawn per asset, defaults to `p`.
        running_mean (bool): Whether to keep exact running means in $U$.
        vote_in_loop (bool): Read each vote when its asset finishes instead of
            from the final ledger.

    Raises:
        InputError: if `k` is out of range or `repetitions` is not positive."""
    p = cov.dim
    if k < 3 or k > p:
        raise InputError(f"LoCoV-k needs 3 <= k <= p, got k={k} with p={p}")
    repetitions = p if repetitions is None else int(repetitions)
    if repetitions < 1:
        raise InputError(f"Repetitions must be positive, got {repetitions}")
    result = votek(
        cov.entries,
        key,
        k=int(k),
        repetitions=repetitions,
        running_mean=running_mean,
        degeneracy_tol=config.DEGENERACY_TOL,
        normalization_tol=config.NORMALIZATION_TOL,
        max_resamples=config.MAX_RESAMPLES,
        vote_in_loop=vote_in_loop,
    )
    if int(result.resamples) > 0 or int(result.skips) > 0:
        logger.info(
            "LoCoV-%d redrew %d index sets and skipped %d",
            k,
            int(result.resamples),
            int(result.skips),
        )
    return result


def locovk(
    cov: CovarianceMatrix, k: int, key: Array, repetitions: int | None = None
) -> PortfolioWeight:
    """LoCoV-k: votes with random index sets of `k` assets, averaging each new
    weight with the entry it updates. Deterministic given `key`.

    Raises:
        InputError: if `k < 3` or `k > p`.
        AmbiguousPortfolioError: if the votes sum to (nearly) zero."""
    result = locovk_result(cov, k, key, repetitions)
    raise_for_status(result.status, signed_sum=float(jnp.sum(result.votes.values)))
    return PortfolioWeight.create(result.weights)


def locovk_running_mean(
    cov: CovarianceMatrix, k: int, key: Array, repetitions: int | None = None
) -> PortfolioWeight:
    """LoCoV-k where each entry of $U$ holds the running mean of every weight
    assigned to it, its initial value counting as one observation."""
    result = locovk_result(cov, k, key, repetitions, running_mean=True)
    raise_for_status(result.status, signed_sum=float(jnp.sum(result.votes.values)))
    return PortfolioWeight.create(result.weights)
