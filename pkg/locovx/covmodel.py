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
"""Ground-truth covariance models and synthetic returns.

The true covariance is diagonalised as $\\Sigma = P^T D^2 P$, with $D$ the diagonal
matrix of eigen standard deviations and $P$ an orthogonal basis. Returns are
realised as $X = N D P$, where $N$ is an $n \\times p$ matrix of i.i.d. standardised
noise, and the sample covariance is $\\hat{\\Sigma} = X^T X / n$."""
from __future__ import annotations
from typing import Literal, Tuple

import jax
import jax.numpy as jnp
from jax import Array
from flax import struct

from .config import config
from .errors import DegenerateInputError, InputError


NoiseDist = Literal["gaussian", "rademacher", "uniform"]
NOISE_DISTS: Tuple[str, ...] = ("gaussian", "rademacher", "uniform")


class SpectralModel(struct.PyTreeNode):
    """A ground-truth covariance factorisation $\\Sigma = P^T D^2 P$.

    !!! note
        To initialise a model, use the `create` or the `from_eigenvalues` methods,
        which validate the invariants.

    Attributes:
        eigen_sds (Array): The `p` positive eigen standard deviations $\\sigma_k$.
        basis (Array): The `p x p` orthogonal matrix $P$."""

    eigen_sds: Array
    basis: Array

    @property
    def dim(self) -> int:
        return self.eigen_sds.shape[0]

    @property
    def eigenvalues(self) -> Array:
        return jnp.square(self.eigen_sds)

    @classmethod
    def create(cls, eigen_sds: Array, basis: Array | None = None) -> SpectralModel:
        """Create a spectral model from eigen standard deviations and a basis.

        Args:
            eigen_sds (Array): The `p` eigen standard deviations, all positive.
            basis (Array | None): The orthogonal basis, defaults to the identity.

        Returns:
            SpectralModel: The validated model.

        Raises:
            InputError: if a standard deviation is not positive, if `p < 2`, or if
                the basis is not a `p x p` orthogonal matrix."""
        eigen_sds = jnp.asarray(eigen_sds, dtype=jnp.float64)
        if eigen_sds.ndim != 1:
            raise InputError(f"eigen_sds must be a vector, got shape {eigen_sds.shape}")
        p = eigen_sds.shape[0]
        if basis is None:
            basis = jnp.eye(p, dtype=jnp.float64)
        basis = jnp.asarray(basis, dtype=jnp.float64)

        if config.ARRAY_CHECKS_ENABLED:
            if p < 2:
                raise InputError(f"A spectral model needs at least 2 assets, got {p}")
            if not bool(jnp.all(eigen_sds > 0)):
                raise InputError("All eigen standard deviations must be positive")
            if basis.shape != (p, p):
                raise InputError(
                    f"Basis must have shape {(p, p)}, got {basis.shape} instead"
                )
            deviation = orthogonality_error(basis)
            if deviation > config.ORTHOGONALITY_TOL:
                raise InputError(
                    f"Basis is not orthogonal: max |P^T P - I| = {deviation:.3e}"
                )
        return cls(eigen_sds=eigen_sds, basis=basis)

    @classmethod
    def from_eigenvalues(
        cls, eigenvalues: Array, basis: Array | None = None
    ) -> SpectralModel:
        """Create a spectral model from the eigenvalues $\\sigma_k^2$ of $\\Sigma$."""
        eigenvalues = jnp.asarray(eigenvalues, dtype=jnp.float64)
        if config.ARRAY_CHECKS_ENABLED and not bool(jnp.all(eigenvalues > 0)):
            raise InputError("All eigenvalues must be positive")
        return cls.create(jnp.sqrt(eigenvalues), basis)


class CovarianceMatrix(struct.PyTreeNode):
    """A symmetric positive semi-definite `p x p` matrix, either the true $\\Sigma$
    or a sample estimate $\\hat{\\Sigma}$."""

    entries: Array

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def create(cls, entries: Array) -> CovarianceMatrix:
        entries = jnp.asarray(entries, dtype=jnp.float64)
        if config.ARRAY_CHECKS_ENABLED:
            if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
                raise InputError(
                    f"Covariance must be a square matrix, got shape {entries.shape}"
                )
            if not bool(jnp.all(jnp.isfinite(entries))):
                raise InputError("Covariance contains non-finite entries")
            scale = jnp.max(jnp.abs(entries))
            asymmetry = jnp.max(jnp.abs(entries - entries.T))
            if asymmetry > 1e-12 * scale:
                raise InputError(
                    f"Covariance is not symmetric: max |C - C^T| = {asymmetry:.3e}"
                )
        return cls(entries=entries)

    def eigenvalues(self) -> Array:
        """The eigenvalues in ascending order."""
        return jnp.linalg.eigvalsh(self.entries)

    def condition(self) -> Array:
        """The ratio of largest to smallest eigenvalue, `inf` if the smallest is not
        positive."""
        return condition_number(self.entries)

    def is_invertible(self, tol: float | None = None) -> bool:
        """Whether the smallest eigenvalue exceeds `tol` times the largest.

        Args:
            tol (float | None): The relative degeneracy tolerance, defaults to
                `config.DEGENERACY_TOL`.

        Returns:
            bool: True if the matrix is numerically invertible."""
        tol = config.DEGENERACY_TOL if tol is None else tol
        return bool(is_invertible(self.entries, tol))

    def __getitem__(self, index_set) -> CovarianceMatrix:
        """Extracts the sub-covariance of the assets in `index_set`."""
        idx = jnp.asarray(index_set)
        return CovarianceMatrix(entries=self.entries[idx[:, None], idx[None, :]])


class ReturnMatrix(struct.PyTreeNode):
    """An `n x p` matrix of returns, rows are observations and columns are assets.

    Attributes:
        entries (Array): The returns.
        centered (bool): Whether each column has been demeaned."""

    entries: Array
    centered: bool = struct.field(pytree_node=False, default=False)

    @property
    def n_samples(self) -> int:
        return self.entries.shape[0]

    @property
    def dim(self) -> int:
        return self.entries.shape[1]


def orthogonality_error(basis: Array) -> float:
    """Returns $\\max |P^T P - I|$."""
    p = basis.shape[0]
    return float(jnp.max(jnp.abs(basis.T @ basis - jnp.eye(p, dtype=basis.dtype))))


def condition_number(entries: Array) -> Array:
    eigenvalues = jnp.linalg.eigvalsh(entries)
    lowest, highest = eigenvalues[0], eigenvalues[-1]
    return jnp.where(lowest > 0, highest / jnp.where(lowest > 0, lowest, 1.0), jnp.inf)


def is_invertible(entries: Array, tol: float) -> Array:
    eigenvalues = jnp.linalg.eigvalsh(entries)
    return eigenvalues[0] > tol * eigenvalues[-1]


def build_covariance(model: SpectralModel) -> CovarianceMatrix:
    """Assembles $\\Sigma = P^T D^2 P$.

    Args:
        model (SpectralModel): The ground-truth model.

    Returns:
        CovarianceMatrix: The symmetric true covariance, whose eigenvalues are
        `model.eigen_sds ** 2`."""
    scaled = model.eigenvalues[:, None] * model.basis
    entries = model.basis.T @ scaled
    return CovarianceMatrix(entries=0.5 * (entries + entries.T))


def sample_haar_orthogonal(p: int, key: Array) -> Array:
    """Draws a `p x p` orthogonal matrix from the Haar measure.

    The QR factorisation of a standard Gaussian matrix is Haar distributed only
    after the signs of the diagonal of `R` are absorbed into the columns of `Q`.

    Args:
        p (int): The dimension, at least 1.
        key (Array): A random key.

    Returns:
        Array: An orthogonal matrix of shape `(p, p)`."""
    if p < 1:
        raise InputError(f"Dimension must be at least 1, got {p}")
    gaussian = jax.random.normal(key, (p, p), dtype=jnp.float64)
    q, r = jnp.linalg.qr(gaussian)
    signs = jnp.where(jnp.diag(r) < 0, -1.0, 1.0)
    return q * signs[None, :]


def sample_noise(key: Array, shape: Tuple[int, ...], noise_dist: NoiseDist) -> Array:
    """Draws i.i.d. noise with mean 0 and variance 1.

    Args:
        key (Array): A random key.
        shape (Tuple[int, ...]): The shape of the output.
        noise_dist (NoiseDist): One of `gaussian`, `rademacher` or `uniform`.

    Returns:
        Array: A float64 array of standardised noise."""
    if noise_dist == "gaussian":
        return jax.random.normal(key, shape, dtype=jnp.float64)
    elif noise_dist == "rademacher":
        return jax.random.rademacher(key, shape).astype(jnp.float64)
    elif noise_dist == "uniform":
        bound = jnp.sqrt(3.0)
        return jax.random.uniform(
            key, shape, dtype=jnp.float64, minval=-bound, maxval=bound
        )
    raise InputError(
        f"Unknown noise distribution {noise_dist}, expected one of {NOISE_DISTS}"
    )


def returns_from_noise(model: SpectralModel, noise: Array) -> ReturnMatrix:
    """Realises $X = N D P$ from a noise matrix $N$."""
    return ReturnMatrix(entries=(noise * model.eigen_sds[None, :]) @ model.basis)


def sample_returns(
    model: SpectralModel, n: int, noise_dist: NoiseDist, key: Array
) -> ReturnMatrix:
    """Samples `n` synthetic returns $X = N D P$.

    The output is population-centred but not sample-centred; use `center_returns`
    to demean it.

    Args:
        model (SpectralModel): The ground-truth model.
        n (int): The number of observations, at least 1.
        noise_dist (NoiseDist): The distribution of the entries of $N$.
        key (Array): A random key.

    Returns:
        ReturnMatrix: The `n x p` returns, with `centered=False`."""
    if n < 1:
        raise InputError(f"Number of samples must be at least 1, got {n}")
    noise = sample_noise(key, (n, model.dim), noise_dist)
    return returns_from_noise(model, noise)


def center_returns(returns: ReturnMatrix) -> ReturnMatrix:
    """Subtracts the column means.

    Raises:
        DegenerateInputError: if there are fewer than 2 observations."""
    if returns.n_samples < 2:
        raise DegenerateInputError(
            f"Centering needs at least 2 observations, got {returns.n_samples}"
        )
    entries = returns.entries - jnp.mean(returns.entries, axis=0, keepdims=True)
    return ReturnMatrix(entries=entries, centered=True)


def sample_covariance(returns: ReturnMatrix) -> CovarianceMatrix:
    """Forms $\\hat{\\Sigma} = X^T X / n$, with divisor `n`.

    Singularity is not checked here, but at solve time."""
    x = returns.entries
    entries = x.T @ x / x.shape[0]
    return CovarianceMatrix(entries=0.5 * (entries + entries.T))


def marchenko_pastur_edges(p: int, n: int) -> Tuple[float, float]:
    """The support edges $(1 \\mp \\sqrt{p/n})^2$ of the limiting spectrum of
    $N^T N / n$. When `p > n` the matrix has `p - n` zero eigenvalues, so the
    lower edge is 0."""
    ratio = p / n
    upper = (1.0 + ratio**0.5) ** 2
    lower = 0.0 if p > n else (1.0 - ratio**0.5) ** 2
    return lower, upper


def whitened_spectrum(returns: ReturnMatrix, model: SpectralModel) -> Array:
    """Eigenvalues of $N^T N / n$, recovering $N = X P^T D^{-1}$ from the returns.

    Args:
        returns (ReturnMatrix): Returns sampled from `model`, not centred.
        model (SpectralModel): The model the returns were drawn from.

    Returns:
        Array: The `p` eigenvalues in ascending order."""
    noise = (returns.entries @ model.basis.T) / model.eigen_sds[None, :]
    return jnp.linalg.eigvalsh(noise.T @ noise / noise.shape[0])
