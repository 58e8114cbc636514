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
from __future__ import annotations
from typing import Callable, Dict, Tuple
import difflib

import jax.numpy as jnp
from jax import Array
from flax import struct

from .config import config
from .errors import InputError
from .locov import vote2, votek
from .minvar import solve_min_variance


# (entries, key, k) -> (weights, status, skips)
EstimatorFn = Callable[[Array, Array, int], Tuple[Array, Array, Array]]

_ESTIMATORS_REGISTRY: Dict[str, EstimatorFn] = {}
_NEEDS_K = set()


def registry() -> Dict[str, EstimatorFn]:
    return _ESTIMATORS_REGISTRY


def register_estimator(name: str, fn: EstimatorFn, needs_k: bool = False):
    _ESTIMATORS_REGISTRY[name] = fn
    if needs_k:
        _NEEDS_K.add(name)


class Estimator(struct.PyTreeNode):
    """A portfolio estimator applied to a sample covariance inside a trial.

    !!! note
        Use `make` to parse an estimator from its tag, e.g. `locovk:5`."""

    name: str = struct.field(pytree_node=False)
    k: int = struct.field(pytree_node=False, default=0)

    @property
    def tag(self) -> str:
        if self.name in _NEEDS_K:
            return f"{self.name}:{self.k}"
        return self.name

    def __call__(self, entries: Array, key: Array) -> Tuple[Array, Array, Array]:
        """Traceable. Returns the weights, a `Status` code and the skip count."""
        return _ESTIMATORS_REGISTRY[self.name](entries, key, self.k)


def make(tag: str) -> Estimator:
    """Parses an estimator tag: `sample`, `locov2`, `locovk:<k>` or
    `locovk-rm:<k>` (`locovk_rm:<k>` is accepted too).

    Raises:
        InputError: if the name is unknown or `k` is missing or malformed."""
    name, _, arg = tag.strip().partition(":")
    name = name.replace("_", "-")
    if name not in registry():
        closest = difflib.get_close_matches(name, registry().keys())
        msg = f"Estimator {name} not yet implemented."
        if closest:
            msg += f" Did you mean one of these? {closest}"
        raise InputError(msg)
    if name not in _NEEDS_K:
        if arg:
            raise InputError(f"Estimator {name} takes no argument, got {tag}")
        return Estimator(name=name)
    try:
        k = int(arg)
    except ValueError:
        raise InputError(f"Estimator {name} needs an integer k, as in {name}:3")
    if k < 3:
        raise InputError(f"Estimator {name} needs k >= 3, got {k}")
    return Estimator(name=name, k=k)


def parse_estimators(tags: str | Tuple[str, ...]) -> Tuple[Estimator, ...]:
    """Parses a comma separated list, or a tuple, of estimator tags."""
    if isinstance(tags, str):
        tags = tuple(t for t in tags.split(",") if t.strip())
    if not tags:
        raise InputError("At least one estimator is required")
    estimators = tuple(make(t) for t in tags)
    seen = [e.tag for e in estimators]
    if len(set(seen)) != len(seen):
        raise InputError(f"Estimators are repeated: {seen}")
    return estimators


def sample(entries: Array, key: Array, k: int) -> Tuple[Array, Array, Array]:
    weights, _, status = solve_min_variance(
        entries, config.DEGENERACY_TOL, config.NORMALIZATION_TOL
    )
    return weights, status, jnp.asarray(0)


def locov2(entries: Array, key: Array, k: int) -> Tuple[Array, Array, Array]:
    result = vote2(entries, config.DEGENERACY_TOL, config.NORMALIZATION_TOL)
    return result.weights, result.status, result.skips


def _votek(running_mean: bool) -> EstimatorFn:
    def estimate(entries: Array, key: Array, k: int) -> Tuple[Array, Array, Array]:
        result = votek(
            entries,
            key,
            k=k,
            repetitions=entries.shape[0],
            running_mean=running_mean,
            degeneracy_tol=config.DEGENERACY_TOL,
            normalization_tol=config.NORMALIZATION_TOL,
            max_resamples=config.MAX_RESAMPLES,
        )
        return result.weights, result.status, result.skips

    return estimate


register_estimator("sample", sample)
register_estimator("locov2", locov2)
register_estimator("locovk", _votek(running_mean=False), needs_k=True)
register_estimator("locovk-rm", _votek(running_mean=True), needs_k=True)
