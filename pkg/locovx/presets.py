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
"""Named experiment settings.

`fig1` and `fig2` measure the sample portfolio on a diagonal and a dense
covariance with eigenvalues $1, \\dots, 30$, at `(n, p) = (30, 30)` and
`(3000, 30)`. `fig3` to `fig5` compare the sample portfolio with LoCoV-2 at
`(30, 30)` for $\\Sigma = I$, $D^2$ and $P^T D^2 P$."""
from typing import Callable, Dict, Tuple
import difflib

from .errors import UsageError
from .experiment import TrialConfig


_PRESETS_REGISTRY: Dict[str, Callable[..., Tuple[TrialConfig, ...]]] = {}


def registry():
    return _PRESETS_REGISTRY


def register_preset(name: str, ctor: Callable[..., Tuple[TrialConfig, ...]]):
    _PRESETS_REGISTRY[name] = ctor


def make(name: str, **kwargs) -> Tuple[TrialConfig, ...]:
    """Builds the configurations of a preset, one per value of `n`, with `kwargs`
    overriding the preset fields."""
    if name not in registry():
        closest = difflib.get_close_matches(name, registry().keys())
        msg = f"Preset {name} not yet implemented."
        if closest:
            msg += f" Did you mean one of these? {closest}"
        raise UsageError(msg)
    return _PRESETS_REGISTRY[name](**kwargs)


def _grid(
    n_values: Tuple[int, ...], **fields
) -> Callable[..., Tuple[TrialConfig, ...]]:
    def ctor(**overrides) -> Tuple[TrialConfig, ...]:
        n_override = overrides.pop("n", None)
        base = TrialConfig(**{**fields, **overrides})
        grid = n_values
        if isinstance(n_override, int):
            grid = (n_override,)
        elif n_override is not None:
            grid = tuple(n_override)
        return tuple(base.replace(n=n) for n in grid)

    return ctor


SPECTRUM = "linspace:1:30"

register_preset(
    "fig1",
    _grid(
        (30, 3000),
        p=30,
        sigma=SPECTRUM,
        basis="identity",
        trials=300,
        estimators=("sample",),
    ),
)
register_preset(
    "fig2",
    _grid(
        (30, 3000),
        p=30,
        sigma=SPECTRUM,
        basis="haar",
        trials=300,
        estimators=("sample",),
    ),
)
register_preset(
    "fig3",
    _grid(
        (30,),
        p=30,
        sigma="identity",
        basis="identity",
        trials=300,
        estimators=("sample", "locov2"),
    ),
)
register_preset(
    "fig4",
    _grid(
        (30,),
        p=30,
        sigma=SPECTRUM,
        basis="identity",
        trials=300,
        estimators=("sample", "locov2"),
    ),
)
register_preset(
    "fig5",
    _grid(
        (30,),
        p=30,
        sigma=SPECTRUM,
        basis="haar",
        trials=300,
        estimators=("sample", "locov2"),
    ),
)
