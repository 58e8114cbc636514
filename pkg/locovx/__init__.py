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


from . import (
    covmodel,
    errors,
    minvar,
    locov,
    estimators,
    experiment,
    presets,
    io,
)

from ._version import __version__
from .config import config
from .covmodel import (
    CovarianceMatrix,
    ReturnMatrix,
    SpectralModel,
    build_covariance,
    center_returns,
    marchenko_pastur_edges,
    sample_covariance,
    sample_haar_orthogonal,
    sample_returns,
    whitened_spectrum,
)
from .minvar import (
    FreeWeight,
    PortfolioWeight,
    RiskValue,
    free_optimal_weight,
    min_variance_portfolio,
    normalize,
    optimal_risk,
    portfolio_risk,
)
from .locov import (
    VotingResult,
    locov2,
    locovk,
    locovk_running_mean,
    subproblem_weights,
)
from .estimators import Estimator, make, register_estimator, registry
from .experiment import (
    ErrorSummary,
    ScalingFit,
    TrialConfig,
    TrialRecord,
    compare_estimators,
    rank_estimators,
    run_experiment,
    scaling_sweep,
)
