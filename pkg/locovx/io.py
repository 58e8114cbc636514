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
"""Flat-file inputs and outputs.

Return matrices are read from comma separated files with one row per observation
and one column per asset, and an optional header row. Every float is written
with 17 significant digits so that it reads back exactly."""
from __future__ import annotations
import json
import math
import re
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
import jax.numpy as jnp

from .covmodel import ReturnMatrix
from .errors import DataError, DegenerateInputError, Status
from .experiment import ErrorSummary, ScalingFit, TrialRecord


FLOAT_FORMAT = "%.17g"


# pandas message for a row longer than the first one
_EXTRA_FIELDS = re.compile(r"Expected (\d+) fields in line (\d+), saw (\d+)")


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def read_returns_csv(path: str | Path) -> Tuple[ReturnMatrix, List[str]]:
    """Reads an `n x p` return matrix.

    The first row is a header when none of its cells is numeric. Assets without a
    header are named by their 0-based column index.

    Args:
        path (str | Path): A UTF-8 comma separated file.

    Returns:
        Tuple[ReturnMatrix, List[str]]: The returns, not centred, and the asset
        names.

    Raises:
        DataError: on missing files, ragged rows, or non-numeric or non-finite
            cells, located by 1-based row and column.
        DegenerateInputError: if there are fewer than 2 rows or 2 columns."""
    try:
        frame = pd.read_csv(
            path,
            header=None,
            dtype=str,
            keep_default_na=False,
            skip_blank_lines=True,
            encoding="utf-8",
        )
    except FileNotFoundError:
        raise DataError(f"File {path} not found")
    except pd.errors.EmptyDataError:
        raise DataError(f"File {path} is empty")
    except UnicodeDecodeError as e:
        raise DataError(f"File {path} is not valid UTF-8: {e.reason}")
    except pd.errors.ParserError as e:
        extra = _EXTRA_FIELDS.search(str(e))
        if extra is None:
            raise DataError(f"Ragged rows in {path}: {e}")
        expected, line, _ = (int(g) for g in extra.groups())
        raise DataError("Ragged row, extra value", row=line, column=expected + 1)

    first = [str(cell).strip() for cell in frame.iloc[0]]
    has_header = not any(_is_number(cell) for cell in first)
    if has_header:
        names = first
        body = frame.iloc[1:]
    else:
        names = [str(i) for i in range(frame.shape[1])]
        body = frame
    offset = 2 if has_header else 1

    # short rows are padded with NaN, while empty cells are empty strings
    missing = body.isna().to_numpy()
    if missing.any():
        row, column = np.argwhere(missing)[0]
        raise DataError(
            "Ragged row, missing value", row=row + offset, column=column + 1
        )

    values = body.apply(lambda col: pd.to_numeric(col.str.strip(), errors="coerce"))
    values = values.to_numpy(dtype=np.float64)
    bad = ~np.isfinite(values)
    if bad.any():
        row, column = np.argwhere(bad)[0]
        cell = body.iat[row, column]
        raise DataError(
            f"Non-numeric or non-finite value {cell!r}",
            row=row + offset,
            column=column + 1,
        )

    n, p = values.shape
    if n < 2:
        raise DegenerateInputError(f"Need at least 2 observations, got {n}")
    if p < 2:
        raise DegenerateInputError(f"Need at least 2 assets, got {p}")
    return ReturnMatrix(entries=jnp.asarray(values)), names


def write_weights_csv(path: str | Path, names: Sequence[str], weights: Any) -> None:
    frame = pd.DataFrame({"asset": list(names), "weight": np.asarray(weights)})
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def read_weights_csv(path: str | Path) -> Tuple[List[str], np.ndarray]:
    frame = pd.read_csv(
        path, dtype={"asset": str, "weight": np.float64}, float_precision="round_trip"
    )
    return frame["asset"].tolist(), frame["weight"].to_numpy()


def write_trials_csv(
    path: str | Path, runs: Sequence[Tuple[int, Sequence[TrialRecord]]]
) -> None:
    """Writes one row per trial and estimator, with the weights in columns
    `w_0, ..., w_{p-1}`."""
    rows = []
    for n, records in runs:
        for record in records:
            row = {
                "n": n,
                "trial_id": record.trial_id,
                "estimator": record.estimator,
                "status": Status.name(record.status),
                "skips": record.skips,
                "sample_risk": record.sample_risk,
                "oracle_risk": record.oracle_risk,
                "mean_abs_error": record.mean_abs_error,
                "free_weight_error": record.free_weight_error,
            }
            row.update({f"w_{k}": w for k, w in enumerate(record.weights)})
            rows.append(row)
    pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_spread_csv(
    path: str | Path, runs: Sequence[Tuple[int, Dict[str, ErrorSummary]]]
) -> None:
    """Writes the per-asset spread of each estimator: true weight, mean and standard
    deviation of the estimates."""
    rows = []
    for n, summaries in runs:
        for tag, summary in summaries.items():
            for k in range(summary.true_weights.shape[0]):
                rows.append(
                    {
                        "n": n,
                        "estimator": tag,
                        "asset_index": k,
                        "true_weight": summary.true_weights[k],
                        "mean_est_weight": summary.mean_weights[k],
                        "std_est_weight": summary.std_weights[k],
                    }
                )
    pd.DataFrame(rows).to_csv(path, index=False, float_format=FLOAT_FORMAT)


def write_scaling_csv(path: str | Path, fit: ScalingFit) -> None:
    frame = pd.DataFrame(
        {
            "n": list(fit.n_grid),
            "median_error": list(fit.median_errors),
            "band_freq": list(fit.band_freqs),
            "failure_rate": list(fit.failure_rates),
        }
    )
    frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def jsonable(obj: Any) -> Any:
    """Converts numpy and jax values to JSON types, with non-finite floats as
    `null`."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, (np.ndarray, jnp.ndarray)):
        return jsonable(np.asarray(obj).tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        value = float(obj)
        return value if math.isfinite(value) else None
    return obj


def write_json(path: str | Path, obj: Any) -> None:
    # repr of a float is its shortest exact round trip
    with open(path, "w", encoding="utf-8") as f:
        json.dump(jsonable(obj), f, indent=2, allow_nan=False)
        f.write("\n")


def read_json(path: str | Path) -> Any:
    with open(path, encoding="utf-8") as f:
        return json.load(f)
