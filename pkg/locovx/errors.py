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
"""Errors raised by the public API, and the status codes compiled kernels return
in their place."""
from __future__ import annotations

from typing import Optional


EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class Status:
    """Enumeration of the outcomes of a compiled solve.

    !!! note
        Jitted code cannot raise, so kernels return one of these codes next to
        their values and host-level functions turn it into an exception."""

    OK: int = 0
    SINGULAR: int = 1
    AMBIGUOUS: int = 2
    DEGENERATE_ASSET: int = 3

    @staticmethod
    def name(code: int) -> str:
        return {
            Status.OK: "ok",
            Status.SINGULAR: "singular",
            Status.AMBIGUOUS: "ambiguous",
            Status.DEGENERATE_ASSET: "degenerate_asset",
        }.get(int(code), "unknown")


class LocovError(Exception):
    exit_code: int = EXIT_NUMERICAL


class InputError(LocovError, ValueError):
    exit_code = EXIT_USAGE


class UsageError(InputError):
    pass


class DataError(LocovError, ValueError):
    """A problem with user-supplied data, located by 1-based `row` and `column`
    when known."""

    exit_code = EXIT_DATA

    def __init__(
        self, message: str, row: Optional[int] = None, column: Optional[int] = None
    ):
        self.row = row
        self.column = column
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column {column}")
        if where:
            message = f"{message} (at {', '.join(where)})"
        super().__init__(message)


class DegenerateInputError(DataError):
    pass


class NumericalError(LocovError, ArithmeticError):
    exit_code = EXIT_NUMERICAL


class NonInvertibleCovarianceError(NumericalError):
    def __init__(self, condition: float, hint: str = ""):
        self.condition = condition
        message = (
            f"Covariance matrix is not invertible (condition estimate {condition:.3e})"
        )
        if hint:
            message += f". {hint}"
        super().__init__(message)


class AmbiguousPortfolioError(NumericalError):
    def __init__(self, signed_sum: float):
        self.signed_sum = signed_sum
        super().__init__(
            f"Free weight signed sum {signed_sum:.3e} is too close to zero "
            "to normalise into a portfolio"
        )


class DegenerateAssetError(NumericalError):
    pass


class SweepError(NumericalError):
    def __init__(self, n: int, failure_rate: float):
        self.n = n
        self.failure_rate = failure_rate
        super().__init__(
            f"Sweep point n={n} failed in {failure_rate:.1%} of trials"
        )


def raise_for_status(
    status: int, condition: float = float("nan"), signed_sum: float = float("nan")
) -> None:
    """Raises the exception matching a non-OK `status`.

    Args:
        status (int): A `Status` code returned by a kernel.
        condition (float): The condition estimate of the solved covariance.
        signed_sum (float): The signed sum of the free weight.

    Raises:
        NonInvertibleCovarianceError: if `status` is `Status.SINGULAR`.
        AmbiguousPortfolioError: if `status` is `Status.AMBIGUOUS`.
        DegenerateAssetError: if `status` is `Status.DEGENERATE_ASSET`."""
    status = int(status)
    if status == Status.OK:
        return
    if status == Status.SINGULAR:
        raise NonInvertibleCovarianceError(condition)
    if status == Status.AMBIGUOUS:
        raise AmbiguousPortfolioError(signed_sum)
    if status == Status.DEGENERATE_ASSET:
        raise DegenerateAssetError(
            "At least one asset has a singular sub-block with every other asset"
        )
    raise NumericalError(f"Unknown solver status {status}")
