from typing import Any

import jax


# every tolerance below assumes double precision
jax.config.update("jax_enable_x64", True)


class Config:
    """Config class to store global variables.

    Attributes:
        ARRAY_CHECKS_ENABLED (bool): Validate type invariants when building domain
            types with their `create` method.
        DEGENERACY_TOL (float): A covariance is invertible only if its smallest
            eigenvalue exceeds `DEGENERACY_TOL` times its largest.
        NORMALIZATION_TOL (float): A free weight `S` is ambiguous when
            `|sum(S)| <= NORMALIZATION_TOL * ||S||_2 * p`.
        ORTHOGONALITY_TOL (float): Maximum entry of `P^T P - I` for a basis.
        MAX_RESAMPLES (int): Retries of a singular LoCoV-k index set before the
            draw is skipped.
        FAIL_THRESHOLD (float): Tolerated fraction of failed trials per run.
        TRIAL_BATCH (int): Trials evaluated together in one vmapped call."""

    def __init__(self):
        self.ARRAY_CHECKS_ENABLED = True
        self.DEGENERACY_TOL = 1e-10
        self.NORMALIZATION_TOL = 1e-12
        self.ORTHOGONALITY_TOL = 1e-10
        self.MAX_RESAMPLES = 10
        self.FAIL_THRESHOLD = 0.1
        self.TRIAL_BATCH = 64

    def update(self, key: str, value: Any) -> None:
        if not hasattr(self, key):
            raise AttributeError(f"Unknown config entry {key}")
        setattr(self, key, value)

    def reset(self) -> None:
        self.__init__()


config = Config()
