from dataclasses import dataclass
import time
from typing import Optional

import jax
import tyro

import locovx as lx
from locovx.experiment import TrialConfig, run_experiment


@dataclass
class Args:
    p: int = 30
    n: int = 30
    trials: int = 300
    seed: int = 0
    sigma: str = "linspace:1:30"
    basis: str = "haar"
    estimators: str = "sample,locov2,locovk:3,locovk-rm:3"
    batch_size: Optional[int] = None
    wandb_project: Optional[str] = None


if __name__ == "__main__":
    args = tyro.cli(Args)
    print("Devices:", jax.devices())

    for tag in args.estimators.split(","):
        config = TrialConfig(
            p=args.p,
            n=args.n,
            sigma=args.sigma,
            basis=args.basis,
            trials=args.trials,
            seed=args.seed,
            estimators=(tag,),
        )
        start_time = time.time()
        _, summaries = run_experiment(
            config, batch_size=args.batch_size, wandb_project=args.wandb_project
        )
        elapsed = time.time() - start_time
        summary = summaries[lx.make(tag).tag]
        print(
            f"{tag:>12}: {elapsed:.3f}s for {args.trials} trials, "
            f"mse {summary.mse:.3e}, failures {summary.n_failures}"
        )
