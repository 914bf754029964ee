#!/usr/bin/env python3
"""Monte Carlo cross-check of the closed-form phase variance and contrast.

Prints a z-score table over ten parameter sets spanning both
correlation-length regimes.  Arguments: [n_samples] [seed].
"""

import math
import sys

from cslmzi import (
    CslParams,
    NoiseModel,
    RunConfig,
    estimate_contrast_mc,
    estimate_phase_variance_mc,
    phase_variance,
)
from cslmzi.cli import _validation_sets


def main_script() -> None:
    n_samples = int(float(sys.argv[1])) if len(sys.argv) > 1 else 20_000
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 3000
    cfg = RunConfig(seed=seed)
    species = cfg.species
    print(f"{'u':>9} {'var (closed)':>13} {'var (MC)':>13} {'z':>6} "
          f"{'C (closed)':>11} {'C (MC)':>11} {'z':>6}")
    for i, params in enumerate(_validation_sets(cfg)):
        csl = CslParams(params["lambda_s"], params["r_c_m"])
        ifo = cfg.geometry(params["t_s"])
        noise = NoiseModel(seed=seed + i, dt=params["t_s"] / 2000)
        var_est = estimate_phase_variance_mc(csl, species, ifo, n_samples, noise)
        c_est = estimate_contrast_mc(csl, species, ifo, n_samples, noise)
        var_true = phase_variance(csl, species, ifo)
        c_true = math.exp(-0.5 * var_true)
        print(f"{params['u']:9.2e} {var_true:13.6f} {var_est.mean:13.6f} "
              f"{(var_est.mean - var_true) / var_est.std_error:+6.2f} "
              f"{c_true:11.6f} {c_est.mean:11.6f} "
              f"{(c_est.mean - c_true) / c_est.std_error:+6.2f}")


if __name__ == "__main__":
    main_script()
