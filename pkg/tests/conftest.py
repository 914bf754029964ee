import numpy as np
import pytest

from cslmzi import (
    FringeTruth,
    ReadNoise,
    RunConfig,
    contrast_series_from_fits,
    fit_contrast_decay,
    fit_fringe,
    synth_fringes,
)


@pytest.fixture(scope="session")
def run_config():
    return RunConfig()


@pytest.fixture(scope="session")
def rb87(run_config):
    return run_config.species


@pytest.fixture(scope="session")
def rb_geometry(run_config):
    """Reference geometry; t_sep is replaced per use."""
    return run_config.geometry(0.26)


def recovery_trial(seed, lam_true=5.6e-5, r_c=1e-7, sigma_p=0.01, n_t=23):
    """Full synthetic pipeline: fringes -> fringe fits -> decay fit."""
    cfg = RunConfig()
    species = cfg.species
    t_list = np.linspace(0.011, 0.26, n_t)
    scans = synth_fringes(
        FringeTruth(lam_true, r_c, 0.45, 0.5),
        cfg.geometry(0.2),
        t_list,
        ReadNoise(sigma_p, seed),
        species,
    )
    fits = [fit_fringe(s) for s in scans]
    decay = fit_contrast_decay(contrast_series_from_fits(t_list, fits), species)
    return decay.lambda_fit, decay.sigma_lambda
