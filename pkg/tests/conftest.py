"""Shared fixtures: the lambda-omega validation systems and cached wave-train
and Bloch data reused across the suite."""

import warnings
from pathlib import Path

import numpy as np
import pytest

from wavetrainlab import bloch, make_lambda_omega, solve_wave_train
from wavetrainlab.rdsys import RDSystem
from wavetrainlab.wavetrain import continue_branch, lambda_omega_wave_train_guess

ARTIFACT_DIR = Path(__file__).resolve().parent.parent / "artifacts"


def lo_alpha(k: float, gamma: float) -> float:
    """Closed-form phase diffusion coefficient of the lambda-omega family."""
    return (1 - 3 * k**2 - 2 * gamma**2 * k**2) / (1 - k**2)


@pytest.fixture(scope="session")
def gl_system():
    return make_lambda_omega(0.0)


@pytest.fixture(scope="session")
def lo_system():
    return make_lambda_omega(0.5)


@pytest.fixture(scope="session")
def gl_wt(gl_system):
    prof, _ = lambda_omega_wave_train_guess(0.3)
    return solve_wave_train(gl_system, 0.3, prof, 0.0)


@pytest.fixture(scope="session")
def lo_wt(lo_system):
    prof, om_unit = lambda_omega_wave_train_guess(0.3)
    return solve_wave_train(lo_system, 0.3, prof, 0.5 * om_unit)


@pytest.fixture(scope="session")
def lo_branch(lo_system, lo_wt):
    return continue_branch(lo_system, 0.1, 0.5, 17, lo_wt)


@pytest.fixture(scope="session")
def gl_branch(gl_system, gl_wt):
    return continue_branch(gl_system, 0.1, 0.5, 17, gl_wt)


@pytest.fixture(scope="session")
def gl_bloch(gl_wt):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return bloch.compute_spectrum(gl_wt, bloch.brillouin_grid(0.3, 256))


@pytest.fixture(scope="session")
def lo_bloch(lo_wt):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return bloch.compute_spectrum(lo_wt, bloch.brillouin_grid(0.3, 256))


@pytest.fixture(scope="session")
def aniso_system(lo_system):
    # gauge-broken variant: anisotropic diffusion, same reaction
    return RDSystem(
        d=2,
        D=np.diag([1.0, 1.2]),
        f=lo_system.f,
        jac_f=lo_system.jac_f,
        terms=lo_system.terms,
        name="lambda_omega_anisotropic",
    )


@pytest.fixture(scope="session")
def artifact_dir():
    ARTIFACT_DIR.mkdir(exist_ok=True)
    return ARTIFACT_DIR
