"""Schema-conformant fixture artifacts for renderer tests."""

import json
from pathlib import Path

import numpy as np
import pytest

ARTIFACT_DIR = Path(__file__).resolve().parent.parent.parent / "artifacts"


@pytest.fixture()
def fixture_run(tmp_path):
    """A tiny synthetic run directory covering all four input schemas."""
    t = np.geomspace(1, 64, 8)
    err = 0.4 * t**-0.8
    lines = ["t,sup_err,weighted_err"]
    lines += [f"{ti:.17g},{ei:.17g},{2*ei:.17g}" for ti, ei in zip(t, err)]
    (tmp_path / "error.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "rate.json").write_text(json.dumps(
        {"slope": -0.8123456789012345, "intercept": np.log(0.4),
         "residual": 1e-3, "window": [4.0, 64.0]}
    ))

    rows = ["t,x_frame,phi,profile"]
    x = np.linspace(-40, 40, 81)
    for ti in (1.0, 16.0, 64.0):
        phi = np.tanh(x / np.sqrt(ti + 1))
        prof = np.tanh(x / np.sqrt(ti))
        rows += [f"{ti:.17g},{xi:.17g},{p:.17g},{q:.17g}"
                 for xi, p, q in zip(x, phi, prof)]
    (tmp_path / "fronts.csv").write_text("\n".join(rows) + "\n")

    rows = ["ell,j,re_lambda,im_lambda"]
    ell = np.linspace(-0.15, 0.15, 31)
    for j, curve in ((1, -0.8 * ell**2), (2, -1.8 + 0 * ell)):
        rows += [f"{l:.17g},{j},{c:.17g},0" for l, c in zip(ell, curve)]
    (tmp_path / "spectrum.csv").write_text("\n".join(rows) + "\n")
    (tmp_path / "stability.json").write_text(json.dumps(
        {"stable": True, "sigma0": 0.018, "ell0": 0.15, "alpha0": 0.8,
         "ell1": 0.07, "violations": []}
    ))

    rows = ["k,omega,c_g,beta,residual_norm"]
    k = np.linspace(0.1, 0.5, 17)
    rows += [f"{ki:.17g},{0.5*(1-ki**2):.17g},{-ki:.17g},0.5,1e-12" for ki in k]
    (tmp_path / "branch.csv").write_text("\n".join(rows) + "\n")
    return tmp_path


@pytest.fixture(scope="session")
def acceptance_artifacts():
    """Artifacts produced by the primary acceptance suite, if present."""
    if not ARTIFACT_DIR.exists():
        pytest.skip("primary acceptance artifacts not present; run the "
                    "wavetrainlab acceptance suite first")
    return ARTIFACT_DIR
