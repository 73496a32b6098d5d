"""Reaction-diffusion system definitions and the lambda-omega family."""

import numpy as np
import pytest

from wavetrainlab.errors import ConfigError
from wavetrainlab.rdsys import load_system, make_lambda_omega


class TestLambdaOmega:
    def test_on_circle_equilibrium(self):
        sys0 = make_lambda_omega(0.0)
        assert np.allclose(sys0.f(np.array([1.0, 0.0])), 0.0, atol=1e-14)

    def test_gamma_half_rotation(self):
        sys5 = make_lambda_omega(0.5)
        f = sys5.f(np.array([1.0, 0.0]))
        assert f[0] == pytest.approx(0.0, abs=1e-14)
        assert f[1] == pytest.approx(-0.5, abs=1e-14)

    def test_jacobian_matches_finite_differences(self):
        sys5 = make_lambda_omega(0.5)
        rng = np.random.default_rng(11)
        h = 1e-6
        for _ in range(5):
            u = rng.uniform(-1, 1, 2)
            J = sys5.jac_f(u)
            for j in range(2):
                e = np.zeros(2)
                e[j] = h
                fd = (sys5.f(u + e) - sys5.f(u - e)) / (2 * h)
                assert np.max(np.abs(J[:, j] - fd)) < 1e-6

    def test_gauge_equivariance(self):
        sys5 = make_lambda_omega(0.7)
        rng = np.random.default_rng(12)
        for _ in range(6):
            u = rng.uniform(-1.5, 1.5, 2)
            ang = rng.uniform(0, 2 * np.pi)
            R = np.array([[np.cos(ang), -np.sin(ang)], [np.sin(ang), np.cos(ang)]])
            assert np.max(np.abs(sys5.f(R @ u) - R @ sys5.f(u))) < 1e-12

    def test_vectorized_over_grid(self):
        sys5 = make_lambda_omega(0.5)
        u = np.random.default_rng(1).standard_normal((2, 17))
        f = sys5.f(u)
        assert f.shape == (2, 17)
        J = sys5.jac_f(u)
        assert J.shape == (2, 2, 17)
        assert np.allclose(f[:, 3], sys5.f(u[:, 3]))


class TestLoadSystem:
    def test_family_config(self):
        sys_ = load_system({"family": "lambda_omega", "gamma": 0.5})
        assert sys_.d == 2
        assert np.allclose(sys_.D, np.eye(2))

    def test_asymmetric_D_rejected(self):
        with pytest.raises(ConfigError, match="symmetric"):
            load_system(
                {
                    "d": 2,
                    "D": [[1.0, 2.0], [0.0, 1.0]],
                    "f_polynomial": [],
                }
            )

    def test_indefinite_D_rejected(self):
        with pytest.raises(ConfigError, match="positive definite"):
            load_system(
                {
                    "d": 2,
                    "D": [[1.0, 0.0], [0.0, -0.5]],
                    "f_polynomial": [],
                }
            )

    def test_polynomial_system_accepted(self):
        # logistic-style two-component reaction with diag(1, 2) diffusion
        cfg = {
            "d": 2,
            "D": [[1.0, 0.0], [0.0, 2.0]],
            "f_polynomial": [
                {"target_component": 0, "coefficient": 1.0, "exponents": [1, 0]},
                {"target_component": 0, "coefficient": -1.0, "exponents": [2, 1]},
                {"target_component": 1, "coefficient": 0.5, "exponents": [0, 2]},
            ],
        }
        sys_ = load_system(cfg)
        u = np.array([0.3, -0.7])
        expect0 = 0.3 - 0.3**2 * (-0.7)
        expect1 = 0.5 * 0.49
        assert np.allclose(sys_.f(u), [expect0, expect1])
        # the autogenerated Jacobian was verified against finite differences
        # at construction; spot-check one entry
        assert sys_.jac_f(u)[0, 1] == pytest.approx(-(0.3**2))

    def test_unknown_family(self):
        with pytest.raises(ConfigError, match="family"):
            load_system({"family": "brusselator"})

    def test_malformed_terms(self):
        with pytest.raises(ConfigError):
            load_system(
                {
                    "d": 2,
                    "D": [[1, 0], [0, 1]],
                    "f_polynomial": [{"target_component": 0, "coefficient": "x"}],
                }
            )
