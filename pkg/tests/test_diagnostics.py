"""Phase extraction, profile comparison and rate fitting."""

import numpy as np
import pytest

from wavetrainlab import simulate as S
from wavetrainlab.burgers import AsymptoticProfile, profile_eval
from wavetrainlab.core import Field
from wavetrainlab.diagnostics import (
    PhaseField,
    compare_to_profile,
    demodulate,
    extract_phase,
    fit_decay_rate,
    renormalized_fourier_check,
)
from wavetrainlab.errors import RegimeError
from wavetrainlab.rates import ErrorSeries
from wavetrainlab.simulate import Trajectory


@pytest.fixture(scope="module")
def grid64(lo_wt):
    return S.mixing_grid(lo_wt, 64, 16)


def synthetic_trajectory(wt, grid, phis, times):
    snaps = []
    for phi, t in zip(phis, times):
        theta = wt.k * grid.nodes - wt.omega * t + phi
        snaps.append(wt.profile_at(theta))
    return Trajectory(grid, np.asarray(times, dtype=float), np.array(snaps),
                      meta={"k": wt.k, "interface_x": 0.25 * grid.length,
                            "time_offset": 1.0, "c_g": 0.0})


class TestDemodulate:
    def test_exact_wave_train(self, lo_wt, grid64):
        u = Field(grid64, lo_wt.profile_at(lo_wt.k * grid64.nodes))
        phi, resid = demodulate(u, lo_wt, t=0.0)
        assert np.max(np.abs(phi)) <= 1e-8
        assert resid <= 1e-8

    def test_pure_translation(self, lo_wt, grid64):
        u = Field(grid64, lo_wt.profile_at(lo_wt.k * grid64.nodes + 0.1))
        phi, _ = demodulate(u, lo_wt, t=0.0)
        assert np.max(np.abs(phi - 0.1)) <= 1e-6

    def test_sinusoidal_phase(self, lo_wt, grid64):
        eps = 0.05
        phi_true = eps * np.sin(2 * np.pi * grid64.nodes / grid64.length)
        u = Field(grid64, lo_wt.profile_at(lo_wt.k * grid64.nodes + phi_true))
        phi, _ = demodulate(u, lo_wt, t=0.0)
        assert np.max(np.abs(phi - phi_true)) <= 0.02 * eps

    def test_phase_undefined_far_from_orbit(self, lo_wt, grid64):
        u = Field(grid64, 1e-3 * np.ones((2, grid64.n_points)))
        with pytest.raises(RegimeError):
            demodulate(u, lo_wt, t=0.0)

    def test_extract_inverts_build(self, lo_wt, grid64):
        # extract_phase after build_initial_data is near-identity for
        # small phase dressings
        spec = S.InitialDataSpec(
            phi0_kind="gaussian_bump", phi0_amplitude=0.1, phi0_width=30.0
        )
        u = S.build_initial_data(lo_wt, spec, grid64)
        phi_true = S.phase_dressing(spec, grid64)
        traj = Trajectory(grid64, np.array([0.0]), np.array([u.values.real]),
                          meta={"k": lo_wt.k})
        pf = extract_phase(traj, lo_wt)
        rel = np.max(np.abs(pf.phi[0] - phi_true)) / np.max(np.abs(phi_true))
        assert rel <= 0.02


class TestExtractPhase:
    def test_trajectory_of_wave_trains(self, lo_wt, grid64):
        times = [0.0, 1.0, 2.0]
        traj = synthetic_trajectory(lo_wt, grid64, [0.0, 0.0, 0.0], times)
        pf = extract_phase(traj, lo_wt)
        assert np.max(np.abs(pf.phi)) <= 1e-8
        assert np.max(pf.residual_sup) <= 1e-8

    def test_time_continuity(self, lo_wt, grid64):
        times = [0.0, 1.0, 2.0]
        traj = synthetic_trajectory(lo_wt, grid64, [0.0, 0.05, 0.1], times)
        pf = extract_phase(traj, lo_wt)
        assert np.max(np.abs(pf.phi[2] - 0.1)) <= 1e-6


class TestCompare:
    @staticmethod
    def paired_step_phase(grid, prof, t_th):
        # erf step at L/4 with the compensating step at 3L/4 (unwrapped
        # frames: the periodic wrap error is exponentially small)
        x = grid.nodes
        return (
            profile_eval(prof, x - 0.25 * grid.length, t_th)
            - profile_eval(prof, x - 0.75 * grid.length, t_th)
            + prof.phi_minus
        )

    @staticmethod
    def direct_phase_field(grid, phis, qs, times, k):
        return PhaseField(
            grid=grid,
            times=np.asarray(times, dtype=float),
            phi=np.array(phis),
            q=np.array(qs),
            residual_sup=np.zeros(len(times)),
            meta={"k": k, "interface_x": 0.25 * grid.length, "time_offset": 1.0,
                  "c_g": 0.0},
        )

    def test_exact_profile_zero_series(self, lo_wt, grid64):
        prof = AsymptoticProfile("erf_phase", 0.75, phi_minus=-0.1, phi_plus=0.1)
        x0 = 0.25 * grid64.length
        times = [0.0, 4.0]
        phis, qs = [], []
        for t in times:
            frame = (grid64.nodes - x0 + 0.5 * grid64.length) % grid64.length \
                - 0.5 * grid64.length
            phis.append(profile_eval(prof, frame, t + 1.0))
            qs.append(profile_eval(prof, frame, t + 1.0, derivative=1))
        pf = self.direct_phase_field(grid64, phis, qs, times, lo_wt.k)
        series = compare_to_profile(pf, prof, c_g=0.0)
        assert np.max(series.sup_err) <= 1e-14

    def test_frame_consistency(self, lo_wt, grid64):
        # shifting data and profile by the same c_g t leaves the series unchanged
        prof = AsymptoticProfile("gaussian", 0.75, A=1.5)
        x0 = 0.25 * grid64.length
        h = grid64.spacing
        c = 8 * h  # displacement per unit time aligned with the grid
        times = [0.0, 1.0, 2.0]
        static_phis, moving_phis = [], []
        for t in times:
            frame0 = (grid64.nodes - x0 + 0.5 * grid64.length) % grid64.length \
                - 0.5 * grid64.length
            static_phis.append(profile_eval(prof, frame0, t + 1.0))
            framec = (grid64.nodes - x0 - c * t + 0.5 * grid64.length) % grid64.length \
                - 0.5 * grid64.length
            moving_phis.append(profile_eval(prof, framec, t + 1.0))
        tr0 = synthetic_trajectory(lo_wt, grid64, static_phis, times)
        trc = synthetic_trajectory(lo_wt, grid64, moving_phis, times)
        s0 = compare_to_profile(extract_phase(tr0, lo_wt), prof, c_g=0.0)
        sc = compare_to_profile(extract_phase(trc, lo_wt), prof, c_g=c)
        assert np.max(np.abs(s0.sup_err - sc.sup_err)) <= 1e-12

    def test_wavenumber_kind(self, lo_wt, grid64):
        prof = AsymptoticProfile("erf_phase", 0.75, phi_minus=-0.1, phi_plus=0.1)
        x0 = 0.25 * grid64.length
        frame = (grid64.nodes - x0 + 0.5 * grid64.length) % grid64.length \
            - 0.5 * grid64.length
        phi = profile_eval(prof, frame, 2.0)
        q = profile_eval(prof, frame, 2.0, derivative=1)
        pf = self.direct_phase_field(grid64, [phi], [q], [1.0], lo_wt.k)
        series = compare_to_profile(pf, prof, c_g=0.0, kind="wavenumber")
        assert np.max(series.sup_err) <= 1e-14

    def test_demodulated_step_tracks_profile(self, lo_wt, grid64):
        # full round trip through the carrier at a diffused interface
        prof = AsymptoticProfile("erf_phase", 0.75, phi_minus=-0.1, phi_plus=0.1)
        t_th = 400.0
        phi = self.paired_step_phase(grid64, prof, t_th)
        traj = synthetic_trajectory(lo_wt, grid64, [phi], [t_th - 1.0])
        pf = extract_phase(traj, lo_wt)
        series = compare_to_profile(pf, prof, c_g=0.0,
                                    window_width=0.4 * grid64.length)
        assert np.max(series.sup_err) <= 2e-3


class TestFourierCheck:
    def test_zero_mass_stays_zero(self, lo_wt, grid64):
        # localized bump: window integral of q vanishes
        x0 = 0.25 * grid64.length
        bump = 0.05 * np.exp(-((grid64.nodes - x0) ** 2) / 18.0)
        traj = synthetic_trajectory(lo_wt, grid64, [bump, bump], [0.0, 1.0])
        pf = extract_phase(traj, lo_wt)
        series = renormalized_fourier_check(pf, 0.75, "mass_conservation")
        assert np.max(np.abs(np.array(series.meta["masses"]))) <= 1e-8

    def test_step_mass_equals_phase_jump(self, lo_wt, grid64):
        prof = AsymptoticProfile("erf_phase", 0.75, phi_minus=-0.2, phi_plus=0.2)
        x = grid64.nodes
        phi = (
            profile_eval(prof, x - 0.25 * grid64.length, 3.0)
            - profile_eval(prof, x - 0.75 * grid64.length, 3.0)
            - 0.2
        )
        traj = synthetic_trajectory(lo_wt, grid64, [phi], [0.0])
        pf = extract_phase(traj, lo_wt)
        series = renormalized_fourier_check(pf, 0.75, "mass_conservation")
        assert abs(series.meta["masses"][0] - 0.4) <= 1e-6

    def test_uc_profile_shape(self, lo_wt, grid64):
        # synthetic q exactly on the Gaussian-derivative profile
        alpha = 0.75
        x0 = 0.25 * grid64.length
        t_sim = 40.0
        frame = (grid64.nodes - x0 + 0.5 * grid64.length) % grid64.length \
            - 0.5 * grid64.length
        prof = AsymptoticProfile("gaussian", alpha, A=1.0)
        phi = profile_eval(prof, frame, t_sim + 1.0)
        traj = synthetic_trajectory(lo_wt, grid64, [phi], [t_sim])
        pf = extract_phase(traj, lo_wt)
        series = renormalized_fourier_check(pf, alpha, "uc_profile")
        assert series.sup_err[0] <= 0.01  # correlation >= 0.99


class TestRateFit:
    def test_synthetic_power_law(self):
        t = np.geomspace(1, 100, 12)
        series = ErrorSeries(t, 3.0 / t, 3.0 / t)
        fit = fit_decay_rate(series, t_min=0.0)
        assert abs(fit.slope + 1.0) <= 1e-3
        assert fit.residual <= 1e-10

    def test_needs_five_points(self):
        t = np.array([1.0, 2.0, 4.0])
        with pytest.raises(ValueError):
            fit_decay_rate(ErrorSeries(t, 1 / t, 1 / t), t_min=0.0)

    def test_log_domain_error(self):
        t = np.geomspace(1, 10, 6)
        e = 1 / t
        e[2] = 0.0
        with pytest.raises(ValueError):
            fit_decay_rate(ErrorSeries(t, e, e), t_min=0.0)
