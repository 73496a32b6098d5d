"""Acceptance gate: one test per criterion, at the stated tolerances.

Each test prints a single [criterion N] PASS/FAIL line.  The heavyweight
end-to-end criteria run through the CLI and leave their artifacts under
artifacts/ for the plotting package.
"""

import json
import time
import warnings

import numpy as np

from wavetrainlab import bloch, solve_wave_train
from wavetrainlab.burgers import (
    BurgersProblem,
    cole_hopf_exact,
    rg_iterate,
    solve_burgers,
    verify_prop1,
)
from wavetrainlab.cli import run as cli_run
from wavetrainlab.core import Field, PeriodicGrid
from wavetrainlab.rates import ErrorSeries, fit_decay_rate
from wavetrainlab.wavetrain import (
    dk_profile_at,
    lambda_omega_wave_train_guess,
)

from conftest import lo_alpha


def _report(num: int, ok: bool, detail: str) -> None:
    print(f"[criterion {num}] {'PASS' if ok else 'FAIL'}  {detail}")
    assert ok, f"criterion {num}: {detail}"


def _read_column(path, name):
    import csv

    with open(path) as fh:
        return np.array([float(r[name]) for r in csv.DictReader(fh)])


class TestCriterion1:
    def test_wave_train_exactness(self, lo_system):
        t0 = time.perf_counter()
        prof, om_unit = lambda_omega_wave_train_guess(0.3)
        wt = solve_wave_train(lo_system, 0.3, prof, 0.5 * om_unit)
        rng = np.random.default_rng(42)
        pert = Field(prof.grid,
                     prof.values.real * (1 + 0.01 * rng.standard_normal(prof.values.shape)))
        hist = []
        solve_wave_train(lo_system, 0.3, pert, 0.5 * om_unit, history=hist)
        hist = np.array(hist)
        hist = hist[hist > 1e-15]
        # e_{n+1} <= C e_n^2 with a uniform C over three consecutive steps
        quad = hist.size >= 4 and np.all(hist[1:4] / hist[:3] ** 2 <= 10.0)
        elapsed = time.perf_counter() - t0
        ok = (
            abs(wt.omega - 0.455) <= 1e-10
            and wt.residual_norm <= 1e-10
            and quad
            and elapsed < 1.0
        )
        _report(1, ok, f"omega err {abs(wt.omega-0.455):.2e}, residual "
                       f"{wt.residual_norm:.2e}, quadratic={quad}, {elapsed:.2f}s")


class TestCriterion2:
    def test_dispersion_coefficients(self, artifact_dir):
        t0 = time.perf_counter()
        out = artifact_dir / "branch"
        code = cli_run(
            {"command": "branch", "family": "lambda_omega", "gamma": 0.5,
             "k": [0.1, 0.5], "steps": 17},
            out,
        )
        ks = _read_column(out / "branch.csv", "k")
        omegas = _read_column(out / "branch.csv", "omega")
        cgs = _read_column(out / "branch.csv", "c_g")
        betas = _read_column(out / "branch.csv", "beta")
        omega_err = np.max(np.abs(omegas - 0.5 * (1 - ks**2)))
        i = int(np.argmin(np.abs(ks - 0.3)))
        elapsed = time.perf_counter() - t0
        ok = (
            code == 0
            and omega_err <= 1e-8
            and abs(cgs[i] + 0.3) <= 1e-6
            and abs(betas[i] - 0.5) <= 1e-6
            and elapsed < 10.0
        )
        _report(2, ok, f"omega err {omega_err:.2e}, c_g err {abs(cgs[i]+0.3):.2e}, "
                       f"beta err {abs(betas[i]-0.5):.2e}, {elapsed:.1f}s")


class TestCriterion3:
    def test_bloch_coefficients(self, gl_wt, gl_bloch, artifact_dir):
        t0 = time.perf_counter()
        alpha_exact = lo_alpha(0.3, 0.0)
        u_ad = bloch.adjoint_null(gl_wt)
        dku, _ = dk_profile_at(gl_wt)
        lam1p, lam1pp = bloch.lambda1_derivatives_quadrature(gl_wt, u_ad, dku)
        alpha_quad = -0.5 * lam1pp
        # cglin identity: -Im lambda_1'(0) = -c_p + c_g (both zero at gamma=0)
        cglin_err = abs(-lam1p.imag - (-gl_wt.c_p + 0.0))
        r1 = bloch.check_dlv_identity(gl_bloch, dku, h=1e-3)
        r2 = bloch.check_dlv_identity(gl_bloch, dku, h=5e-4)
        richardson = 3.0 <= r1 / r2 <= 5.5
        # persist the spectrum artifacts for the plots package
        code = cli_run(
            {"command": "bloch", "family": "lambda_omega", "gamma": 0.0,
             "k": 0.3, "n_ell": 128},
            artifact_dir / "bloch",
        )
        elapsed = time.perf_counter() - t0
        ok = (
            code == 0
            and abs(gl_bloch.alpha - alpha_exact) <= 1e-4
            and abs(alpha_quad - gl_bloch.alpha) <= 1e-4
            and cglin_err <= 1e-6
            and r1 <= 1e-5
            and richardson
            and elapsed < 30.0
        )
        _report(3, ok, f"alpha fit err {abs(gl_bloch.alpha-alpha_exact):.2e}, "
                       f"fit-quad gap {abs(alpha_quad-gl_bloch.alpha):.2e}, "
                       f"cglin {cglin_err:.2e}, dlv {r1:.2e} ratio {r1/r2:.2f}, "
                       f"{elapsed:.1f}s")


class TestCriterion4:
    def test_hypothesis1_classifier(self, gl_system, gl_bloch):
        t0 = time.perf_counter()
        rep_stable = bloch.verify_hypothesis1(gl_bloch)
        prof, _ = lambda_omega_wave_train_guess(0.7)
        wt7 = solve_wave_train(gl_system, 0.7, prof, 0.0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            data7 = bloch.compute_spectrum(wt7, bloch.brillouin_grid(0.7, 128))
        rep_unstable = bloch.verify_hypothesis1(data7)
        elapsed = time.perf_counter() - t0
        ok = (
            rep_stable.stable
            and rep_stable.sigma0 > 0
            and rep_stable.alpha0 > 0
            and not rep_unstable.stable
            and elapsed < 30.0
        )
        _report(4, ok, f"k=0.3 stable (sigma0={rep_stable.sigma0:.4f}, "
                       f"alpha0={rep_stable.alpha0:.4f}); k=0.7 stable="
                       f"{rep_unstable.stable}; {elapsed:.1f}s")


class TestCriterion5:
    def test_transform_and_filters(self, lo_wt, lo_bloch):
        t0 = time.perf_counter()
        k = 0.3
        N, M = 32, 16
        grid = PeriodicGrid(N * M, N * 2 * np.pi / k)
        rng = np.random.default_rng(5)

        def band_limited(d, seed_off):
            c = np.zeros((d, grid.n_points), dtype=complex)
            mmax = grid.n_points // 4
            re = rng.standard_normal((d, 2 * mmax - 1))
            im = rng.standard_normal((d, 2 * mmax - 1))
            c[:, :mmax] = re[:, :mmax] + 1j * im[:, :mmax]
            c[:, -mmax + 1:] = re[:, mmax:] + 1j * im[:, mmax:]
            return Field(grid, np.fft.ifft(c * grid.n_points, axis=-1))

        u = band_limited(2, 0)
        bf = bloch.bloch_transform(u, k)
        rt = np.max(np.abs(bloch.bloch_inverse(bf, grid).values - u.values))
        lhs = np.sum(np.abs(u.values) ** 2) * grid.spacing
        parseval = abs(lhs - bf.norm_sq()) / lhs
        v = band_limited(2, 1)
        conv = bloch.bloch_convolution(bf, bloch.bloch_transform(v, k))
        ref = bloch.bloch_transform(Field(grid, u.values * v.values), k)
        conv_err = np.max(np.abs(conv.values - ref.values)) / np.max(np.abs(ref.values))

        rep = bloch.verify_hypothesis1(lo_bloch)
        filters = bloch.build_mode_filters(lo_bloch, rep.ell1 / 2)
        worst = 0.0
        for trial in range(20):
            z = rng.standard_normal((2, filters.ell.size, filters.m)) \
                + 1j * rng.standard_normal((2, filters.ell.size, filters.m))
            bfz = bloch.BlochField(k, z, filters.ell.copy(),
                                   2 * np.pi * np.arange(filters.m) / filters.m)
            fsc = filters.apply("fs_c", bfz)
            fss = filters.apply("fs_s", bfz)
            mfc = filters.apply("mf_c", bfz)
            mfs = filters.apply("mf_s", bfz)
            sc = np.max(np.abs(z))
            checks = [
                fsc.values - filters.apply("c", fsc).values,
                mfc.values - filters.apply("fs_c", mfc).values,
                fss.values - filters.apply("s", fss).values,
                mfs.values - filters.apply("s", mfs).values,
                fsc.values + fss.values - z,
                mfc.values + mfs.values - z,
            ]
            worst = max(worst, max(np.max(np.abs(c)) for c in checks) / sc)
        elapsed = time.perf_counter() - t0
        ok = (
            rt <= 1e-12
            and parseval <= 1e-10
            and worst <= 1e-10
            and conv_err <= 1e-10
            and elapsed < 5.0
        )
        _report(5, ok, f"roundtrip {rt:.1e}, parseval {parseval:.1e}, "
                       f"mfprop {worst:.1e}, conv {conv_err:.1e}, {elapsed:.1f}s")


class TestCriterion6:
    def test_phase_multiplier_identity(self, lo_wt, lo_bloch):
        t0 = time.perf_counter()
        rep = bloch.verify_hypothesis1(lo_bloch)
        ell1 = rep.ell1 / 2
        filters = bloch.build_mode_filters(lo_bloch, ell1)
        pmd0 = bloch.phase_multiplier_check(lo_wt, lo_bloch, filters,
                                            np.array([0.0]))
        grid_ell = np.geomspace(ell1 / 64, ell1 / 8, 10)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pmd = bloch.phase_multiplier_check(lo_wt, lo_bloch, filters, grid_ell)
        slope = np.polyfit(np.log(pmd.ell), np.log(pmd.residual), 1)[0]
        elapsed = time.perf_counter() - t0
        ok = slope >= 2.8 and abs(pmd0.m[0]) <= 1e-10 and elapsed < 10.0
        _report(6, ok, f"defect exponent {slope:.3f}, |m(0)| = {abs(pmd0.m[0]):.1e}, "
                       f"{elapsed:.1f}s")


class TestCriterion7:
    def test_burgers_oracles(self):
        t0 = time.perf_counter()
        grid = PeriodicGrid(1024, 200.0)
        X = grid.nodes - 100.0
        vals = np.exp(-(X**2) / 4)
        vals /= np.sum(vals) * grid.spacing
        q0 = Field(grid, vals[None, :])
        p = BurgersProblem(1.0, beta=1.0)
        traj = solve_burgers(p, q0, 10.0, dt=0.01)
        exact = cole_hopf_exact(1.0, 1.0, q0, T=10.0)
        ch_err = np.max(np.abs(traj.snapshots[-1] - exact))
        mass_drift = abs(
            (np.sum(traj.snapshots[-1]) - np.sum(traj.snapshots[0])) * grid.spacing
        )
        # Galilean shift
        c, T = 0.4, 5.0
        plain = solve_burgers(p, q0, T, dt=0.01).snapshots[-1]
        lifted = solve_burgers(p, Field(grid, q0.values + c), T, dt=0.01).snapshots[-1]
        kap = 2 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.spacing)
        translated = np.fft.ifft(
            np.fft.fft(plain) * np.exp(1j * kap * 2 * c * p.beta * (T - 1))
        ).real
        gal_err = np.max(np.abs(lifted - (translated + c)))
        elapsed = time.perf_counter() - t0
        ok = (
            ch_err <= 1e-6 and mass_drift <= 1e-10 and gal_err <= 1e-8
            and elapsed < 10.0
        )
        _report(7, ok, f"cole-hopf {ch_err:.1e}, mass {mass_drift:.1e}, "
                       f"galilean {gal_err:.1e}, {elapsed:.1f}s")


class TestCriterion8:
    def test_proposition1(self):
        t0 = time.perf_counter()
        grid = PeriodicGrid(2048, 400.0)
        X = grid.nodes - 200.0
        T_list = np.array([10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 400.0])

        def gaussian(mass, width, offset=0.0):
            vals = np.exp(-((X - offset) ** 2) / (2 * width**2))
            vals *= mass / (np.sum(vals) * grid.spacing)
            return Field(grid, vals[None, :])

        s2 = verify_prop1("ii", BurgersProblem(1.0),
                          gaussian(1.0, np.sqrt(3.0), 0.3), T_list, dt=0.02)
        slope2 = fit_decay_rate(s2, t_min=10.0).slope
        s3 = verify_prop1("iii", BurgersProblem(1.0, beta=1.0),
                          gaussian(1.0, np.sqrt(2.0)), T_list, dt=0.02)
        slope3 = fit_decay_rate(s3, t_min=10.0).slope

        odd = X * np.exp(-(X**2) / 6) / 10
        odd -= np.mean(odd)
        q0_odd = Field(grid, odd[None, :])
        Ts_i = np.array([10.0, 20.0, 50.0, 100.0, 200.0])
        traj = solve_burgers(BurgersProblem(1.0, beta=1.0), q0_odd, 200.0,
                             dt=0.02, snapshot_times=Ts_i)
        sups = np.array([np.max(np.abs(s)) for s in traj.snapshots[1:]])
        scaled = sups * traj.times[1:] ** 0.9
        bounded = np.max(scaled) <= 2.0 * scaled[0]

        # irrelevant perturbation leaves the fitted limit profile unchanged
        T = 200.0
        base = solve_burgers(BurgersProblem(1.0, beta=1.0), gaussian(1.0, np.sqrt(2.0)),
                             T, dt=0.02).snapshots[-1]
        pert = solve_burgers(BurgersProblem(1.0, beta=1.0, gamma=0.1, d1=3, d2=0),
                             gaussian(1.0, np.sqrt(2.0)), T, dt=0.02).snapshots[-1]
        pert_diff = np.sqrt(T) * np.max(np.abs(base - pert))
        elapsed = time.perf_counter() - t0
        ok = (
            slope2 <= -0.4 and slope3 <= -0.4 and bounded and pert_diff <= 2e-2
            and elapsed < 60.0
        )
        _report(8, ok, f"slopes (ii) {slope2:.2f}, (iii) {slope3:.2f}, "
                       f"case-i bounded={bounded}, perturbation {pert_diff:.1e}, "
                       f"{elapsed:.0f}s")


class TestCriterion9:
    def test_rg_contraction(self):
        t0 = time.perf_counter()
        grid = PeriodicGrid(2048, 400.0)
        X = grid.nodes - 200.0
        bound = 2 ** (-0.9)
        asym = 0.35 * np.exp(-((X - 3) ** 2) / 6) + 0.1 * np.exp(-((X + 5) ** 2) / 2)
        asym /= np.sum(asym) * grid.spacing
        seq1 = rg_iterate(BurgersProblem(1.0, beta=1.0),
                          Field(grid, asym[None, :]), 2.0, 6, "nonzero_mass")
        odd = X * np.exp(-(X**2) / 6) / 10 + 0.05 * (
            np.exp(-((X - 4) ** 2) / 3) - np.exp(-((X + 4) ** 2) / 3)
        )
        odd -= np.mean(odd)
        seq2 = rg_iterate(BurgersProblem(1.0, gamma=0.1, d1=3, d2=0),
                          Field(grid, odd[None, :]), 2.0, 6, "zero_mass")
        r1 = np.max(seq1.ratios[1:])
        r2 = np.max(seq2.ratios[1:])
        elapsed = time.perf_counter() - t0
        ok = r1 <= bound and r2 <= bound and elapsed < 60.0
        _report(9, ok, f"max ratios: nonzero-mass {r1:.3f}, zero-mass {r2:.3f} "
                       f"(bound {bound:.3f}), {elapsed:.0f}s")


def _mixing_criterion(num: int, gamma: float, out_dir) -> None:
    t0 = time.perf_counter()
    code = cli_run(
        {
            "command": "mixing-report",
            "family": "lambda_omega",
            "gamma": gamma,
            "k": 0.3,
            "scenario": "mixing",
            "phi_d": 0.5,
            "n_wavelengths": 256,
            "points_per_wavelength": 24,
            "t_final": 100.0,
            "dt": 0.02,
        },
        out_dir,
    )
    report = json.loads((out_dir / "rate.json").read_text()) if code == 0 else {}
    rep = json.loads((out_dir / "report.json").read_text())
    sup = np.array(rep["sup_err"])
    final_ok = sup[-1] <= 0.05 * 0.5
    monotone = np.all(np.diff(sup[-5:]) < 0)
    mass_ok = rep["mass_max_error_vs_phi_d"] <= 1e-6
    elapsed = time.perf_counter() - t0
    ok = code == 0 and final_ok and monotone and mass_ok and elapsed < 600.0
    _report(num, ok, f"final sup err {sup[-1]:.4f} (tol 0.025), monotone={monotone}, "
                     f"mass err {rep['mass_max_error_vs_phi_d']:.2e}, {elapsed:.0f}s")


class TestCriterion10:
    def test_mixing_gaussian_case(self, artifact_dir):
        _mixing_criterion(10, 0.0, artifact_dir / "mixing_b1")


class TestCriterion11:
    def test_mixing_burgers_case(self, artifact_dir):
        _mixing_criterion(11, 0.5, artifact_dir / "mixing_b2")


class TestCriterion12:
    def test_localized_diffusive_stability(self, artifact_dir):
        t0 = time.perf_counter()
        out = artifact_dir / "localized"
        code = cli_run(
            {
                "command": "mixing-report",
                "family": "lambda_omega",
                "gamma": 0.5,
                "k": 0.3,
                "scenario": "localized",
                "phi0_amplitude": 0.2,
                "phi0_width": 4.0,
                "n_wavelengths": 128,
                "points_per_wavelength": 24,
                "t_final": 200.0,
                "dt": 0.02,
            },
            out,
        )
        ts = _read_column(out / "error.csv", "t")
        sups = _read_column(out / "error.csv", "sup_err")
        sel = (ts >= 10.0) & (ts <= 101.0)
        fit = fit_decay_rate(ErrorSeries(ts[sel], sups[sel], sups[sel]), t_min=0.0)
        rep = json.loads((out / "report.json").read_text())
        corr = rep["final_shape_correlation"]
        elapsed = time.perf_counter() - t0
        ok = code == 0 and fit.slope <= -0.75 and corr >= 0.99 and elapsed < 600.0
        _report(12, ok, f"slope {fit.slope:.3f} over t in [10,100], shape "
                        f"correlation {corr:.4f}, {elapsed:.0f}s")
