"""Config-driven orchestration of the computational pipelines.

One JSON config per run; every run writes meta.json with the resolved
parameters and emits the module-specific CSV/JSON artifacts into --out.
Exit codes: 0 success, 2 regime or convergence failures, 3 config errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np
from jsonschema import Draft202012Validator

from . import bloch, burgers, diagnostics, simulate
from .core import Field, PeriodicGrid
from .errors import (
    CaseMismatchError,
    CommensurabilityError,
    ConfigError,
    DegenerateSystemError,
    DomainTruncationError,
    InconsistencyError,
    InstabilityError,
    IsolationError,
    NewtonConvergenceError,
    RegimeError,
)
from .rates import ErrorSeries, fit_decay_rate
from .rdsys import load_system
from .wavetrain import (
    _local_fit,
    continue_branch,
    lambda_omega_wave_train_guess,
    solve_wave_train,
)

RUNTIME_ERRORS = (
    NewtonConvergenceError,
    DegenerateSystemError,
    RegimeError,
    InstabilityError,
    DomainTruncationError,
    CaseMismatchError,
    IsolationError,
    CommensurabilityError,
    InconsistencyError,
)

_SYSTEM_SCHEMA = {
    "type": "object",
    "properties": {
        "family": {"type": "string"},
        "gamma": {"type": "number"},
        "d": {"type": "integer", "minimum": 1},
        "D": {"type": "array"},
        "f_polynomial": {"type": "array"},
    },
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["command"],
    "properties": {
        "command": {
            "enum": [
                "wavetrain",
                "branch",
                "bloch",
                "burgers",
                "rg",
                "simulate",
                "mixing-report",
            ]
        },
        "seed": {"type": "integer"},
        "system": _SYSTEM_SCHEMA,
        "family": {"type": "string"},
        "gamma": {"type": "number"},
        "k": {
            "oneOf": [
                {"type": "number"},
                {"type": "array", "items": {"type": "number"}, "minItems": 2,
                 "maxItems": 2},
            ]
        },
        "steps": {"type": "integer", "minimum": 1},
        "profile_points": {"type": "integer", "minimum": 8},
        "n_ell": {"type": "integer", "minimum": 8},
        "n_eigs_out": {"type": "integer", "minimum": 1},
        "alpha": {"type": "number", "exclusiveMinimum": 0},
        "beta": {"type": "number"},
        "burgers_gamma": {"type": "number"},
        "d1": {"type": "integer", "minimum": 0},
        "d2": {"type": "integer", "minimum": 0},
        "case": {"enum": ["i", "ii", "iii"]},
        "domain_length": {"type": "number", "exclusiveMinimum": 0},
        "n_points": {"type": "integer", "minimum": 8},
        "dt": {"type": "number", "exclusiveMinimum": 0},
        "T": {"type": "number"},
        "T_list": {"type": "array", "items": {"type": "number"}},
        "q0": {"type": "object"},
        "L": {"type": "number", "minimum": 2, "maximum": 8},
        "n_iter": {"type": "integer", "minimum": 1},
        "scaling": {"enum": ["nonzero_mass", "zero_mass"]},
        "scenario": {"enum": ["mixing", "localized"]},
        "phi_d": {"type": "number"},
        "theta0": {"type": "number"},
        "k0": {"type": "number"},
        "rate_t_min": {"type": "number"},
        "phi0_kind": {"enum": ["zero", "gaussian_bump", "tanh_step"]},
        "phi_minus": {"type": "number"},
        "phi_plus": {"type": "number"},
        "phi0_amplitude": {"type": "number"},
        "phi0_width": {"type": "number", "exclusiveMinimum": 0},
        "n_wavelengths": {"type": "integer", "minimum": 2},
        "points_per_wavelength": {"type": "integer", "minimum": 16},
        "t_final": {"type": "number", "minimum": 1},
        "threads": {"type": "integer", "minimum": 1},
    },
    "additionalProperties": False,
}


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.17g}"


def write_csv(path: Path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    path.write_text("\n".join(lines) + "\n")


def _system_from_config(config: dict):
    if "system" in config:
        return load_system(config["system"])
    if "family" in config:
        return load_system({"family": config["family"],
                            "gamma": config.get("gamma", 0.0)})
    raise ConfigError("config must provide 'system' or 'family'")


def _config_gamma(config: dict) -> float:
    if "gamma" in config:
        return float(config["gamma"])
    return float(config.get("system", {}).get("gamma", 0.0))


def _wave_train(config: dict, k: float):
    # Newton is seeded with the circular lambda-omega profile; that covers
    # the built-in family and nearby gauge-broken variants
    system = _system_from_config(config)
    m = int(config.get("profile_points", 64))
    guess, om_unit = lambda_omega_wave_train_guess(k, m)
    omega_guess = _config_gamma(config) * om_unit
    return system, solve_wave_train(system, k, guess, omega_guess)


def _q0_field(config: dict) -> Field:
    length = float(config.get("domain_length", 400.0))
    n = int(config.get("n_points", 2048))
    grid = PeriodicGrid(n, length)
    X = grid.nodes - 0.5 * length
    q0spec = config.get("q0", {"kind": "gaussian", "mass": 1.0, "width": 2.0})
    kind = q0spec.get("kind", "gaussian")
    width = float(q0spec.get("width", 2.0))
    offset = float(q0spec.get("center_offset", 0.0))
    if kind == "gaussian":
        mass = float(q0spec.get("mass", 1.0))
        vals = np.exp(-((X - offset) ** 2) / (2 * width**2))
        vals *= mass / (np.sum(vals) * grid.spacing)
    elif kind == "odd":
        amp = float(q0spec.get("amplitude", 0.1))
        vals = amp * (X - offset) * np.exp(-((X - offset) ** 2) / (2 * width**2))
        vals -= np.mean(vals)
    else:
        raise ConfigError(f"unknown q0 kind {kind!r}")
    return Field(grid, vals[None, :])


# ---------------------------------------------------------------------------
# command handlers


def _run_wavetrain(config: dict, out: Path) -> list[str]:
    k = float(config["k"])
    system, wt = _wave_train(config, k)
    (out / "wavetrain.json").write_text(
        json.dumps(
            {
                "k": wt.k,
                "omega": wt.omega,
                "c_p": wt.c_p,
                "residual_norm": wt.residual_norm,
                "system": system.name,
            },
            indent=2,
            sort_keys=True,
        )
    )
    th = wt.grid.nodes
    rows = [
        [th[i]] + [wt.profile.values.real[c, i] for c in range(wt.profile.d)]
        for i in range(wt.grid.n_points)
    ]
    write_csv(out / "profile.csv",
              ["theta"] + [f"u{c}" for c in range(wt.profile.d)], rows)
    return [f"[wavetrain] k={wt.k:g} omega={wt.omega:.12g} residual={wt.residual_norm:.3e}"]


def _run_branch(config: dict, out: Path) -> list[str]:
    k_range = config["k"]
    if not isinstance(k_range, list):
        raise ConfigError("branch command requires k: [k_min, k_max]")
    k_min, k_max = map(float, k_range)
    steps = int(config.get("steps", 17))
    k0 = float(config.get("k0", 0.5 * (k_min + k_max)))
    system, wt = _wave_train(config, k0)
    branch = continue_branch(system, k_min, k_max, steps, wt)
    rows = []
    for i, k in enumerate(branch.k_samples):
        c0, c1, c2 = _local_fit(branch, float(k), allow_edge=True)
        rows.append(
            [k, branch.omega_samples[i], c1, -0.5 * c2, branch.residuals[i]]
        )
    write_csv(out / "branch.csv", ["k", "omega", "c_g", "beta", "residual_norm"], rows)
    return [f"[branch] {branch.k_samples.size} points over "
            f"[{branch.k_samples[0]:g}, {branch.k_samples[-1]:g}]"]


def _run_bloch(config: dict, out: Path, threads: int) -> list[str]:
    k = float(config["k"])
    system, wt = _wave_train(config, k)
    n_ell = int(config.get("n_ell", 128))
    data = bloch.compute_spectrum(wt, bloch.brillouin_grid(k, n_ell), threads=threads)
    report = bloch.verify_hypothesis1(data, min_points=min(64, n_ell))
    n_out = int(config.get("n_eigs_out", 8))
    rows = []
    for i, ell in enumerate(data.ell_samples):
        for j in range(min(n_out, data.eigenvalues.shape[1])):
            lam = data.eigenvalues[i, j]
            rows.append([ell, j + 1, lam.real, lam.imag])
    write_csv(out / "spectrum.csv", ["ell", "j", "re_lambda", "im_lambda"], rows)
    (out / "stability.json").write_text(
        json.dumps(
            {
                "stable": report.stable,
                "sigma0": report.sigma0,
                "ell0": report.ell0,
                "alpha0": report.alpha0,
                "ell1": report.ell1,
                "violations": report.violations,
                "alpha": data.alpha,
                "lambda1_prime0_imag": data.lambda1_prime0.imag,
            },
            indent=2,
            sort_keys=True,
        )
    )
    return [
        f"[bloch] stable={report.stable} alpha={data.alpha:.6g} "
        f"sigma0={report.sigma0:.4g} isolation={report.ell1:.4g}"
    ]


def _run_burgers(config: dict, out: Path) -> list[str]:
    p = burgers.BurgersProblem(
        alpha=float(config.get("alpha", 1.0)),
        beta=float(config.get("beta", 0.0)),
        gamma=float(config.get("burgers_gamma", 0.0)),
        d1=int(config.get("d1", 0)),
        d2=int(config.get("d2", 0)),
    )
    q0 = _q0_field(config)
    T_list = np.array(config.get("T_list", [10.0, 20.0, 40.0, 80.0, 160.0, 320.0]))
    case = config.get("case", "ii")
    series = burgers.verify_prop1(case, p, q0, T_list, dt=float(config.get("dt", 0.02)))
    rows = []
    for i, t in enumerate(series.times):
        if i >= 2 and np.all(series.sup_err[: i + 1] > 0):
            sl = np.polyfit(np.log(series.times[: i + 1]),
                            np.log(series.sup_err[: i + 1]), 1)[0]
        else:
            sl = 0.0
        rows.append([t, series.sup_err[i], series.weighted_err[i], sl])
    write_csv(out / "burgers_error.csv",
              ["T", "sup_err", "weighted_err", "fitted_slope_so_far"], rows)
    return [f"[burgers] case {case}: final rescaled sup err {series.sup_err[-1]:.3e}"]


def _run_rg(config: dict, out: Path) -> list[str]:
    p = burgers.BurgersProblem(
        alpha=float(config.get("alpha", 1.0)),
        beta=float(config.get("beta", 0.0)),
        gamma=float(config.get("burgers_gamma", 0.0)),
        d1=int(config.get("d1", 0)),
        d2=int(config.get("d2", 0)),
    )
    q0 = _q0_field(config)
    seq = burgers.rg_iterate(
        p,
        q0,
        float(config.get("L", 2.0)),
        int(config.get("n_iter", 6)),
        config.get("scaling", "nonzero_mass"),
        dt=float(config.get("dt", 0.005)),
    )
    rows = [
        [n + 1, seq.errors[n], seq.ratios[n] if n > 0 else float("nan"), seq.masses[n]]
        for n in range(len(seq.errors))
    ]
    write_csv(out / "rg.csv", ["n", "error", "ratio", "mass"], rows)
    return [f"[rg] {seq.scaling_kind}: final error {seq.errors[-1]:.3e}"]


def _run_simulate(config: dict, out: Path) -> list[str]:
    k = float(config["k"])
    system, wt = _wave_train(config, k)
    spec = simulate.InitialDataSpec(
        theta0=float(config.get("theta0", 0.0)),
        phi0_kind=config.get("phi0_kind", "zero"),
        phi0_amplitude=float(config.get("phi0_amplitude", 0.0)),
        phi0_width=float(config.get("phi0_width", 1.0)),
        phi_minus=float(config.get("phi_minus", 0.0)),
        phi_plus=float(config.get("phi_plus", 0.0)),
    )
    grid = simulate.mixing_grid(
        wt, int(config.get("n_wavelengths", 32)),
        int(config.get("points_per_wavelength", 16))
    )
    u_ic = simulate.build_initial_data(wt, spec, grid)
    times = simulate.geometric_times(float(config.get("t_final", 10.0)))
    traj = simulate.integrate_rd(
        system, u_ic, float(config.get("t_final", 10.0)),
        float(config.get("dt", 0.02)), snapshot_times=times
    )
    traj.meta.update({"k": wt.k, "omega": wt.omega, "c_p": wt.c_p})
    simulate.save_trajectory(traj, out / "trajectory")
    return [f"[simulate] {traj.times.size} snapshots to t={traj.times[-1]:g}"]


def _run_mixing_report(config: dict, out: Path, threads: int) -> list[str]:
    from .burgers import AsymptoticProfile, profile_eval

    lines = []
    k = float(config["k"])
    gamma = float(config.get("gamma", 0.0))
    system, wt = _wave_train(config, k)

    # dispersion data: branch for (c_g, beta), Bloch spectrum for alpha
    branch = continue_branch(
        system, k - 0.04, k + 0.04, 9,
        wt,
    )
    from .wavetrain import dispersion_derivatives

    c_g, beta = dispersion_derivatives(branch, k)
    data = bloch.compute_spectrum(wt, bloch.brillouin_grid(k, 128), threads=threads)
    alpha = data.alpha
    lines.append(f"[dispersion] c_g={c_g:.6g} beta={beta:.6g} alpha={alpha:.6g}")

    scenario = config.get("scenario", "mixing")
    phi_d = float(config.get("phi_d", 0.5))
    if scenario == "mixing":
        spec = simulate.InitialDataSpec(
            phi0_kind="tanh_step",
            phi_minus=-0.5 * phi_d,
            phi_plus=0.5 * phi_d,
            phi0_width=float(config.get("phi0_width", np.sqrt(np.pi * alpha))),
        )
    else:
        spec = simulate.InitialDataSpec(
            phi0_kind="gaussian_bump",
            phi0_amplitude=float(config.get("phi0_amplitude", 0.2)),
            phi0_width=float(config.get("phi0_width", 4.0)),
        )
    exp = simulate.MixingExperiment(
        system,
        wt,
        spec,
        n_wavelengths=int(config.get("n_wavelengths", 128)),
        points_per_wavelength=int(config.get("points_per_wavelength", 24)),
        t_final=float(config.get("t_final", 100.0)),
        dt=float(config.get("dt", 0.02)),
        c_g=c_g,
        alpha=alpha,
        beta=beta,
    )
    traj = simulate.run_mixing_experiment(exp)
    phase = diagnostics.extract_phase(traj, wt)
    lines.append(f"[simulate] {traj.times.size} snapshots, residual at end "
                 f"{phase.residual_sup[-1]:.3e}")

    center_shift, t_offset = 0.0, None
    if scenario == "mixing":
        if abs(beta) > 1e-8:
            profile = AsymptoticProfile(
                "logerf_phase", alpha, beta=beta,
                phi_minus=-0.5 * phi_d, phi_plus=0.5 * phi_d,
            )
        else:
            profile = AsymptoticProfile(
                "erf_phase", alpha, phi_minus=-0.5 * phi_d, phi_plus=0.5 * phi_d
            )
    else:
        fit = diagnostics.fit_gaussian_phase(phase, alpha, c_g)
        profile = AsymptoticProfile("gaussian", alpha, A=fit["phi_lim"])
        center_shift, t_offset = fit["center_shift"], fit["time_offset"]
        lines.append(f"[fit] phi_lim={fit['phi_lim']:.6g} "
                     f"time_offset={fit['time_offset']:.4g}")

    series = diagnostics.compare_to_profile(
        phase, profile, c_g, kind="phase",
        center_shift=center_shift, time_offset=t_offset,
    )
    # the time column is the standard theory clock t_sim + 1; a fitted clock
    # offset only enters the profile evaluation
    write_csv(
        out / "error.csv",
        ["t", "sup_err", "weighted_err"],
        [[series.times[i] + 1.0, series.sup_err[i], series.weighted_err[i]]
         for i in range(series.times.size)],
    )

    t_min = float(config.get("rate_t_min", 10.0))
    positive = ErrorSeries(
        series.times[1:] + 1.0,
        np.maximum(series.sup_err[1:], 1e-16),
        np.maximum(series.weighted_err[1:], 1e-16),
    )
    if np.count_nonzero(positive.times >= t_min) < 5:
        t_min = float(positive.times[max(0, positive.times.size - 5)])
    rate = fit_decay_rate(positive, t_min=t_min)
    (out / "rate.json").write_text(
        json.dumps(
            {
                "slope": rate.slope,
                "intercept": rate.intercept,
                "residual": rate.residual,
                "window": list(rate.window),
            },
            indent=2,
            sort_keys=True,
        )
    )
    lines.append(f"[rate] slope={rate.slope:.4f} over t in {rate.window}")

    # fronts: extracted phase and predicted profile in the group-velocity frame
    x = phase.grid.nodes
    x0 = float(phase.meta.get("interface_x"))
    t_off_eff = t_offset if t_offset is not None else 1.0
    rows = []
    sel = range(0, phase.times.size, max(1, phase.times.size // 6))
    stride = max(1, phase.grid.n_points // 2048)
    for i in sel:
        t_sim = phase.times[i]
        frame = (x - (x0 + c_g * t_sim) + 0.5 * phase.grid.length) % phase.grid.length \
            - 0.5 * phase.grid.length
        target = profile_eval(profile, frame, t_sim + t_off_eff)
        for j in range(0, phase.grid.n_points, stride):
            if abs(frame[j]) <= 0.25 * phase.grid.length:
                rows.append([t_sim, frame[j], phase.phi[i][j], target[j]])
    write_csv(out / "fronts.csv", ["t", "x_frame", "phi", "profile"], rows)

    masses = diagnostics.renormalized_fourier_check(
        phase, alpha, "mass_conservation", c_g=c_g
    )
    mass_arr = np.array(masses.meta["masses"])
    report = {
        "alpha": alpha,
        "beta": beta,
        "c_g": c_g,
        "k": k,
        "gamma": gamma,
        "scenario": scenario,
        "phi_d": phi_d if scenario == "mixing" else 0.0,
        "masses": [float(m) for m in mass_arr],
        "mass_max_drift": float(np.max(np.abs(mass_arr - mass_arr[0]))),
        "final_sup_err": float(series.sup_err[-1]),
        "sup_err": [float(e) for e in series.sup_err],
        "times": [float(t) + 1.0 for t in series.times],
    }
    if scenario == "mixing":
        report["mass_max_error_vs_phi_d"] = float(np.max(np.abs(mass_arr - phi_d)))
    if scenario == "localized":
        fc = diagnostics.renormalized_fourier_check(
            phase, alpha, "uc_profile", c_g=c_g, time_offset=t_offset
        )
        report["final_shape_correlation"] = float(1.0 - fc.sup_err[-1])
    (out / "report.json").write_text(json.dumps(report, indent=2, sort_keys=True))
    lines.append(f"[report] final sup err {series.sup_err[-1]:.4g}")
    return lines


def run(config: dict, out_dir: str | Path, threads: int = 1) -> int:
    """Validate the config, dispatch the command, write artifacts and meta.json."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    def fail(code: int, err: Exception) -> int:
        (out / "errors.json").write_text(
            json.dumps(
                {"error_type": type(err).__name__, "message": str(err)},
                indent=2, sort_keys=True,
            )
        )
        print(f"error: {err}", file=sys.stderr)
        return code

    validator = Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    if errors:
        e = errors[0]
        key = "/".join(str(p) for p in e.absolute_path) or "<root>"
        return fail(3, ConfigError(f"config key {key!r}: {e.message}"))

    resolved = dict(config)
    resolved.setdefault("seed", 0)
    np.random.default_rng(resolved["seed"])  # all randomness is seeded
    (out / "meta.json").write_text(json.dumps(resolved, indent=2, sort_keys=True))

    try:
        command = config["command"]
        if command == "wavetrain":
            lines = _run_wavetrain(config, out)
        elif command == "branch":
            lines = _run_branch(config, out)
        elif command == "bloch":
            lines = _run_bloch(config, out, threads)
        elif command == "burgers":
            lines = _run_burgers(config, out)
        elif command == "rg":
            lines = _run_rg(config, out)
        elif command == "simulate":
            lines = _run_simulate(config, out)
        else:
            lines = _run_mixing_report(config, out, threads)
    except (ConfigError, ValueError) as err:
        return fail(3, err)
    except RUNTIME_ERRORS as err:
        return fail(2, err)
    for line in lines:
        print(line)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="wavetrainlab",
        description="wave trains, Bloch spectra, Burgers asymptotics and "
                    "diffusive-mixing diagnostics",
    )
    parser.add_argument("--config", required=True, help="JSON run configuration")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int,
                        default=int(os.environ.get("WAVETRAIN_THREADS", "1")))
    parser.add_argument("--verbose", action="store_true")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as err:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "errors.json").write_text(
            json.dumps({"error_type": type(err).__name__, "message": str(err)})
        )
        print(f"error: cannot read config: {err}", file=sys.stderr)
        return 3
    return run(config, args.out, threads=args.threads)


if __name__ == "__main__":
    sys.exit(main())
