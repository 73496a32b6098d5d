"""Phase extraction and renormalized comparison of trajectories to limit profiles.

The phase is read off by complex demodulation against the wave train's
first harmonic; the local wave number is its spatial derivative.  Errors
against the closed-form profiles are measured in a window moving with the
group velocity and fitted for decay rates on log-log axes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .burgers import AsymptoticProfile, profile_eval
from .core import Field, PeriodicGrid, weighted_sobolev_norm
from .errors import RegimeError
from .rates import ErrorSeries, RateFit, fit_decay_rate
from .simulate import Trajectory
from .wavetrain import WaveTrain

__all__ = [
    "PhaseField",
    "ErrorSeries",
    "RateFit",
    "demodulate",
    "extract_phase",
    "compare_to_profile",
    "renormalized_fourier_check",
    "fit_decay_rate",
]


def _first_harmonic(wt: WaveTrain) -> np.ndarray:
    coeffs = np.fft.fft(wt.profile.values.real, axis=-1) / wt.grid.n_points
    return coeffs[:, 1]


def _demodulate_full(u: Field, wt: WaveTrain, t: float = 0.0) -> dict:
    grid = u.grid
    c1 = _first_harmonic(wt)
    a_ref = float(np.sum(np.abs(c1) ** 2))
    if a_ref == 0.0:
        raise RegimeError("wave-train profile has no first harmonic to demodulate")
    x = grid.nodes
    carrier = np.exp(-1j * ((wt.k * x) - np.fmod(wt.omega * t, 2 * np.pi)))
    s = np.einsum("i,ix->x", np.conj(c1), u.values.real.astype(complex))
    z_raw = s * carrier
    kap = 2 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.spacing)
    zhat = np.fft.fft(z_raw)
    # smooth cutoff below half the wave number: a sharp truncation would
    # leak algebraic sinc tails from the interfaces onto the plateaus
    from .bloch import chi_cutoff

    z = np.fft.ifft(zhat * chi_cutoff(4.0 * kap / abs(wt.k)))
    amp = np.abs(z)
    if np.median(amp) < 0.1 * a_ref:
        raise RegimeError(
            f"demodulation amplitude {np.median(amp):.3e} below 10% of the "
            f"wave-train first harmonic {a_ref:.3e}; phase undefined"
        )
    phi = np.unwrap(np.angle(z))
    # pick the global branch with the smallest phase magnitude
    phi -= 2 * np.pi * np.round(np.median(phi) / (2 * np.pi))
    phi_raw = np.unwrap(np.angle(z_raw))
    phi_raw -= 2 * np.pi * np.round(np.median(phi_raw - phi) / (2 * np.pi))
    resid = wave_residual(u, wt, phi, t)
    return {"phi": phi, "phi_raw": phi_raw, "residual": resid}


def demodulate(u: Field, wt: WaveTrain, t: float = 0.0) -> tuple[np.ndarray, float]:
    """Phase of u against the reference carrier exp(i(kx - omega t)).

    Projects the components onto the conjugate first harmonic of the
    profile, removes the carrier, low-passes below half the wave number
    with a smooth cutoff and unwraps the angle.  Returns
    (phi, sup-norm of u - u0(theta + phi)).
    """
    out = _demodulate_full(u, wt, t)
    return out["phi"], out["residual"]


def wave_residual(u: Field, wt: WaveTrain, phi: np.ndarray, t: float) -> float:
    """sup norm of u - u0(k x - omega t + phi)."""
    x = u.grid.nodes
    theta = wt.k * x - np.fmod(wt.omega * t, 2 * np.pi) + phi
    return float(np.max(np.abs(u.values.real - wt.profile_at(theta))))


@dataclass(eq=False)
class PhaseField:
    """Unwrapped phase and local wave-number perturbation along a trajectory."""

    grid: PeriodicGrid
    times: np.ndarray
    phi: np.ndarray  # (nt, n)
    q: np.ndarray  # (nt, n) = d_x phi
    residual_sup: np.ndarray  # (nt,) sup |u - u0(theta + phi)|
    phi_raw: np.ndarray | None = None  # unfiltered phase, exact on plateaus
    meta: dict = field(default_factory=dict)


def extract_phase(traj: Trajectory, wt: WaveTrain) -> PhaseField:
    """Complex demodulation of every snapshot, time-continuous in the branch.

    The returned phi is relative to theta = k x - omega t; jumps of 2 pi
    between consecutive snapshots are removed by continuity.
    """
    grid = traj.grid
    kap = 2 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.spacing)
    phis, raws, qs, residuals = [], [], [], []
    prev = None
    for i, t in enumerate(traj.times):
        out = _demodulate_full(traj.field_at(i), wt, t=float(t))
        phi, raw = out["phi"], out["phi_raw"]
        if prev is not None:
            shift = 2 * np.pi * np.round(np.median(phi - prev) / (2 * np.pi))
            phi = phi - shift
            raw = raw - shift
        prev = phi
        q = np.fft.ifft(1j * kap * np.fft.fft(phi)).real
        phis.append(phi)
        raws.append(raw)
        qs.append(q)
        residuals.append(out["residual"])
    return PhaseField(
        grid=grid,
        times=traj.times.copy(),
        phi=np.array(phis),
        q=np.array(qs),
        residual_sup=np.array(residuals),
        phi_raw=np.array(raws),
        meta=dict(traj.meta),
    )


def _window_mask(
    grid: PeriodicGrid, center: float, width: float
) -> np.ndarray:
    """Periodic index mask of the window [center - width/2, center + width/2)."""
    x = grid.nodes
    rel = (x - center + 0.5 * grid.length) % grid.length - 0.5 * grid.length
    return np.abs(rel) <= 0.5 * width


def fit_gaussian_phase(
    phase: PhaseField, alpha: float, c_g: float, snapshot: int = -1
) -> dict:
    """Gaussian-match the late-time phase: amplitude, center and clock offset.

    Matches zeroth, first and second moments of phi(., t) to
    phi_lim G(x - center, t_eff), so phi_lim = mass, center = mean, and
    t_eff = variance / (2 alpha).  Returns phi_lim, the center drift
    relative to the advected interface, and the fitted theory-clock offset
    t_eff - t_sim.
    """
    grid = phase.grid
    x = grid.nodes
    x0 = float(phase.meta.get("interface_x", 0.25 * grid.length))
    t_sim = float(phase.times[snapshot])
    data = phase.phi[snapshot]
    center_exp = x0 + c_g * t_sim
    rel = (x - center_exp + 0.5 * grid.length) % grid.length - 0.5 * grid.length
    mass = float(np.sum(data) * grid.spacing)
    if abs(mass) < 1e-14:
        raise ValueError("phase field has no mass to Gaussian-match")
    mean = float(np.sum(rel * data) * grid.spacing / mass)
    var = float(np.sum((rel - mean) ** 2 * data) * grid.spacing / mass)
    t_eff = var / (2.0 * alpha)
    return {
        "phi_lim": mass,
        "center_shift": mean,
        "time_offset": t_eff - t_sim,
        "t_eff": t_eff,
    }


def compare_to_profile(
    phase: PhaseField,
    profile: AsymptoticProfile,
    c_g: float,
    kind: str = "phase",
    window_width: float | None = None,
    center_shift: float = 0.0,
    time_offset: float | None = None,
) -> ErrorSeries:
    """Error of the extracted phase (or wave number) against a limit profile.

    The profile is evaluated in the frame x - c_g (t - 1) centered on the
    interface recorded in the metadata, on the lab grid, at the theory
    clock t_sim + time_offset.  Errors are taken over a window moving with
    the frame (default: half the domain).
    """
    if kind not in ("phase", "wavenumber"):
        raise ValueError(f"unknown comparison kind {kind!r}")
    grid = phase.grid
    x = grid.nodes
    x0 = float(phase.meta.get("interface_x", 0.25 * grid.length)) + center_shift
    t_off = (
        float(phase.meta.get("time_offset", 1.0)) if time_offset is None else time_offset
    )
    width = window_width if window_width is not None else 0.5 * grid.length
    sups, wns, ts = [], [], []
    for i, t_sim in enumerate(phase.times):
        t_th = t_sim + t_off
        center = x0 + c_g * t_sim
        frame = (x - center + 0.5 * grid.length) % grid.length - 0.5 * grid.length
        target = profile_eval(profile, frame, t_th, derivative=0 if kind == "phase" else 1)
        data = phase.phi[i] if kind == "phase" else phase.q[i]
        mask = _window_mask(grid, center, width)
        diff = np.where(mask, data - target, 0.0)
        sups.append(float(np.max(np.abs(diff))))
        seg = np.roll(diff, grid.n_points // 2 - int(round(center / grid.spacing)))
        idx = np.nonzero(
            np.abs(x - 0.5 * grid.length) <= 0.5 * width
        )[0]
        wgrid = PeriodicGrid(max(idx.size, 8), idx.size * grid.spacing)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            wns.append(
                weighted_sobolev_norm(
                    Field(wgrid, seg[idx][None, :].astype(complex)), m2=1, m1=1
                )
            )
        ts.append(float(t_sim))
    return ErrorSeries(
        times=np.array(ts),
        sup_err=np.array(sups),
        weighted_err=np.array(wns),
        exponent=0.0,
        meta={"kind": kind, "profile": profile, "c_g": c_g, "window_width": width},
    )


def renormalized_fourier_check(
    phase: PhaseField,
    alpha: float,
    target: str = "mass_conservation",
    c_g: float | None = None,
    time_offset: float | None = None,
) -> ErrorSeries:
    """Bloch-space diagnostics of the wave-number perturbation q.

    target='mass_conservation': the window integral of q (the total phase
    jump) per snapshot; sup_err is its drift from the first snapshot and
    meta['masses'] carries the values, which equal phi_d for mixing runs.

    target='uc_profile': the rescaled transform psi(l) = sqrt(t_th) qhat(l /
    sqrt(t_th)) compared in shape against i psi_lim l exp(-alpha l^2);
    sup_err is 1 - correlation, weighted_err the fitted L2 misfit, and
    meta carries psi_lim per snapshot.
    """
    if target not in ("mass_conservation", "uc_profile"):
        raise ValueError(f"unknown target {target!r}")
    grid = phase.grid
    x = grid.nodes
    x0 = float(phase.meta.get("interface_x", 0.25 * grid.length))
    t_off = (
        float(phase.meta.get("time_offset", 1.0)) if time_offset is None else time_offset
    )
    cg = float(phase.meta.get("c_g", 0.0)) if c_g is None else c_g

    if target == "mass_conservation":
        # total phase jump across the window: evaluate the raw demodulated
        # phase at the two plateau endpoints, where it is bias-free
        source = phase.phi_raw if phase.phi_raw is not None else phase.phi
        masses, ts = [], []
        for i, t_sim in enumerate(phase.times):
            center = x0 + cg * t_sim
            ia = int(round(((center - 0.25 * grid.length) % grid.length) / grid.spacing))
            ib = int(round(((center + 0.25 * grid.length) % grid.length) / grid.spacing))
            ia, ib = ia % grid.n_points, ib % grid.n_points
            jump = source[i][ib] - source[i][ia]
            jump -= 2 * np.pi * np.round(
                (jump - (phase.phi[i][ib] - phase.phi[i][ia])) / (2 * np.pi)
            )
            masses.append(float(jump))
            ts.append(float(t_sim))
        masses = np.array(masses)
        drift = np.abs(masses - masses[0])
        if masses.size >= 2:
            rate = np.abs(np.gradient(masses, np.arange(masses.size, dtype=float) + 1))
        else:
            rate = np.zeros_like(masses)
        return ErrorSeries(
            times=np.array(ts),
            sup_err=drift,
            weighted_err=rate,
            meta={"masses": masses, "k": phase.meta.get("k")},
        )

    from .bloch import chi_cutoff

    k_wt = float(phase.meta.get("k", 0.0))
    corr_err, misfit, psi_lims, ts = [], [], [], []
    for i, t_sim in enumerate(phase.times):
        t_th = t_sim + t_off
        center = x0 + cg * t_sim
        mask = _window_mask(grid, center, 0.5 * grid.length)
        qwin = np.where(mask, phase.q[i], 0.0)
        qwin = np.roll(qwin, grid.n_points // 2 - int(round(center / grid.spacing)))
        qhat = np.fft.fft(qwin) * grid.spacing / (2 * np.pi)  # classical 1/2pi FT
        kap = 2 * np.pi * np.fft.fftfreq(grid.n_points, d=grid.spacing)
        # center the transform phase on the window midpoint
        qhat = qhat * np.exp(1j * kap * 0.5 * grid.length)
        # undo the known demodulation low-pass where it is invertible
        if k_wt:
            att = chi_cutoff(4.0 * kap / k_wt)
            good = att >= 0.05
            qhat = np.where(good, qhat / np.where(good, att, 1.0), 0.0)
        else:
            good = np.ones_like(kap, dtype=bool)
        ell = kap * np.sqrt(t_th)
        sel = good & (np.abs(ell) <= 4.0)
        psi = np.sqrt(t_th) * qhat[sel]
        shape = ell[sel] * np.exp(-alpha * ell[sel] ** 2)
        num = np.abs(np.vdot(shape, psi))
        den = np.linalg.norm(shape) * np.linalg.norm(psi) + 1e-300
        corr = num / den
        coef = np.vdot(shape, psi) / np.vdot(shape, shape)
        psi_lims.append(complex(coef / 1j))
        corr_err.append(1.0 - float(corr))
        misfit.append(float(np.linalg.norm(psi - coef * shape) / (np.linalg.norm(psi) + 1e-300)))
        ts.append(float(t_sim))
    return ErrorSeries(
        times=np.array(ts),
        sup_err=np.array(corr_err),
        weighted_err=np.array(misfit),
        meta={"psi_lim": psi_lims, "alpha": alpha},
    )
