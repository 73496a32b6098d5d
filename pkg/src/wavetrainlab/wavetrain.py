"""Periodic wave trains: Newton solution of the profile BVP and continuation in k.

A wave train u0(theta; k) with temporal frequency omega solves

    k^2 D u0'' + omega u0' + f(u0) = 0,   u0 2pi-periodic,

on the profile grid.  Continuing the family in k yields the nonlinear
dispersion relation omega(k), its group velocity c_g = omega'(k) and the
Burgers coefficient beta = -omega''(k)/2.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicSpline

from .core import Field, PeriodicGrid, evaluate_trig_interpolant
from .errors import DegenerateSystemError, InconsistencyError, NewtonConvergenceError
from .rdsys import RDSystem

__all__ = [
    "WaveTrain",
    "DispersionBranch",
    "solve_wave_train",
    "continue_branch",
    "dispersion_derivatives",
    "dk_profile",
    "lambda_omega_wave_train_guess",
]

PROFILE_POINTS = 64


@lru_cache(maxsize=8)
def _diff_matrices(m: int) -> tuple[np.ndarray, np.ndarray]:
    """Fourier-collocation first/second derivative matrices on [0, 2pi)."""
    modes = np.rint(np.fft.fftfreq(m, 1.0 / m)).astype(int)
    mult1 = 1j * modes.astype(float)
    if m % 2 == 0:
        mult1[m // 2] = 0.0
    mult2 = -(modes.astype(float) ** 2)
    eye = np.eye(m)
    F = np.fft.fft(eye, axis=0)
    D1 = np.real(np.fft.ifft(mult1[:, None] * F, axis=0))
    D2 = np.real(np.fft.ifft(mult2[:, None] * F, axis=0))
    return D1, D2


@dataclass(frozen=True, eq=False)
class WaveTrain:
    """Converged wave-train profile with its wave number and frequency."""

    system: RDSystem
    k: float
    omega: float
    profile: Field
    residual_norm: float

    @property
    def c_p(self) -> float:
        return self.omega / self.k

    @property
    def grid(self) -> PeriodicGrid:
        return self.profile.grid

    def profile_at(self, phases: np.ndarray) -> np.ndarray:
        """Evaluate the profile's trig interpolant at arbitrary phases."""
        return evaluate_trig_interpolant(self.profile, np.asarray(phases) % (2 * np.pi)).real

    def dtheta_profile(self) -> Field:
        from .core import spectral_derivative

        return spectral_derivative(self.profile, 1)


def bvp_residual(system: RDSystem, k: float, omega: float, values: np.ndarray) -> np.ndarray:
    """Residual of the profile BVP on collocation values of shape (d, M)."""
    m = values.shape[1]
    D1, D2 = _diff_matrices(m)
    u = values.real
    return (k**2) * system.D @ (u @ D2.T) + omega * (u @ D1.T) + system.f(u)


def _bvp_jacobian(system: RDSystem, k: float, omega: float, u: np.ndarray) -> np.ndarray:
    d, m = u.shape
    D1, D2 = _diff_matrices(m)
    A = (k**2) * np.kron(system.D, D2) + omega * np.kron(np.eye(d), D1)
    J = system.jac_f(u)
    for i in range(d):
        for j in range(d):
            A[i * m : (i + 1) * m, j * m : (j + 1) * m] += np.diag(J[i, j])
    return A


def solve_wave_train(
    system: RDSystem,
    k: float,
    guess: Field,
    omega_guess: float,
    max_iters: int = 25,
    tol: float = 1e-12,
    history: list | None = None,
) -> WaveTrain:
    """Newton-solve the profile BVP for (u0, omega) at fixed wave number k.

    The phase degeneracy is removed by the integral condition
    <d_theta guess, u0 - guess> = 0, which keeps the bordered Jacobian
    square and nonsingular while lambda = 0 stays simple.
    """
    if k == 0:
        raise ValueError("wave number k must be nonzero")
    grid = guess.grid
    d, m = guess.d, grid.n_points
    D1, _ = _diff_matrices(m)
    u = guess.values.real.copy()
    omega = float(omega_guess)
    guess_vals = guess.values.real
    phase_row = (guess_vals @ D1.T).ravel() * grid.spacing

    res = bvp_residual(system, k, omega, u)
    res_norm = float(np.max(np.abs(res)))
    if not np.isfinite(res_norm):
        raise NewtonConvergenceError("guess residual is not finite", res_norm)
    hist = [res_norm]
    if history is not None:
        history.append(res_norm)

    for _ in range(max_iters):
        phase_val = float(phase_row @ (u - guess_vals).ravel())
        if res_norm <= tol and abs(phase_val) <= tol:
            break
        A = _bvp_jacobian(system, k, omega, u)
        b = (u @ D1.T).ravel()
        big = np.zeros((d * m + 1, d * m + 1))
        big[: d * m, : d * m] = A
        big[: d * m, -1] = b
        big[-1, : d * m] = phase_row
        rhs = -np.concatenate([res.ravel(), [phase_val]])
        try:
            step = np.linalg.solve(big, rhs)
        except np.linalg.LinAlgError as exc:
            raise DegenerateSystemError(
                "bordered Newton system is singular (degenerate phase condition)"
            ) from exc
        u = u + step[: d * m].reshape(d, m)
        omega += step[-1]
        res = bvp_residual(system, k, omega, u)
        res_norm = float(np.max(np.abs(res)))
        hist.append(res_norm)
        if history is not None:
            history.append(res_norm)
        if not np.isfinite(res_norm) or (
            len(hist) > 3 and res_norm > 10 * min(hist[:-1]) and res_norm > 1e-6
        ):
            raise NewtonConvergenceError(
                f"Newton iteration diverged (residual {res_norm:.3e})", res_norm
            )
    else:
        if res_norm > 1e-10:
            raise NewtonConvergenceError(
                f"no convergence after {max_iters} iterations "
                f"(residual {res_norm:.3e})",
                res_norm,
            )

    dth = float(np.max(np.abs(u @ D1.T)))
    if dth <= 1e-8 * max(1.0, float(np.max(np.abs(u)))):
        raise DegenerateSystemError(
            "Newton converged to a theta-independent state, not a wave train"
        )
    return WaveTrain(system, float(k), omega, Field(grid, u), res_norm)


def lambda_omega_wave_train_guess(k: float, m: int = PROFILE_POINTS) -> tuple[Field, float]:
    """Exact lambda-omega wave train r(cos, sin) with r = sqrt(1-k^2); omega = gamma r^2.

    Returns the profile and the omega for gamma = 1; scale omega by gamma.
    """
    if abs(k) >= 1:
        raise ValueError("lambda-omega wave trains require |k| < 1")
    grid = PeriodicGrid(m, 2 * np.pi)
    r = np.sqrt(1 - k**2)
    th = grid.nodes
    return Field(grid, np.array([r * np.cos(th), r * np.sin(th)])), float(1 - k**2)


@dataclass(frozen=True, eq=False)
class DispersionBranch:
    """Sampled nonlinear dispersion relation with profile handles."""

    system: RDSystem
    k_samples: np.ndarray
    omega_samples: np.ndarray
    profiles: tuple[Field, ...]
    residuals: np.ndarray

    def __post_init__(self) -> None:
        ks = np.asarray(self.k_samples, dtype=float)
        if ks.size and np.any(np.diff(ks) <= 0):
            raise ValueError("k_samples must be strictly increasing")
        object.__setattr__(self, "k_samples", ks)
        object.__setattr__(self, "omega_samples", np.asarray(self.omega_samples, dtype=float))
        object.__setattr__(self, "residuals", np.asarray(self.residuals, dtype=float))

    @property
    def k_range(self) -> tuple[float, float]:
        return float(self.k_samples[0]), float(self.k_samples[-1])

    def wave_train_at(self, k: float) -> WaveTrain:
        """Solve at k with the nearest stored profile as the Newton guess."""
        i = int(np.argmin(np.abs(self.k_samples - k)))
        return solve_wave_train(
            self.system, k, self.profiles[i], float(self.omega_samples[i])
        )

    def profile_interpolator(self):
        """Cubic-in-k interpolation of profile Fourier coefficients.

        Returns a callable (kappas, thetas) -> values of shape (d, n) for
        per-point wave numbers kappas and phases thetas.
        """
        coeffs = np.array(
            [np.fft.fft(p.values.real, axis=-1) / p.grid.n_points for p in self.profiles]
        )  # (nk, d, M)
        spline = CubicSpline(self.k_samples, coeffs, axis=0)
        m = self.profiles[0].grid.n_points
        modes = self.profiles[0].grid.mode_numbers

        def evaluate(kappas: np.ndarray, thetas: np.ndarray) -> np.ndarray:
            c = spline(np.asarray(kappas, dtype=float))  # (n, d, M)
            phases = np.exp(1j * np.outer(np.asarray(thetas, dtype=float), modes))
            if m % 2 == 0:
                # split the Nyquist coefficient symmetrically for a real result
                c = c.copy()
                c[..., m // 2] = c[..., m // 2].real
            return np.einsum("ndm,nm->dn", c, phases).real

        return evaluate


def continue_branch(
    system: RDSystem,
    k_min: float,
    k_max: float,
    steps: int,
    seed: WaveTrain,
) -> DispersionBranch:
    """March the wave-train family over [k_min, k_max] from a seed solution.

    Each sample uses the previous solution as the Newton guess.  A fold or
    non-convergence truncates the branch to the interval actually reached.
    """
    if steps < 1:
        raise ValueError("steps must be positive")
    if steps == 1 or k_min == k_max:
        if not np.isclose(seed.k, k_min) and steps == 1:
            seed = solve_wave_train(system, k_min, seed.profile, seed.omega)
        return DispersionBranch(
            system,
            np.array([seed.k]),
            np.array([seed.omega]),
            (seed.profile,),
            np.array([seed.residual_norm]),
        )
    if steps < 8:
        raise ValueError("steps must be >= 8 for a genuine continuation run")
    ks = np.linspace(k_min, k_max, steps)
    if not (k_min <= seed.k <= k_max):
        raise ValueError("seed wave number outside [k_min, k_max]")
    i0 = int(np.argmin(np.abs(ks - seed.k)))
    solved: dict[int, WaveTrain] = {}

    def march(indices) -> None:
        current = seed
        for i in indices:
            try:
                current = solve_wave_train(system, ks[i], current.profile, current.omega)
            except (NewtonConvergenceError, DegenerateSystemError):
                if not solved:
                    raise
                return
            solved[i] = current

    march(range(i0, steps))
    march(range(i0 - 1, -1, -1))
    idx = sorted(solved)
    return DispersionBranch(
        system,
        ks[idx],
        np.array([solved[i].omega for i in idx]),
        tuple(solved[i].profile for i in idx),
        np.array([solved[i].residual_norm for i in idx]),
    )


def _local_fit(
    branch: DispersionBranch, k: float, window: int = 7, allow_edge: bool = False
) -> np.ndarray:
    ks = branch.k_samples
    if k < ks[0] or k > ks[-1]:
        raise ValueError(f"k={k} outside continued branch [{ks[0]}, {ks[-1]}]")
    n_side = np.sum(ks < k), np.sum(ks > k)
    if min(n_side) < 2 and not allow_edge:
        raise ValueError("need at least 2 branch samples on each side of k")
    order = np.argsort(np.abs(ks - k))
    take = np.sort(order[: max(5, min(window, ks.size))])
    t = ks[take] - k
    h = np.max(np.abs(t))
    V = np.vander(t / h, 5, increasing=True)
    coef, *_ = np.linalg.lstsq(V, branch.omega_samples[take], rcond=None)
    # coef[j] are derivatives j! d^j omega / dk^j scaled by h^j
    return np.array([coef[0], coef[1] / h, 2 * coef[2] / h**2])


def dispersion_derivatives(branch: DispersionBranch, k: float) -> tuple[float, float]:
    """Group velocity c_g = omega'(k) and beta = -omega''(k)/2 by local quartic fit."""
    _, d1, d2 = _local_fit(branch, k)
    return float(d1), float(-0.5 * d2)


def dk_profile_at(wt: WaveTrain) -> tuple[Field, float]:
    """Solve the bordered linearized BVP for (d_k u0, omega'(k)).

    Gauge: <d_theta u0, d_k u0> = 0 (profile change orthogonal to the
    translation direction).  The returned frequency derivative equals the
    group velocity and serves as a consistency check.
    """
    grid = wt.grid
    d, m = wt.profile.d, grid.n_points
    D1, D2 = _diff_matrices(m)
    u = wt.profile.values.real
    A = _bvp_jacobian(wt.system, wt.k, wt.omega, u)
    dthu = (u @ D1.T)
    rhs_field = -2.0 * wt.k * (wt.system.D @ (u @ D2.T))
    big = np.zeros((d * m + 1, d * m + 1))
    big[: d * m, : d * m] = A
    big[: d * m, -1] = dthu.ravel()
    big[-1, : d * m] = dthu.ravel() * grid.spacing
    rhs = np.concatenate([rhs_field.ravel(), [0.0]])
    try:
        sol = np.linalg.solve(big, rhs)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSystemError(
            "bordered k-derivative system is singular; simple-eigenvalue "
            "assumption appears violated"
        ) from exc
    return Field(grid, sol[: d * m].reshape(d, m)), float(sol[-1])


def dk_profile(
    branch: DispersionBranch,
    k: float,
    cross_check: bool = True,
    h: float = 1e-4,
    check_tol: float = 1e-6,
) -> Field:
    """d_k u0(.; k) from the linearized BVP, cross-checked by centered differences."""
    wt = branch.wave_train_at(k)
    dku, _ = dk_profile_at(wt)
    if cross_check:
        wp = solve_wave_train(branch.system, k + h, wt.profile, wt.omega)
        wm = solve_wave_train(branch.system, k - h, wt.profile, wt.omega)
        fd = (wp.profile.values.real - wm.profile.values.real) / (2 * h)
        err = float(np.max(np.abs(fd - dku.values.real)))
        if err > check_tol * max(1.0, float(np.max(np.abs(dku.values)))):
            raise InconsistencyError(
                f"d_k profile disagrees with centered differences (err {err:.2e})"
            )
    return dku
