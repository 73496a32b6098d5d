"""Bloch-wave machinery around a wave train.

Covers the operator family L(ell) = k^2 D (d_theta + i ell/k)^2
+ omega (d_theta + i ell/k) + f'(u0), its spectra and the critical curve
lambda_1(ell), the spectral-stability certificate, adjoint quadratures for
the dispersion coefficients, the Bloch transform on commensurate domains,
smooth mode filters, the initial-data decomposition into phase and
remainder, and the scalar phase-multiplier diagnostic.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .core import Field, PeriodicGrid, spectral_derivative
from .errors import (
    BranchTrackingWarning,
    CommensurabilityError,
    DegenerateSystemError,
    InconsistencyError,
    IsolationError,
    RegimeError,
)
from .wavetrain import WaveTrain, _diff_matrices, dk_profile_at

__all__ = [
    "BlochEigenData",
    "StabilityReport",
    "BlochField",
    "ModeFilterSet",
    "PhaseMultiplierData",
    "assemble_bloch_operator",
    "compute_spectrum",
    "verify_hypothesis1",
    "adjoint_null",
    "lambda1_derivatives_quadrature",
    "check_dlv_identity",
    "bloch_transform",
    "bloch_inverse",
    "bloch_convolution",
    "build_mode_filters",
    "decompose_initial_data",
    "phase_multiplier_check",
    "brillouin_grid",
    "chi_cutoff",
]


# ---------------------------------------------------------------------------
# operator assembly and eigensolves


def _profile_ip_weight(wt: WaveTrain) -> float:
    return wt.grid.spacing


def _ip(a: np.ndarray, b: np.ndarray, h: float) -> complex:
    return complex(np.sum(np.conj(a) * b) * h)


def _operator_parts(wt: WaveTrain) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    d, m = wt.profile.d, wt.grid.n_points
    D1, D2 = _diff_matrices(m)
    k, omega = wt.k, wt.omega
    sysD = wt.system.D
    A0 = (k**2) * np.kron(sysD, D2) + omega * np.kron(np.eye(d), D1)
    J = wt.system.jac_f(wt.profile.values.real)
    for i in range(d):
        for j in range(d):
            A0[i * m : (i + 1) * m, j * m : (j + 1) * m] += np.diag(J[i, j])
    A1 = 2j * k * np.kron(sysD, D1) + 1j * wt.c_p * np.eye(d * m)
    A2 = -np.kron(sysD, np.eye(m)).astype(complex)
    return A0.astype(complex), A1, A2


def _cached_parts(wt: WaveTrain):
    # cached on the wave train itself so the lifetime is tied to the object
    parts = getattr(wt, "_bloch_parts", None)
    if parts is None:
        parts = _operator_parts(wt)
        object.__setattr__(wt, "_bloch_parts", parts)
    return parts


def assemble_bloch_operator(wt: WaveTrain, ell: float) -> np.ndarray:
    """Fourier-collocation matrix of the Bloch operator at Floquet exponent ell."""
    if abs(ell) > abs(wt.k) / 2 + 1e-12:
        raise ValueError(f"ell={ell} outside the Brillouin zone [-k/2, k/2)")
    A0, A1, A2 = _cached_parts(wt)
    return A0 + ell * A1 + ell**2 * A2


def _eig_lr(A: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    w, vl, vr = scipy.linalg.eig(A, left=True, right=True)
    return w, vl, vr


def _select_tracked(
    w: np.ndarray, vr: np.ndarray, ref: np.ndarray, warn_context: str = ""
) -> int:
    overlaps = np.abs(ref.conj() @ vr) / (np.linalg.norm(vr, axis=0) + 1e-300)
    order = np.argsort(overlaps)[::-1]
    j = int(order[0])
    if overlaps.size > 1 and overlaps[order[1]] > 0.95 * overlaps[order[0]]:
        warnings.warn(
            f"eigenvector-overlap continuation ambiguous{warn_context} "
            f"(top overlaps {overlaps[order[0]]:.3f}, {overlaps[order[1]]:.3f})",
            BranchTrackingWarning,
            stacklevel=3,
        )
    return j


def brillouin_grid(k: float, n: int) -> np.ndarray:
    """n equally spaced Floquet exponents in [-k/2, k/2), containing 0 for even n."""
    return (np.arange(n) - n // 2) * (abs(k) / n)


@dataclass(eq=False)
class BlochEigenData:
    """Spectra of the Bloch family on an ell grid with the tracked critical curve."""

    wavetrain: WaveTrain
    ell_samples: np.ndarray
    eigenvalues: np.ndarray  # (n_ell, n_stored) sorted by descending real part
    lambda1: np.ndarray  # (n_ell,) tracked critical curve
    v1: np.ndarray  # (n_ell, d*M) right eigenfunctions, <u_ad(l), v1(l)> = 1
    uad_bloch: np.ndarray  # (n_ell, d*M) adjoint eigenfunctions
    u_ad: Field  # adjoint null function at ell = 0
    lambda1_prime0: complex
    lambda1_second0: float
    alpha: float  # -lambda_1''(0)/2 from the eigenvalue fit

    @property
    def ell_index0(self) -> int:
        return int(np.argmin(np.abs(self.ell_samples)))


def _fit_lambda1(ell: np.ndarray, lam: np.ndarray, window: float) -> np.ndarray:
    """Least-squares c1..c4 of lam ~ sum c_j ell^j (c0 = 0) over |ell| <= window."""
    mask = np.abs(ell) <= window
    if np.count_nonzero(mask) < 5:
        mask = np.argsort(np.abs(ell))[:5]
    t = ell[mask]
    h = np.max(np.abs(t))
    V = np.column_stack([(t / h) ** j for j in (1, 2, 3, 4)])
    coef, *_ = np.linalg.lstsq(V, lam[mask], rcond=None)
    return coef / h ** np.array([1, 2, 3, 4])


def compute_spectrum(
    wt: WaveTrain,
    ell_grid: np.ndarray,
    n_eigs: int | None = None,
    fit_window: float = 0.02,
    threads: int = 1,
) -> BlochEigenData:
    """Eigen-decompose the Bloch family on ell_grid and track the critical branch.

    The lambda_1 curve is continued by maximal eigenvector overlap from
    ell = 0 outward, not by sorting, so crossings at larger ell are followed
    correctly.  Eigenfunction pairs are normalized to <u_ad(l), v1(l)> = 1.
    Per-ell eigensolves are independent and run on `threads` workers; the
    tracking pass is a deterministic sequential reduction.
    """
    ell = np.sort(np.asarray(ell_grid, dtype=float))
    if np.any(np.abs(ell) > abs(wt.k) / 2 + 1e-12):
        raise ValueError("ell grid must lie in [-k/2, k/2)")
    n_ell = ell.size
    d, m = wt.profile.d, wt.grid.n_points
    dm = d * m
    h = _profile_ip_weight(wt)
    n_store = dm if n_eigs is None else min(n_eigs, dm)

    eigs_sorted = np.empty((n_ell, n_store), dtype=complex)
    lam1 = np.empty(n_ell, dtype=complex)
    v1 = np.empty((n_ell, dm), dtype=complex)
    uad = np.empty((n_ell, dm), dtype=complex)

    if threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            decomps = list(
                pool.map(lambda l: _eig_lr(assemble_bloch_operator(wt, l)), ell)
            )
    else:
        decomps = [_eig_lr(assemble_bloch_operator(wt, l)) for l in ell]

    dthu0 = spectral_derivative(wt.profile, 1).values.reshape(-1)
    i0 = int(np.argmin(np.abs(ell)))

    def track_at(i: int, ref: np.ndarray) -> np.ndarray:
        w, vl, vr = decomps[i]
        order = np.argsort(-w.real)
        eigs_sorted[i] = w[order][:n_store]
        j = _select_tracked(w, vr, ref, warn_context=f" at ell={ell[i]:.4g}")
        lam1[i] = w[j]
        v = vr[:, j]
        # continuity gauge, then the adjoint-pairing normalization
        phase = ref.conj() @ v
        v = v * (np.conj(phase) / abs(phase))
        v = v / np.sqrt(_ip(v, v, h).real)
        left = vl[:, j]
        scale = _ip(left, v, h)
        if abs(scale) < 1e-13:
            raise DegenerateSystemError(
                f"left/right eigenvector pairing degenerate at ell={ell[i]:.4g}"
            )
        left = left / np.conj(scale)
        v1[i] = v
        uad[i] = left
        return v

    ref = dthu0 / np.linalg.norm(dthu0)
    ref = track_at(i0, ref)
    ref_up = ref
    for i in range(i0 + 1, n_ell):
        ref_up = track_at(i, ref_up)
    ref_dn = ref
    for i in range(i0 - 1, -1, -1):
        ref_dn = track_at(i, ref_dn)

    if abs(ell[i0]) < 1e-12 and abs(lam1[i0]) > 1e-9:
        raise InconsistencyError(
            f"lambda_1(0) = {lam1[i0]:.3e}, expected 0 from translation symmetry"
        )

    coef = _fit_lambda1(ell, lam1, fit_window)
    lam1p = coef[0]
    lam1pp = 2 * coef[1]
    if abs(lam1pp.imag) > 1e-8 * max(1.0, abs(lam1pp)):
        raise InconsistencyError(
            f"lambda_1''(0) has imaginary part {lam1pp.imag:.3e}"
        )

    # adjoint null function at ell = 0, normalized against d_theta u0
    left0 = uad[i0]
    j_big = int(np.argmax(np.abs(left0)))
    left0 = left0 * np.exp(-1j * np.angle(left0[j_big]))
    left0 = left0 / _ip(left0, dthu0, h).real
    u_ad = Field(wt.grid, left0.reshape(d, m))

    return BlochEigenData(
        wavetrain=wt,
        ell_samples=ell,
        eigenvalues=eigs_sorted,
        lambda1=lam1,
        v1=v1,
        uad_bloch=uad,
        u_ad=u_ad,
        lambda1_prime0=complex(1j * lam1p.imag),
        lambda1_second0=float(lam1pp.real),
        alpha=float(-0.5 * lam1pp.real),
    )


# ---------------------------------------------------------------------------
# stability certificate


@dataclass
class StabilityReport:
    """Certified spectral-stability constants on the sampled Bloch grid."""

    stable: bool
    sigma0: float
    ell0: float
    alpha0: float
    ell1: float
    violations: list
    margins: dict


def verify_hypothesis1(data: BlochEigenData, min_points: int = 64) -> StabilityReport:
    """Check the spectrally-stable-wave-train conditions on the sampled grid.

    Certifies the largest (sigma0, alpha0) pair such that, on the grid,
    Re lambda_1 < -alpha0 ell^2 for 0 < |ell| < ell0, Re lambda_1 < -sigma0
    for |ell| > ell0, and Re lambda_j <= -sigma0 for all j >= 2.  Also
    reports the radius on which lambda_1 stays isolated from the rest of
    the spectrum.
    """
    ell = data.ell_samples
    if ell.size < min_points:
        raise ValueError(f"need at least {min_points} ell samples, got {ell.size}")
    lam1 = data.lambda1
    i0 = data.ell_index0

    # per ell: distance of lambda_1 to the rest, and the rightmost rest eigenvalue
    rest_max_re = np.empty(ell.size)
    gap = np.empty(ell.size)
    for i in range(ell.size):
        w = data.eigenvalues[i]
        dist = np.abs(w - lam1[i])
        jself = int(np.argmin(dist))
        rest = np.delete(w, jself)
        rest_max_re[i] = rest.real.max()
        gap[i] = np.min(np.abs(rest - lam1[i]))

    sigma_rest = float(-rest_max_re.max())

    nonzero = np.abs(ell) > 1e-12
    s1 = -lam1.real
    violations: list[tuple[int, float, float]] = []

    best = None
    candidates = np.unique(np.abs(ell[nonzero]))
    for ell0 in candidates:
        inner = nonzero & (np.abs(ell) <= ell0 + 1e-15)
        outer = np.abs(ell) > ell0 + 1e-15
        alpha0 = float(np.min(s1[inner] / ell[inner] ** 2))
        sigma_tail = float(np.min(s1[outer])) if np.any(outer) else np.inf
        sigma0 = min(sigma_rest, sigma_tail)
        score = min(sigma0, alpha0 * ell0**2)
        if best is None or score > best[0]:
            best = (score, float(ell0), alpha0, sigma0)
    _, ell0, alpha0, sigma0 = best

    lam0_ok = abs(lam1[i0]) <= 1e-9 if abs(ell[i0]) < 1e-12 else True
    dissipative = data.lambda1_second0 < 0
    stable = bool(alpha0 > 0 and sigma0 > 0 and lam0_ok and dissipative)

    if not stable:
        for i in np.nonzero(nonzero & (lam1.real >= 0))[0]:
            violations.append((1, float(ell[i]), float(lam1[i].real)))
        for i in np.nonzero(rest_max_re >= 0)[0]:
            violations.append((2, float(ell[i]), float(rest_max_re[i])))
        violations = violations[:200]

    # isolation radius: contiguous interval around 0 where the gap stays large
    gap0 = gap[i0]
    ok = gap >= 0.5 * gap0
    r_up = 0.0
    for i in range(i0, ell.size):
        if not ok[i]:
            break
        r_up = abs(ell[i])
    r_dn = 0.0
    for i in range(i0, -1, -1):
        if not ok[i]:
            break
        r_dn = abs(ell[i])
    radius = min(r_up, r_dn)

    return StabilityReport(
        stable=stable,
        sigma0=sigma0,
        ell0=ell0,
        alpha0=alpha0,
        ell1=float(radius),
        violations=violations,
        margins={
            "sigma_rest": sigma_rest,
            "gap_at_zero": float(gap0),
            "lambda1_at_zero": float(abs(lam1[i0])),
            "alpha_fit": data.alpha,
        },
    )


# ---------------------------------------------------------------------------
# adjoint quadratures


def adjoint_null(wt: WaveTrain) -> Field:
    """Null function of the adjoint operator, normalized <u_ad, d_theta u0> = 1."""
    A0, _, _ = _cached_parts(wt)
    w, vr = np.linalg.eig(A0.real.T)
    order = np.argsort(np.abs(w))
    if abs(w[order[1]]) <= 1e-4:
        raise DegenerateSystemError(
            "second eigenvalue of the adjoint within 1e-4 of zero; "
            "lambda = 0 is not numerically simple"
        )
    v = vr[:, order[0]]
    j_big = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[j_big]))
    if np.max(np.abs(v.imag)) > 1e-9 * np.max(np.abs(v.real)):
        raise DegenerateSystemError("adjoint null vector is not real after rotation")
    v = v.real
    h = _profile_ip_weight(wt)
    dthu0 = spectral_derivative(wt.profile, 1).values.reshape(-1).real
    v = v / (np.sum(v * dthu0) * h)
    return Field(wt.grid, v.reshape(wt.profile.d, wt.grid.n_points))


def _apply_D(wt: WaveTrain, values: np.ndarray) -> np.ndarray:
    return np.einsum("ij,jn->in", wt.system.D, values)


def lambda1_derivatives_quadrature(
    wt: WaveTrain, u_ad: Field, dku0: Field
) -> tuple[complex, float]:
    """First and second derivative of lambda_1 at ell = 0 by adjoint quadrature.

    lambda_1'(0)  = i <u_ad, c_p d_th u0 + 2 k D d_th^2 u0>
    lambda_1''(0) = -<u_ad, 4 k D d_th d_k u0 + 2 D d_th u0>

    The second formula presumes the gauge <u_ad, d_k u0> = 0; the supplied
    d_k u0 is projected into that gauge first, which makes the quadrature
    agree with the gauge-invariant expansion of the eigenvalue problem.
    """
    h = _profile_ip_weight(wt)
    ua = u_ad.values.reshape(-1)
    dthu0 = spectral_derivative(wt.profile, 1)
    dth2u0 = spectral_derivative(wt.profile, 2)
    dthu0_flat = dthu0.values.reshape(-1)

    norm = _ip(ua, dthu0_flat, h)
    if abs(norm - 1.0) > 1e-8:
        raise InconsistencyError(
            f"<u_ad, d_theta u0> = {norm:.6f}, expected 1 (broken normalization)"
        )

    integrand1 = wt.c_p * dthu0.values + 2 * wt.k * _apply_D(wt, dth2u0.values)
    lam1p = 1j * _ip(ua, integrand1.reshape(-1), h)
    if abs(lam1p.real) > 1e-8 * max(1.0, abs(lam1p)):
        raise InconsistencyError(
            f"lambda_1'(0) = {lam1p:.3e} is not purely imaginary"
        )

    proj = _ip(ua, dku0.values.reshape(-1), h)
    dk_gauged = Field(wt.grid, dku0.values - proj * dthu0.values)
    dth_dk = spectral_derivative(dk_gauged, 1)
    integrand2 = 4 * wt.k * _apply_D(wt, dth_dk.values) + 2 * _apply_D(wt, dthu0.values)
    lam1pp = -_ip(ua, integrand2.reshape(-1), h)
    if abs(lam1pp.imag) > 1e-6 * max(1.0, abs(lam1pp)):
        raise InconsistencyError(
            f"lambda_1''(0) has imaginary part {lam1pp.imag:.3e}; "
            "d_k u0 or the adjoint normalization is inconsistent"
        )
    return complex(1j * lam1p.imag), float(lam1pp.real)


def _tracked_pair_at(
    wt: WaveTrain, ell: float, u_ad: Field | None = None
) -> tuple[complex, np.ndarray, np.ndarray]:
    """Eigentriple (lambda_1, v1, u_ad(ell)) at one ell, tracked from d_theta u0.

    With u_ad supplied, v1 carries the gauge <u_ad, v1(ell)> = 1 that
    continues v1(0) = d_theta u0 exactly; otherwise v1 is unit-norm with
    positive overlap against the translation mode.
    """
    h = _profile_ip_weight(wt)
    dthu0 = spectral_derivative(wt.profile, 1).values.reshape(-1)
    ref = dthu0 / np.linalg.norm(dthu0)
    A = assemble_bloch_operator(wt, ell)
    w, vl, vr = _eig_lr(A)
    j = _select_tracked(w, vr, ref, warn_context=f" at ell={ell:.4g}")
    v = vr[:, j]
    if u_ad is not None:
        scale = _ip(u_ad.values.reshape(-1), v, h)
        if abs(scale) < 1e-13:
            raise DegenerateSystemError(
                f"eigenfunction at ell={ell:.4g} orthogonal to the adjoint null"
            )
        v = v / scale
    else:
        phase = ref.conj() @ v
        v = v * (np.conj(phase) / abs(phase))
        v = v / np.sqrt(_ip(v, v, h).real)
    left = vl[:, j] / np.conj(_ip(vl[:, j], v, h))
    return w[j], v, left


def check_dlv_identity(data: BlochEigenData, dku0: Field, h: float = 1e-3) -> float:
    """Residual of d_ell v1(., 0) = i d_k u0 modulo the translation direction.

    d_ell v1 is computed by centered differences of the pairing-normalized
    eigenfunctions at ell = +-h; the span of d_theta u0 is projected out of
    the difference because both sides are only defined modulo that gauge
    direction.
    """
    wt = data.wavetrain
    hw = _profile_ip_weight(wt)
    dthu0 = spectral_derivative(wt.profile, 1).values.reshape(-1)

    _, vp, _ = _tracked_pair_at(wt, +h)
    _, vm, _ = _tracked_pair_at(wt, -h)

    # projection-normalized continuation through ell = 0
    n0sq = _ip(dthu0, dthu0, hw)
    vp = vp * (n0sq / _ip(dthu0, vp, hw))
    vm = vm * (n0sq / _ip(dthu0, vm, hw))
    dv = (vp - vm) / (2 * h)

    target = 1j * dku0.values.reshape(-1)
    diff = dv - target
    coef = _ip(dthu0, diff, hw) / n0sq
    diff = diff - coef * dthu0
    return float(np.sqrt(_ip(diff, diff, hw).real))


# ---------------------------------------------------------------------------
# Bloch transform on commensurate grids


@dataclass(eq=False)
class BlochField:
    """Bloch transform samples w(theta, ell), theta-periodic, ell in [-k/2, k/2).

    values has shape (d, n_ell, m_theta) with ell ascending.  The stored
    normalization matches the rescaled transform used for the operator
    calculus: a unit-amplitude mode w1(theta) exp(i ell0 x) transforms to a
    single column w1(theta)/d_ell at ell0 (discrete delta of weight 1).
    """

    k: float
    values: np.ndarray
    ell: np.ndarray
    theta: np.ndarray

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def n_ell(self) -> int:
        return self.values.shape[1]

    @property
    def m_theta(self) -> int:
        return self.values.shape[2]

    @property
    def d_ell(self) -> float:
        return abs(self.k) / self.n_ell

    @property
    def d_theta(self) -> float:
        return 2 * np.pi / self.m_theta

    def norm_sq(self) -> float:
        """Discrete ||u||_{L2(dx)}^2 via the Bloch Parseval identity."""
        return float(np.sum(np.abs(self.values) ** 2) * self.d_ell * self.d_theta)

    def copy(self) -> "BlochField":
        return BlochField(self.k, self.values.copy(), self.ell.copy(), self.theta.copy())


def _commensurate_factors(grid: PeriodicGrid, k: float) -> tuple[int, int]:
    period = 2 * np.pi / abs(k)
    n_per = grid.length / period
    N = int(round(n_per))
    if N < 2 or abs(grid.length - N * period) > 1e-9 * grid.length:
        raise CommensurabilityError(
            f"domain length {grid.length:.6g} is not an integer multiple of "
            f"the period quantum {period:.6g}"
        )
    if grid.n_points % N != 0:
        raise CommensurabilityError(
            f"grid points {grid.n_points} not divisible by {N} periods"
        )
    return N, grid.n_points // N


def bloch_transform(u: Field, k: float) -> BlochField:
    """Transform a field on an N-period domain into (theta, ell) samples."""
    N, M = _commensurate_factors(u.grid, k)
    n = u.grid.n_points
    c = np.fft.fft(u.values, axis=-1) / n
    # signed Brillouin base index: row p holds ell_p, slots j hold ell_p + j k
    ps = (np.arange(N) + N // 2) % N - N // 2
    j = np.arange(M)
    flat = (ps[:, None] + N * j[None, :]) % n
    columns = c[:, flat]  # (d, N, M) coefficients \hat w(ell_p + j k)
    w = (N / abs(k)) * M * np.fft.ifft(columns, axis=2)
    w = np.fft.fftshift(w, axes=1)
    ell = brillouin_grid(k, N)
    theta = 2 * np.pi * np.arange(M) / M
    return BlochField(float(k), w, ell, theta)


def bloch_inverse(bf: BlochField, grid: PeriodicGrid | None = None) -> Field:
    """Invert the Bloch transform back to the big periodic grid."""
    N, M = bf.n_ell, bf.m_theta
    n = N * M
    if grid is None:
        grid = PeriodicGrid(n, N * 2 * np.pi / abs(bf.k))
    w = np.fft.ifftshift(bf.values, axes=1)
    columns = np.fft.fft(w, axis=2) / ((N / abs(bf.k)) * M)
    c = np.zeros((bf.d, n), dtype=complex)
    ps = (np.arange(N) + N // 2) % N - N // 2
    j = np.arange(M)
    flat = (ps[:, None] + N * j[None, :]) % n
    c[:, flat] = columns
    return Field(grid, np.fft.ifft(c * n, axis=-1))


def bloch_convolution(w1: BlochField, w2: BlochField) -> BlochField:
    """Componentwise Bloch convolution, the transform of the pointwise product.

    Arguments leaving the fundamental zone are evaluated through the
    Brillouin periodicity w(theta, ell + k) = exp(-i theta) w(theta, ell),
    the extension consistent with the transform definition.
    """
    if w1.values.shape != w2.values.shape or w1.k != w2.k:
        raise ValueError("Bloch fields live on different grids")
    N, M = w1.n_ell, w1.m_theta
    n2 = N // 2
    pa = np.arange(N)
    idx = pa[:, None] - pa[None, :] + n2  # index of ell_a - ell_b in ascending layout
    wind = idx // N
    sto = idx - wind * N
    twist = np.exp(-1j * wind[:, :, None] * w1.theta[None, None, :])
    w1g = w1.values[:, sto, :] * twist[None, :, :, :]
    out = np.einsum("apbm,abm->apm", w1g, w2.values) * w1.d_ell
    return BlochField(w1.k, out, w1.ell.copy(), w1.theta.copy())


# ---------------------------------------------------------------------------
# cutoff function and mode filters


def chi_cutoff(s: np.ndarray) -> np.ndarray:
    """C-infinity plateau cutoff: 1 on |s| <= 1, 0 on |s| >= 2, monotone between."""
    s = np.abs(np.asarray(s, dtype=float))
    out = np.zeros_like(s)
    out[s <= 1] = 1.0
    mid = (s > 1) & (s < 2)
    t = s[mid]

    def bump(x):
        v = np.zeros_like(x)
        pos = x > 0
        v[pos] = np.exp(-1.0 / x[pos])
        return v

    a = bump(2.0 - t)
    b = bump(t - 1.0)
    out[mid] = a / (a + b)
    return out


@dataclass(eq=False)
class ModeFilterSet:
    """Per-ell spectral projections and smooth mode filters on a Bloch grid.

    Q_c(ell) is the rank-one projection built from the (v1, u_ad) pair;
    the filters multiply it by plateaus of widths ell1/4, ell1/8, ell1/2
    and ell1/16 following the cutoff scalings chi(4l/l1), chi(8l/l1),
    chi(2l/l1), chi(16l/l1).
    """

    k: float
    ell1: float
    ell: np.ndarray
    v1: np.ndarray  # (n_ell, d*M)
    uad: np.ndarray  # (n_ell, d*M)
    d: int
    m: int
    chi: dict

    _NAMES = ("fs_c", "fs_s", "mf_c", "mf_s", "c", "s")

    def _check_grid(self, bf: BlochField) -> None:
        if bf.n_ell != self.ell.size or not np.allclose(bf.ell, self.ell):
            raise ValueError("Bloch field ell grid does not match the filter grid")
        if bf.d != self.d or bf.m_theta != self.m:
            raise ValueError("Bloch field shape does not match the filter data")

    def _vectors(self, bf: BlochField) -> np.ndarray:
        # (n_ell, d*M) flattened profile columns
        return np.transpose(bf.values, (1, 0, 2)).reshape(self.ell.size, -1)

    def _from_vectors(self, vecs: np.ndarray, bf: BlochField) -> BlochField:
        vals = vecs.reshape(self.ell.size, self.d, self.m).transpose(1, 0, 2)
        return BlochField(bf.k, vals, bf.ell.copy(), bf.theta.copy())

    def critical_coefficients(self, bf: BlochField) -> np.ndarray:
        """<u_ad(ell), w(., ell)> per ell (the Q_c coefficient against v1)."""
        self._check_grid(bf)
        h = 2 * np.pi / self.m
        return np.sum(np.conj(self.uad) * self._vectors(bf), axis=1) * h

    def q_c(self, bf: BlochField) -> BlochField:
        coef = self.critical_coefficients(bf)
        return self._from_vectors(coef[:, None] * self.v1, bf)

    def _chi_for(self, name: str) -> np.ndarray:
        return {
            "fs_c": self.chi["4"],
            "fs_s": self.chi["4"],
            "mf_c": self.chi["8"],
            "mf_s": self.chi["8"],
            "c": self.chi["2"],
            "s": self.chi["16"],
        }[name]

    def apply(self, name: str, bf: BlochField) -> BlochField:
        """Apply one of the filters P_fs^{c,s}, P_mf^{c,s}, P^c, P^s."""
        if name not in self._NAMES:
            raise ValueError(f"unknown filter {name!r}; choose from {self._NAMES}")
        coef = self.critical_coefficients(bf) * self._chi_for(name)
        crit = coef[:, None] * self.v1
        vecs = self._vectors(bf)
        if name.endswith("s"):
            out = vecs - crit
        else:
            out = crit
        return self._from_vectors(out, bf)

    def scalar_fs_c(self, bf: BlochField) -> np.ndarray:
        """p_fs^c: scalar multiplier table such that P_fs^c w = p_fs^c(w) v1."""
        return self.critical_coefficients(bf) * self.chi["4"]

    def scalar_mf_c(self, bf: BlochField) -> np.ndarray:
        return self.critical_coefficients(bf) * self.chi["8"]


def _resample_columns(vecs: np.ndarray, d: int, m_old: int, m_new: int) -> np.ndarray:
    """Spectral resampling of flattened (d, m_old) profile columns to m_new points."""
    if m_new == m_old:
        return vecs
    cols = vecs.reshape(vecs.shape[0], d, m_old)
    chat = np.fft.fft(cols, axis=-1) / m_old
    out = np.zeros((vecs.shape[0], d, m_new), dtype=complex)
    half = min(m_old, m_new) // 2
    out[..., :half] = chat[..., :half]
    out[..., -half:] = chat[..., -half:]
    return (np.fft.ifft(out, axis=-1) * m_new).reshape(vecs.shape[0], d * m_new)


def build_mode_filters(
    data: BlochEigenData, ell1: float, m_theta: int | None = None
) -> ModeFilterSet:
    """Assemble the mode-filter family at isolation scale ell1.

    Requires lambda_1 to stay isolated from the rest of the spectrum for
    |ell| < ell1; raises IsolationError otherwise.  Eigenfunction data at
    negative ell is mirrored from positive ell by conjugation (the operator
    family satisfies A(-ell) = conj(A(ell))), which keeps filter outputs of
    real fields conjugate-symmetric.  m_theta resamples the eigenfunctions
    onto a coarser or finer per-period grid so the filters can act on Bloch
    fields from any commensurate domain.
    """
    wt = data.wavetrain
    ell = data.ell_samples
    if ell1 <= 0:
        raise ValueError("ell1 must be positive")
    h = _profile_ip_weight(wt)

    inside = np.abs(ell) < ell1
    for i in np.nonzero(inside)[0]:
        w = data.eigenvalues[i]
        dist = np.sort(np.abs(w - data.lambda1[i]))
        if dist.size > 1 and dist[1] < 1e-6:
            raise IsolationError(
                f"eigenvalue collision with lambda_1 at ell={ell[i]:.4g}"
            )

    v1 = data.v1.copy()
    uad = data.uad_bloch.copy()
    # mirror negative ell from positive ell
    for i, l in enumerate(ell):
        if l < -1e-15:
            j = np.argmin(np.abs(ell - (-l)))
            if abs(ell[j] + l) < 1e-12:
                v1[i] = np.conj(v1[j])
                uad[i] = np.conj(uad[j])

    d, m_prof = wt.profile.d, wt.grid.n_points
    m = m_prof if m_theta is None else int(m_theta)
    v1 = _resample_columns(v1, d, m_prof, m)
    uad = _resample_columns(uad, d, m_prof, m)
    # enforce exact pairing normalization on the working grid
    hm = 2 * np.pi / m
    scale = np.sum(np.conj(uad) * v1, axis=1) * hm
    uad = uad / np.conj(scale)[:, None]

    chi = {
        s: chi_cutoff(float(f) * ell / ell1) for s, f in
        (("4", 4.0), ("8", 8.0), ("2", 2.0), ("16", 16.0))
    }
    return ModeFilterSet(
        k=wt.k,
        ell1=float(ell1),
        ell=ell,
        v1=v1,
        uad=uad,
        d=d,
        m=m,
        chi=chi,
    )


# ---------------------------------------------------------------------------
# initial-data decomposition


def decompose_initial_data(
    u_ic: Field,
    wt: WaveTrain,
    filters: ModeFilterSet,
    branch=None,
    corrections: int = 2,
) -> tuple[Field, Field]:
    """Split data near the wave-train orbit into phase and damped remainder.

    Produces (phi0, w0) with u_ic, re-expressed in the ansatz coordinate
    theta = vartheta - phi0(vartheta), equal to
    u0(vartheta; k(1 + d_vartheta phi0)) + w0(vartheta), the Fourier support
    of phi0 inside the chi(4 ell/ell1) plateau, and the critical content
    (1 - P^s) w0 iterated down to the discretization floor.
    """
    from .core import evaluate_trig_interpolant
    from .diagnostics import demodulate

    k = wt.k
    grid = u_ic.grid
    N, _ = _commensurate_factors(grid, k)
    n = grid.n_points
    x = grid.nodes

    prof_vals = wt.profile.values.real
    amplitude = float(np.max(np.abs(prof_vals - prof_vals.mean(axis=1, keepdims=True))))

    phi_check, resid = demodulate(u_ic, wt, t=0.0)
    if resid > 0.2 * amplitude:
        raise RegimeError(
            f"data lies {resid:.3f} from the wave-train orbit, beyond the "
            f"decomposition regime (0.2 * amplitude = {0.2 * amplitude:.3f})"
        )

    # phase in the ansatz coordinate: phi(vth) solves phi = phi_check(vth - phi)
    phi_field = Field(grid, phi_check[None, :].astype(complex))
    vth = k * x
    phi = phi_check.copy()
    for _ in range(4):
        phi = evaluate_trig_interpolant(phi_field, (vth - phi) / k)[0].real

    # restrict the Fourier support to the chi(4 ell / ell1) plateau
    ell_x = 2 * np.pi * np.fft.fftfreq(n, d=grid.spacing)
    support = np.abs(ell_x) <= filters.ell1 / 4 + 1e-15
    phi0_hat = np.fft.fft(phi) * support
    phi0 = np.fft.ifft(phi0_hat).real

    dku0, _ = dk_profile_at(wt)
    dthu0 = spectral_derivative(wt.profile, 1)
    interp = branch.profile_interpolator() if branch is not None else None

    def residual_field(phi0_vals: np.ndarray) -> Field:
        q0 = np.fft.ifft(1j * ell_x * np.fft.fft(phi0_vals)).real / k
        shifted = evaluate_trig_interpolant(u_ic, x - phi0_vals / k).real
        theta_pts = k * x
        if interp is not None:
            base = interp(k * (1 + q0), theta_pts)
        else:
            base = wt.profile_at(theta_pts) + (
                k * q0
            ) * evaluate_trig_interpolant(dku0, theta_pts).real
        return Field(grid, shifted - base)

    w0 = residual_field(phi0)
    dthu0_f = _resample_columns(
        dthu0.values.reshape(1, -1), wt.profile.d, wt.grid.n_points, filters.m
    )[0]
    dku0_f = _resample_columns(
        dku0.values.reshape(1, -1), wt.profile.d, wt.grid.n_points, filters.m
    )[0]
    hm = 2 * np.pi / filters.m
    for _ in range(corrections):
        wb = bloch_transform(w0, k)
        coef = filters.critical_coefficients(wb) * filters.chi["16"]
        b_resp = (
            np.sum(np.conj(filters.uad) * dthu0_f[None, :], axis=1)
            + 1j * filters.ell * np.sum(np.conj(filters.uad) * dku0_f[None, :], axis=1)
        ) * hm
        delta_hat = np.where(np.abs(b_resp) > 1e-8, coef / b_resp, 0.0)
        delta_hat = delta_hat * (np.abs(filters.ell) <= filters.ell1 / 4 + 1e-15)
        # map the Bloch-zone coefficients back onto the x-grid FFT layout
        full = np.zeros(n, dtype=complex)
        for i, l in enumerate(filters.ell):
            q = int(round(l / (k / N)))
            full[q % n] = delta_hat[i] * (k / N) * n
        delta = np.fft.ifft(full).real
        if np.max(np.abs(delta)) < 1e-14:
            break
        phi0 = phi0 + delta
        w0 = residual_field(phi0)

    return Field(grid, phi0[None, :].astype(complex)), w0


# ---------------------------------------------------------------------------
# phase-multiplier identity


@dataclass(eq=False)
class PhaseMultiplierData:
    """Scalar multiplier of the phase equation against the eigenvalue curve."""

    ell: np.ndarray
    b0: np.ndarray  # 1 + B2 multiplier from the phase-time-derivative operator
    li_action: np.ndarray  # critical coefficient of the integrated-linearization
    m: np.ndarray  # assembled multiplier (i ell / k) b0^-1 li_action
    lambda1: np.ndarray
    residual: np.ndarray


def phase_multiplier_check(
    wt: WaveTrain,
    data: BlochEigenData,
    filters: ModeFilterSet,
    ell_grid: np.ndarray,
    dku0: Field | None = None,
) -> PhaseMultiplierData:
    """Assemble the scalar phase multiplier m(ell) and compare with lambda_1(ell).

    For each ell the integrated linearization applied to exp(i ell x) is
    evaluated through its periodic amplitude

        g(ell) = 2 k^2 D u0'' + i k ell D u0' + omega u0' + k L(ell) d_k u0,

    projected on the critical mode, divided by the phase-mass multiplier
    b0(ell) = <u_ad(ell), u0' - i ell d_k u0> coming from the operator
    B0 = d_th u0 - k d_k u0 d_th applied to Bloch modes, and scaled by
    i ell / k.  The defect m(ell) - lambda_1(ell) is cubic in ell.  (The
    numerator alone satisfies an exact Rayleigh identity:
    (i ell / k) g(ell) = L(ell)[u0' + i ell d_k u0], so the cubic defect is
    carried entirely by the B0 normalization.)
    """
    ell_grid = np.asarray(ell_grid, dtype=float)
    if np.any(np.abs(ell_grid) > filters.ell1 / 8 + 1e-12):
        raise ValueError("phase-multiplier grid must satisfy |ell| <= ell1/8")
    k = wt.k
    h = _profile_ip_weight(wt)
    if dku0 is None:
        dku0, _ = dk_profile_at(wt)

    dthu0 = spectral_derivative(wt.profile, 1)
    dth2u0 = spectral_derivative(wt.profile, 2)
    ua0 = data.u_ad.values.reshape(-1)
    dk_flat = dku0.values.reshape(-1)
    proj = _ip(ua0, dk_flat, h)
    dk_g = dk_flat - proj * dthu0.values.reshape(-1)

    base = (
        2 * k**2 * _apply_D(wt, dth2u0.values) + wt.omega * dthu0.values
    ).reshape(-1)
    ikd_dthu0 = (1j * k * _apply_D(wt, dthu0.values)).reshape(-1)
    dthu0_flat = dthu0.values.reshape(-1)

    b0 = np.empty(ell_grid.size, dtype=complex)
    li = np.empty(ell_grid.size, dtype=complex)
    mvals = np.empty(ell_grid.size, dtype=complex)
    lam1 = np.empty(ell_grid.size, dtype=complex)

    for i, ell in enumerate(ell_grid):
        lam, v, left = _tracked_pair_at(wt, float(ell), u_ad=data.u_ad)
        lam1[i] = lam
        A = assemble_bloch_operator(wt, float(ell))
        g = base + ell * ikd_dthu0 + k * (A @ dk_g)
        chi8 = float(chi_cutoff(np.array([8 * ell / filters.ell1]))[0])
        li[i] = chi8 * _ip(left, g, h)
        b0[i] = _ip(left, dthu0_flat - 1j * ell * dk_g, h)
        mvals[i] = (1j * ell / k) * li[i] / b0[i]

    return PhaseMultiplierData(
        ell=ell_grid,
        b0=b0,
        li_action=li,
        m=mvals,
        lambda1=lam1,
        residual=np.abs(mvals - lam1),
    )
