"""Spectral calculus on uniform periodic grids.

Transforms, derivatives and weighted Sobolev norms used by every other
module.  All data lives on `PeriodicGrid`s; fields are stored complex and
reality is checked, never assumed.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (
    AliasingWarning,
    BoundaryContaminationWarning,
    InvalidFieldError,
)

__all__ = [
    "PeriodicGrid",
    "Field",
    "SpectralCoeffs",
    "fourier_forward",
    "fourier_inverse",
    "spectral_derivative",
    "weighted_sobolev_norm",
    "inner_product",
    "l2_norm",
    "evaluate_trig_interpolant",
]


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on [0, length) with periodic wrap-around."""

    n_points: int
    length: float

    def __post_init__(self) -> None:
        if self.n_points < 8:
            raise ValueError(f"need n_points >= 8, got {self.n_points}")
        if not np.isfinite(self.length) or self.length <= 0:
            raise ValueError(f"length must be positive, got {self.length}")

    @property
    def spacing(self) -> float:
        return self.length / self.n_points

    @property
    def nodes(self) -> np.ndarray:
        return np.arange(self.n_points) * self.spacing

    @property
    def mode_numbers(self) -> np.ndarray:
        """Integer Fourier mode numbers in FFT order."""
        n = self.n_points
        return np.rint(np.fft.fftfreq(n, 1.0 / n)).astype(int)

    @property
    def wavenumbers(self) -> np.ndarray:
        """Angular wavenumbers 2*pi*m/length in FFT order."""
        return 2.0 * np.pi * self.mode_numbers / self.length


@dataclass(frozen=True, eq=False)
class Field:
    """d-component function sampled on a periodic grid, stored complex."""

    grid: PeriodicGrid
    values: np.ndarray

    def __post_init__(self) -> None:
        v = np.asarray(self.values, dtype=complex)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[1] != self.grid.n_points:
            raise ValueError(
                f"values shape {v.shape} incompatible with grid of "
                f"{self.grid.n_points} points"
            )
        object.__setattr__(self, "values", v)

    @property
    def d(self) -> int:
        return self.values.shape[0]

    @property
    def real_values(self) -> np.ndarray:
        return self.values.real

    def max_imag(self) -> float:
        return float(np.max(np.abs(self.values.imag)))

    def copy(self) -> "Field":
        return Field(self.grid, self.values.copy())


@dataclass(frozen=True, eq=False)
class SpectralCoeffs:
    """Fourier coefficients c_m with u(x) = sum_m c_m exp(2*pi*i*m*x/length).

    Normalization: c_m = (1/length) * spacing * sum_j u_j exp(-2*pi*i*m*x_j/length),
    the trapezoid approximation of (1/length) * int u exp(-i 2 pi m x / length) dx.
    """

    grid: PeriodicGrid
    coefficients: np.ndarray

    def __post_init__(self) -> None:
        c = np.asarray(self.coefficients, dtype=complex)
        if c.ndim == 1:
            c = c[None, :]
        if c.ndim != 2 or c.shape[1] != self.grid.n_points:
            raise ValueError("coefficient shape incompatible with grid")
        object.__setattr__(self, "coefficients", c)

    @property
    def mode_numbers(self) -> np.ndarray:
        return self.grid.mode_numbers


def _check_finite(values: np.ndarray) -> None:
    if not np.all(np.isfinite(values.view(float))):
        raise InvalidFieldError("field contains non-finite values")


def fourier_forward(f: Field) -> SpectralCoeffs:
    """Forward transform with coefficients normalized as a domain average."""
    _check_finite(f.values)
    return SpectralCoeffs(f.grid, np.fft.fft(f.values, axis=-1) / f.grid.n_points)


def fourier_inverse(c: SpectralCoeffs) -> Field:
    return Field(c.grid, np.fft.ifft(c.coefficients * c.grid.n_points, axis=-1))


def _top_mode_fraction(coeffs: np.ndarray, grid: PeriodicGrid) -> float:
    m = np.abs(grid.mode_numbers)
    top = m >= grid.n_points // 2 - 1
    total = float(np.sum(np.abs(coeffs) ** 2))
    if total == 0.0:
        return 0.0
    return float(np.sum(np.abs(coeffs[..., top]) ** 2)) / total


def spectral_derivative(f: Field, order: int = 1) -> Field:
    """Differentiate by Fourier multiplication; exact on resolved trig polynomials."""
    if order not in (1, 2, 3, 4):
        raise ValueError(f"order must be in 1..4, got {order}")
    c = fourier_forward(f)
    frac = _top_mode_fraction(c.coefficients, f.grid)
    if frac > 1e-8:
        warnings.warn(
            f"top-mode energy fraction {frac:.2e} exceeds 1e-8; "
            "derivative may be aliased",
            AliasingWarning,
            stacklevel=2,
        )
    ik = 1j * f.grid.wavenumbers
    mult = ik**order
    if order % 2 == 1 and f.grid.n_points % 2 == 0:
        # the Nyquist mode has no well-defined odd derivative on the grid
        mult = mult.copy()
        mult[f.grid.n_points // 2] = 0.0
    return Field(f.grid, np.fft.ifft(c.coefficients * mult, axis=-1) * f.grid.n_points)


def inner_product(f: Field, g: Field) -> complex:
    """Discrete L2 pairing sum_i int conj(f_i) g_i dx (trapezoid quadrature)."""
    if f.grid != g.grid:
        raise ValueError("fields live on different grids")
    return complex(np.sum(np.conj(f.values) * g.values) * f.grid.spacing)


def l2_norm(f: Field) -> float:
    return float(np.sqrt(max(inner_product(f, f).real, 0.0)))


def weighted_sobolev_norm(f: Field, m2: int = 0, m1: int = 0) -> float:
    """Discrete ||f * rho^m1||_{H^m2} with rho(x) = sqrt(1 + x^2), x from domain center.

    Only meaningful for fields that decay near the domain ends; a
    BoundaryContaminationWarning is emitted otherwise.
    """
    if m2 not in (0, 1, 2, 3) or m1 not in (0, 1, 2, 3):
        raise ValueError("m1 and m2 must lie in 0..3")
    _check_finite(f.values)
    n = f.grid.n_points
    sup = float(np.max(np.abs(f.values)))
    edge = max(2, n // 50)
    edge_sup = float(
        np.max(np.abs(np.concatenate([f.values[:, :edge], f.values[:, -edge:]], axis=1)))
    )
    if sup > 0 and edge_sup > 1e-8 * max(1.0, sup):
        warnings.warn(
            f"field does not decay at domain ends (edge sup {edge_sup:.2e}); "
            "weighted norm is boundary-contaminated",
            BoundaryContaminationWarning,
            stacklevel=2,
        )
    x = f.grid.nodes - 0.5 * f.grid.length
    rho = np.sqrt(1.0 + x**2)
    g = Field(f.grid, f.values * rho**m1)
    total = inner_product(g, g).real
    for j in range(1, m2 + 1):
        gj = spectral_derivative(g, j)
        total += inner_product(gj, gj).real
    return float(np.sqrt(max(total, 0.0)))


def evaluate_trig_interpolant(f: Field, points: np.ndarray) -> np.ndarray:
    """Evaluate the trigonometric interpolant of f at arbitrary points.

    Points are taken modulo the domain length.  Direct mode summation,
    chunked to bound memory; exact (to roundoff) for grid-sampled data.
    """
    pts = np.atleast_1d(np.asarray(points, dtype=float)) % f.grid.length
    c = np.fft.fft(f.values, axis=-1) / f.grid.n_points
    # symmetrize the Nyquist mode so real inputs give real interpolants
    n = f.grid.n_points
    k = f.grid.wavenumbers.copy()
    if n % 2 == 0:
        c = c.copy()
        c[:, n // 2] *= 0.5
        k = np.append(k, -k[n // 2])
        c = np.concatenate([c, c[:, n // 2 : n // 2 + 1]], axis=1)
    out = np.empty((f.d, pts.size), dtype=complex)
    chunk = max(1, int(4e6 // max(k.size, 1)))
    for start in range(0, pts.size, chunk):
        sl = slice(start, min(start + chunk, pts.size))
        phases = np.exp(1j * np.outer(pts[sl], k))
        out[:, sl] = (phases @ c.T).T
    return out.reshape((f.d,) + np.shape(points)) if np.ndim(points) else out[:, 0]
