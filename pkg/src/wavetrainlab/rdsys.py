"""Reaction-diffusion systems u_t = D u_xx + f(u) with polynomial reactions."""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .errors import ConfigError

__all__ = ["PolyTerm", "RDSystem", "make_lambda_omega", "load_system"]


@dataclass(frozen=True)
class PolyTerm:
    """One monomial coefficient * prod_i u_i^exponents[i] feeding one component."""

    target: int
    coefficient: float
    exponents: tuple[int, ...]


@dataclass(frozen=True, eq=False)
class RDSystem:
    """Immutable reaction-diffusion model: dimension, diffusion matrix, reaction.

    `f` and `jac_f` are vectorized over trailing axes: f maps (d, ...) to
    (d, ...), jac_f maps (d, ...) to (d, d, ...).
    """

    d: int
    D: np.ndarray
    f: Callable[[np.ndarray], np.ndarray]
    jac_f: Callable[[np.ndarray], np.ndarray]
    terms: tuple[PolyTerm, ...] | None = None
    name: str = "custom"

    def __post_init__(self) -> None:
        D = np.asarray(self.D, dtype=float)
        if D.shape != (self.d, self.d):
            raise ConfigError(f"D must be {self.d}x{self.d}, got {D.shape}")
        asym = float(np.max(np.abs(D - D.T)))
        if asym > 1e-14 * max(1.0, float(np.max(np.abs(D)))):
            raise ConfigError(f"D is not symmetric (max asymmetry {asym:.2e})")
        eigs = np.linalg.eigvalsh(D)
        if eigs.min() <= 0:
            raise ConfigError(
                f"D is not positive definite (smallest eigenvalue {eigs.min():.3e})"
            )
        object.__setattr__(self, "D", D)
        _verify_jacobian(self)


def _verify_jacobian(sys: "RDSystem", n_samples: int = 5, tol: float = 1e-6) -> None:
    rng = np.random.default_rng(12345)
    h = 1e-6
    for _ in range(n_samples):
        u = rng.uniform(-1.0, 1.0, size=sys.d)
        J = np.asarray(sys.jac_f(u), dtype=float)
        if J.shape != (sys.d, sys.d):
            raise ConfigError(f"jac_f returned shape {J.shape}")
        J_fd = np.empty_like(J)
        for j in range(sys.d):
            e = np.zeros(sys.d)
            e[j] = h
            J_fd[:, j] = (sys.f(u + e) - sys.f(u - e)) / (2 * h)
        scale = max(1.0, float(np.max(np.abs(J))))
        if np.max(np.abs(J - J_fd)) > tol * scale:
            raise ConfigError("jac_f disagrees with finite differences of f")


def _poly_f(d: int, terms: Sequence[PolyTerm]) -> Callable[[np.ndarray], np.ndarray]:
    def f(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        out = np.zeros_like(u, dtype=u.dtype)
        for t in terms:
            mono = np.ones_like(u[0])
            for i, e in enumerate(t.exponents):
                if e:
                    mono = mono * u[i] ** e
            out[t.target] = out[t.target] + t.coefficient * mono
        return out

    return f


def _poly_jac(d: int, terms: Sequence[PolyTerm]) -> Callable[[np.ndarray], np.ndarray]:
    def jac(u: np.ndarray) -> np.ndarray:
        u = np.asarray(u)
        out = np.zeros((d,) + u.shape, dtype=u.dtype)
        for t in terms:
            for j, ej in enumerate(t.exponents):
                if ej == 0:
                    continue
                mono = np.ones_like(u[0]) * (t.coefficient * ej)
                for i, e in enumerate(t.exponents):
                    p = e - 1 if i == j else e
                    if p:
                        mono = mono * u[i] ** p
                out[t.target, j] = out[t.target, j] + mono
        return out

    return jac


def _system_from_terms(d: int, D: np.ndarray, terms: Sequence[PolyTerm], name: str) -> RDSystem:
    terms = tuple(terms)
    return RDSystem(d=d, D=D, f=_poly_f(d, terms), jac_f=_poly_jac(d, terms),
                    terms=terms, name=name)


def make_lambda_omega(gamma: float) -> RDSystem:
    """Two-component gauge-symmetric validation family.

    f(u1,u2) = (lam(rho) u1 - om(rho) u2, om(rho) u1 + lam(rho) u2) with
    rho = u1^2 + u2^2, lam = 1 - rho, om = -gamma*rho, and D the identity.
    Wave trains and their dispersion relation are closed form, which makes
    the family the main test oracle.
    """
    if not np.isfinite(gamma):
        raise ConfigError("gamma must be finite")
    g = float(gamma)
    terms = [
        # f1 = u1 - u1^3 - u1 u2^2 + g u1^2 u2 + g u2^3
        PolyTerm(0, 1.0, (1, 0)),
        PolyTerm(0, -1.0, (3, 0)),
        PolyTerm(0, -1.0, (1, 2)),
        PolyTerm(0, g, (2, 1)),
        PolyTerm(0, g, (0, 3)),
        # f2 = u2 - u1^2 u2 - u2^3 - g u1^3 - g u1 u2^2
        PolyTerm(1, 1.0, (0, 1)),
        PolyTerm(1, -1.0, (2, 1)),
        PolyTerm(1, -1.0, (0, 3)),
        PolyTerm(1, -g, (3, 0)),
        PolyTerm(1, -g, (1, 2)),
    ]
    return _system_from_terms(2, np.eye(2), terms, name=f"lambda_omega(gamma={g})")


def load_system(config: dict | str | Path) -> RDSystem:
    """Build an RDSystem from a JSON document or an already-parsed dict.

    Either {"family": "lambda_omega", "gamma": g} or an explicit
    {"d": d, "D": row-major list, "f_polynomial": [{"target_component",
    "coefficient", "exponents"}, ...]}.
    """
    if isinstance(config, (str, Path)):
        config = json.loads(Path(config).read_text())
    if not isinstance(config, dict):
        raise ConfigError("system config must be a JSON object")

    if "family" in config:
        family = config["family"]
        if family == "lambda_omega":
            return make_lambda_omega(float(config.get("gamma", 0.0)))
        raise ConfigError(f"unknown system family {family!r}")

    try:
        d = int(config["d"])
        D = np.asarray(config["D"], dtype=float).reshape(d, d)
        raw = config["f_polynomial"]
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"malformed system config: {exc}") from exc
    terms = []
    for entry in raw:
        try:
            exps = tuple(int(e) for e in entry["exponents"])
            if len(exps) != d or any(e < 0 for e in exps):
                raise ValueError(f"bad exponents {exps}")
            terms.append(
                PolyTerm(int(entry["target_component"]), float(entry["coefficient"]), exps)
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"malformed polynomial term {entry!r}: {exc}") from exc
    return _system_from_terms(d, D, terms, name=config.get("name", "custom"))
