"""Render fronts, spectrum, branch and decay figures.

Input schemas (produced by the wavetrainlab CLI):
  fronts.csv    t, x_frame, phi, profile
  spectrum.csv  ell, j, re_lambda, im_lambda   (+ stability.json)
  branch.csv    k, omega, c_g, beta, residual_norm
  error.csv     t, sup_err, weighted_err       (+ rate.json)
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

KINDS = ("fronts", "spectrum", "branch", "decay")

STYLE = {
    "figure.figsize": (7.0, 4.2),
    "figure.dpi": 130,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 10,
}


class ParseError(Exception):
    """An input file does not satisfy its declared schema."""


@dataclass(frozen=True)
class FigureSpec:
    kind: str
    inputs: dict
    output: Path

    def __post_init__(self) -> None:
        if self.kind not in KINDS:
            raise ParseError(f"unknown figure kind {self.kind!r}; choose from {KINDS}")
        object.__setattr__(self, "output", Path(self.output))
        object.__setattr__(
            self, "inputs", {k: Path(v) for k, v in self.inputs.items()}
        )


@dataclass
class RenderResult:
    output: Path
    annotations: dict = field(default_factory=dict)


def _read_csv(path: Path, required: set[str]) -> dict[str, np.ndarray]:
    if not path.exists():
        raise ParseError(f"input file {path} does not exist")
    with open(path) as fh:
        reader = csv.DictReader(fh)
        names = set(reader.fieldnames or [])
        if not required <= names:
            raise ParseError(
                f"{path} is missing columns {sorted(required - names)}"
            )
        rows = list(reader)
    if not rows:
        raise ParseError(f"{path} contains no data rows")
    try:
        return {
            name: np.array([float(r[name]) for r in rows]) for name in names
        }
    except ValueError as exc:
        raise ParseError(f"{path} has a non-numeric entry: {exc}") from exc


def _read_json(path: Path, required: set[str]) -> dict:
    if not path.exists():
        raise ParseError(f"input file {path} does not exist")
    try:
        data = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path} is not valid JSON: {exc}") from exc
    missing = required - set(data)
    if missing:
        raise ParseError(f"{path} is missing keys {sorted(missing)}")
    return data


def _render_fronts(spec: FigureSpec, ax) -> dict:
    data = _read_csv(spec.inputs["fronts"], {"t", "x_frame", "phi", "profile"})
    times = np.unique(data["t"])
    cmap = plt.get_cmap("viridis")
    for i, t in enumerate(times):
        sel = data["t"] == t
        order = np.argsort(data["x_frame"][sel])
        x = data["x_frame"][sel][order]
        color = cmap(i / max(len(times) - 1, 1))
        ax.plot(x, data["phi"][sel][order], "-", color=color, lw=1.2,
                label=f"t = {t:g}")
        ax.plot(x, data["profile"][sel][order], "--", color=color, lw=0.9)
    ax.set_xlabel("x - c_g (t - 1)")
    ax.set_ylabel("phase")
    ax.set_title("phase fronts: extracted (solid) vs predicted (dashed)")
    ax.legend(fontsize=7, ncol=2)
    return {"times": [float(t) for t in times]}


def _render_spectrum(spec: FigureSpec, ax) -> dict:
    data = _read_csv(spec.inputs["spectrum"], {"ell", "j", "re_lambda", "im_lambda"})
    stab = _read_json(
        spec.inputs["stability"], {"stable", "sigma0", "ell0", "alpha0", "ell1"}
    )
    branches = np.unique(data["j"].astype(int))
    for j in branches:
        sel = data["j"].astype(int) == j
        order = np.argsort(data["ell"][sel])
        ax.plot(
            data["ell"][sel][order],
            data["re_lambda"][sel][order],
            lw=1.0,
            label=f"Re lambda_{j}" if j <= 2 else None,
        )
    ell = np.linspace(data["ell"].min(), data["ell"].max(), 200)
    ax.plot(ell, -stab["alpha0"] * ell**2, "k--", lw=1.2,
            label=f"-alpha0 ell^2 (alpha0 = {stab['alpha0']:.4g})")
    ax.axhline(-stab["sigma0"], color="gray", ls=":", lw=1.0,
               label=f"-sigma0 = {-stab['sigma0']:.4g}")
    ax.set_xlabel("ell")
    ax.set_ylabel("Re lambda_j(ell)")
    ax.set_ylim(bottom=min(-3 * stab["sigma0"], float(np.min(-stab["alpha0"] * ell**2)) * 1.3))
    verdict = "stable" if stab["stable"] else "UNSTABLE"
    ax.set_title(f"Bloch spectrum ({verdict})")
    ax.legend(fontsize=7)
    return {"stable": stab["stable"], "alpha0": stab["alpha0"],
            "sigma0": stab["sigma0"]}


def _render_branch(spec: FigureSpec, ax) -> dict:
    data = _read_csv(
        spec.inputs["branch"], {"k", "omega", "c_g", "beta", "residual_norm"}
    )
    order = np.argsort(data["k"])
    k = data["k"][order]
    ax.plot(k, data["omega"][order], "o-", ms=3, lw=1.0, label="omega(k)")
    ax.plot(k, data["c_g"][order], "s-", ms=3, lw=1.0, label="c_g(k)")
    ax.plot(k, data["beta"][order], "^-", ms=3, lw=1.0, label="beta(k)")
    ax.set_xlabel("k")
    ax.set_title("nonlinear dispersion relation and derived coefficients")
    ax.legend(fontsize=8)
    return {"k_range": [float(k[0]), float(k[-1])], "n_points": int(k.size)}


def _render_decay(spec: FigureSpec, ax) -> dict:
    data = _read_csv(spec.inputs["error"], {"t", "sup_err", "weighted_err"})
    rate = _read_json(spec.inputs["rate"], {"slope", "intercept", "window"})
    pos = (data["t"] > 0) & (data["sup_err"] > 0)
    ax.loglog(data["t"][pos], data["sup_err"][pos], "o", ms=4, label="sup error")
    slope = rate["slope"]
    t0, t1 = rate["window"]
    tt = np.geomspace(max(t0, data["t"][pos].min()), t1, 50)
    ax.loglog(tt, np.exp(rate["intercept"]) * tt**slope, "k--", lw=1.2,
              label="fitted rate")
    # the annotated value is the rate.json entry, verbatim
    annotation = f"slope = {slope!r}"
    ax.annotate(annotation, xy=(0.05, 0.08), xycoords="axes fraction", fontsize=9)
    ax.set_xlabel("t")
    ax.set_ylabel("error")
    ax.set_title("renormalized error decay")
    ax.legend(fontsize=8)
    return {"slope": slope, "annotation": annotation}


_RENDERERS = {
    "fronts": _render_fronts,
    "spectrum": _render_spectrum,
    "branch": _render_branch,
    "decay": _render_decay,
}


def render(spec: FigureSpec) -> RenderResult:
    """Draw the requested figure and write it to spec.output (PNG/SVG)."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        try:
            annotations = _RENDERERS[spec.kind](spec, ax)
            fig.tight_layout()
            spec.output.parent.mkdir(parents=True, exist_ok=True)
            save_kwargs = {}
            if spec.output.suffix == ".svg":
                save_kwargs["metadata"] = {"Date": None}  # deterministic output
            fig.savefig(spec.output, **save_kwargs)
        finally:
            plt.close(fig)
    return RenderResult(output=spec.output, annotations=annotations)
