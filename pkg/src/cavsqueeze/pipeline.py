"""One-call assembly of profile, operators, eigensystem and diffusion matrix."""

from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError
from .linop import alpha0, build_operators, eigensystem
from .lof import LofSpec, optimal_gh_width, render_lof
from .model import ModelParams, make_grid
from .soliton import soliton_profile
from .spectra import DetectorWindow, modal_diffusion, optimize_lof_phase

LOF_KINDS = ("plane-wave", "gh1", "momentum", "w3", "hopf-sum", "soliton")


@dataclass(frozen=True, eq=False)
class Analysis:
    profile: object
    operators: tuple
    eigsys: object
    alpha0: object
    D: object

    @property
    def grid(self):
        return self.profile.grid

    @property
    def params(self):
        return self.profile.params


def analyze(params, grid, branch="plus"):
    """Soliton, fluctuation operators, paired modes and modal diffusion."""
    profile = soliton_profile(params, grid, branch)
    ops = build_operators(profile)
    es = eigensystem(*ops)
    a0 = alpha0(profile)
    return Analysis(profile, ops, es, a0, modal_diffusion(es, a0))


def analyze_point(mu, delta1, n_points=512, length=40.0, sigma=1, kappa=1.0, branch="plus"):
    return analyze(ModelParams(mu, delta1, sigma, kappa), make_grid(n_points, length), branch)


def make_lof(kind, analysis, theta=None, xi=None, x_shift=0.0, window=None, omega=0.0):
    """LOF for a CLI-level kind; returns (field, descriptor dict, relaxed flag).

    Plane-wave phase and Gauss-Hermite width are optimized at ``omega`` when
    not given.
    """
    if kind not in LOF_KINDS:
        raise InvalidArgumentError(f"lof.kind must be one of {LOF_KINDS}, got {kind!r}")
    a = analysis
    info = {"lof": kind}
    relaxed = False
    if kind == "plane-wave":
        if theta is None:
            theta, _ = optimize_lof_phase(a.eigsys, a.D, window, omega)
        info["theta"] = float(theta)
        spec = LofSpec("plane-wave", {"theta": float(theta)})
    elif kind == "gh1":
        if xi is None:
            xi, _ = optimal_gh_width(a.profile, a.eigsys, a.D, omega)
        info.update(xi=float(xi), x_shift=float(x_shift))
        spec = LofSpec("gauss-hermite", {"xi": float(xi), "x_shift": float(x_shift)})
    elif kind == "momentum":
        spec = LofSpec("mode", {"modes": "momentum"})
    elif kind == "w3":
        spec = LofSpec("w3")
    elif kind == "hopf-sum":
        spec = LofSpec("mode", {"modes": "hopf-mirror"})
        relaxed = True
    else:
        spec = LofSpec("soliton")
    field = render_lof(spec, a.profile, a.eigsys)
    return field, info, relaxed


def detector_window(analysis, sigma=None, x0=0.0):
    if sigma is None:
        return None
    return DetectorWindow.from_sigma(sigma, analysis.profile.beta, x0)


def default_hopf_bracket(delta1, mu_min=1.05, mu_max=None):
    mu0 = float(np.hypot(1.0, delta1))
    hi = mu0 * (1 - 1e-6) if mu_max is None else float(mu_max)
    return float(mu_min), hi
