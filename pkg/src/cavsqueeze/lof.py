"""Local-oscillator fields for homodyne projections."""

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidArgumentError
from .linop import hopf_mirror_indices
from .model import FluctuationField
from .spectra import squeezing_spectrum

KINDS = ("plane-wave", "gauss-hermite", "mode", "w3", "soliton")


@dataclass(frozen=True)
class LofSpec:
    """Description of a local oscillator.

    ``kind`` selects the family; ``options`` holds its parameters:

    - plane-wave: ``theta``
    - gauss-hermite: ``xi``, ``x_shift`` (default 0), ``phi`` (default: soliton phase)
    - mode: ``modes`` (tags or indices) and optional ``coefficients``; the tag
      ``"hopf-mirror"`` stands for the two modes with eigenvalues -2 +/- i omega_HB
    - w3: closed-form left mode that is perfectly squeezed at mu = 1
    - soliton: the stationary profile itself
    """

    kind: str
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise InvalidArgumentError(f"unknown LOF kind {self.kind!r}; expected one of {KINDS}")

    @property
    def label(self):
        if not self.options:
            return self.kind
        opts = ",".join(f"{k}={v}" for k, v in sorted(self.options.items()))
        return f"{self.kind}({opts})"


def plane_wave(grid, theta=0.0):
    return FluctuationField.from_scalar(np.full(grid.n_points, np.exp(1j * theta)))


def gauss_hermite(grid, xi, x_shift=0.0, phi=0.0):
    """i exp(i phi) (x - x_shift) exp(-((x - x_shift)/xi)^2 / 2), scaled to unit peak.

    Evaluated in the log domain so that very narrow widths do not underflow.
    """
    if not xi > 0:
        raise InvalidArgumentError(f"Gauss-Hermite width must be positive, got {xi}")
    u = grid.x - x_shift
    with np.errstate(divide="ignore"):
        logmag = np.log(np.abs(u)) - 0.5 * (u / xi) ** 2
    logmag -= logmag.max()
    values = 1j * np.exp(1j * phi) * np.sign(u) * np.exp(logmag)
    return FluctuationField.from_scalar(values)


def w3_closed_form(profile):
    """Left mode with eigenvalue -2 paired with the bifurcating mode at mu = 1."""
    b = profile.beta
    x = profile.grid.x
    s = np.sqrt(b / 2) / np.cosh(b * x)
    t = b * np.tanh(b * x)
    q = b**2 + 1j * (x * t - 1)
    e = np.exp(1j * profile.phi)
    return FluctuationField(-s * q * e / b, -s * q.conj() * e.conjugate() / b)


def _mode_indices(eigsys, selector):
    if isinstance(selector, (int, np.integer)):
        if not 0 <= selector < len(eigsys):
            raise InvalidArgumentError(f"mode index {selector} out of range")
        return [int(selector)]
    if selector == "hopf-mirror":
        return hopf_mirror_indices(eigsys)
    found = eigsys.indices(selector)
    if not found:
        raise InvalidArgumentError(f"no mode tagged {selector!r}")
    return found


def render_lof(spec, profile, eigsys=None):
    """Sample the LOF described by ``spec`` on the profile's grid."""
    grid = profile.grid
    o = spec.options
    if spec.kind == "plane-wave":
        return plane_wave(grid, float(o.get("theta", 0.0)))
    if spec.kind == "gauss-hermite":
        if "xi" not in o:
            raise InvalidArgumentError("gauss-hermite LOF needs a width xi")
        phi = float(o["phi"]) if o.get("phi") is not None else profile.phi
        return gauss_hermite(grid, float(o["xi"]), float(o.get("x_shift", 0.0)), phi)
    if spec.kind == "w3":
        return w3_closed_form(profile)
    if spec.kind == "soliton":
        return FluctuationField.from_scalar(profile.psi_bar)
    # mode-derived
    if eigsys is None:
        raise InvalidArgumentError("mode-derived LOFs need an eigensystem")
    selectors = o.get("modes")
    if selectors is None:
        raise InvalidArgumentError("mode-derived LOF needs 'modes'")
    if isinstance(selectors, (str, int, np.integer)):
        selectors = [selectors]
    idx = [i for sel in selectors for i in _mode_indices(eigsys, sel)]
    coef = np.asarray(o.get("coefficients", np.ones(len(idx))), dtype=complex)
    if coef.shape != (len(idx),):
        raise InvalidArgumentError(f"{len(idx)} modes selected but {coef.size} coefficients given")
    return FluctuationField.from_stacked(eigsys.left[:, idx] @ coef)


def gh_width_scan(profile, eigsys, D, xi_values, omega=(0.0,), x_shifts=None, xi_shift=None):
    """Squeezing with a Gauss-Hermite LOF versus its width and its position.

    Returns a dict with ``xi``, ``omega`` and ``S_width`` (len(xi) x len(omega));
    when ``x_shifts`` is given also ``x_shift`` and ``S_shift`` at width
    ``xi_shift`` (default: the optimal width at the first frequency).
    """
    omega = np.atleast_1d(np.asarray(omega, dtype=float))
    xi_values = np.asarray(xi_values, dtype=float)
    grid = profile.grid

    def spectrum(xi, shift):
        lof = gauss_hermite(grid, xi, shift, profile.phi)
        return squeezing_spectrum(eigsys, D, lof, omega).values

    out = {
        "xi": xi_values,
        "omega": omega,
        "S_width": np.array([spectrum(xi, 0.0) for xi in xi_values]),
    }
    if x_shifts is not None:
        if xi_shift is None:
            xi_shift, _ = optimal_gh_width(profile, eigsys, D, omega[0])
        x_shifts = np.asarray(x_shifts, dtype=float)
        out["x_shift"] = x_shifts
        out["xi_shift"] = float(xi_shift)
        out["S_shift"] = np.array([spectrum(xi_shift, s) for s in x_shifts])
    return out


def optimal_gh_width(profile, eigsys, D, omega=0.0):
    """Width in [0.1/beta, 10/beta] minimizing S_out(omega); returns (xi, S)."""
    grid = profile.grid
    b = profile.beta

    def value(log_xi):
        lof = gauss_hermite(grid, float(np.exp(log_xi)), 0.0, profile.phi)
        return float(squeezing_spectrum(eigsys, D, lof, [omega]).values[0])

    res = minimize_scalar(
        value, bounds=(np.log(0.1 / b), np.log(10.0 / b)), method="bounded",
        options={"xatol": 1e-6},
    )
    return float(np.exp(res.x)), float(res.fun)
