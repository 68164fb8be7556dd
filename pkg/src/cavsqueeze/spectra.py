"""Modal diffusion, squeezing and intensity spectra, and soliton drift diffusion.

Fluctuations are expanded on the right modes, ``a = sum_i c_i v_i`` with
``c_i = <w_i|a>``.  The amplitudes obey ``dc_i/dt = lambda_i c_i + xi_i`` with
``<xi_i(t) xi_j(t')> = D_ij delta(t - t')``.  The Goldstone amplitude is the
soliton position and is excluded from the stationary spectra (the detector is
assumed to co-move with the soliton).
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .errors import InvalidArgumentError, NonStationaryError, NumericalError
from .model import FluctuationField

logger = logging.getLogger(__name__)

IMAG_TOL = 1e-8
NEUTRAL_TOL = 1e-8
NEGLIGIBLE_PROJECTION = 1e-5


@dataclass(frozen=True, eq=False)
class ModalDiffusionMatrix:
    """Symmetric matrix D_ij over all modes; ``retained`` masks the Goldstone mode out."""

    entries: np.ndarray
    retained: np.ndarray

    @property
    def retained_entries(self):
        r = self.retained
        return self.entries[np.ix_(r, r)]


@dataclass(frozen=True, eq=False)
class SpectrumResult:
    omega: np.ndarray
    values: np.ndarray
    metadata: dict = field(default_factory=dict)
    imag_residual: float = 0.0

    def __len__(self):
        return self.omega.shape[0]

    @property
    def argmin(self):
        return int(np.argmin(self.values))

    @property
    def minimum(self):
        return float(self.values.min())


@dataclass(frozen=True)
class DetectorWindow:
    """Detector covering [center - width/2, center + width/2]."""

    center: float
    width: float

    def __post_init__(self):
        if not np.isfinite(self.center) or not np.isfinite(self.width) or self.width <= 0:
            raise InvalidArgumentError(f"detector width must be positive, got {self.width}")

    @classmethod
    def from_sigma(cls, sigma, beta, center=0.0):
        """Window of normalized size ``sigma = width / beta``."""
        return cls(float(center), float(sigma) * float(beta))

    def sigma(self, beta):
        return self.width / beta

    def weights(self, grid):
        """Fraction of each periodic grid cell covered by the window."""
        lo = self.center - 0.5 * self.width
        hi = self.center + 0.5 * self.width
        half = 0.5 * grid.length
        tol = 1e-12 * grid.length
        if lo < -half - tol or hi > half + tol or self.width > grid.length + tol:
            raise InvalidArgumentError(
                f"detector [{lo:.4g}, {hi:.4g}] leaves the domain [{-half:.4g}, {half:.4g}]"
            )
        a = grid.x - 0.5 * grid.dx
        b = grid.x + 0.5 * grid.dx
        cover = np.zeros(grid.n_points)
        for shift in (-grid.length, 0.0, grid.length):
            cover += np.clip(np.minimum(b + shift, hi) - np.maximum(a + shift, lo), 0.0, None)
        return np.clip(cover / grid.dx, 0.0, 1.0)


def modal_diffusion(eigsys, alpha0):
    """D_ij = int dx [w_i^* w_j^* alpha0 + w_i^{+*} w_j^{+*} alpha0^*]."""
    n = eigsys.grid.n_points
    a0 = np.asarray(getattr(alpha0, "values", alpha0), dtype=complex)
    wu = eigsys.left[:n].conj()
    wl = eigsys.left[n:].conj()
    d = eigsys.grid.dx * (wu.T @ (a0[:, None] * wu) + wl.T @ (a0.conj()[:, None] * wl))
    d = 0.5 * (d + d.T)
    return ModalDiffusionMatrix(d, np.asarray(eigsys.retained, dtype=bool))


def modal_spectrum(D, eigenvalues, omega):
    """S_ij(Omega) = D_ij / ((lambda_i - i Omega)(lambda_j + i Omega)) over retained modes."""
    lam = np.asarray(eigenvalues)[D.retained]
    if np.any(lam.real >= 0):
        raise NonStationaryError("a retained mode has Re(lambda) >= 0")
    d = D.retained_entries
    return d / np.outer(lam - 1j * omega, lam + 1j * omega)


def _lof_norm(lof, weights, dx, relaxed):
    if not relaxed and not lof.is_conjugate_symmetric(1e-10):
        raise InvalidArgumentError(
            "LOF must satisfy lower = conj(upper); pass relaxed=True for formal mode LOFs"
        )
    # equals int |alpha_L|^2 for a physical LOF
    n = 0.5 * dx * np.sum(weights * (np.abs(lof.upper) ** 2 + np.abs(lof.lower) ** 2))
    if not n > 0:
        raise InvalidArgumentError("LOF has zero norm on the detector")
    return n


def _projections(eigsys, lof, weights):
    n = eigsys.grid.n_points
    if len(lof) != n:
        raise InvalidArgumentError("LOF and eigensystem live on different grids")
    dx = eigsys.grid.dx
    cu = (weights * lof.upper).conj()
    cl = (weights * lof.lower).conj()
    return dx * (cu @ eigsys.right[:n] + cl @ eigsys.right[n:])


def _select_modes(eigsys, D, p, n_modes=None):
    lam = eigsys.eigenvalues
    keep = D.retained.copy()
    scale = np.sqrt(np.sum(np.abs(p) ** 2)) or 1.0
    neutral = keep & (np.abs(lam) < NEUTRAL_TOL)
    for i in np.flatnonzero(neutral):
        # an extra neutral mode (e.g. at a bifurcation) must be invisible to the LOF
        if abs(p[i]) > NEGLIGIBLE_PROJECTION * scale:
            raise NonStationaryError(
                f"LOF overlaps a neutral mode (lambda = {lam[i]:.2e}); spectrum diverges at Omega = 0"
            )
        keep[i] = False
    if np.any(lam[keep].real >= 0):
        raise NonStationaryError("a retained mode has Re(lambda) >= 0")
    if n_modes is not None:
        idx = np.flatnonzero(keep)
        score = np.abs(p[idx]) * np.sqrt(np.abs(np.diag(D.entries)[idx]))
        top = idx[np.argsort(score)[::-1][: int(n_modes)]]
        keep = np.zeros_like(keep)
        keep[top] = True
    return keep


def _double_sum(p, lam, d, omega, chunk=64):
    """sum_ij p_i p_j D_ij / ((lam_i - i W)(lam_j + i W)) for every W in ``omega``."""
    out = np.empty(omega.shape[0], dtype=complex)
    for s in range(0, omega.shape[0], chunk):
        w = omega[s : s + chunk, None]
        a = p / (lam - 1j * w)
        b = p / (lam + 1j * w)
        out[s : s + chunk] = 0.5 * (np.sum((a @ d) * b, axis=1) + np.sum((b @ d) * a, axis=1))
    return out


def _spectrum(eigsys, D, lof, omega, weights, relaxed, n_modes, metadata):
    omega = np.asarray(omega, dtype=float)
    if omega.ndim != 1:
        raise InvalidArgumentError("omega must be a 1D array")
    if not isinstance(lof, FluctuationField):
        lof = FluctuationField.from_scalar(lof)
    norm = _lof_norm(lof, weights, eigsys.grid.dx, relaxed)
    p = _projections(eigsys, lof, weights)
    keep = _select_modes(eigsys, D, p, n_modes)
    s = (2.0 / norm) * _double_sum(
        p[keep], eigsys.eigenvalues[keep], D.entries[np.ix_(keep, keep)], omega
    )
    resid = float(np.abs(s.imag).max()) if s.size else 0.0
    if resid >= IMAG_TOL:
        if not relaxed:
            raise NumericalError(f"spectrum has imaginary residual {resid:.2e}")
        # formal mode LOFs have no homodyne meaning; their spectrum is complex
        logger.warning("relaxed LOF: returning Re S, imaginary residual %.2e", resid)
    meta = dict(metadata or {})
    meta["n_modes"] = int(keep.sum())
    return SpectrumResult(omega, s.real.copy(), meta, resid)


def squeezing_spectrum(eigsys, D, lof, omega, relaxed=False, n_modes=None, metadata=None):
    """Full-beam homodyne squeezing spectrum S_out(Omega).

    Parameters
    ----------
    eigsys : EigenSystem
    D : ModalDiffusionMatrix
    lof : FluctuationField or array_like
        Local oscillator; a scalar field ``alpha`` means ``(alpha, conj(alpha))``.
    omega : array_like
        Normalized frequencies.
    relaxed : bool
        Accept LOF vectors violating ``lower = conj(upper)`` (formal mode LOFs).
        Their spectrum may be complex; the real part is returned and the
        imaginary residual is kept in ``imag_residual``.
    n_modes : int, optional
        Keep only the modes with the largest ``|<lof|v_i>| |D_ii|^(1/2)``.
    """
    w = np.ones(eigsys.grid.n_points)
    return _spectrum(eigsys, D, lof, omega, w, relaxed, n_modes, metadata)


def squeezing_spectrum_detector(eigsys, D, lof, window, omega, relaxed=False, metadata=None):
    """Squeezing spectrum seen by a detector covering only ``window``."""
    w = window.weights(eigsys.grid)
    meta = dict(metadata or {}, detector_center=window.center, detector_width=window.width)
    return _spectrum(eigsys, D, lof, omega, w, relaxed, None, meta)


def intensity_spectrum(eigsys, D, profile, omega, window=None):
    """Intensity-fluctuation spectrum: the soliton itself acts as the LOF."""
    if not np.any(profile.psi_bar):
        raise InvalidArgumentError("zero soliton profile")
    lof = FluctuationField.from_scalar(profile.psi_bar)
    meta = {"lof": "soliton"}
    if window is None:
        return squeezing_spectrum(eigsys, D, lof, omega, metadata=meta)
    return squeezing_spectrum_detector(eigsys, D, lof, window, omega, metadata=meta)


def _plane_wave_value(theta, eigsys, D, window, omega):
    lof = FluctuationField.from_scalar(np.full(eigsys.grid.n_points, np.exp(1j * theta)))
    if window is None:
        res = squeezing_spectrum(eigsys, D, lof, [omega])
    else:
        res = squeezing_spectrum_detector(eigsys, D, lof, window, [omega])
    return float(res.values[0])


def optimize_lof_phase(eigsys, D, window=None, omega=0.0, n_scan=360, tol=1e-6):
    """Plane-wave LOF phase minimizing S_out at ``omega``.

    Scans theta in [0, pi) and refines the best scan point by golden section.
    Returns ``(theta, value)`` with theta in [0, pi).
    """
    n = eigsys.grid.n_points
    dx = eigsys.grid.dx
    w = np.ones(n) if window is None else window.weights(eigsys.grid)
    # S(theta) = A + Re(B exp(-2 i theta)); the scan keeps the search generic
    base = FluctuationField.from_scalar(np.ones(n))
    norm = _lof_norm(base, w, dx, False)
    pu = _projections(eigsys, FluctuationField(np.ones(n), np.zeros(n)), w)
    pl = _projections(eigsys, FluctuationField(np.zeros(n), np.ones(n)), w)
    keep = _select_modes(eigsys, D, pu + pl)
    lam = eigsys.eigenvalues[keep]
    d = D.entries[np.ix_(keep, keep)]
    pu, pl = pu[keep], pl[keep]

    def value(theta):
        p = np.exp(-1j * theta) * pu + np.exp(1j * theta) * pl
        return float((2.0 / norm) * _double_sum(p, lam, d, np.array([omega]))[0].real)

    step = np.pi / n_scan
    thetas = np.arange(n_scan) * step
    vals = np.array([value(t) for t in thetas])
    k = int(np.argmin(vals))
    res = minimize_scalar(
        value,
        bracket=(thetas[k] - step, thetas[k], thetas[k] + step),
        method="golden",
        tol=tol,
    )
    theta = float(np.mod(res.x, np.pi))
    return theta, float(res.fun)


def drift_diffusion(eigsys, alpha0, params):
    """Diffusion constant of the soliton position, <rho^2(t)> = D_drift t.

    Computed as (2 / kappa^2) Re int w1^2 alpha0^* with w1 the upper component
    of the Goldstone left mode, and cross-checked against D_11 / kappa^2.
    """
    g = eigsys.index("goldstone")
    n = eigsys.grid.n_points
    dx = eigsys.grid.dx
    a0 = np.asarray(getattr(alpha0, "values", alpha0), dtype=complex)
    w1 = eigsys.left[:n, g]
    w1p = eigsys.left[n:, g]
    value = 2.0 * float(np.real(dx * np.sum(w1**2 * a0.conj())))
    d11 = dx * np.sum(w1.conj() ** 2 * a0 + w1p.conj() ** 2 * a0.conj())
    if abs(d11 - value) > 1e-8 * max(1.0, abs(value)):
        logger.warning("drift: w1^2 form %.6g differs from D_11 = %s; using D_11", value, d11)
        value = float(d11.real)
    return value / params.kappa**2


def resolvent_spectrum(lmat, eigsys, lof, omega, alpha0):
    """Squeezing spectrum from the grid resolvent, without the modal expansion.

    Only the Goldstone projector is taken from ``eigsys``.  Used as an
    independent check of :func:`squeezing_spectrum`.
    """
    grid = eigsys.grid
    dx = grid.dx
    n = grid.n_points
    g = eigsys.index("goldstone")
    v1 = eigsys.right[:, g]
    w1 = eigsys.left[:, g]
    proj = np.eye(2 * n) - dx * np.outer(v1, w1.conj())
    lp = lmat.matrix - dx * np.outer(v1, w1.conj())
    a0 = np.asarray(getattr(alpha0, "values", alpha0), dtype=complex)
    q = np.concatenate([a0, a0.conj()]) / dx
    noise = (proj * q[None, :]) @ proj.T
    if not isinstance(lof, FluctuationField):
        lof = FluctuationField.from_scalar(lof)
    gvec = dx * lof.stacked.conj()
    norm = 0.5 * dx * np.sum(np.abs(lof.stacked) ** 2)
    out = np.empty(len(omega), dtype=complex)
    eye = np.eye(2 * n)
    for k, w in enumerate(np.asarray(omega, dtype=float)):
        left = np.linalg.solve((1j * w * eye - lp).T, gvec)
        right = np.linalg.solve((-1j * w * eye - lp).T, gvec)
        out[k] = left @ noise @ right
    return (2.0 / norm) * out
