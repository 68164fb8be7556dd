"""Stochastic oracle: integrate the linearized Langevin equations and estimate spectra.

The fluctuation field obeys ``da = L a dt + B dW`` with real, independent
white noises of intensity 1/dx per grid cell and
``B = diag(sqrt(alpha0), sqrt(alpha0^*))`` (principal branch).  The equations
are linear with additive noise, so two integrators are offered:

``"exponential"``
    exact in distribution: ``a_{n+1} = expm(L dt) a_n + eta_n`` with the
    Gaussian increment covariance from the Van Loan construction.  Any dt is
    stable; dt only sets the sampling rate.
``"euler-maruyama"``
    the textbook scheme, usable when ``dt |lambda_max| < 0.1``; on a grid the
    diffraction term makes that tiny, so it is meant for modal runs and small
    grids.

Each trajectory draws from its own generator seeded with ``[seed, index]``, so
ensembles do not depend on the order in which trajectories are produced.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import (
    BlowUpError,
    InsufficientDataError,
    InvalidArgumentError,
    NonStationaryError,
    NumericalError,
)
from .linop import _sector_bases
from .model import FluctuationField

logger = logging.getLogger(__name__)

SCHEMES = ("exponential", "euler-maruyama")
EM_STABILITY = 0.1
BLOW_UP_FACTOR = 1e3


@dataclass(frozen=True)
class SdeConfig:
    """Integration settings; ``t_total`` is the recorded time after the transient."""

    dt: float = 0.2
    t_total: float = 2000.0
    n_traj: int = 200
    seed: int = 0
    scheme: str = "exponential"
    transient: float = None

    def __post_init__(self):
        if not self.dt > 0 or not np.isfinite(self.dt):
            raise InvalidArgumentError(f"dt must be positive, got {self.dt}")
        if not self.t_total > 0:
            raise InvalidArgumentError(f"t_total must be positive, got {self.t_total}")
        if int(self.n_traj) != self.n_traj or self.n_traj < 1:
            raise InvalidArgumentError(f"n_traj must be a positive integer, got {self.n_traj}")
        if self.scheme not in SCHEMES:
            raise InvalidArgumentError(f"scheme must be one of {SCHEMES}, got {self.scheme!r}")
        if self.transient is not None and self.transient < 0:
            raise InvalidArgumentError("transient must be non-negative")
        if not 0 <= int(self.seed) < 2**64:
            raise InvalidArgumentError("seed must be a 64-bit unsigned integer")

    @property
    def n_steps(self):
        return int(round(self.t_total / self.dt))


def trajectory_rng(seed, index, stream=0):
    return np.random.default_rng([int(seed), int(index), int(stream)])


@dataclass(frozen=True, eq=False)
class NoiseRealization:
    """Grid noises for ``n_steps`` steps; each sample has variance 1/(dx dt)."""

    eta: np.ndarray
    eta_plus: np.ndarray
    dx: float
    dt: float


def draw_noise(grid, n_steps, dt, rng):
    scale = 1.0 / np.sqrt(grid.dx * dt)
    eta = rng.standard_normal((n_steps, grid.n_points)) * scale
    eta_plus = rng.standard_normal((n_steps, grid.n_points)) * scale
    return NoiseRealization(eta, eta_plus, grid.dx, dt)


def _realify(a):
    return np.block([[a.real, -a.imag], [a.imag, a.real]])


def discretize_linear_sde(drift, loading, dt, rank_tol=1e-13):
    """Exact one-step map of ``dz = A z dt + B dW`` with complex A, B and real W.

    Returns ``(phi, factor)``: ``z_{n+1} = phi z_n + (F_re + i F_im) eps`` with
    ``eps ~ N(0, I)`` where ``factor = [F_re; F_im]``.
    """
    m = drift.shape[0]
    ar = _realify(drift)
    br = np.vstack([loading.real, loading.imag])
    m2 = 2 * m
    block = np.zeros((2 * m2, 2 * m2))
    block[:m2, :m2] = -ar
    block[:m2, m2:] = br @ br.T
    block[m2:, m2:] = ar.T
    e = expm(block * dt)
    phi_r = e[m2:, m2:].T
    cov = phi_r @ e[:m2, m2:]
    cov = 0.5 * (cov + cov.T)
    vals, vecs = np.linalg.eigh(cov)
    keep = vals > rank_tol * max(vals.max(), 0.0)
    factor = vecs[:, keep] * np.sqrt(vals[keep])
    phi = phi_r[:m, :m] + 1j * phi_r[m:, :m]
    return phi, factor


def _noise_loading(profile):
    a0 = profile.params.mu + 1j * profile.params.sigma * profile.psi_bar**2
    return np.concatenate([np.sqrt(a0), np.sqrt(a0.conj())])


def goldstone_pair(lmat, ldag, profile):
    """Goldstone right mode d/dx(psi, psi*) and its adjoint partner with <w1|v1> = 1.

    The adjoint null vector comes from an SVD of L-dagger, independently of
    the modal eigensystem.
    """
    dx = profile.grid.dx
    v1 = np.concatenate([profile.dpsi_bar, profile.dpsi_bar.conj()])
    _, s, vh = np.linalg.svd(ldag.matrix)
    w1 = vh[-1].conj()
    if s[-1] > 1e-6 * s[0]:
        raise NumericalError(f"adjoint operator has no null vector (smallest singular value {s[-1]:.2e})")
    w1 = w1 / np.conj(dx * np.vdot(w1, v1))
    return v1, w1


@dataclass(frozen=True, eq=False)
class GridSimulation:
    """Recorded homodyne signals ``records[name]`` and positions, shape (n_traj, n_steps)."""

    t: np.ndarray
    records: dict
    position: np.ndarray
    config: SdeConfig
    lof_norms: dict = field(default_factory=dict)


def _transient(config, rates):
    if config.transient is not None:
        return config.transient
    slowest = np.max(rates)
    if slowest >= 0:
        raise NonStationaryError("a retained mode is not damped")
    return 10.0 / abs(slowest)


def _run_linear(phi, factor, readout, n_skip, n_rec, config, stream, check=True):
    """Iterate ``z <- phi z + noise`` for every trajectory; return ``readout @ z`` records.

    ``readout`` has shape (n_out, m).  Output shape (n_out, n_traj, n_rec).
    """
    m = phi.shape[0]
    k = factor.shape[1]
    f_re = np.ascontiguousarray(factor[:m])
    f_im = np.ascontiguousarray(factor[m:])
    n_traj = int(config.n_traj)
    rngs = [trajectory_rng(config.seed, t, stream) for t in range(n_traj)]
    z = np.zeros((m, n_traj), dtype=complex)
    out = np.empty((readout.shape[0], n_traj, n_rec), dtype=complex)
    total = n_skip + n_rec
    chunk = max(1, min(total, int(4e6 // max(1, k * n_traj))))
    ref = None
    step = 0
    while step < total:
        n = min(chunk, total - step)
        eps = np.stack([r.standard_normal((n, k)) for r in rngs], axis=2)  # (n, k, n_traj)
        noise = np.matmul(f_re, eps) + 1j * np.matmul(f_im, eps)
        for i in range(n):
            z = phi @ z + noise[i]
            j = step + i - n_skip
            if j >= 0:
                out[:, :, j] = readout @ z
        step += n
        if check:
            size = float(np.abs(z).max())
            if not np.isfinite(size) or (ref is not None and size > BLOW_UP_FACTOR * ref):
                raise BlowUpError(f"state grew to {size:.3g}; reduce dt")
            if ref is None and size > 0:
                ref = size
    return out


def _em_map(drift, loading, dt):
    """Euler-Maruyama as a linear map: z + A z dt + B dW."""
    m = drift.shape[0]
    phi = np.eye(m) + drift * dt
    factor = np.vstack([loading.real, loading.imag]) * np.sqrt(dt)
    return phi, factor


def _check_em(drift, dt):
    lam_max = float(np.abs(np.linalg.eigvals(drift)).max())
    if dt * lam_max >= EM_STABILITY:
        raise BlowUpError(
            f"Euler-Maruyama unstable: dt |lambda_max| = {dt * lam_max:.3g} >= {EM_STABILITY}; "
            f"use dt < {EM_STABILITY / lam_max:.3g}"
        )


def simulate_grid(profile, operators, config, lofs=None, omega_max=None):
    """Grid-space Langevin ensemble with the Goldstone component projected out.

    Parameters
    ----------
    profile : SolitonProfile
    operators : tuple
        ``(L, L-dagger)`` from :func:`build_operators`.
    config : SdeConfig
    lofs : dict of str -> FluctuationField
        Homodyne projections ``<lof|a>`` to record.
    omega_max : float, optional
        Highest frequency of interest; the sampling rate must resolve it.

    Returns
    -------
    GridSimulation
        ``position`` is x1(t) = -(1/kappa) <w1|a_G>, the accumulated Goldstone
        amplitude, starting at 0 when recording begins.
    """
    lmat, ldag = operators
    grid = profile.grid
    dx = grid.dx
    lofs = dict(lofs or {})
    if omega_max is not None and omega_max >= np.pi / config.dt:
        raise NumericalError(
            f"dt = {config.dt} samples up to Omega = {np.pi / config.dt:.3g} < omega_max = {omega_max}"
        )
    v1, w1 = goldstone_pair(lmat, ldag, profile)
    n2 = 2 * grid.n_points
    gproj = dx * np.outer(v1, w1.conj())
    lprime = lmat.matrix - gproj
    bdiag = _noise_loading(profile) / np.sqrt(dx)
    pb = (np.eye(n2) - gproj) * bdiag[None, :]

    names = list(lofs)
    kappa = profile.params.kappa
    records = {name: 0.0 for name in names}
    position = 0.0
    n_rec = config.n_steps
    sectors = []
    for par, basis in _sector_bases(grid).items():
        a_s = basis.T @ lprime @ basis
        b_s = basis.T @ pb @ basis
        read = [dx * (basis.T @ lofs[nm].stacked).conj() for nm in names]
        gold = par == -1
        if gold:
            # augment with the Goldstone amplitude c1, dc1 = dx <w1| B dW>
            wrow = dx * (basis.T @ w1).conj() @ (basis.T @ (bdiag[:, None] * basis))
            m = a_s.shape[0]
            a_aug = np.zeros((m + 1, m + 1), dtype=complex)
            a_aug[:m, :m] = a_s
            b_aug = np.vstack([b_s, wrow[None, :]])
            read = [np.append(r, 0.0) for r in read]
            read.append(np.append(np.zeros(m), 1.0))
            a_s, b_s = a_aug, b_aug
        sectors.append((par, a_s, b_s, np.array(read).reshape(len(read), -1), gold))

    rates = np.concatenate(
        [np.linalg.eigvals(a[: a.shape[0] - int(g), : a.shape[0] - int(g)]).real
         for _, a, _, _, g in sectors]
    )
    n_skip = int(np.ceil(_transient(config, rates) / config.dt))

    scale = max(float(np.abs(r).max()) for _, _, _, r, _ in sectors)
    for stream, (par, a_s, b_s, read, gold) in enumerate(sectors):
        if not gold and float(np.abs(read).max()) <= 1e-12 * scale:
            # no recorded signal lives in this parity sector
            continue
        if config.scheme == "exponential":
            phi, factor = discretize_linear_sde(a_s, b_s, config.dt)
        else:
            _check_em(a_s, config.dt)
            phi, factor = _em_map(a_s, b_s, config.dt)
        out = _run_linear(phi, factor, read, n_skip, n_rec, config, stream)
        for i, nm in enumerate(names):
            records[nm] = records[nm] + out[i]
        if gold:
            c1 = out[-1]
            position = -(c1 - c1[:, :1]) / kappa
    t = config.dt * np.arange(n_rec)
    norms = {nm: 0.5 * dx * float(np.sum(np.abs(lofs[nm].stacked) ** 2)) for nm in names}
    return GridSimulation(t, records, np.asarray(position), config, norms)


@dataclass(frozen=True, eq=False)
class ModalSimulation:
    t: np.ndarray
    coefficients: np.ndarray  # (n_traj, n_steps, n_modes)
    modes: np.ndarray
    config: SdeConfig


def simulate_modal(eigsys, alpha0, config, retained):
    """Integrate dc_i/dt = lambda_i c_i + xi_i for the ``retained`` modes.

    The noises are projections of the grid noise on the left modes,
    xi_i = int [w_i^* sqrt(alpha0) eta + w_i^{+*} sqrt(alpha0^*) eta^+] dx,
    so that <xi_i xi_j> = D_ij.
    """
    retained = np.atleast_1d(np.asarray(retained, dtype=int))
    lam = eigsys.eigenvalues[retained]
    if np.any(lam.real >= 0):
        raise NonStationaryError("retained modes must be damped")
    a0 = np.asarray(getattr(alpha0, "values", alpha0), dtype=complex)
    dx = eigsys.grid.dx
    b = np.concatenate([np.sqrt(a0), np.sqrt(a0.conj())]) / np.sqrt(dx)
    proj = dx * eigsys.left[:, retained].conj().T * b[None, :]
    drift = np.diag(lam)
    if config.scheme == "exponential":
        phi, factor = discretize_linear_sde(drift, proj, config.dt)
    else:
        _check_em(drift, config.dt)
        phi, factor = _em_map(drift, proj, config.dt)
    n_skip = int(np.ceil(_transient(config, lam.real) / config.dt))
    out = _run_linear(phi, factor, np.eye(len(retained)), n_skip, config.n_steps, config, 0)
    t = config.dt * np.arange(config.n_steps)
    return ModalSimulation(t, np.transpose(out, (1, 2, 0)), retained, config)


@dataclass(frozen=True, eq=False)
class SpectrumEstimate:
    omega: np.ndarray
    values: np.ndarray
    stderr: np.ndarray
    n_segments: int
    segment_samples: int


def estimate_spectrum(series, dt, segment_samples, series_b=None, omega_max=None):
    """Bartlett estimate of the spectrum of <x(t + tau) y(t)> (no conjugation).

    ``series`` has shape (n_steps,) or (n_traj, n_steps); each trajectory is
    cut into non-overlapping segments of ``segment_samples`` samples.  The
    per-segment value is X(Omega) Y(-Omega) / T; only its real part is kept.
    """
    x = np.atleast_2d(np.asarray(series))
    y = x if series_b is None else np.atleast_2d(np.asarray(series_b))
    if x.shape != y.shape:
        raise InvalidArgumentError("series shapes differ")
    m = int(segment_samples)
    n_seg_traj = x.shape[1] // m
    n_seg = n_seg_traj * x.shape[0]
    if m < 2 or n_seg < 8:
        raise InsufficientDataError(f"need at least 8 segments of {m} samples, have {n_seg}")
    xs = x[:, : n_seg_traj * m].reshape(-1, m)
    ys = y[:, : n_seg_traj * m].reshape(-1, m)
    # X(Omega_k) = dt sum_n x_n exp(+i Omega_k n dt)
    fx = dt * np.fft.ifft(xs, axis=1) * m
    fy = dt * np.fft.ifft(ys, axis=1) * m
    neg = (-np.arange(m)) % m
    per = (fx * fy[:, neg]).real / (m * dt)
    omega = 2 * np.pi * np.fft.fftfreq(m, d=dt)
    sel = omega >= 0
    if omega_max is not None:
        sel &= omega <= omega_max + 1e-12
    order = np.argsort(omega[sel])
    vals = per[:, sel][:, order]
    return SpectrumEstimate(
        omega=omega[sel][order],
        values=vals.mean(axis=0),
        stderr=vals.std(axis=0, ddof=1) / np.sqrt(n_seg),
        n_segments=n_seg,
        segment_samples=m,
    )


def expected_periodogram(eigsys, D, lof, dt, segment_samples, omega, norm=None):
    """Mean of the normalized Bartlett estimator for a LOF record, computed exactly.

    Uses the stationary correlation
    C(tau) = sum_ij p_i p_j D_ij exp(lambda_i |tau|) / (-lambda_i - lambda_j),
    so sampling (aliasing) and the finite segment (leakage) are included.
    Returns (2/N) E[periodogram] on ``omega``.
    """
    grid = eigsys.grid
    n = grid.n_points
    dx = grid.dx
    keep = np.asarray(D.retained, dtype=bool)
    lam = eigsys.eigenvalues[keep]
    p = dx * (lof.upper.conj() @ eigsys.right[:n] + lof.lower.conj() @ eigsys.right[n:])[keep]
    d = D.entries[np.ix_(keep, keep)]
    b = (d / (-lam[:, None] - lam[None, :])) @ p
    coef = p * b
    m = int(segment_samples)
    lags = np.arange(m)
    corr = (np.exp(np.outer(lags * dt, lam)) * coef[None, :]).sum(axis=1)
    weights = 1.0 - lags / m
    omega = np.asarray(omega, dtype=float)
    phase = np.exp(1j * np.outer(omega, lags * dt))
    # sum over l = -(m-1)..(m-1) of C(|l| dt) exp(i Omega l dt) (1 - |l|/m)
    val = dt * (2 * (phase * (weights * corr)[None, :]).real.sum(axis=1) - corr[0].real)
    if norm is None:
        norm = 0.5 * dx * float(np.sum(np.abs(lof.stacked) ** 2))
    return (2.0 / norm) * val


@dataclass(frozen=True)
class DriftFit:
    slope: float
    intercept: float
    r_squared: float
    lags: np.ndarray
    variance: np.ndarray


def position_variance_fit(position, dt, max_lag, n_lags=20):
    """Fit <(x1(t + tau) - x1(t))^2> = slope tau + intercept.

    The mean square is taken over trajectories and all start times; it is the
    (real) second moment of a generalized-P variable.
    """
    x = np.atleast_2d(np.asarray(position))
    k_max = int(round(max_lag / dt))
    if k_max < 2 or k_max >= x.shape[1]:
        raise InsufficientDataError("max_lag must span at least two steps and fit in the record")
    ks = np.unique(np.linspace(1, k_max, n_lags).round().astype(int))
    var = np.array([np.mean((x[:, k:] - x[:, :-k]) ** 2).real for k in ks])
    lags = ks * dt
    slope, intercept = np.polyfit(lags, var, 1)
    fit = slope * lags + intercept
    ss_res = float(np.sum((var - fit) ** 2))
    ss_tot = float(np.sum((var - var.mean()) ** 2))
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 0.0
    return DriftFit(float(slope), float(intercept), r2, lags, var)


@dataclass(frozen=True, eq=False)
class OracleComparison:
    omega: np.ndarray
    estimate: np.ndarray
    stderr: np.ndarray
    expected: np.ndarray
    analytic: np.ndarray
    z: np.ndarray

    @property
    def max_abs_z(self):
        return float(np.abs(self.z).max())


def compare_with_analytic(sim, name, eigsys, D, lof, segment_samples, omega_max, analytic_fn):
    """Per-bin z-scores of the simulated spectrum against the expected estimator.

    ``analytic_fn(omega)`` returns the continuous analytic spectrum, reported
    alongside for reference.
    """
    est = estimate_spectrum(sim.records[name], sim.config.dt, segment_samples, omega_max=omega_max)
    norm = sim.lof_norms[name]
    vals = 2.0 / norm * est.values
    se = 2.0 / norm * est.stderr
    expected = expected_periodogram(eigsys, D, lof, sim.config.dt, segment_samples, est.omega, norm)
    z = (vals - expected) / se
    return OracleComparison(est.omega, vals, se, expected, analytic_fn(est.omega), z)
