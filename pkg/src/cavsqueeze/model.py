"""Normalized parameters, the periodic 1D grid and fluctuation fields.

Units: time in 1/gamma_1, transverse length in diffraction lengths l_1,
frequencies as Omega = omega / gamma_1.
"""

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .errors import InvalidArgumentError


@dataclass(frozen=True)
class ModelParams:
    """Dimensionless model parameters.

    Parameters
    ----------
    mu : float
        Parametric pump, ``mu > 0``.
    delta1 : float
        Signal detuning.
    sigma : int
        Sign of the pump detuning, +1 (self-focusing) or -1.
    kappa : float
        Normalized nonlinear coupling; only the drift diffusion depends on it.
    """

    mu: float
    delta1: float
    sigma: int = 1
    kappa: float = 1.0

    def __post_init__(self):
        if not np.isfinite(self.mu) or self.mu <= 0:
            raise InvalidArgumentError(f"mu must be positive, got {self.mu}")
        if not np.isfinite(self.delta1):
            raise InvalidArgumentError("delta1 must be finite")
        if self.sigma not in (1, -1):
            raise InvalidArgumentError(f"sigma must be +1 or -1, got {self.sigma}")
        if not np.isfinite(self.kappa) or self.kappa <= 0:
            raise InvalidArgumentError(f"kappa must be positive, got {self.kappa}")

    @property
    def mu0(self):
        """Upper edge of the bright-soliton existence band, sqrt(1 + delta1**2)."""
        return float(np.hypot(1.0, self.delta1))


@dataclass(frozen=True)
class Grid1D:
    """Uniform periodic grid on [-L/2, L/2)."""

    n_points: int
    length: float

    @property
    def dx(self):
        return self.length / self.n_points

    @cached_property
    def x(self):
        return -0.5 * self.length + self.dx * np.arange(self.n_points)

    @cached_property
    def k(self):
        """Wavenumbers in FFT ordering."""
        return 2 * np.pi * np.fft.fftfreq(self.n_points, d=self.dx)

    @cached_property
    def reflection(self):
        """Index map implementing x -> -x (x_0 = -L/2 maps onto itself)."""
        return (-np.arange(self.n_points)) % self.n_points

    def same_as(self, other):
        return self.n_points == other.n_points and self.length == other.length


def make_grid(n_points, length):
    """Build a :class:`Grid1D`; ``n_points`` must be a power of two >= 8."""
    n = int(n_points)
    if n != n_points or n < 8 or n & (n - 1):
        raise InvalidArgumentError(f"n_points must be a power of two >= 8, got {n_points}")
    if not np.isfinite(length) or length <= 0:
        raise InvalidArgumentError(f"length must be positive, got {length}")
    return Grid1D(n, float(length))


@dataclass(frozen=True, eq=False)
class FluctuationField:
    """Two-component field (a, a+) sampled on a grid.

    For local-oscillator vectors ``lower == conj(upper)``; eigenvectors of the
    fluctuation operator carry no such constraint.
    """

    upper: np.ndarray
    lower: np.ndarray

    def __post_init__(self):
        up = np.asarray(self.upper, dtype=complex)
        lo = np.asarray(self.lower, dtype=complex)
        if up.ndim != 1 or up.shape != lo.shape:
            raise InvalidArgumentError("upper and lower must be 1D arrays of equal length")
        object.__setattr__(self, "upper", up)
        object.__setattr__(self, "lower", lo)

    @classmethod
    def from_scalar(cls, values):
        """LOF-type vector (alpha, conj(alpha))."""
        values = np.asarray(values, dtype=complex)
        return cls(values, values.conj())

    @classmethod
    def from_stacked(cls, vec):
        vec = np.asarray(vec)
        n = vec.shape[0] // 2
        return cls(vec[:n], vec[n:])

    @property
    def stacked(self):
        return np.concatenate([self.upper, self.lower])

    def __len__(self):
        return self.upper.shape[0]

    def swap_conj(self):
        """Exchange the components and conjugate them."""
        return FluctuationField(self.lower.conj(), self.upper.conj())

    def conjugation_defect(self):
        """Relative distance from the constraint ``lower == conj(upper)``."""
        scale = np.linalg.norm(self.upper) + np.linalg.norm(self.lower)
        if scale == 0:
            return 0.0
        return float(np.linalg.norm(self.lower - self.upper.conj()) / scale)

    def is_conjugate_symmetric(self, rtol=1e-10):
        return self.conjugation_defect() <= rtol


def _check_on_grid(n, grid):
    if n != grid.n_points:
        raise InvalidArgumentError(
            f"field has {n} samples but the grid has {grid.n_points}"
        )


def scalar_product(u, s, grid):
    """Discrete <u|s> = sum_j (u_upper^* s_upper + u_lower^* s_lower) dx."""
    _check_on_grid(len(u), grid)
    _check_on_grid(len(s), grid)
    return complex(grid.dx * (np.vdot(u.upper, s.upper) + np.vdot(u.lower, s.lower)))


def second_derivative(field, grid):
    """Spectral d^2/dx^2 of a periodic sampled field."""
    field = np.asarray(field)
    _check_on_grid(field.shape[-1], grid)
    return np.fft.ifft(-grid.k**2 * np.fft.fft(field))


def first_derivative(field, grid):
    field = np.asarray(field)
    _check_on_grid(field.shape[-1], grid)
    k = grid.k.copy()
    # odd derivative: the Nyquist mode has no consistent sign
    k[grid.n_points // 2] = 0.0
    return np.fft.ifft(1j * k * np.fft.fft(field))


def derivative_matrix(grid, order):
    """Dense spectral differentiation matrix (real, circulant)."""
    n = grid.n_points
    if order == 2:
        symbol = -grid.k**2
    elif order == 1:
        symbol = 1j * grid.k
        symbol[n // 2] = 0.0
    else:
        raise InvalidArgumentError("only first and second derivatives are supported")
    column = np.fft.ifft(symbol).real
    idx = (np.arange(n)[:, None] - np.arange(n)[None, :]) % n
    return column[idx]


def parity_basis(grid):
    """Orthonormal real bases of the even and odd subspaces of one component.

    Returns ``(even, odd)`` with shapes ``(n, n/2 + 1)`` and ``(n, n/2 - 1)``.
    """
    n = grid.n_points
    half = n // 2
    even = np.zeros((n, half + 1))
    odd = np.zeros((n, half - 1))
    even[0, 0] = 1.0
    even[half, half] = 1.0
    r = 1 / np.sqrt(2)
    for j in range(1, half):
        even[j, j] = even[n - j, j] = r
        odd[j, j - 1] = r
        odd[n - j, j - 1] = -r
    return even, odd


def frequency_axis(omega_max=10.0, n_points=401):
    """Uniform axis on [0, omega_max]."""
    if omega_max <= 0 or n_points < 2:
        raise InvalidArgumentError("need omega_max > 0 and at least two points")
    return np.linspace(0.0, omega_max, int(n_points))
