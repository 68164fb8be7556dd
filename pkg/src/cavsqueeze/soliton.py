"""Bright cavity soliton of the parametrically driven NLS equation."""

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ExistenceError, InvalidArgumentError
from .model import ModelParams, Grid1D, first_derivative, second_derivative

logger = logging.getLogger(__name__)

BRANCHES = ("plus", "minus")

REGIONS = (
    "no-soliton",
    "bright-soliton-stable",
    "bright-soliton-hopf-unstable",
    "above-mu0",
)

# stationary-equation residual allowed before the other phase sign is tried
_RESIDUAL_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class SolitonProfile:
    """Sampled soliton psi(x) = sqrt(2) beta exp(i phi) sech(beta x).

    ``phase_sign`` records which root of cos(2 phi) = 1/mu satisfied the
    stationary equation (+1 means sin(2 phi) >= 0).
    """

    beta: float
    phi: float
    psi_bar: np.ndarray
    dpsi_bar: np.ndarray
    params: ModelParams
    grid: Grid1D
    branch: str
    phase_sign: int
    residual: float

    @property
    def amplitude(self):
        return np.sqrt(2.0) * self.beta

    @property
    def fwhm(self):
        """Full width at half maximum of |psi|^2."""
        return 2 * np.arccosh(np.sqrt(2.0)) / self.beta

    def dpsi_closed_form(self):
        b = self.beta
        x = self.grid.x
        return -np.sqrt(2.0) * b**2 * np.exp(1j * self.phi) * np.tanh(b * x) / np.cosh(b * x)


@dataclass(frozen=True)
class ExistenceRegion:
    classification: str
    mu0: float
    tentative: bool = False


def stationary_residual(psi, params, grid):
    """Right-hand side of the PDNLSE, mu psi* - (1 + i delta1) psi + i psi'' + i sigma |psi|^2 psi."""
    return (
        params.mu * psi.conj()
        - (1 + 1j * params.delta1) * psi
        + 1j * second_derivative(psi, grid)
        + 1j * params.sigma * np.abs(psi) ** 2 * psi
    )


def _check_existence(params, branch):
    if branch not in BRANCHES:
        raise InvalidArgumentError(f"branch must be one of {BRANCHES}, got {branch!r}")
    if params.sigma != 1:
        raise ExistenceError("bright solitons require sigma = +1 (self-focusing)")
    if params.delta1 <= 0:
        raise ExistenceError(f"bright soliton requires delta1 > 0, got {params.delta1}")
    if params.mu < 1:
        raise ExistenceError(f"μ below tangent bifurcation: mu = {params.mu} < 1")
    if params.mu > params.mu0 * (1 + 1e-12):
        raise ExistenceError(
            f"μ above mu0 = sqrt(1 + delta1^2) = {params.mu0:.6g}: mu = {params.mu}"
        )
    root = np.sqrt(max(params.mu**2 - 1.0, 0.0))
    if branch == "minus" and params.delta1 - root <= 0:
        raise ExistenceError("minus branch requires delta1 - sqrt(mu^2 - 1) > 0")
    return root


def soliton_profile(params, grid, branch="plus"):
    """Sample the closed-form bright soliton on ``grid``.

    Raises
    ------
    ExistenceError
        If (mu, delta1, sigma) lie outside the existence region.
    """
    root = _check_existence(params, branch)
    beta2 = params.delta1 + root if branch == "plus" else params.delta1 - root
    beta = float(np.sqrt(beta2))
    phi0 = 0.5 * float(np.arccos(np.clip(1.0 / params.mu, -1.0, 1.0)))
    x = grid.x

    attempts = []
    for sign in (1, -1):
        phi = sign * phi0
        psi = np.sqrt(2.0) * beta * np.exp(1j * phi) / np.cosh(beta * x)
        res = float(np.max(np.abs(stationary_residual(psi, params, grid))))
        attempts.append((res, sign, phi, psi))
        if res < _RESIDUAL_TOL * max(1.0, beta2):
            break
    res, sign, phi, psi = min(attempts, key=lambda a: a[0])
    if sign < 0:
        logger.info("soliton phase: sin(2 phi) < 0 root selected (branch %s)", branch)
    edge = np.abs(psi[0]) / np.abs(psi).max()
    if edge > 1e-8:
        logger.warning("domain too short: |psi(L/2)|/max|psi| = %.2e", edge)
    return SolitonProfile(
        beta=beta,
        phi=phi,
        psi_bar=psi,
        dpsi_bar=first_derivative(psi, grid),
        params=params,
        grid=grid,
        branch=branch,
        phase_sign=sign,
        residual=res,
    )


def classify_region(params, hopf_threshold=None):
    """Place (mu, delta1) in the bright-soliton phase diagram.

    Without a numerically located Hopf threshold the stable classification is
    only tentative.
    """
    mu0 = params.mu0
    if params.sigma != 1 or params.delta1 <= 0 or params.mu < 1:
        return ExistenceRegion("no-soliton", mu0)
    if params.mu > mu0:
        return ExistenceRegion("above-mu0", mu0)
    if hopf_threshold is None:
        return ExistenceRegion("bright-soliton-stable", mu0, tentative=True)
    if params.mu > hopf_threshold:
        return ExistenceRegion("bright-soliton-hopf-unstable", mu0)
    return ExistenceRegion("bright-soliton-stable", mu0)
