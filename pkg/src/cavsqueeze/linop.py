"""Linear fluctuation operator, its adjoint and their biorthonormal eigensystem.

The operator acts on stacked grid samples ``(a, a+)`` of length ``2N``.  The
soliton is even, so the operator commutes with the reflection x -> -x and is
diagonalized sector by sector (even, odd).  This is an exact block
diagonalization; it removes the +k/-k degeneracy of the continuum that would
otherwise make left/right pairing ill-defined.
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    ClassificationError,
    DegeneratePairingError,
    InvalidArgumentError,
    NoCrossingError,
    ResolutionError,
)
from .model import FluctuationField, Grid1D, ModelParams, derivative_matrix, parity_basis
from .soliton import soliton_profile

logger = logging.getLogger(__name__)

TAGS = ("goldstone", "momentum", "bifurcating", "hopf-pair", "generic")

MIN_POINTS_PER_WIDTH = 8
PAIRING_AMBIGUITY = 1e-3
DEGENERACY_TOL = 1e-6
SHAPE_OVERLAP = 0.999
LOCALIZED_FRACTION = 0.9


@dataclass(frozen=True, eq=False)
class Alpha0Field:
    """alpha0(x) = mu + i sigma psi(x)^2."""

    values: np.ndarray


@dataclass(frozen=True, eq=False)
class LinearOperatorMatrix:
    matrix: np.ndarray
    kind: str
    grid: Grid1D
    profile: object = None


@dataclass(frozen=True, eq=False)
class EigenSystem:
    """Paired right/left modes normalized so that <w_i|v_j> = delta_ij.

    Columns of ``right`` and ``left`` are stacked ``(upper, lower)`` vectors.
    ``mirror[i]`` is the index of the mode whose left vector is parallel to
    sigma_z v_i (eigenvalue -2 - conj(lambda_i)), or -1.
    """

    eigenvalues: np.ndarray
    right: np.ndarray
    left: np.ndarray
    tags: tuple
    grid: Grid1D
    parity: np.ndarray = None
    localization: np.ndarray = None
    mirror: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return self.eigenvalues.shape[0]

    def right_mode(self, i):
        return FluctuationField.from_stacked(self.right[:, i])

    def left_mode(self, i):
        return FluctuationField.from_stacked(self.left[:, i])

    @property
    def right_modes(self):
        return [self.right_mode(i) for i in range(len(self))]

    @property
    def left_modes(self):
        return [self.left_mode(i) for i in range(len(self))]

    def indices(self, tag):
        return [i for i, t in enumerate(self.tags) if t == tag]

    def index(self, tag):
        """The single mode carrying ``tag``; raises if absent or repeated."""
        found = self.indices(tag)
        if len(found) != 1:
            raise ClassificationError(f"expected one {tag!r} mode, found {len(found)}")
        return found[0]

    @property
    def retained(self):
        """Boolean mask of modes kept in modal sums (Goldstone excluded)."""
        return np.array([t != "goldstone" for t in self.tags])

    def gram(self):
        """Matrix of <w_i|v_j>."""
        return self.grid.dx * self.left.conj().T @ self.right


def alpha0(profile):
    p = profile.params
    return Alpha0Field(p.mu + 1j * p.sigma * profile.psi_bar**2)


def build_operators(profile):
    """Assemble dense L and L-dagger for the fluctuations around ``profile``."""
    grid = profile.grid
    if profile.fwhm / grid.dx < MIN_POINTS_PER_WIDTH:
        raise ResolutionError(
            f"{profile.fwhm / grid.dx:.1f} points per soliton width (FWHM {profile.fwhm:.3g}); "
            f"need at least {MIN_POINTS_PER_WIDTH}"
        )
    p = profile.params
    n = grid.n_points
    d2 = derivative_matrix(grid, 2)
    l1 = 1j * d2
    l1[np.diag_indices(n)] += -(1 + 1j * p.delta1) + 2j * p.sigma * np.abs(profile.psi_bar) ** 2
    a0 = np.diag(alpha0(profile).values)
    lmat = np.block([[l1, a0], [a0.conj(), l1.conj()]])
    ldag = np.block([[l1.conj(), a0], [a0.conj(), l1]])
    return (
        LinearOperatorMatrix(lmat, "L", grid, profile),
        LinearOperatorMatrix(ldag, "L-adjoint", grid, profile),
    )


def _sector_bases(grid):
    even, odd = parity_basis(grid)

    def stack(b):
        z = np.zeros_like(b)
        return np.block([[b, z], [z, b]])

    return {1: stack(even), -1: stack(odd)}


def _is_reflection_symmetric(matrix, grid):
    r = grid.reflection
    perm = np.concatenate([r, r + grid.n_points])
    scale = np.abs(matrix).max()
    return np.abs(matrix[np.ix_(perm, perm)] - matrix).max() <= 1e-12 * scale


def _pair_greedy(vr, wl, dx):
    """Match adjoint eigenvectors to right eigenvectors by overlap.

    Returns the adjoint column assigned to each right column.
    """
    m = vr.shape[1]
    over = np.abs(dx * wl.conj().T @ vr)
    over /= np.linalg.norm(wl, axis=0)[:, None] * np.linalg.norm(vr, axis=0)[None, :] * dx
    order = np.argsort(over, axis=None)[::-1]
    assign = -np.ones(m, dtype=int)
    used = np.zeros(m, dtype=bool)
    n_done = 0
    for flat in order:
        j, i = divmod(int(flat), m)
        if assign[i] >= 0 or used[j]:
            continue
        assign[i] = j
        used[j] = True
        n_done += 1
        if n_done == m:
            break
    # ambiguity: a second adjoint vector overlaps a right vector almost as much
    best = over[assign, np.arange(m)]
    ratio = over / best[None, :]
    ratio[assign, np.arange(m)] = 0.0
    owner = np.empty(m, dtype=int)
    owner[assign] = np.arange(m)
    links = np.argwhere(ratio > PAIRING_AMBIGUITY)
    if len(links):
        clusters = _connected_components(m, [(i, owner[j]) for j, i in links])
        err = DegeneratePairingError(
            f"{len(clusters)} ambiguous clusters in eigenvector pairing", clusters
        )
        err.assignment = assign
        raise err
    return assign


def _connected_components(m, edges):
    parent = list(range(m))

    def find(a):
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    for a, b in edges:
        parent[find(a)] = find(b)
    groups = {}
    for a, b in edges:
        groups.setdefault(find(a), set()).update((a, b))
    return [sorted(g) for g in groups.values()]


def _biorthonormalize(vr, wl, dx, clusters=()):
    """Rescale paired left vectors; clusters are orthogonalized jointly."""
    wl = wl.copy()
    in_cluster = np.zeros(vr.shape[1], dtype=bool)
    for c in clusters:
        c = np.asarray(c)
        in_cluster[c] = True
        m = dx * wl[:, c].conj().T @ vr[:, c]
        wl[:, c] = wl[:, c] @ np.linalg.inv(m).conj().T
    single = ~in_cluster
    diag = dx * np.einsum("ij,ij->j", wl[:, single].conj(), vr[:, single])
    wl[:, single] = wl[:, single] / diag.conj()
    return wl


def _pair_sector(lmat, ldag, dx):
    lam, vr = np.linalg.eig(lmat)
    lamd, wl = np.linalg.eig(ldag)
    try:
        assign, clusters = _pair_greedy(vr, wl, dx), []
    except DegeneratePairingError as err:
        assign, clusters = err.assignment, err.clusters
        logger.debug("resolving %d degenerate clusters: %s", len(clusters), clusters)
    # (near-)degenerate eigenvalues: the eigensolvers pick unrelated bases of
    # the shared eigenspace, so those modes are orthogonalized jointly too
    scale = np.maximum(1.0, np.abs(lam))
    close = np.argwhere(np.abs(lam[:, None] - lam[None, :]) < DEGENERACY_TOL * scale[:, None])
    edges = [(int(i), int(j)) for i, j in close if i < j]
    if edges:
        for c in clusters:
            edges += [(int(c[0]), int(k)) for k in c[1:]]
        clusters = _connected_components(len(lam), edges)
    wl = _biorthonormalize(vr, wl[:, assign], dx, clusters)
    # the adjoint eigenvalues must be the conjugates of the paired right ones
    mismatch = np.abs(lamd[assign].conj() - lam)
    return lam, vr, wl, clusters, float(mismatch.max())


def eigensystem(lmat, ldag, use_parity=True):
    """Full biorthonormal eigensystem of L and L-dagger.

    Left vectors come from the separately assembled adjoint and are
    cross-checked against the rows of the inverse right-eigenvector matrix;
    the largest relative discrepancy is stored in
    ``diagnostics["inverse_route"]``.
    """
    grid = lmat.grid
    if not grid.same_as(ldag.grid):
        raise InvalidArgumentError("L and L-dagger live on different grids")
    dx = grid.dx
    n2 = 2 * grid.n_points
    if use_parity and _is_reflection_symmetric(lmat.matrix, grid):
        bases = _sector_bases(grid)
    else:
        bases = {0: np.eye(n2)}

    lams, rights, lefts, parities = [], [], [], []
    diag = {"inverse_route": 0.0, "eigenvalue_pairing": 0.0, "clusters": []}
    for par, basis in bases.items():
        ls = basis.T @ lmat.matrix @ basis
        lds = basis.T @ ldag.matrix @ basis
        lam, vs, ws, clusters, mism = _pair_sector(ls, lds, dx)
        winv = np.linalg.inv(vs).conj().T / dx
        diff = np.linalg.norm(ws - winv, axis=0) / np.linalg.norm(winv, axis=0)
        diag["inverse_route"] = max(diag["inverse_route"], float(diff.max()))
        diag["eigenvalue_pairing"] = max(diag["eigenvalue_pairing"], mism)
        diag["clusters"].extend(clusters)
        lams.append(lam)
        rights.append(basis @ vs)
        lefts.append(basis @ ws)
        parities.append(np.full(lam.shape, par))

    lam = np.concatenate(lams)
    vr = np.concatenate(rights, axis=1)
    wl = np.concatenate(lefts, axis=1)
    parity = np.concatenate(parities)

    scale = np.sqrt(dx) * np.linalg.norm(vr, axis=0)
    vr = vr / scale
    wl = wl * scale

    order = np.lexsort((-lam.imag, -np.round(lam.real, 9)))
    lam, vr, wl, parity = lam[order], vr[:, order], wl[:, order], parity[order]
    vr, wl = _fix_conjugation_gauge(lam, vr, wl, parity, dx)
    if diag["inverse_route"] > 1e-6:
        logger.warning("left eigenvectors disagree with inverse route: %.2e", diag["inverse_route"])

    localization = _localization(vr, grid)
    mirror = _mirror_map(lam, vr, wl, parity, dx)
    profile = lmat.profile
    tags, vr, wl = _tag_modes(lam, vr, wl, localization, mirror, profile, dx)
    return EigenSystem(
        eigenvalues=lam,
        right=vr,
        left=wl,
        tags=tuple(tags),
        grid=grid,
        parity=parity,
        localization=localization,
        mirror=mirror,
        diagnostics=diag,
    )


def _swap_conj(vec):
    n = vec.shape[0] // 2
    return np.concatenate([vec[n:].conj(), vec[:n].conj()])


def _fix_conjugation_gauge(lam, vr, wl, parity, dx, tol=1e-6):
    """Choose phases so that conjugate eigenvalues carry swap-conjugated vectors.

    For a real eigenvalue the vector itself becomes swap-conjugation symmetric.
    Degenerate groups are left untouched.
    """
    vr, wl = vr.copy(), wl.copy()
    m = lam.shape[0]
    done = np.zeros(m, dtype=bool)
    for i in range(m):
        if done[i]:
            continue
        target = lam[i].conj()
        dist = np.abs(lam - target)
        dist[parity != parity[i]] = np.inf
        cand = np.flatnonzero(dist <= tol * (1 + abs(target)))
        sv = _swap_conj(vr[:, i])
        sw = _swap_conj(wl[:, i])
        if len(cand) != 1:
            done[i] = True
            continue
        j = cand[0]
        c = dx * np.vdot(wl[:, j], sv)
        if abs(abs(c) - 1) > 1e-6:
            done[i] = True
            continue
        if j == i:
            half = np.exp(0.5j * np.angle(c))
            vr[:, i] *= half
            wl[:, i] *= half
        else:
            vr[:, j] = sv
            wl[:, j] = sw
        done[i] = done[j] = True
    return vr, wl


def _localization(vr, grid):
    inner = np.abs(grid.x) < grid.length / 4
    mask = np.concatenate([inner, inner])
    w = np.abs(vr) ** 2
    return w[mask].sum(axis=0) / w.sum(axis=0)


def _mirror_map(lam, vr, wl, parity, dx):
    """Locate, for every mode, the mode with left vector parallel to sigma_z v."""
    n = vr.shape[0] // 2
    sz = np.concatenate([np.ones(n), -np.ones(n)])
    target = -2 - lam.conj()
    mirror = -np.ones(lam.shape[0], dtype=int)
    for i in range(lam.shape[0]):
        dist = np.abs(lam - target[i])
        dist[parity != parity[i]] = np.inf
        j = int(np.argmin(dist))
        if dist[j] > 1e-6 * (1 + abs(target[i])):
            continue
        u = sz * vr[:, i]
        ov = abs(np.vdot(wl[:, j], u)) / (np.linalg.norm(wl[:, j]) * np.linalg.norm(u))
        if ov > 0.99:
            mirror[i] = j
    return mirror


def _unit_overlap(a, b):
    return abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))


def _tag_modes(lam, vr, wl, localization, mirror, profile, dx):
    m = lam.shape[0]
    tags = ["generic"] * m
    if profile is None:
        return tags, vr, wl
    vr, wl = vr.copy(), wl.copy()
    dpsi = profile.dpsi_bar
    goldstone = np.concatenate([dpsi, dpsi.conj()])
    momentum = np.concatenate([1j * dpsi, (1j * dpsi).conj()])

    near0 = np.flatnonzero(np.abs(lam) < 1e-6)
    ov = [_unit_overlap(goldstone, vr[:, i]) for i in near0]
    if not near0.size or max(ov) < SHAPE_OVERLAP:
        raise ClassificationError("no Goldstone mode found")
    g = int(near0[int(np.argmax(ov))])
    tags[g] = "goldstone"
    # v_G = G exactly (up to the discretization of the eigenvector)
    c = np.vdot(goldstone, vr[:, g]) / np.vdot(goldstone, goldstone)
    vr[:, g] /= c
    wl[:, g] *= np.conj(c)

    near2 = np.flatnonzero(np.abs(lam + 2) < 1e-6)
    ov = [_unit_overlap(momentum, wl[:, i]) for i in near2]
    if not near2.size or max(ov) < SHAPE_OVERLAP:
        raise ClassificationError("no momentum mode found")
    tags[int(near2[int(np.argmax(ov))])] = "momentum"

    internal = [
        i for i in range(m)
        if tags[i] == "generic" and localization[i] > LOCALIZED_FRACTION and lam[i].real > -1
    ]
    real = [i for i in internal if abs(lam[i].imag) < 1e-8]
    cplx = [i for i in internal if abs(lam[i].imag) >= 1e-8]
    if real:
        b = max(real, key=lambda i: lam[i].real)
        tags[b] = "bifurcating"
        if mirror[b] >= 0 and tags[mirror[b]] == "generic":
            tags[mirror[b]] = "bifurcating"
    if cplx:
        top = max(lam[i].real for i in cplx)
        for i in cplx:
            if abs(lam[i].real - top) < 1e-8:
                tags[i] = "hopf-pair"
    return tags, vr, wl


def hopf_mirror_indices(eigsys):
    """Modes w_HB+/- : mirrors of the Hopf pair, eigenvalues -2 - conj(lambda)."""
    pair = eigsys.indices("hopf-pair")
    out = [int(eigsys.mirror[i]) for i in pair if eigsys.mirror[i] >= 0]
    if len(out) != 2:
        raise ClassificationError("Hopf pair or its mirror modes not found")
    return out


def analytic_modes_mu1(params, grid):
    """Closed-form discrete modes at the tangent bifurcation mu = 1.

    Order: v1 (Goldstone, 0), v2 (momentum, -2), v3 (-2), v4 (0).
    """
    if abs(params.mu - 1.0) > 1e-14:
        raise InvalidArgumentError(f"closed-form modes exist only at mu = 1, got {params.mu}")
    if params.delta1 <= 0:
        raise InvalidArgumentError("closed-form modes need delta1 > 0")
    beta = np.sqrt(params.delta1)
    x = grid.x
    s = np.sqrt(beta / 2) / np.cosh(beta * x)
    t = beta * np.tanh(beta * x)
    e, ec = 1.0 + 0j, 1.0 + 0j  # exp(+-i phi) with phi = 0
    rb = np.sqrt(beta)
    q = beta**2 + 1j * (x * t - 1)

    def vec(up, lo):
        return np.concatenate([up, lo])

    right = np.stack(
        [
            vec(-s * t * e, -s * t * ec),
            vec(-1j * rb * s * (x + 1j * t) * e, 1j * rb * s * (x - 1j * t) * ec),
            vec(1j * beta * s * e, -1j * beta * s * ec),
            vec(1j / rb * s * q * e, -1j / rb * s * q.conj() * ec),
        ],
        axis=1,
    )
    left = np.stack(
        [
            vec(-s * (x + 1j * t) * e, -s * (x - 1j * t) * ec),
            vec(-1j / rb * s * t * e, 1j / rb * s * t * ec),
            vec(-s * q * e / beta, -s * q.conj() * ec / beta),
            vec(rb * s * e, rb * s * ec),
        ],
        axis=1,
    )
    return EigenSystem(
        eigenvalues=np.array([0, -2, -2, 0], dtype=complex),
        right=right,
        left=left,
        tags=("goldstone", "momentum", "bifurcating", "bifurcating"),
        grid=grid,
        parity=np.array([-1, -1, 1, 1]),
    )


def _max_pair_growth(mu, delta1, grid):
    """Largest Re(lambda) among complex-pair modes, and that mode's |Im|."""
    prof = soliton_profile(ModelParams(mu, delta1), grid)
    lmat, _ = build_operators(prof)
    best = (-np.inf, 0.0)
    for basis in _sector_bases(grid).values():
        lam = np.linalg.eigvals(basis.T @ lmat.matrix @ basis)
        lam = lam[(np.abs(lam.imag) > 1e-6) & (np.abs(lam) > 1e-6)]
        if lam.size:
            i = int(np.argmax(lam.real))
            if lam[i].real > best[0]:
                best = (float(lam[i].real), float(abs(lam[i].imag)))
    return best


@dataclass(frozen=True)
class HopfPoint:
    mu: float
    omega: float
    growth: float
    delta1: float


def find_hopf_threshold(delta1, mu_bracket, grid, tol=1e-6, max_iter=80):
    """Bisect for the pump where a complex pair of internal modes crosses Re = 0.

    The returned point sits on the stable side of the crossing with
    ``|growth| < tol``.
    """
    lo, hi = map(float, mu_bracket)
    if not lo < hi:
        raise InvalidArgumentError("mu_bracket must be increasing")
    f_lo, _ = _max_pair_growth(lo, delta1, grid)
    f_hi, w_hi = _max_pair_growth(hi, delta1, grid)
    if not (f_lo < 0 < f_hi):
        raise NoCrossingError(
            f"no sign change of the leading complex pair in [{lo}, {hi}] "
            f"(growth {f_lo:.3g} .. {f_hi:.3g})"
        )
    omega = w_hi
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid, w_mid = _max_pair_growth(mid, delta1, grid)
        if f_mid < 0:
            lo, f_lo, omega = mid, f_mid, w_mid
        else:
            hi = mid
        if abs(f_lo) < tol and hi - lo < 1e-9 + tol:
            break
    else:
        raise NoCrossingError("bisection did not converge")
    return HopfPoint(mu=lo, omega=omega, growth=f_lo, delta1=float(delta1))
