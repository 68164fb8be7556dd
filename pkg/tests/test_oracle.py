import numpy as np
import pytest

from cavsqueeze import (
    InsufficientDataError,
    InvalidArgumentError,
    LofSpec,
    NonStationaryError,
    NumericalError,
    make_grid,
    render_lof,
    squeezing_spectrum,
)
from cavsqueeze.errors import BlowUpError
from cavsqueeze.oracle import (
    SdeConfig,
    _run_linear,
    compare_with_analytic,
    discretize_linear_sde,
    draw_noise,
    estimate_spectrum,
    expected_periodogram,
    position_variance_fit,
    simulate_grid,
    simulate_modal,
    trajectory_rng,
)


def bartlett_mean(cov, dt, m, omega):
    """Expected segment periodogram of a stationary real sequence with autocovariance cov(l)."""
    lags = np.arange(-(m - 1), m)
    c = cov(np.abs(lags)) * (1 - np.abs(lags) / m)
    return dt * np.real(np.exp(1j * np.outer(omega, lags * dt)) @ c)


def test_config_validation():
    for kw in (dict(dt=0.0), dict(t_total=-1.0), dict(n_traj=0), dict(scheme="rk4"), dict(seed=-1)):
        with pytest.raises(InvalidArgumentError):
            SdeConfig(**kw)
    assert SdeConfig(dt=0.2, t_total=10.0).n_steps == 50


def test_noise_statistics():
    g = make_grid(64, 8.0)
    dt = 0.05
    noise = draw_noise(g, 2000, dt, trajectory_rng(1, 0))
    var = noise.eta.var()
    assert var == pytest.approx(1 / (g.dx * dt), rel=0.02)
    corr = np.mean(noise.eta * noise.eta_plus) * g.dx * dt
    assert abs(corr) < 0.02


def test_trajectory_streams_differ_and_repeat():
    a = trajectory_rng(5, 0).standard_normal(4)
    b = trajectory_rng(5, 1).standard_normal(4)
    c = trajectory_rng(5, 0).standard_normal(4)
    assert not np.allclose(a, b)
    np.testing.assert_array_equal(a, c)


def test_scalar_ou_discretization():
    a, b, dt = 1.5, 0.7, 0.3
    phi, factor = discretize_linear_sde(np.array([[-a + 0j]]), np.array([[b + 0j]]), dt)
    assert phi[0, 0] == pytest.approx(np.exp(-a * dt))
    cov = factor @ factor.T
    assert cov[0, 0] == pytest.approx(b**2 * (1 - np.exp(-2 * a * dt)) / (2 * a), rel=1e-10)
    assert abs(cov[1, 1]) < 1e-14


def test_rotating_mode_discretization():
    lam, dt = -0.5 + 2j, 0.2
    phi, factor = discretize_linear_sde(np.array([[lam]]), np.array([[1.0 + 0j]]), dt)
    assert phi[0, 0] == pytest.approx(np.exp(lam * dt))
    cov = factor @ factor.T
    # total variance of a complex OU increment with real noise
    assert cov[0, 0] + cov[1, 1] == pytest.approx((1 - np.exp(2 * lam.real * dt)) / (-2 * lam.real), rel=1e-10)


def test_zero_noise_stays_zero():
    phi = np.array([[0.9, 0.1], [0.0, 0.8]], dtype=complex)
    out = _run_linear(phi, np.zeros((4, 1)), np.eye(2), 5, 50, SdeConfig(dt=0.1, t_total=5.0, n_traj=3), 0)
    assert not np.any(out)


def test_modal_stationary_moment(small_analysis):
    a = small_analysis
    m = a.eigsys.index("momentum")
    cfg = SdeConfig(dt=0.25, t_total=1000.0, n_traj=20, seed=11)
    sim = simulate_modal(a.eigsys, a.alpha0, cfg, [m])
    c = sim.coefficients[:, ::8, 0]  # thin out to nearly independent samples
    sq = (c**2).ravel()
    target = a.D.entries[m, m] / 4
    se = np.std(sq.real) / np.sqrt(sq.size), np.std(sq.imag) / np.sqrt(sq.size)
    assert abs(sq.real.mean() - target.real) < 4 * se[0]
    assert abs(sq.imag.mean() - target.imag) < 4 * se[1] + 1e-12


def test_modal_two_time_correlation(small_analysis):
    a = small_analysis
    es = a.eigsys
    i = es.index("momentum")
    j = es.indices("hopf-pair")[0]
    cfg = SdeConfig(dt=0.2, t_total=800.0, n_traj=30, seed=12)
    sim = simulate_modal(es, a.alpha0, cfg, [i, j])
    lam = es.eigenvalues[[i, j]]
    d = a.D.entries[np.ix_([i, j], [i, j])]
    for lag in (1, 3):
        tau = lag * cfg.dt
        for (p, q) in ((0, 1), (1, 0), (1, 1)):
            x = sim.coefficients[:, lag::5, p] * sim.coefficients[:, : -lag : 5, q]
            est = x.mean()
            se = np.hypot(x.real.std(), x.imag.std()) / np.sqrt(x.size)
            target = d[p, q] * np.exp(lam[p] * tau) / (-lam[p] - lam[q])
            assert abs(est - target) < 4 * se


def test_white_noise_spectrum_is_flat():
    rng = np.random.default_rng(0)
    dt, q = 0.1, 2.5
    x = rng.standard_normal((16, 4096)) * np.sqrt(q / dt)
    est = estimate_spectrum(x, dt, 128)
    z = (est.values - q) / est.stderr
    assert np.abs(z).max() < 4.5


def test_ou_spectrum_matches_lorentzian():
    rng = np.random.default_rng(1)
    dt, a, dcoef = 0.1, 1.0, 2.0
    rho = np.exp(-a * dt)
    innov = dcoef * (1 - rho**2) / (2 * a)
    n_traj, n = 16, 8192
    x = np.empty((n_traj, n))
    x[:, 0] = rng.standard_normal(n_traj) * np.sqrt(dcoef / (2 * a))
    e = rng.standard_normal((n_traj, n)) * np.sqrt(innov)
    for k in range(1, n):
        x[:, k] = rho * x[:, k - 1] + e[:, k]
    seg = 256
    est = estimate_spectrum(x, dt, seg, omega_max=8.0)
    expected = bartlett_mean(lambda l: dcoef / (2 * a) * rho**l, dt, seg, est.omega)
    z = (est.values - expected) / est.stderr
    assert np.abs(z).max() < 4.5
    # at low frequency the continuum form D/(a^2 + Omega^2) is recovered
    low = est.omega < 1.0
    np.testing.assert_allclose(expected[low], dcoef / (a**2 + est.omega[low] ** 2), rtol=0.05)


def test_independent_series_cross_spectrum_vanishes():
    rng = np.random.default_rng(2)
    x = rng.standard_normal((8, 4096))
    y = rng.standard_normal((8, 4096))
    est = estimate_spectrum(x, 0.1, 128, y)
    assert np.abs(est.values / est.stderr).max() < 4.5


def test_insufficient_data():
    with pytest.raises(InsufficientDataError):
        estimate_spectrum(np.zeros(100), 0.1, 50)


def test_position_fit_on_random_walk():
    rng = np.random.default_rng(3)
    dt, dcoef = 0.1, 0.3
    x = np.cumsum(rng.standard_normal((200, 2000)) * np.sqrt(dcoef * dt), axis=1)
    fit = position_variance_fit(x, dt, 20.0)
    assert fit.slope == pytest.approx(dcoef, rel=0.05)
    assert fit.r_squared > 0.99
    with pytest.raises(InsufficientDataError):
        position_variance_fit(x, dt, 1000.0)


def test_modal_determinism_and_order_independence(small_analysis):
    a = small_analysis
    m = a.eigsys.index("momentum")
    one = simulate_modal(a.eigsys, a.alpha0, SdeConfig(dt=0.2, t_total=40.0, n_traj=2, seed=4), [m])
    two = simulate_modal(a.eigsys, a.alpha0, SdeConfig(dt=0.2, t_total=40.0, n_traj=5, seed=4), [m])
    # same draws per trajectory; batched products may differ in the last bit
    np.testing.assert_allclose(one.coefficients, two.coefficients[:2], rtol=1e-12, atol=1e-14)
    again = simulate_modal(a.eigsys, a.alpha0, SdeConfig(dt=0.2, t_total=40.0, n_traj=2, seed=4), [m])
    np.testing.assert_array_equal(one.coefficients, again.coefficients)


def test_modal_rejects_unstable_and_em_guard(small_analysis):
    a = small_analysis
    g = a.eigsys.index("goldstone")
    with pytest.raises(NonStationaryError):
        simulate_modal(a.eigsys, a.alpha0, SdeConfig(t_total=10.0, n_traj=1), [g])
    m = a.eigsys.index("momentum")
    with pytest.raises(BlowUpError):
        simulate_modal(a.eigsys, a.alpha0, SdeConfig(dt=0.2, t_total=10.0, n_traj=1, scheme="euler-maruyama"), [m])
    em = simulate_modal(a.eigsys, a.alpha0,
                        SdeConfig(dt=0.01, t_total=5.0, n_traj=2, scheme="euler-maruyama"), [m])
    assert np.all(np.isfinite(em.coefficients))


def test_grid_nyquist_guard(small_analysis):
    a = small_analysis
    with pytest.raises(NumericalError):
        simulate_grid(a.profile, a.operators, SdeConfig(dt=0.5, t_total=10.0, n_traj=1), {}, omega_max=10.0)


def test_small_grid_oracle_momentum(small_analysis):
    a = small_analysis
    lof = render_lof(LofSpec("mode", {"modes": "momentum"}), a.profile, a.eigsys)
    cfg = SdeConfig(dt=0.2, t_total=400.0, n_traj=40, seed=21)
    sim = simulate_grid(a.profile, a.operators, cfg, {"momentum": lof}, omega_max=10.0)
    seg = 250
    cmp = compare_with_analytic(sim, "momentum", a.eigsys, a.D, lof, seg, 10.0,
                                lambda w: squeezing_spectrum(a.eigsys, a.D, lof, w).values)
    assert cmp.max_abs_z < 4.5
    # the estimator mean tends to the continuous spectrum away from Nyquist
    low = cmp.omega < 3
    np.testing.assert_allclose(cmp.expected[low], cmp.analytic[low], atol=0.05)
    assert sim.position.shape == (40, cfg.n_steps)
    assert np.all(sim.position[:, 0] == 0)


def test_expected_periodogram_matches_continuum_for_fine_sampling(small_analysis):
    a = small_analysis
    lof = render_lof(LofSpec("mode", {"modes": "momentum"}), a.profile, a.eigsys)
    omega = np.array([0.0, 1.0, 2.0])
    e = expected_periodogram(a.eigsys, a.D, lof, 0.02, 20000, omega)
    np.testing.assert_allclose(e, -1 / (1 + (omega / 2) ** 2), atol=2e-3)
