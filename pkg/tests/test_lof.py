import numpy as np
import pytest

from cavsqueeze import InvalidArgumentError, LofSpec, analyze_point, gh_width_scan, render_lof, squeezing_spectrum
from cavsqueeze.lof import gauss_hermite, optimal_gh_width, plane_wave


@pytest.fixture(scope="module")
def unit_detuning():
    return analyze_point(1.2, 1.0, 256, 40.0)


def test_plane_wave_zero_phase(small_analysis):
    f = render_lof(LofSpec("plane-wave", {"theta": 0.0}), small_analysis.profile)
    np.testing.assert_array_equal(f.upper, np.ones(small_analysis.grid.n_points))
    assert f.is_conjugate_symmetric()


def test_gauss_hermite_is_odd(small_analysis):
    g = small_analysis.grid
    f = render_lof(LofSpec("gauss-hermite", {"xi": 0.7}), small_analysis.profile)
    # x_0 = -L/2 has no mirror sample on the periodic grid
    np.testing.assert_allclose(f.upper[g.reflection][1:], -f.upper[1:], atol=1e-12)
    assert f.is_conjugate_symmetric()


def test_gauss_hermite_uses_soliton_phase(small_analysis):
    p = small_analysis.profile
    f = render_lof(LofSpec("gauss-hermite", {"xi": 1.0}), p)
    i = np.argmax(np.abs(f.upper))
    assert np.angle(f.upper[i] / np.sign(p.grid.x[i])) == pytest.approx(np.pi / 2 + p.phi)


def test_soliton_lof(small_analysis):
    f = render_lof(LofSpec("soliton"), small_analysis.profile)
    np.testing.assert_array_equal(f.upper, small_analysis.profile.psi_bar)


def test_mode_lof_reproduces_momentum_law(small_analysis, omega):
    a = small_analysis
    f = render_lof(LofSpec("mode", {"modes": "momentum"}), a.profile, a.eigsys)
    s = squeezing_spectrum(a.eigsys, a.D, f, omega)
    np.testing.assert_allclose(s.values, -1 / (1 + (omega / 2) ** 2), atol=1e-6)


def test_mode_lof_coefficients(small_analysis):
    a = small_analysis
    m = a.eigsys.index("momentum")
    f = render_lof(LofSpec("mode", {"modes": [m], "coefficients": [2.0]}), a.profile, a.eigsys)
    np.testing.assert_allclose(f.stacked, 2 * a.eigsys.left[:, m])


@pytest.mark.parametrize(
    "spec, needs_eigsys",
    [
        (LofSpec("mode", {"modes": "no-such-tag"}), True),
        (LofSpec("mode", {"modes": "momentum"}), False),
        (LofSpec("mode", {}), True),
        (LofSpec("mode", {"modes": 10**6}), True),
        (LofSpec("gauss-hermite", {}), True),
    ],
)
def test_render_errors(small_analysis, spec, needs_eigsys):
    es = small_analysis.eigsys if needs_eigsys else None
    with pytest.raises(InvalidArgumentError):
        render_lof(spec, small_analysis.profile, es)


def test_hopf_mirror_lof(small_analysis):
    # the leading localized complex pair and its mirrors exist below threshold too
    a = small_analysis
    f = render_lof(LofSpec("mode", {"modes": "hopf-mirror"}), a.profile, a.eigsys)
    s = squeezing_spectrum(a.eigsys, a.D, f, np.linspace(0, 10, 101), relaxed=True)
    assert s.minimum > -1


def test_unknown_kind():
    with pytest.raises(InvalidArgumentError):
        LofSpec("laser")


def test_label():
    assert LofSpec("plane-wave", {"theta": 0.5}).label == "plane-wave(theta=0.5)"
    assert LofSpec("soliton").label == "soliton"


def test_matched_width_nearly_perfect(unit_detuning):
    a = unit_detuning
    xi, value = optimal_gh_width(a.profile, a.eigsys, a.D)
    assert abs(value + 1) < 0.1
    scan = gh_width_scan(a.profile, a.eigsys, a.D, [0.5 * xi, xi, 2 * xi], omega=[0.0, 1.0])
    assert scan["S_width"].shape == (3, 2)
    assert scan["S_width"][1, 0] <= scan["S_width"][:, 0].min() + 1e-12


def test_displaced_lof_reaches_background(unit_detuning):
    a = unit_detuning
    scan = gh_width_scan(a.profile, a.eigsys, a.D, [1.0], omega=[0.0], x_shifts=[0.0, 1.0, 10.0, 12.0])
    s = scan["S_shift"][:, 0]
    # the matched position is the most squeezed one; far away the value
    # settles on the level set by the homogeneous background
    assert s[0] == s.min()
    assert abs(s[2] - s[3]) < 0.05 * abs(s[3])


def test_vanishing_width_is_guarded(small_analysis):
    a = small_analysis
    for xi in (1e-3, 1e-6, 1e-9):
        f = gauss_hermite(a.grid, xi, 0.0, a.profile.phi)
        assert np.all(np.isfinite(f.upper))
        s = squeezing_spectrum(a.eigsys, a.D, f, [0.0]).values[0]
        assert np.isfinite(s) and abs(s) < 10
    with pytest.raises(InvalidArgumentError):
        gauss_hermite(a.grid, 0.0)


def test_plane_wave_phase(small_analysis):
    f = plane_wave(small_analysis.grid, np.pi / 2)
    np.testing.assert_allclose(f.upper, 1j)
