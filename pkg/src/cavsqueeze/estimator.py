"""scikit-learn style facade: fit on parameters, transform frequencies into spectra."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .errors import InvalidArgumentError
from .pipeline import analyze_point, detector_window, make_lof
from .spectra import squeezing_spectrum, squeezing_spectrum_detector


class SolitonSqueezing(TransformerMixin, BaseEstimator):
    """Homodyne squeezing spectrum of the bright cavity soliton.

    ``fit`` ignores its data argument; it solves the stationary problem and the
    fluctuation eigensystem for the configured parameters.  ``transform`` maps
    a column of normalized frequencies to S_out.

    Parameters
    ----------
    mu, delta1 : float
        Pump and detuning.
    n_points, length : int, float
        Grid size and domain length.
    lof : str
        One of plane-wave, gh1, momentum, w3, hopf-sum, soliton.
    theta, xi : float, optional
        Plane-wave phase and Gauss-Hermite width; optimized when None.
    detector_sigma : float, optional
        Normalized detector width (width / beta); full beam when None.
    detector_x0 : float
        Detector center.

    Examples
    --------
    >>> est = SolitonSqueezing(mu=1.2, delta1=1.2, n_points=256, length=32).fit()
    >>> s = est.transform([[0.0], [2.0]])
    >>> bool(abs(s[0, 0] + 1) < 1e-6)
    True
    """

    def __init__(self, mu=1.2, delta1=1.2, n_points=512, length=40.0, sigma=1, kappa=1.0,
                 branch="plus", lof="momentum", theta=None, xi=None, x_shift=0.0,
                 detector_sigma=None, detector_x0=0.0):
        self.mu = mu
        self.delta1 = delta1
        self.n_points = n_points
        self.length = length
        self.sigma = sigma
        self.kappa = kappa
        self.branch = branch
        self.lof = lof
        self.theta = theta
        self.xi = xi
        self.x_shift = x_shift
        self.detector_sigma = detector_sigma
        self.detector_x0 = detector_x0

    def fit(self, X=None, y=None):
        a = analyze_point(self.mu, self.delta1, self.n_points, self.length,
                          self.sigma, self.kappa, self.branch)
        self.analysis_ = a
        self.window_ = detector_window(a, self.detector_sigma, self.detector_x0)
        self.lof_, self.lof_info_, self.relaxed_ = make_lof(
            self.lof, a, self.theta, self.xi, self.x_shift, self.window_
        )
        self.eigenvalues_ = a.eigsys.eigenvalues
        return self

    def spectrum(self, omega):
        """Full :class:`SpectrumResult` on ``omega``."""
        check_is_fitted(self, "analysis_")
        a = self.analysis_
        if self.window_ is None:
            return squeezing_spectrum(a.eigsys, a.D, self.lof_, omega, relaxed=self.relaxed_,
                                      metadata=dict(self.lof_info_))
        return squeezing_spectrum_detector(a.eigsys, a.D, self.lof_, self.window_, omega,
                                           relaxed=self.relaxed_, metadata=dict(self.lof_info_))

    def transform(self, X):
        check_is_fitted(self, "analysis_")
        X = check_array(X, ensure_2d=False, dtype=float)
        if X.ndim == 2:
            if X.shape[1] != 1:
                raise InvalidArgumentError("transform expects a single column of frequencies")
            X = X[:, 0]
        return self.spectrum(X).values[:, None]
