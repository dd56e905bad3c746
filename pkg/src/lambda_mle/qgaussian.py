"""The q-Gaussian scale family, ``q = 1 - lam`` with ``lam in (-2, 0)``.

Density on the real line (Lebesgue reference measure):

    p(x; theta) = (1 + lam * theta * x**2) ** (1/lam) * exp(-phi(theta)),
    theta < 0,   phi(theta) = -0.5 * log(-theta) + C(lam).

Because ``lam * theta > 0`` the base is at least 1 and the support is the
whole line. The density is a rescaled Student-t with ``2/|lam| - 1`` degrees
of freedom, which gives both the normaliser and an exact sampler.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln

from .errors import InvalidParameter
from .family import FamilyModel
from .lambda_core import LambdaLike, as_curvature

__all__ = [
    "QGaussianModel",
    "qg_log_normalizer",
    "qg_potential",
    "qg_dual_forward",
    "qg_dual_inverse",
    "qg_sample",
]


def _check_lam(lam: LambdaLike) -> float:
    lam = as_curvature(lam).lam
    if not lam > -2.0:
        raise InvalidParameter(f"q-Gaussian needs lambda in (-2, 0), got {lam}")
    return lam


def qg_log_normalizer(lam: LambdaLike) -> float:
    """``C(lam)`` such that ``phi(theta) = -0.5 log(-theta) + C(lam)``.

    With ``m = 1/|lam|``:
    ``C = log(sqrt(pi) * Gamma(m - 1/2) / Gamma(m)) - 0.5 * log(-lam)``.
    """
    lam = _check_lam(lam)
    m = -1.0 / lam
    return float(0.5 * np.log(np.pi) + gammaln(m - 0.5) - gammaln(m) - 0.5 * np.log(-lam))


def _theta(theta) -> float:
    t = float(np.asarray(theta, dtype=float).reshape(-1)[0])
    if not (np.isfinite(t) and t < 0.0):
        raise InvalidParameter(f"q-Gaussian theta must be negative, got {t}")
    return t


def qg_potential(theta, lam: LambdaLike) -> float:
    t = _theta(theta)
    return float(-0.5 * np.log(-t) + qg_log_normalizer(lam))


def qg_dual_forward(theta, lam: LambdaLike) -> float:
    """``eta = -1 / ((2 + lam) * theta)``; positive for ``theta < 0``."""
    lam = _check_lam(lam)
    return -1.0 / ((2.0 + lam) * _theta(theta))


def qg_dual_inverse(eta, lam: LambdaLike) -> float:
    """``theta = -1 / ((2 + lam) * eta)``; the map is its own inverse form."""
    lam = _check_lam(lam)
    e = float(np.asarray(eta, dtype=float).reshape(-1)[0])
    if not (np.isfinite(e) and e > 0.0):
        raise InvalidParameter(f"q-Gaussian eta must be positive, got {e}")
    return -1.0 / ((2.0 + lam) * e)


def qg_sample(theta, lam: LambdaLike, n: int, seed: int) -> np.ndarray:
    """Draw ``n`` i.i.d. points from the q-Gaussian with parameter ``theta``.

    A Student-t variate with ``nu = 2/|lam| - 1`` degrees of freedom, scaled
    by ``1/sqrt(nu * lam * theta)``, has exactly this density.
    """
    lam = _check_lam(lam)
    t = _theta(theta)
    if int(n) < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    nu = -2.0 / lam - 1.0
    rng = np.random.default_rng(seed)
    return rng.standard_t(nu, size=int(n)) / np.sqrt(nu * lam * t)


class QGaussianModel(FamilyModel):
    """One-dimensional q-Gaussian scale family with statistic ``F(x) = x**2``."""

    dim = 1
    state_space = "real_line"
    name = "qgaussian"

    def __init__(self, lam: LambdaLike):
        _check_lam(lam)
        self.lam = as_curvature(lam)
        self.log_normalizer = qg_log_normalizer(self.lam)

    def __repr__(self):
        return f"QGaussianModel(lam={self.lam.lam})"

    def statistic(self, x):
        return np.square(np.asarray(x, dtype=float).reshape(-1)[:1])

    def statistics(self, samples):
        return (np.asarray(samples, dtype=float).reshape(-1) ** 2)[:, None]

    def in_support(self, x):
        x = np.asarray(x, dtype=float)
        return x.size == 1 and bool(np.isfinite(x).all())

    def potential(self, theta):
        return float(-0.5 * np.log(-_theta(theta)) + self.log_normalizer)

    def potential_gradient(self, theta):
        return np.array([-0.5 / _theta(theta)])

    def potential_difference(self, theta_new, theta_old):
        a, b = _theta(theta_new), _theta(theta_old)
        return float(-0.5 * np.log1p((a - b) / b))

    def dual_forward(self, theta):
        return np.array([qg_dual_forward(theta, self.lam)])

    def dual_inverse(self, eta):
        return np.array([qg_dual_inverse(eta, self.lam)])

    def in_natural_domain(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        return theta.size == 1 and bool(np.isfinite(theta[0]) and theta[0] < 0.0)

    def in_dual_domain(self, eta):
        eta = np.asarray(eta, dtype=float).reshape(-1)
        return eta.size == 1 and bool(np.isfinite(eta[0]) and eta[0] > 0.0)

    def sample(self, theta, n: int, seed: int) -> np.ndarray:
        return qg_sample(theta, self.lam, n, seed)
