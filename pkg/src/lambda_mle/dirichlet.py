"""Dirichlet perturbation model on the open simplex.

``Q = p (+) D`` where ``(+)`` is the Aitchison perturbation and ``D`` is
Dirichlet with every concentration equal to ``1 / (sigma * (1 + d))``. For
fixed ``sigma`` this is a ``d``-dimensional lambda-exponential family with
``lam = -sigma``,

    theta^i = p^0 / (lam * p^i),      F(q)^i = q^i / q^0,
    phi(theta) = (1 / (lam * (1 + d))) * sum_i log(-theta^i),

and the dual coordinates ``eta^i = p^i / p^0`` do not depend on ``sigma``.

Compositions are plain ndarrays whose last axis indexes the components
``0..d``; helpers broadcast over leading axes.
"""

from __future__ import annotations

import numpy as np
from scipy.special import gammaln, logsumexp

from .errors import DimensionMismatch, EmptyData, InvalidParameter
from .family import FamilyModel
from .lambda_core import LambdaLike, as_curvature

__all__ = [
    "MIN_COMPONENT",
    "as_simplex",
    "barycenter",
    "closure",
    "perturb",
    "difference",
    "aitchison_distance",
    "dp_theta_from_p",
    "dp_p_from_eta",
    "dp_simplex_update",
    "dp_sample",
    "DirichletPerturbationModel",
]

MIN_COMPONENT = 1e-300


def as_simplex(p, atol: float = 1e-12) -> np.ndarray:
    """Validate compositions (last axis) and return them as a float array.

    Raises
    ------
    InvalidParameter
        On a component that is non-finite, below ``MIN_COMPONENT`` or above
        1, or on a row whose sum differs from 1 by more than ``atol``. A
        component may round to exactly 1.0 when the others are tiny; the
        lower bound still keeps the point inside the open simplex.
    """
    p = np.asarray(p, dtype=float)
    if p.ndim == 0 or p.shape[-1] < 2:
        raise InvalidParameter(f"a composition needs at least 2 components, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise InvalidParameter("composition has non-finite components")
    if np.any(p < MIN_COMPONENT) or np.any(p > 1.0):
        raise InvalidParameter(f"composition components must lie in (0, 1): {p.tolist()}")
    if np.any(np.abs(p.sum(axis=-1) - 1.0) > atol):
        raise InvalidParameter(f"composition does not sum to 1: {p.sum(axis=-1)}")
    return p


def barycenter(d: int) -> np.ndarray:
    return np.full(d + 1, 1.0 / (d + 1))


def closure(x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    return x / x.sum(axis=-1, keepdims=True)


def _pair(p, q):
    p, q = as_simplex(p), as_simplex(q)
    if p.shape[-1] != q.shape[-1]:
        raise DimensionMismatch(f"compositions of different length: {p.shape[-1]} vs {q.shape[-1]}")
    return p, q


def perturb(p, q) -> np.ndarray:
    """Aitchison sum ``p (+) q``: componentwise product, renormalised."""
    p, q = _pair(p, q)
    return as_simplex(closure(p * q))


def difference(p, q) -> np.ndarray:
    """Aitchison difference ``p (-) q``: componentwise ratio, renormalised."""
    p, q = _pair(p, q)
    return as_simplex(closure(p / q))


def aitchison_distance(p, q) -> np.ndarray:
    p, q = _pair(p, q)
    clr = lambda x: np.log(x) - np.log(x).mean(axis=-1, keepdims=True)  # noqa: E731
    return np.linalg.norm(clr(p) - clr(q), axis=-1)


def dp_theta_from_p(p, lam: LambdaLike) -> np.ndarray:
    """Natural parameter ``theta^i = p^0 / (lam * p^i)``; every component is negative."""
    lam = as_curvature(lam).lam
    p = as_simplex(p)
    return p[..., :1] / (lam * p[..., 1:])


def dp_p_from_eta(eta) -> np.ndarray:
    """Composition ``p = (1, eta) / (1 + sum(eta))``."""
    eta = np.asarray(eta, dtype=float)
    if eta.ndim == 0 or not np.all(np.isfinite(eta)) or np.any(eta <= 0.0):
        raise InvalidParameter(f"eta must have positive finite components, got {np.asarray(eta).tolist()}")
    ones = np.ones(eta.shape[:-1] + (1,))
    return closure(np.concatenate([ones, eta], axis=-1))


def dp_simplex_update(p_k, data) -> np.ndarray:
    """One fixed-point step written on the simplex.

    ``p_next = p_k (+) mean_i(q_i (-) p_k)`` with a Euclidean mean. The noise
    level never enters.
    """
    data = np.asarray(data, dtype=float)
    if data.ndim != 2 or data.shape[0] == 0:
        raise EmptyData("the update needs a non-empty (n, d+1) array of compositions")
    p_k = as_simplex(p_k)
    return perturb(p_k, difference(data, p_k).mean(axis=0))


def _log_dirichlet(alpha: float, shape, rng) -> np.ndarray:
    """Log of normalised Dirichlet(alpha, ..., alpha) draws, computed in log space."""
    if alpha >= 0.1:
        log_g = np.log(rng.standard_gamma(alpha, size=shape))
    else:
        # Gamma(a) = Gamma(a + 1) * U**(1/a): avoids exact zeros at tiny shape
        u = 1.0 - rng.random(size=shape)
        log_g = np.log(rng.standard_gamma(alpha + 1.0, size=shape)) + np.log(u) / alpha
    return log_g - logsumexp(log_g, axis=-1, keepdims=True)


def dp_sample(p, sigma: float, n: int, seed: int) -> np.ndarray:
    """``n`` draws of ``p (+) D``, ``D ~ Dirichlet(1 / (sigma (1 + d)))``; shape ``(n, d+1)``."""
    p = as_simplex(p)
    if p.ndim != 1:
        raise InvalidParameter("p must be a single composition")
    sigma = float(sigma)
    if not (np.isfinite(sigma) and sigma > 0.0):
        raise InvalidParameter(f"sigma must be positive, got {sigma}")
    if int(n) < 1:
        raise InvalidParameter(f"n must be >= 1, got {n}")
    d = p.shape[0] - 1
    alpha = 1.0 / (sigma * (1 + d))
    rng = np.random.default_rng(seed)
    log_q = np.log(p) + _log_dirichlet(alpha, (int(n), d + 1), rng)
    q = np.exp(log_q - logsumexp(log_q, axis=-1, keepdims=True))
    return as_simplex(q)


class DirichletPerturbationModel(FamilyModel):
    """The perturbation model as a lambda-exponential family with ``lam = -sigma``.

    Sample points are full compositions of length ``d + 1``. The reference
    measure ``nu`` carries everything that does not depend on ``theta``; see
    :meth:`log_reference_density`.
    """

    state_space = "simplex"
    name = "dirichlet"

    def __init__(self, sigma: float, d: int):
        sigma = float(sigma)
        if not (np.isfinite(sigma) and sigma > 0.0):
            raise InvalidParameter(f"sigma must be positive, got {sigma}")
        if int(d) < 1:
            raise InvalidParameter(f"d must be >= 1, got {d}")
        self.sigma = sigma
        self.dim = int(d)
        self.lam = as_curvature(-sigma)
        self.alpha = 1.0 / (sigma * (1 + self.dim))
        self._log_ref_const = (
            gammaln((self.dim + 1) * self.alpha)
            - (self.dim + 1) * gammaln(self.alpha)
            + self.dim * self.alpha * np.log(sigma)
        )

    def __repr__(self):
        return f"DirichletPerturbationModel(sigma={self.sigma}, d={self.dim})"

    def describe(self):
        return {"family": self.name, "lambda": self.lam.lam, "sigma": self.sigma, "dim": self.dim}

    # statistic and support
    def statistic(self, x):
        x = np.asarray(x, dtype=float)
        return x[1:] / x[0]

    def statistics(self, samples):
        q = np.asarray(samples, dtype=float).reshape(-1, self.dim + 1)
        return q[:, 1:] / q[:, :1]

    def in_support(self, x):
        try:
            x = as_simplex(x)
        except InvalidParameter:
            return False
        return x.shape == (self.dim + 1,)

    def log_reference_density(self, x):
        """Log density of ``nu`` against ``dq^1 ... dq^d``.

        ``nu(dq) = Gamma((d+1)a) / Gamma(a)**(d+1) * sigma**(d a)
        * prod_j (q^j / q^0)**a / prod_j q^j``, with ``a = alpha``.
        """
        logq = np.log(np.asarray(x, dtype=float))
        return float(self._log_ref_const + self.alpha * np.sum(logq - logq[0]) - np.sum(logq))

    # potentials and dual maps
    def _neg(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        if theta.shape != (self.dim,) or not np.all(np.isfinite(theta)) or np.any(theta >= 0.0):
            raise InvalidParameter(f"theta must lie in (-inf, 0)^{self.dim}, got {theta.tolist()}")
        return theta

    def potential(self, theta):
        theta = self._neg(theta)
        return float(np.sum(np.log(-theta)) / (self.lam.lam * (1 + self.dim)))

    def potential_gradient(self, theta):
        theta = self._neg(theta)
        return 1.0 / (self.lam.lam * (1 + self.dim) * theta)

    def potential_difference(self, theta_new, theta_old):
        a, b = self._neg(theta_new), self._neg(theta_old)
        return float(np.sum(np.log1p((a - b) / b)) / (self.lam.lam * (1 + self.dim)))

    def dual_forward(self, theta):
        return 1.0 / (self.lam.lam * self._neg(theta))

    def dual_inverse(self, eta):
        eta = np.asarray(eta, dtype=float).reshape(-1)
        if not self.in_dual_domain(eta):
            raise InvalidParameter(f"eta must lie in (0, inf)^{self.dim}, got {eta.tolist()}")
        return 1.0 / (self.lam.lam * eta)

    def in_natural_domain(self, theta):
        theta = np.asarray(theta, dtype=float).reshape(-1)
        return theta.shape == (self.dim,) and bool(np.all(np.isfinite(theta)) and np.all(theta < 0.0))

    def in_dual_domain(self, eta):
        eta = np.asarray(eta, dtype=float).reshape(-1)
        return eta.shape == (self.dim,) and bool(np.all(np.isfinite(eta)) and np.all(eta > 0.0))

    # simplex coordinates
    def theta_from_p(self, p):
        return dp_theta_from_p(p, self.lam)

    def p_from_theta(self, theta):
        return dp_p_from_eta(self.dual_forward(theta))

    def sample(self, p, n: int, seed: int) -> np.ndarray:
        return dp_sample(p, self.sigma, n, seed)
