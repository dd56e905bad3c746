"""Lambda-exponential families and their likelihood machinery.

A family has densities, with respect to a reference measure ``nu``,

    p(x; theta) = (1 + lam * theta.F(x))_+ ** (1/lam) * exp(-phi(theta)).

Concrete families subclass :class:`FamilyModel` and supply closed forms for
the potential and the two dual maps. The module-level functions implement
the data-dependent pieces: log-likelihood, escort weights, the kappa
functions and the first-order residual.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate
from scipy.special import logsumexp

from .errors import DimensionMismatch, DomainError, EmptyData, InvalidParameter, QuadratureFailure
from .lambda_core import Curvature, DualParam, lambda_gradient, pairing

__all__ = [
    "FamilyModel",
    "SufficientData",
    "log_density",
    "log_likelihood",
    "log_bases",
    "escort_weights",
    "kappa",
    "kappa_from_dual_potential",
    "first_order_residual",
    "integrate_over_state_space",
    "escort_expectation_oracle",
]


class FamilyModel(abc.ABC):
    """Contract for a lambda-exponential family with ``lam < 0``.

    Subclasses set ``lam`` (a :class:`Curvature`), ``dim`` and
    ``state_space`` (``"real_line"`` or ``"simplex"``), and implement the
    abstract methods. Instances are treated as immutable.
    """

    lam: Curvature
    dim: int
    state_space: str
    name: str = "family"

    # -- statistic and support ------------------------------------------------
    @abc.abstractmethod
    def statistic(self, x) -> np.ndarray:
        """``F(x)`` as a length-``dim`` vector."""

    def statistics(self, samples) -> np.ndarray:
        """Rows ``F(x_i)`` stacked into an ``(n, dim)`` matrix."""
        return np.array([self.statistic(x) for x in samples], dtype=float).reshape(-1, self.dim)

    @abc.abstractmethod
    def in_support(self, x) -> bool:
        ...

    def log_reference_density(self, x) -> float:
        """Log density of ``nu`` against Lebesgue measure on the state space."""
        return 0.0

    # -- potentials and dual maps ---------------------------------------------
    @abc.abstractmethod
    def potential(self, theta) -> float:
        """``phi(theta)``, including every normalising constant."""

    @abc.abstractmethod
    def potential_gradient(self, theta) -> np.ndarray:
        ...

    def potential_difference(self, theta_new, theta_old) -> float:
        """``phi(theta_new) - phi(theta_old)``; override for a cancellation-free form."""
        return self.potential(theta_new) - self.potential(theta_old)

    @abc.abstractmethod
    def dual_forward(self, theta) -> np.ndarray:
        """Closed-form ``theta -> eta``."""

    @abc.abstractmethod
    def dual_inverse(self, eta) -> np.ndarray:
        """Closed-form ``eta -> theta``."""

    @abc.abstractmethod
    def in_natural_domain(self, theta) -> bool:
        ...

    @abc.abstractmethod
    def in_dual_domain(self, eta) -> bool:
        ...

    # -- derived quantities ---------------------------------------------------
    def dual_forward_generic(self, theta) -> DualParam:
        """``theta -> eta`` through :func:`lambda_gradient` of the potential."""
        theta = self.check_theta(theta)
        return lambda_gradient(self.potential_gradient(theta), theta, self.lam)

    def dual_potential(self, eta) -> float:
        """``psi(eta)``, from the Fenchel-Young equality at ``theta = dual_inverse(eta)``."""
        eta = self.check_eta(eta)
        theta = self.dual_inverse(eta)
        return pairing(theta, eta, self.lam) - self.potential(theta)

    def dual_potential_gradient(self, eta) -> np.ndarray:
        eta = self.check_eta(eta)
        theta = self.dual_inverse(eta)
        return theta / (1.0 + self.lam.lam * float(theta @ eta))

    def check_theta(self, theta) -> np.ndarray:
        theta = np.atleast_1d(np.asarray(theta, dtype=float))
        if theta.shape != (self.dim,):
            raise DimensionMismatch(f"theta must have length {self.dim}, got shape {theta.shape}")
        if not self.in_natural_domain(theta):
            raise InvalidParameter(f"theta={theta.tolist()} is outside the natural domain")
        return theta

    def check_eta(self, eta) -> np.ndarray:
        eta = np.atleast_1d(np.asarray(eta, dtype=float))
        if eta.shape != (self.dim,):
            raise DimensionMismatch(f"eta must have length {self.dim}, got shape {eta.shape}")
        if not self.in_dual_domain(eta):
            raise InvalidParameter(f"eta={eta.tolist()} is outside the dual domain")
        return eta

    def describe(self) -> dict:
        """JSON-ready parameters identifying this model."""
        return {"family": self.name, "lambda": self.lam.lam, "dim": self.dim}


@dataclass(frozen=True, eq=False)
class SufficientData:
    """Raw samples together with the statistic matrix ``stats[i] = F(x_i)``."""

    samples: np.ndarray
    stats: np.ndarray

    @property
    def n(self) -> int:
        return self.stats.shape[0]

    @classmethod
    def from_samples(cls, model: FamilyModel, samples) -> "SufficientData":
        samples = np.asarray(samples, dtype=float)
        if samples.ndim == 0:
            samples = samples.reshape(1)
        if samples.shape[0] == 0:
            raise EmptyData("at least one sample is required")
        for i, x in enumerate(samples):
            if not model.in_support(x):
                raise InvalidParameter(f"sample {i} lies outside the support: {np.asarray(x).tolist()}")
        stats = model.statistics(samples)
        samples = samples.copy()
        samples.setflags(write=False)
        stats.setflags(write=False)
        return cls(samples=samples, stats=stats)


def log_bases(model: FamilyModel, theta, stats: np.ndarray) -> np.ndarray:
    """``log(1 + lam * theta.y_i)`` for each row; DomainError if a base is nonpositive."""
    z = model.lam.lam * (np.asarray(stats, dtype=float) @ np.asarray(theta, dtype=float))
    if not np.all(1.0 + z > 0.0):
        bad = int(np.argmin(1.0 + z))
        raise DomainError(f"base 1 + lam*theta.y is {1.0 + z[bad]} for row {bad}")
    return np.log1p(z)


def log_density(model: FamilyModel, theta, x) -> float:
    """Log density against ``nu``; ``-inf`` where the positive part vanishes.

    Raises
    ------
    InvalidParameter
        If ``theta`` is not in the natural domain.
    """
    theta = model.check_theta(theta)
    if not model.in_support(x):
        return -np.inf
    z = model.lam.lam * float(model.statistic(x) @ theta)
    if not 1.0 + z > 0.0:
        return -np.inf
    return float(np.log1p(z) / model.lam.lam - model.potential(theta))


def log_likelihood(model: FamilyModel, theta, data: SufficientData) -> float:
    theta = model.check_theta(theta)
    z = model.lam.lam * (data.stats @ theta)
    if not np.all(1.0 + z > 0.0):
        return -np.inf
    return float(np.sum(np.log1p(z)) / model.lam.lam - data.n * model.potential(theta))


def escort_weights(model: FamilyModel, theta, data: SufficientData) -> np.ndarray:
    """Normalised weights ``w_i ~ 1 / (1 + lam * theta.y_i)``.

    Normalisation happens in log space so extreme skew keeps ``sum(w) == 1``.
    """
    theta = model.check_theta(theta)
    neg_log = -log_bases(model, theta, data.stats)
    return np.exp(neg_log - logsumexp(neg_log))


def kappa(model: FamilyModel, eta, data: SufficientData) -> np.ndarray:
    """``kappa_i(eta) = p(x_i; theta)**lam`` with ``theta = dual_inverse(eta)``."""
    eta = model.check_eta(eta)
    theta = model.dual_inverse(eta)
    lb = log_bases(model, theta, data.stats)
    return np.exp(lb - model.lam.lam * model.potential(theta))


def kappa_from_dual_potential(model: FamilyModel, eta, data: SufficientData) -> np.ndarray:
    """``Psi(eta) + grad Psi(eta).(y_i - eta)`` with ``Psi = exp(lam * psi)``.

    Independent route to :func:`kappa` that goes through the dual potential.
    """
    eta = model.check_eta(eta)
    lam = model.lam.lam
    big_psi = np.exp(lam * model.dual_potential(eta))
    grad_big_psi = lam * big_psi * model.dual_potential_gradient(eta)
    return big_psi + (data.stats - eta) @ grad_big_psi


def first_order_residual(model: FamilyModel, theta, data: SufficientData) -> float:
    """Sup-norm of ``dual_forward(theta) - sum_i w_i(theta) y_i``."""
    theta = model.check_theta(theta)
    w = escort_weights(model, theta, data)
    return float(np.max(np.abs(model.dual_forward(theta) - w @ data.stats)))


# -- quadrature ----------------------------------------------------------------

def integrate_over_state_space(
    model: FamilyModel,
    fn: Callable[[np.ndarray], float],
    epsabs: float = 0.0,
    epsrel: float = 1e-9,
    limit: int = 200,
) -> float:
    """Integrate ``fn`` against Lebesgue measure on the model's state space.

    Supported: the real line, and the open simplex with ``dim`` 1 or 2.
    Simplex points are passed to ``fn`` as full compositions ``(q0, ..., qd)``.
    """
    kw = dict(epsabs=epsabs, epsrel=epsrel)
    if model.state_space == "real_line":
        g = lambda t: fn(np.array(t))  # noqa: E731
        left, _ = integrate.quad(g, -np.inf, 0.0, limit=limit, **kw)
        right, _ = integrate.quad(g, 0.0, np.inf, limit=limit, **kw)
        return left + right
    if model.state_space == "simplex" and model.dim in (1, 2):
        # additive log-ratio coordinates y^j = log(q^j / q^0) over R^d; the
        # Jacobian dq^1..dq^d / dy is prod_j q^j, which also tames the
        # power singularities small concentrations produce at the edges
        def alr(*y):
            z = np.concatenate([[0.0], y])
            q = np.exp(z - np.logaddexp.reduce(z))
            if np.any(q <= 0.0):
                return 0.0
            return fn(q) * float(np.prod(q))

        if model.dim == 1:
            val, _ = integrate.quad(alr, -np.inf, np.inf, limit=limit, **kw)
        else:
            opts = dict(limit=limit, **kw)
            val, _ = integrate.nquad(alr, [(-np.inf, np.inf)] * 2, opts=[opts, opts])
        return val
    raise QuadratureFailure(
        f"no quadrature rule for state space {model.state_space!r} with dim {model.dim}"
    )


def _lebesgue_log_density(model: FamilyModel, theta: np.ndarray) -> Callable[[np.ndarray], float]:
    lam = model.lam.lam
    phi = model.potential(theta)

    def logp(x):
        z = lam * float(model.statistic(x) @ theta)
        if not 1.0 + z > 0.0:
            return -np.inf
        return np.log1p(z) / lam - phi + model.log_reference_density(x)

    return logp


def escort_expectation_oracle(
    model: FamilyModel,
    theta,
    epsrel: float = 1e-9,
    stability_tol: float = 1e-6,
) -> DualParam:
    """Quadrature estimate of the escort mean of ``F`` (test oracle).

    Computes ``int F p**(1-lam) dnu / int p**(1-lam) dnu``. The integrals are
    evaluated at two tolerances; disagreement beyond ``stability_tol``
    (relative) raises :class:`QuadratureFailure`.
    """
    theta = model.check_theta(theta)
    lam = model.lam.lam
    logp = _lebesgue_log_density(model, theta)

    def escort(x):
        # p_nu**(1-lam) dnu = p_nu**(-lam) * (Lebesgue density)
        lp = logp(x)
        if not np.isfinite(lp):
            return 0.0
        lp_nu = lp - model.log_reference_density(x)
        return np.exp(lp - lam * lp_nu)

    def estimate(rel):
        den = integrate_over_state_space(model, escort, epsabs=0.0, epsrel=rel)
        num = np.array([
            integrate_over_state_space(
                model, lambda x, j=j: model.statistic(x)[j] * escort(x), epsabs=0.0, epsrel=rel
            )
            for j in range(model.dim)
        ])
        return num / den

    fine = estimate(epsrel)
    coarse = estimate(epsrel * 1e2)
    if not np.all(np.isfinite(fine)) or np.max(np.abs(fine - coarse)) > stability_tol * max(
        1.0, float(np.max(np.abs(fine)))
    ):
        raise QuadratureFailure(f"escort expectation unstable: {fine} vs {coarse}")
    return DualParam(fine)
