"""Coordinate-free lambda-duality primitives.

The logarithmic pairing

    c_lam(u, v) = (1 / lam) * log(1 + lam * u.v)

replaces the inner product of ordinary convex duality. Everything in this
module is a pure function of its arguments; only ``lam < 0`` is supported.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence, Union

import numpy as np
from scipy import optimize

from .errors import DimensionMismatch, DomainError, InvalidParameter, NoFeasiblePoint

__all__ = [
    "Curvature",
    "NaturalParam",
    "DualParam",
    "as_curvature",
    "pairing",
    "lambda_gradient",
    "fenchel_young_residual",
    "numeric_conjugate",
]


@dataclass(frozen=True)
class Curvature:
    """The constant ``lam``; strictly negative and finite."""

    lam: float

    def __post_init__(self):
        lam = float(self.lam)
        if not np.isfinite(lam) or lam >= 0.0:
            raise InvalidParameter(f"lambda must be finite and < 0, got {self.lam!r}")
        object.__setattr__(self, "lam", lam)

    def __float__(self):
        return self.lam


LambdaLike = Union[Curvature, float]


def as_curvature(lam: LambdaLike) -> Curvature:
    return lam if isinstance(lam, Curvature) else Curvature(lam)


def _finite_vector(values, name):
    arr = np.atleast_1d(np.asarray(values, dtype=float))
    if arr.ndim != 1:
        raise DimensionMismatch(f"{name} must be a vector, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidParameter(f"{name} has non-finite components: {arr}")
    return arr


@dataclass(frozen=True, eq=False)
class NaturalParam:
    """A point ``theta`` of the natural parameter space.

    Membership in a family's domain is checked by that family, not here.
    Converts to an ndarray via ``np.asarray``.
    """

    theta: np.ndarray

    def __post_init__(self):
        arr = _finite_vector(self.theta, "theta")
        arr.setflags(write=False)
        object.__setattr__(self, "theta", arr)

    def __array__(self, dtype=None, copy=None):
        return self.theta if dtype is None else self.theta.astype(dtype)

    def __len__(self):
        return self.theta.shape[0]

    def __repr__(self):
        return f"NaturalParam({self.theta.tolist()})"


@dataclass(frozen=True, eq=False)
class DualParam:
    """A point ``eta`` of the dual parameter space."""

    eta: np.ndarray

    def __post_init__(self):
        arr = _finite_vector(self.eta, "eta")
        arr.setflags(write=False)
        object.__setattr__(self, "eta", arr)

    def __array__(self, dtype=None, copy=None):
        return self.eta if dtype is None else self.eta.astype(dtype)

    def __len__(self):
        return self.eta.shape[0]

    def __repr__(self):
        return f"DualParam({self.eta.tolist()})"


def _dot(u, v):
    u = np.atleast_1d(np.asarray(u, dtype=float))
    v = np.atleast_1d(np.asarray(v, dtype=float))
    if u.shape != v.shape:
        raise DimensionMismatch(f"length mismatch: {u.shape} vs {v.shape}")
    return float(np.dot(u, v))


def pairing(u, v, lam: LambdaLike) -> float:
    """Evaluate ``(1/lam) * log(1 + lam * u.v)``.

    Uses ``log1p`` so the value tends to ``u.v`` as ``lam -> 0-`` without
    cancellation.

    Raises
    ------
    DomainError
        If ``1 + lam * u.v <= 0``.
    DimensionMismatch
        If ``u`` and ``v`` differ in length.
    """
    lam = as_curvature(lam).lam
    z = lam * _dot(u, v)
    if not 1.0 + z > 0.0:
        raise DomainError(f"pairing base 1 + lam*u.v = {1.0 + z} is not positive")
    return float(np.log1p(z) / lam)


def lambda_gradient(grad, theta, lam: LambdaLike) -> DualParam:
    """Map a Euclidean gradient at ``theta`` to its lambda-gradient.

    ``eta = grad / (1 - lam * grad.theta)``
    """
    lam = as_curvature(lam).lam
    g = _finite_vector(grad, "grad")
    denom = 1.0 - lam * _dot(g, theta)
    if not denom > 0.0:
        raise DomainError(f"lambda-gradient denominator {denom} is not positive")
    return DualParam(g / denom)


def fenchel_young_residual(theta, eta, phi_val: float, psi_val: float, lam: LambdaLike) -> float:
    """Signed gap ``phi(theta) + psi(eta) - pairing(theta, eta)``.

    Nonnegative for every admissible pair; zero exactly on dual pairs.
    """
    return float(phi_val + psi_val - pairing(theta, eta, lam))


Box = Sequence[Sequence[float]]


def numeric_conjugate(
    f: Callable[[np.ndarray], float],
    y,
    search_box: Box,
    lam: LambdaLike,
    grid: int = 201,
    refine: bool = True,
) -> float:
    """Brute-force lambda-conjugate ``sup_t { pairing(t, y) - f(t) }`` over a box.

    A uniform product grid with ``grid`` points per axis locates the best
    cell; a bounded local search then refines it. The returned value is the
    larger of the grid maximum and the refined value, hence a lower bound on
    the supremum over the box. This is a test oracle and is never used by the
    solver.

    Parameters
    ----------
    f : callable
        Scalar field on the box; may return ``inf``/``nan`` where undefined.
    y : array_like
        Point at which the conjugate is evaluated.
    search_box : sequence of (low, high)
        One interval per coordinate.
    lam : float or Curvature
    grid : int
        Points per axis. Grids with ``2*m - 1`` points contain the grid with
        ``m`` points, which makes the value monotone under that refinement.

    Raises
    ------
    NoFeasiblePoint
        If no grid point lies inside the pairing's domain with finite ``f``.
    """
    lam = as_curvature(lam).lam
    y = _finite_vector(y, "y")
    box = np.asarray(search_box, dtype=float).reshape(-1, 2)
    if box.shape[0] != y.shape[0]:
        raise DimensionMismatch(f"box has {box.shape[0]} axes, y has length {y.shape[0]}")
    if np.any(box[:, 1] < box[:, 0]):
        raise NoFeasiblePoint(f"empty search box {box.tolist()}")
    d = y.shape[0]

    def objective(t):
        t = np.asarray(t, dtype=float)
        z = lam * float(np.dot(t, y))
        if not 1.0 + z > 0.0:
            return -np.inf
        val = np.log1p(z) / lam - f(t)
        return val if np.isfinite(val) else -np.inf

    axes = [np.linspace(lo, hi, grid) for lo, hi in box]
    mesh = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, d)
    values = np.array([objective(t) for t in mesh])
    best = int(np.argmax(values))
    best_val = values[best]
    if not np.isfinite(best_val):
        raise NoFeasiblePoint("pairing domain does not meet the search box")
    if not refine:
        return float(best_val)

    t0 = mesh[best]
    step = (box[:, 1] - box[:, 0]) / max(grid - 1, 1)
    lo = np.maximum(t0 - step, box[:, 0])
    hi = np.minimum(t0 + step, box[:, 1])

    if d == 1:
        res = optimize.minimize_scalar(
            lambda s: -objective(np.array([s])),
            bounds=(lo[0], hi[0]),
            method="bounded",
            options={"xatol": 1e-13 * max(1.0, abs(t0[0])), "maxiter": 500},
        )
        refined = -res.fun
    else:
        def neg(t):
            v = objective(t)
            return -v if np.isfinite(v) else np.inf

        res = optimize.minimize(
            neg,
            t0,
            method="Nelder-Mead",
            bounds=list(zip(lo, hi)),
            options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000, "maxfev": 40000},
        )
        refined = -res.fun
    return float(max(best_val, refined)) if np.isfinite(refined) else float(best_val)
