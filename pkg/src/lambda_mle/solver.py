"""Fixed-point maximum likelihood iteration on the dual parameter space.

Each step maps ``eta -> T(eta) = sum_i w_i(theta) y_i`` with
``theta = dual_inverse(eta)`` and escort weights ``w_i``. For ``lam < 0`` the
log-likelihood never decreases along the iterates, and every iterate after
the first lies in the convex hull of the statistics ``y_i``.

The trace stores, alongside the log-likelihood, its increment and the excess
of the mean kappa ratio over 1. Both are computed from per-sample log1p
terms, so they stay accurate when the likelihood itself is large and the
step is tiny.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.special import logsumexp

from .errors import DimensionMismatch, DomainError, EmptyData, InitializationError, InvalidParameter
from .family import FamilyModel, SufficientData, log_bases
from .lambda_core import DualParam, NaturalParam

logger = logging.getLogger(__name__)

__all__ = [
    "SolverConfig",
    "IterationRecord",
    "SolverTrace",
    "FitResult",
    "AuditReport",
    "TERMINATIONS",
    "step",
    "sample_mean_init",
    "solve",
    "monotonicity_audit",
]

TERMINATIONS = ("step-converged", "residual-converged", "max-iter", "monotonicity-violation")


@dataclass(frozen=True)
class SolverConfig:
    """Stopping rules and initialisation.

    ``init`` is ``"mean"`` (sample mean of the statistics), ``"theta"`` or
    ``"eta"``; the latter two read ``init_value``.
    """

    tol_step: float = 1e-12
    tol_residual: float = 1e-10
    max_iter: int = 500
    monotonicity_slack: float = 1e-9
    init: str = "mean"
    init_value: Optional[tuple] = None
    keep_trace: bool = True

    def __post_init__(self):
        if not (self.tol_step > 0 and self.tol_residual > 0):
            raise ValueError("tolerances must be positive")
        if not self.monotonicity_slack >= 0:
            raise ValueError("monotonicity_slack must be nonnegative")
        if int(self.max_iter) < 1:
            raise ValueError("max_iter must be positive")
        if self.init not in ("mean", "theta", "eta"):
            raise ValueError(f"unknown init rule {self.init!r}")
        if self.init != "mean" and self.init_value is None:
            raise ValueError(f"init={self.init!r} needs init_value")
        if self.init_value is not None:
            object.__setattr__(
                self, "init_value", tuple(float(v) for v in np.atleast_1d(self.init_value))
            )


@dataclass
class IterationRecord:
    k: int
    eta: np.ndarray
    theta: np.ndarray
    loglik: float
    step_norm: float
    weights: Optional[np.ndarray] = None
    # ell(k) - ell(k-1), accurate to relative precision; nan at k = 0
    loglik_increase: float = float("nan")
    # mean_i kappa_i(eta(k)) / kappa_i(eta(k-1)) - 1; nan at k = 0
    kappa_ratio_excess: float = float("nan")


@dataclass
class SolverTrace:
    records: List[IterationRecord] = field(default_factory=list)
    termination: Optional[str] = None

    def __len__(self):
        return len(self.records)

    @property
    def logliks(self) -> np.ndarray:
        return np.array([r.loglik for r in self.records])

    @property
    def etas(self) -> np.ndarray:
        return np.array([r.eta for r in self.records])


@dataclass
class FitResult:
    theta_hat: NaturalParam
    eta_hat: DualParam
    loglik: float
    iterations: int
    first_order_residual: float
    termination: str
    trace: Optional[SolverTrace] = None

    @property
    def converged(self) -> bool:
        return self.termination in ("step-converged", "residual-converged")


@dataclass
class _State:
    eta: np.ndarray
    theta: np.ndarray
    log_base: np.ndarray
    weights: np.ndarray
    image: np.ndarray  # T(eta)
    loglik: float


def _evaluate(model: FamilyModel, eta: np.ndarray, stats: np.ndarray, k: int) -> _State:
    try:
        eta = model.check_eta(eta)
        theta = model.dual_inverse(eta)
        lb = log_bases(model, theta, stats)
    except DomainError as exc:
        raise DomainError(str(exc), iteration=k) from exc
    except InvalidParameter as exc:
        raise InvalidParameter(f"{exc} (iteration {k})") from exc
    neg = -lb
    w = np.exp(neg - logsumexp(neg))
    loglik = float(np.sum(lb) / model.lam.lam - stats.shape[0] * model.potential(theta))
    return _State(eta=eta, theta=theta, log_base=lb, weights=w, image=w @ stats, loglik=loglik)


def _increments(model: FamilyModel, old: _State, new: _State, stats: np.ndarray):
    """Log-likelihood increment and mean kappa ratio excess between two states."""
    lam = model.lam.lam
    # lam * (log p_new(x_i) - log p_old(x_i)), each term via log1p
    delta = lam * (stats @ (new.theta - old.theta)) * np.exp(-old.log_base)
    d_phi = model.potential_difference(new.theta, old.theta)
    lam_dlogp = np.log1p(delta) - lam * d_phi
    increase = float(np.sum(lam_dlogp) / lam)
    ratio_excess = float(np.mean(np.expm1(lam_dlogp)))
    return increase, ratio_excess


def step(model: FamilyModel, eta_k, data: SufficientData) -> DualParam:
    """One application of ``T``: the escort-weighted mean of the statistics."""
    return DualParam(_evaluate(model, np.asarray(eta_k, dtype=float), data.stats, 0).image)


def sample_mean_init(model: FamilyModel, data: SufficientData) -> DualParam:
    """``eta(0) = mean_i y_i``; raises InvalidParameter if it falls outside the dual domain."""
    mean = data.stats.mean(axis=0)
    if not model.in_dual_domain(mean):
        raise InvalidParameter(f"sample mean {mean.tolist()} is outside the dual domain")
    return DualParam(mean)


def _initial_eta(model: FamilyModel, data: SufficientData, config: SolverConfig) -> np.ndarray:
    try:
        if config.init == "mean":
            return np.asarray(sample_mean_init(model, data), dtype=float)
        value = np.asarray(config.init_value, dtype=float)
        if config.init == "theta":
            return np.asarray(model.dual_forward(model.check_theta(value)), dtype=float)
        return model.check_eta(value)
    except (InvalidParameter, DomainError, DimensionMismatch) as exc:
        raise InitializationError(f"initialisation {config.init!r} failed: {exc}") from exc


def _record(state: _State, k: int, step_norm: float, keep_weights: bool, inc=float("nan"), ratio=float("nan")):
    return IterationRecord(
        k=k,
        eta=state.eta.copy(),
        theta=state.theta.copy(),
        loglik=state.loglik,
        step_norm=step_norm,
        weights=state.weights.copy() if keep_weights else None,
        loglik_increase=inc,
        kappa_ratio_excess=ratio,
    )


def _result(state: _State, k: int, termination: str, trace: Optional[SolverTrace]) -> FitResult:
    residual = float(np.max(np.abs(state.eta - state.image)))
    return FitResult(
        theta_hat=NaturalParam(state.theta),
        eta_hat=DualParam(state.eta),
        loglik=state.loglik,
        iterations=k,
        first_order_residual=residual,
        termination=termination,
        trace=trace,
    )


def solve(model: FamilyModel, data: SufficientData, config: Optional[SolverConfig] = None) -> FitResult:
    """Run the fixed-point iteration until a stopping rule fires.

    Stops when the sup-norm step falls to ``tol_step`` or the first-order
    residual ``|eta - T(eta)|`` at the current iterate falls to
    ``tol_residual``. A log-likelihood drop beyond ``monotonicity_slack``
    (relative to ``1 + |ell|``) aborts with the best iterate seen.
    Non-convergence within ``max_iter`` is reported, not raised.
    """
    config = config or SolverConfig()
    if data.n == 0:
        raise EmptyData("no data")
    stats = data.stats
    state = _evaluate(model, _initial_eta(model, data, config), stats, 0)
    trace = SolverTrace() if config.keep_trace else None
    if trace is not None:
        trace.records.append(_record(state, 0, 0.0, True))

    best = state
    residual = float(np.max(np.abs(state.image - state.eta)))
    if residual <= config.tol_residual:
        return _finish(state, 0, "residual-converged", trace)

    for k in range(1, int(config.max_iter) + 1):
        new = _evaluate(model, state.image, stats, k)
        step_norm = float(np.max(np.abs(new.eta - state.eta)))
        inc, ratio = _increments(model, state, new, stats)
        if trace is not None:
            trace.records.append(_record(new, k, step_norm, True, inc, ratio))

        drop_limit = config.monotonicity_slack * (1.0 + abs(state.loglik))
        if new.loglik < state.loglik - drop_limit:
            logger.warning(
                "log-likelihood fell from %r to %r at iteration %d", state.loglik, new.loglik, k
            )
            return _finish(best, k, "monotonicity-violation", trace)
        if new.loglik >= best.loglik:
            best = new
        state = new

        if step_norm <= config.tol_step:
            return _finish(state, k, "step-converged", trace)
        if float(np.max(np.abs(state.image - state.eta))) <= config.tol_residual:
            return _finish(state, k, "residual-converged", trace)

    return _finish(state, int(config.max_iter), "max-iter", trace)


def _finish(state, k, termination, trace):
    if trace is not None:
        trace.termination = termination
    return _result(state, k, termination, trace)


@dataclass
class AuditReport:
    """Indices ``k`` of trace records that break the monotonicity guarantees.

    ``loglik_violations``: ``ell(k) < ell(k-1) - slack * (1 + |ell(k-1)|)``.
    ``ratio_violations``: mean kappa ratio into record ``k`` is ``>= 1 + ratio_slack``.
    ``strict_violations``: ``step_norm > strict_step`` yet the recorded increment is not positive.
    """

    loglik_violations: List[int] = field(default_factory=list)
    ratio_violations: List[int] = field(default_factory=list)
    strict_violations: List[int] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not (self.loglik_violations or self.ratio_violations or self.strict_violations)

    def as_dict(self) -> dict:
        return {
            "ok": self.ok,
            "loglik_violations": self.loglik_violations,
            "ratio_violations": self.ratio_violations,
            "strict_violations": self.strict_violations,
        }


def monotonicity_audit(
    trace: SolverTrace,
    slack: float = 1e-9,
    ratio_slack: float = 1e-12,
    strict_step: float = 1e-8,
) -> AuditReport:
    report = AuditReport()
    records = trace.records
    for prev, cur in zip(records, records[1:]):
        if cur.loglik < prev.loglik - slack * (1.0 + abs(prev.loglik)):
            report.loglik_violations.append(cur.k)
        if np.isfinite(cur.kappa_ratio_excess) and cur.kappa_ratio_excess >= ratio_slack:
            report.ratio_violations.append(cur.k)
        if cur.step_norm > strict_step and not cur.loglik_increase > 0.0:
            report.strict_violations.append(cur.k)
    return report
