import numpy as np
import pytest

from lambda_mle import (
    DirichletPerturbationModel,
    QGaussianModel,
    SolverConfig,
    SufficientData,
    monotonicity_audit,
    sample_mean_init,
    solve,
    step,
)
from lambda_mle.dirichlet import dp_p_from_eta, dp_sample
from lambda_mle.errors import DomainError, EmptyData, InitializationError, InvalidParameter
from lambda_mle.qgaussian import qg_sample

from checks import fit_properties_hold, hull_failures, monotonicity_failures, random_instance, refit_iterations
from oracles import grid_maximizer_1d, grid_maximizer_2d, loglik_formula, qgaussian_normalizer_quad
from test_family import LinearStatistic


class TestConfig:
    @pytest.mark.parametrize(
        "kwargs",
        [dict(tol_step=0.0), dict(tol_residual=-1.0), dict(monotonicity_slack=-1e-9),
         dict(max_iter=0), dict(init="median"), dict(init="theta")],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            SolverConfig(**kwargs)

    def test_init_value_normalised_to_tuple(self):
        assert SolverConfig(init="theta", init_value=-0.5).init_value == (-0.5,)


class TestStep:
    def test_single_observation(self, qg_model):
        data = SufficientData.from_samples(qg_model, [1.7])
        for eta in (0.01, 1.0, 300.0):
            assert np.asarray(step(qg_model, [eta], data))[0] == pytest.approx(1.7**2, rel=1e-15)

    def test_near_zero_lambda_gives_sample_mean(self):
        model = QGaussianModel(-1e-8)
        data = SufficientData.from_samples(model, qg_sample(-0.5, -1e-8, 200, 3))
        mean = data.stats.mean(axis=0)
        for eta in (0.1, 1.0, 10.0):
            assert np.asarray(step(model, [eta], data)) == pytest.approx(mean, abs=1e-6)

    def test_small_lambda_deviation_is_first_order(self):
        # w_i ~ (1 - lam theta (y_i - mean)) / n, so T(eta) - mean ~ -lam theta Var(y)
        lam = -1e-8
        model = QGaussianModel(lam)
        data = SufficientData.from_samples(model, qg_sample(-0.1, lam, 200, 3))
        y = data.stats[:, 0]
        for eta in (0.01, 0.05, 0.5):
            theta = model.dual_inverse([eta])[0]
            dev = np.asarray(step(model, [eta], data))[0] - y.mean()
            assert dev == pytest.approx(-lam * theta * y.var(), rel=1e-2)

    def test_convex_combination(self, dp_model, example2_data):
        out = np.asarray(step(dp_model, [2.0, 7.0], example2_data))
        s = example2_data.stats
        assert np.all(out >= s.min(axis=0)) and np.all(out <= s.max(axis=0))

    def test_fixed_point_is_returned(self, qg_model, example1_data):
        fit = solve(qg_model, example1_data)
        out = np.asarray(step(qg_model, fit.eta_hat, example1_data))
        assert out == pytest.approx(np.asarray(fit.eta_hat), abs=1e-10)

    def test_two_starts_same_fixed_point(self, qg_model, example1_data):
        fits = [solve(qg_model, example1_data, SolverConfig(init="theta", init_value=t)) for t in (-0.5, -3.0)]
        assert abs(fits[0].eta_hat.eta[0] - fits[1].eta_hat.eta[0]) < 1e-8
        assert all(f.first_order_residual < 1e-10 for f in fits)

    def test_outside_dual_domain(self, qg_model, example1_data):
        with pytest.raises(InvalidParameter):
            step(qg_model, [-1.0], example1_data)


class TestSolve:
    def test_single_observation_one_iteration(self, qg_model):
        data = SufficientData.from_samples(qg_model, [2.0])
        fit = solve(qg_model, data, SolverConfig(init="eta", init_value=(1.0,)))
        assert fit.iterations == 1
        assert fit.eta_hat.eta[0] == pytest.approx(4.0, rel=1e-15)
        assert fit.theta_hat.theta[0] == pytest.approx(qg_model.dual_inverse([4.0])[0], rel=1e-15)

    def test_degenerate_equal_data(self):
        lam, c = -0.8, 1.5
        model = QGaussianModel(lam)
        data = SufficientData.from_samples(model, np.full(30, c))
        fit = solve(model, data, SolverConfig(init="theta", init_value=(-4.0,)))
        assert fit.iterations == 1
        assert fit.eta_hat.eta[0] == pytest.approx(c**2, rel=1e-15)
        assert fit.theta_hat.theta[0] == pytest.approx(-1.0 / ((2 + lam) * c**2), rel=1e-14)

    def test_mean_init_at_fixed_point_needs_no_iterations(self, qg_model):
        data = SufficientData.from_samples(qg_model, [2.0])
        fit = solve(qg_model, data)
        assert fit.iterations == 0 and fit.termination == "residual-converged"

    def test_dirichlet_three_inits_agree(self, dp_model, example2_data):
        inits = [SolverConfig(), SolverConfig(init="eta", init_value=(1.0, 1.0)),
                 SolverConfig(init="theta", init_value=(-30.0, -0.2))]
        etas = np.array([solve(dp_model, example2_data, c).eta_hat.eta for c in inits])
        assert np.max(np.abs(etas - etas[0])) < 1e-8

    def test_result_invariants(self, dp_model, example2_data):
        fit = solve(dp_model, example2_data)
        assert fit.converged
        assert fit.first_order_residual <= 10 * SolverConfig().tol_residual
        assert np.asarray(dp_model.dual_forward(fit.theta_hat)) == pytest.approx(fit.eta_hat.eta, rel=1e-12)
        assert fit.trace.termination == fit.termination
        assert fit.loglik == pytest.approx(fit.trace.records[-1].loglik, rel=0, abs=0)

    def test_keep_trace_false(self, qg_model, example1_data):
        assert solve(qg_model, example1_data, SolverConfig(keep_trace=False)).trace is None

    def test_max_iter_is_reported(self, qg_model, example1_data):
        fit = solve(qg_model, example1_data, SolverConfig(max_iter=3))
        assert fit.termination == "max-iter" and fit.iterations == 3 and not fit.converged

    def test_bad_init(self, qg_model, dp_model, example1_data, example2_data):
        with pytest.raises(InitializationError):
            solve(qg_model, example1_data, SolverConfig(init="theta", init_value=(0.5,)))
        with pytest.raises(InitializationError):
            solve(dp_model, example2_data, SolverConfig(init="eta", init_value=(1.0, -1.0)))
        with pytest.raises(InitializationError):
            solve(dp_model, example2_data, SolverConfig(init="eta", init_value=(1.0,)))

    def test_domain_error_carries_iteration(self):
        model = LinearStatistic(-1.0)
        data = SufficientData.from_samples(model, [-3.0, 10.0])
        # theta = -1/eta; the base 1 - 3/eta is negative at eta = 2
        with pytest.raises(DomainError) as info:
            solve(model, data, SolverConfig(init="eta", init_value=(2.0,)))
        assert info.value.iteration == 0 and "iteration 0" in str(info.value)

    def test_leaving_dual_domain_names_iteration(self):
        model = LinearStatistic(-1.0)
        data = SufficientData.from_samples(model, [-3.0, 10.0])
        # from eta = 4 the escort mean is negative, outside the dual domain
        with pytest.raises(InvalidParameter, match="iteration 1"):
            solve(model, data, SolverConfig(init="eta", init_value=(4.0,)))

    def test_deterministic(self, dp_model, example2_data):
        a = solve(dp_model, example2_data)
        b = solve(dp_model, example2_data)
        assert np.array_equal(a.trace.etas, b.trace.etas)


class TestSampleMeanInit:
    def test_dirichlet_matches_direct_mean(self):
        model = DirichletPerturbationModel(0.2, 2)
        q = dp_sample([0.2, 0.3, 0.5], 0.2, 50, 42)
        data = SufficientData.from_samples(model, q)
        eta0 = np.asarray(sample_mean_init(model, data))
        direct = np.mean(q[:, 1:] / q[:, :1], axis=0)
        assert eta0 == pytest.approx(direct, rel=1e-14)
        assert dp_p_from_eta(eta0) == pytest.approx(
            np.concatenate([[1.0], direct]) / (1.0 + direct.sum()), rel=1e-14
        )

    def test_single_observation(self, qg_model):
        data = SufficientData.from_samples(qg_model, [-0.3])
        assert np.asarray(sample_mean_init(qg_model, data))[0] == pytest.approx(0.09, rel=1e-15)

    def test_qgaussian_mean_positive(self, qg_model, example1_data):
        assert np.asarray(sample_mean_init(qg_model, example1_data))[0] > 0

    def test_outside_domain(self):
        model = LinearStatistic(-1.0)
        with pytest.raises(InvalidParameter):
            sample_mean_init(model, SufficientData.from_samples(model, [-3.0, 1.0]))


class TestAudit:
    def test_healthy_run(self, qg_model, example1_data):
        assert monotonicity_audit(solve(qg_model, example1_data).trace).ok

    def test_injected_fault(self, qg_model, example1_data):
        trace = solve(qg_model, example1_data).trace
        trace.records[3].loglik = trace.records[2].loglik - 1.0
        report = monotonicity_audit(trace)
        assert report.loglik_violations == [3]
        assert not report.ok

    def test_ratio_fault(self, qg_model, example1_data):
        trace = solve(qg_model, example1_data).trace
        trace.records[2].kappa_ratio_excess = 1e-6
        assert monotonicity_audit(trace).ratio_violations == [2]

    def test_one_step_trace_is_clean(self, qg_model):
        data = SufficientData.from_samples(qg_model, [2.0])
        fit = solve(qg_model, data, SolverConfig(init="eta", init_value=(1.0,)))
        assert len(fit.trace) == 2
        assert monotonicity_audit(fit.trace).as_dict()["ok"] is True

    def test_ratio_excess_negative_on_real_steps(self, dp_model, example2_data):
        trace = solve(dp_model, example2_data, SolverConfig(init="eta", init_value=(1.0, 1.0))).trace
        assert all(r.kappa_ratio_excess < 1e-12 for r in trace.records[1:])


class TestProperties:
    @pytest.mark.parametrize("family", ["qgaussian", "dirichlet"])
    def test_random_instances(self, family, rng):
        for _ in range(50):
            model, data, cfg = random_instance(family, rng)
            fit = solve(model, data, cfg)
            assert not monotonicity_failures(fit.trace)
            assert not hull_failures(fit.trace, data.stats)
            assert monotonicity_audit(fit.trace).ok
            assert fit.termination != "monotonicity-violation"

    def test_fixed_point_consistency(self, rng):
        for family in ("qgaussian", "dirichlet"):
            for _ in range(10):
                model, data, cfg = random_instance(family, rng)
                fit = solve(model, data, cfg)
                assert fit.converged
                assert refit_iterations(model, data, fit) <= 1
                assert fit_properties_hold(model, data, fit)

    def test_qgaussian_grid_oracle(self, qg_model, example1_data):
        lam = qg_model.lam.lam
        c = np.log(qgaussian_normalizer_quad(lam))
        ell = lambda t: loglik_formula(t, example1_data.stats, lam, lambda th: -0.5 * np.log(-th[0]) + c)  # noqa: E731
        t_grid, ell_grid = grid_maximizer_1d(ell, -10.0, -0.05)
        fit = solve(qg_model, example1_data)
        assert abs(fit.loglik - ell_grid) <= 1e-6 * (1 + abs(ell_grid))
        assert fit.theta_hat.theta[0] == pytest.approx(t_grid, abs=(10.0 - 0.05) / 2000)

    def test_dirichlet_grid_oracle(self, dp_model, example2_data):
        lam, d = dp_model.lam.lam, dp_model.dim
        phi = lambda th: np.sum(np.log(-th)) / (lam * (1 + d)) if np.all(th < 0) else np.inf  # noqa: E731
        ell = lambda t: loglik_formula(t, example2_data.stats, lam, phi)  # noqa: E731
        box = [(-8.0, -0.5), (-8.0, -0.5)]
        t_grid, ell_grid = grid_maximizer_2d(ell, box)
        fit = solve(dp_model, example2_data)
        assert abs(fit.loglik - ell_grid) <= 1e-6 * (1 + abs(ell_grid))
        assert np.max(np.abs(fit.theta_hat.theta - t_grid)) <= 7.5 / 200

    def test_empty_data_rejected(self, qg_model):
        with pytest.raises(EmptyData):
            SufficientData.from_samples(qg_model, [])
