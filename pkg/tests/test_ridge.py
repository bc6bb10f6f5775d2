import numpy as np
import pytest

from ridgenow.errors import NumericalBreakdownError
from ridgenow.ridge import (
    AlphaGrid,
    RidgeProblem,
    fit_gcv_pipeline,
    gcv,
    gcv_minimize,
    restricted_eigenvalues,
    ridge_after_selection,
    ridge_solve,
)
from ridgenow.screen import ScreenConfig


def _dense_ridge_oracle(design, y, alpha):
    """Normal-equations oracle: explicit (X'X/T + aI)^{-1} X'y/T."""
    t_obs, p = design.shape
    lhs = design.T @ design / t_obs + alpha * np.eye(p)
    return np.linalg.solve(lhs, design.T @ y / t_obs)


def _dense_gcv_oracle(design, y, alpha):
    """GCV oracle materialising the full hat matrix."""
    t_obs, p = design.shape
    inner = np.linalg.inv(design.T @ design / t_obs + alpha * np.eye(p))
    hat = design @ inner @ design.T / t_obs
    resid = y - hat @ y
    rss = float(resid @ resid)
    return rss / (t_obs * (1.0 - np.trace(hat) / t_obs) ** 2)


def _random_problem(rng, t_max=100, p_max=150):
    t_obs = int(rng.integers(10, t_max + 1))
    p = int(rng.integers(1, p_max + 1))
    design = rng.standard_normal((t_obs, p)) * rng.uniform(0.5, 2.0)
    beta = rng.standard_normal(p)
    y = design @ beta + rng.standard_normal(t_obs)
    alpha = float(10.0 ** rng.uniform(-4, 2))
    return design, y, alpha


class TestClosedForm:
    def test_single_column_hand_example(self):
        design = np.array([[1.0], [1.0]])
        y = np.array([2.0, 2.0])
        assert ridge_solve(design, y, 1.0)[0] == pytest.approx(1.0, abs=1e-14)

    def test_gcv_hand_example(self):
        design = np.array([[1.0], [1.0]])
        y = np.array([2.0, 2.0])
        value = gcv(design, y, 1.0)
        assert value == pytest.approx(16.0 / 9.0, abs=1e-12)
        assert round(value, 4) == 1.7778

    def test_zero_target_gives_zero_coefficients(self, rng):
        design = rng.standard_normal((20, 7))
        for alpha in (1e-6, 1.0, 1e4):
            assert np.allclose(ridge_solve(design, np.zeros(20), alpha), 0.0)

    def test_huge_alpha_shrinks_to_zero(self, rng):
        design = rng.standard_normal((30, 5))
        y = rng.standard_normal(30)
        coefs = ridge_solve(design, y, 1e8)
        bound = np.linalg.norm(design.T @ y / 30) / 1e8
        assert np.linalg.norm(coefs) <= bound * (1.0 + 1e-9)

    def test_matches_dense_oracle_100_seeded_problems(self):
        rng = np.random.default_rng(501)
        for _ in range(100):
            design, y, alpha = _random_problem(rng)
            got = ridge_solve(design, y, alpha)
            want = _dense_ridge_oracle(design, y, alpha)
            scale = max(float(np.max(np.abs(want))), 1e-12)
            assert np.max(np.abs(got - want)) / scale < 1e-10

    def test_gcv_matches_dense_hat_oracle_100_seeded_problems(self):
        # alpha kept >= 1e-2 so the oracle's explicit inverse is itself
        # accurate enough for a 1e-10 comparison
        rng = np.random.default_rng(502)
        for _ in range(100):
            design, y, _ = _random_problem(rng, t_max=60, p_max=40)
            alpha = float(10.0 ** rng.uniform(-2, 2))
            got = gcv(design, y, alpha)
            want = _dense_gcv_oracle(design, y, alpha)
            assert got == pytest.approx(want, rel=1e-10)

    def test_wide_design_is_solvable(self, rng):
        design = rng.standard_normal((15, 40))
        y = rng.standard_normal(15)
        got = ridge_solve(design, y, 0.3)
        want = _dense_ridge_oracle(design, y, 0.3)
        assert np.allclose(got, want, rtol=1e-9, atol=1e-12)

    def test_alpha_domain_errors(self, rng):
        design = rng.standard_normal((10, 3))
        y = rng.standard_normal(10)
        for bad in (0.0, -1.0, np.nan):
            with pytest.raises(ValueError):
                ridge_solve(design, y, bad)

    def test_zero_residual_limit_gcv_vanishes(self, rng):
        design = rng.standard_normal((20, 8))
        w = rng.integers(-3, 4, size=8).astype(float)
        y = design @ w  # exactly representable target
        assert gcv(design, y, 1e-10) < 1e-6

    def test_trace_breakdown_raises(self):
        design = np.eye(5)
        y = np.arange(1.0, 6.0)
        with pytest.raises(NumericalBreakdownError):
            gcv(design, y, 1e-300)


class TestGcvMinimize:
    def test_degenerate_grid_returns_that_alpha(self, rng):
        design = rng.standard_normal((25, 4))
        y = rng.standard_normal(25)
        grid = AlphaGrid(lo=0.5, hi=0.5 * (1 + 1e-12), count=2)
        fit = gcv_minimize(design, y, grid)
        assert fit.alpha == pytest.approx(0.5, rel=1e-9)

    def test_ties_break_toward_larger_alpha(self, rng):
        design = rng.standard_normal((12, 3))
        grid = AlphaGrid(lo=0.1, hi=10.0, count=7)
        fit = gcv_minimize(design, np.zeros(12), grid)
        # zero target makes every grid point equally good
        assert fit.alpha == pytest.approx(10.0)
        assert fit.gcv_value == 0.0

    def test_path_covers_grid_and_min_is_attained(self, rng):
        design = rng.standard_normal((40, 6))
        y = design[:, 0] + 0.1 * rng.standard_normal(40)
        grid = AlphaGrid(count=30)
        fit = gcv_minimize(design, y, grid)
        assert len(fit.gcv_path) == 30
        values = [v for _, v in fit.gcv_path]
        assert fit.gcv_value == min(values)
        assert (fit.alpha, fit.gcv_value) in fit.gcv_path

    def test_uninformative_target_prefers_heavy_shrinkage(self):
        # pure-noise target: the minimiser should sit in the grid's upper half
        rng = np.random.default_rng(77)
        grid = AlphaGrid()
        log_mid = np.sqrt(grid.lo * grid.hi)
        upper = 0
        reps = 100
        for _ in range(reps):
            design = np.column_stack([np.ones(200), rng.standard_normal((200, 10))])
            y = rng.standard_normal(200)
            fit = gcv_minimize(design, y, grid)
            upper += fit.alpha >= log_mid
        assert upper / reps >= 0.90


class TestProperties:
    def test_gradient_optimality_100_cases(self):
        rng = np.random.default_rng(503)
        for _ in range(100):
            t_obs = int(rng.integers(10, 60))
            p = int(rng.integers(1, 20))
            design = rng.standard_normal((t_obs, p))
            y = rng.standard_normal(t_obs)
            alpha = float(10.0 ** rng.uniform(-3, 1))
            coefs = ridge_solve(design, y, alpha)
            grad = 2.0 / t_obs * design.T @ (design @ coefs - y) + 2.0 * alpha * coefs
            assert np.max(np.abs(grad)) < 1e-8

    def test_tiny_alpha_matches_ols_when_thin(self):
        rng = np.random.default_rng(504)
        for _ in range(100):
            t_obs = int(rng.integers(25, 80))
            p = int(rng.integers(1, 10))
            design = rng.standard_normal((t_obs, p))
            y = rng.standard_normal(t_obs)
            ols = np.linalg.lstsq(design, y, rcond=None)[0]
            assert np.max(np.abs(ridge_solve(design, y, 1e-10) - ols)) < 1e-6

    def test_trace_decreasing_and_denominator_increasing(self, rng):
        design = rng.standard_normal((30, 12))
        y = rng.standard_normal(30)
        problem = RidgeProblem(design, y)
        alphas = AlphaGrid(count=40).points()
        traces = np.array([problem.trace(a) for a in alphas])
        assert np.all(np.diff(traces) < 0.0)
        denominators = (1.0 - traces / 30) ** 2
        assert np.all(np.diff(denominators) > 0.0)

    def test_orthonormal_design_monotone_shrinkage(self, rng):
        t_obs = 64
        q, _ = np.linalg.qr(rng.standard_normal((t_obs, 8)))
        design = q * np.sqrt(t_obs)  # X'X/T = I exactly
        y = rng.standard_normal(t_obs)
        alphas = AlphaGrid(lo=1e-4, hi=1e3, count=25).points()
        norms = [np.linalg.norm(ridge_solve(design, y, a)) for a in alphas]
        assert all(a >= b for a, b in zip(norms, norms[1:]))

    def test_restricted_eigenvalue_diagnostics(self, rng):
        design = rng.standard_normal((50, 10))
        selected = np.array([0, 3, 7])
        diag = restricted_eigenvalues(design, selected)
        gram = design[:, selected].T @ design[:, selected] / 50
        eigs = np.linalg.eigvalsh(gram)
        assert diag.kappa0_sq == pytest.approx(eigs[0], rel=1e-12)
        assert diag.phi0 == pytest.approx(eigs[-1], rel=1e-12)
        assert diag.condition_number == pytest.approx(np.sqrt(eigs[-1] / eigs[0]), rel=1e-12)
        assert diag.kappa0_sq <= diag.phi0
        assert diag.condition_number >= 1.0


class TestRidgeAfterSelection:
    def test_noise_candidates_fall_back_to_officials_only(self):
        rng = np.random.default_rng(505)
        grid = AlphaGrid(count=40)
        empty, matched = 0, 0
        for _ in range(20):
            t_obs = 120
            officials = np.column_stack([np.ones(t_obs), rng.standard_normal(t_obs)])
            candidates = rng.standard_normal((t_obs, 30))
            y = officials @ np.array([0.5, 1.0]) + rng.standard_normal(t_obs)
            fit = ridge_after_selection(y, officials, candidates, ScreenConfig(tau=0.005), grid)
            if fit.meta["n_selected_candidates"] == 0:
                empty += 1
                direct = fit_gcv_pipeline(officials, y, grid)
                if np.array_equal(fit.coefficients[:2], direct.coefficients) and np.all(
                    fit.coefficients[2:] == 0.0
                ):
                    matched += 1
        assert empty >= 12
        assert matched == empty

    def test_strong_support_recovered_and_near_oracle_oos(self):
        rng = np.random.default_rng(506)
        t_obs, n_cand, t_new = 300, 100, 300
        support = np.array([4, 17, 60])
        beta = np.zeros(n_cand)
        beta[support] = [2.0, -2.5, 3.0]
        x = rng.standard_normal((t_obs + t_new, n_cand))
        noise = rng.standard_normal(t_obs + t_new)
        y = x @ beta + noise
        officials = np.ones((t_obs, 1))
        grid = AlphaGrid(count=50)

        fit = ridge_after_selection(
            y[:t_obs], officials, x[:t_obs], ScreenConfig(tau=0.10), grid
        )
        picked = {int(j) - 1 for j in fit.selected if j >= 1}
        assert set(support) <= picked

        oracle = fit_gcv_pipeline(
            np.column_stack([np.ones(t_obs), x[:t_obs, support]]), y[:t_obs], grid
        )
        full_new = np.column_stack([np.ones(t_new), x[t_obs:]])
        mse_fit = float(np.mean((y[t_obs:] - full_new @ fit.coefficients) ** 2))
        oracle_pred = (
            oracle.coefficients[0] + x[t_obs:][:, support] @ oracle.coefficients[1:]
        )
        mse_oracle = float(np.mean((y[t_obs:] - oracle_pred) ** 2))
        assert mse_fit <= 1.3 * mse_oracle

    def test_intercept_only_closed_form(self, rng):
        t_obs = 40
        y = rng.standard_normal(t_obs) + 2.0
        officials = np.ones((t_obs, 1))
        fit = ridge_after_selection(
            y, officials, np.empty((t_obs, 0)), ScreenConfig(tau=0.1), AlphaGrid(count=20)
        )
        assert fit.coefficients[0] == pytest.approx(y.mean() / (1.0 + fit.alpha), rel=1e-12)

    def test_unpenalized_intercept_flag(self, rng):
        t_obs = 60
        officials = np.column_stack([np.ones(t_obs), rng.standard_normal(t_obs)])
        candidates = rng.standard_normal((t_obs, 5))
        y = 3.0 + officials[:, 1] + rng.standard_normal(t_obs)
        fit = ridge_after_selection(
            y, officials, candidates, ScreenConfig(tau=0.2), AlphaGrid(count=25),
            penalize_intercept=False,
        )
        # with an unpenalised intercept the fit reproduces the target mean
        design = np.column_stack([officials, candidates])
        preds = design @ fit.coefficients
        assert preds.mean() == pytest.approx(y.mean(), rel=1e-10)

    def test_coefficients_zero_off_selected_set(self, rng):
        t_obs = 80
        officials = np.ones((t_obs, 1))
        candidates = rng.standard_normal((t_obs, 12))
        y = 2.0 * candidates[:, 3] + rng.standard_normal(t_obs)
        fit = ridge_after_selection(
            y, officials, candidates, ScreenConfig(tau=0.05), AlphaGrid(count=20)
        )
        off_support = np.setdiff1d(np.arange(13), fit.selected)
        assert np.all(fit.coefficients[off_support] == 0.0)
        assert fit.gcv_value == min(v for _, v in fit.gcv_path)
