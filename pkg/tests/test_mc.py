import math

import numpy as np
import pytest

from ridgenow.errors import ConfigurationError
from ridgenow.mc import (
    DgpConfig,
    DgpSampler,
    GAMMA,
    conditional_mspe,
    full_true_coefficients,
    population_moment_matrix,
    psi_matrix,
    run_cells,
    run_mc,
    simulate_dgp,
    sure_screening_sweep,
    scaled_alpha_grid,
    verify_error_scaling,
    verify_gcv_oos,
)
from ridgenow.ridge import AlphaGrid


class TestDgp:
    def test_variance_decomposition_without_predictors(self):
        # var(y) = gamma' Sigma_z gamma + 1 = 6.2 + 1; R^2 = 6.2/7.2
        cfg = DgpConfig(N=10, T=100, s=0, delta_scale=0.0, seed=3)
        draw = simulate_dgp(cfg, 5000)
        r2 = 1.0 - np.mean((draw.y - draw.Z @ GAMMA) ** 2) / draw.y.var()
        assert draw.y.var() == pytest.approx(7.2, abs=0.35)
        assert r2 == pytest.approx(6.2 / 7.2, abs=0.03)

    def test_identity_noise_is_uncorrelated(self):
        cfg = DgpConfig(N=20, T=100, s=0, delta_scale=0.0, psi="identity", seed=5)
        draw = simulate_dgp(cfg, 2000)
        corr = np.corrcoef(draw.X.T)
        off_diag = corr[~np.eye(20, dtype=bool)]
        assert np.max(np.abs(off_diag)) < 3.0 / math.sqrt(2000) * 3

    def test_decreasing_noise_has_half_adjacent_correlation(self):
        cfg = DgpConfig(N=20, T=100, s=0, delta_scale=0.0, psi="decreasing", seed=5)
        draw = simulate_dgp(cfg, 2000)
        corr = np.corrcoef(draw.X.T)
        adjacent = np.diag(corr, 1)
        assert np.mean(adjacent) == pytest.approx(0.5, abs=3.0 / math.sqrt(2000))

    def test_sparsity_pattern_and_min_signal(self):
        cfg = DgpConfig(N=30, T=50, s=7, seed=1, min_signal=2.0)
        draw = simulate_dgp(cfg, 10)
        assert np.all(draw.beta[7:] == 0.0)
        assert np.all(np.abs(draw.beta[:7]) >= 2.0)

    def test_fixed_beta_across_reps(self):
        cfg = DgpConfig(N=10, T=50, s=4, seed=9, fix_beta_across_reps=True)
        sampler = DgpSampler(cfg)
        a = sampler.draw(50, rep=0)
        b = sampler.draw(50, rep=1)
        assert np.array_equal(a.beta, b.beta)
        assert not np.array_equal(a.y, b.y)

    def test_replication_streams_are_deterministic(self):
        cfg = DgpConfig(N=8, T=40, s=2, seed=4)
        a = DgpSampler(cfg).draw(40, rep=3)
        b = DgpSampler(cfg).draw(40, rep=3)
        assert np.array_equal(a.y, b.y) and np.array_equal(a.X, b.X)

    def test_config_validation(self):
        with pytest.raises(ConfigurationError):
            DgpConfig(N=10, T=50, s=11)
        with pytest.raises(ConfigurationError):
            DgpConfig(N=10, T=50, s=2, psi="mystery")


class TestConditionalMspe:
    def test_perfect_estimation_returns_noise_variance(self):
        beta = np.array([0.0, 1.0, 2.0, 0.5])
        sigma = np.eye(4)
        assert conditional_mspe(beta, beta, 1.0, sigma) == pytest.approx(1.0)

    def test_unit_displacement_identity_moments(self):
        base = np.zeros(4)
        shifted = base.copy()
        shifted[1] = 1.0
        assert conditional_mspe(shifted, base, 1.0, np.eye(4)) == pytest.approx(2.0)

    def test_fresh_draw_oracle_within_half_percent(self):
        cfg = DgpConfig(N=10, T=100, s=4, delta_scale=0.4, psi="decreasing", seed=13)
        sampler = DgpSampler(cfg)
        draw = sampler.draw(1_000_000, rep=0)
        rng = np.random.default_rng(99)
        beta_true = full_true_coefficients(draw.beta)
        beta_hat = beta_true + 0.3 * rng.standard_normal(beta_true.size)
        sigma = population_moment_matrix(cfg)
        exact = conditional_mspe(beta_hat, beta_true, 1.0, sigma)
        design = np.column_stack([np.ones(len(draw.y)), draw.Z, draw.X])
        empirical = float(np.mean((draw.y - design @ beta_hat) ** 2))
        assert empirical == pytest.approx(exact, rel=0.005)

    def test_never_below_noise_floor(self, rng):
        cfg = DgpConfig(N=6, T=50, s=3, seed=2)
        sigma = population_moment_matrix(cfg)
        beta = full_true_coefficients(simulate_dgp(cfg, 10).beta)
        for _ in range(25):
            perturbed = beta + rng.standard_normal(beta.size)
            assert conditional_mspe(perturbed, beta, 1.0, sigma) >= 1.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            conditional_mspe(np.ones(3), np.ones(4), 1.0, np.eye(4))
        with pytest.raises(ValueError):
            conditional_mspe(np.ones(3), np.ones(3), 1.0, np.eye(4))

    def test_moment_matrix_against_long_simulation(self):
        cfg = DgpConfig(N=5, T=100, s=2, delta_scale=0.8, psi="decreasing", seed=8)
        draw = simulate_dgp(cfg, 400_000)
        design = np.column_stack([np.ones(len(draw.y)), draw.Z, draw.X])
        empirical = design.T @ design / len(draw.y)
        assert np.allclose(empirical, population_moment_matrix(cfg), atol=0.02)


class TestRunMc:
    def test_baseline_against_itself_is_exactly_one(self):
        cfg = DgpConfig(150, 100, 105, seed=3)
        report = run_mc(cfg, replications=4)
        assert np.all(report.mser == 1.0)
        assert np.all(report.msfer == 1.0)
        assert np.all(report.mser_se == 0.0)

    def test_identical_results_for_any_worker_count(self):
        cfg = DgpConfig(40, 60, 12, seed=6)
        a = run_cells(cfg, 10, workers=1)
        b = run_cells(cfg, 10, workers=2)
        assert np.array_equal(a.in_mse, b.in_mse)
        assert np.array_equal(a.oos_mse, b.oos_mse)

    def test_single_replication_has_nan_se(self):
        cfg = DgpConfig(20, 40, 5, seed=1)
        cells = run_cells(cfg, 1)
        assert np.all(np.isnan(cells.in_se))

    def test_ratio_uses_shared_baseline(self):
        base_cfg = DgpConfig(150, 100, 105, seed=3)
        base = run_cells(base_cfg, 5)
        cfg = DgpConfig(200, 100, 110, seed=3)
        report = run_mc(cfg, 5, baseline=base)
        assert np.allclose(report.mser, report.in_mse / base.in_mse)

    def test_invalid_inputs(self):
        cfg = DgpConfig(20, 40, 5, seed=1)
        with pytest.raises(ConfigurationError):
            run_cells(cfg, 0)
        with pytest.raises(ConfigurationError):
            run_cells(cfg, 2, oos_fraction=-0.5)


class TestScaledGrid:
    def test_window_shrinks_with_t(self):
        g100 = scaled_alpha_grid(100)
        g400 = scaled_alpha_grid(400)
        assert g400.lo < g100.lo
        assert g100.lo == pytest.approx(100 ** (-0.4))

    def test_psi_matrix_shapes(self):
        assert np.array_equal(psi_matrix(3, "identity"), np.eye(3))
        dec = psi_matrix(3, "decreasing")
        assert dec[0, 2] == pytest.approx(0.25)


class TestVerifyGcvOos:
    def test_regret_nonnegative_and_degenerate_grid_zero(self):
        # one repeated effective point: bounds one ulp apart
        grid = AlphaGrid(lo=0.5, hi=float(np.nextafter(0.5, 1.0)), count=2)
        report = verify_gcv_oos(
            t_values=(60,), replications=10, n_candidates=10, s=3, seed=5, grid=grid
        )
        stats = report.stats[60]
        assert stats.min_regret == 0.0
        assert stats.median_regret == 0.0

    def test_regret_always_nonnegative_on_real_grid(self):
        report = verify_gcv_oos(t_values=(80,), replications=20, n_candidates=15, s=4, seed=2)
        assert report.stats[80].min_regret >= 0.0

    def test_median_regret_and_gap_shrink_with_t(self):
        report = verify_gcv_oos(t_values=(100, 400), replications=40, seed=7)
        assert report.median_regret(400) < report.median_regret(100)
        assert report.median_gap(400) < report.median_gap(100)

    def test_chosen_alpha_mspe_within_ten_percent_of_oracle(self):
        report = verify_gcv_oos(t_values=(200,), replications=100, seed=3)
        stats = report.stats[200]
        assert stats.mean_mspe_chosen <= 1.10 * stats.mean_mspe_oracle


class TestSureScreening:
    def test_frequency_rises_with_t(self):
        report = sure_screening_sweep(t_values=(100, 400), replications=60, seed=1)
        assert report.frequency(400) >= report.frequency(100)
        assert report.frequency(400) >= 0.9


class TestErrorScaling:
    def test_null_sweep_all_ratios_one(self):
        configs = [(60, 50, 20)] * 3
        report = verify_error_scaling(configs, replications=4, seed=2)
        for rep in report.reports.values():
            assert np.all(rep.mser == 1.0)
            assert np.all(rep.msfer == 1.0)
        assert all(not f.evaluated for f in report.findings)
        assert report.passed

    def test_single_config_sweep_has_no_comparisons(self):
        report = verify_error_scaling([(60, 50, 20)], replications=3, seed=2)
        assert all(not f.evaluated for f in report.findings)
        assert len(report.reports) == 1

    def test_study_configs_evaluated_at_small_replications(self):
        report = verify_error_scaling(replications=10, seed=4)
        names = {f.name for f in report.findings if f.evaluated}
        assert names == {"t_up_both_fall", "s_up_smaller_reduction", "n_s_up_fixed_t"}
