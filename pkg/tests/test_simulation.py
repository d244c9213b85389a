import numpy as np
import pytest

from divproj.experiments import (
    experiment_cov,
    experiment_forecast,
    experiment_postsel,
    experiment_spectest,
)
from divproj.simulation import (
    SimConfig,
    cross_section_cov,
    generate_panel,
    loading_scale,
    rep_rng,
    true_idio_cov,
    _ar1_sqrt,
    _cross_section_sqrt,
)
from divproj.weights import sieve_weights


def small_config(**kw):
    base = dict(n_series=16, n_periods=30, n_factors_true=1, n_factors_working=1, seed=0)
    base.update(kw)
    return SimConfig(**base)


class TestSimConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            small_config(alpha_strength=0.0)
        with pytest.raises(ValueError):
            small_config(rho_T=1.0)
        with pytest.raises(ValueError):
            small_config(n_series=10)  # 3 blocks of 4 do not fit


class TestGeneratePanel:
    def test_panel_identity(self):
        sim = generate_panel(small_config(n_factors_true=2, n_factors_working=2))
        np.testing.assert_array_equal(
            sim.panel.X, sim.B_true @ sim.F_true.T + sim.U_true
        )

    def test_full_strength_has_no_downscaling(self):
        assert loading_scale(250, 1.0) == 1.0
        assert loading_scale(100, 0.5) == pytest.approx(100 ** (-0.25))

    def test_block_covariance_layout(self):
        cfg = small_config(rho_N=0.7, n_blocks=3, block_size=4)
        sigma = cross_section_cov(cfg)
        idx = np.arange(4)
        expected = 0.7 ** np.abs(idx[:, None] - idx[None, :])
        np.testing.assert_allclose(sigma[:4, :4], expected)
        np.testing.assert_allclose(sigma[12:, 12:], np.eye(4))
        assert np.all(sigma[:4, 4:8] == 0)

    def test_zero_factors(self):
        sim = generate_panel(small_config(n_factors_true=0, n_factors_working=1))
        assert sim.B_true.shape == (16, 0)
        np.testing.assert_array_equal(sim.panel.X, sim.U_true)

    def test_determinism(self):
        cfg = small_config(seed=123)
        a = generate_panel(cfg, replication=5)
        b = generate_panel(cfg, replication=5)
        np.testing.assert_array_equal(a.panel.X, b.panel.X)
        c = generate_panel(cfg, replication=6)
        assert not np.array_equal(a.panel.X, c.panel.X)

    def test_rep_rng_streams_are_independent(self):
        a = rep_rng(1, 0, 0).standard_normal(4)
        b = rep_rng(1, 0, 1).standard_normal(4)
        c = rep_rng(1, 1, 0).standard_normal(4)
        assert not np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_with_oracle(self):
        sim = generate_panel(small_config(n_factors_true=1, n_factors_working=2))
        W = sieve_weights(sim.z_chars, 2)
        out = sim.with_oracle(W)
        np.testing.assert_allclose(out.H_oracle, W.values.T @ sim.B_true / 16)
        assert out.nu_min > 0


class TestCovarianceSquareRoots:
    @pytest.mark.parametrize("rho,n", [(0.5, 40), (0.9, 120), (-0.3, 25)])
    def test_ar1_sqrt_squares_back(self, rho, n):
        S = _ar1_sqrt(rho, n)
        idx = np.arange(n)
        target = rho ** np.abs(idx[:, None] - idx[None, :])
        np.testing.assert_allclose(S @ S, target, atol=1e-10)

    def test_cross_section_sqrt_squares_back(self):
        S = _cross_section_sqrt(0.7, 4, 3, 20)
        np.testing.assert_allclose(S @ S, cross_section_cov(small_config(n_series=20)), atol=1e-10)


class TestMoments:
    def test_iid_case_has_identity_covariance(self):
        cfg = SimConfig(n_series=12, n_periods=5000, n_factors_true=0,
                        n_factors_working=1, rho_T=0.0, rho_N=0.0, seed=21)
        sim = generate_panel(cfg)
        sample_cov = sim.U_true @ sim.U_true.T / 5000
        assert np.max(np.abs(sample_cov - np.eye(12))) < 0.05

    def test_serial_and_block_moments(self):
        # one long panel checks both the lag-1 autocorrelation and the
        # within-block cross correlations (eigendecomposing the 5000 x 5000
        # time covariance makes this the slowest unit test in the suite)
        cfg = SimConfig(n_series=12, n_periods=5000, n_factors_true=0,
                        n_factors_working=1, rho_T=0.5, rho_N=0.7, seed=22)
        sim = generate_panel(cfg)
        U = sim.U_true
        lag1 = [np.corrcoef(U[i, 1:], U[i, :-1])[0, 1] for i in range(12)]
        assert abs(np.mean(lag1) - 0.5) < 0.05
        corr = np.corrcoef(U)
        for i, j in [(0, 1), (0, 2), (0, 3), (4, 5)]:
            assert abs(corr[i, j] - 0.7 ** abs(i - j)) < 0.05
        # series in different blocks are uncorrelated
        assert abs(corr[0, 4]) < 0.05

    def test_true_idio_cov_scales_with_serial_correlation(self):
        cfg = small_config(rho_T=0.9)
        np.testing.assert_allclose(true_idio_cov(cfg), cross_section_cov(cfg) / (1 - 0.81))


class TestExperimentDrivers:
    def test_cov_experiment_rows(self):
        rows = experiment_cov(sizes=(40,), alphas=(1.0,), rho_Ts=(0.1,), n_reps=2,
                              seed=0, C_values=(2.0,), extra_factors=(0, 1))
        methods = {r["method"] for r in rows}
        assert methods == {"dp_R1", "dp_R2", "pc", "known_factor"}
        for r in rows:
            assert r["err_cov_mean"] > 0 and r["err_inv_mean"] > 0

    def test_known_factor_is_exact_without_noise(self):
        # direct check of the benchmark path: noiseless panel means the
        # thresholded residual covariance is identically zero
        from divproj.projection import estimate_loadings

        rng = np.random.default_rng(3)
        B = rng.standard_normal((10, 1))
        F = rng.standard_normal((20, 1))
        X = B @ F.T
        B_hat = estimate_loadings(X, F)
        assert np.max(np.abs(X - B_hat @ F.T)) < 1e-10

    def test_forecast_experiment_identical_methods_give_unit_ratio(self):
        from divproj.forecast import PCScheme, rolling_forecast

        rng = np.random.default_rng(4)
        y = rng.standard_normal(60)
        X = rng.standard_normal((8, 60))
        a = rolling_forecast(y, X, 20, 10, PCScheme(1))
        b = rolling_forecast(y, X, 20, 10, PCScheme(1))
        assert a.mse == b.mse

    def test_forecast_experiment_smoke(self):
        rows = experiment_forecast(window_sizes=(40,), rho_Ts=(0.0,), alphas=(1.0,),
                                   n_series=20, n_steps=5, n_reps=2, seed=0,
                                   extra_factors=(0,))
        assert {r["method"] for r in rows} == {"characteristic_R2", "rolling_R2"}

    def test_forecast_without_serial_correlation_matches_pc(self):
        # with iid noise the PC benchmark is hard to beat and the relative
        # MSE sits near one
        rows = experiment_forecast(window_sizes=(100,), rho_Ts=(0.0,), alphas=(1.0,),
                                   n_reps=8, seed=3, schemes=("characteristic",),
                                   extra_factors=(0,), threads=1)
        ratio = rows[0]["mse_ratio_mean"]
        assert 0.85 < ratio < 1.2

    def test_postsel_experiment_smoke(self):
        samples, rows = experiment_postsel(r_values=(0,), working_factors=(1,),
                                           n_series=40, n_periods=60, n_reps=3, seed=0)
        assert set(samples) == {"r0_dp_R1", "r0_plain"}
        assert all(len(v) == 3 for v in samples.values())

    @pytest.mark.xfail(
        reason="initial-transform weights are weakly identified under the sin "
        "characteristic loadings: the transform matrix W'B/N loses a factor "
        "direction whenever the initial factor draw is small, which inflates "
        "the null rejection rate to ~0.25",
        strict=True,
    )
    def test_spectest_experiment_initial_weights_size(self):
        rows = experiment_spectest(gammas=(0.0,), T_values=(200,), schemes=("initial",),
                                   n_reps=400, seed=2024, threads=1)
        assert 0.04 <= rows[0]["rejection_rate"] <= 0.12

    def test_threads_do_not_change_results(self):
        a = experiment_spectest(gammas=(0.0,), T_values=(60,), schemes=("characteristic",),
                                n_reps=6, seed=5, threads=1)
        b = experiment_spectest(gammas=(0.0,), T_values=(60,), schemes=("characteristic",),
                                n_reps=6, seed=5, threads=3)
        assert a == b
