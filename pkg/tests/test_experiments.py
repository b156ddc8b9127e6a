import math

import numpy as np
import pytest

from prlandscape import (
    ConfigurationError,
    MeasurementEnsemble,
    SolverConfig,
    TrialSeed,
    check_cross_moment,
    check_cubic_moment,
    check_quartic_lower,
    check_spectral_norm,
    empirical_moments,
    gradient_descent,
    negative_curvature_descent,
    phase_transition,
    population_critical_points,
    sample_ensemble,
    spectral_init,
    truncation_split,
)
from prlandscape.experiments import smooth_cutoff
from prlandscape.rng import generator


class TestConcentrationChecks:
    def test_spectral_one_dimensional_reduction(self):
        stat = check_spectral_norm(1, 500, 0.25, trials=3, seed=9)
        for t in range(3):
            rows = generator(TrialSeed(9, t)).standard_normal((500, 1))
            expected = abs(float(np.mean(rows**2)) - 1.0)
            assert np.isclose(stat.trial_values[t], expected, rtol=1e-12)

    def test_spectral_counts_are_exact(self):
        stat = check_spectral_norm(8, 16, 0.1, trials=10, seed=4)
        assert stat.failures == sum(stat.trial_fails)
        assert stat.empirical_failure_rate == stat.failures / stat.trials
        assert round(stat.empirical_failure_rate * stat.trials) == stat.failures

    def test_spectral_is_deterministic_and_parallel_safe(self):
        a = check_spectral_norm(8, 200, 0.25, trials=6, seed=3, jobs=1)
        b = check_spectral_norm(8, 200, 0.25, trials=6, seed=3, jobs=3)
        assert a.trial_values == b.trial_values

    def test_spectral_square_regime_always_fails(self):
        # m = n sits at the wide-spectrum edge: deviation scale is O(1)
        stat = check_spectral_norm(32, 32, 0.25, trials=5, seed=10)
        assert stat.empirical_failure_rate == 1.0
        assert stat.worst_value > 1.0

    def test_quartic_epsilon_three_never_fails(self):
        # the quartic mean is nonnegative, so the bound 3 - 3 = 0 cannot fail
        stat = check_quartic_lower(4, 8, 3.0, trials=10, n_dirs=20, seed=5)
        assert stat.failures == 0

    def test_quartic_large_m_value_near_three(self):
        stat = check_quartic_lower(4, 200_000, 0.5, trials=1, n_dirs=1, seed=6)
        assert 2.9 <= stat.worst_value <= 3.1

    def test_cross_moment_large_m(self):
        stat = check_cross_moment(16, 200_000, 0.1, trials=1, n_dirs=50, seed=7)
        assert stat.failures == 0
        assert stat.worst_value <= 0.1

    def test_cubic_moment_large_m(self):
        stat = check_cubic_moment(16, 200_000, 0.1, trials=1, n_dirs=50, seed=8)
        assert stat.failures == 0

    def test_trial_count_validation(self):
        with pytest.raises(ConfigurationError):
            check_spectral_norm(4, 8, 0.25, trials=0, seed=1)


class TestTruncationSplit:
    def test_partition_identity(self, desk_ensemble, rng):
        e = desk_ensemble
        for _ in range(5):
            zhat = rng.standard_normal(e.n)
            zhat /= np.linalg.norm(zhat)
            b = empirical_moments(e, zhat).B
            for level in (0.5, 1.0, 2.0, 5.0, 10.0):
                b1, b2, b3 = truncation_split(e, zhat, level)
                assert abs((b1 + b2 + b3) - b) <= 1e-10 * b

    def test_inactive_cutoff(self, desk_ensemble):
        e = desk_ensemble
        zhat = e.signal
        big = float(np.max(np.abs(e.rows))) * e.n  # above every row statistic
        b1, b2, b3 = truncation_split(e, zhat, big)
        assert b2 == 0.0 and b3 == 0.0
        assert np.isclose(b1, empirical_moments(e, zhat).B, rtol=1e-12)

    def test_saturating_cutoff(self, desk_ensemble):
        e = desk_ensemble
        zhat = e.signal
        s = np.abs(e.rows @ zhat)
        t = np.abs(e.rows @ e.signal)
        tiny = 0.5 * min(float(np.min(s)), float(np.min(t)))
        if tiny == 0.0:
            pytest.skip("degenerate row statistic")
        b1, b2, b3 = truncation_split(e, zhat, tiny)
        assert b1 == 0.0 and b2 == 0.0
        assert np.isclose(b3, empirical_moments(e, zhat).B, rtol=1e-12)

    def test_tail_mass_is_small_at_level_five(self, desk_ensemble, rng):
        e = desk_ensemble
        zhat = rng.standard_normal(e.n)
        zhat /= np.linalg.norm(zhat)
        b = empirical_moments(e, zhat).B
        b1, b2, b3 = truncation_split(e, zhat, 5.0)
        assert b2 + b3 <= 0.05 * b

    def test_cutoff_shape(self):
        assert smooth_cutoff(0.0) == 1.0
        assert smooth_cutoff(1.0) == 1.0
        assert smooth_cutoff(2.0) == 0.0
        assert smooth_cutoff(-2.5) == 0.0
        assert np.isclose(smooth_cutoff(1.5), 0.5)
        assert np.all(np.diff(smooth_cutoff(np.linspace(1, 2, 100))) <= 0)

    def test_invalid_level(self, desk_ensemble):
        with pytest.raises(ConfigurationError):
            truncation_split(desk_ensemble, desk_ensemble.signal, 0.0)


class TestGradientDescent:
    def test_signal_start_recovers_immediately(self, desk_ensemble):
        tr = gradient_descent(desk_ensemble, desk_ensemble.signal)
        assert tr.outcome == "recovered" and tr.iterations == 0

    def test_origin_start_stalls(self, desk_ensemble):
        tr = gradient_descent(desk_ensemble, np.zeros(16))
        assert tr.outcome == "stalled" and tr.iterations == 0

    def test_random_start_recovers(self):
        e = sample_ensemble(16, 640, "random", seed=91)
        z0 = generator(17).standard_normal(16)
        z0 /= np.linalg.norm(z0)
        tr = gradient_descent(e, z0)
        assert tr.outcome == "recovered"
        assert tr.final_dist <= 1e-5

    def test_trace_monotone_loss(self):
        e = sample_ensemble(8, 320, "random", seed=92)
        z0 = generator(18).standard_normal(8)
        tr = gradient_descent(e, z0, SolverConfig(record_every=1))
        losses = [row[1] for row in tr.iterates]
        for a, b in zip(losses, losses[1:]):
            assert b <= a + 1e-12

    def test_iterate_rows_shape(self):
        e = sample_ensemble(8, 320, "random", seed=93)
        tr = gradient_descent(e, np.full(8, 0.3))
        for it, f, gn, dist in tr.iterates:
            assert it >= 0 and f >= 0 and gn >= 0 and dist >= 0
        assert tr.iterates[-1][0] == tr.iterations


class TestNegativeCurvatureDescent:
    def test_escapes_origin(self):
        e = sample_ensemble(8, 320, "random", seed=94)
        tr = negative_curvature_descent(e, np.zeros(8))
        assert tr.outcome == "recovered"

    def test_escapes_population_saddle(self):
        e = sample_ensemble(2, 2000, "random", seed=95)
        cat = population_critical_points(e.signal)
        z0 = cat.saddle_point(generator(19).standard_normal(2))
        tr = negative_curvature_descent(e, z0)
        assert tr.outcome == "recovered"

    def test_signal_start_immediate(self, desk_ensemble):
        tr = negative_curvature_descent(desk_ensemble, desk_ensemble.signal)
        assert tr.outcome == "recovered" and tr.iterations == 0

    def test_step_rule_descriptor(self, desk_ensemble):
        tr = negative_curvature_descent(desk_ensemble, desk_ensemble.signal)
        assert "negative-curvature" in tr.step_rule


class TestSpectralInit:
    def test_one_dimensional(self):
        e = sample_ensemble(1, 50, "random", seed=96)
        z0 = spectral_init(e)
        assert np.isclose(abs(z0[0]), math.sqrt(float(np.mean(e.y_squared))))

    def test_alignment_at_large_m(self):
        e = sample_ensemble(16, 200_000, "random", seed=97)
        z0 = spectral_init(e)
        corr = abs(float(z0 @ e.signal)) / np.linalg.norm(z0)
        assert corr >= 0.99  # top eigenvector of I + 2 x x^T is +-x

    def test_baseline_quality(self):
        good = 0
        for t in range(50):
            e = sample_ensemble(16, 640, "random", TrialSeed(98, t))
            z0 = spectral_init(e)
            if abs(float(z0 @ e.signal)) / np.linalg.norm(z0) >= 0.5:
                good += 1
        assert good >= 45


class TestPhaseTransition:
    def test_cell_grid_shape(self):
        cells = phase_transition([4, 8], [1.0, 2.0, 4.0], trials=2, mode="solve", seed=3)
        assert len(cells) == 6
        for cell in cells:
            assert len(cell.trial_rows) == 2
            assert 0.0 <= cell.success_rate <= 1.0

    def test_sample_count_scalings(self):
        from prlandscape.experiments import transition_sample_count

        assert transition_sample_count(16, 10.0, "nlogn") == math.ceil(160 * math.log(16))
        assert transition_sample_count(16, 0.5, "n") == 8
        with pytest.raises(ConfigurationError):
            transition_sample_count(16, 1.0, "bogus")

    def test_undersampled_benign_rate_is_zero(self):
        # m = n/2 leaves the weighted Gram rank deficient: origin verdict fails
        cells = phase_transition([16], [0.5], trials=3, mode="benign", seed=4, scaling="n")
        assert cells[0].m == 8
        assert cells[0].benign_rate == 0.0

    def test_generous_sampling_recovers(self):
        cells = phase_transition([16], [40.0], trials=5, mode="solve", seed=5, scaling="n")
        assert cells[0].m == 640
        assert cells[0].success_rate >= 0.8

    def test_deterministic_across_jobs(self):
        a = phase_transition([8], [2.0, 4.0], trials=4, mode="solve", seed=6, jobs=1)
        b = phase_transition([8], [2.0, 4.0], trials=4, mode="solve", seed=6, jobs=4)
        assert [c.trial_rows for c in a] == [c.trial_rows for c in b]

    def test_success_trends_upward_in_m(self, rng):
        # bootstrap the per-cell outcomes and require the rank correlation
        # between m and success rate to stay positive at the 95% level
        cells = phase_transition(
            [8], [1.0, 2.0, 4.0, 8.0, 16.0, 24.0], trials=12,
            mode="solve", seed=7, scaling="n", jobs=4,
            solver_config=SolverConfig(max_iters=2000),
        )
        outcomes = [
            np.array([r.outcome == "recovered" for r in c.trial_rows], dtype=float)
            for c in cells
        ]
        ranks = np.arange(len(cells), dtype=float)

        def rho(rates):
            order = np.argsort(np.argsort(rates, kind="stable"), kind="stable")
            return float(np.corrcoef(ranks, order.astype(float))[0, 1])

        lows = []
        for _ in range(200):
            rates = [float(np.mean(rng.choice(o, size=o.size, replace=True))) for o in outcomes]
            lows.append(rho(rates))
        assert float(np.quantile(lows, 0.05)) > 0.0
        assert cells[-1].success_rate > cells[0].success_rate

    def test_validation(self):
        with pytest.raises(ConfigurationError):
            phase_transition([], [1.0], trials=1)
        with pytest.raises(ConfigurationError):
            phase_transition([4], [1.0], trials=1, mode="bogus")


def test_solver_handles_fake_flat_ensemble():
    # y == 0 instance: the origin is the global minimum, not the signal - the
    # solver must stop at the cap or stall rather than diverge
    e = MeasurementEnsemble.create(np.array([[1.0, 0.0]]), np.array([0.0, 1.0]))
    tr = gradient_descent(e, np.array([0.9, 0.0]), SolverConfig(max_iters=50))
    assert tr.outcome in ("stalled", "cap")
    assert all(math.isfinite(row[1]) for row in tr.iterates)
