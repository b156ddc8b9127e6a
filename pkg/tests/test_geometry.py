import math

import numpy as np
import pytest

from prlandscape import (
    ConfigurationError,
    DegenerateMomentError,
    EmpiricalMoments,
    NormalizationError,
    PolarPoint,
    classify_region,
    coverage_check,
    critical_radius,
    critical_relation_residual,
    empirical_moments,
    polar,
    population_critical_points,
    population_gradient,
    population_hessian,
    population_loss,
    population_moments,
    sample_ensemble,
)
from prlandscape.geometry import R1_SIGMA_BOUND


def test_sigma_bound_value():
    assert abs(R1_SIGMA_BOUND - 0.6050003337) < 1e-9


class TestPolar:
    def test_at_signal(self):
        x = np.array([1.0, 0.0])
        p = polar(x, x)
        assert p.R == 1.0 and p.sigma == 1.0 and p.dist == 0.0

    def test_at_negated_signal(self):
        x = np.array([1.0, 0.0])
        p = polar(-x, x)
        assert p.sigma == -1.0 and p.dist == 0.0

    def test_scaled_signal(self):
        x = np.array([1.0, 0.0])
        p = polar(x / math.sqrt(3.0), x)
        assert np.isclose(p.R, 1.0 / 3.0)
        assert np.isclose(p.sigma, 1.0)
        assert np.isclose(p.dist, 1.0 - 1.0 / math.sqrt(3.0))

    def test_origin_conventions(self):
        x = np.array([0.0, 1.0])
        p = polar(np.zeros(2), x)
        assert p.R == 0.0 and p.sigma == 0.0 and p.dist == 1.0
        assert not p.direction_defined and p.zhat is None

    def test_sign_fold_invariance(self, rng):
        x = rng.standard_normal(6)
        x /= np.linalg.norm(x)
        for _ in range(25):
            z = rng.standard_normal(6) * rng.uniform(0.1, 3.0)
            p, q = polar(z, x), polar(-z, x)
            assert np.isclose(p.R, q.R, rtol=1e-14)
            assert np.isclose(abs(p.sigma), abs(q.sigma), rtol=1e-12)
            assert np.isclose(p.dist, q.dist, rtol=1e-12)

    def test_distance_identity(self, rng):
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        for _ in range(25):
            z = rng.standard_normal(5)
            p = polar(z, x)
            if p.sigma >= 0:
                assert abs(p.dist**2 - (p.R + 1 - 2 * math.sqrt(p.R) * p.sigma)) <= 1e-10

    def test_from_coords_matches_polar(self):
        p = PolarPoint.from_coords(0.58, 1.0)
        x = np.array([1.0, 0.0])
        q = polar(p.z, x)
        assert np.isclose(p.sigma, q.sigma) and np.isclose(p.dist, q.dist)


class TestRegions:
    def test_low_sigma_band_only(self):
        p = PolarPoint.from_coords(0.0, 1.0)
        mem = classify_region(p, 0.05, 0.2)
        assert mem.in_R1 and not mem.in_R2 and not mem.in_R3

    def test_signal_in_r3_not_r2(self):
        p = PolarPoint.from_coords(1.0, 1.0)
        mem = classify_region(p, 0.05, 0.2)
        assert mem.in_R3 and not mem.in_R2 and not mem.in_R1

    def test_sigma_between_bands(self):
        # sigma = 0.58 at R = 1: outside the shrunk low-sigma band, dist ~ 0.917
        p = PolarPoint.from_coords(0.58, 1.0)
        assert np.isclose(p.dist, math.sqrt(2.0 - 2.0 * 0.58))
        mem = classify_region(p, 0.05, 0.2)
        assert mem.in_R2 and not mem.in_R1 and not mem.in_R3

    def test_membership_depends_only_on_folded_coordinates(self, rng):
        x = rng.standard_normal(4)
        x /= np.linalg.norm(x)
        z = rng.standard_normal(4)
        p = polar(z, x)
        q = PolarPoint.from_coords(-p.sigma, p.R)
        a = classify_region(p, 0.07, 0.21)
        b = classify_region(q, 0.07, 0.21)
        assert (a.in_R1, a.in_R2, a.in_R3) == (b.in_R1, b.in_R2, b.in_R3)

    def test_parameter_range_errors(self):
        p = PolarPoint.from_coords(0.0, 1.0)
        with pytest.raises(ConfigurationError):
            classify_region(p, 0.3, 0.2)
        with pytest.raises(ConfigurationError):
            classify_region(p, 0.05, 0.25)
        with pytest.raises(ConfigurationError):
            classify_region(p, -0.01, 0.2)


class TestCoverage:
    @staticmethod
    def _grid():
        sigmas = np.arange(-1.0, 1.0 + 1e-12, 0.01)
        radii = np.arange(0.01, 4.0 + 1e-12, 0.01)
        return [PolarPoint.from_coords(s, r) for s in sigmas for r in radii]

    def test_default_parameters_cover_grid(self):
        grid = self._grid()
        assert coverage_check(0.05, 0.2, grid) == []

    def test_widest_parameters_cover_grid(self):
        grid = self._grid()
        assert coverage_check(0.10, 0.2499, grid) == []

    def test_out_of_range_parameters(self):
        with pytest.raises(ConfigurationError):
            coverage_check(0.3, 0.2, [PolarPoint.from_coords(0.0, 1.0)])

    def test_empty_grid_rejected(self):
        with pytest.raises(ConfigurationError):
            coverage_check(0.05, 0.2, [])

    def test_single_point(self):
        assert coverage_check(0.05, 0.2, [PolarPoint.from_coords(1.0, 1.0)]) == []


class TestEmpiricalMoments:
    def test_all_five_coincide_along_signal(self, desk_ensemble):
        mom = empirical_moments(desk_ensemble, desk_ensemble.signal)
        assert mom.A == mom.B == mom.A1 == mom.C1 == mom.D

    def test_normalization_required(self, desk_ensemble):
        with pytest.raises(NormalizationError):
            empirical_moments(desk_ensemble, np.full(16, 0.5))

    def test_cauchy_schwarz_invariants(self, desk_ensemble, rng):
        e = desk_ensemble
        for _ in range(20):
            zhat = rng.standard_normal(e.n)
            zhat /= np.linalg.norm(zhat)
            mom = empirical_moments(e, zhat)
            assert mom.A >= 0 and mom.B >= 0 and mom.D >= 0
            assert abs(mom.A1) <= math.sqrt(mom.A * mom.B) * (1 + 1e-12)
            assert abs(mom.C1) <= math.sqrt(mom.B * mom.D) * (1 + 1e-12)

    def test_orthogonal_direction_large_m(self):
        e = sample_ensemble(16, 200_000, "random", seed=31)
        w = np.zeros(16)
        w[np.argmin(np.abs(e.signal))] = 1.0
        w -= (w @ e.signal) * e.signal
        w /= np.linalg.norm(w)
        mom = empirical_moments(e, w)
        assert abs(mom.A - 3.0) <= 0.1
        assert abs(mom.B - 1.0) <= 0.05
        assert abs(mom.A1) <= 0.05

    def test_oblique_direction_large_m(self):
        e = sample_ensemble(16, 200_000, "random", seed=32)
        w = np.zeros(16)
        w[np.argmin(np.abs(e.signal))] = 1.0
        w -= (w @ e.signal) * e.signal
        w /= np.linalg.norm(w)
        zhat = 0.6 * e.signal + math.sqrt(1 - 0.36) * w
        zhat /= np.linalg.norm(zhat)
        mom = empirical_moments(e, zhat)
        assert abs(mom.B - 1.72) <= 0.05


class TestCriticalRelations:
    def test_radius_at_signal_is_one(self, desk_ensemble):
        mom = empirical_moments(desk_ensemble, desk_ensemble.signal)
        assert critical_radius(mom) == 1.0

    def test_population_radius(self):
        for sigma in (0.0, 0.3, 0.6, 1.0):
            mom = population_moments(sigma)
            expected = (2 * sigma**2 + 1) / 3.0
            assert np.isclose(mom.B / mom.A, expected)
        assert np.isclose(math.sqrt(population_moments(0.0).B / 3.0), 1 / math.sqrt(3.0))

    def test_degenerate_radius(self):
        with pytest.raises(DegenerateMomentError):
            critical_radius(EmpiricalMoments(A=0.0, B=1.0, A1=0.0, C1=0.0, D=1.0))

    def test_residual_zero_at_signal(self, desk_ensemble):
        mom = empirical_moments(desk_ensemble, desk_ensemble.signal)
        assert critical_relation_residual(mom) == 0.0

    def test_population_residual_algebra(self):
        for sigma in np.linspace(-1, 1, 21):
            mom = population_moments(sigma)
            res = critical_relation_residual(
                EmpiricalMoments(mom.A, mom.B, mom.A1, mom.C1, mom.D)
            )
            assert np.isclose(res, 6.0 * sigma * (sigma**2 - 1.0), atol=1e-12)
        mom = population_moments(0.5)
        res = critical_relation_residual(EmpiricalMoments(mom.A, mom.B, mom.A1, mom.C1, mom.D))
        assert np.isclose(res, -2.25)


class TestPopulationOracle:
    def test_values_at_special_points(self, rng):
        x = rng.standard_normal(7)
        x /= np.linalg.norm(x)
        assert abs(population_loss(x, x)) <= 1e-12
        assert np.linalg.norm(population_gradient(x, x)) <= 1e-12
        assert population_loss(np.zeros(7), x) == 3.0
        assert np.all(population_gradient(np.zeros(7), x) == 0.0)

    def test_saddle_circle(self, rng):
        x = rng.standard_normal(5)
        x /= np.linalg.norm(x)
        w = rng.standard_normal(5)
        w -= (w @ x) * x
        w /= np.linalg.norm(w)
        z = w / math.sqrt(3.0)
        assert np.linalg.norm(population_gradient(z, x)) <= 1e-10
        assert np.isclose(population_loss(z, x), 8.0 / 3.0)

    def test_gradient_matches_finite_differences(self, rng):
        x = rng.standard_normal(6)
        x /= np.linalg.norm(x)
        h = 1e-6
        for _ in range(10):
            z = rng.standard_normal(6)
            g = population_gradient(z, x)
            g_fd = np.empty(6)
            for k in range(6):
                zp, zm = z.copy(), z.copy()
                zp[k] += h
                zm[k] -= h
                g_fd[k] = (population_loss(zp, x) - population_loss(zm, x)) / (2 * h)
            assert np.linalg.norm(g - g_fd) <= 1e-8 * (1 + np.linalg.norm(g))

    def test_hessian_matches_finite_differences(self, rng):
        x = rng.standard_normal(4)
        x /= np.linalg.norm(x)
        z = rng.standard_normal(4)
        h = 1e-6
        hess = population_hessian(z, x)
        for k in range(4):
            zp, zm = z.copy(), z.copy()
            zp[k] += h
            zm[k] -= h
            col = (population_gradient(zp, x) - population_gradient(zm, x)) / (2 * h)
            assert np.linalg.norm(hess[:, k] - col) <= 1e-6 * (1 + np.linalg.norm(col))

    def test_hessian_spectrum_at_signal(self, rng):
        # (12||x||^2 - 4) I + 24 x x^T - 8 x x^T: 24 along x, 8 orthogonal
        x = rng.standard_normal(6)
        x /= np.linalg.norm(x)
        vals = np.linalg.eigvalsh(population_hessian(x, x))
        assert np.isclose(vals[0], 8.0) and np.isclose(vals[-1], 24.0)

    def test_hessian_spectrum_at_origin(self, rng):
        x = rng.standard_normal(6)
        x /= np.linalg.norm(x)
        vals = np.linalg.eigvalsh(population_hessian(np.zeros(6), x))
        assert np.isclose(vals[-1], -4.0)  # strict maximum
        assert np.isclose(vals[0], -12.0)  # steepest along the signal

    def test_critical_point_catalog(self, rng):
        x = rng.standard_normal(8)
        x /= np.linalg.norm(x)
        cat = population_critical_points(x)
        assert np.isclose(cat.saddle_radius, 1 / math.sqrt(3.0))
        np.testing.assert_array_equal(cat.origin, np.zeros(8))
        for zm in cat.minima:
            assert abs(population_loss(zm, x)) <= 1e-12
        s = cat.saddle_point(rng.standard_normal(8))
        assert abs(s @ x) <= 1e-12
        p = polar(s, x)
        mem = classify_region(p, 0.05, 0.2)
        assert mem.in_R1  # saddles live in the low-sigma band
        assert np.linalg.norm(population_gradient(s, x)) <= 1e-10
        with pytest.raises(ConfigurationError):
            cat.saddle_point(x)


def test_moment_consistency_reduced(rng):
    # 10 trials x 4 sigmas; every moment deviation within 0.1 of the oracle
    for trial in range(10):
        e = sample_ensemble(16, 200_000, "random", seed=1000 + trial)
        w = rng.standard_normal(16)
        w -= (w @ e.signal) * e.signal
        w /= np.linalg.norm(w)
        for sigma in (0.0, 0.3, 0.6, 1.0):
            zhat = sigma * e.signal + math.sqrt(1 - sigma**2) * w
            zhat /= np.linalg.norm(zhat)
            mom = empirical_moments(e, zhat)
            pop = population_moments(sigma)
            devs = [
                abs(mom.A - pop.A), abs(mom.B - pop.B), abs(mom.A1 - pop.A1),
                abs(mom.C1 - pop.C1), abs(mom.D - pop.D),
            ]
            assert max(devs) <= 0.1
